use std::path::Path;

use super::CliError;
use crate::error::Error;
use crate::model::PowerProfile;

/// Parses a `slot,power_w` CSV. Slots must run `1..=K` without gaps and every
/// power must lie within `p_rated`.
pub fn parse_profile(
    text: &str,
    origin: &str,
    delta: f64,
    p_rated: f64,
) -> Result<PowerProfile, CliError> {
    let parse_err = |line: u64, message: String| CliError::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    match records.next() {
        Some(Ok(h)) if h.len() == 2 && &h[0] == "slot" && &h[1] == "power_w" => {}
        Some(Err(e)) => return Err(parse_err(1, e.to_string())),
        _ => return Err(parse_err(1, "expected header `slot,power_w`".into())),
    }

    let mut powers = Vec::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(parse_err(
                line,
                format!("expected 2 fields, got {}", record.len()),
            ));
        }
        let expected = powers.len() + 1;
        let slot: usize = record[0]
            .parse()
            .map_err(|_| parse_err(line, format!("slot `{}` is not an integer", &record[0])))?;
        if slot != expected {
            return Err(parse_err(
                line,
                format!("expected slot {expected}, got {slot}"),
            ));
        }
        let power: f64 = record[1].parse().map_err(|_| {
            parse_err(
                line,
                format!("slot {slot}: power `{}` is not a number", &record[1]),
            )
        })?;
        if !power.is_finite() {
            return Err(Error::NonFinitePower { slot, power }.into());
        }
        if power.abs() > p_rated {
            return Err(Error::PowerExceedsRated {
                slot,
                power,
                rated: p_rated,
            }
            .into());
        }
        powers.push(power);
    }
    Ok(PowerProfile::new(delta, powers)?)
}

pub fn load_profile(path: &Path, delta: f64, p_rated: f64) -> Result<PowerProfile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_profile(&text, &path.display().to_string(), delta, p_rated)
}
