use std::collections::BTreeMap;

use super::CliError;
use crate::model::FlywheelParams;

/// Recognised keys of the `key=value` configuration file.
pub const CONFIG_KEYS: [&str; 9] = [
    "t_loss_s",
    "t_cont_s",
    "e_c",
    "e_d",
    "e_init_j",
    "e_cap_j",
    "p_rated_w",
    "delta_s",
    "p_prev_init_w",
];

pub type ConfigValues = BTreeMap<&'static str, f64>;

/// Merges `key=value` lines into `values`. Blank lines and `#` comments are
/// skipped; later lines win.
pub fn apply_config_text(
    values: &mut ConfigValues,
    text: &str,
    origin: &str,
) -> Result<(), CliError> {
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| CliError::Parse {
            path: origin.to_string(),
            line: line_no,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected key=value, got `{line}`")))?;
        let key = key.trim();
        let key = CONFIG_KEYS
            .iter()
            .copied()
            .find(|k| *k == key)
            .ok_or_else(|| parse_err(format!("unknown key `{key}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("`{}` is not a number", value.trim())))?;
        values.insert(key, value);
    }
    Ok(())
}

/// Builds validated parameters; `p_prev_init_w` defaults to 0.
pub fn params_from_values(values: &ConfigValues) -> Result<FlywheelParams, CliError> {
    let get = |key: &str| {
        values
            .get(key)
            .copied()
            .ok_or_else(|| CliError::Validation(format!("missing parameter `{key}`")))
    };
    let params = FlywheelParams {
        t_loss: get("t_loss_s")?,
        t_cont: get("t_cont_s")?,
        e_c: get("e_c")?,
        e_d: get("e_d")?,
        e_init: get("e_init_j")?,
        e_cap: get("e_cap_j")?,
        p_rated: get("p_rated_w")?,
        delta: get("delta_s")?,
        p_prev_init: values.get("p_prev_init_w").copied().unwrap_or(0.0),
    };
    Ok(params.validate()?)
}
