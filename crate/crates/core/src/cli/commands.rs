use super::emit::{parse_trace_csv, Cell, Table};
use super::{CliError, Engine, RunConfig, EXIT_BOUND_VIOLATION, EXIT_OK};
use crate::approx::{bound_from_r_max, bound_report_for, simulate_approx, ApproxMode, BoundReport};
use crate::exact::simulate_exact;
use crate::model::{EnergyTrace, FlywheelParams, PowerProfile, SaturationMode};
use crate::oracle::{integrate_ode, integrate_physical, simulate_baseline};

const TRACE_COLUMNS: [&str; 5] = ["k", "t_s", "e_j", "case", "flag"];
const INITIAL_ROW_CASE: &str = "Initial";

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// One engine, one trace.
    Simulate,
    /// Exact model against the configured engine, with gaps and bounds.
    Compare,
    /// Gap-versus-bound report. With `approx_trace`, the approximate side is
    /// read from that CSV text instead of being simulated.
    Bound {
        check: bool,
        approx_trace: Option<(String, String)>,
    },
    /// Slot transition table.
    Classify,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub exit_code: i32,
    /// One-line human summary for stderr.
    pub summary: Option<String>,
}

pub fn simulate_with_engine(
    engine: Engine,
    profile: &PowerProfile,
    config: &RunConfig,
) -> Result<EnergyTrace, CliError> {
    let mode = if config.clamp {
        SaturationMode::Clamp
    } else {
        SaturationMode::Unconstrained
    };
    let params = &config.params;
    let trace = match engine {
        Engine::Exact => simulate_exact(profile, params, mode)?,
        Engine::ApproxFull => simulate_approx(profile, params, ApproxMode::Full, mode)?,
        Engine::ApproxTruncated => simulate_approx(profile, params, ApproxMode::Truncated, mode)?,
        Engine::Baseline => simulate_baseline(profile, params, mode)?,
        Engine::OdeOracle | Engine::PhysicalOracle if config.clamp => {
            return Err(CliError::Validation(format!(
                "--clamp is not supported by the {} engine",
                engine.as_str()
            )))
        }
        Engine::OdeOracle => integrate_ode(profile, params, &config.oracle)?,
        Engine::PhysicalOracle => integrate_physical(profile, params, &config.oracle)?,
    };
    Ok(trace)
}

fn trace_rows(trace: &EnergyTrace) -> Vec<Vec<Cell>> {
    trace
        .entries
        .iter()
        .enumerate()
        .map(|(k, entry)| {
            let (case, flag) = match k {
                0 => (INITIAL_ROW_CASE.to_string(), false),
                _ => (
                    trace.transitions[k - 1].case.to_string(),
                    trace.saturated[k - 1],
                ),
            };
            vec![
                Cell::Int(entry.slot),
                Cell::Num(entry.time),
                Cell::Num(entry.energy),
                Cell::Text(case),
                Cell::Flag(flag),
            ]
        })
        .collect()
}

fn bound_table(report: &BoundReport, params_delta: f64) -> Table {
    let mut table = Table::new(vec!["k", "t_s", "gap_j", "bound_j", "satisfied"]);
    table.rows = report
        .entries
        .iter()
        .map(|e| {
            vec![
                Cell::Int(e.slot),
                Cell::Num(e.slot as f64 * params_delta),
                Cell::Num(e.gap),
                Cell::Num(e.bound),
                Cell::Flag(e.satisfied),
            ]
        })
        .collect();
    let mode = match report.mode {
        ApproxMode::Full => "full",
        ApproxMode::Truncated => "truncated",
    };
    table.summary = vec![
        ("mode", Cell::Text(mode.into())),
        ("r_max_w", Cell::Num(report.r_max)),
        ("asymptotic_bound_j", Cell::Num(report.asymptotic_bound)),
        ("max_gap_j", Cell::Num(report.max_gap())),
        ("all_satisfied", Cell::Flag(report.all_satisfied())),
    ];
    table
}

/// Turns `(k, e_j)` rows read from a file into a trace aligned with `profile`.
fn external_trace(
    rows: &[(usize, f64)],
    profile: &PowerProfile,
    params: &FlywheelParams,
    origin: &str,
) -> Result<EnergyTrace, CliError> {
    if rows.len() != profile.len() + 1 {
        return Err(CliError::Validation(format!(
            "{origin}: {} rows for a profile of {} slots (expected {})",
            rows.len(),
            profile.len(),
            profile.len() + 1
        )));
    }
    if let Some((i, &(k, _))) = rows.iter().enumerate().find(|(i, (k, _))| i != k) {
        return Err(CliError::Validation(format!(
            "{origin}: row {} has k = {k}, expected {i}",
            i + 1
        )));
    }
    let mut trace = EnergyTrace::with_capacity(rows[0].1, profile.len());
    for (&(_, e), (p_in, p_prev)) in rows[1..].iter().zip(profile.slot_pairs(params.p_prev_init)) {
        let tr = params.classify(p_in, p_prev);
        trace.push_slot(
            params.delta,
            params.e_cap,
            e,
            tr,
            SaturationMode::Unconstrained,
        );
    }
    Ok(trace)
}

pub fn run(
    command: &Command,
    config: &RunConfig,
    profile: &PowerProfile,
) -> Result<Outcome, CliError> {
    let params = config.params.validate()?;
    profile.validate_against(&params)?;
    let config = RunConfig { params, ..*config };

    match command {
        Command::Simulate => {
            let trace = simulate_with_engine(config.engine, profile, &config)?;
            let mut table = Table::new(TRACE_COLUMNS.to_vec());
            table.rows = trace_rows(&trace);
            table.summary = vec![("engine", Cell::Text(config.engine.as_str().into()))];
            Ok(Outcome {
                table,
                exit_code: EXIT_OK,
                summary: None,
            })
        }
        Command::Compare => {
            let (reference, trace) = rayon::join(
                || simulate_with_engine(Engine::Exact, profile, &config),
                || simulate_with_engine(config.engine, profile, &config),
            );
            let (reference, trace) = (reference?, trace?);
            let mut columns = TRACE_COLUMNS.to_vec();
            columns.extend(["e_ref_j", "gap_j", "bound_j"]);
            let mut table = Table::new(columns);
            let mut running_max = params.p_prev_init.abs();
            table.rows = trace_rows(&trace);
            for (k, row) in table.rows.iter_mut().enumerate() {
                if k > 0 {
                    running_max = running_max.max(profile.powers[k - 1].abs());
                }
                let e_ref = reference.entries[k].energy;
                let gap = (trace.entries[k].energy - e_ref).abs();
                let bound =
                    bound_from_r_max(k, params.delta, params.t_loss, params.e_d * running_max);
                row.extend([Cell::Num(e_ref), Cell::Num(gap), Cell::Num(bound)]);
            }
            table.summary = vec![
                ("engine", Cell::Text(config.engine.as_str().into())),
                ("reference", Cell::Text(Engine::Exact.as_str().into())),
            ];
            Ok(Outcome {
                table,
                exit_code: EXIT_OK,
                summary: None,
            })
        }
        Command::Bound {
            check,
            approx_trace,
        } => {
            let mode = config.engine.approx_mode().ok_or_else(|| {
                CliError::Validation(format!(
                    "bound needs an approximate engine, got {}",
                    config.engine.as_str()
                ))
            })?;
            let unconstrained = RunConfig {
                clamp: false,
                ..config
            };
            let exact = simulate_with_engine(Engine::Exact, profile, &unconstrained)?;
            let approx = match approx_trace {
                Some((origin, text)) => {
                    let rows = parse_trace_csv(text, origin)?;
                    external_trace(&rows, profile, &params, origin)?
                }
                None => simulate_with_engine(config.engine, profile, &unconstrained)?,
            };
            let report = bound_report_for(&exact, &approx, profile, &params, mode)?;
            let violations = report.violations().count();
            let exit_code = if *check && violations > 0 {
                EXIT_BOUND_VIOLATION
            } else {
                EXIT_OK
            };
            let summary = format!(
                "bound: {} slots, {violations} violations, max gap {:.6e} J, asymptotic bound {:.6e} J",
                report.entries.len(),
                report.max_gap(),
                report.asymptotic_bound
            );
            Ok(Outcome {
                table: bound_table(&report, params.delta),
                exit_code,
                summary: Some(summary),
            })
        }
        Command::Classify => {
            let mut table = Table::new(vec![
                "k",
                "p_in_w",
                "p_prev_w",
                "case",
                "eta_in",
                "eta_prev",
                "eta_eff",
                "t_change_s",
            ]);
            table.rows = profile
                .slot_pairs(params.p_prev_init)
                .enumerate()
                .map(|(i, (p_in, p_prev))| {
                    let tr = params.classify(p_in, p_prev);
                    vec![
                        Cell::Int(i + 1),
                        Cell::Num(p_in),
                        Cell::Num(p_prev),
                        Cell::Text(tr.case.to_string()),
                        Cell::Num(tr.eta_in),
                        Cell::Num(tr.eta_prev),
                        Cell::Num(tr.eta_eff),
                        tr.t_change.map_or(Cell::Empty, Cell::Num),
                    ]
                })
                .collect();
            Ok(Outcome {
                table,
                exit_code: EXIT_OK,
                summary: None,
            })
        }
    }
}
