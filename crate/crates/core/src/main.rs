use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flywheel_soc::cli::{
    apply_config_text, load_profile, params_from_values, run, CliError, Command, ConfigValues,
    Engine, OutputFormat, RunConfig, EXIT_OK, EXIT_VALIDATION,
};
use flywheel_soc::OracleConfig;

/// Flywheel state-of-charge simulator.
#[derive(Debug, Parser)]
#[command(name = "flywheel-soc", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Simulate one engine and emit its trace.
    Simulate(Common),
    /// Emit an engine's trace next to the exact one, with gap and bound columns.
    Compare(Common),
    /// Report per-slot gaps between the exact and an approximate trace.
    Bound {
        #[command(flatten)]
        common: Common,
        /// Exit with status 3 if any slot exceeds its bound.
        #[arg(long)]
        check: bool,
        /// Check this CSV trace (columns `k` and `e_j`) instead of simulating.
        #[arg(long, value_name = "FILE")]
        approx_trace: Option<PathBuf>,
    },
    /// Tabulate the transition class of every slot.
    Classify(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Power profile CSV with header `slot,power_w`.
    #[arg(long, value_name = "FILE")]
    profile: PathBuf,
    /// Parameter file of `key=value` lines.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    engine: Option<Engine>,
    /// Clamp energy into [0, e_cap] after each slot.
    #[arg(long)]
    clamp: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// RK4 steps per slot for the oracle engines.
    #[arg(long)]
    substeps: Option<usize>,
    /// Relative tolerance for quadrature.
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long, short, value_name = "FILE")]
    output: Option<PathBuf>,

    #[arg(long = "t-loss-s", value_name = "S")]
    t_loss_s: Option<f64>,
    #[arg(long = "t-cont-s", value_name = "S")]
    t_cont_s: Option<f64>,
    #[arg(long = "e-c")]
    e_c: Option<f64>,
    #[arg(long = "e-d")]
    e_d: Option<f64>,
    #[arg(long = "e-init-j", value_name = "J")]
    e_init_j: Option<f64>,
    #[arg(long = "e-cap-j", value_name = "J")]
    e_cap_j: Option<f64>,
    #[arg(long = "p-rated-w", value_name = "W")]
    p_rated_w: Option<f64>,
    #[arg(long = "delta-s", value_name = "S")]
    delta_s: Option<f64>,
    #[arg(long = "p-prev-init-w", value_name = "W")]
    p_prev_init_w: Option<f64>,
}

impl Common {
    fn run_config(&self, default_engine: Engine) -> Result<RunConfig, CliError> {
        let mut values = ConfigValues::new();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.clone(),
                source: e,
            })?;
            apply_config_text(&mut values, &text, &path.display().to_string())?;
        }
        let overrides = [
            ("t_loss_s", self.t_loss_s),
            ("t_cont_s", self.t_cont_s),
            ("e_c", self.e_c),
            ("e_d", self.e_d),
            ("e_init_j", self.e_init_j),
            ("e_cap_j", self.e_cap_j),
            ("p_rated_w", self.p_rated_w),
            ("delta_s", self.delta_s),
            ("p_prev_init_w", self.p_prev_init_w),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                values.insert(key, v);
            }
        }
        let params = params_from_values(&values)?;
        let mut oracle = OracleConfig::default();
        if let Some(n) = self.substeps {
            oracle.substeps_per_slot = n;
        }
        if let Some(tol) = self.quad_tol {
            oracle.quad_tol = tol;
        }
        Ok(RunConfig {
            params,
            engine: self.engine.unwrap_or(default_engine),
            clamp: self.clamp,
            output_format: self.format,
            oracle: oracle.validate()?,
        })
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source: e,
            }),
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let (command, common, default_engine) = match cli.command {
        Sub::Simulate(c) => (Command::Simulate, c, Engine::Exact),
        Sub::Compare(c) => (Command::Compare, c, Engine::ApproxTruncated),
        Sub::Classify(c) => (Command::Classify, c, Engine::Exact),
        Sub::Bound {
            common,
            check,
            approx_trace,
        } => {
            let approx_trace = match approx_trace {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    Some((path.display().to_string(), text))
                }
                None => None,
            };
            (
                Command::Bound {
                    check,
                    approx_trace,
                },
                common,
                Engine::ApproxTruncated,
            )
        }
    };
    let config = common.run_config(default_engine)?;
    let profile = load_profile(&common.profile, config.params.delta, config.params.p_rated)?;
    let outcome = run(&command, &config, &profile)?;
    write_output(
        common.output.as_deref(),
        &outcome.table.render(config.output_format)?,
    )?;
    if let Some(summary) = outcome.summary {
        eprintln!("{summary}");
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
