//! Command-line interface for three-class ROC empirical-likelihood
//! inference: point estimates, confidence intervals and regions, and the
//! Monte Carlo coverage harness.

mod dataset;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use roc3el::bootstrap::RngSeed;
use roc3el::harness::{render_table, run_coverage, ExperimentPlan, TableFormat};
use roc3el::regions::{
    tcf23_region2d, tcf2_interval, tcf_region3d, vus_interval, IntervalOutcome, DEFAULT_GRID_2D,
    DEFAULT_GRID_3D,
};
use roc3el::scenarios::{builtin_scenarios, scenarios_from_json, scenarios_to_json};
use roc3el::vus::{vus, vus_with_ties};
use roc3el::{EcdfMode, ThresholdPair};

use dataset::load_dataset;
use output::{envelope, render_error, CliError, ErrorCategory};

#[derive(Parser)]
#[command(
    name = "roc3el",
    version,
    about = "Empirical-likelihood intervals and regions for three-class ROC analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Point estimate of the volume under the ROC surface
    Vus {
        #[arg(long)]
        input: PathBuf,
        /// Use the tie-aware estimator (1/2 and 1/6 weights)
        #[arg(long)]
        ties: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bootstrap-calibrated confidence interval for the VUS
    CiVus {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Bootstrap replicates for the scale calibration
        #[arg(long, default_value_t = 200)]
        b: usize,
        /// RNG seed (integer), or "auto" to draw one and echo it
        #[arg(long)]
        seed: String,
        #[arg(long)]
        ties: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bootstrap-calibrated confidence interval for TCF2 at fixed theta1, theta3
    CiTcf2 {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        theta1: f64,
        #[arg(long)]
        theta3: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 200)]
        b: usize,
        #[arg(long)]
        seed: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Chi-square(3) confidence region for the TCF triple at fixed thresholds
    Region3d {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        t2: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_GRID_3D)]
        grid_n: usize,
        /// Evaluate with the continuous ECDFs instead of the step versions
        #[arg(long)]
        smoothed: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mixture-calibrated confidence region for (TCF2, TCF3) at fixed theta1 and t2
    Region2d {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        theta1: f64,
        #[arg(long)]
        t2: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 200)]
        b: usize,
        #[arg(long)]
        seed: String,
        #[arg(long, default_value_t = DEFAULT_GRID_2D)]
        grid_n: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a coverage experiment plan (JSON) over built-in or custom scenarios
    Simulate {
        #[arg(long)]
        plan: PathBuf,
        /// JSON file with custom scenario definitions
        #[arg(long)]
        scenario_file: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the built-in scenario catalog as JSON
    Scenarios {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", render_error(&e));
            ExitCode::from(e.category.exit_code() as u8)
        }
    }
}

fn parse_seed(seed: &str) -> Result<RngSeed, CliError> {
    if seed.eq_ignore_ascii_case("auto") {
        let drawn = seed_from_clock();
        eprintln!("seed auto: using {drawn}");
        return Ok(RngSeed(drawn));
    }
    seed.parse::<u64>().map(RngSeed).map_err(|_| {
        CliError::validation(format!(
            "seed must be a 64-bit integer or \"auto\", got {seed:?}"
        ))
    })
}

fn seed_from_clock() -> u64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    // nanosecond clock through a splitmix64 step; the drawn seed is always
    // echoed so the run stays reproducible
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0x5EED);
    let mut z = nanos.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError {
            category: ErrorCategory::Input,
            message: format!("cannot write {}: {e}", path.display()),
            context: None,
        }),
        None => {
            use std::io::Write;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            match lock.write_all(text.as_bytes()).and_then(|_| lock.flush()) {
                Ok(()) => Ok(()),
                // a closed downstream pipe (e.g. `... | head`) is not an error
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                Err(e) => Err(CliError {
                    category: ErrorCategory::Input,
                    message: format!("cannot write to stdout: {e}"),
                    context: None,
                }),
            }
        }
    }
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Vus {
            input,
            ties,
            format,
            out,
        } => {
            let (x, summary) = load_dataset(&input)?;
            let estimate = if ties { vus_with_ties(&x) } else { vus(&x) };
            #[derive(Serialize)]
            struct Config {
                input: String,
                ties: bool,
            }
            #[derive(Serialize)]
            struct VusResult {
                estimate: f64,
            }
            let config = Config {
                input: input.display().to_string(),
                ties,
            };
            let text = match format {
                Format::Json => envelope("vus", &config, Some(&summary), &VusResult { estimate }),
                Format::Text => format!("vus {estimate:?}\n"),
                Format::Csv => return Err(CliError::validation("vus supports json or text")),
            };
            write_output(out.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CiVus {
            input,
            alpha,
            b,
            seed,
            ties,
            format,
            out,
        } => {
            let seed = parse_seed(&seed)?;
            let (x, summary) = load_dataset(&input)?;
            let result = vus_interval(&x, alpha, b, seed, ties).map_err(CliError::from)?;
            #[derive(Serialize)]
            struct Config {
                input: String,
                alpha: f64,
                b: usize,
                seed: u64,
                ties: bool,
            }
            let config = Config {
                input: input.display().to_string(),
                alpha,
                b,
                seed: seed.0,
                ties,
            };
            let text = match format {
                Format::Json => envelope("ci-vus", &config, Some(&summary), &result),
                Format::Text => {
                    let ci = &result.interval;
                    format!(
                        "vus {:?}\nlevel {:?}\ninterval ({:?}, {:?})\nw_hat {:?}\nseed {}\n",
                        ci.point_estimate, ci.level, ci.lower, ci.upper, ci.w_hat, seed.0
                    )
                }
                Format::Csv => return Err(CliError::validation("ci-vus supports json or text")),
            };
            write_output(out.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CiTcf2 {
            input,
            theta1,
            theta3,
            alpha,
            b,
            seed,
            format,
            out,
        } => {
            let seed = parse_seed(&seed)?;
            let (x, summary) = load_dataset(&input)?;
            let result =
                tcf2_interval(&x, theta1, theta3, alpha, b, seed).map_err(CliError::from)?;
            #[derive(Serialize)]
            struct Config {
                input: String,
                theta1: f64,
                theta3: f64,
                alpha: f64,
                b: usize,
                seed: u64,
            }
            let config = Config {
                input: input.display().to_string(),
                theta1,
                theta3,
                alpha,
                b,
                seed: seed.0,
            };
            let empty = matches!(result.outcome, IntervalOutcome::Empty { .. });
            let text = match format {
                Format::Json => envelope("ci-tcf2", &config, Some(&summary), &result),
                Format::Text => match &result.outcome {
                    IntervalOutcome::Interval(ci) => format!(
                        "tcf2 {:?}\nlevel {:?}\ninterval ({:?}, {:?})\nw_hat {:?}\nseed {}\n",
                        ci.point_estimate, ci.level, ci.lower, ci.upper, ci.w_hat, seed.0
                    ),
                    IntervalOutcome::Empty { reason, .. } => {
                        format!("empty interval: {reason:?}\nseed {}\n", seed.0)
                    }
                },
                Format::Csv => return Err(CliError::validation("ci-tcf2 supports json or text")),
            };
            write_output(out.as_ref(), &text)?;
            if empty {
                // the result is still written; the exit code flags the outcome
                eprintln!(
                    "{}",
                    render_error(&CliError {
                        category: ErrorCategory::EmptyInterval,
                        message: format!(
                            "no theta2 satisfies the level-{} constraint at theta1 = {theta1}, \
                             theta3 = {theta3}",
                            1.0 - alpha
                        ),
                        context: None,
                    })
                );
                return Ok(ExitCode::from(
                    ErrorCategory::EmptyInterval.exit_code() as u8
                ));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Region3d {
            input,
            t1,
            t2,
            alpha,
            grid_n,
            smoothed,
            format,
            out,
        } => {
            let (x, summary) = load_dataset(&input)?;
            let t = ThresholdPair::new(t1, t2).map_err(CliError::from)?;
            let mode = if smoothed {
                EcdfMode::Smoothed
            } else {
                EcdfMode::Step
            };
            let region = tcf_region3d(&x, &t, alpha, grid_n, mode).map_err(CliError::from)?;
            #[derive(Serialize)]
            struct Config {
                input: String,
                t1: f64,
                t2: f64,
                alpha: f64,
                grid_n: usize,
                smoothed: bool,
            }
            let config = Config {
                input: input.display().to_string(),
                t1,
                t2,
                alpha,
                grid_n,
                smoothed,
            };
            let text = match format {
                Format::Csv => region.to_csv(),
                Format::Json => envelope("region3d", &config, Some(&summary), &region),
                Format::Text => return Err(CliError::validation("region3d supports csv or json")),
            };
            write_output(out.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Region2d {
            input,
            theta1,
            t2,
            alpha,
            b,
            seed,
            grid_n,
            format,
            out,
        } => {
            let seed = parse_seed(&seed)?;
            let (x, summary) = load_dataset(&input)?;
            let region =
                tcf23_region2d(&x, theta1, t2, alpha, b, grid_n, seed).map_err(CliError::from)?;
            #[derive(Serialize)]
            struct Config {
                input: String,
                theta1: f64,
                t2: f64,
                alpha: f64,
                b: usize,
                grid_n: usize,
                seed: u64,
            }
            let config = Config {
                input: input.display().to_string(),
                theta1,
                t2,
                alpha,
                b,
                grid_n,
                seed: seed.0,
            };
            let text = match format {
                Format::Csv => region.to_csv(),
                Format::Json => envelope("region2d", &config, Some(&summary), &region),
                Format::Text => return Err(CliError::validation("region2d supports csv or json")),
            };
            write_output(out.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            plan,
            scenario_file,
            format,
            out,
        } => {
            let plan_text = fs::read_to_string(&plan).map_err(|e| CliError {
                category: ErrorCategory::Input,
                message: format!("cannot read {}: {e}", plan.display()),
                context: None,
            })?;
            let plan: ExperimentPlan = serde_json::from_str(&plan_text)
                .map_err(|e| CliError::validation(format!("plan: {e}")))?;
            let scenarios = match scenario_file {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| CliError {
                        category: ErrorCategory::Input,
                        message: format!("cannot read {}: {e}", path.display()),
                        context: None,
                    })?;
                    scenarios_from_json(&text).map_err(CliError::from)?
                }
                None => builtin_scenarios(),
            };
            let result = run_coverage(&plan, &scenarios).map_err(CliError::from)?;
            let table_format = match format {
                Format::Text => TableFormat::Text,
                Format::Csv => TableFormat::Csv,
                Format::Json => TableFormat::Json,
            };
            let text = render_table(std::slice::from_ref(&result), table_format)
                .map_err(CliError::from)?;
            write_output(out.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Scenarios { out } => {
            let mut text = scenarios_to_json(&builtin_scenarios());
            text.push('\n');
            write_output(out.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_parsing() {
        assert_eq!(parse_seed("7").unwrap(), RngSeed(7));
        assert!(parse_seed("x").is_err());
        assert!(parse_seed("auto").is_ok());
    }
}
