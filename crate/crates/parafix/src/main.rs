//! Thin CLI over [`parafix::scenario`]. Exit codes: 0 success, 1 validation
//! error, 2 run failure, 3 failed diagnostics check.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use parafix::scenario::{
    self, HarnessError, MapDescriptor, RunOptions, ScenarioConfig,
};

#[derive(Parser)]
#[command(
    name = "parafix",
    version,
    about = "Distributed common-fixed-point experiments: paracontracting maps, \
             neighbor averaging, time-varying directed graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario and write its output bundle (trace.csv,
    /// result.json, config.json)
    Run {
        config: PathBuf,
        /// Output directory (default: the config's out_dir, then ./out)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress non-essential output
        #[arg(long)]
        quiet: bool,
        /// Master seed override (re-seeds graph and x0 generators)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Load and fully validate a scenario config without running anything
    Validate { config: PathBuf },
    /// Run the diagnostics suite only (no full experiment); one JSON line
    /// per check report
    Check {
        config: PathBuf,
        /// Suppress the summary line
        #[arg(long)]
        quiet: bool,
        /// Master seed override
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the map-descriptor catalog
    ListMaps,
    /// Repeat a scenario over a seed range and emit a summary CSV
    Sweep {
        config: PathBuf,
        /// Seed range, Rust style: `a..b` (exclusive) or `a..=b` (inclusive)
        #[arg(long)]
        seeds: String,
        /// Directory for sweep.csv
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress per-seed output
        #[arg(long)]
        quiet: bool,
    },
}

const EXIT_OK: u8 = 0;
const EXIT_VALIDATION: u8 = 1;
const EXIT_RUN_FAILURE: u8 = 2;
const EXIT_CHECK_FAILURE: u8 = 3;

fn main() -> ExitCode {
    ExitCode::from(dispatch(Cli::parse()))
}

fn load(path: &Path) -> Result<ScenarioConfig, u8> {
    scenario::load_config(path).map_err(|e| {
        eprintln!("validation error: {e}");
        EXIT_VALIDATION
    })
}

fn classify(err: &HarnessError) -> u8 {
    match err {
        HarnessError::Config(_) => EXIT_VALIDATION,
        HarnessError::UnverifiedMapRejected { .. } => EXIT_CHECK_FAILURE,
        _ => EXIT_RUN_FAILURE,
    }
}

fn dispatch(cli: Cli) -> u8 {
    match cli.command {
        Command::Run {
            config,
            out,
            quiet,
            seed,
        } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let opts = RunOptions {
                out_dir: out,
                seed,
                quiet,
                skip_outputs: false,
            };
            match scenario::run_scenario(&cfg, &opts) {
                Ok(outcome) => {
                    if !quiet {
                        for check in &outcome.result.checks {
                            println!(
                                "{}",
                                serde_json::to_string(check).expect("reports serialize")
                            );
                        }
                        println!(
                            "converged: {} after {} iterations (disagreement {:.3e}, residual {:.3e})",
                            outcome.result.converged,
                            outcome.result.iterations_used,
                            outcome.result.final_disagreement,
                            outcome.result.final_residual,
                        );
                        if let Some(verdict) = &outcome.result.equivalence {
                            println!("engine equivalence: {verdict}");
                        }
                        if let Some(dir) = &outcome.out_dir {
                            println!("wrote {}", dir.display());
                        }
                    }
                    if outcome.all_checks_passed {
                        EXIT_OK
                    } else {
                        eprintln!("one or more diagnostics checks failed");
                        EXIT_CHECK_FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("{e}");
                    classify(&e)
                }
            }
        }
        Command::Validate { config } => match load(&config) {
            Ok(_) => {
                println!("ok: {}", config.display());
                EXIT_OK
            }
            Err(code) => code,
        },
        Command::Check {
            config,
            quiet,
            seed,
        } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let opts = RunOptions {
                out_dir: None,
                seed,
                quiet,
                skip_outputs: true,
            };
            match scenario::check_scenario(&cfg, &opts) {
                Ok(reports) => {
                    for report in &reports {
                        println!("{}", serde_json::to_string(report).expect("reports serialize"));
                    }
                    let failed = reports.iter().filter(|r| !r.passed).count();
                    if !quiet {
                        println!("{} checks, {} failed", reports.len(), failed);
                    }
                    if failed == 0 {
                        EXIT_OK
                    } else {
                        EXIT_CHECK_FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("{e}");
                    classify(&e)
                }
            }
        }
        Command::ListMaps => {
            for [name, params, note] in MapDescriptor::catalog() {
                println!("{name:<20} {params:<40} {note}");
            }
            EXIT_OK
        }
        Command::Sweep {
            config,
            seeds,
            out,
            quiet,
        } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let seed_list = match parse_seed_range(&seeds) {
                Ok(list) => list,
                Err(reason) => {
                    eprintln!("invalid --seeds: {reason}");
                    return EXIT_VALIDATION;
                }
            };
            let opts = RunOptions {
                out_dir: out,
                seed: None,
                quiet,
                skip_outputs: true,
            };
            match scenario::sweep_scenario(&cfg, seed_list, &opts) {
                Ok(summary) => {
                    if !quiet {
                        print!("{}", scenario::sweep_to_csv(&summary.rows));
                        let converged = summary.rows.iter().filter(|r| r.converged).count();
                        println!("# {} of {} seeds converged", converged, summary.rows.len());
                        if let Some(path) = &summary.csv_path {
                            println!("# wrote {}", path.display());
                        }
                    }
                    if summary.all_checks_passed {
                        EXIT_OK
                    } else {
                        eprintln!("one or more diagnostics checks failed during the sweep");
                        EXIT_CHECK_FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("{e}");
                    classify(&e)
                }
            }
        }
    }
}

/// `a..b` (exclusive) or `a..=b` (inclusive), capped at 100000 seeds.
fn parse_seed_range(spec: &str) -> Result<Vec<u64>, String> {
    let (start_str, end_str, inclusive) = if let Some((a, b)) = spec.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = spec.split_once("..") {
        (a, b, false)
    } else {
        return Err("expected a..b or a..=b".into());
    };
    let start: u64 = start_str
        .trim()
        .parse()
        .map_err(|_| format!("bad start `{start_str}`"))?;
    let end: u64 = end_str
        .trim()
        .parse()
        .map_err(|_| format!("bad end `{end_str}`"))?;
    let end_exclusive = if inclusive { end.saturating_add(1) } else { end };
    if end_exclusive <= start {
        return Err("range is empty".into());
    }
    if end_exclusive - start > 100_000 {
        return Err("range too large (max 100000 seeds)".into());
    }
    Ok((start..end_exclusive).collect())
}
