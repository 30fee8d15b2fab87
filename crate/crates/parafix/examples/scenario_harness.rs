//! Driving experiments from JSON scenario files with the same machinery
//! the `parafix` binary uses: load, validate, run, inspect the report.
//!
//! ```text
//! cargo run --example scenario_harness
//! ```

use std::error::Error;
use std::path::Path;

use parafix::scenario::{self, RunOptions};

fn main() -> Result<(), Box<dyn Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/heterogeneous.json");
    let config = scenario::load_config(&path)?;
    println!(
        "loaded {:?}: m={}, n={}, engine={:?}, tol={}",
        path.file_name().unwrap(),
        config.m,
        config.n,
        config.engine,
        config.tol
    );

    let out_dir = std::env::temp_dir().join("parafix-scenario-example");
    let opts = RunOptions {
        out_dir: Some(out_dir.clone()),
        seed: Some(424242),
        quiet: true,
        skip_outputs: false,
    };
    let outcome = scenario::run_scenario(&config, &opts)?;
    println!(
        "converged: {} after {} iterations (final disagreement {:.2e})",
        outcome.result.converged,
        outcome.result.iterations_used,
        outcome.result.final_disagreement
    );
    for check in &outcome.result.checks {
        println!("  check {:24} passed={}", check.name, check.passed);
    }
    println!(
        "bundle written to {} (trace.csv, result.json, config.json)",
        out_dir.display()
    );

    // Sweeping the same scenario across seeds, one deterministic run each.
    let summary = scenario::sweep_scenario(&config, 1..=8, &RunOptions::default())?;
    println!("sweep over seeds 1..=8:");
    print!("{}", scenario::sweep_to_csv(&summary.rows));
    Ok(())
}
