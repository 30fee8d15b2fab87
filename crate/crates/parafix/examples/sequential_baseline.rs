//! The single-state baseline: one iterate cycles through the maps,
//! `x(t) = M_sigma(t)(x(t-1))`, and converges to a common fixed point as
//! long as every map index recurs forever. Compares round-robin with a
//! seeded random schedule on the same alternating-projection problem.
//!
//! ```text
//! cargo run --example sequential_baseline
//! ```

use std::error::Error;
use std::sync::Arc;

use parafix::engine::{run_sequential, SequentialSchedule};
use parafix::linalg::{NormOrder, VecN};
use parafix::maps::{AffineLeastSquares, Paracontraction};

fn main() -> Result<(), Box<dyn Error>> {
    // Two oblique lines in the plane meeting at (2, 1).
    let maps: Vec<Arc<dyn Paracontraction>> = vec![
        Arc::new(AffineLeastSquares::new(vec![vec![1.0, 1.0]], vec![3.0])?),
        Arc::new(AffineLeastSquares::new(vec![vec![1.0, -2.0]], vec![0.0])?),
    ];
    let x0 = VecN::new(vec![40.0, -25.0])?;
    let solution = VecN::new(vec![2.0, 1.0])?;
    let p = NormOrder::euclidean();

    for (label, schedule) in [
        ("round-robin", SequentialSchedule::RoundRobin),
        ("seeded-random", SequentialSchedule::SeededRandom(11)),
    ] {
        let result = run_sequential(&maps, schedule, &x0, p, 1e-10, 100_000)?;
        let xhat = result.final_state.block(0);
        println!(
            "{label:14} converged={} iterations={} |x - solution| = {:.2e}",
            result.converged,
            result.iterations_used,
            xhat.sub(&solution).p_norm(p)
        );
    }

    // The residual column decays geometrically; print the first few rows.
    let result = run_sequential(
        &maps,
        SequentialSchedule::RoundRobin,
        &x0,
        p,
        1e-10,
        100_000,
    )?;
    for record in result.trace.iter().take(8) {
        println!("  t={} residual={:.3e}", record.t, record.residual);
    }
    Ok(())
}
