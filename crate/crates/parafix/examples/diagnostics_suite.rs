//! The executable convergence machinery: stochastic nonexpansion, window
//! positivity, the window map's fixed-point classification, strict window
//! contraction, and trace monotonicity, all run against one problem.
//!
//! ```text
//! cargo run --example diagnostics_suite
//! ```

use std::error::Error;
use std::sync::Arc;

use parafix::diagnostics::{
    check_stochastic_nonexpansion, check_monotone_trace, check_window_fixed_points,
    check_window_contraction, CheckReport,
};
use parafix::engine::{self, DistributedProblem};
use parafix::graphs::GraphSequence;
use parafix::linalg::{NormOrder, StackedState, VecN};
use parafix::maps::{AffineLeastSquares, ConvexProjection, Paracontraction};

fn print_report(report: &CheckReport) {
    println!(
        "  {:24} passed={} worst_violation={:+.3e}",
        report.name, report.passed, report.worst_violation
    );
}

fn main() -> Result<(), Box<dyn Error>> {
    let p = NormOrder::euclidean();
    // Three maps sharing the fixed point (1, 1).
    let maps: Vec<Arc<dyn Paracontraction>> = vec![
        Arc::new(AffineLeastSquares::new(vec![vec![1.0, -1.0]], vec![0.0])?),
        Arc::new(ConvexProjection::new_box(vec![0.0, 0.0], vec![2.0, 2.0])?),
        Arc::new(ConvexProjection::new_ball(vec![1.0, 0.5], 1.0)?),
    ];
    let graph_seq = GraphSequence::seeded_random(3, 0.6, 31)?;
    let y_star = VecN::new(vec![1.0, 1.0])?;
    let problem = DistributedProblem::new(
        maps,
        graph_seq.clone(),
        p,
        StackedState::new(vec![
            VecN::new(vec![7.0, -3.0])?,
            VecN::new(vec![-5.0, 6.0])?,
            VecN::new(vec![2.0, 9.0])?,
        ])?,
        Some(y_star),
    )?;

    // Averaging with any stochastic matrix never increases the mixed-norm
    // distance to a consensus point.
    let f1 = graph_seq.graph_at(1)?.flocking_matrix();
    println!("stochastic nonexpansion of F(1):");
    print_report(&check_stochastic_nonexpansion(&f1, 1000, 1, p));

    // A window of m - 1 = 2 flocking matrices is entrywise positive, which
    // is exactly what the window-level checks require.
    let q = 2;
    println!(
        "window product positive (q = {q}): {}",
        graph_seq.composition_window_positive(1, q, 0.0)?
    );

    println!("window map fixed-point classification:");
    print_report(&check_window_fixed_points(&problem, q, 300, 2)?);

    println!("window map strict contraction toward the consensus stack:");
    print_report(&check_window_contraction(&problem, q, 300, 3)?);

    // Finally the run itself: the Lyapunov column of the trace never
    // increases.
    let result = engine::run(&problem, 1e-9, 10_000)?;
    println!(
        "run converged after {} iterations; trace monotonicity:",
        result.iterations_used
    );
    print_report(&check_monotone_trace(&result)?);
    Ok(())
}
