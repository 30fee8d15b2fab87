//! The same algorithm two ways: the stacked matrix engine versus m agent
//! processes exchanging messages in synchronous rounds. Both accumulate in
//! the same canonical order, so their trajectories agree bit for bit.
//!
//! ```text
//! cargo run --example message_passing_equivalence
//! ```

use std::error::Error;
use std::sync::Arc;

use parafix::engine::{self, DistributedProblem};
use parafix::graphs::GraphSequence;
use parafix::linalg::{NormOrder, StackedState, VecN};
use parafix::maps::{ConvexProjection, Paracontraction, Proximal};
use parafix::simnet::{run_simnet, run_simnet_with_workers};

fn main() -> Result<(), Box<dyn Error>> {
    let maps: Vec<Arc<dyn Paracontraction>> = vec![
        Arc::new(Proximal::l1(2, 0.4)?),
        Arc::new(ConvexProjection::new_ball(vec![0.1, 0.0], 1.0)?),
        Arc::new(ConvexProjection::new_box(vec![-1.0, -1.0], vec![1.0, 1.0])?),
    ];
    let problem = DistributedProblem::new(
        maps,
        GraphSequence::seeded_random(3, 0.5, 23)?,
        NormOrder::euclidean(),
        StackedState::new(vec![
            VecN::new(vec![5.0, -7.0])?,
            VecN::new(vec![-3.0, 4.0])?,
            VecN::new(vec![8.0, 8.0])?,
        ])?,
        Some(VecN::new(vec![0.0, 0.0])?),
    )?;

    let stacked = engine::run(&problem, 1e-9, 10_000)?;
    let messaged = run_simnet(&problem, 1e-9, 10_000)?;
    let parallel = run_simnet_with_workers(&problem, 1e-9, 10_000, 4)?;

    println!(
        "stacked engine:   {} iterations, converged = {}",
        stacked.iterations_used, stacked.converged
    );
    println!(
        "message passing:  {} iterations, converged = {}",
        messaged.iterations_used, messaged.converged
    );

    let mut identical = stacked.trace.len() == messaged.trace.len();
    for (a, b) in stacked.trace.iter().zip(&messaged.trace) {
        identical &= a.disagreement.to_bits() == b.disagreement.to_bits()
            && a.residual.to_bits() == b.residual.to_bits()
            && a.lyapunov.map(f64::to_bits) == b.lyapunov.map(f64::to_bits);
    }
    println!("traces bit-identical: {identical}");

    let worker_match = messaged
        .final_state
        .blocks()
        .iter()
        .zip(parallel.final_state.blocks())
        .all(|(a, b)| {
            a.entries()
                .iter()
                .zip(b.entries())
                .all(|(x, y)| x.to_bits() == y.to_bits())
        });
    println!("4-worker run matches the single-threaded arbiter: {worker_match}");

    println!("final estimates (agent 0): {:?}", stacked.final_state.block(0).entries());
    Ok(())
}
