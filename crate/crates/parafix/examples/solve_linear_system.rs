//! Four agents jointly solve an invertible linear system Ax = b.
//!
//! Agent i knows only its own row (A_i, b_i) wrapped in an affine
//! least-squares map, plus whatever estimates its in-neighbors send. Run:
//!
//! ```text
//! cargo run --example solve_linear_system
//! ```

use std::error::Error;
use std::sync::Arc;

use parafix::engine::{self, DistributedProblem};
use parafix::graphs::{GraphSequence, NeighborGraph};
use parafix::linalg::{NormOrder, StackedState, VecN};
use parafix::maps::{AffineLeastSquares, Paracontraction};

fn main() -> Result<(), Box<dyn Error>> {
    // A diagonally dominant system with solution (1, -2, 0.5, 3).
    let a = [
        vec![4.0, 1.0, 0.5, -0.5],
        vec![-1.0, 5.0, 1.0, 0.25],
        vec![0.5, -0.5, 4.5, 1.0],
        vec![1.0, 0.25, -1.0, 5.5],
    ];
    let x_true = VecN::new(vec![1.0, -2.0, 0.5, 3.0])?;
    let b: Vec<f64> = a
        .iter()
        .map(|row| VecN::new(row.clone()).unwrap().dot(&x_true))
        .collect();

    let maps: Vec<Arc<dyn Paracontraction>> = a
        .iter()
        .zip(&b)
        .map(|(row, bi)| {
            Arc::new(AffineLeastSquares::new(vec![row.clone()], vec![*bi]).unwrap())
                as Arc<dyn Paracontraction>
        })
        .collect();

    // A fresh strongly connected directed graph every iteration.
    let graph_seq = GraphSequence::seeded_random(4, 0.5, 42)?;
    println!(
        "graph at t=1 has {} arcs, t=2 has {}",
        graph_seq.graph_at(1)?.arc_count(),
        graph_seq.graph_at(2)?.arc_count()
    );

    let x0 = StackedState::new(vec![
        VecN::new(vec![10.0, 10.0, 10.0, 10.0])?,
        VecN::new(vec![-10.0, 0.0, 0.0, 0.0])?,
        VecN::new(vec![0.0, 3.0, -7.0, 2.0])?,
        VecN::new(vec![1.0, 1.0, 1.0, 1.0])?,
    ])?;

    let problem = DistributedProblem::new(
        maps,
        graph_seq,
        NormOrder::euclidean(),
        x0,
        Some(x_true.clone()),
    )?;
    let result = engine::run(&problem, 1e-9, 100_000)?;

    println!(
        "converged: {} after {} iterations",
        result.converged, result.iterations_used
    );
    for record in result.trace.iter().step_by(10) {
        println!(
            "  t={:3}  disagreement={:9.2e}  residual={:9.2e}  lyapunov={:9.2e}",
            record.t,
            record.disagreement,
            record.residual,
            record.lyapunov.unwrap()
        );
    }
    let xhat = result.final_state.block(0);
    println!(
        "agent 0 estimate: {:?}\ndistance to solution: {:.2e}",
        xhat.entries(),
        xhat.sub(&x_true).p_norm(NormOrder::euclidean())
    );

    // The same system solved over a fixed complete graph for comparison.
    let static_problem = DistributedProblem::new(
        problem.maps().to_vec(),
        GraphSequence::static_graph(NeighborGraph::complete(4))?,
        NormOrder::euclidean(),
        problem.initial_state().clone(),
        Some(x_true),
    )?;
    let static_result = engine::run(&static_problem, 1e-9, 100_000)?;
    println!(
        "static complete graph: {} iterations (random graphs took {})",
        static_result.iterations_used, result.iterations_used
    );
    Ok(())
}
