//! Agents with different operator families agree on a point that is fixed
//! under all of them: a box projection, a halfspace projection and an
//! affine least-squares map whose fixed-point sets intersect.
//!
//! ```text
//! cargo run --example heterogeneous_projections
//! ```

use std::error::Error;
use std::sync::Arc;

use parafix::engine::{self, DistributedProblem};
use parafix::graphs::GraphSequence;
use parafix::linalg::{NormOrder, StackedState, VecN};
use parafix::maps::{is_fixed_point, AffineLeastSquares, ConvexProjection, Paracontraction};

fn main() -> Result<(), Box<dyn Error>> {
    let p = NormOrder::euclidean();
    let maps: Vec<Arc<dyn Paracontraction>> = vec![
        Arc::new(ConvexProjection::new_box(vec![0.0, 0.0], vec![2.0, 2.0])?),
        Arc::new(ConvexProjection::new_halfspace(vec![1.0, 1.0], 3.0)?),
        Arc::new(AffineLeastSquares::new(vec![vec![1.0, -1.0]], vec![0.0])?),
    ];
    for map in &maps {
        println!("agent map: {}", map.describe());
    }
    // The intersection is the segment x1 = x2, 0 <= x1 <= 1.5; (1, 1) is a
    // convenient interior witness.
    let witness = VecN::new(vec![1.0, 1.0])?;

    let problem = DistributedProblem::new(
        maps.clone(),
        GraphSequence::seeded_random(3, 0.6, 7)?,
        p,
        StackedState::new(vec![
            VecN::new(vec![9.0, -4.0])?,
            VecN::new(vec![-6.0, 8.0])?,
            VecN::new(vec![3.0, 3.0])?,
        ])?,
        Some(witness),
    )?;
    let result = engine::run(&problem, 1e-9, 100_000)?;
    println!(
        "converged: {} after {} iterations",
        result.converged, result.iterations_used
    );

    let xhat = result.final_state.block(0);
    println!("agreed point: {:?}", xhat.entries());
    for (k, map) in maps.iter().enumerate() {
        println!(
            "  fixed under map {k}? {}",
            is_fixed_point(map.as_ref(), xhat, 1e-8, p)?
        );
    }
    Ok(())
}
