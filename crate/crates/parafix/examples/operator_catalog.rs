//! Tour of the operator catalog: what each map does at a point, where its
//! fixed points sit, and how the sampling checker separates genuine
//! paracontractions from impostors.
//!
//! ```text
//! cargo run --example operator_catalog
//! ```

use std::error::Error;

use parafix::linalg::{NormOrder, VecN};
use parafix::maps::{
    check_paracontraction, AffineLeastSquares, ConvexProjection, GradientStep, LinearMap,
    Paracontraction, Proximal,
};

fn show(map: &dyn Paracontraction, x: &VecN) -> Result<(), Box<dyn Error>> {
    let image = map.apply(x)?;
    println!(
        "{:55} {:?} -> {:?}",
        map.describe(),
        x.entries(),
        image.entries()
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    let p = NormOrder::euclidean();
    let x = VecN::new(vec![3.0, -0.5])?;

    show(&AffineLeastSquares::new(vec![vec![1.0, 0.0]], vec![2.0])?, &x)?;
    show(&ConvexProjection::new_box(vec![0.0, 0.0], vec![1.0, 1.0])?, &x)?;
    show(&ConvexProjection::new_ball(vec![0.0, 0.0], 1.0)?, &x)?;
    show(&ConvexProjection::new_halfspace(vec![1.0, 1.0], 1.0)?, &x)?;
    show(&GradientStep::quadratic(vec![1.0, 1.0], vec![0.0, 0.0], Some(0.5))?, &x)?;
    show(&Proximal::l1(2, 1.0)?, &x)?;
    show(&Proximal::quadratic(vec![1.0, 1.0], 3.0)?, &x)?;

    // Every catalog map knows a fixed point, which seeds the checker.
    println!();
    let subspace = ConvexProjection::new_affine_subspace(vec![vec![1.0, 2.0]], vec![2.0])?;
    let y = subspace.known_fixed_point().unwrap();
    let report = check_paracontraction(&subspace, &y, 2000, p, 5)?;
    println!(
        "subspace projection: {} samples, {} violations, worst margin {:+.2e}",
        report.samples_tested,
        report.violations,
        report.worst_margin.unwrap()
    );

    // x -> 2x doubles distances from its fixed point 0: flagged immediately.
    let doubling = LinearMap::scaling(2, 2.0)?;
    println!("doubling map verified? {}", doubling.is_verified());
    let report = check_paracontraction(&doubling, &VecN::zeros(2), 2000, p, 5)?;
    println!(
        "doubling map: {} violations out of {} samples (worst margin {:+.2e})",
        report.violations,
        report.samples_tested,
        report.worst_margin.unwrap()
    );

    // A rotation preserves distances to 0: no violations (it never
    // expands), but the worst margin hugs 0 instead of staying negative,
    // which is the signature of a map that is nonexpansive without being
    // a paracontraction.
    let rotation = LinearMap::new(vec![vec![0.0, -1.0], vec![1.0, 0.0]])?;
    let report = check_paracontraction(&rotation, &VecN::zeros(2), 2000, p, 5)?;
    println!(
        "rotation: {} violations (worst margin {:+.2e}) - nonexpansive, not contracting",
        report.violations,
        report.worst_margin.unwrap()
    );
    Ok(())
}
