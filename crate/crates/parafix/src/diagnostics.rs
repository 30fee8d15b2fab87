//! Executable checks for the convergence machinery, reusable over runs and
//! operators. Every check is a pure function of its inputs and seed, so a
//! failing report can be replayed exactly; witnesses serialize the
//! offending inputs in the same nested-array format scenario configs use.
//!
//! Slack policy: non-strict inequalities get 1e-12 of slack; strict
//! inequalities must show a margin greater than zero after that rounding
//! allowance.

use rand::Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::engine::{DistributedProblem, EngineError, RunResult};
use crate::graphs::GraphError;
use crate::linalg::{NormOrder, StackedState, StochasticMatrix, VecN};
use crate::maps::{MapError, FIXED_POINT_TOL};
use crate::rng::{derive_seed, gaussian_vec, seeded_rng};

/// Slack for non-strict inequalities.
pub const NONSTRICT_SLACK: f64 = 1e-12;
/// A probe must move a non-fixed vector by more than this.
pub const MOVEMENT_FLOOR: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("problem has no reference fixed point to check against")]
    MissingFixedPoint,
    #[error("reference point is not a common fixed point (map {index}, defect {defect:.3e})")]
    NotCommonFixedPoint { index: usize, defect: f64 },
    #[error("the window's flocking-matrix product is not positive; contraction hypothesis unmet")]
    WindowNotPositive,
    #[error("trace carries no lyapunov values (no reference fixed point was configured)")]
    MissingLyapunov,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("map error: {0}")]
    Map(#[from] MapError),
}

/// Outcome of one check.
///
/// `worst_violation` is the largest violation quantity the check observed;
/// each check documents the quantity and the slack against which `passed`
/// was decided. `witness` holds the offending input when the check failed.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    pub witness: Option<serde_json::Value>,
}

/// Stochastic averaging never increases the mixed-norm distance to a
/// consensus point: checks `||(S (x) I)x - ybar|| <= ||x - ybar||` with
/// [`NONSTRICT_SLACK`] over random `x`, `ybar` (block dimension drawn in
/// 1..=4 per trial). `worst_violation` is the largest observed increase.
pub fn check_stochastic_nonexpansion(
    s: &StochasticMatrix,
    trials: usize,
    seed: u64,
    p: NormOrder,
) -> CheckReport {
    let m = s.size();
    let mut rng = seeded_rng(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for _ in 0..trials {
        let n = rng.gen_range(1..=4usize);
        let x = StackedState::new((0..m).map(|_| gaussian_vec(&mut rng, n).scale(5.0)).collect())
            .expect("gaussian blocks share the dimension");
        let y = gaussian_vec(&mut rng, n).scale(5.0);
        let ybar = StackedState::consensus(&y, m);
        let before = x.sub(&ybar).mixed_norm(p);
        let after = s
            .apply_blockwise(&x)
            .expect("dimensions match")
            .sub(&ybar)
            .mixed_norm(p);
        let increase = after - before;
        if increase > worst {
            worst = increase;
            if increase > NONSTRICT_SLACK {
                witness = Some(json!({ "x": x, "y": y, "p": p.value() }));
            }
        }
    }
    let worst_violation = if worst == f64::NEG_INFINITY { 0.0 } else { worst };
    CheckReport {
        name: "stochastic-nonexpansion".into(),
        passed: worst_violation <= NONSTRICT_SLACK,
        worst_violation,
        witness,
    }
}

/// Applies the composed round map of a window of `q` iterations starting at
/// `start` to an averaged state z: each factor applies the maps blockwise,
/// then averages with that iteration's flocking matrix.
pub fn apply_round_window(
    problem: &DistributedProblem,
    start: usize,
    q: usize,
    z: &StackedState,
) -> Result<StackedState, EngineError> {
    let mut state = z.clone();
    for t in start..start + q {
        let mapped = problem
            .maps()
            .iter()
            .enumerate()
            .map(|(index, map)| {
                map.apply(state.block(index))
                    .map_err(|source| EngineError::Map { index, source })
            })
            .collect::<Result<Vec<VecN>, _>>()?;
        let flocking = problem.graph_sequence().graph_at(t)?.flocking_matrix();
        state = flocking.apply_blockwise(&StackedState::new(mapped)?)?;
    }
    Ok(state)
}

fn verified_reference(problem: &DistributedProblem) -> Result<VecN, CheckError> {
    let y = problem
        .reference_fixed_point()
        .ok_or(CheckError::MissingFixedPoint)?
        .clone();
    let p = problem.norm_order();
    for (index, map) in problem.maps().iter().enumerate() {
        let defect = map.apply(&y)?.sub(&y).p_norm(p);
        if defect.is_nan() || defect > FIXED_POINT_TOL {
            return Err(CheckError::NotCommonFixedPoint { index, defect });
        }
    }
    Ok(y)
}

fn require_positive_window(problem: &DistributedProblem, q: usize) -> Result<(), CheckError> {
    if problem
        .graph_sequence()
        .composition_window_positive(1, q, 0.0)?
    {
        Ok(())
    } else {
        Err(CheckError::WindowNotPositive)
    }
}

/// The composed window map must strictly contract toward the consensus
/// stack of the common fixed point: for random non-fixed stacked vectors,
/// `||x - ybar|| - ||W(x) - ybar|| > 0`. `worst_violation` is the negated
/// smallest margin, so the check passes iff it is strictly below zero.
///
/// Preconditions (errors otherwise): the problem carries a verified common
/// fixed point, and the window's flocking product is positive.
pub fn check_window_contraction(
    problem: &DistributedProblem,
    q: usize,
    trials: usize,
    seed: u64,
) -> Result<CheckReport, CheckError> {
    let y = verified_reference(problem)?;
    require_positive_window(problem, q)?;
    let m = problem.agent_count();
    let n = problem.state_dim();
    let p = problem.norm_order();
    let ybar = StackedState::consensus(&y, m);

    let mut rng = seeded_rng(derive_seed(seed, 0xC0));
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for _ in 0..trials {
        let x = StackedState::new(
            (0..m)
                .map(|_| y.add(&gaussian_vec(&mut rng, n).scale(3.0)))
                .collect(),
        )
        .expect("blocks share the dimension");
        let image = apply_round_window(problem, 1, q, &x)?;
        if image.sub(&x).mixed_norm(p) <= MOVEMENT_FLOOR {
            continue; // fixed point of the window; strictness does not apply
        }
        let margin = x.sub(&ybar).mixed_norm(p) - image.sub(&ybar).mixed_norm(p);
        if -margin > worst {
            worst = -margin;
            if margin <= 0.0 {
                witness = Some(json!({ "x": x, "y_star": y, "margin": margin }));
            }
        }
    }
    let worst_violation = if worst == f64::NEG_INFINITY { -1.0 } else { worst };
    Ok(CheckReport {
        name: "window-contraction".into(),
        passed: worst_violation < 0.0,
        worst_violation,
        witness,
    })
}

/// The window map's fixed points are exactly the consensus stacks of
/// common fixed points: (a) the consensus stack of the verified common
/// fixed point is preserved within [`NONSTRICT_SLACK`]; (b) consensus
/// stacks of non-fixed points, non-consensus stacks, and stacks of
/// distinct per-map fixed points all move by more than [`MOVEMENT_FLOOR`].
/// `worst_violation` is the largest excess over the relevant allowance
/// (preservation error minus slack, or movement shortfall); passes iff at
/// most zero.
pub fn check_window_fixed_points(
    problem: &DistributedProblem,
    q: usize,
    trials: usize,
    seed: u64,
) -> Result<CheckReport, CheckError> {
    let y = verified_reference(problem)?;
    require_positive_window(problem, q)?;
    let m = problem.agent_count();
    let n = problem.state_dim();
    let p = problem.norm_order();

    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut note = |violation: f64, make_witness: &dyn Fn() -> serde_json::Value| {
        if violation > worst {
            worst = violation;
            if violation > 0.0 {
                witness = Some(make_witness());
            }
        }
    };

    // (a) Consensus stack of the common fixed point is preserved.
    let ybar = StackedState::consensus(&y, m);
    let preserved_err = apply_round_window(problem, 1, q, &ybar)?
        .sub(&ybar)
        .mixed_norm(p);
    note(preserved_err - NONSTRICT_SLACK, &|| {
        json!({ "probe": "consensus-of-common-fixed-point", "y_star": y, "error": preserved_err })
    });

    // Stacking each map's own fixed point is not a window fixed point
    // unless those points coincide.
    let per_map: Option<Vec<VecN>> = problem
        .maps()
        .iter()
        .map(|map| map.known_fixed_point())
        .collect();
    if let Some(points) = per_map {
        let stack = StackedState::new(points).expect("fixed points share the dimension");
        if stack.max_block_distance(p) > 1e-6 {
            let moved = apply_round_window(problem, 1, q, &stack)?
                .sub(&stack)
                .mixed_norm(p);
            note(MOVEMENT_FLOOR - moved, &|| {
                json!({ "probe": "stack-of-per-map-fixed-points", "x": stack, "moved": moved })
            });
        }
    }

    // (b) Random probes: consensus stacks of non-fixed points and
    // non-consensus stacks must move.
    let mut rng = seeded_rng(derive_seed(seed, 0xF1));
    for trial in 0..trials {
        let x = if trial % 2 == 0 {
            let mut candidate = None;
            for _ in 0..16 {
                let point = y.add(&gaussian_vec(&mut rng, n).scale(2.0));
                let non_fixed = problem.maps().iter().any(|map| {
                    map.apply(&point)
                        .map(|im| im.sub(&point).p_norm(p) > 1e-8)
                        .unwrap_or(false)
                });
                if non_fixed {
                    candidate = Some(StackedState::consensus(&point, m));
                    break;
                }
            }
            match candidate {
                Some(x) => x,
                None => continue, // every draw was a common fixed point; nothing to probe
            }
        } else {
            let mut candidate = StackedState::new(
                (0..m)
                    .map(|_| y.add(&gaussian_vec(&mut rng, n).scale(2.0)))
                    .collect(),
            )
            .expect("blocks share the dimension");
            for _ in 0..16 {
                if m == 1 || candidate.max_block_distance(p) > 1e-6 {
                    break;
                }
                candidate = StackedState::new(
                    (0..m)
                        .map(|_| y.add(&gaussian_vec(&mut rng, n).scale(2.0)))
                        .collect(),
                )
                .expect("blocks share the dimension");
            }
            if m == 1 {
                continue; // a single agent has no non-consensus stacks
            }
            candidate
        };
        let moved = apply_round_window(problem, 1, q, &x)?.sub(&x).mixed_norm(p);
        let x_witness = x.clone();
        note(MOVEMENT_FLOOR - moved, &|| {
            json!({ "probe": "random", "x": x_witness, "moved": moved })
        });
    }

    let worst_violation = if worst == f64::NEG_INFINITY { 0.0 } else { worst };
    Ok(CheckReport {
        name: "window-fixed-points".into(),
        passed: worst_violation <= 0.0,
        worst_violation,
        witness,
    })
}

/// The Lyapunov column of a trace never increases: checks
/// `lyapunov(t+1) <= lyapunov(t)` with [`NONSTRICT_SLACK`] across the whole
/// trace. `worst_violation` is the largest consecutive increase. Errors if
/// the trace carries no lyapunov values.
pub fn check_monotone_trace(result: &RunResult) -> Result<CheckReport, CheckError> {
    let values: Option<Vec<f64>> = result.trace.iter().map(|r| r.lyapunov).collect();
    let values = values.ok_or(CheckError::MissingLyapunov)?;
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for (t, pair) in values.windows(2).enumerate() {
        let increase = pair[1] - pair[0];
        if increase > worst {
            worst = increase;
            if increase > NONSTRICT_SLACK {
                witness = Some(json!({ "t": t + 1, "before": pair[0], "after": pair[1] }));
            }
        }
    }
    let worst_violation = if worst == f64::NEG_INFINITY { 0.0 } else { worst };
    Ok(CheckReport {
        name: "monotone-trace".into(),
        passed: worst_violation <= NONSTRICT_SLACK,
        worst_violation,
        witness,
    })
}
