//! The synchronous distributed iteration in stacked form, the sequential
//! single-state baseline, and trajectory recording.
//!
//! Iteration indices start at t = 1; `x0` is the state at t = 0 entering
//! the first step. Step t draws graph t, averages with its flocking matrix
//! and applies the maps:
//!
//! ```text
//! z(t) = (F(t) (x) I) x(t-1)        x_i(t) = M_i(z_i(t))
//! ```
//!
//! A run records one [`TraceRecord`] per iteration plus an initial row at
//! t = 0 (where z is taken to be x0, so the Lyapunov column starts at
//! `||x0 - ybar||` and stays non-increasing). Non-convergence is reported,
//! never raised: negative controls are first-class experiments.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::graphs::{GraphError, GraphSequence};
use crate::linalg::{LinalgError, NormOrder, StackedState, VecN};
use crate::maps::{MapError, Paracontraction};
use crate::rng::{derive_seed, seeded_rng};

/// Default convergence tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default iteration cap.
pub const DEFAULT_MAX_ITERS: usize = 100_000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("map {index}: {source}")]
    Map { index: usize, source: MapError },
    #[error("non-finite state at iteration {t}")]
    NonFiniteState { t: usize },
    #[error("problem needs at least one agent")]
    NoAgents,
    #[error("agent counts disagree: {maps} maps, graph on {graph}, {blocks} state blocks")]
    AgentCountMismatch {
        maps: usize,
        graph: usize,
        blocks: usize,
    },
    #[error("map {index} has dimension {got}, state blocks have {expected}")]
    MapDimMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("reference fixed point has dimension {got}, expected {expected}")]
    ReferenceDimMismatch { got: usize, expected: usize },
    #[error("tolerance must be positive, got {tol}")]
    InvalidTolerance { tol: f64 },
}

/// The full description of one experiment: m maps, a graph sequence, the
/// norm order, the initial stacked state and an optional reference common
/// fixed point (used only for the Lyapunov trace column and diagnostics).
#[derive(Clone)]
pub struct DistributedProblem {
    maps: Vec<Arc<dyn Paracontraction>>,
    graph_seq: GraphSequence,
    p: NormOrder,
    x0: StackedState,
    reference_fixed_point: Option<VecN>,
}

impl std::fmt::Debug for DistributedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DistributedProblem")
            .field(
                "maps",
                &self.maps.iter().map(|m| m.describe()).collect::<Vec<_>>(),
            )
            .field("graph_seq", &self.graph_seq)
            .field("p", &self.p)
            .field("x0", &self.x0)
            .field("reference_fixed_point", &self.reference_fixed_point)
            .finish()
    }
}

impl DistributedProblem {
    pub fn new(
        maps: Vec<Arc<dyn Paracontraction>>,
        graph_seq: GraphSequence,
        p: NormOrder,
        x0: StackedState,
        reference_fixed_point: Option<VecN>,
    ) -> Result<Self, EngineError> {
        if maps.is_empty() {
            return Err(EngineError::NoAgents);
        }
        if maps.len() != graph_seq.vertex_count() || maps.len() != x0.num_blocks() {
            return Err(EngineError::AgentCountMismatch {
                maps: maps.len(),
                graph: graph_seq.vertex_count(),
                blocks: x0.num_blocks(),
            });
        }
        let n = x0.block_dim();
        for (index, map) in maps.iter().enumerate() {
            if map.dim() != n {
                return Err(EngineError::MapDimMismatch {
                    index,
                    got: map.dim(),
                    expected: n,
                });
            }
        }
        if let Some(y) = &reference_fixed_point {
            if y.dim() != n {
                return Err(EngineError::ReferenceDimMismatch {
                    got: y.dim(),
                    expected: n,
                });
            }
        }
        Ok(DistributedProblem {
            maps,
            graph_seq,
            p,
            x0,
            reference_fixed_point,
        })
    }

    pub fn agent_count(&self) -> usize {
        self.maps.len()
    }

    pub fn state_dim(&self) -> usize {
        self.x0.block_dim()
    }

    pub fn map(&self, i: usize) -> &dyn Paracontraction {
        self.maps[i].as_ref()
    }

    pub fn maps(&self) -> &[Arc<dyn Paracontraction>] {
        &self.maps
    }

    pub fn graph_sequence(&self) -> &GraphSequence {
        &self.graph_seq
    }

    pub fn norm_order(&self) -> NormOrder {
        self.p
    }

    pub fn initial_state(&self) -> &StackedState {
        &self.x0
    }

    pub fn reference_fixed_point(&self) -> Option<&VecN> {
        self.reference_fixed_point.as_ref()
    }
}

/// Per-iteration diagnostics row.
///
/// * `disagreement`: largest pairwise p-norm distance between agent blocks.
/// * `residual`: largest per-agent fixed-point defect `||M_i(x_i) - x_i||_p`.
/// * `lyapunov`: `||z(t) - ybar||_{p,inf}` when a reference fixed point is
///   configured, else absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: usize,
    pub disagreement: f64,
    pub residual: f64,
    pub lyapunov: Option<f64>,
}

/// Outcome of a run. `converged` holds exactly when both disagreement and
/// residual were within tolerance at the final recorded iteration.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_state: StackedState,
    pub iterations_used: usize,
    pub converged: bool,
    pub trace: Vec<TraceRecord>,
}

pub(crate) fn meets_tolerance(record: &TraceRecord, tol: f64) -> bool {
    record.disagreement <= tol && record.residual <= tol
}

/// One synchronous step at iteration `t >= 1`: returns the new state and
/// the averaged state z that produced it.
pub fn step(
    problem: &DistributedProblem,
    x: &StackedState,
    t: usize,
) -> Result<(StackedState, StackedState), EngineError> {
    let flocking = problem.graph_seq.graph_at(t)?.flocking_matrix();
    let z = flocking.apply_blockwise(x)?;
    if !z.is_finite() {
        return Err(EngineError::NonFiniteState { t });
    }
    let blocks = problem
        .maps
        .iter()
        .enumerate()
        .map(|(index, map)| {
            map.apply(z.block(index))
                .map_err(|source| EngineError::Map { index, source })
        })
        .collect::<Result<Vec<VecN>, _>>()?;
    let x_next = StackedState::new(blocks)?;
    if !x_next.is_finite() {
        return Err(EngineError::NonFiniteState { t });
    }
    Ok((x_next, z))
}

/// Diagnostics row for state `x` with averaged state `z` at iteration `t`.
pub fn compute_trace_record(
    problem: &DistributedProblem,
    x: &StackedState,
    z: &StackedState,
    t: usize,
) -> Result<TraceRecord, EngineError> {
    let m = problem.agent_count();
    if x.num_blocks() != m || z.num_blocks() != m {
        return Err(EngineError::AgentCountMismatch {
            maps: m,
            graph: m,
            blocks: x.num_blocks(),
        });
    }
    let p = problem.p;
    let disagreement = x.max_block_distance(p);
    let mut residual = 0.0f64;
    for (index, map) in problem.maps.iter().enumerate() {
        let defect = map
            .apply(x.block(index))
            .map_err(|source| EngineError::Map { index, source })?
            .sub(x.block(index))
            .p_norm(p);
        residual = residual.max(defect);
    }
    let lyapunov = problem.reference_fixed_point.as_ref().map(|y| {
        let ybar = StackedState::consensus(y, m);
        z.sub(&ybar).mixed_norm(p)
    });
    Ok(TraceRecord {
        t,
        disagreement,
        residual,
        lyapunov,
    })
}

/// Iterates [`step`] from `x0` until disagreement and residual are both
/// within `tol`, or `max_iters` is reached. Deterministic given the
/// problem: two identical runs produce byte-identical traces.
pub fn run(
    problem: &DistributedProblem,
    tol: f64,
    max_iters: usize,
) -> Result<RunResult, EngineError> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(EngineError::InvalidTolerance { tol });
    }
    let mut x = problem.x0.clone();
    let mut trace = Vec::with_capacity(max_iters.min(1024) + 1);
    // Initial row: by convention z at t = 0 is x0 itself.
    let record = compute_trace_record(problem, &x, &x, 0)?;
    let mut converged = meets_tolerance(&record, tol);
    trace.push(record);
    let mut iterations_used = 0;
    let mut t = 1;
    while !converged && t <= max_iters {
        let (x_next, z) = step(problem, &x, t)?;
        x = x_next;
        let record = compute_trace_record(problem, &x, &z, t)?;
        converged = meets_tolerance(&record, tol);
        trace.push(record);
        iterations_used = t;
        t += 1;
    }
    Ok(RunResult {
        final_state: x,
        iterations_used,
        converged,
        trace,
    })
}

/// Index schedule for the sequential baseline; both kinds visit every map
/// index infinitely often.
#[derive(Debug, Clone, Copy)]
pub enum SequentialSchedule {
    RoundRobin,
    SeededRandom(u64),
}

impl SequentialSchedule {
    /// The map index used at iteration `t >= 1`. A pure function of
    /// `(schedule, t)`.
    pub fn index_at(&self, t: usize, m: usize) -> usize {
        match self {
            SequentialSchedule::RoundRobin => (t - 1) % m,
            SequentialSchedule::SeededRandom(seed) => {
                use rand::Rng;
                seeded_rng(derive_seed(*seed, t as u64)).gen_range(0..m)
            }
        }
    }
}

/// The single-state baseline: `x(t) = M_sigma(t)(x(t-1))`, stopping when
/// `max_i ||M_i(x) - x||_p <= tol`. The result's final state carries one
/// block.
pub fn run_sequential(
    maps: &[Arc<dyn Paracontraction>],
    schedule: SequentialSchedule,
    x0: &VecN,
    p: NormOrder,
    tol: f64,
    max_iters: usize,
) -> Result<RunResult, EngineError> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(EngineError::InvalidTolerance { tol });
    }
    if maps.is_empty() {
        return Err(EngineError::NoAgents);
    }
    for (index, map) in maps.iter().enumerate() {
        if map.dim() != x0.dim() {
            return Err(EngineError::MapDimMismatch {
                index,
                got: map.dim(),
                expected: x0.dim(),
            });
        }
    }
    let m = maps.len();
    let residual_at = |x: &VecN| -> Result<f64, EngineError> {
        let mut worst = 0.0f64;
        for (index, map) in maps.iter().enumerate() {
            let defect = map
                .apply(x)
                .map_err(|source| EngineError::Map { index, source })?
                .sub(x)
                .p_norm(p);
            worst = worst.max(defect);
        }
        Ok(worst)
    };

    let mut x = x0.clone();
    let mut trace = Vec::new();
    let record = TraceRecord {
        t: 0,
        disagreement: 0.0,
        residual: residual_at(&x)?,
        lyapunov: None,
    };
    let mut converged = meets_tolerance(&record, tol);
    trace.push(record);
    let mut iterations_used = 0;
    let mut t = 1;
    while !converged && t <= max_iters {
        let index = schedule.index_at(t, m);
        x = maps[index]
            .apply(&x)
            .map_err(|source| EngineError::Map { index, source })?;
        if !x.is_finite() {
            return Err(EngineError::NonFiniteState { t });
        }
        let record = TraceRecord {
            t,
            disagreement: 0.0,
            residual: residual_at(&x)?,
            lyapunov: None,
        };
        converged = meets_tolerance(&record, tol);
        trace.push(record);
        iterations_used = t;
        t += 1;
    }
    Ok(RunResult {
        final_state: StackedState::new(vec![x])?,
        iterations_used,
        converged,
        trace,
    })
}
