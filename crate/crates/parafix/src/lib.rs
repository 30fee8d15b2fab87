//! Distributed computation of a common fixed point of a family of
//! paracontracting maps.
//!
//! `m` agents each hold one map `M_i : R^n -> R^n` and a local estimate of a
//! point that is fixed under every map in the family. In each synchronous
//! round an agent averages the estimates it receives from its in-neighbors
//! under that round's directed graph (self-arcs always present) and applies
//! its own map to the average:
//!
//! ```text
//! x_i(t+1) = M_i( (1/|N_i(t)|) * sum_{j in N_i(t)} x_j(t) )
//! ```
//!
//! When every graph in the sequence is strongly connected and the maps share
//! at least one common fixed point, all estimates converge to a common fixed
//! point. This crate provides:
//!
//! * [`linalg`] — dense vectors, stacked block states, row-stochastic
//!   matrices, p-norms and the mixed `(p, inf)` norm;
//! * [`graphs`] — directed neighbor graphs, strong-connectivity tests,
//!   flocking matrices `F = D^-1 A'`, seeded graph-sequence generators and
//!   window-positivity checks for flocking-matrix products;
//! * [`maps`] — an operator catalog (affine least-squares, convex
//!   projections, gradient steps, proximal maps) plus a sampling-based
//!   paracontraction property checker;
//! * [`engine`] — the stacked synchronous iteration, a sequential
//!   single-state baseline, and per-iteration trace recording;
//! * [`simnet`] — a per-agent message-passing simulation of the same
//!   algorithm, bit-identical to the stacked engine by construction;
//! * [`diagnostics`] — executable checks for the convergence machinery
//!   (stochastic nonexpansion, window contraction, fixed-point
//!   classification, trace monotonicity);
//! * [`scenario`] — JSON scenario configs, the experiment harness and its
//!   CSV/JSON output bundle (driven by the `parafix` binary).
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `cargo run --example solve_linear_system`.

pub mod diagnostics;
pub mod engine;
pub mod graphs;
pub mod linalg;
pub mod maps;
mod rng;
pub mod scenario;
pub mod simnet;

pub use engine::{DistributedProblem, RunResult, SequentialSchedule, TraceRecord};
pub use graphs::{GraphSequence, NeighborGraph};
pub use linalg::{NormOrder, StackedState, StochasticMatrix, VecN};
pub use maps::{
    AffineLeastSquares, ConvexProjection, GradientStep, LinearMap, Paracontraction, Proximal,
};
