//! Scenario ingestion, experiment execution, and trace/report emission:
//! the machinery behind the `parafix` binary.
//!
//! A scenario is a JSON file naming the agent count, the map descriptors,
//! the graph (literal arcs or a seeded generator), the initial state and
//! the run parameters. `load_config` validates everything before any run;
//! `run_scenario` executes the selected engine(s), runs the applicable
//! diagnostics checks and writes the output bundle (trace CSV, result
//! JSON, config echo) atomically. Identical configs and seeds produce
//! byte-identical bundles; nothing time-dependent is written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{self, CheckReport};
use crate::engine::{self, DistributedProblem, EngineError, RunResult};
use crate::graphs::{GraphSequence, NeighborGraph};
use crate::linalg::{NormOrder, StackedState, VecN};
use crate::maps::{
    check_paracontraction, AffineLeastSquares, ConvexProjection, GradientStep, LinearMap,
    Paracontraction, Proximal,
};
use crate::rng::{derive_seed, seeded_rng};
use crate::simnet::{self, SimnetError};

pub const TRACE_HEADER: &str = "t,disagreement,residual,lyapunov";
/// Samples per map for the paracontraction prechecks and `check` runs.
const CHECK_SAMPLES: usize = 200;
/// Trials for the window-level diagnostics in harness runs.
const WINDOW_TRIALS: usize = 100;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn bad(field: impl Into<String>, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("run failed: {0}")]
    Engine(#[from] EngineError),
    #[error("run failed: {0}")]
    Simnet(#[from] SimnetError),
    #[error("check failed to execute: {0}")]
    Check(#[from] diagnostics::CheckError),
    #[error(
        "map {index} ({description}) failed its paracontraction check: \
         {violations} violations over {samples} samples (worst margin {worst:+.3e})"
    )]
    UnverifiedMapRejected {
        index: usize,
        description: String,
        violations: usize,
        samples: usize,
        worst: f64,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

/// Map descriptors expressible in scenario files. All catalog types carry
/// their guarantees; `linear` is the escape hatch for custom maps and is
/// checked for the paracontraction property before any experiment runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapDescriptor {
    /// `x -> x - A'(AA')^-1(Ax - b)`; fixed points solve Ax = b.
    Affine { a: Vec<Vec<f64>>, b: Vec<f64> },
    /// Projection onto `[lower, upper]`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Projection onto the Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Projection onto `{x : <normal, x> <= offset}`.
    Halfspace { normal: Vec<f64>, offset: f64 },
    /// Projection onto `{x : Ax = b}`.
    Subspace { a: Vec<Vec<f64>>, b: Vec<f64> },
    /// Gradient step on the diagonal quadratic with the given weights and
    /// center; `alpha` defaults to `1 / max(weights)`.
    GradientQuadratic {
        weights: Vec<f64>,
        center: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    /// Soft-thresholding with the given weight (proximal map of `w||.||_1`).
    ProxL1 { weight: f64 },
    /// `x -> Gx` (unverified custom map; must pass the property check).
    Linear { matrix: Vec<Vec<f64>> },
}

impl MapDescriptor {
    /// One (type, parameters, guarantee) row per descriptor for `list-maps`.
    pub fn catalog() -> Vec<[&'static str; 3]> {
        vec![
            ["affine", "a: rows, b: vector", "verified; fixed points solve Ax = b"],
            ["box", "lower, upper: vectors", "verified; projection onto a box"],
            ["ball", "center: vector, radius", "verified; projection onto a ball"],
            ["halfspace", "normal: vector, offset", "verified; projection onto <a,x> <= c"],
            ["subspace", "a: rows, b: vector", "verified; projection onto Ax = b"],
            [
                "gradient-quadratic",
                "weights, center: vectors, alpha?",
                "verified; gradient step on a diagonal quadratic",
            ],
            ["prox-l1", "weight", "verified; soft-thresholding"],
            [
                "linear",
                "matrix: rows",
                "UNVERIFIED; checked for the paracontraction property before runs",
            ],
        ]
    }

    fn build(&self, n: usize, field: &str) -> Result<Arc<dyn Paracontraction>, ConfigError> {
        let map: Arc<dyn Paracontraction> = match self {
            MapDescriptor::Affine { a, b } => Arc::new(
                AffineLeastSquares::new(a.clone(), b.clone()).map_err(|e| bad(field, e))?,
            ),
            MapDescriptor::Box { lower, upper } => Arc::new(
                ConvexProjection::new_box(lower.clone(), upper.clone())
                    .map_err(|e| bad(field, e))?,
            ),
            MapDescriptor::Ball { center, radius } => Arc::new(
                ConvexProjection::new_ball(center.clone(), *radius).map_err(|e| bad(field, e))?,
            ),
            MapDescriptor::Halfspace { normal, offset } => Arc::new(
                ConvexProjection::new_halfspace(normal.clone(), *offset)
                    .map_err(|e| bad(field, e))?,
            ),
            MapDescriptor::Subspace { a, b } => Arc::new(
                ConvexProjection::new_affine_subspace(a.clone(), b.clone())
                    .map_err(|e| bad(field, e))?,
            ),
            MapDescriptor::GradientQuadratic {
                weights,
                center,
                alpha,
            } => Arc::new(
                GradientStep::quadratic(weights.clone(), center.clone(), *alpha)
                    .map_err(|e| bad(field, e))?,
            ),
            MapDescriptor::ProxL1 { weight } => {
                Arc::new(Proximal::l1(n, *weight).map_err(|e| bad(field, e))?)
            }
            MapDescriptor::Linear { matrix } => {
                Arc::new(LinearMap::new(matrix.clone()).map_err(|e| bad(field, e))?)
            }
        };
        if map.dim() != n {
            return Err(bad(
                field,
                format!("map has dimension {}, scenario n = {n}", map.dim()),
            ));
        }
        Ok(map)
    }

    /// Largest `|<a_i, x> - b_i|` over the descriptor's rows, for affine
    /// kinds; `None` otherwise.
    fn linear_residual_inf(&self, x: &VecN) -> Option<f64> {
        let (a, b) = match self {
            MapDescriptor::Affine { a, b } | MapDescriptor::Subspace { a, b } => (a, b),
            _ => return None,
        };
        Some(
            a.iter()
                .zip(b)
                .map(|(row, bi)| {
                    let dot: f64 = row.iter().zip(x.entries()).map(|(r, v)| r * v).sum();
                    (dot - bi).abs()
                })
                .fold(0.0, f64::max),
        )
    }
}

/// Graph descriptors: literal arc lists (`[j, i]` pairs, 0-based, self-arcs
/// included) or a seeded random generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphDescriptor {
    Static { arcs: Vec<[usize; 2]> },
    Periodic { graphs: Vec<Vec<[usize; 2]>> },
    Random { density: f64, seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomInit {
    pub seed: u64,
    pub radius: f64,
}

/// Initial estimates: explicit blocks, or coordinates drawn uniformly from
/// `[-radius, radius]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum InitialStateDescriptor {
    Blocks(Vec<Vec<f64>>),
    Random { random: RandomInit },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EngineSelector {
    #[default]
    Stacked,
    Simnet,
    Both,
}

fn default_p() -> f64 {
    2.0
}

fn default_tol() -> f64 {
    engine::DEFAULT_TOL
}

fn default_max_iters() -> usize {
    engine::DEFAULT_MAX_ITERS
}

/// One experiment, fully described. Unknown fields are rejected so typos
/// surface at validation time.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub m: usize,
    pub n: usize,
    pub maps: Vec<MapDescriptor>,
    pub graph: GraphDescriptor,
    #[serde(default = "default_p")]
    pub p: f64,
    pub x0: InitialStateDescriptor,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_star: Option<Vec<f64>>,
    #[serde(default)]
    pub engine: EngineSelector,
    /// Master seed: when set (or overridden by `--seed`), the graph and x0
    /// generator seeds are derived from it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Declared runtime budget for the bundled-scenario tests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_ms: Option<u64>,
}

// ---------------------------------------------------------------------------
// Building and validation
// ---------------------------------------------------------------------------

/// A validated scenario: the problem plus the echo config with every
/// default and seed resolved (replaying the echo reproduces the run).
#[derive(Debug)]
pub struct BuiltScenario {
    pub problem: DistributedProblem,
    pub resolved: ScenarioConfig,
    pub unverified: Vec<usize>,
    /// Base seed for the harness's internal sampling (diagnostics trials).
    pub check_seed: u64,
}

fn arcs_to_graph(m: usize, arcs: &[[usize; 2]], field: &str) -> Result<NeighborGraph, ConfigError> {
    let pairs: Vec<(usize, usize)> = arcs.iter().map(|a| (a[0], a[1])).collect();
    NeighborGraph::new(m, &pairs).map_err(|e| bad(field, e))
}

pub fn build_scenario(
    config: &ScenarioConfig,
    seed_override: Option<u64>,
) -> Result<BuiltScenario, ConfigError> {
    if config.m == 0 {
        return Err(bad("m", "need at least one agent"));
    }
    if config.n == 0 {
        return Err(bad("n", "state dimension must be at least 1"));
    }
    if config.maps.len() != config.m {
        return Err(bad(
            "maps",
            format!("{} descriptors for m = {} agents", config.maps.len(), config.m),
        ));
    }
    let p = NormOrder::new(config.p).map_err(|e| bad("p", e))?;
    if !(config.tol > 0.0 && config.tol.is_finite()) {
        return Err(bad("tol", format!("must be positive, got {}", config.tol)));
    }

    let mut resolved = config.clone();
    let master = seed_override.or(config.seed);
    resolved.seed = master;

    // Maps.
    let maps: Vec<Arc<dyn Paracontraction>> = config
        .maps
        .iter()
        .enumerate()
        .map(|(i, d)| d.build(config.n, &format!("maps[{i}]")))
        .collect::<Result<_, _>>()?;
    let unverified: Vec<usize> = maps
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_verified())
        .map(|(i, _)| i)
        .collect();

    // Graph sequence (master seed, when present, re-seeds the generator).
    let graph_seq = match &config.graph {
        GraphDescriptor::Static { arcs } => {
            let g = arcs_to_graph(config.m, arcs, "graph")?;
            GraphSequence::static_graph(g).map_err(|e| bad("graph", e))?
        }
        GraphDescriptor::Periodic { graphs } => {
            let gs: Vec<NeighborGraph> = graphs
                .iter()
                .enumerate()
                .map(|(k, arcs)| arcs_to_graph(config.m, arcs, &format!("graph.graphs[{k}]")))
                .collect::<Result<_, _>>()?;
            GraphSequence::periodic(gs).map_err(|e| bad("graph", e))?
        }
        GraphDescriptor::Random { density, seed } => {
            let resolved_seed = master.map(|s| derive_seed(s, 1)).unwrap_or(*seed);
            resolved.graph = GraphDescriptor::Random {
                density: *density,
                seed: resolved_seed,
            };
            let seq = GraphSequence::seeded_random(config.m, *density, resolved_seed)
                .map_err(|e| bad("graph", e))?;
            // Probe the first index so hopeless densities fail at validation.
            seq.graph_at(1).map_err(|e| bad("graph", e))?;
            seq
        }
    };

    // Initial state.
    let x0 = match &config.x0 {
        InitialStateDescriptor::Blocks(blocks) => {
            if blocks.len() != config.m {
                return Err(bad(
                    "x0",
                    format!("{} blocks for m = {}", blocks.len(), config.m),
                ));
            }
            let vecs: Vec<VecN> = blocks
                .iter()
                .map(|b| {
                    if b.len() != config.n {
                        return Err(bad(
                            "x0",
                            format!("block has dimension {}, expected {}", b.len(), config.n),
                        ));
                    }
                    VecN::new(b.clone()).map_err(|e| bad("x0", e))
                })
                .collect::<Result<_, _>>()?;
            StackedState::new(vecs).map_err(|e| bad("x0", e))?
        }
        InitialStateDescriptor::Random { random } => {
            if !(random.radius > 0.0 && random.radius.is_finite()) {
                return Err(bad(
                    "x0",
                    format!("random radius must be positive, got {}", random.radius),
                ));
            }
            let resolved_seed = master.map(|s| derive_seed(s, 2)).unwrap_or(random.seed);
            resolved.x0 = InitialStateDescriptor::Random {
                random: RandomInit {
                    seed: resolved_seed,
                    radius: random.radius,
                },
            };
            random_initial_state(config.m, config.n, resolved_seed, random.radius)
        }
    };

    // Optional reference fixed point.
    let y_star = match &config.y_star {
        None => None,
        Some(raw) => {
            if raw.len() != config.n {
                return Err(bad(
                    "y_star",
                    format!("dimension {} for n = {}", raw.len(), config.n),
                ));
            }
            Some(VecN::new(raw.clone()).map_err(|e| bad("y_star", e))?)
        }
    };

    let problem = DistributedProblem::new(maps, graph_seq, p, x0, y_star)
        .map_err(|e| bad("maps", e))?;
    Ok(BuiltScenario {
        problem,
        resolved,
        unverified,
        check_seed: master.unwrap_or(0),
    })
}

/// Coordinates uniform in `[-radius, radius)`, agent-major order.
fn random_initial_state(m: usize, n: usize, seed: u64, radius: f64) -> StackedState {
    use rand::Rng;
    let mut rng = seeded_rng(seed);
    StackedState::new(
        (0..m)
            .map(|_| {
                VecN::new((0..n).map(|_| rng.gen_range(-radius..radius)).collect())
                    .expect("draws are finite")
            })
            .collect(),
    )
    .expect("blocks share the dimension")
}

/// Reads and fully validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config: ScenarioConfig = serde_json::from_str(&text)?;
    build_scenario(&config, None)?;
    Ok(config)
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
    /// Sweeps disable per-run bundles and write only the summary.
    pub skip_outputs: bool,
}

/// The result JSON payload.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioResult {
    pub converged: bool,
    pub iterations_used: usize,
    pub final_blocks: Vec<Vec<f64>>,
    pub final_disagreement: f64,
    pub final_residual: f64,
    /// `max_i ||A_i xhat - b_i||_inf` over affine/subspace maps, evaluated
    /// at agent 0's final estimate; absent when no such map is configured.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear_residual_inf: Option<f64>,
    /// Present when both engines ran: "identical" or the first divergence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<String>,
    pub checks: Vec<CheckReport>,
}

#[derive(Debug)]
pub struct ScenarioOutcome {
    pub result: ScenarioResult,
    pub run: RunResult,
    pub out_dir: Option<PathBuf>,
    pub all_checks_passed: bool,
}

fn first_divergence(a: &RunResult, b: &RunResult) -> Option<String> {
    if a.trace.len() != b.trace.len() {
        return Some(format!(
            "trace lengths differ ({} vs {})",
            a.trace.len(),
            b.trace.len()
        ));
    }
    for (ra, rb) in a.trace.iter().zip(&b.trace) {
        let same = ra.t == rb.t
            && ra.disagreement.to_bits() == rb.disagreement.to_bits()
            && ra.residual.to_bits() == rb.residual.to_bits()
            && ra.lyapunov.map(f64::to_bits) == rb.lyapunov.map(f64::to_bits);
        if !same {
            return Some(format!("diverged at t={}", ra.t));
        }
    }
    for (ba, bb) in a.final_state.blocks().iter().zip(b.final_state.blocks()) {
        for (xa, xb) in ba.entries().iter().zip(bb.entries()) {
            if xa.to_bits() != xb.to_bits() {
                return Some("final states differ".into());
            }
        }
    }
    None
}

/// Unverified maps must pass the paracontraction sampler before any
/// experiment runs; a failure is the exit-code-3 path. The passing reports
/// are not collected here: the diagnostics suite re-runs the same seeded
/// checks and reports them once.
fn precheck_unverified(built: &BuiltScenario) -> Result<(), HarnessError> {
    for &index in &built.unverified {
        let map = built.problem.map(index);
        let y = map
            .known_fixed_point()
            .expect("every catalog and linear map knows a fixed point");
        let report = check_paracontraction(
            map,
            &y,
            CHECK_SAMPLES,
            built.problem.norm_order(),
            derive_seed(built.check_seed, 0xA0 + index as u64),
        )
        .map_err(diagnostics::CheckError::Map)?;
        if report.violations > 0 {
            return Err(HarnessError::UnverifiedMapRejected {
                index,
                description: map.describe(),
                violations: report.violations,
                samples: report.samples_tested,
                worst: report.worst_margin.unwrap_or(f64::INFINITY),
            });
        }
    }
    Ok(())
}

/// The diagnostics applicable without (or alongside) a run: per-map
/// paracontraction sampling, stochastic nonexpansion of the first flocking
/// matrix, window positivity, and the window-level checks when a reference
/// fixed point is configured.
fn diagnostics_suite(built: &BuiltScenario) -> Result<Vec<CheckReport>, HarnessError> {
    let problem = &built.problem;
    let p = problem.norm_order();
    let mut reports = Vec::new();

    for (index, map) in problem.maps().iter().enumerate() {
        let Some(y) = map.known_fixed_point() else {
            continue;
        };
        let report = check_paracontraction(
            map.as_ref(),
            &y,
            CHECK_SAMPLES,
            p,
            derive_seed(built.check_seed, 0xA0 + index as u64),
        )
        .map_err(diagnostics::CheckError::Map)?;
        let passed = report.violations == 0;
        // JSON has no infinities; a diverging map's margin is clamped.
        let worst = report.worst_margin.unwrap_or(0.0).clamp(f64::MIN, f64::MAX);
        reports.push(CheckReport {
            name: format!("paracontraction-map-{index}"),
            passed,
            worst_violation: worst,
            witness: (!passed).then(|| serde_json::json!({ "map": map.describe() })),
        });
    }

    let f1 = problem
        .graph_sequence()
        .graph_at(1)
        .map_err(EngineError::Graph)?
        .flocking_matrix();
    reports.push(diagnostics::check_stochastic_nonexpansion(
        &f1,
        CHECK_SAMPLES,
        derive_seed(built.check_seed, 0xB0),
        p,
    ));

    let m = problem.agent_count();
    let mut window_positive = true;
    if m >= 2 {
        let q = m - 1;
        let product = problem
            .graph_sequence()
            .window_product(1, q)
            .map_err(EngineError::Graph)?;
        let min_entry = product.min_entry();
        window_positive = product.is_positive(0.0);
        reports.push(CheckReport {
            name: "window-positivity".into(),
            passed: window_positive,
            worst_violation: if window_positive {
                0.0
            } else {
                (-min_entry).max(f64::MIN_POSITIVE)
            },
            witness: (!window_positive)
                .then(|| serde_json::json!({ "q": q, "min_entry": min_entry })),
        });
    }

    // A supplied reference point must actually be a common fixed point; a
    // bad one is a failed check, not a run failure, and the window-level
    // checks that depend on it are skipped.
    if let Some(y) = problem.reference_fixed_point() {
        let mut worst_defect = 0.0f64;
        for (index, map) in problem.maps().iter().enumerate() {
            let defect = map
                .apply(y)
                .map_err(|source| EngineError::Map { index, source })?
                .sub(y)
                .p_norm(p);
            worst_defect = worst_defect.max(defect);
        }
        let reference_ok = worst_defect <= crate::maps::FIXED_POINT_TOL;
        reports.push(CheckReport {
            name: "reference-point-fixed".into(),
            passed: reference_ok,
            worst_violation: worst_defect,
            witness: (!reference_ok).then(|| serde_json::json!({ "worst_defect": worst_defect })),
        });
        if reference_ok && window_positive && m >= 2 {
            let q = m - 1;
            reports.push(diagnostics::check_window_fixed_points(
                problem,
                q,
                WINDOW_TRIALS,
                derive_seed(built.check_seed, 0xC0),
            )?);
            reports.push(diagnostics::check_window_contraction(
                problem,
                q,
                WINDOW_TRIALS,
                derive_seed(built.check_seed, 0xC1),
            )?);
        }
    }
    Ok(reports)
}

/// `check` subcommand: the diagnostics suite only, no full run.
pub fn check_scenario(
    config: &ScenarioConfig,
    opts: &RunOptions,
) -> Result<Vec<CheckReport>, HarnessError> {
    let built = build_scenario(config, opts.seed)?;
    diagnostics_suite(&built)
}

/// Executes a scenario end to end: prechecks, engine run(s), diagnostics,
/// output bundle.
pub fn run_scenario(
    config: &ScenarioConfig,
    opts: &RunOptions,
) -> Result<ScenarioOutcome, HarnessError> {
    let built = build_scenario(config, opts.seed)?;
    let problem = &built.problem;

    let mut checks = Vec::new();
    precheck_unverified(&built)?;

    let resolved = &built.resolved;
    let (run, equivalence) = match resolved.engine {
        EngineSelector::Stacked => (engine::run(problem, resolved.tol, resolved.max_iters)?, None),
        EngineSelector::Simnet => (
            simnet::run_simnet(problem, resolved.tol, resolved.max_iters)?,
            None,
        ),
        EngineSelector::Both => {
            let stacked = engine::run(problem, resolved.tol, resolved.max_iters)?;
            let messaged = simnet::run_simnet(problem, resolved.tol, resolved.max_iters)?;
            let verdict = first_divergence(&stacked, &messaged)
                .unwrap_or_else(|| "identical".to_string());
            (stacked, Some(verdict))
        }
    };

    checks.extend(diagnostics_suite(&built)?);
    // The Lyapunov column exists iff y_star was configured.
    if problem.reference_fixed_point().is_some() {
        checks.push(diagnostics::check_monotone_trace(&run)?);
    }

    let final_record = run.trace.last().expect("trace always has the initial row");
    let xhat = run.final_state.block(0);
    let linear_residual_inf = resolved
        .maps
        .iter()
        .filter_map(|d| d.linear_residual_inf(xhat))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));

    let result = ScenarioResult {
        converged: run.converged,
        iterations_used: run.iterations_used,
        final_blocks: run
            .final_state
            .blocks()
            .iter()
            .map(|b| b.entries().to_vec())
            .collect(),
        final_disagreement: final_record.disagreement,
        final_residual: final_record.residual,
        linear_residual_inf,
        equivalence,
        checks,
    };
    let all_checks_passed = result.checks.iter().all(|c| c.passed);

    let out_dir = if opts.skip_outputs {
        None
    } else {
        let dir = opts
            .out_dir
            .clone()
            .or_else(|| resolved.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        write_bundle(&dir, resolved, &run, &result)?;
        Some(dir)
    };

    Ok(ScenarioOutcome {
        result,
        run,
        out_dir,
        all_checks_passed,
    })
}

// ---------------------------------------------------------------------------
// Output bundle
// ---------------------------------------------------------------------------

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|source| HarnessError::Io {
        path: tmp.clone(),
        source,
    })?;
    fs::rename(&tmp, path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// CSV with the fixed column order `t,disagreement,residual,lyapunov`; the
/// lyapunov cell is empty when no reference fixed point was configured.
pub fn trace_to_csv(run: &RunResult) -> String {
    let mut out = String::with_capacity(32 * (run.trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &run.trace {
        match r.lyapunov {
            Some(l) => {
                let _ = writeln!(out, "{},{},{},{}", r.t, r.disagreement, r.residual, l);
            }
            None => {
                let _ = writeln!(out, "{},{},{},", r.t, r.disagreement, r.residual);
            }
        }
    }
    out
}

fn write_bundle(
    dir: &Path,
    resolved: &ScenarioConfig,
    run: &RunResult,
    result: &ScenarioResult,
) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write_atomic(&dir.join("trace.csv"), trace_to_csv(run).as_bytes())?;
    let result_json =
        serde_json::to_string_pretty(result).expect("result serializes") + "\n";
    write_atomic(&dir.join("result.json"), result_json.as_bytes())?;
    let config_json =
        serde_json::to_string_pretty(resolved).expect("config serializes") + "\n";
    write_atomic(&dir.join("config.json"), config_json.as_bytes())?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub converged: bool,
    pub iterations_used: usize,
    pub final_disagreement: f64,
    pub final_residual: f64,
    pub checks_passed: bool,
}

pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    pub all_checks_passed: bool,
    pub csv_path: Option<PathBuf>,
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("seed,converged,iterations_used,final_disagreement,final_residual,checks_passed\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.seed, r.converged, r.iterations_used, r.final_disagreement, r.final_residual, r.checks_passed
        );
    }
    out
}

/// Repeats the scenario once per seed (each run independent and
/// deterministic) and writes `sweep.csv` into the output directory.
pub fn sweep_scenario(
    config: &ScenarioConfig,
    seeds: impl IntoIterator<Item = u64>,
    opts: &RunOptions,
) -> Result<SweepSummary, HarnessError> {
    let mut rows = Vec::new();
    for seed in seeds {
        let run_opts = RunOptions {
            out_dir: None,
            seed: Some(seed),
            quiet: true,
            skip_outputs: true,
        };
        let outcome = run_scenario(config, &run_opts)?;
        rows.push(SweepRow {
            seed,
            converged: outcome.result.converged,
            iterations_used: outcome.result.iterations_used,
            final_disagreement: outcome.result.final_disagreement,
            final_residual: outcome.result.final_residual,
            checks_passed: outcome.all_checks_passed,
        });
    }
    let all_checks_passed = rows.iter().all(|r| r.checks_passed);
    let csv_path = match &opts.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
                path: dir.clone(),
                source,
            })?;
            let path = dir.join("sweep.csv");
            write_atomic(&path, sweep_to_csv(&rows).as_bytes())?;
            Some(path)
        }
        None => None,
    };
    Ok(SweepSummary {
        rows,
        all_checks_passed,
        csv_path,
    })
}
