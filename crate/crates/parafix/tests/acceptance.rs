//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (visible under `cargo test -p parafix --test acceptance -- --nocapture`).
//!
//! The criteria pin the tolerances in code; nothing is left to later
//! calibration. Everything is seeded, so the suite is deterministic.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use parafix::diagnostics::{
    check_monotone_trace, check_window_fixed_points, check_window_contraction,
};
use parafix::engine::{self, DistributedProblem, RunResult, SequentialSchedule};
use parafix::graphs::{GraphSequence, NeighborGraph};
use parafix::linalg::{NormOrder, StackedState, StochasticMatrix, VecN};
use parafix::maps::{
    check_paracontraction, AffineLeastSquares, ConvexProjection, LinearMap, Paracontraction,
    Proximal,
};
use parafix::scenario::{self, ScenarioConfig};
use parafix::simnet;

// ---------------------------------------------------------------------------
// Support: seeded draws and an independent dense solver
// ---------------------------------------------------------------------------

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn derive(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn gauss_vec(rng: &mut ChaCha8Rng, n: usize) -> VecN {
    VecN::new((0..n).map(|_| gauss(rng)).collect()).unwrap()
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> VecN {
    VecN::new((0..n).map(|_| rng.gen_range(-radius..radius)).collect()).unwrap()
}

fn p2() -> NormOrder {
    NormOrder::euclidean()
}

/// Gaussian elimination with partial pivoting.
fn gepp(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = m[row][col] / m[col][col];
            let (upper, lower) = m.split_at_mut(row);
            for (k, entry) in lower[0].iter_mut().enumerate().skip(col) {
                *entry -= factor * upper[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for k in (row + 1)..n {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    x
}

/// GEPP plus two rounds of iterative refinement: the reference solution has
/// a residual at roundoff level, so it serves as the Lyapunov anchor.
fn solve_refined(a: &[Vec<f64>], b: &[f64]) -> VecN {
    let n = b.len();
    let mut x = gepp(a, b);
    for _ in 0..2 {
        let residual: Vec<f64> = (0..n)
            .map(|i| {
                let ax: f64 = a[i].iter().zip(&x).map(|(c, v)| c * v).sum();
                b[i] - ax
            })
            .collect();
        let correction = gepp(a, &residual);
        for (xi, ci) in x.iter_mut().zip(&correction) {
            *xi += ci;
        }
    }
    VecN::new(x).unwrap()
}

fn residual_inf(a: &[Vec<f64>], b: &[f64], x: &VecN) -> f64 {
    a.iter()
        .zip(b)
        .map(|(row, bi)| {
            let ax: f64 = row.iter().zip(x.entries()).map(|(c, v)| c * v).sum();
            (ax - bi).abs()
        })
        .fold(0.0, f64::max)
}

struct LinearSystem {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    solution: VecN,
}

/// Random strictly diagonally dominant (hence invertible, well-conditioned)
/// 4x4 system with a known right-hand side.
fn linear_system(seed: u64) -> LinearSystem {
    let n = 4;
    let mut r = rng(derive(seed, 1));
    let mut a = vec![vec![0.0; n]; n];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = if i == j {
                4.0 + r.gen::<f64>()
            } else {
                r.gen_range(-1.0..1.0)
            };
        }
    }
    let x_true = uniform_vec(&mut r, n, 5.0);
    let b: Vec<f64> = a
        .iter()
        .map(|row| row.iter().zip(x_true.entries()).map(|(c, v)| c * v).sum())
        .collect();
    let solution = solve_refined(&a, &b);
    LinearSystem { a, b, solution }
}

fn row_maps(system: &LinearSystem) -> Vec<Arc<dyn Paracontraction>> {
    system
        .a
        .iter()
        .zip(&system.b)
        .map(|(row, bi)| {
            Arc::new(AffineLeastSquares::new(vec![row.clone()], vec![*bi]).unwrap())
                as Arc<dyn Paracontraction>
        })
        .collect()
}

/// Criterion-1 setup: 4 agents, one row each, static complete or
/// per-iteration random strongly connected graphs.
fn criterion1_setup(seed: u64, random_graphs: bool) -> (DistributedProblem, LinearSystem) {
    let system = linear_system(seed);
    let maps = row_maps(&system);
    let graph_seq = if random_graphs {
        GraphSequence::seeded_random(4, 0.5, derive(seed, 2)).unwrap()
    } else {
        GraphSequence::static_graph(NeighborGraph::complete(4)).unwrap()
    };
    let mut r = rng(derive(seed, 3));
    let x0 = StackedState::new((0..4).map(|_| uniform_vec(&mut r, 4, 10.0)).collect()).unwrap();
    let problem = DistributedProblem::new(
        maps,
        graph_seq,
        p2(),
        x0,
        Some(system.solution.clone()),
    )
    .unwrap();
    (problem, system)
}

/// Criterion-2 setup: box, halfspace and affine least-squares maps whose
/// fixed-point sets all contain (1, 1).
fn criterion2_setup(seed: u64) -> (DistributedProblem, Vec<Arc<dyn Paracontraction>>) {
    let maps: Vec<Arc<dyn Paracontraction>> = vec![
        Arc::new(ConvexProjection::new_box(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap()),
        Arc::new(ConvexProjection::new_halfspace(vec![1.0, 1.0], 3.0).unwrap()),
        Arc::new(AffineLeastSquares::new(vec![vec![1.0, -1.0]], vec![0.0]).unwrap()),
    ];
    let graph_seq = GraphSequence::seeded_random(3, 0.6, derive(seed, 4)).unwrap();
    let mut r = rng(derive(seed, 5));
    let x0 = StackedState::new((0..3).map(|_| uniform_vec(&mut r, 2, 10.0)).collect()).unwrap();
    let problem = DistributedProblem::new(
        maps.clone(),
        graph_seq,
        p2(),
        x0,
        Some(VecN::new(vec![1.0, 1.0]).unwrap()),
    )
    .unwrap();
    (problem, maps)
}

/// A random catalog map whose fixed-point set contains `y`.
fn random_shared_map(r: &mut ChaCha8Rng, y: &VecN) -> Arc<dyn Paracontraction> {
    let n = y.dim();
    match r.gen_range(0..5) {
        0 => {
            let mut row = gauss_vec(r, n);
            while row.p_norm(p2()) < 0.1 {
                row = gauss_vec(r, n);
            }
            let b = row.dot(y);
            Arc::new(AffineLeastSquares::new(vec![row.entries().to_vec()], vec![b]).unwrap())
        }
        1 => {
            let lower: Vec<f64> = y
                .entries()
                .iter()
                .map(|v| v - 0.5 - gauss(r).abs())
                .collect();
            let upper: Vec<f64> = y
                .entries()
                .iter()
                .map(|v| v + 0.5 + gauss(r).abs())
                .collect();
            Arc::new(ConvexProjection::new_box(lower, upper).unwrap())
        }
        2 => {
            let center = y.add(&gauss_vec(r, n).scale(0.3));
            let radius = center.sub(y).p_norm(p2()) + 0.5 + r.gen::<f64>();
            Arc::new(ConvexProjection::new_ball(center.entries().to_vec(), radius).unwrap())
        }
        3 => {
            let mut normal = gauss_vec(r, n);
            while normal.p_norm(p2()) < 0.1 {
                normal = gauss_vec(r, n);
            }
            let offset = normal.dot(y) + 0.5 + r.gen::<f64>();
            Arc::new(ConvexProjection::new_halfspace(normal.entries().to_vec(), offset).unwrap())
        }
        _ => Arc::new(Proximal::quadratic(y.entries().to_vec(), 0.5 + r.gen::<f64>()).unwrap()),
    }
}

fn report(criterion: &str, ok: bool) {
    println!(
        "acceptance {criterion}: {}",
        if ok { "PASS" } else { "FAIL" }
    );
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion1_distributed_linear_equations() {
    let mut failures = Vec::new();
    for seed in 0..20u64 {
        for random_graphs in [false, true] {
            let (problem, system) = criterion1_setup(seed, random_graphs);
            let started = Instant::now();
            let result = engine::run(&problem, 1e-8, 100_000).unwrap();
            let wall = started.elapsed();
            let last = result.trace.last().unwrap();
            let resid = residual_inf(&system.a, &system.b, result.final_state.block(0));
            if !result.converged {
                failures.push(format!("seed {seed} random={random_graphs}: not converged"));
            }
            if last.disagreement > 1e-8 {
                failures.push(format!(
                    "seed {seed} random={random_graphs}: disagreement {}",
                    last.disagreement
                ));
            }
            if resid > 1e-6 {
                failures.push(format!(
                    "seed {seed} random={random_graphs}: |Ax-b|_inf {resid}"
                ));
            }
            if wall > Duration::from_secs(5) {
                failures.push(format!("seed {seed} random={random_graphs}: wall {wall:?}"));
            }
        }
    }
    let ok = failures.is_empty();
    report(
        "1 (distributed linear equations, 20 seeds x {static, random} graphs)",
        ok,
    );
    assert!(ok, "{failures:#?}");
}

#[test]
fn criterion2_heterogeneous_operators() {
    let mut failures = Vec::new();
    for seed in 0..20u64 {
        let (problem, maps) = criterion2_setup(seed);
        let result = engine::run(&problem, 1e-9, 100_000).unwrap();
        if !result.converged {
            failures.push(format!("seed {seed}: not converged"));
            continue;
        }
        for (agent, block) in result.final_state.blocks().iter().enumerate() {
            for (k, map) in maps.iter().enumerate() {
                let defect = map.apply(block).unwrap().sub(block).p_norm(p2());
                if defect > 1e-8 {
                    failures.push(format!(
                        "seed {seed}: agent {agent} fails map {k} membership by {defect}"
                    ));
                }
            }
        }
    }
    let ok = failures.is_empty();
    report("2 (heterogeneous operators, 20 seeds, membership per map)", ok);
    assert!(ok, "{failures:#?}");
}

#[test]
fn criterion3_fejer_monotonicity() {
    let mut runs: Vec<RunResult> = Vec::new();
    for seed in 0..20u64 {
        for random_graphs in [false, true] {
            let (problem, _) = criterion1_setup(seed, random_graphs);
            runs.push(engine::run(&problem, 1e-8, 100_000).unwrap());
        }
        let (problem, _) = criterion2_setup(seed);
        runs.push(engine::run(&problem, 1e-9, 100_000).unwrap());
    }
    let total_iterations: usize = runs.iter().map(|r| r.trace.len() - 1).sum();
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for run in &runs {
        let report = check_monotone_trace(run).unwrap();
        worst = worst.max(report.worst_violation);
        if !report.passed {
            violations += 1;
        }
    }
    let ok = violations == 0 && total_iterations >= 2000;
    report(
        "3 (Fejer monotonicity across criteria 1-2 runs, slack 1e-12)",
        ok,
    );
    assert!(
        ok,
        "violating runs {violations}, total iterations {total_iterations}, worst increase {worst:e}"
    );
}

#[test]
fn criterion4_window_positivity() {
    let mut failures = Vec::new();
    // 100 static windows: the product of m-1 identical flocking matrices.
    for case in 0..100u64 {
        let m = 2 + (case % 7) as usize;
        let seq = GraphSequence::seeded_random(m, 0.4, derive(case, 6)).unwrap();
        let graph = seq.graph_at(1).unwrap();
        assert!(graph.is_strongly_connected());
        let static_seq = GraphSequence::static_graph(graph).unwrap();
        if !static_seq
            .composition_window_positive(1, m - 1, 0.0)
            .unwrap()
        {
            failures.push(format!("static case {case} (m={m}) not positive"));
        }
    }
    // 100 time-varying windows with varying start offsets.
    for case in 0..100u64 {
        let m = 2 + (case % 7) as usize;
        let seq = GraphSequence::seeded_random(m, 0.4, derive(case, 7)).unwrap();
        let start = 1 + (case % 5) as usize;
        if !seq.composition_window_positive(start, m - 1, 0.0).unwrap() {
            failures.push(format!("time-varying case {case} (m={m}, start={start})"));
        }
    }
    let ok = failures.is_empty();
    report(
        "4 (window positivity, 100 static + 100 time-varying windows, m in 2..=8)",
        ok,
    );
    assert!(ok, "{failures:#?}");
}

#[test]
fn criterion5_window_fixed_points_and_contraction() {
    let mut failures = Vec::new();
    for seed in 0..50u64 {
        let mut r = rng(derive(seed, 8));
        let m = r.gen_range(2..=4usize);
        let n = r.gen_range(1..=3usize);
        let y = gauss_vec(&mut r, n).scale(2.0);
        let maps: Vec<Arc<dyn Paracontraction>> =
            (0..m).map(|_| random_shared_map(&mut r, &y)).collect();
        let seq = GraphSequence::seeded_random(m, 0.5, derive(seed, 9)).unwrap();
        let x0 = StackedState::consensus(&y, m);
        let problem =
            DistributedProblem::new(maps, seq, p2(), x0, Some(y.clone())).unwrap();
        let q = m - 1;

        match check_window_fixed_points(&problem, q, 200, derive(seed, 10)) {
            Ok(report) if report.passed => {}
            Ok(report) => failures.push(format!(
                "seed {seed}: fixed-point check violated by {:e}",
                report.worst_violation
            )),
            Err(e) => failures.push(format!("seed {seed}: fixed-point check error {e}")),
        }
        match check_window_contraction(&problem, q, 200, derive(seed, 11)) {
            // Strict contraction: the worst margin must stay strictly positive,
            // i.e. the reported violation strictly negative.
            Ok(report) if report.passed && report.worst_violation < 0.0 => {}
            Ok(report) => failures.push(format!(
                "seed {seed}: contraction margin not strict ({:e})",
                report.worst_violation
            )),
            Err(e) => failures.push(format!("seed {seed}: contraction check error {e}")),
        }
    }
    let ok = failures.is_empty();
    report(
        "5 (window fixed-point classification + strict contraction, 50 instances x 200 trials)",
        ok,
    );
    assert!(ok, "{failures:#?}");
}

#[test]
fn criterion6_positive_matrix_strict_contraction() {
    let orders = [1.5, 2.0, 3.0].map(|p| NormOrder::new(p).unwrap());
    let mut violations = Vec::new();
    for case in 0..100u64 {
        let mut r = rng(derive(case, 12));
        let m = 2 + (case % 5) as usize;
        let n = 1 + (case % 3) as usize;
        let raw: Vec<f64> = (0..m * m).map(|_| 0.05 + r.gen::<f64>()).collect();
        let s = StochasticMatrix::new_renormalized(m, raw).unwrap();
        assert!(s.is_positive(0.0));
        for trial in 0..100 {
            let mut x = StackedState::new((0..m).map(|_| gauss_vec(&mut r, n).scale(3.0)).collect())
                .unwrap();
            while x.max_block_distance(p2()) < 1e-3 {
                x = StackedState::new((0..m).map(|_| gauss_vec(&mut r, n).scale(3.0)).collect())
                    .unwrap();
            }
            let y = gauss_vec(&mut r, n).scale(2.0);
            let ybar = StackedState::consensus(&y, m);
            let sx = s.apply_blockwise(&x).unwrap();
            for p in orders {
                let before = x.sub(&ybar).mixed_norm(p);
                let after = sx.sub(&ybar).mixed_norm(p);
                let strictly_decreased = after < before;
                if !strictly_decreased {
                    violations.push(format!(
                        "case {case} trial {trial} p={}: {after} !< {before}",
                        p.value()
                    ));
                }
            }
        }
    }
    let ok = violations.is_empty();
    report(
        "6 (positive stochastic averaging strictly contracts, 100 x 100 x {1.5, 2, 3})",
        ok,
    );
    assert!(ok, "{} violations: {:#?}", violations.len(), violations);
}

#[test]
fn criterion7_sequential_baseline() {
    let system = linear_system(0);
    let maps = row_maps(&system);
    let mut failures = Vec::new();
    for start in 0..20u64 {
        let mut r = rng(derive(start, 13));
        let x0 = uniform_vec(&mut r, 4, 10.0);
        let result = engine::run_sequential(
            &maps,
            SequentialSchedule::RoundRobin,
            &x0,
            p2(),
            1e-10,
            100_000,
        )
        .unwrap();
        let distance = result
            .final_state
            .block(0)
            .sub(&system.solution)
            .p_norm(p2());
        if !result.converged || distance > 1e-8 {
            failures.push(format!(
                "start {start}: converged={} distance {distance:e}",
                result.converged
            ));
        }
    }
    let ok = failures.is_empty();
    report(
        "7 (sequential round-robin baseline reaches the unique solution, 20 starts)",
        ok,
    );
    assert!(ok, "{failures:#?}");
}

#[test]
fn criterion8_engine_equivalence() {
    let mut failures = Vec::new();
    for seed in 0..20u64 {
        let mut r = rng(derive(seed, 14));
        let m = r.gen_range(1..=4usize);
        let n = r.gen_range(1..=3usize);
        let y = gauss_vec(&mut r, n).scale(2.0);
        let maps: Vec<Arc<dyn Paracontraction>> =
            (0..m).map(|_| random_shared_map(&mut r, &y)).collect();
        let graph_seq = match r.gen_range(0..4) {
            0 => GraphSequence::static_graph(NeighborGraph::complete(m)).unwrap(),
            1 => GraphSequence::static_graph(NeighborGraph::directed_cycle(m)).unwrap(),
            2 => GraphSequence::seeded_random(m, 0.5, derive(seed, 15)).unwrap(),
            _ => GraphSequence::periodic(vec![
                NeighborGraph::directed_cycle(m),
                NeighborGraph::complete(m),
            ])
            .unwrap(),
        };
        let x0 =
            StackedState::new((0..m).map(|_| y.add(&gauss_vec(&mut r, n).scale(5.0))).collect())
                .unwrap();
        let reference = (seed % 2 == 0).then(|| y.clone());
        let problem = DistributedProblem::new(maps, graph_seq, p2(), x0, reference).unwrap();

        let stacked = engine::run(&problem, 1e-9, 300).unwrap();
        let messaged = simnet::run_simnet(&problem, 1e-9, 300).unwrap();
        let mut identical = stacked.converged == messaged.converged
            && stacked.iterations_used == messaged.iterations_used
            && stacked.trace.len() == messaged.trace.len();
        if identical {
            for (a, b) in stacked.trace.iter().zip(&messaged.trace) {
                identical &= a.t == b.t
                    && a.disagreement.to_bits() == b.disagreement.to_bits()
                    && a.residual.to_bits() == b.residual.to_bits()
                    && a.lyapunov.map(f64::to_bits) == b.lyapunov.map(f64::to_bits);
            }
            for (ba, bb) in stacked
                .final_state
                .blocks()
                .iter()
                .zip(messaged.final_state.blocks())
            {
                for (va, vb) in ba.entries().iter().zip(bb.entries()) {
                    identical &= va.to_bits() == vb.to_bits();
                }
            }
        }
        if !identical {
            failures.push(format!("seed {seed} (m={m}, n={n}): traces differ"));
        }
    }
    let ok = failures.is_empty();
    report("8 (stacked engine and message-passing simnet byte-identical, 20 scenarios)", ok);
    assert!(ok, "{failures:#?}");
}

#[test]
fn criterion9_negative_controls() {
    let mut failures = Vec::new();

    // (a) x -> 2x is not a paracontraction.
    let doubling = LinearMap::scaling(2, 2.0).unwrap();
    let checker = check_paracontraction(&doubling, &VecN::zeros(2), 500, p2(), 16).unwrap();
    if checker.violations == 0 {
        failures.push("doubling map passed the paracontraction check".to_string());
    }

    // (b) Disjoint fixed-point sets: converged = false, not an error.
    let maps: Vec<Arc<dyn Paracontraction>> = vec![
        Arc::new(ConvexProjection::new_ball(vec![-2.0, 0.0], 0.5).unwrap()),
        Arc::new(ConvexProjection::new_ball(vec![2.0, 0.0], 0.5).unwrap()),
    ];
    let seq = GraphSequence::static_graph(NeighborGraph::complete(2)).unwrap();
    let x0 = StackedState::new(vec![
        VecN::new(vec![0.0, 1.0]).unwrap(),
        VecN::new(vec![0.0, -1.0]).unwrap(),
    ])
    .unwrap();
    let problem = DistributedProblem::new(maps, seq, p2(), x0, None).unwrap();
    match engine::run(&problem, 1e-8, 400) {
        Ok(result) if !result.converged => {}
        Ok(_) => failures.push("disjoint-ball scenario reported convergence".to_string()),
        Err(e) => failures.push(format!("disjoint-ball scenario errored: {e}")),
    }

    // (c) A self-arcs-only graph is rejected at config validation.
    let config: ScenarioConfig = serde_json::from_value(serde_json::json!({
        "m": 2,
        "n": 1,
        "maps": [
            { "type": "prox-l1", "weight": 1.0 },
            { "type": "prox-l1", "weight": 1.0 }
        ],
        "graph": { "kind": "static", "arcs": [[0, 0], [1, 1]] },
        "x0": [[0.0], [1.0]]
    }))
    .unwrap();
    match scenario::build_scenario(&config, None) {
        Err(scenario::ConfigError::Invalid { field, reason })
            if field == "graph" && reason.contains("strongly connected") => {}
        Err(e) => failures.push(format!("unexpected validation error: {e}")),
        Ok(_) => failures.push("self-arcs-only graph config validated".to_string()),
    }

    let ok = failures.is_empty();
    report(
        "9 (negative controls: non-paracontraction flagged, disjoint sets don't converge, degenerate graph rejected)",
        ok,
    );
    assert!(ok, "{failures:#?}");
}
