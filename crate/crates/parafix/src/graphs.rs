//! Directed neighbor graphs with mandatory self-arcs, strong-connectivity
//! testing, flocking matrices and seeded generators of graph sequences.
//!
//! An arc `(j, i)` means "agent j is a neighbor of agent i": agent i
//! receives agent j's state. Agents are indexed `0..m`. Arc sets are kept
//! as in-neighbor lists sorted by agent index, the canonical order behind
//! the bit-identical cross-engine contract.

use thiserror::Error;

use crate::linalg::{stochastic_product, StochasticMatrix};
use crate::rng::{derive_seed, seeded_rng};

/// Rejection-sampling retry cap per iteration index for seeded-random
/// sequences.
pub const GENERATION_RETRY_CAP: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("graph needs at least one vertex")]
    NoVertices,
    #[error("arc ({j},{i}) out of range for {m} vertices")]
    ArcOutOfRange { j: usize, i: usize, m: usize },
    #[error("vertex {vertex} is missing its self-arc")]
    MissingSelfArc { vertex: usize },
    #[error("graph{} is not strongly connected", index.map(|k| format!(" {k}")).unwrap_or_default())]
    NotStronglyConnected { index: Option<usize> },
    #[error("periodic sequence needs at least one graph")]
    EmptyPeriodicList,
    #[error("graphs in a sequence must share the vertex count (got {got}, expected {expected})")]
    MixedVertexCounts { got: usize, expected: usize },
    #[error("arc density {density} outside (0, 1]")]
    InvalidDensity { density: f64 },
    #[error("iteration indices start at 1")]
    InvalidIterationIndex,
    #[error("no strongly connected graph found for t={t} after {attempts} attempts; density too low")]
    GenerationFailed { t: usize, attempts: usize },
    #[error("composition window length must be at least 1")]
    EmptyWindow,
    #[error("window product failed stochasticity validation: {0}")]
    ProductValidation(String),
}

/// Directed graph on `m` vertices in which every vertex has a self-arc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    m: usize,
    in_neighbors: Vec<Vec<usize>>,
}

impl NeighborGraph {
    /// Builds a graph from arcs `(j, i)` (from j to i). Every self-arc
    /// `(i, i)` must be present; duplicates are ignored.
    pub fn new(m: usize, arcs: &[(usize, usize)]) -> Result<Self, GraphError> {
        if m == 0 {
            return Err(GraphError::NoVertices);
        }
        let mut incoming = vec![vec![false; m]; m];
        for &(j, i) in arcs {
            if j >= m || i >= m {
                return Err(GraphError::ArcOutOfRange { j, i, m });
            }
            incoming[i][j] = true;
        }
        for (vertex, row) in incoming.iter().enumerate() {
            if !row[vertex] {
                return Err(GraphError::MissingSelfArc { vertex });
            }
        }
        Ok(NeighborGraph {
            m,
            in_neighbors: incoming
                .into_iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, present)| **present)
                        .map(|(j, _)| j)
                        .collect()
                })
                .collect(),
        })
    }

    /// Like [`NeighborGraph::new`] but inserts the self-arcs itself.
    pub fn with_self_arcs(m: usize, arcs: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut all: Vec<(usize, usize)> = arcs.to_vec();
        all.extend((0..m).map(|i| (i, i)));
        Self::new(m, &all)
    }

    /// Complete graph: every agent hears every other agent.
    pub fn complete(m: usize) -> Self {
        let arcs: Vec<(usize, usize)> = (0..m)
            .flat_map(|j| (0..m).map(move |i| (j, i)))
            .collect();
        Self::new(m, &arcs).expect("complete graph is well-formed")
    }

    /// Directed cycle 0 -> 1 -> ... -> m-1 -> 0 plus self-arcs.
    pub fn directed_cycle(m: usize) -> Self {
        let arcs: Vec<(usize, usize)> = (0..m).map(|i| ((i + m - 1) % m, i)).collect();
        Self::with_self_arcs(m, &arcs).expect("cycle graph is well-formed")
    }

    pub fn vertex_count(&self) -> usize {
        self.m
    }

    /// In-neighbors of `i` (including `i`), ascending.
    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_neighbors[i]
    }

    pub fn has_arc(&self, j: usize, i: usize) -> bool {
        self.in_neighbors[i].binary_search(&j).is_ok()
    }

    pub fn arc_count(&self) -> usize {
        self.in_neighbors.iter().map(Vec::len).sum()
    }

    fn out_neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.m];
        for (i, senders) in self.in_neighbors.iter().enumerate() {
            for &j in senders {
                out[j].push(i);
            }
        }
        out
    }

    /// Every vertex reaches every other vertex along arcs. A vertex reaches
    /// everything and is reached by everything iff forward and reverse
    /// search from vertex 0 both cover the graph.
    pub fn is_strongly_connected(&self) -> bool {
        fn covers_all(adj: &[Vec<usize>]) -> bool {
            let mut seen = vec![false; adj.len()];
            let mut queue = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(v) = queue.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        count += 1;
                        queue.push(w);
                    }
                }
            }
            count == adj.len()
        }
        covers_all(&self.out_neighbors()) && covers_all(&self.in_neighbors)
    }

    /// Flocking matrix `F = D^-1 A'`: `f_ij = 1/|N_i|` when arc `(j, i)`
    /// exists, else 0. Self-arcs guarantee each in-degree is at least 1, so
    /// rows are well-defined; the diagonal is always positive.
    pub fn flocking_matrix(&self) -> StochasticMatrix {
        let m = self.m;
        let mut entries = vec![0.0; m * m];
        for (i, senders) in self.in_neighbors.iter().enumerate() {
            let weight = 1.0 / senders.len() as f64;
            for &j in senders {
                entries[i * m + j] = weight;
            }
        }
        StochasticMatrix::new(m, entries).expect("flocking rows sum to 1 by construction")
    }
}

#[derive(Debug, Clone)]
enum SequenceKind {
    Static(NeighborGraph),
    Periodic(Vec<NeighborGraph>),
    SeededRandom { m: usize, density: f64, seed: u64 },
}

/// A deterministic source of one strongly connected neighbor graph per
/// iteration index `t = 1, 2, ...`.
///
/// `graph_at` is a pure function of the sequence and `t`: repeated calls
/// return identical graphs. Static and periodic sequences validate strong
/// connectivity up front; seeded-random sequences guarantee it by rejection
/// sampling (up to [`GENERATION_RETRY_CAP`] draws per index).
#[derive(Debug, Clone)]
pub struct GraphSequence {
    kind: SequenceKind,
}

impl GraphSequence {
    pub fn static_graph(graph: NeighborGraph) -> Result<Self, GraphError> {
        if !graph.is_strongly_connected() {
            return Err(GraphError::NotStronglyConnected { index: None });
        }
        Ok(GraphSequence {
            kind: SequenceKind::Static(graph),
        })
    }

    /// Cycles through `graphs`: iteration t uses `graphs[(t-1) % len]`.
    pub fn periodic(graphs: Vec<NeighborGraph>) -> Result<Self, GraphError> {
        let first = graphs.first().ok_or(GraphError::EmptyPeriodicList)?;
        let m = first.vertex_count();
        for (index, g) in graphs.iter().enumerate() {
            if g.vertex_count() != m {
                return Err(GraphError::MixedVertexCounts {
                    got: g.vertex_count(),
                    expected: m,
                });
            }
            if !g.is_strongly_connected() {
                return Err(GraphError::NotStronglyConnected { index: Some(index) });
            }
        }
        Ok(GraphSequence {
            kind: SequenceKind::Periodic(graphs),
        })
    }

    /// Arcs drawn i.i.d. at `density` (per ordered pair, self-arcs added),
    /// redrawn until strongly connected. The per-index stream is derived
    /// from `(seed, t)`.
    pub fn seeded_random(m: usize, density: f64, seed: u64) -> Result<Self, GraphError> {
        if m == 0 {
            return Err(GraphError::NoVertices);
        }
        if !(density > 0.0 && density <= 1.0) {
            return Err(GraphError::InvalidDensity { density });
        }
        Ok(GraphSequence {
            kind: SequenceKind::SeededRandom { m, density, seed },
        })
    }

    pub fn vertex_count(&self) -> usize {
        match &self.kind {
            SequenceKind::Static(g) => g.vertex_count(),
            SequenceKind::Periodic(graphs) => graphs[0].vertex_count(),
            SequenceKind::SeededRandom { m, .. } => *m,
        }
    }

    /// The graph for iteration `t >= 1`.
    pub fn graph_at(&self, t: usize) -> Result<NeighborGraph, GraphError> {
        if t == 0 {
            return Err(GraphError::InvalidIterationIndex);
        }
        match &self.kind {
            SequenceKind::Static(g) => Ok(g.clone()),
            SequenceKind::Periodic(graphs) => Ok(graphs[(t - 1) % graphs.len()].clone()),
            SequenceKind::SeededRandom { m, density, seed } => {
                random_graph(*m, *density, *seed, t)
            }
        }
    }

    /// Product of the `q` flocking matrices for iterations
    /// `start ..= start + q - 1`, later iterations on the left. Very long
    /// windows can accumulate enough rounding to fail the 1e-12
    /// stochasticity revalidation, which surfaces as an error rather than
    /// a panic.
    pub fn window_product(&self, start: usize, q: usize) -> Result<StochasticMatrix, GraphError> {
        if q == 0 {
            return Err(GraphError::EmptyWindow);
        }
        let factors: Vec<StochasticMatrix> = (start..start + q)
            .map(|t| self.graph_at(t).map(|g| g.flocking_matrix()))
            .collect::<Result<_, _>>()?;
        stochastic_product(&factors).map_err(|e| GraphError::ProductValidation(e.to_string()))
    }

    /// Whether the window's flocking-matrix product is entrywise > `eps`.
    pub fn composition_window_positive(
        &self,
        start: usize,
        q: usize,
        eps: f64,
    ) -> Result<bool, GraphError> {
        Ok(self.window_product(start, q)?.is_positive(eps))
    }
}

fn random_graph(m: usize, density: f64, seed: u64, t: usize) -> Result<NeighborGraph, GraphError> {
    use rand::Rng;
    let mut rng = seeded_rng(derive_seed(seed, t as u64));
    for _ in 0..GENERATION_RETRY_CAP {
        let mut arcs = Vec::new();
        for j in 0..m {
            for i in 0..m {
                if j != i && rng.gen::<f64>() < density {
                    arcs.push((j, i));
                }
            }
        }
        let g = NeighborGraph::with_self_arcs(m, &arcs)?;
        if g.is_strongly_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::GenerationFailed {
        t,
        attempts: GENERATION_RETRY_CAP,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strong_connectivity_known_cases() {
        let isolated = NeighborGraph::new(2, &[(0, 0), (1, 1)]).unwrap();
        assert!(!isolated.is_strongly_connected());

        let cycle = NeighborGraph::directed_cycle(3);
        assert!(cycle.is_strongly_connected());

        let single = NeighborGraph::new(1, &[(0, 0)]).unwrap();
        assert!(single.is_strongly_connected());
    }

    #[test]
    fn self_arcs_are_mandatory() {
        assert_eq!(
            NeighborGraph::new(2, &[(0, 0), (0, 1)]),
            Err(GraphError::MissingSelfArc { vertex: 1 })
        );
        let fixed = NeighborGraph::with_self_arcs(2, &[(0, 1)]).unwrap();
        assert!(fixed.has_arc(1, 1));
    }

    #[test]
    fn flocking_matrix_known_values() {
        // Agent 1 hears agent 0: in-degrees 1 and 2.
        let g = NeighborGraph::new(2, &[(0, 0), (1, 1), (0, 1)]).unwrap();
        let f = g.flocking_matrix();
        assert_eq!(f.row(0), &[1.0, 0.0]);
        assert_eq!(f.row(1), &[0.5, 0.5]);

        let lonely = NeighborGraph::new(3, &[(0, 0), (1, 1), (2, 2)]).unwrap();
        assert_eq!(lonely.flocking_matrix(), StochasticMatrix::identity(3));

        let complete = NeighborGraph::complete(2);
        assert_eq!(complete.flocking_matrix().row(0), &[0.5, 0.5]);
        assert_eq!(complete.flocking_matrix().row(1), &[0.5, 0.5]);
    }

    #[test]
    fn flocking_matrix_has_positive_diagonal() {
        for seed in 0..50u64 {
            let m = 2 + (seed % 7) as usize;
            let seq = GraphSequence::seeded_random(m, 0.4, seed).unwrap();
            let f = seq.graph_at(1).unwrap().flocking_matrix();
            for i in 0..m {
                assert!(f.entry(i, i) > 0.0);
            }
        }
    }

    #[test]
    fn window_positivity_known_cases() {
        let complete = GraphSequence::static_graph(NeighborGraph::complete(3)).unwrap();
        assert!(complete.composition_window_positive(1, 1, 0.0).unwrap());

        // Directed 4-cycle with self-arcs: F = (I + P)/2, so
        // F^3 = (I + 3P + 3P^2 + P^3)/8 covers all four columns per row.
        let cycle = GraphSequence::static_graph(NeighborGraph::directed_cycle(4)).unwrap();
        assert!(cycle.composition_window_positive(1, 3, 0.0).unwrap());
        let cube = cycle.window_product(1, 3).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let hops = (i + 4 - j) % 4; // powers of the shift that land on (i, j)
                let expected = match hops {
                    0 | 3 => 1.0 / 8.0,
                    _ => 3.0 / 8.0,
                };
                assert!((cube.entry(i, j) - expected).abs() < 1e-15);
            }
        }
        // Two composition steps are not enough for m = 4.
        assert!(!cycle.composition_window_positive(1, 2, 0.0).unwrap());
    }

    #[test]
    fn window_of_disconnected_graph_stays_identity() {
        let lonely = NeighborGraph::new(3, &[(0, 0), (1, 1), (2, 2)]).unwrap();
        assert!(!lonely.is_strongly_connected());
        // Not admissible as a sequence, so compose the flocking matrix directly.
        let f = lonely.flocking_matrix();
        let prod = stochastic_product(&vec![f; 5]).unwrap();
        assert!(!prod.is_positive(0.0));
    }

    #[test]
    fn sequences_reject_disconnected_graphs() {
        let lonely = NeighborGraph::new(2, &[(0, 0), (1, 1)]).unwrap();
        assert!(matches!(
            GraphSequence::static_graph(lonely.clone()),
            Err(GraphError::NotStronglyConnected { index: None })
        ));
        assert!(matches!(
            GraphSequence::periodic(vec![NeighborGraph::complete(2), lonely]),
            Err(GraphError::NotStronglyConnected { index: Some(1) })
        ));
    }

    #[test]
    fn generate_static_and_periodic() {
        let g = NeighborGraph::directed_cycle(3);
        let seq = GraphSequence::static_graph(g.clone()).unwrap();
        assert_eq!(seq.graph_at(1).unwrap(), g);
        assert_eq!(seq.graph_at(17).unwrap(), g);

        let g1 = NeighborGraph::directed_cycle(3);
        let g2 = NeighborGraph::complete(3);
        let seq = GraphSequence::periodic(vec![g1.clone(), g2.clone()]).unwrap();
        assert_eq!(seq.graph_at(1).unwrap(), g1);
        assert_eq!(seq.graph_at(2).unwrap(), g2);
        assert_eq!(seq.graph_at(3).unwrap(), g1);
    }

    #[test]
    fn generate_is_pure() {
        let seq = GraphSequence::seeded_random(5, 0.4, 7).unwrap();
        let a = seq.graph_at(1).unwrap();
        let b = seq.graph_at(1).unwrap();
        assert_eq!(a, b);
        assert!(a.is_strongly_connected());
        // Different t, almost surely a different graph.
        assert_ne!(a, seq.graph_at(2).unwrap());
    }

    #[test]
    fn generation_fails_when_density_is_hopeless() {
        let seq = GraphSequence::seeded_random(8, 0.001, 3).unwrap();
        assert!(matches!(
            seq.graph_at(1),
            Err(GraphError::GenerationFailed { t: 1, .. })
        ));
    }

    #[test]
    fn density_validation() {
        assert!(GraphSequence::seeded_random(3, 0.0, 1).is_err());
        assert!(GraphSequence::seeded_random(3, 1.5, 1).is_err());
        assert!(GraphSequence::seeded_random(3, 1.0, 1).is_ok());
    }

    #[test]
    fn iteration_index_starts_at_one() {
        let seq = GraphSequence::static_graph(NeighborGraph::complete(2)).unwrap();
        assert_eq!(seq.graph_at(0), Err(GraphError::InvalidIterationIndex));
        assert_eq!(seq.window_product(1, 0), Err(GraphError::EmptyWindow));
    }

    // Mirrors the positivity step of the convergence argument: any window of
    // m-1 strongly connected self-arc graphs composes to a positive matrix.
    #[test]
    fn window_of_m_minus_1_random_graphs_is_positive() {
        for seed in 0..100u64 {
            let m = 2 + (seed % 7) as usize; // m in 2..=8
            let seq = GraphSequence::seeded_random(m, 0.35, seed).unwrap();
            let q = (m - 1).max(1);
            assert!(
                seq.composition_window_positive(1, q, 0.0).unwrap(),
                "seed {seed} m {m}"
            );
        }
    }
}
