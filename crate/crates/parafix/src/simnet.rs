//! Per-agent message-passing simulation of the distributed iteration:
//! m agent processes exchange state vectors in synchronous rounds under the
//! per-round neighbor graph.
//!
//! Rounds are bulk-synchronous: phase 1 delivers every message of the
//! round's graph (agent j sends its state along every arc (j, i),
//! including the self-arc), phase 2 lets every agent aggregate its inbox
//! and apply its own map. No agent reads another's post-update state
//! within a round. Inbox aggregation multiplies each message by `1/inbox
//! size` and accumulates in ascending sender id, which is term-for-term
//! the arithmetic of the stacked engine's flocking-matrix application, so
//! the two formulations produce bit-identical trajectories.

use std::sync::Arc;

use thiserror::Error;

use crate::engine::{
    compute_trace_record, meets_tolerance, DistributedProblem, EngineError, RunResult,
};
use crate::graphs::{GraphError, GraphSequence, NeighborGraph};
use crate::linalg::{weighted_sum, StackedState, VecN};
use crate::maps::{MapError, Paracontraction};

#[derive(Debug, Error)]
pub enum SimnetError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("agent {id}: {source}")]
    Agent { id: usize, source: MapError },
    #[error("non-finite state at round {t}")]
    NonFiniteState { t: usize },
    #[error("agent {id} entered round {t} with a non-empty inbox")]
    InboxNotEmpty { id: usize, t: usize },
    #[error("agent {id} expected a message from {expected} in round {t}; scheduler bug")]
    MissingMessage { id: usize, expected: usize, t: usize },
    #[error("round graph has {graph} vertices for {nodes} nodes")]
    NodeCountMismatch { graph: usize, nodes: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// One agent process: its id, its own map, its current estimate, and the
/// inbox for the round in flight.
pub struct AgentNode {
    pub id: usize,
    map: Arc<dyn Paracontraction>,
    pub state: VecN,
    inbox: Vec<(usize, VecN)>,
}

impl AgentNode {
    pub fn new(id: usize, map: Arc<dyn Paracontraction>, state: VecN) -> Self {
        AgentNode {
            id,
            map,
            state,
            inbox: Vec::new(),
        }
    }

    pub fn map(&self) -> &dyn Paracontraction {
        self.map.as_ref()
    }
}

/// Ties a graph sequence to a monotone round counter so message delivery in
/// round t follows exactly the arcs of graph t.
#[derive(Debug, Clone)]
pub struct RoundSchedule {
    graph_seq: GraphSequence,
    next_round: usize,
}

impl RoundSchedule {
    pub fn new(graph_seq: GraphSequence) -> Self {
        RoundSchedule {
            graph_seq,
            next_round: 1,
        }
    }

    /// The index the next call to [`round`] will execute.
    pub fn next_round(&self) -> usize {
        self.next_round
    }

    fn advance(&mut self) -> Result<(usize, NeighborGraph), GraphError> {
        let t = self.next_round;
        let graph = self.graph_seq.graph_at(t)?;
        self.next_round += 1;
        Ok((t, graph))
    }
}

/// What a round did: its index, how many messages were delivered (one per
/// arc of the round's graph), and the averaged state z each agent fed to
/// its map (exposed for trace recording).
#[derive(Debug, Clone)]
pub struct RoundReport {
    pub t: usize,
    pub messages_delivered: usize,
    pub averaged: StackedState,
}

/// The inbox aggregation: `(1/|inbox|) * sum of messages` in ascending
/// sender id. Takes nothing but the inbox, so an agent's update cannot
/// observe global state.
fn aggregate_inbox(inbox: &[(usize, VecN)], n: usize) -> VecN {
    let weight = 1.0 / inbox.len() as f64;
    weighted_sum(n, inbox.iter().map(|(_, x)| (weight, x)))
}

/// Executes one synchronous round under the schedule's next graph.
pub fn round(nodes: &mut [AgentNode], schedule: &mut RoundSchedule) -> Result<RoundReport, SimnetError> {
    let (t, graph) = schedule.advance()?;
    round_on_graph(nodes, &graph, t, 1)
}

/// Like [`round`] but with phase 2 split across `workers` threads. Agent
/// updates are independent within a round, so the result is identical for
/// every worker count; [`round`] is the single-threaded arbiter.
pub fn round_parallel(
    nodes: &mut [AgentNode],
    schedule: &mut RoundSchedule,
    workers: usize,
) -> Result<RoundReport, SimnetError> {
    let (t, graph) = schedule.advance()?;
    round_on_graph(nodes, &graph, t, workers.max(1))
}

/// One round under an explicit graph (round index `t` only labels errors
/// and the report).
pub fn round_on_graph(
    nodes: &mut [AgentNode],
    graph: &NeighborGraph,
    t: usize,
    workers: usize,
) -> Result<RoundReport, SimnetError> {
    let m = nodes.len();
    if graph.vertex_count() != m {
        return Err(SimnetError::NodeCountMismatch {
            graph: graph.vertex_count(),
            nodes: m,
        });
    }
    for node in nodes.iter() {
        if !node.inbox.is_empty() {
            return Err(SimnetError::InboxNotEmpty { id: node.id, t });
        }
    }

    // Phase 1: deliver x_j along every arc (j, i). In-neighbor lists are
    // sorted, so inboxes arrive in ascending sender id.
    let mut messages_delivered = 0;
    let inboxes: Vec<Vec<(usize, VecN)>> = (0..m)
        .map(|i| {
            let senders = graph.in_neighbors(i);
            messages_delivered += senders.len();
            senders
                .iter()
                .map(|&j| (j, nodes[j].state.clone()))
                .collect()
        })
        .collect();
    for (node, inbox) in nodes.iter_mut().zip(inboxes) {
        node.inbox = inbox;
    }

    // Phase 2: every agent consumes its inbox exactly once and updates from
    // it alone.
    let updates = if workers <= 1 || m <= 1 {
        nodes
            .iter_mut()
            .map(|node| update_agent(node, graph, t))
            .collect::<Result<Vec<(VecN, VecN)>, _>>()?
    } else {
        let chunk = m.div_ceil(workers);
        let mut slots: Vec<Option<Result<(VecN, VecN), SimnetError>>> =
            (0..m).map(|_| None).collect();
        std::thread::scope(|scope| {
            for (node_chunk, slot_chunk) in nodes.chunks_mut(chunk).zip(slots.chunks_mut(chunk)) {
                scope.spawn(move || {
                    for (node, slot) in node_chunk.iter_mut().zip(slot_chunk.iter_mut()) {
                        *slot = Some(update_agent(node, graph, t));
                    }
                });
            }
        });
        slots
            .into_iter()
            .map(|slot| slot.expect("every agent updated"))
            .collect::<Result<Vec<(VecN, VecN)>, _>>()?
    };

    let mut averaged = Vec::with_capacity(m);
    for (node, (z, next)) in nodes.iter_mut().zip(updates) {
        node.state = next;
        averaged.push(z);
    }
    Ok(RoundReport {
        t,
        messages_delivered,
        averaged: StackedState::new(averaged).map_err(EngineError::Linalg)?,
    })
}

/// Phase-2 work for one agent: check the inbox against the expected
/// senders, aggregate, apply the agent's own map. Returns (z_i, new state).
fn update_agent(
    node: &mut AgentNode,
    graph: &NeighborGraph,
    t: usize,
) -> Result<(VecN, VecN), SimnetError> {
    let inbox = std::mem::take(&mut node.inbox);
    let expected = graph.in_neighbors(node.id);
    if inbox.len() != expected.len() {
        let missing = expected
            .iter()
            .find(|j| !inbox.iter().any(|(sender, _)| sender == *j))
            .copied()
            .unwrap_or(node.id);
        return Err(SimnetError::MissingMessage {
            id: node.id,
            expected: missing,
            t,
        });
    }
    for (&(sender, _), &want) in inbox.iter().zip(expected) {
        if sender != want {
            return Err(SimnetError::MissingMessage {
                id: node.id,
                expected: want,
                t,
            });
        }
    }
    let z = aggregate_inbox(&inbox, node.state.dim());
    let next = node
        .map
        .apply(&z)
        .map_err(|source| SimnetError::Agent {
            id: node.id,
            source,
        })?;
    if !next.is_finite() {
        return Err(SimnetError::NonFiniteState { t });
    }
    Ok((z, next))
}

fn gather(nodes: &[AgentNode]) -> StackedState {
    StackedState::from_raw(nodes.iter().map(|n| n.state.clone()).collect())
}

/// Runs the message-passing simulation of `problem`; same contract as
/// [`crate::engine::run`], byte-identical trace included.
pub fn run_simnet(
    problem: &DistributedProblem,
    tol: f64,
    max_iters: usize,
) -> Result<RunResult, SimnetError> {
    run_simnet_with_workers(problem, tol, max_iters, 1)
}

/// [`run_simnet`] with phase-2 updates spread over `workers` threads; the
/// result is independent of the worker count.
pub fn run_simnet_with_workers(
    problem: &DistributedProblem,
    tol: f64,
    max_iters: usize,
    workers: usize,
) -> Result<RunResult, SimnetError> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(SimnetError::Engine(EngineError::InvalidTolerance { tol }));
    }
    let mut nodes: Vec<AgentNode> = problem
        .maps()
        .iter()
        .enumerate()
        .map(|(id, map)| AgentNode::new(id, Arc::clone(map), problem.initial_state().block(id).clone()))
        .collect();
    let mut schedule = RoundSchedule::new(problem.graph_sequence().clone());

    let mut trace = Vec::new();
    let x0 = gather(&nodes);
    let record = compute_trace_record(problem, &x0, &x0, 0)?;
    let mut converged = meets_tolerance(&record, tol);
    trace.push(record);
    let mut iterations_used = 0;
    while !converged && schedule.next_round() <= max_iters {
        let report = round_parallel(&mut nodes, &mut schedule, workers)?;
        let x = gather(&nodes);
        let record = compute_trace_record(problem, &x, &report.averaged, report.t)?;
        converged = meets_tolerance(&record, tol);
        trace.push(record);
        iterations_used = report.t;
    }
    Ok(RunResult {
        final_state: gather(&nodes),
        iterations_used,
        converged,
        trace,
    })
}
