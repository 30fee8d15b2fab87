//! Neighbor graphs and their flocking matrices: building graphs, checking
//! strong connectivity, generating seeded random sequences, and watching a
//! window of flocking-matrix products turn entrywise positive.
//!
//! ```text
//! cargo run --example time_varying_graphs
//! ```

use std::error::Error;

use parafix::graphs::{GraphSequence, NeighborGraph};

fn print_matrix(label: &str, m: &parafix::linalg::StochasticMatrix) {
    println!("{label}:");
    for i in 0..m.size() {
        let row: Vec<String> = (0..m.size()).map(|j| format!("{:5.3}", m.entry(i, j))).collect();
        println!("  [{}]", row.join(", "));
    }
}

fn main() -> Result<(), Box<dyn Error>> {
    // A directed 4-cycle with self-arcs: strongly connected, sparse.
    let cycle = NeighborGraph::directed_cycle(4);
    println!(
        "cycle: {} arcs, strongly connected: {}",
        cycle.arc_count(),
        cycle.is_strongly_connected()
    );
    print_matrix("flocking matrix F", &cycle.flocking_matrix());

    // One application of F is not positive; a window of m - 1 = 3 is.
    let seq = GraphSequence::static_graph(cycle)?;
    for q in 1..=3 {
        println!(
            "window of {q} cycle graphs positive? {}",
            seq.composition_window_positive(1, q, 0.0)?
        );
    }
    print_matrix("F^3", &seq.window_product(1, 3)?);

    // Seeded random sequences: a different strongly connected graph each
    // iteration, reproducible from (seed, t).
    let random_seq = GraphSequence::seeded_random(5, 0.3, 99)?;
    for t in 1..=4 {
        let g = random_seq.graph_at(t)?;
        println!(
            "t={t}: {} arcs, strongly connected: {}",
            g.arc_count(),
            g.is_strongly_connected()
        );
    }
    println!(
        "window of m-1=4 random graphs positive? {}",
        random_seq.composition_window_positive(1, 4, 0.0)?
    );

    // Too sparse a density cannot produce strongly connected graphs and
    // fails loudly after the retry cap.
    match GraphSequence::seeded_random(8, 0.001, 1)?.graph_at(1) {
        Err(e) => println!("hopeless density rejected: {e}"),
        Ok(_) => println!("unexpectedly generated a graph"),
    }
    Ok(())
}
