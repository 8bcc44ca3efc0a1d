//! Explore the cluster of vertex 1 and compare the rescaled walk with the
//! cluster size.
//!
//! cargo run --release --example explore_cluster

use critgraph::exploration::{explore_sequential, multiple_hit_check, rescaled_walk, Explorer};
use critgraph::model::{build_weights, critical_pareto};
use critgraph::rng::stream_rng;

fn main() -> critgraph::Result<()> {
    let n = 1_000_000;
    let law = critical_pareto(3.5)?;
    let ex = law.exponents();
    let w = build_weights(&law, n)?;
    let explorer = Explorer::new(&w)?;
    let mut rng = stream_rng(7, "example", 0);

    let trace = explorer.explore(0, None, &mut rng)?;
    println!(
        "|C(1)| = {}, weight {:.1}, {} vertex checks, {} thinned marks",
        trace.cluster_size,
        trace.cluster_weight,
        trace.checks,
        trace.thinned_count()
    );
    println!("weight identity residual: {:.2e}", trace.weight_identity_residual());
    let walk = rescaled_walk(&trace, &ex, n);
    println!("rescaled walk ends at time {:.4} = n^-rho |C(1)| up to thinning", walk.end_time());
    let hits = multiple_hit_check(&trace, &w)?;
    println!("multiple hits {} (bound at m = V: {:.3})", hits.observed, hits.bound);

    // Clusters of the successive smallest unexplored vertices.
    let run = explore_sequential(&w, 5, None, &mut rng)?;
    for (t, s) in run.traces.iter().zip(&run.states) {
        println!(
            "cluster from vertex {}: size {}, drift {:.4}, residual weight {:.1}",
            t.start + 1,
            t.cluster_size,
            s.drift,
            s.residual_weight
        );
    }
    Ok(())
}
