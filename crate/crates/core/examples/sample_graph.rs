//! Sample a critical Norros-Reittu graph and list its largest clusters.
//!
//! cargo run --release --example sample_graph -- 1000000 0.0

use critgraph::graph::{generate_dense, ordered_statistics, partition, KernelKind, SparseSampler, DEFAULT_DENSE_GUARD};
use critgraph::model::{apply_window, build_weights, critical_pareto};
use critgraph::rng::stream_rng;

fn main() -> critgraph::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(1_000_000, |s| s.parse().expect("n"));
    let lambda: f64 = args.next().map_or(0.0, |s| s.parse().expect("lambda"));
    let law = critical_pareto(3.5)?;
    let w = apply_window(&build_weights(&law, n)?, lambda)?;
    let mut rng = stream_rng(42, "example", 0);

    // The sampler builds its alias table once; reuse it for many graphs.
    let sampler = SparseSampler::new(&w)?;
    let g = sampler.sample(&mut rng);
    let p = partition(&g, &w)?;
    let os = ordered_statistics(&p.components, n, &law.exponents());
    println!("n = {n}, lambda = {lambda}: {} edges, {} components", g.edges.len(), p.components.len());
    for (r, &k) in os.size_order.iter().take(5).enumerate() {
        let c = &p.components[k];
        println!(
            "#{}: size {} (n^-rho |C| = {:.3}), weight {:.1}, surplus {}, lowest vertex {}",
            r + 1,
            c.size,
            os.sizes[r],
            c.weight,
            c.surplus,
            c.min_vertex + 1
        );
    }
    println!("vertices 1 and 2 connected: {}", p.same_component(0, 1));

    // Pairwise generation with another kernel, for small n.
    let small = build_weights(&law, 2_000)?;
    for kernel in [KernelKind::NorrosReittu, KernelKind::ChungLu, KernelKind::Grg] {
        let g = generate_dense(&small, kernel, DEFAULT_DENSE_GUARD, &mut rng)?;
        println!("{kernel:?} at n = 2000: {} edges", g.edges.len());
    }
    Ok(())
}
