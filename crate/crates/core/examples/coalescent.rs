//! Multiplicative coalescent: finite mass chains, the graph coalescent on a
//! time grid, entrance-boundary statistics and excursion lengths.
//!
//! cargo run --release --example coalescent

use critgraph::coalescent::{entrance_conditions, excursion_lengths, simulate_masses, MassVector};
use critgraph::graph::coalescent_family;
use critgraph::model::{build_weights, critical_pareto, limit_params};
use critgraph::rng::stream_rng;

fn main() -> critgraph::Result<()> {
    let mut rng = stream_rng(11, "example", 0);
    let x0 = MassVector::new(vec![0.5, 0.4, 0.3, 0.2, 0.1])?;
    let x1 = simulate_masses(&x0, 2.0, &mut rng)?;
    println!("masses {:?} -> {:?} (sigma_2 {:.3} -> {:.3})", x0.masses(), x1.masses(), x0.sigma2(), x1.sigma2());

    let law = critical_pareto(3.5)?;
    let p = limit_params(&law, 0.0)?;
    let n = 100_000;
    let w = build_weights(&law, n)?;
    let lambda_n = -(n as f64).powf(0.05);
    let grid = [0.0, 1.0, 2.0, 3.0];
    let fam = coalescent_family(&w, lambda_n, &grid, &mut rng)?;
    for (t, state) in fam.t.iter().zip(&fam.states) {
        let top: Vec<String> = state.iter().take(3).map(|x| format!("{x:.3}")).collect();
        println!("lambda = {:.3}: largest rescaled weights {}", lambda_n + t, top.join(", "));
    }

    let x = MassVector::new(fam.states[0].clone())?;
    let s = entrance_conditions(&x, lambda_n / p.mean_w, &p, 3)?;
    println!("cond_a = {:.3} (limit {:.3})", s.cond_a, s.target_a);
    for j in 0..3 {
        println!("cond_b({}) = {:.3} (limit {:.3})", j + 1, s.cond_b[j], s.target_b[j]);
    }
    println!("cond_c = {:.3} (limit {:.3})", s.cond_c, s.target_c);

    let cvec: Vec<f64> = (1..=10_000).map(|j| p.dj(j)).collect();
    let e = excursion_lengths(&cvec, p.theta / p.mean_w, 100.0, &mut rng)?;
    println!("largest excursions {:?}", e.lengths.iter().take(3).map(|x| format!("{x:.4}")).collect::<Vec<_>>());
    Ok(())
}
