//! Mixed-Poisson branching process: closed-form moments against simulation,
//! the coupling with the cluster exploration and the subcritical prediction.
//!
//! cargo run --release --example branching_moments

use critgraph::branching::{progeny_moments, subcritical_prediction, BranchingProcess, Root, DEFAULT_PROGENY_CAP};
use critgraph::harness::stats::summarize;
use critgraph::model::{build_weights, critical_pareto, nu_n, WeightSequence};
use critgraph::rng::stream_rng;

fn main() -> critgraph::Result<()> {
    let law = critical_pareto(3.5)?;
    let base = build_weights(&law, 10_000)?;
    let scale = 0.8 / nu_n(&base)?;
    let w = WeightSequence::from_weights(base.weights().iter().map(|x| x * scale).collect(), Some(3.5))?;
    let pm = progeny_moments(&w, Some(0))?;
    println!("nu_n = {:.3}: E[T] = {:.4}, E[T^2] = {:.4}, E[w_T] = {:.4}", pm.nu, pm.mean_t, pm.mean_t2, pm.mean_wt);

    let bp = BranchingProcess::new(&w)?;
    let mut rng = stream_rng(5, "example", 0);
    let t: Vec<f64> = (0..100_000).map(|_| bp.simulate(Root::SizeBiased, DEFAULT_PROGENY_CAP, &mut rng).t as f64).collect();
    let s = summarize(&t)?;
    println!("simulated E[T] = {:.4} +/- {:.4}", s.mean, s.se);

    let gaps: Vec<f64> = (0..10_000).map(|_| bp.coupled(0, DEFAULT_PROGENY_CAP, &mut rng).size_gap as f64).collect();
    println!("mean T(1) - |C(1)| under the coupling: {:.4}", gaps.iter().sum::<f64>() / gaps.len() as f64);

    let n = 1_000_000;
    let w = build_weights(&law, n)?;
    let lambda_n = -(n as f64).powf(0.1);
    for j in 0..3 {
        let pr = subcritical_prediction(j, &w, lambda_n)?;
        println!("vertex {}: finite-n prediction {:.1}, limit form {:.1}", j + 1, pr.finite, pr.limit);
    }
    Ok(())
}
