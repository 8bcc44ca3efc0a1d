//! Exponents, the zeta correction of nu_n and the constants of the scaling limit.
//!
//! cargo run --release --example limit_constants -- 3.5

use critgraph::model::{build_weights, critical_pareto, limit_params, nu_n, zeta_series};

fn main() -> critgraph::Result<()> {
    let tau: f64 = std::env::args().nth(1).map_or(3.5, |s| s.parse().expect("tau"));
    let law = critical_pareto(tau)?;
    let ex = law.exponents();
    println!("tau = {tau}: alpha = {:.4}, rho = {:.4}, eta = {:.4}", ex.alpha, ex.rho, ex.eta);

    let zeta = zeta_series(&law, 1e-10)?;
    println!("zeta = {:.10} (+/- {:.1e}, {} terms)", zeta.value, zeta.error_bound, zeta.terms);
    for k in 3..=7 {
        let n = 10usize.pow(k);
        let w = build_weights(&law, n)?;
        println!("n = 10^{k}: n^eta (nu_n - 1) = {:.6}", (n as f64).powf(ex.eta) * (nu_n(&w)? - 1.0));
    }

    let p = limit_params(&law, 0.0)?;
    println!("a = {:.6}, b = {:.6}, c = theta = {:.6}, beta = {:.6}, E[W] = {:.6}", p.a, p.b, p.c, p.beta, p.mean_w);
    for j in 1..=3 {
        println!("c_{j} = {:.6}, d_{j} = {:.6}", p.cj(j), p.dj(j));
    }
    Ok(())
}
