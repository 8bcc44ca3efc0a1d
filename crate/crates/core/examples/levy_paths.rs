//! The thinned Levy process, its dominating process, hitting times and the
//! successive-excursion process.
//!
//! cargo run --release --example levy_paths

use critgraph::levy::{
    dominating_path, levy_exponent, sample_clocks, sample_hitting_time, successive_hitting, thinned_path,
    CoefficientConvention, HorizonPolicy, ThinnedLevyParams, DEFAULT_TRUNCATION,
};
use critgraph::model::{critical_pareto, limit_params};
use critgraph::rng::stream_rng;

fn main() -> critgraph::Result<()> {
    let p = limit_params(&critical_pareto(3.5)?, 0.0)?;
    let tp = ThinnedLevyParams::from_limit(&p, DEFAULT_TRUNCATION)?;
    println!("a = {:.4}, b = {:.4}, c = {:.4}, slope of the truncated path = {:.4}", tp.a, tp.b, tp.c, tp.slope());
    let mut rng = stream_rng(3, "example", 0);

    let horizon = 2.0;
    let clocks = sample_clocks(&tp, horizon, true, &mut rng);
    let s = thinned_path(&tp, &clocks, horizon)?;
    let r = dominating_path(&tp, &clocks, horizon)?;
    println!("{} thinned jumps, {} dominating jumps before t = {horizon}", s.times.len(), r.times.len());
    for t in [0.1, 0.5, 1.0, 2.0] {
        println!("t = {t}: S = {:.4} <= R = {:.4}", s.value_at(t), r.value_at(t));
    }
    println!("H(0) on this path: {:?}", s.hitting_time());

    let policy = HorizonPolicy::default();
    let h: Vec<f64> = (0..2_000).filter_map(|_| sample_hitting_time(&tp, &policy, &mut rng).time).collect();
    println!("mean H(0) over {} paths: {:.4}", h.len(), h.iter().sum::<f64>() / h.len() as f64);

    let o = successive_hitting(&tp, 10, CoefficientConvention::Standard, &policy, &mut rng);
    println!("successive excursions from roots {:?}", o.roots);
    println!("ordered hitting times {:?}", o.ordered().iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>());

    for th in [0.5, 2.0, 10.0] {
        let psi = levy_exponent(&tp, th, 1e-10)?;
        println!("log E[exp(-theta S_t)] / t at theta = {th}: {:.6}", psi.value);
    }
    Ok(())
}
