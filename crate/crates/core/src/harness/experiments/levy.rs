use crate::error::Result;
use crate::harness::config::ResolvedConfig;
use crate::harness::report::{Check, Report};
use crate::levy::{
    max_point_mass, sample_clocks, sample_hitting_time, sup_distance, thinned_path, HorizonPolicy, ThinnedLevyParams,
};
use crate::model::limit_params;

use super::{column, ols_slope, replicate, summary};

pub(super) fn levy_hitting(cfg: &ResolvedConfig, report: &mut Report) -> Result<()> {
    let law = cfg.tail_law()?;
    let p = limit_params(&law, cfg.lambda)?;
    report.limit_params = Some(p.clone());
    let tp = ThinnedLevyParams::from_limit(&p, cfg.truncation)?;
    let policy = HorizonPolicy::default();
    let outs = replicate(cfg.seed, "levy_hitting", cfg.limit_samples, |_, rng| sample_hitting_time(&tp, &policy, rng));
    let rows: Vec<Vec<f64>> = outs
        .iter()
        .enumerate()
        .map(|(i, o)| vec![i as f64, o.time.unwrap_or(f64::NAN), o.horizon, o.doublings as f64])
        .collect();
    let flagged = outs.iter().filter(|o| o.time.is_none()).count();
    report.flagged += flagged as u64;
    report.write_samples("levy_hitting", &["sample", "h0", "horizon", "doublings"], &rows)?;
    let h = column(&rows, 1);
    report.stat("h0", summary(&h));
    report.stat("initial_horizon", policy.initial_horizon(&tp));
    report.stat("slope", tp.slope());
    report.stat("max_point_mass", max_point_mass(&h, 1e-9));
    let frac = (!outs.is_empty()).then(|| flagged as f64 / outs.len() as f64);
    report.diagnostics.push(Check::at_most("fraction of paths without passage", frac, cfg.tol("flagged_fraction")));
    Ok(())
}

/// Mean of `sup_{t <= T} |S^(K) - S^(2K)|` over shared clocks, for every K,
/// and the log-log regression slope against K.
pub(super) fn truncation_slope(cfg: &ResolvedConfig, report: &mut Report, reps: usize) -> Result<Check> {
    let law = cfg.tail_law()?;
    let p = limit_params(&law, cfg.lambda)?;
    let tp = ThinnedLevyParams::from_limit(&p, cfg.truncation)?;
    let ks = &cfg.truncations;
    let horizon = cfg.tol("horizon");
    let kmax = ks.last().copied().unwrap_or(2) * 2;
    let rows = replicate(cfg.seed, "truncation_scaling", reps, |_, rng| -> Result<Vec<f64>> {
        let clocks = sample_clocks(&tp.with_truncation(kmax), horizon, false, rng);
        ks.iter()
            .map(|&k| {
                let a = thinned_path(&tp.with_truncation(k), &clocks, horizon)?;
                let b = thinned_path(&tp.with_truncation(2 * k), &clocks, horizon)?;
                Ok(sup_distance(&a, &b, horizon))
            })
            .collect()
    });
    let rows = super::collect_ok(report, rows);
    let means: Vec<f64> = (0..ks.len()).filter_map(|i| super::mean(&column(&rows, i))).collect();
    let slope = if means.len() == ks.len() && means.iter().all(|m| *m > 0.0) {
        let lx: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
        let ly: Vec<f64> = means.iter().map(|m| m.ln()).collect();
        ols_slope(&lx, &ly)
    } else {
        None
    };
    let bound = (1.0 - 3.0 * p.alpha) / 2.0 + cfg.tol("slope_margin");
    let header: Vec<String> = ks.iter().map(|k| format!("sup_diff_k{k}")).collect();
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    report.write_samples("truncation_scaling", &hdr, &rows)?;
    report.stat("truncations", ks);
    report.stat("mean_sup_differences", &means);
    report.stat("log_log_slope", slope);
    Ok(Check::at_most("truncation log-log slope", slope, bound))
}

pub(super) fn truncation_scaling(cfg: &ResolvedConfig, report: &mut Report) -> Result<()> {
    report.limit_params = limit_params(&cfg.tail_law()?, cfg.lambda).ok();
    let check = truncation_slope(cfg, report, cfg.reps(0))?;
    report.criterion(10, "process properties (truncation slope)", vec![check]);
    Ok(())
}
