use serde_json::json;

use crate::coalescent::{entrance_conditions, excursion_lengths, MassVector};
use crate::error::Result;
use crate::graph::{partition, SparseSampler};
use crate::harness::config::ResolvedConfig;
use crate::harness::report::{Check, Report};
use crate::levy::{successive_hitting, CoefficientConvention, HorizonPolicy, ThinnedLevyParams};
use crate::model::{apply_window, build_weights, limit_params};

use super::{collect_ok, column, ks, replicate, summary};

const JMAX: usize = 3;

pub(super) fn coalescent_conditions(cfg: &ResolvedConfig, report: &mut Report) -> Result<()> {
    let law = cfg.tail_law()?;
    let ex = law.exponents();
    let targets = limit_params(&law, 0.0)?;
    report.limit_params = Some(targets.clone());
    let mean_w = law.mean();

    let mut per_n = Vec::new();
    let mut checks = Vec::new();
    // Relative errors of (cond_a, cond_c) per n, for the trend check.
    let mut rel_ac: Vec<(f64, f64)> = Vec::new();
    for (k, &n) in cfg.n.iter().enumerate() {
        let lambda = cfg.lambda_for(n);
        let w = apply_window(&build_weights(&law, n)?, lambda)?;
        let scale = (n as f64).powf(-ex.rho);
        let ell_over_n = w.ell_n() / n as f64;
        let sampler = SparseSampler::new(&w)?;
        let rows = replicate(cfg.seed, &format!("coalescent_conditions/n{k}"), cfg.reps(k), |_, rng| -> Result<Vec<f64>> {
            let g = sampler.sample(rng);
            let p = partition(&g, &w)?;
            let x = MassVector::new(p.components.iter().map(|c| c.weight * scale).collect())?;
            let s = entrance_conditions(&x, lambda / mean_w, &targets, JMAX)?;
            let s_ell = entrance_conditions(&x, lambda / ell_over_n, &targets, JMAX)?;
            let mut row = vec![s.cond_a];
            row.extend(&s.cond_b);
            row.extend([s.cond_c, s_ell.cond_a, s_ell.cond_c, x.sigma2(), x.sigma3()]);
            Ok(row)
        });
        let rows = collect_ok(report, rows);
        let stats = entrance_conditions(&MassVector::new(vec![1.0])?, lambda / mean_w, &targets, JMAX)?;
        let summ: Vec<_> = (0..rows.first().map_or(0, Vec::len)).map(|c| summary(&column(&rows, c))).collect();
        let m = |c: usize| summ.get(c).and_then(|s| s.as_ref()).map(|s| s.mean);
        let rel = |v: Option<f64>, t: f64| v.map(|v| (v - t).abs() / t.abs());
        let a_idx = 0;
        let c_idx = 1 + JMAX;
        checks.push(Check::relative(format!("cond_a at n={n}"), m(a_idx), stats.target_a, cfg.tol("cond_a_rel")));
        for j in 0..JMAX {
            checks.push(Check::relative(
                format!("cond_b({}) at n={n}", j + 1),
                m(1 + j),
                stats.target_b[j],
                cfg.tol("cond_b_rel"),
            ));
        }
        checks.push(Check::relative(format!("cond_c at n={n}"), m(c_idx), stats.target_c, cfg.tol("cond_c_rel")));
        rel_ac.push((rel(m(a_idx), stats.target_a).unwrap_or(f64::NAN), rel(m(c_idx), stats.target_c).unwrap_or(f64::NAN)));
        let mut header: Vec<String> = vec!["cond_a".into()];
        header.extend((1..=JMAX).map(|j| format!("cond_b_{j}")));
        header.extend(["cond_c", "cond_a_ell", "cond_c_ell", "sigma2", "sigma3"].map(String::from));
        let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
        report.write_samples(&format!("coalescent_conditions_n{n}"), &hdr, &rows)?;
        per_n.push(json!({
            "n": n,
            "lambda_n": lambda,
            "time": lambda / mean_w,
            "replications": rows.len(),
            "columns": header,
            "summaries": summ,
            "targets": {
                "cond_a": stats.target_a,
                "cond_b": stats.target_b,
                "cond_c": stats.target_c,
                "cond_c_partial": stats.target_c_partial,
                "cond_c_error": stats.target_c_error,
            },
        }));
    }
    if rel_ac.len() >= 2 {
        let (first, last) = (rel_ac[0], rel_ac[rel_ac.len() - 1]);
        checks.push(Check::flag("cond_a error decreases in n", last.0 <= first.0).with_detail(format!("{first:?} -> {last:?}")));
        checks.push(Check::flag("cond_c error decreases in n", last.1 <= first.1).with_detail(format!("{first:?} -> {last:?}")));
    }
    report.criterion(9, "entrance boundary conditions", checks);

    let excursions = excursion_check(cfg, report)?;
    report.coalescent = json!({ "conditions": per_n, "excursions": excursions });
    Ok(())
}

/// Ordered excursion lengths of the reflected process against ordered
/// successive hitting times under matched parameters.
fn excursion_check(cfg: &ResolvedConfig, report: &mut Report) -> Result<serde_json::Value> {
    let law = cfg.tail_law()?;
    let p = limit_params(&law, cfg.lambda)?;
    let k = cfg.truncation;
    let cvec: Vec<f64> = (1..=k as usize).map(|j| p.dj(j)).collect();
    let drift = p.theta / p.mean_w;
    let horizon = cfg.tol("excursion_horizon");
    let l = cfg.limit_samples;
    let exc = replicate(cfg.seed, "coalescent_conditions/excursions", l, |_, rng| {
        excursion_lengths(&cvec, drift, horizon, rng).map(|s| {
            let mut r: Vec<f64> = (0..3).map(|i| s.lengths.get(i).copied().unwrap_or(0.0)).collect();
            r.push(if s.open_at_horizon { 1.0 } else { 0.0 });
            r
        })
    });
    let exc = collect_ok(report, exc);
    let tp = ThinnedLevyParams::from_limit(&p, k)?;
    let policy = HorizonPolicy::default();
    let succ = replicate(cfg.seed, "coalescent_conditions/successive", l, |_, rng| {
        let o = successive_hitting(&tp, 30, CoefficientConvention::Standard, &policy, rng);
        if o.flagged {
            vec![f64::NAN; 3]
        } else {
            (0..3).map(|i| o.ordered().get(i).copied().unwrap_or(0.0)).collect()
        }
    });
    let open: Vec<Vec<f64>> = exc.iter().filter(|r| r[3] == 1.0).cloned().collect();
    report.flagged += open.len() as u64;
    let closed: Vec<Vec<f64>> = exc.iter().filter(|r| r[3] == 0.0).cloned().collect();
    let mut ks_all = Vec::new();
    for i in 0..3 {
        let r = ks(&column(&closed, i), &column(&succ, i));
        report.diagnostics.push(Check::at_most(
            format!("KS excursion length {} vs successive H_({})", i + 1, i + 1),
            r.map(|r| r.d),
            cfg.tol("excursion_ks"),
        ));
        ks_all.push(r);
    }
    let rows: Vec<Vec<f64>> = exc
        .iter()
        .zip(succ.iter().chain(std::iter::repeat(&vec![f64::NAN; 3])))
        .map(|(e, s)| e[..3].iter().chain(s.iter()).copied().collect())
        .collect();
    report.write_samples("coalescent_excursions", &["exc_1", "exc_2", "exc_3", "h_1", "h_2", "h_3"], &rows)?;
    Ok(json!({
        "drift": drift,
        "horizon": horizon,
        "open_at_horizon": open.len(),
        "ks": ks_all,
        "summaries": (0..3).map(|i| summary(&column(&closed, i))).collect::<Vec<_>>(),
    }))
}
