use crate::branching::subcritical_prediction;
use crate::error::Result;
use crate::graph::{ordered_statistics, partition, SparseSampler};
use crate::harness::config::ResolvedConfig;
use crate::harness::report::{Check, Report};
use crate::harness::stats::wilson;
use crate::levy::{sample_hitting_time, successive_hitting, CoefficientConvention, HorizonPolicy, ThinnedLevyParams};
use crate::model::{apply_window, build_weights, limit_params, WeightSequence};

use super::{collect_ok, column, ks, mean, replicate, summary};

const SUCCESSIVE_EXCURSIONS: usize = 30;

fn windowed(cfg: &ResolvedConfig, n: usize) -> Result<(WeightSequence, WeightSequence, f64)> {
    let law = cfg.tail_law()?;
    let base = build_weights(&law, n)?;
    let lambda = cfg.lambda_for(n);
    let w = apply_window(&base, lambda)?;
    Ok((base, w, lambda))
}

/// Top three entries, NaN-padded.
fn top3(v: &[f64]) -> [f64; 3] {
    [0, 1, 2].map(|i| v.get(i).copied().unwrap_or(f64::NAN))
}

pub(super) fn ordered_clusters(cfg: &ResolvedConfig, report: &mut Report) -> Result<()> {
    let law = cfg.tail_law()?;
    let ex = law.exponents();
    let n = cfg.n[0];
    let (_, w, lambda) = windowed(cfg, n)?;
    let params = limit_params(&law, lambda)?;
    report.limit_params = Some(params.clone());
    let scale = (n as f64).powf(-ex.rho);

    let sampler = SparseSampler::new(&w)?;
    let graphs = replicate(cfg.seed, "ordered_clusters", cfg.reps(0), |_, rng| -> Result<Vec<f64>> {
        let g = sampler.sample(rng);
        let p = partition(&g, &w)?;
        let os = ordered_statistics(&p.components, n, &ex);
        let [s1, s2, s3] = top3(&os.sizes);
        Ok(vec![p.component_of(0).size as f64 * scale, s1, s2, s3, os.weights[0]])
    });
    let graphs = collect_ok(report, graphs);

    let tp = ThinnedLevyParams::from_limit(&params, cfg.truncation)?;
    let tp_shifted = ThinnedLevyParams::new(params.a, params.b, params.c_shifted(), params.alpha, cfg.truncation)?;
    let policy = HorizonPolicy::default();
    let l = cfg.limit_samples;
    let h = replicate(cfg.seed, "ordered_clusters/levy", l, |_, rng| sample_hitting_time(&tp, &policy, rng).time);
    let h_shifted =
        replicate(cfg.seed, "ordered_clusters/levy_shifted", l, |_, rng| sample_hitting_time(&tp_shifted, &policy, rng).time);
    let successive = |label: &str, conv| {
        replicate(cfg.seed, label, l, |_, rng| {
            let o = successive_hitting(&tp, SUCCESSIVE_EXCURSIONS, conv, &policy, rng);
            if o.flagged {
                [f64::NAN; 3]
            } else {
                top3(&o.ordered())
            }
        })
    };
    let succ = successive("ordered_clusters/successive", CoefficientConvention::Standard);
    let succ_swapped = successive("ordered_clusters/successive_swapped", CoefficientConvention::SwappedAb);
    let nan = |x: Option<f64>| x.unwrap_or(f64::NAN);
    let limit_rows: Vec<Vec<f64>> = (0..l)
        .map(|i| {
            let mut r = vec![i as f64, nan(h[i]), nan(h_shifted[i])];
            r.extend(succ[i]);
            r.extend(succ_swapped[i]);
            r
        })
        .collect();
    report.flagged += limit_rows.iter().map(|r| r[1..].iter().filter(|v| v.is_nan()).count() as u64).sum::<u64>();

    let graph_rows: Vec<Vec<f64>> =
        graphs.iter().enumerate().map(|(i, g)| std::iter::once(i as f64).chain(g.iter().copied()).collect()).collect();
    report.write_samples(
        "ordered_clusters_graphs",
        &["replication", "cluster_of_1", "size_1", "size_2", "size_3", "weight_1"],
        &graph_rows,
    )?;
    report.write_samples(
        "ordered_clusters_limit",
        &["sample", "h0", "h0_shifted", "h_1", "h_2", "h_3", "h_1_swapped", "h_2_swapped", "h_3_swapped"],
        &limit_rows,
    )?;

    let c1 = column(&graph_rows, 1);
    let h0 = column(&limit_rows, 1);
    let ks_single = ks(&c1, &h0);
    let ks_shifted = ks(&c1, &column(&limit_rows, 2));
    let mut checks = vec![Check::at_most("KS |C(1)| vs H(0)", ks_single.map(|k| k.d), cfg.tol("ks_single"))];
    let mut ks_std = Vec::new();
    let mut ks_sw = Vec::new();
    for i in 0..3 {
        let g = column(&graph_rows, 2 + i);
        let a = ks(&g, &column(&limit_rows, 3 + i));
        let b = ks(&g, &column(&limit_rows, 6 + i));
        checks.push(Check::at_most(format!("KS |C_({})| vs H_({})", i + 1, i + 1), a.map(|k| k.d), cfg.tol("ks_ordered")));
        report.diagnostics.push(Check::at_most(
            format!("KS |C_({})| vs H_({}) with swapped coefficients", i + 1, i + 1),
            b.map(|k| k.d),
            cfg.tol("ks_ordered"),
        ));
        ks_std.push(a);
        ks_sw.push(b);
    }
    report.diagnostics.push(Check::at_most(
        "KS |C(1)| vs H(0) with drift theta - ab",
        ks_shifted.map(|k| k.d),
        cfg.tol("ks_single"),
    ));
    report.criterion(4, "cluster sizes vs thinned Levy hitting times", checks);

    let s1 = column(&graph_rows, 2);
    let w1 = column(&graph_rows, 5);
    let mean_abs: Vec<f64> = graphs.iter().map(|g| (g[4] - g[1]).abs()).collect();
    let rel = match (mean(&mean_abs), mean(&s1)) {
        (Some(d), Some(s)) if s > 0.0 => Some(d / s),
        _ => None,
    };
    let ks_w = ks(&w1, &s1);
    report.criterion(
        5,
        "largest cluster weight vs size",
        vec![
            Check::at_most("mean |W_(1) - |C_(1)|| / mean |C_(1)|", rel, cfg.tol("weight_mean_rel")),
            Check::at_most("KS W_(1) vs |C_(1)|", ks_w.map(|k| k.d), cfg.tol("weight_ks")),
        ],
    );

    report.stat("cluster_of_1", summary(&c1));
    report.stat("h0", summary(&h0));
    report.stat("h0_shifted", summary(&column(&limit_rows, 2)));
    report.stat("size_1", summary(&s1));
    report.stat("weight_1", summary(&w1));
    report.stat("ks_single", ks_single);
    report.stat("ks_single_shifted", ks_shifted);
    report.stat("ks_ordered_standard", &ks_std);
    report.stat("ks_ordered_swapped", &ks_sw);
    report.stat("ks_weight_vs_size", ks_w);
    let better = |a: &[Option<crate::harness::stats::KsResult>]| a.iter().map(|k| k.map_or(1.0, |k| k.d)).sum::<f64>();
    let conv = if better(&ks_std) <= better(&ks_sw) { "standard" } else { "swapped_ab" };
    report.stat("closer_convention", conv);
    Ok(())
}

pub(super) fn subcritical(cfg: &ResolvedConfig, report: &mut Report) -> Result<()> {
    let law = cfg.tail_law()?;
    let ex = law.exponents();
    let n = cfg.n[0];
    let (base, w, lambda) = windowed(cfg, n)?;
    let params = limit_params(&law, lambda)?;
    report.limit_params = Some(params.clone());
    let scale = lambda.abs() * (n as f64).powf(-ex.rho);
    let sampler = SparseSampler::new(&w)?;
    let rows = replicate(cfg.seed, "subcritical", cfg.reps(0), |i, rng| -> Result<Vec<f64>> {
        let g = sampler.sample(rng);
        let p = partition(&g, &w)?;
        let os = ordered_statistics(&p.components, n, &ex);
        let mut row = vec![i as f64];
        for j in 0..3 {
            row.push(os.size_order.get(j).map_or(f64::NAN, |&k| p.components[k].size as f64 * scale));
        }
        for j in 0..3 {
            let hit = os.size_order.get(j).is_some_and(|&k| p.label[j] as usize == k);
            row.push(if hit { 1.0 } else { 0.0 });
        }
        Ok(row)
    });
    let rows = collect_ok(report, rows);
    report.write_samples("subcritical", &["replication", "y_1", "y_2", "y_3", "has_1", "has_2", "has_3"], &rows)?;
    let mut checks = Vec::new();
    let mut preds = Vec::new();
    for j in 0..3 {
        let y = column(&rows, 1 + j);
        let s = summary(&y);
        let cj = params.cj(j + 1);
        checks.push(Check::relative(format!("mean |lambda_n| n^-rho |C_({})| vs c_{}", j + 1, j + 1), s.as_ref().map(|s| s.mean), cj, cfg.tol("mean_rel")));
        let cv = s.as_ref().filter(|s| s.mean > 0.0).map(|s| s.sd / s.mean);
        checks.push(Check::at_most(format!("coefficient of variation j={}", j + 1), cv, cfg.tol("cv")));
        let frac = mean(&column(&rows, 4 + j));
        checks.push(Check::at_least(format!("C_({}) contains vertex {}", j + 1, j + 1), frac, cfg.tol("identification")));
        let pred = subcritical_prediction(j, &base, lambda)?;
        preds.push(serde_json::json!({
            "j": j + 1,
            "c_j": cj,
            "finite_prediction_scaled": pred.finite * scale,
            "limit_prediction_scaled": pred.limit * scale,
            "summary": s,
        }));
    }
    report.stat("lambda_n", lambda);
    report.stat("per_rank", &preds);
    report.criterion(6, "subcritical cluster sizes", checks);
    Ok(())
}

pub(super) fn hub_connectivity(cfg: &ResolvedConfig, report: &mut Report) -> Result<()> {
    let law = cfg.tail_law()?;
    let ex = law.exponents();
    let alpha = cfg.tol("wilson_alpha");
    let (lo, hi) = (cfg.tol("lower"), cfg.tol("upper"));

    let n = cfg.n[0];
    let (_, w, _) = windowed(cfg, n)?;
    report.limit_params = limit_params(&law, cfg.lambda_for(n)).ok();
    let sampler = SparseSampler::new(&w)?;
    let rows = replicate(cfg.seed, "hub_connectivity/pair", cfg.reps(0), |i, rng| -> Result<Vec<f64>> {
        let g = sampler.sample(rng);
        let p = partition(&g, &w)?;
        let os = ordered_statistics(&p.components, n, &ex);
        let same = p.same_component(0, 1);
        let in_max = p.label[0] as usize == os.size_order[0];
        Ok(vec![i as f64, same as u8 as f64, in_max as u8 as f64])
    });
    let rows = collect_ok(report, rows);
    report.write_samples("hub_connectivity_pair", &["replication", "two_in_c1", "one_in_cmax"], &rows)?;
    let mut checks = Vec::new();
    for (k, name) in [(1, "P(2 in C(1))"), (2, "P(1 in C_max)")] {
        let successes = rows.iter().filter(|r| r[k] == 1.0).count() as u64;
        let pr = wilson(successes, rows.len() as u64, alpha);
        let est = (pr.trials > 0).then_some(pr.estimate);
        checks.push(Check::inside(name, est, lo, hi));
        checks.push(
            Check::flag(format!("Wilson interval of {name} excludes 0 and 1"), pr.trials > 0 && pr.lower > 0.0 && pr.upper < 1.0)
                .with_detail(format!("[{}, {}]", pr.lower, pr.upper)),
        );
        report.stat(name, pr);
    }
    report.criterion(7, "connectivity of high-weight vertices", checks);

    let Some(&n2) = cfg.n.get(1) else {
        return Ok(());
    };
    let (_, w2, _) = windowed(cfg, n2)?;
    let top_k = cfg.tol("top_k") as usize;
    let top = cfg.tol("top_clusters") as usize;
    let sampler = SparseSampler::new(&w2)?;
    let rows = replicate(cfg.seed, "hub_connectivity/dominance", cfg.reps(1), |i, rng| -> Result<Vec<f64>> {
        let g = sampler.sample(rng);
        let p = partition(&g, &w2)?;
        let os = ordered_statistics(&p.components, n2, &ex);
        let all = os.size_order.iter().take(top).all(|&k| p.components[k].min_vertex < top_k);
        let mins: Vec<f64> = (0..top).map(|j| os.size_order.get(j).map_or(f64::NAN, |&k| p.components[k].min_vertex as f64 + 1.0)).collect();
        Ok(std::iter::once(i as f64).chain(std::iter::once(all as u8 as f64)).chain(mins).collect())
    });
    let rows = collect_ok(report, rows);
    let mut header = vec!["replication".to_string(), "all_hit".to_string()];
    header.extend((1..=top).map(|j| format!("min_vertex_{j}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    report.write_samples("hub_connectivity_dominance", &header, &rows)?;
    let frac = mean(&column(&rows, 1));
    report.stat("dominance_fraction", frac);
    let per_rank: Vec<Option<f64>> =
        (0..top).map(|j| mean(&column(&rows, 2 + j).iter().map(|&v| (v <= top_k as f64) as u8 as f64).collect::<Vec<_>>())).collect();
    report.stat("dominance_fraction_per_rank", per_rank);
    // Smallest K that would have reached the dominance level on these runs.
    let mut worst: Vec<f64> = rows.iter().map(|r| r[2..].iter().copied().fold(0.0, f64::max)).collect();
    worst.sort_by(f64::total_cmp);
    let level = cfg.tol("dominance");
    let k_needed = (!worst.is_empty()).then(|| worst[((level * worst.len() as f64).ceil() as usize).clamp(1, worst.len()) - 1]);
    report.stat("top_k_needed", k_needed);
    report.criterion(
        8,
        "largest clusters contain high-weight vertices",
        vec![Check::at_least(format!("fraction with top {top} clusters meeting [{top_k}]"), frac, cfg.tol("dominance"))],
    );
    Ok(())
}
