use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::coalescent::{simulate_masses, MassVector};
use crate::error::Result;
use crate::exploration::{multiple_hit_check, Explorer};
use crate::graph::{cluster_weight_identity, generate_dense, partition, KernelKind, SparseSampler, DEFAULT_DENSE_GUARD};
use crate::harness::config::ResolvedConfig;
use crate::harness::report::{Check, Report};
use crate::harness::stats::{bonferroni, chi2_homogeneity};
use crate::levy::{char_fn, dominating_path, sample_clocks, thinned_path, ThinnedLevyParams};
use crate::model::{apply_window, build_weights, limit_params};

use super::{collect_ok, ks, mean, replicate, summary};

fn pair_index(i: usize, j: usize, n: usize) -> usize {
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

pub(super) fn model_equivalence(cfg: &ResolvedConfig, report: &mut Report) -> Result<()> {
    let law = cfg.tail_law()?;
    let level = bonferroni(cfg.tol("significance"), 2);
    let n = cfg.n[0];
    let lambda = cfg.lambda_for(n);
    report.limit_params = limit_params(&law, lambda).ok();
    let w = apply_window(&build_weights(&law, n)?, lambda)?;
    let explorer = Explorer::new(&w)?;
    let reps = cfg.reps(0);
    let explored = replicate(cfg.seed, "model_equivalence/explore", reps, |_, rng| {
        explorer.explore(0, None, rng).map(|t| t.cluster_size as f64)
    });
    let explored = collect_ok(report, explored);
    let dense = replicate(cfg.seed, "model_equivalence/dense", reps, |_, rng| -> Result<f64> {
        let g = generate_dense(&w, KernelKind::NorrosReittu, DEFAULT_DENSE_GUARD, rng)?;
        Ok(partition(&g, &w)?.component_of(0).size as f64)
    });
    let dense = collect_ok(report, dense);
    let rows: Vec<Vec<f64>> = explored.iter().zip(&dense).enumerate().map(|(i, (a, b))| vec![i as f64, *a, *b]).collect();
    report.write_samples("model_equivalence_cluster", &["replication", "exploration", "dense"], &rows)?;
    let k = ks(&explored, &dense);
    report.stat("ks_cluster_of_1", k);
    report.stat("exploration", summary(&explored));
    report.stat("dense", summary(&dense));
    let mut checks = vec![Check::at_least("KS p-value exploration vs dense |C(1)|", k.map(|k| k.p_value), level)];

    if let Some(&m) = cfg.n.get(1) {
        let w = apply_window(&build_weights(&law, m)?, cfg.lambda_for(m))?;
        let pairs = m * (m - 1) / 2;
        let reps = cfg.reps(1);
        let sampler = SparseSampler::new(&w)?;
        let indicators = |g: &crate::graph::EdgeList| -> Vec<usize> {
            g.edges.iter().map(|&(i, j)| pair_index(i as usize, j as usize, m)).collect()
        };
        let sparse = replicate(cfg.seed, "model_equivalence/sparse_small", reps, |_, rng| indicators(&sampler.sample(rng)));
        let dense = replicate(cfg.seed, "model_equivalence/dense_small", reps, |_, rng| {
            generate_dense(&w, KernelKind::NorrosReittu, DEFAULT_DENSE_GUARD, rng).map(|g| indicators(&g))
        });
        let dense = collect_ok(report, dense);
        let count = |gs: &[Vec<usize>]| {
            let mut c = vec![0u64; pairs];
            for g in gs {
                for &p in g {
                    c[p] += 1;
                }
            }
            c
        };
        let (cs, cd) = (count(&sparse), count(&dense));
        let (ns, nd) = (sparse.len() as u64, dense.len() as u64);
        // Edges are independent, so the per-pair 2x2 statistics add up.
        let mut stat = 0.0;
        let mut df = 0usize;
        let mut max_z: f64 = 0.0;
        let ws = w.weights();
        for i in 0..m {
            for j in i + 1..m {
                let p = pair_index(i, j, m);
                if let Ok(c) = chi2_homogeneity(&[cs[p], ns - cs[p]], &[cd[p], nd - cd[p]]) {
                    if c.df == 1 && c.statistic.is_finite() && (cs[p] + cd[p]) > 0 && (cs[p] + cd[p]) < ns + nd {
                        stat += c.statistic;
                        df += 1;
                    }
                }
                if nd > 0 {
                    let q = KernelKind::NorrosReittu.edge_probability(ws[i], ws[j], w.ell_n());
                    let f = cd[p] as f64 / nd as f64;
                    let sd = (q * (1.0 - q) / nd as f64).sqrt();
                    if sd > 0.0 {
                        max_z = max_z.max(((f - q) / sd).abs());
                    }
                }
            }
        }
        let p_value = (df > 0).then(|| 1.0 - ChiSquared::new(df as f64).expect("df >= 1").cdf(stat));
        report.stat("edge_chi2", serde_json::json!({ "statistic": stat, "df": df, "p_value": p_value }));
        report.stat("dense_vs_kernel_max_abs_z", max_z);
        let rows: Vec<Vec<f64>> = (0..pairs).map(|p| vec![p as f64, cs[p] as f64, cd[p] as f64]).collect();
        report.write_samples("model_equivalence_edges", &["pair", "sparse_count", "dense_count"], &rows)?;
        checks.push(Check::at_least("chi-square p-value sparse vs dense edge indicators", p_value, level));
    }
    report.criterion(3, "model equivalence", checks);
    Ok(())
}

pub(super) fn process_properties(cfg: &ResolvedConfig, report: &mut Report) -> Result<()> {
    let law = cfg.tail_law()?;
    let p = limit_params(&law, cfg.lambda)?;
    report.limit_params = Some(p.clone());
    let reps = cfg.reps(0);
    let tp = ThinnedLevyParams::from_limit(&p, cfg.truncation)?;
    let mut checks = Vec::new();

    // S <= R on shared clocks, at every event and just before it.
    let horizon = 3.0;
    let violations = replicate(cfg.seed, "process_properties/domination", reps, |_, rng| -> Result<f64> {
        let clocks = sample_clocks(&tp, horizon, true, rng);
        let s = thinned_path(&tp, &clocks, horizon)?;
        let r = dominating_path(&tp, &clocks, horizon)?;
        let mut worst: f64 = 0.0;
        for &t in r.times.iter().chain(&s.times).chain(std::iter::once(&horizon)) {
            worst = worst.max(s.value_at(t) - r.value_at(t));
            let left = t.next_down();
            if left > 0.0 {
                worst = worst.max(s.value_at(left) - r.value_at(left));
            }
        }
        Ok(worst)
    });
    let violations = collect_ok(report, violations);
    let worst = violations.iter().copied().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    checks.push(Check::at_most("max (S - R) over shared clocks", worst, 1e-9));

    // S_t = b S'_{a t} with S' the (1, 1, c/(ab)) process on clocks scaled by a.
    let unit = ThinnedLevyParams::new(1.0, 1.0, p.c / (p.a * p.b), p.alpha, cfg.truncation)?;
    let dev = replicate(cfg.seed, "process_properties/scaling", reps, |_, rng| -> Result<f64> {
        let c = sample_clocks(&tp, horizon, false, rng);
        let s = thinned_path(&tp, &c, horizon)?;
        let s2 = thinned_path(&unit, &c.scaled(tp.a), horizon * tp.a)?;
        let mut worst: f64 = 0.0;
        for k in 0..=60 {
            let t = horizon * k as f64 / 60.0;
            let lhs = s.value_at(t);
            worst = worst.max((lhs - tp.b * s2.value_at(tp.a * t)).abs() / lhs.abs().max(1.0));
        }
        Ok(worst)
    });
    let dev = collect_ok(report, dev);
    let worst = dev.iter().copied().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    checks.push(Check::at_most("max relative deviation in the scaling relation", worst, 1e-10));

    checks.push(super::levy::truncation_slope(cfg, report, reps)?);

    // Multiple hits among the first m = n^rho marks against the expectation bound.
    let n = cfg.n[0];
    let w = apply_window(&build_weights(&law, n)?, cfg.lambda)?;
    let explorer = Explorer::new(&w)?;
    let m = (n as f64).powf(law.exponents().rho).ceil() as usize;
    let hits = replicate(cfg.seed, "process_properties/multiple_hits", reps, |_, rng| explorer.mark_repeats(0, m, rng));
    let hits = collect_ok(report, hits);
    let observed = mean(&hits.iter().map(|h| h.observed as f64).collect::<Vec<_>>());
    let bound = hits.first().map(|h| h.bound);
    checks.push(Check::at_most("mean multiple hits minus bound", observed.zip(bound).map(|(o, b)| o - b), 0.0));
    let walk = replicate(cfg.seed, "process_properties/multiple_hits_walk", reps, |_, rng| -> Result<(f64, f64)> {
        let t = explorer.explore(0, None, rng)?;
        let h = multiple_hit_check(&t, &w)?;
        Ok((h.observed as f64, h.bound))
    });
    let walk = collect_ok(report, walk);
    let walk_obs = mean(&walk.iter().map(|h| h.0).collect::<Vec<_>>());
    let walk_bound = mean(&walk.iter().map(|h| h.1).collect::<Vec<_>>());
    report.stat(
        "multiple_hits",
        serde_json::json!({
            "m": m,
            "mean_observed": observed,
            "bound": bound,
            "walk_mean_observed": walk_obs,
            "walk_mean_bound_at_v": walk_bound,
        }),
    );

    // Cluster weight identity on realized graphs.
    let sampler = SparseSampler::new(&w)?;
    let ident = replicate(cfg.seed, "process_properties/identity", reps.min(100), |_, rng| -> Result<f64> {
        let g = sampler.sample(rng);
        let part = partition(&g, &w)?;
        let mut worst: f64 = 0.0;
        for m in 1..=3 {
            let (l, r) = cluster_weight_identity(&part, &w, m);
            worst = worst.max((l - r).abs() / l.abs().max(f64::MIN_POSITIVE));
        }
        Ok(worst)
    });
    let ident = collect_ok(report, ident);
    let worst = ident.iter().copied().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    checks.push(Check::at_most("max relative error in the cluster weight identity", worst, cfg.tol("identity_rel")));

    // Mass conservation of the coalescent.
    let mass = replicate(cfg.seed, "process_properties/mass", reps, |_, rng| -> Result<bool> {
        let k = rng.random_range(2..60);
        let x0 = MassVector::new((0..k).map(|_| rng.random::<f64>() * 0.2).collect())?;
        let t = rng.random::<f64>() * 2.0;
        let y = simulate_masses(&x0, t, rng)?;
        Ok((y.total() - x0.total()).abs() <= 1e-12 * x0.total() && y.sigma2() >= x0.sigma2() * (1.0 - 1e-12) && y.len() <= x0.len())
    });
    let mass = collect_ok(report, mass);
    checks.push(Check::flag("coalescent conserves mass", !mass.is_empty() && mass.iter().all(|&b| b)));

    // Characteristic function envelope.
    let mut cf = Vec::new();
    for th in [0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
        let v = char_fn(p.alpha, 1.0, th, cfg.truncation)?;
        checks.push(Check::at_most(format!("|f| / exp(-t Phi) at theta={th}"), Some(v.modulus / v.envelope), 1.0));
        report.diagnostics.push(Check::at_most(
            format!("|f| / corrected envelope at theta={th}"),
            Some(v.modulus / v.corrected_envelope),
            1.0 + 1e-12,
        ));
        cf.push(v);
    }
    report.stat("char_fn", &cf);
    report.criterion(10, "process-level properties", checks);
    Ok(())
}
