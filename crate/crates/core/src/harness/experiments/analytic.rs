use crate::branching::{progeny_moments, write_moments_csv, BranchingProcess, MomentRow, Root, DEFAULT_PROGENY_CAP};
use crate::error::Result;
use crate::harness::config::ResolvedConfig;
use crate::harness::report::{Check, Report};
use crate::model::{apply_window, build_weights, limit_params, nu_n, zeta_series, WeightSequence};

use super::{mean, replicate, summary};

pub(super) fn zeta_convergence(cfg: &ResolvedConfig, report: &mut Report) -> Result<()> {
    let law = cfg.tail_law()?;
    let ex = law.exponents();
    let zeta = zeta_series(&law, cfg.tol("zeta_tol"))?;
    report.stat("zeta", zeta);
    report.limit_params = limit_params(&law, cfg.lambda).ok();
    let mut rows = Vec::new();
    let mut diffs = Vec::new();
    for &n in &cfg.n {
        let w = apply_window(&build_weights(&law, n)?, cfg.lambda)?;
        let value = (n as f64).powf(ex.eta) * (nu_n(&w)? - 1.0);
        let diff = (value - zeta.value).abs();
        diffs.push(diff);
        rows.push(vec![n as f64, value, zeta.value, diff]);
    }
    report.stat("abs_differences", &diffs);
    report.write_samples("zeta_convergence", &["n", "scaled_nu_minus_one", "zeta", "abs_difference"], &rows)?;
    let monotone = !diffs.is_empty() && diffs.windows(2).all(|p| p[1] < p[0]);
    let final_rel = diffs.last().map(|d| d / zeta.value.abs());
    report.criterion(
        1,
        "zeta expansion of nu_n",
        vec![
            Check::flag("abs difference decreases in n", monotone).with_detail(format!("{diffs:?}")),
            Check::at_most("final relative difference", final_rel, cfg.tol("final_rel")),
        ],
    );
    Ok(())
}

pub(super) fn moments(cfg: &ResolvedConfig, report: &mut Report) -> Result<()> {
    let law = cfg.tail_law()?;
    let n = cfg.n[0];
    let reps = cfg.reps(0);
    let base = build_weights(&law, n)?;
    let nu0 = nu_n(&base)?;
    let k_se = cfg.tol("se_multiple");
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (k, &target) in cfg.nu.iter().enumerate() {
        let w = WeightSequence::from_weights(base.weights().iter().map(|x| x * target / nu0).collect(), Some(cfg.tau))?;
        let pm = progeny_moments(&w, Some(0))?;
        let vm = pm.vertex.expect("vertex moments requested");
        let bp = BranchingProcess::new(&w)?;
        let outs = replicate(cfg.seed, &format!("moments/nu{k}"), reps, |_, rng| {
            (bp.simulate(Root::SizeBiased, DEFAULT_PROGENY_CAP, rng), bp.simulate(Root::Vertex(0), DEFAULT_PROGENY_CAP, rng))
        });
        let capped = outs.iter().filter(|(a, b)| a.capped || b.capped).count();
        report.capped += capped as u64;
        let ok: Vec<_> = outs.iter().filter(|(a, b)| !a.capped && !b.capped).collect();
        let col = |f: &dyn Fn(&(crate::branching::BpOutcome, crate::branching::BpOutcome)) -> f64| -> Vec<f64> {
            ok.iter().map(|o| f(o)).collect()
        };
        let quantities: [(&str, Vec<f64>, f64); 6] = [
            ("E[T]", col(&|o| o.0.t as f64), pm.mean_t),
            ("E[T^2]", col(&|o| (o.0.t as f64).powi(2)), pm.mean_t2),
            ("E[w_T]", col(&|o| o.0.wt), pm.mean_wt),
            ("E[w_T^2]", col(&|o| o.0.wt.powi(2)), pm.mean_wt2),
            ("E[T(1)]", col(&|o| o.1.t as f64), vm.mean_t),
            ("E[w_T(1)]", col(&|o| o.1.wt), vm.mean_wt),
        ];
        for (name, samples, analytic) in quantities {
            let label = format!("{name} at nu={target}");
            match summary(&samples) {
                Some(s) => {
                    rows.push(MomentRow::new(label.clone(), analytic, s.mean, s.se));
                    checks.push(Check::absolute(label, Some(s.mean), analytic, k_se * s.se));
                }
                None => checks.push(Check::absolute(label, None, analytic, 0.0)),
            }
        }
        report.stat(&format!("capped_nu{k}"), capped);
    }
    report.stat("moments", &rows);
    if let Some(dir) = cfg.out.clone() {
        std::fs::create_dir_all(&dir)?;
        let f = std::fs::File::create(dir.join("samples_moments.csv"))?;
        write_moments_csv(&rows, std::io::BufWriter::new(f))?;
        report.sample_files.push("samples_moments.csv".into());
    }
    report.criterion(2, "branching process moments", checks);
    gap_trend(cfg, report, &law)
}

/// Mean of `T(1) - |C(1)|` relative to mean `T(1)` at `nu_n = 0.9` for n = 10^3, 10^4, 10^5.
fn gap_trend(cfg: &ResolvedConfig, report: &mut Report, law: &crate::model::TailLaw) -> Result<()> {
    let reps = cfg.reps(0).min(10_000);
    let mut ratios = Vec::new();
    for (k, n) in [1_000usize, 10_000, 100_000].into_iter().enumerate() {
        let base = build_weights(law, n)?;
        let nu0 = nu_n(&base)?;
        let w = WeightSequence::from_weights(base.weights().iter().map(|x| x * 0.9 / nu0).collect(), Some(cfg.tau))?;
        let bp = BranchingProcess::new(&w)?;
        let gaps = replicate(cfg.seed, &format!("moments/gap{k}"), reps, |_, rng| bp.coupled(0, DEFAULT_PROGENY_CAP, rng));
        let size_gap: Vec<f64> = gaps.iter().filter(|g| !g.bp.capped).map(|g| g.size_gap as f64).collect();
        let t: Vec<f64> = gaps.iter().filter(|g| !g.bp.capped).map(|g| g.bp.t as f64).collect();
        let negative = gaps.iter().any(|g| g.size_gap < 0 || g.weight_gap < -1e-9);
        report.diagnostics.push(Check::flag(format!("coupled gap non-negative at n={n}"), !negative));
        if let (Some(g), Some(m)) = (mean(&size_gap), mean(&t)) {
            ratios.push(g / m);
        }
    }
    report.stat("gap_over_mean_t", &ratios);
    let decreasing = ratios.len() == 3 && ratios.windows(2).all(|p| p[1] <= p[0]);
    report.diagnostics.push(Check::flag("mean gap / mean T decreases in n", decreasing).with_detail(format!("{ratios:?}")));
    Ok(())
}
