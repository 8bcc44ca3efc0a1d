//! The experiment drivers. Each fills a [`Report`] and writes its sample CSVs.

mod analytic;
mod clusters;
mod coalescent;
mod levy;
mod properties;

use rayon::prelude::*;

use crate::error::Result;
use crate::harness::config::{Experiment, ResolvedConfig};
use crate::harness::report::Report;
use crate::harness::stats::{ks_statistic, summarize, KsResult, Summary};
use crate::rng::{stream_rng, SimRng};

pub(crate) fn run(cfg: &ResolvedConfig, report: &mut Report) -> Result<()> {
    match cfg.experiment {
        Experiment::ZetaConvergence => analytic::zeta_convergence(cfg, report),
        Experiment::Moments => analytic::moments(cfg, report),
        Experiment::ModelEquivalence => properties::model_equivalence(cfg, report),
        Experiment::OrderedClusters => clusters::ordered_clusters(cfg, report),
        Experiment::Subcritical => clusters::subcritical(cfg, report),
        Experiment::HubConnectivity => clusters::hub_connectivity(cfg, report),
        Experiment::CoalescentConditions => coalescent::coalescent_conditions(cfg, report),
        Experiment::LevyHitting => levy::levy_hitting(cfg, report),
        Experiment::TruncationScaling => levy::truncation_scaling(cfg, report),
        Experiment::ProcessProperties => properties::process_properties(cfg, report),
    }
}

/// Runs `count` replications in parallel; replication `i` draws from
/// `stream_rng(seed, label, i)` and results come back in index order.
pub(crate) fn replicate<T, F>(seed: u64, label: &str, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut SimRng) -> T + Sync + Send,
{
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, label, i as u64);
            f(i, &mut rng)
        })
        .collect()
}

/// Keeps the `Ok` values and records the errors in the report.
pub(crate) fn collect_ok<T>(report: &mut Report, results: Vec<Result<T>>) -> Vec<T> {
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(v) => out.push(v),
            Err(e) => report.errors.push(e.to_string()),
        }
    }
    out
}

pub(crate) fn summary(x: &[f64]) -> Option<Summary> {
    summarize(x).ok()
}

pub(crate) fn mean(x: &[f64]) -> Option<f64> {
    summary(x).map(|s| s.mean)
}

pub(crate) fn ks(a: &[f64], b: &[f64]) -> Option<KsResult> {
    ks_statistic(a, b).ok()
}

pub(crate) fn column(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).filter(|v| v.is_finite()).collect()
}

/// Least-squares slope of `y` on `x`.
pub(crate) fn ols_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicate_is_schedule_independent() {
        use rand::Rng;
        let a = replicate(7, "x", 50, |_, rng| rng.random::<u64>());
        let b: Vec<u64> = (0..50).map(|i| stream_rng(7, "x", i).random::<u64>()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn slope_of_line() {
        assert_eq!(ols_slope(&[1.0, 2.0, 3.0], &[1.0, 3.0, 5.0]), Some(2.0));
        assert_eq!(ols_slope(&[1.0], &[1.0]), None);
    }
}
