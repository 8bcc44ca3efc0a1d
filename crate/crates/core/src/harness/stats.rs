//! Empirical-distribution comparison and summary statistics.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::numerics::compensated_sum;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KsResult {
    pub d: f64,
    /// Asymptotic Kolmogorov p-value.
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov distance `sup |F_a - F_b|` and its asymptotic p-value.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("KS sample"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult { d, p_value: kolmogorov_q(lambda) })
}

/// `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Jackknife standard error of the mean.
    pub se: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    /// Deciles 0.1, ..., 0.9.
    pub deciles: Vec<f64>,
}

pub fn summarize(samples: &[f64]) -> Result<Summary> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::Empty("summary sample"));
    }
    let total = compensated_sum(samples.iter().copied());
    let mean = total / n as f64;
    let (sd, se) = if n > 1 {
        let nf = n as f64;
        let ss = compensated_sum(samples.iter().map(|x| (x - mean).powi(2)));
        // Leave-one-out means (total - x_i)/(n - 1) deviate from their
        // average by (mean - x_i)/(n - 1).
        let jack = ((nf - 1.0) / nf * ss / (nf - 1.0).powi(2)).sqrt();
        ((ss / (nf - 1.0)).sqrt(), jack)
    } else {
        (0.0, 0.0)
    };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let deciles = (1..=9).map(|k| quantile_sorted(&sorted, k as f64 / 10.0)).collect();
    Ok(Summary { n, mean, se, sd, min: sorted[0], max: sorted[n - 1], deciles })
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Wilson score interval at two-sided level `1 - alpha`.
pub fn wilson(successes: u64, trials: u64, alpha: f64) -> Proportion {
    if trials == 0 {
        return Proportion { successes, trials, estimate: f64::NAN, lower: 0.0, upper: 1.0 };
    }
    let z = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    let nf = trials as f64;
    let p = successes as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let center = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    Proportion { successes, trials, estimate: p, lower: (center - half).max(0.0), upper: (center + half).min(1.0) }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Chi-square test that two count vectors come from the same categorical law.
pub fn chi2_homogeneity(a: &[u64], b: &[u64]) -> Result<ChiSquare> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidParameter("count vectors must be non-empty and of equal length".into()));
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(Error::Empty("chi-square sample"));
    }
    let total = (na + nb) as f64;
    let mut stat = 0.0;
    let mut cells = 0;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        cells += 1;
        let ea = col * na as f64 / total;
        let eb = col * nb as f64 / total;
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    let df = cells.max(2) - 1;
    let p_value = 1.0 - ChiSquared::new(df as f64).expect("df >= 1").cdf(stat);
    Ok(ChiSquare { statistic: stat, df, p_value })
}

/// Per-test significance after Bonferroni correction over `tests` tests.
pub fn bonferroni(level: f64, tests: usize) -> f64 {
    level / tests.max(1) as f64
}
