//! Finite multiplicative coalescent, the entrance-boundary statistics and
//! the excursion representation of the `(0, beta, c)` coalescent.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::LimitParams;
use crate::numerics::{compensated_sum, power_tail};
use crate::rng::{bernoulli_skip, exponential, truncated_exponential};

/// Masses sorted descending with cached power sums.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassVector {
    masses: Vec<f64>,
    sigma2: f64,
    sigma3: f64,
}

impl MassVector {
    pub fn new(mut masses: Vec<f64>) -> Result<Self> {
        if masses.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter("masses must be finite and non-negative".into()));
        }
        masses.sort_by(|a, b| b.total_cmp(a));
        let sigma2 = compensated_sum(masses.iter().map(|x| x * x));
        let sigma3 = compensated_sum(masses.iter().map(|x| x * x * x));
        Ok(Self { masses, sigma2, sigma3 })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.masses.iter().copied())
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma3(&self) -> f64 {
        self.sigma3
    }
}

/// `sigma_r(x) = sum_j x_j^r` for `r` in {2, 3}.
pub fn sigma_r(x: &MassVector, r: u32) -> Result<f64> {
    match r {
        2 => Ok(x.sigma2),
        3 => Ok(x.sigma3),
        _ => Err(Error::InvalidParameter(format!("sigma_r is defined for r = 2, 3 (got {r})"))),
    }
}

/// Fenwick tree over masses for size-biased index sampling.
struct Fenwick {
    tree: Vec<f64>,
    values: Vec<f64>,
}

impl Fenwick {
    fn new(values: &[f64]) -> Self {
        let n = values.len();
        let mut tree = vec![0.0; n + 1];
        for (i, v) in values.iter().enumerate() {
            let mut k = i + 1;
            while k <= n {
                tree[k] += v;
                k += k & k.wrapping_neg();
            }
        }
        Self { tree, values: values.to_vec() }
    }

    fn add(&mut self, i: usize, delta: f64) {
        self.values[i] += delta;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    /// Index `i` with prefix sum just above `u`.
    fn find(&self, mut u: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= u {
                pos = next;
                u -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }

    fn sample<R: Rng + ?Sized>(&self, total: f64, rng: &mut R) -> usize {
        loop {
            let i = self.find(rng.random::<f64>() * total);
            if self.values[i] > 0.0 {
                return i;
            }
        }
    }
}

/// Runs the chain in which each pair of masses `x, y` merges at rate `xy`
/// for time `t`: one exponential race at total rate `(sigma_1^2 - sigma_2)/2`,
/// with the merging pair drawn size-biased twice, rejecting equal indices.
pub fn simulate_masses<R: Rng + ?Sized>(x0: &MassVector, t: f64, rng: &mut R) -> Result<MassVector> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter("t must be non-negative".into()));
    }
    let mut x: Vec<f64> = x0.masses.iter().copied().filter(|m| *m > 0.0).collect();
    let mut active = x.len();
    if active < 2 || t == 0.0 {
        return Ok(x0.clone());
    }
    let sigma1 = compensated_sum(x.iter().copied());
    let mut sigma2 = x0.sigma2;
    let mut fw = Fenwick::new(&x);
    let mut clock = 0.0;
    while active > 1 {
        let rate = 0.5 * (sigma1 * sigma1 - sigma2);
        if !(rate > 0.0) {
            break;
        }
        clock += exponential(rng, rate);
        if clock > t {
            break;
        }
        let (i, j) = loop {
            let i = fw.sample(sigma1, rng);
            let j = fw.sample(sigma1, rng);
            if i != j {
                break (i, j);
            }
        };
        let (xi, xj) = (x[i], x[j]);
        sigma2 += 2.0 * xi * xj;
        x[i] = xi + xj;
        x[j] = 0.0;
        fw.add(i, xj);
        fw.add(j, -xj);
        active -= 1;
    }
    MassVector::new(x.into_iter().filter(|m| *m > 0.0).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct EntranceStats {
    /// `|lambda_n| (|lambda_n| sigma_2 - 1)`.
    pub cond_a: f64,
    /// `x_j / sigma_2`, `j = 1..=jmax`.
    pub cond_b: Vec<f64>,
    /// `|lambda_n|^3 sigma_3`.
    pub cond_c: f64,
    /// `-beta`.
    pub target_a: f64,
    /// `d_j`, `j = 1..=jmax`.
    pub target_b: Vec<f64>,
    /// `sum_{j>=1} d_j^3`.
    pub target_c: f64,
    /// `sum_{j<=jmax} d_j^3`.
    pub target_c_partial: f64,
    /// Error bound of `target_c`.
    pub target_c_error: f64,
}

pub fn entrance_conditions(x: &MassVector, lambda_n: f64, params: &LimitParams, jmax: usize) -> Result<EntranceStats> {
    if !(x.sigma2 > 0.0) {
        return Err(Error::InvalidParameter("entrance conditions need sigma_2 > 0".into()));
    }
    let l = lambda_n.abs();
    let cond_b = (0..jmax).map(|j| x.masses.get(j).copied().unwrap_or(0.0) / x.sigma2).collect();
    let target_b: Vec<f64> = (1..=jmax).map(|j| params.dj(j)).collect();
    let d1 = params.dj(1);
    let (series, err) = power_tail(3.0 * params.alpha, 1);
    Ok(EntranceStats {
        cond_a: l * (l * x.sigma2 - 1.0),
        cond_b,
        cond_c: l.powi(3) * x.sigma3,
        target_a: -params.beta,
        target_c_partial: compensated_sum(target_b.iter().map(|d| d * d * d)),
        target_b,
        target_c: d1.powi(3) * series,
        target_c_error: d1.powi(3) * err,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcursionSample {
    /// Excursion lengths, descending.
    pub lengths: Vec<f64>,
    /// An excursion was still open at the horizon and was dropped.
    pub open_at_horizon: bool,
    /// `beta - sum_j c_j^2`.
    pub slope: f64,
}

/// Lengths of the excursions above the running minimum of
/// `W(s) = beta s + sum_j c_j (1{E_j <= s} - c_j s)`, `E_j ~ Exp(c_j)`, on `[0, horizon]`.
pub fn excursion_lengths<R: Rng + ?Sized>(cvec: &[f64], beta: f64, horizon: f64, rng: &mut R) -> Result<ExcursionSample> {
    if cvec.is_empty() {
        return Err(Error::Empty("c vector"));
    }
    if cvec.iter().any(|c| !(*c > 0.0)) || cvec.windows(2).any(|p| p[1] > p[0]) {
        return Err(Error::InvalidParameter("c entries must be positive and non-increasing".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    let slope = beta - compensated_sum(cvec.iter().map(|c| c * c));
    let mut events: Vec<(f64, f64)> = Vec::new();
    bernoulli_skip(rng, 0, cvec.len() as u64, |j| -(-cvec[j as usize] * horizon).exp_m1(), |j| {
        events.push((0.0, cvec[j as usize]))
    });
    for e in &mut events {
        e.0 = truncated_exponential(rng, e.1, horizon);
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(reflect(&events, slope, horizon))
}

fn reflect(events: &[(f64, f64)], slope: f64, horizon: f64) -> ExcursionSample {
    let mut lengths = Vec::new();
    let mut open = false;
    // Current excursion: (start time, level of the running minimum).
    let mut excursion: Option<(f64, f64)> = None;
    let mut t0 = 0.0;
    let mut v = 0.0;
    for &(t, h) in events {
        if let Some((start, level)) = excursion {
            if slope < 0.0 {
                let end = t0 + (v - level) / -slope;
                if end <= t {
                    push_length(&mut lengths, end - start);
                    excursion = None;
                }
            }
        }
        v += slope * (t - t0);
        t0 = t;
        if excursion.is_none() {
            excursion = Some((t, v));
        }
        v += h;
    }
    if let Some((start, level)) = excursion {
        let end = if slope < 0.0 { t0 + (v - level) / -slope } else { f64::INFINITY };
        if end <= horizon {
            push_length(&mut lengths, end - start);
        } else {
            open = true;
        }
    } else if slope > 0.0 {
        open = true;
    }
    lengths.sort_by(|a, b| b.total_cmp(a));
    ExcursionSample { lengths, open_at_horizon: open, slope }
}

fn push_length(lengths: &mut Vec<f64>, len: f64) {
    if len > 1e-12 {
        lengths.push(len);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{critical_pareto, limit_params};
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn mv(v: &[f64]) -> MassVector {
        MassVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sigma_examples() {
        let x = mv(&[1.0]);
        assert_eq!((sigma_r(&x, 2).unwrap(), sigma_r(&x, 3).unwrap()), (1.0, 1.0));
        let x = mv(&[0.5, 0.5]);
        assert_eq!((x.sigma2(), x.sigma3()), (0.5, 0.25));
        assert_eq!(mv(&[0.1, 0.7, 0.2]), mv(&[0.2, 0.1, 0.7]));
        assert!(sigma_r(&x, 4).is_err());
    }

    #[test]
    fn zero_time_is_identity() {
        let x = mv(&[3.0, 1.0, 2.0]);
        let mut rng = stream_rng(1, "c", 0);
        assert_eq!(simulate_masses(&x, 0.0, &mut rng).unwrap(), x);
    }

    #[test]
    fn merge_probabilities() {
        let reps = 100_000;
        let mut rng = stream_rng(2, "c", 0);
        let x = mv(&[1.0, 1.0]);
        let merged = (0..reps).filter(|_| simulate_masses(&x, 2f64.ln(), &mut rng).unwrap().len() == 1).count();
        let f = merged as f64 / reps as f64;
        assert!((f - 0.5).abs() < 3.0 * (0.25 / reps as f64).sqrt(), "{f}");
        let x = mv(&[1.0, 1.0, 1.0]);
        let none = (0..reps).filter(|_| simulate_masses(&x, 0.1, &mut rng).unwrap().len() == 3).count();
        let p = (-0.3f64).exp();
        let f = none as f64 / reps as f64;
        assert!((f - p).abs() < 3.0 * (p * (1.0 - p) / reps as f64).sqrt(), "{f} vs {p}");
    }

    #[test]
    fn unequal_pair_selection() {
        // Masses (2, 1, 1): the first merge joins the heavy mass with prob 4/5.
        let reps = 50_000;
        let mut rng = stream_rng(3, "c", 0);
        let x = mv(&[2.0, 1.0, 1.0]);
        let mut heavy = 0;
        let mut merged = 0;
        for _ in 0..reps {
            let y = simulate_masses(&x, 0.05, &mut rng).unwrap();
            if y.len() == 2 {
                merged += 1;
                if y.masses()[0] == 3.0 {
                    heavy += 1;
                }
            }
        }
        let f = heavy as f64 / merged as f64;
        assert!((f - 0.8).abs() < 4.0 * (0.16 / merged as f64).sqrt(), "{f}");
    }

    #[test]
    fn entrance_plug_in() {
        let p = limit_params(&critical_pareto(3.5).unwrap(), 0.0).unwrap();
        let lam: f64 = -7.0;
        let jmax = 200_000;
        let x: Vec<f64> = (1..=jmax).map(|j| p.dj(j) / lam.abs()).collect();
        let x = mv(&x);
        let s = entrance_conditions(&x, lam, &p, 3).unwrap();
        for j in 0..3 {
            let back = s.cond_b[j] * lam.abs() * x.sigma2();
            assert!((back - p.dj(j + 1)).abs() < 1e-12);
        }
        assert!((s.target_a - p.zeta * 9.0 / 5.0).abs() < 1e-12);
        let z3a = 5.591_582_441;
        assert!((s.target_c / p.dj(1).powi(3) - z3a).abs() < 1e-6, "{}", s.target_c);
        assert!(s.target_c_partial < s.target_c);
    }

    #[test]
    fn excursion_examples() {
        let mut rng = stream_rng(4, "ex", 0);
        // Rates so small that no clock rings: no excursions.
        let s = excursion_lengths(&[1e-12], 0.0, 1.0, &mut rng).unwrap();
        assert!(s.lengths.is_empty() && !s.open_at_horizon);
        let r = reflect(&[(0.7, 0.3)], -0.5, 10.0);
        assert_eq!(r.lengths.len(), 1);
        assert!((r.lengths[0] - 0.6).abs() < 1e-12);
        let r = reflect(&[(1.0, 1.0), (1.5, 1.0), (5.0, 0.5)], -1.0, 100.0);
        // Jumps at 1 and 1.5 lift the path to 1.5 above the minimum; it returns at 3.
        assert_eq!(r.lengths, vec![2.0, 0.5]);
        let r = reflect(&[(1.0, 1.0)], -0.1, 2.0);
        assert!(r.open_at_horizon && r.lengths.is_empty());
    }

    proptest! {
        #[test]
        fn coalescent_conserves_mass(seed in 0u64..300, n in 2usize..60, t in 0.0f64..3.0) {
            let mut rng = stream_rng(seed, "mass", 0);
            let x0: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let x0 = mv(&x0);
            let y = simulate_masses(&x0, t, &mut rng).unwrap();
            prop_assert!((y.total() - x0.total()).abs() < 1e-12 * x0.total());
            prop_assert!(y.sigma2() >= x0.sigma2() - 1e-12);
            prop_assert!(y.len() <= x0.len());
            let re = MassVector::new(y.masses().to_vec()).unwrap();
            prop_assert!((re.sigma2() - y.sigma2()).abs() <= 1e-12 * y.sigma2());
        }
    }
}
