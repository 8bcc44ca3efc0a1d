//! Weight sequences, critical tuning and the analytic constants of the
//! scaling limit.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{compensated_sum, power_sum};

/// The exponents alpha = 1/(tau-1), rho = (tau-2)/(tau-1), eta = (tau-3)/(tau-1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Exponents {
    pub alpha: f64,
    pub rho: f64,
    pub eta: f64,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 3.0 && tau < 4.0 {
        Ok(())
    } else {
        Err(Error::InvalidTau(tau))
    }
}

pub fn exponents(tau: f64) -> Result<Exponents> {
    check_tau(tau)?;
    let alpha = 1.0 / (tau - 1.0);
    Ok(Exponents { alpha, rho: 1.0 - alpha, eta: (tau - 3.0) / (tau - 1.0) })
}

pub type QuantileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum TailForm {
    /// `1 - F(x) = (scale / x)^(tau-1)` for `x >= scale`.
    Pareto { scale: f64 },
    /// User-supplied `u -> [1-F]^{-1}(u)` with its first two moments.
    Quantile { quantile: QuantileFn, mean: f64, second_moment: f64 },
}

impl fmt::Debug for TailForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailForm::Pareto { scale } => f.debug_struct("Pareto").field("scale", scale).finish(),
            TailForm::Quantile { mean, second_moment, .. } => f
                .debug_struct("Quantile")
                .field("mean", mean)
                .field("second_moment", second_moment)
                .finish_non_exhaustive(),
        }
    }
}

/// Weight law with `1 - F(x) ~ c_F x^{-(tau-1)}`.
#[derive(Clone, Debug)]
pub struct TailLaw {
    pub tau: f64,
    pub c_f: f64,
    pub form: TailForm,
}

impl TailLaw {
    pub fn pareto(tau: f64, scale: f64) -> Result<Self> {
        check_tau(tau)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("Pareto scale must be positive, got {scale}")));
        }
        Ok(Self { tau, c_f: scale.powf(tau - 1.0), form: TailForm::Pareto { scale } })
    }

    /// A law given by its quantile function. `quantile(1)` is taken to be 0.
    pub fn from_quantile<Q>(tau: f64, c_f: f64, mean: f64, second_moment: f64, quantile: Q) -> Result<Self>
    where
        Q: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_tau(tau)?;
        if !(c_f > 0.0) || !(mean > 0.0) || !(second_moment > 0.0) {
            return Err(Error::InvalidParameter("c_F, mean and second moment must be positive".into()));
        }
        Ok(Self { tau, c_f, form: TailForm::Quantile { quantile: Arc::new(quantile), mean, second_moment } })
    }

    pub fn exponents(&self) -> Exponents {
        exponents(self.tau).expect("tau validated at construction")
    }

    /// `[1-F]^{-1}(u)` for `u` in (0, 1].
    pub fn quantile(&self, u: f64) -> f64 {
        match &self.form {
            TailForm::Pareto { scale } => scale * u.powf(-1.0 / (self.tau - 1.0)),
            TailForm::Quantile { quantile, .. } => {
                if u >= 1.0 {
                    0.0
                } else {
                    quantile(u)
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.form {
            TailForm::Pareto { scale } => scale * (self.tau - 1.0) / (self.tau - 2.0),
            TailForm::Quantile { mean, .. } => *mean,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match &self.form {
            TailForm::Pareto { scale } => scale * scale * (self.tau - 1.0) / (self.tau - 3.0),
            TailForm::Quantile { second_moment, .. } => *second_moment,
        }
    }

    /// `nu = E[W^2] / E[W]`.
    pub fn nu(&self) -> f64 {
        self.second_moment() / self.mean()
    }

    pub fn is_critical(&self) -> bool {
        (self.nu() - 1.0).abs() < 1e-9
    }
}

/// Pareto law with scale `(tau-3)/(tau-2)`, the unique scale with `nu = 1`.
pub fn critical_pareto(tau: f64) -> Result<TailLaw> {
    check_tau(tau)?;
    TailLaw::pareto(tau, (tau - 3.0) / (tau - 2.0))
}

/// Sorted weights `w_1 >= ... >= w_n` together with a window perturbation.
#[derive(Clone, Debug)]
pub struct WeightSequence {
    base: Arc<Vec<f64>>,
    weights: Vec<f64>,
    ell_n: f64,
    lambda: f64,
    factor: f64,
    tau: Option<f64>,
}

impl WeightSequence {
    /// Wraps an explicit non-increasing, non-negative weight vector.
    pub fn from_weights(weights: Vec<f64>, tau: Option<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("weight sequence"));
        }
        for (k, pair) in weights.windows(2).enumerate() {
            if pair[1] > pair[0] {
                return Err(Error::InvalidParameter(format!(
                    "weights must be non-increasing (w_{} < w_{})",
                    k + 1,
                    k + 2
                )));
            }
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("weights must be finite and non-negative".into()));
        }
        if let Some(t) = tau {
            check_tau(t)?;
        }
        let ell_n = compensated_sum(weights.iter().copied());
        Ok(Self { base: Arc::new(weights.clone()), weights, ell_n, lambda: 0.0, factor: 1.0, tau })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Unperturbed weights.
    pub fn base_weights(&self) -> &[f64] {
        &self.base
    }

    /// Weight of vertex `i` (0-based).
    pub fn w(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn ell_n(&self) -> f64 {
        self.ell_n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The window factor `1 + lambda n^{-eta}`.
    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn tau(&self) -> Option<f64> {
        self.tau
    }

    pub fn exponents(&self) -> Option<Exponents> {
        self.tau.map(|t| exponents(t).expect("tau validated"))
    }

    /// `sum_{j} w_j^k / ell_n` over the current weights.
    pub fn moment_ratio(&self, k: i32) -> f64 {
        compensated_sum(self.weights.iter().map(|w| w.powi(k))) / self.ell_n
    }
}

/// `w_i = [1-F]^{-1}(i/n)` for `i = 1..n`.
pub fn build_weights(law: &TailLaw, n: usize) -> Result<WeightSequence> {
    if n == 0 {
        return Err(Error::Empty("n must be at least 1"));
    }
    let nf = n as f64;
    let mut weights = Vec::with_capacity(n);
    for i in 1..=n {
        let u = i as f64 / nf;
        let w = law.quantile(u);
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidQuantile { u, reason: "negative or non-finite value" });
        }
        if let Some(&prev) = weights.last() {
            if w > prev {
                return Err(Error::InvalidQuantile { u, reason: "quantile is increasing" });
            }
        }
        weights.push(w);
    }
    WeightSequence::from_weights(weights, Some(law.tau))
}

/// Window factor `1 + lambda n^{-eta}`.
pub fn window_factor(n: usize, lambda: f64, eta: f64) -> f64 {
    1.0 + lambda * (n as f64).powf(-eta)
}

/// `w(lambda) = (1 + lambda n^{-eta}) w`, always applied to the unperturbed weights.
pub fn apply_window(w: &WeightSequence, lambda: f64) -> Result<WeightSequence> {
    let eta = w
        .exponents()
        .ok_or_else(|| Error::InvalidParameter("window needs tau; use apply_window_with_eta".into()))?
        .eta;
    apply_window_with_eta(w, lambda, eta)
}

pub fn apply_window_with_eta(w: &WeightSequence, lambda: f64, eta: f64) -> Result<WeightSequence> {
    let n = w.n();
    let mut factor = window_factor(n, lambda, eta);
    if factor < 0.0 {
        if factor > -1e-12 {
            factor = 0.0;
        } else {
            return Err(Error::NegativeWindow { factor, lambda, n });
        }
    }
    let weights: Vec<f64> = if lambda == 0.0 {
        w.base.to_vec()
    } else {
        w.base.iter().map(|x| x * factor).collect()
    };
    let ell_n = compensated_sum(weights.iter().copied());
    Ok(WeightSequence { base: Arc::clone(&w.base), weights, ell_n, lambda, factor, tau: w.tau })
}

/// `nu_n = sum_j w_j^2 / ell_n`.
pub fn nu_n(w: &WeightSequence) -> Result<f64> {
    if w.ell_n() <= 0.0 {
        return Err(Error::InvalidParameter("nu_n needs ell_n > 0".into()));
    }
    Ok(w.moment_ratio(2))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ZetaEstimate {
    pub value: f64,
    /// Rigorous bound on `|value - zeta|`.
    pub error_bound: f64,
    /// Number of explicitly summed terms.
    pub terms: u64,
    pub converged: bool,
}

const ZETA_MAX_TERMS: u64 = 1 << 24;

/// `zeta = -(c_F^{2 alpha} / E[W]) sum_{i>=1} [int_{i-1}^{i} u^{-2 alpha} du - i^{-2 alpha}]`.
///
/// The first `N` terms telescope to `N^{1-s}/(1-s) - sum_{i<=N} i^{-s}`; the
/// remainder is Euler-Maclaurin with a rigorous fifth-derivative bound.
/// `N` doubles until the bound is below `tol`.
pub fn zeta_series(law: &TailLaw, tol: f64) -> Result<ZetaEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let ex = law.exponents();
    let s = 2.0 * ex.alpha;
    let prefactor = law.c_f.powf(s) / law.mean();
    let mut n: u64 = 16;
    loop {
        let (sum, bound) = zeta_partial(s, n);
        let err = prefactor * bound;
        if err <= tol || n >= ZETA_MAX_TERMS {
            return Ok(ZetaEstimate { value: -prefactor * sum, error_bound: err, terms: n, converged: err <= tol });
        }
        n *= 2;
    }
}

fn zeta_partial(s: f64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let head = nf.powf(1.0 - s) / (1.0 - s) - power_sum(s, n);
    let tail = nf.powf(-s) / 2.0 - s * nf.powf(-s - 1.0) / 12.0
        + s * (s + 1.0) * (s + 2.0) * nf.powf(-s - 3.0) / 720.0;
    let bound = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * nf.powf(-s - 5.0) / 30240.0;
    (head + tail, bound)
}

/// Constants of the scaling limit at window position `lambda`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LimitParams {
    pub a: f64,
    pub b: f64,
    /// Drift constant of the thinned Levy limit; equals `theta` (see README).
    pub c: f64,
    pub theta: f64,
    pub zeta: f64,
    #[serde(rename = "meanW")]
    pub mean_w: f64,
    pub nu: f64,
    pub beta: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub critical: bool,
}

impl LimitParams {
    /// `c_j = c_F^alpha j^{-alpha}`, `j >= 1`.
    pub fn cj(&self, j: usize) -> f64 {
        self.b * (j as f64).powf(-self.alpha)
    }

    /// `d_j = c_j / E[W]`.
    pub fn dj(&self, j: usize) -> f64 {
        self.cj(j) / self.mean_w
    }

    /// `d = c_F^{2 alpha} / E[W] = a b`.
    pub fn d(&self) -> f64 {
        self.a * self.b
    }

    /// The drift constant as printed in the statement of the limit theorem, `theta - ab`.
    pub fn c_shifted(&self) -> f64 {
        self.theta - self.a * self.b
    }
}

pub fn limit_params(law: &TailLaw, lambda: f64) -> Result<LimitParams> {
    let ex = law.exponents();
    let zeta = zeta_series(law, 1e-12)?.value;
    let b = law.c_f.powf(ex.alpha);
    let mean_w = law.mean();
    let theta = lambda + zeta;
    Ok(LimitParams {
        a: b / mean_w,
        b,
        c: theta,
        theta,
        zeta,
        mean_w,
        nu: law.nu(),
        beta: -zeta / mean_w,
        alpha: ex.alpha,
        lambda,
        critical: law.is_critical(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn exponents_at_three_and_a_half() {
        let e = exponents(3.5).unwrap();
        assert!(close(e.alpha, 0.4, 1e-15) && close(e.rho, 0.6, 1e-15) && close(e.eta, 0.2, 1e-15));
        assert!(exponents(3.0).is_err() && exponents(4.0).is_err() && exponents(f64::NAN).is_err());
        assert!(exponents(3.0 + 1e-9).unwrap().eta < 1e-8);
    }

    #[test]
    fn critical_pareto_constants() {
        let law = critical_pareto(3.5).unwrap();
        match law.form {
            TailForm::Pareto { scale } => assert!(close(scale, 1.0 / 3.0, 1e-15)),
            _ => unreachable!(),
        }
        assert!(close(law.mean(), 5.0 / 9.0, 1e-15));
        assert!(close(law.second_moment(), 5.0 / 9.0, 1e-15));
        assert!(close(law.nu(), 1.0, 1e-14));
        assert!(close(law.c_f, 0.064_150_029, 1e-8));
        assert!(law.is_critical());
    }

    #[test]
    fn pareto_weights_for_four_vertices() {
        let law = critical_pareto(3.5).unwrap();
        let w = build_weights(&law, 4).unwrap();
        for j in 1..=4 {
            let expected = (1.0 / 3.0) * (4.0 / j as f64).powf(0.4);
            assert!(close(w.w(j - 1), expected, 1e-15));
        }
        assert!(close(w.w(0), 0.5804, 1e-4));
        assert!(close(w.w(3), 1.0 / 3.0, 1e-15));
        assert!(close(w.ell_n(), w.weights().iter().sum(), 1e-14));
    }

    #[test]
    fn custom_quantile_is_zero_at_one() {
        let law = TailLaw::from_quantile(3.5, 1.0, 1.0, 2.0, |u: f64| u.powf(-0.4)).unwrap();
        let w = build_weights(&law, 1).unwrap();
        assert_eq!(w.weights(), &[0.0]);
        let bad = TailLaw::from_quantile(3.5, 1.0, 1.0, 2.0, |u: f64| u).unwrap();
        assert!(matches!(build_weights(&bad, 5), Err(Error::InvalidQuantile { .. })));
    }

    #[test]
    fn largest_weight_scales_like_cf_alpha() {
        let law = critical_pareto(3.5).unwrap();
        let target = law.c_f.powf(0.4);
        for n in [1_000usize, 1_000_000] {
            let w1 = law.quantile(1.0 / n as f64);
            assert!(close(w1 * (n as f64).powf(-0.4), target, 1e-12));
        }
    }

    #[test]
    fn window_examples() {
        let law = critical_pareto(3.5).unwrap();
        let w = build_weights(&law, 32).unwrap();
        let w0 = apply_window(&w, 0.0).unwrap();
        assert_eq!(w0.weights(), w.weights());
        let w1 = apply_window(&w, 1.0).unwrap();
        assert!(close(w1.factor(), 1.5, 1e-15));
        for (a, b) in w1.weights().iter().zip(w.weights()) {
            assert!(close(*a, 1.5 * b, 1e-15));
        }
        let edge = apply_window(&w, -(32f64).powf(0.2)).unwrap();
        assert!(edge.weights().iter().all(|x| *x == 0.0));
        assert!(matches!(apply_window(&w, -3.0), Err(Error::NegativeWindow { .. })));
    }

    #[test]
    fn nu_n_examples() {
        let w = WeightSequence::from_weights(vec![1.0, 1.0], None).unwrap();
        assert!(close(nu_n(&w).unwrap(), 1.0, 1e-15));
        let w = WeightSequence::from_weights(vec![0.7, 0.0, 0.0], None).unwrap();
        assert!(close(nu_n(&w).unwrap(), 0.7, 1e-15));
        assert!(WeightSequence::from_weights(vec![], None).is_err());
        let w = WeightSequence::from_weights(vec![0.0, 0.0], None).unwrap();
        assert!(nu_n(&w).is_err());
    }

    /// Independent oracle: brute force over 10^7 terms with the tail
    /// bracketed by `0 <= tail <= N^{-2 alpha}`.
    #[test]
    fn zeta_matches_brute_force_series() {
        let law = critical_pareto(3.5).unwrap();
        let s = 0.8f64;
        let n = 10_000_000u64;
        let mut acc = crate::numerics::NeumaierSum::new();
        for i in 1..=n {
            let x = i as f64;
            let integral = (x.powf(1.0 - s) - (x - 1.0).powf(1.0 - s)) / (1.0 - s);
            acc.add(integral - x.powf(-s));
        }
        let prefactor = 0.2;
        let lower = -prefactor * (acc.value() + (n as f64).powf(-s));
        let upper = -prefactor * acc.value();
        let z = zeta_series(&law, 1e-10).unwrap();
        assert!(z.converged);
        assert!(z.value >= lower - 1e-9 && z.value <= upper + 1e-9, "{lower} <= {} <= {upper}", z.value);
        assert!(close(z.value, -0.8875, 5e-4), "{}", z.value);
        // first term: int_0^1 u^{-0.8} du - 1 = 4
        assert!(close(1.0 / (1.0 - s) - 1.0, 4.0, 1e-12));
    }

    #[test]
    fn zeta_bound_brackets_refinement() {
        let law = critical_pareto(3.3).unwrap();
        let s = 2.0 / 2.3;
        let prefactor = law.c_f.powf(s) / law.mean();
        for n in [16u64, 64, 1024] {
            let (v1, b1) = zeta_partial(s, n);
            let (v2, _) = zeta_partial(s, 2 * n);
            assert!((v1 - v2).abs() <= b1 * (1.0 + 1e-6) + 1e-13, "n={n}");
        }
        assert!(prefactor > 0.0);
        assert!(zeta_series(&law, 1e-12).unwrap().value < 0.0);
    }

    #[test]
    fn limit_params_at_three_and_a_half() {
        let law = critical_pareto(3.5).unwrap();
        let p = limit_params(&law, 0.0).unwrap();
        assert!(close(p.b, 1.0 / 3.0, 1e-14));
        assert!(close(p.a, 0.6, 1e-14));
        assert!(close(p.cj(1), p.b, 1e-15));
        assert!(close(p.cj(2), 0.2526, 1e-4));
        assert!(close(p.theta, p.zeta, 0.0));
        assert!(close(p.c_shifted(), p.zeta - 0.2, 1e-14));
        assert!(close(p.beta, -p.zeta * 9.0 / 5.0, 1e-14));
        assert!(p.zeta < 0.0 && p.critical);
    }

    proptest! {
        #[test]
        fn exponent_identities(tau in 3.0001f64..3.9999) {
            let e = exponents(tau).unwrap();
            prop_assert!((e.alpha + e.rho - 1.0).abs() < 1e-15);
            prop_assert!((e.rho - e.alpha - e.eta).abs() < 1e-15);
            prop_assert!(e.alpha > 1.0 / 3.0 && e.alpha < 0.5);
        }

        #[test]
        fn weights_follow_quantile(tau in 3.05f64..3.95, n in 1usize..300) {
            let law = critical_pareto(tau).unwrap();
            let w = build_weights(&law, n).unwrap();
            for (k, x) in w.weights().iter().enumerate() {
                prop_assert_eq!(*x, law.quantile((k + 1) as f64 / n as f64));
            }
            prop_assert!(w.weights().windows(2).all(|p| p[0] >= p[1]));
        }

        #[test]
        fn window_is_linear(lambda in -1.0f64..5.0, n in 2usize..100) {
            let law = critical_pareto(3.5).unwrap();
            let w = build_weights(&law, n).unwrap();
            let f = window_factor(n, lambda, 0.2);
            prop_assume!(f >= 0.0);
            let ww = apply_window(&w, lambda).unwrap();
            for (a, b) in ww.weights().iter().zip(w.weights()) {
                prop_assert!((a - f * b).abs() <= 1e-15 * b.abs().max(1.0));
            }
            prop_assert!((ww.ell_n() - f * w.ell_n()).abs() <= 1e-12 * w.ell_n());
        }
    }
}
