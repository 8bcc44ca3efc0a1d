//! Compensated summation and power sums.

/// Neumaier's improved Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

const DIRECT_LIMIT: u64 = 4096;
const EM_START: u64 = 64;

/// `sum_{i=1}^{n} i^{-s}` for any real `s`.
///
/// Small `n` is summed directly; larger `n` uses Euler-Maclaurin on `[64, n]`,
/// accurate to roughly 1e-15 relative.
pub fn power_sum(s: f64, n: u64) -> f64 {
    if n <= DIRECT_LIMIT {
        return compensated_sum((1..=n).map(|i| (i as f64).powf(-s)));
    }
    let head = compensated_sum((1..EM_START).map(|i| (i as f64).powf(-s)));
    let (a, b) = (EM_START as f64, n as f64);
    let integral = if (s - 1.0).abs() < 1e-15 {
        (b / a).ln()
    } else {
        (b.powf(1.0 - s) - a.powf(1.0 - s)) / (1.0 - s)
    };
    let f = |x: f64| x.powf(-s);
    let d1 = |x: f64| -s * x.powf(-s - 1.0);
    let d3 = |x: f64| -s * (s + 1.0) * (s + 2.0) * x.powf(-s - 3.0);
    let d5 = |x: f64| -s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * x.powf(-s - 5.0);
    head + integral + (f(a) + f(b)) / 2.0 + (d1(b) - d1(a)) / 12.0 - (d3(b) - d3(a)) / 720.0
        + (d5(b) - d5(a)) / 30240.0
}

/// `sum_{i=m}^{inf} i^{-s}` for `s > 1`, returned with a rigorous error bound.
pub fn power_tail(s: f64, m: u64) -> (f64, f64) {
    assert!(s > 1.0, "power_tail needs s > 1");
    let m = m.max(1);
    let cut = m.max(EM_START);
    let head = compensated_sum((m..cut).map(|i| (i as f64).powf(-s)));
    let (value, err) = em_tail(s, cut as f64);
    (head + value, err)
}

/// Euler-Maclaurin for `sum_{i>=m} i^{-s}` with the remainder after the
/// third derivative term. `f` is completely monotone so the bound is rigorous.
fn em_tail(s: f64, m: f64) -> (f64, f64) {
    let integral = m.powf(1.0 - s) / (s - 1.0);
    let value = integral + m.powf(-s) / 2.0 + s * m.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * m.powf(-s - 3.0) / 720.0;
    let err = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * m.powf(-s - 5.0) / 30240.0;
    (value, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let s = compensated_sum([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s, 2.0);
    }

    #[test]
    fn power_sum_matches_direct_summation() {
        for &s in &[0.4, 0.8, 1.0, 1.2, 2.5] {
            let n = 200_000u64;
            let direct = compensated_sum((1..=n).map(|i| (i as f64).powf(-s)));
            let em = power_sum(s, n);
            assert!((direct - em).abs() <= 1e-12 * direct.abs(), "s={s}: {direct} vs {em}");
        }
    }

    #[test]
    fn power_tail_brackets_riemann_zeta() {
        // zeta(2) = pi^2/6, zeta(3) = 1.2020569031595942
        let (z2, e2) = power_tail(2.0, 1);
        assert!((z2 - std::f64::consts::PI.powi(2) / 6.0).abs() <= e2 + 1e-15);
        let (z3, e3) = power_tail(3.0, 1);
        assert!((z3 - 1.202_056_903_159_594_2).abs() <= e3 + 1e-15);
        assert!(e2 < 1e-12);
    }

    #[test]
    fn power_tail_consistent_with_partial_sums() {
        let s = 1.2;
        let (full, _) = power_tail(s, 1);
        let (tail, _) = power_tail(s, 5001);
        let head = power_sum(s, 5000);
        assert!((full - head - tail).abs() < 1e-12);
    }
}
