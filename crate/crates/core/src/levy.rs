//! Event-driven simulation of the truncated thinned Levy process
//!
//! `S_t = b + (c - ab) t + sum_{i=2}^{K} b i^{-alpha} (I_i(t) - a t i^{-alpha})`,
//!
//! its dominating process `R_t`, first passage times, the successive-cluster
//! variant, the Levy exponent and the characteristic function of `S'_t`.
//!
//! Clocks are materialized lazily up to a horizon: only indices whose clock
//! rings before the horizon are drawn, by geometric skipping over the
//! decreasing ring probabilities. Extending the horizon keeps every clock
//! already drawn, so first passage times are exact.

use std::collections::HashSet;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LimitParams;
use crate::numerics::{compensated_sum, power_sum, power_tail};
use crate::rng::{bernoulli_skip, exponential, truncated_exponential};

pub const DEFAULT_TRUNCATION: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinnedLevyParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    /// Jumps `i = 2..=truncation` are kept.
    pub truncation: u64,
}

impl ThinnedLevyParams {
    pub fn new(a: f64, b: f64, c: f64, alpha: f64, truncation: u64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("need a, b > 0 and finite c (a={a}, b={b}, c={c})")));
        }
        if !(alpha > 1.0 / 3.0 && alpha < 0.5) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (1/3, 1/2)")));
        }
        if truncation < 1 || truncation > u32::MAX as u64 {
            return Err(Error::InvalidParameter(format!("truncation K = {truncation} out of range")));
        }
        Ok(Self { a, b, c, alpha, truncation })
    }

    pub fn from_limit(p: &LimitParams, truncation: u64) -> Result<Self> {
        Self::new(p.a, p.b, p.c, p.alpha, truncation)
    }

    pub fn rate(&self, i: u64) -> f64 {
        self.a * (i as f64).powf(-self.alpha)
    }

    pub fn jump(&self, i: u64) -> f64 {
        self.b * (i as f64).powf(-self.alpha)
    }

    /// `c - ab - ab sum_{i=2}^{K} i^{-2 alpha}`.
    pub fn slope(&self) -> f64 {
        self.c - self.a * self.b * power_sum(2.0 * self.alpha, self.truncation)
    }

    pub fn with_truncation(&self, truncation: u64) -> Self {
        Self { truncation, ..*self }
    }
}

/// First arrival times `E_i` that fall before `horizon`, optionally with the
/// later arrivals of the Poisson streams `N_i`.
#[derive(Clone, Debug)]
pub struct ClockSet {
    horizon: f64,
    a: f64,
    alpha: f64,
    lo: u64,
    hi: u64,
    /// `(E_i, i)` sorted by time.
    first: Vec<(f64, u32)>,
    /// Later stream arrivals `(time, i)` sorted by time.
    streams: Option<Vec<(f64, u32)>>,
    excluded: HashSet<u32>,
}

impl ClockSet {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn first_arrivals(&self) -> &[(f64, u32)] {
        &self.first
    }

    pub fn stream_arrivals(&self) -> Option<&[(f64, u32)]> {
        self.streams.as_deref()
    }

    /// `E_i` if it rang before the horizon.
    pub fn first_arrival(&self, i: u64) -> Option<f64> {
        self.first.iter().find(|(_, k)| *k as u64 == i).map(|(t, _)| *t)
    }

    /// Same clocks with every time multiplied by `factor` (rates divided by it).
    pub fn scaled(&self, factor: f64) -> ClockSet {
        let sc = |v: &Vec<(f64, u32)>| v.iter().map(|(t, i)| (t * factor, *i)).collect::<Vec<_>>();
        ClockSet {
            horizon: self.horizon * factor,
            a: self.a / factor,
            alpha: self.alpha,
            lo: self.lo,
            hi: self.hi,
            first: sc(&self.first),
            streams: self.streams.as_ref().map(sc),
            excluded: self.excluded.clone(),
        }
    }

    fn generate<R: Rng + ?Sized>(
        a: f64,
        alpha: f64,
        lo: u64,
        hi: u64,
        excluded: HashSet<u32>,
        horizon: f64,
        with_streams: bool,
        rng: &mut R,
    ) -> ClockSet {
        let mut set = ClockSet {
            horizon: 0.0,
            a,
            alpha,
            lo,
            hi,
            first: Vec::new(),
            streams: with_streams.then(Vec::new),
            excluded,
        };
        set.extend(horizon, rng);
        set
    }

    /// Draws the clocks that ring in `(horizon, new_horizon]`.
    pub fn extend<R: Rng + ?Sized>(&mut self, new_horizon: f64, rng: &mut R) {
        let old = self.horizon;
        if !(new_horizon > old) {
            return;
        }
        let dt = new_horizon - old;
        let fired: HashSet<u32> = if old > 0.0 { self.first.iter().map(|(_, i)| *i).collect() } else { HashSet::new() };
        let (a, alpha) = (self.a, self.alpha);
        let rate = |i: u64| a * (i as f64).powf(-alpha);
        let mut fresh = Vec::new();
        bernoulli_skip(
            rng,
            self.lo,
            self.hi + 1,
            |i| -(-rate(i) * dt).exp_m1(),
            |i| {
                let k = i as u32;
                if !fired.contains(&k) && !self.excluded.contains(&k) {
                    fresh.push(k);
                }
            },
        );
        let mut new_first: Vec<(f64, u32)> =
            fresh.iter().map(|&k| (old + truncated_exponential(rng, rate(k as u64), dt), k)).collect();
        if let Some(streams) = &mut self.streams {
            for &(_, k) in &self.first {
                let r = rate(k as u64);
                let mut t = old + exponential(rng, r);
                while t <= new_horizon {
                    streams.push((t, k));
                    t += exponential(rng, r);
                }
            }
            for &(e, k) in &new_first {
                let r = rate(k as u64);
                let mut t = e + exponential(rng, r);
                while t <= new_horizon {
                    streams.push((t, k));
                    t += exponential(rng, r);
                }
            }
            streams.sort_by(|x, y| x.0.total_cmp(&y.0));
        }
        self.first.append(&mut new_first);
        self.first.sort_by(|x, y| x.0.total_cmp(&y.0));
        self.horizon = new_horizon;
    }
}

/// Independent `E_i ~ Exp(a i^{-alpha})`, `i = 2..=K`, drawn up to `horizon`.
pub fn sample_clocks<R: Rng + ?Sized>(
    params: &ThinnedLevyParams,
    horizon: f64,
    with_streams: bool,
    rng: &mut R,
) -> ClockSet {
    ClockSet::generate(params.a, params.alpha, 2, params.truncation, HashSet::new(), horizon, with_streams, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PathKind {
    Thinned,
    Dominating,
}

/// Piecewise linear path with upward jumps at `times`.
#[derive(Clone, Debug, Serialize)]
pub struct LevyPath {
    pub kind: PathKind,
    pub start: f64,
    pub slope: f64,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub jumps: Vec<f64>,
    /// Value right after each event.
    pub values: Vec<f64>,
}

impl LevyPath {
    fn build(kind: PathKind, start: f64, slope: f64, horizon: f64, events: Vec<(f64, f64)>) -> Self {
        let mut times = Vec::with_capacity(events.len());
        let mut jumps = Vec::with_capacity(events.len());
        let mut values = Vec::with_capacity(events.len());
        let mut jump_sum = crate::numerics::NeumaierSum::new();
        for (t, h) in events {
            jump_sum.add(h);
            times.push(t);
            jumps.push(h);
            values.push(start + slope * t + jump_sum.value());
        }
        LevyPath { kind, start, slope, horizon, times, jumps, values }
    }

    /// Right-continuous value at `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            self.start + self.slope * t
        } else {
            self.values[k - 1] + self.slope * (t - self.times[k - 1])
        }
    }

    /// Left limit at event `k`.
    pub fn value_before(&self, k: usize) -> f64 {
        self.values[k] - self.jumps[k]
    }

    /// `inf { t <= horizon : value <= 0 }`, solved on the linear pieces.
    pub fn hitting_time(&self) -> Option<f64> {
        passage_on_segments(self.start, self.slope, self.times.iter().copied().zip(self.values.iter().copied()), self.horizon)
    }

    /// CSV with columns `t_event,value_before,value_after`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_event,value_before,value_after")?;
        for k in 0..self.times.len() {
            writeln!(out, "{},{},{}", self.times[k], self.value_before(k), self.values[k])?;
        }
        Ok(())
    }
}

/// First time a path starting at `start` with constant `slope` and upward
/// jumps `(time, size)` (sorted) is at or below zero, before `horizon`.
pub fn first_passage<I: IntoIterator<Item = (f64, f64)>>(start: f64, slope: f64, events: I, horizon: f64) -> Option<f64> {
    let mut v = start;
    let mut t0 = 0.0;
    let knots = events.into_iter().map(move |(t, h)| {
        v += slope * (t - t0) + h;
        t0 = t;
        (t, v)
    });
    passage_on_segments(start, slope, knots, horizon)
}

/// `knots` are `(event time, value right after it)`; the path is linear
/// with `slope` between knots and starts at `(0, start)`.
fn passage_on_segments<I: IntoIterator<Item = (f64, f64)>>(start: f64, slope: f64, knots: I, horizon: f64) -> Option<f64> {
    if start <= 0.0 {
        return Some(0.0);
    }
    let crossing = |t0: f64, v: f64| -> f64 {
        let mut t = t0 + v / -slope;
        // Nudge so that the value at the returned time is <= 0.
        while v + slope * (t - t0) > 0.0 {
            t = t.next_up();
        }
        t
    };
    let mut seg = (0.0, start);
    for (t, v) in knots {
        if t > horizon {
            break;
        }
        if slope < 0.0 {
            let hit = crossing(seg.0, seg.1);
            if hit < t {
                return Some(hit);
            }
        }
        seg = (t, v);
    }
    if slope < 0.0 {
        let hit = crossing(seg.0, seg.1);
        if hit <= horizon {
            return Some(hit);
        }
    }
    None
}

/// `S_t` on `[0, horizon]` with a jump `b i^{-alpha}` at each `E_i`, `i <= K`.
pub fn thinned_path(params: &ThinnedLevyParams, clocks: &ClockSet, horizon: f64) -> Result<LevyPath> {
    if !(horizon > 0.0) || horizon > clocks.horizon * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "path horizon {horizon} must be in (0, {}] (clock horizon)",
            clocks.horizon
        )));
    }
    let events = clocks
        .first
        .iter()
        .filter(|(t, i)| *t <= horizon && (*i as u64) <= params.truncation)
        .map(|(t, i)| (*t, params.jump(*i as u64)))
        .collect();
    Ok(LevyPath::build(PathKind::Thinned, params.b, params.slope(), horizon, events))
}

/// `R_t`: a jump `b i^{-alpha}` at every arrival of stream `i`.
pub fn dominating_path(params: &ThinnedLevyParams, clocks: &ClockSet, horizon: f64) -> Result<LevyPath> {
    let streams = clocks.streams.as_ref().ok_or(Error::MissingStreams)?;
    let thinned = thinned_path(params, clocks, horizon)?;
    let mut events: Vec<(f64, f64)> = thinned.times.iter().copied().zip(thinned.jumps.iter().copied()).collect();
    events.extend(
        streams
            .iter()
            .filter(|(t, i)| *t <= horizon && (*i as u64) <= params.truncation)
            .map(|(t, i)| (*t, params.jump(*i as u64))),
    );
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(LevyPath::build(PathKind::Dominating, params.b, params.slope(), horizon, events))
}

pub fn hitting_time(path: &LevyPath) -> Option<f64> {
    path.hitting_time()
}

/// Initial horizon and number of doublings when no passage is found.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HorizonPolicy {
    pub initial: Option<f64>,
    pub doublings: u32,
}

impl Default for HorizonPolicy {
    fn default() -> Self {
        Self { initial: None, doublings: 4 }
    }
}

impl HorizonPolicy {
    /// `10 b / (ab - c)` when positive, else 50.
    pub fn initial_horizon(&self, params: &ThinnedLevyParams) -> f64 {
        self.initial.unwrap_or_else(|| {
            let gap = params.a * params.b - params.c;
            if gap > 0.0 {
                10.0 * params.b / gap
            } else {
                50.0
            }
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HitOutcome {
    pub time: Option<f64>,
    pub horizon: f64,
    pub doublings: u32,
}

/// Samples `H(0)` for the thinned process, doubling the horizon as needed.
pub fn sample_hitting_time<R: Rng + ?Sized>(params: &ThinnedLevyParams, policy: &HorizonPolicy, rng: &mut R) -> HitOutcome {
    let mut horizon = policy.initial_horizon(params);
    let mut clocks = sample_clocks(params, horizon, false, rng);
    let slope = params.slope();
    let mut doublings = 0;
    loop {
        let events = clocks.first.iter().map(|(t, i)| (*t, params.jump(*i as u64)));
        if let Some(t) = first_passage(params.b, slope, events, horizon) {
            return HitOutcome { time: Some(t), horizon, doublings };
        }
        if doublings == policy.doublings {
            return HitOutcome { time: None, horizon, doublings };
        }
        horizon *= 2.0;
        doublings += 1;
        clocks.extend(horizon, rng);
    }
}

/// Jump-coefficient convention for the successive-cluster process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientConvention {
    /// Jumps `b q^{-alpha}` at rate `a q^{-alpha}`, as in the single-cluster process.
    Standard,
    /// Jumps `a q^{-alpha}` at rate `a q^{-alpha}`, compensated by `b t q^{-alpha}`.
    SwappedAb,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuccessiveOutcome {
    /// `H_i(0)` in exploration order.
    pub hits: Vec<f64>,
    /// Limit ids (1-based) of the excursion roots `I_i`.
    pub roots: Vec<u64>,
    /// `D_i = ab sum_{q in B_i} q^{-2 alpha}` for each excursion.
    pub drifts: Vec<f64>,
    /// Some excursion did not end within the horizon policy.
    pub flagged: bool,
}

impl SuccessiveOutcome {
    /// Hitting times sorted descending.
    pub fn ordered(&self) -> Vec<f64> {
        let mut h = self.hits.clone();
        h.sort_by(|a, b| b.total_cmp(a));
        h
    }
}

/// Successive excursions of the limit process: excursion `i` starts at
/// `b I_i^{-alpha}` from the smallest unexplored id `I_i`, uses fresh clocks
/// for ids outside `B_i` (explored ids plus the root), and has drift
/// `c - D_i` plus the compensators of the remaining jumps. Ids whose clocks
/// ring before the excursion ends join the explored set.
pub fn successive_hitting<R: Rng + ?Sized>(
    params: &ThinnedLevyParams,
    max_excursions: usize,
    convention: CoefficientConvention,
    policy: &HorizonPolicy,
    rng: &mut R,
) -> SuccessiveOutcome {
    let k = params.truncation;
    let ab = params.a * params.b;
    let s2 = 2.0 * params.alpha;
    let slope = params.c - ab * power_sum(s2, k);
    let jump = |q: u64| match convention {
        CoefficientConvention::Standard => params.jump(q),
        CoefficientConvention::SwappedAb => params.rate(q),
    };
    let mut explored: HashSet<u32> = HashSet::new();
    let mut drift_sum = crate::numerics::NeumaierSum::new();
    let mut next: u64 = 1;
    let mut out = SuccessiveOutcome { hits: Vec::new(), roots: Vec::new(), drifts: Vec::new(), flagged: false };
    while out.hits.len() < max_excursions {
        while next <= k && explored.contains(&(next as u32)) {
            next += 1;
        }
        if next > k {
            break;
        }
        let root = next;
        explored.insert(root as u32);
        drift_sum.add((root as f64).powf(-s2));
        out.roots.push(root);
        out.drifts.push(ab * drift_sum.value());
        let start = match convention {
            CoefficientConvention::Standard => params.jump(root),
            CoefficientConvention::SwappedAb => params.b * (root as f64).powf(-params.alpha),
        };
        let mut horizon = policy.initial_horizon(params);
        let mut clocks =
            ClockSet::generate(params.a, params.alpha, 1, k, explored.clone(), horizon, false, rng);
        let mut doublings = 0;
        let hit = loop {
            let events = clocks.first.iter().map(|(t, i)| (*t, jump(*i as u64)));
            if let Some(t) = first_passage(start, slope, events, horizon) {
                break Some(t);
            }
            if doublings == policy.doublings {
                break None;
            }
            horizon *= 2.0;
            doublings += 1;
            clocks.extend(horizon, rng);
        };
        let Some(h) = hit else {
            out.flagged = true;
            break;
        };
        for &(t, i) in &clocks.first {
            if t > h {
                break;
            }
            explored.insert(i);
            drift_sum.add((i as f64).powf(-s2));
        }
        out.hits.push(h);
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LevyExponent {
    pub value: f64,
    pub error_bound: f64,
}

/// `psi(theta) = (c - ab) theta + sum_{i>=2} a i^{-alpha} [1 - e^{-theta b i^{-alpha}} - theta b i^{-alpha}]`.
///
/// Terms up to `I` (where `theta b I^{-alpha} <= 1/2`) are summed directly;
/// the tail is expanded in powers of `theta b i^{-alpha}` with each power
/// sum evaluated by Euler-Maclaurin.
pub fn levy_exponent(params: &ThinnedLevyParams, vartheta: f64, tol: f64) -> Result<LevyExponent> {
    if !(vartheta >= 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidParameter("need vartheta >= 0 and tol > 0".into()));
    }
    if vartheta == 0.0 {
        return Ok(LevyExponent { value: 0.0, error_bound: 0.0 });
    }
    let (a, b, alpha) = (params.a, params.b, params.alpha);
    let x = vartheta * b;
    let cut = ((2.0 * x).powf(1.0 / alpha).ceil() as u64).max(64);
    let head = compensated_sum((2..=cut).map(|i| {
        let u = x * (i as f64).powf(-alpha);
        -a * (i as f64).powf(-alpha) * ((-u).exp_m1() + u)
    }));
    let mut tail = crate::numerics::NeumaierSum::new();
    let mut err = 0.0;
    let mut coef = a * x; // a x^k / k! at k = 1
    for k in 2..200 {
        coef *= x / k as f64;
        let (p, e) = power_tail(alpha * (k as f64 + 1.0), cut + 1);
        let term = coef * p;
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        tail.add(sign * term);
        err += coef * e;
        let next_bound = coef * x / (k as f64 + 1.0) * p;
        if next_bound < tol * 1e-3 {
            err += next_bound;
            break;
        }
    }
    let value = (params.c - a * b) * vartheta + head + tail.value();
    let error_bound = err + 1e-15 * value.abs().max(1.0);
    if error_bound > tol {
        return Err(Error::InvalidParameter(format!("tolerance {tol} not reached (bound {error_bound})")));
    }
    Ok(LevyExponent { value, error_bound })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CharFnValue {
    #[serde(skip)]
    pub value: Complex64,
    pub modulus: f64,
    /// `Phi(theta) = sum_{j >= j_theta} j^{-alpha} [1 - cos(theta j^{-alpha})]`.
    pub phi: f64,
    /// `exp(-t Phi(theta))`.
    pub envelope: f64,
    /// `exp(-sum_{j>=2} p_j (1 - p_j) [1 - cos(theta j^{-alpha})])` with
    /// `p_j = 1 - e^{-t j^{-alpha}}`, a valid upper bound on the modulus.
    pub corrected_envelope: f64,
    pub j_theta: u64,
}

/// Characteristic function of `S'_t = sum_{j=2}^{K} j^{-alpha} [I'_j(t) - t j^{-alpha}]`
/// (rate `j^{-alpha}` indicators), accumulated as a sum of logarithms.
pub fn char_fn(alpha: f64, t: f64, vartheta: f64, truncation: u64) -> Result<CharFnValue> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter("t must be positive".into()));
    }
    let j_theta = ((2.0 * vartheta / std::f64::consts::PI).powf(1.0 / alpha).ceil() as u64).max(2);
    let mut log_mod = crate::numerics::NeumaierSum::new();
    let mut phase = crate::numerics::NeumaierSum::new();
    let mut phi = crate::numerics::NeumaierSum::new();
    let mut corrected = crate::numerics::NeumaierSum::new();
    for j in 2..=truncation {
        let x = (j as f64).powf(-alpha);
        let p = -(-x * t).exp_m1();
        let one_minus_cos = 2.0 * (vartheta * x / 2.0).sin().powi(2);
        let factor = Complex64::new(1.0 - p, 0.0) + Complex64::from_polar(p, vartheta * x);
        let ln = factor.ln();
        // ln|f| = 0.5 ln(1 - 2 p (1 - p) (1 - cos)), computed stably
        log_mod.add(0.5 * (-2.0 * p * (1.0 - p) * one_minus_cos).ln_1p());
        phase.add(ln.im - vartheta * t * x * x);
        corrected.add(-p * (1.0 - p) * one_minus_cos);
        if j >= j_theta {
            phi.add(x * one_minus_cos);
        }
    }
    let modulus = log_mod.value().exp();
    let value = Complex64::from_polar(modulus, phase.value());
    let phi = phi.value();
    Ok(CharFnValue {
        value,
        modulus,
        phi,
        envelope: (-t * phi).exp(),
        corrected_envelope: corrected.value().exp(),
        j_theta,
    })
}

/// `sup_{t <= horizon} |p(t) - q(t)|` over two paths, checked at every event of either.
pub fn sup_distance(p: &LevyPath, q: &LevyPath, horizon: f64) -> f64 {
    let mut best = (p.start - q.start).abs();
    let mut times: Vec<f64> = p.times.iter().chain(&q.times).copied().filter(|t| *t <= horizon).collect();
    times.push(horizon);
    for t in times {
        let left = t - t.abs() * 1e-15 - 1e-300;
        best = best.max((p.value_at(t) - q.value_at(t)).abs());
        if left > 0.0 {
            best = best.max((p.value_at(left) - q.value_at(left)).abs());
        }
    }
    best
}

/// Number of atoms of the largest point mass among samples (rounded to `resolution`).
pub fn max_point_mass(samples: &[f64], resolution: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut keys: Vec<i64> = samples.iter().map(|x| (x / resolution).round() as i64).collect();
    keys.sort_unstable();
    let mut best = 1;
    let mut run = 1;
    for w in keys.windows(2) {
        if w[0] == w[1] {
            run += 1;
            best = best.max(run);
        } else {
            run = 1;
        }
    }
    best as f64 / samples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{critical_pareto, limit_params};
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn std_params(k: u64) -> ThinnedLevyParams {
        let p = limit_params(&critical_pareto(3.5).unwrap(), 0.0).unwrap();
        ThinnedLevyParams::from_limit(&p, k).unwrap()
    }

    #[test]
    fn pure_drift_hits_at_one() {
        let p = ThinnedLevyParams::new(1.0, 1.0, 0.0, 0.4, 1).unwrap();
        assert_eq!(p.slope(), -1.0);
        let mut rng = stream_rng(1, "l", 0);
        let clocks = sample_clocks(&p, 5.0, false, &mut rng);
        assert!(clocks.first_arrivals().is_empty());
        let path = thinned_path(&p, &clocks, 5.0).unwrap();
        assert_eq!(path.value_at(0.0), 1.0);
        assert_eq!(hitting_time(&path), Some(1.0));
        let up = ThinnedLevyParams::new(1.0, 1.0, 2.0, 0.4, 1).unwrap();
        let path = thinned_path(&up, &sample_clocks(&up, 5.0, false, &mut rng), 5.0).unwrap();
        assert_eq!(hitting_time(&path), None);
    }

    #[test]
    fn first_clock_mean() {
        let p = std_params(2);
        let mut rng = stream_rng(2, "e2", 0);
        let rate = p.rate(2);
        let reps = 100_000;
        let horizon = 60.0 / rate;
        let xs: Vec<f64> = (0..reps)
            .map(|_| sample_clocks(&p, horizon, false, &mut rng).first_arrival(2).expect("rings before horizon"))
            .collect();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let target = 2f64.powf(0.4) / p.a;
        assert!((mean - target).abs() < 3.0 * target / (reps as f64).sqrt(), "{mean} vs {target}");
    }

    #[test]
    fn streams_share_first_arrivals_and_have_poisson_means() {
        let p = std_params(50);
        let mut rng = stream_rng(3, "streams", 0);
        let t = 4.0;
        let reps = 20_000;
        let mut count2 = 0usize;
        for _ in 0..reps {
            let c = sample_clocks(&p, t, true, &mut rng);
            let s = c.stream_arrivals().unwrap();
            for &(e, i) in c.first_arrivals() {
                assert!(s.iter().filter(|(_, k)| *k == i).all(|(u, _)| *u > e));
            }
            count2 += c.first_arrivals().iter().filter(|(_, k)| *k == 2).count();
            count2 += s.iter().filter(|(_, k)| *k == 2).count();
        }
        let mean = count2 as f64 / reps as f64;
        let target = p.rate(2) * t;
        assert!((mean - target).abs() < 4.0 * (target / reps as f64).sqrt(), "{mean} vs {target}");
        let c = sample_clocks(&p, 1.0, false, &mut rng);
        assert!(matches!(dominating_path(&p, &c, 1.0), Err(Error::MissingStreams)));
    }

    #[test]
    fn extension_keeps_law_of_first_arrivals() {
        // P(E_i <= T) must not depend on reaching T in one draw or by doubling.
        let p = std_params(400);
        let reps = 20_000;
        let t = 2.0;
        let mut rng = stream_rng(4, "ext", 0);
        let mut direct = 0usize;
        let mut doubled = 0usize;
        for _ in 0..reps {
            direct += sample_clocks(&p, t, false, &mut rng).first_arrivals().len();
            let mut c = sample_clocks(&p, t / 4.0, false, &mut rng);
            c.extend(t / 2.0, &mut rng);
            c.extend(t, &mut rng);
            doubled += c.first_arrivals().len();
        }
        let expected: f64 = (2..=400).map(|i| -(-p.rate(i) * t).exp_m1()).sum();
        for got in [direct, doubled] {
            let mean = got as f64 / reps as f64;
            assert!((mean - expected).abs() < 4.0 * (expected / reps as f64).sqrt(), "{mean} vs {expected}");
        }
    }

    #[test]
    fn scaling_relation_is_exact() {
        let p = std_params(1000);
        let unit = ThinnedLevyParams::new(1.0, 1.0, p.c / (p.a * p.b), p.alpha, 1000).unwrap();
        let mut rng = stream_rng(5, "scale", 0);
        for _ in 0..50 {
            let c = sample_clocks(&p, 3.0, false, &mut rng);
            let s = thinned_path(&p, &c, 3.0).unwrap();
            let c2 = c.scaled(p.a);
            let s2 = thinned_path(&unit, &c2, 3.0 * p.a).unwrap();
            for k in 0..30 {
                let t = 3.0 * k as f64 / 30.0;
                let lhs = s.value_at(t);
                let rhs = p.b * s2.value_at(p.a * t);
                assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn levy_exponent_basics() {
        let p = std_params(DEFAULT_TRUNCATION);
        assert_eq!(levy_exponent(&p, 0.0, 1e-10).unwrap().value, 0.0);
        for th in [0.1, 1.0, 10.0] {
            let v = levy_exponent(&p, th, 1e-10).unwrap().value;
            assert!(v <= (p.c - p.a * p.b) * th);
        }
    }

    /// Direct summation of 10^7 terms with the remaining tail expanded to
    /// third order and its power sums bracketed by integrals.
    #[test]
    fn levy_exponent_matches_direct_sum() {
        let p = std_params(DEFAULT_TRUNCATION);
        let (a, b, al) = (p.a, p.b, p.alpha);
        let th = 1.0;
        let n = 10_000_000u64;
        let mut acc = crate::numerics::NeumaierSum::new();
        for i in 2..=n {
            let xi = (i as f64).powf(-al);
            let u = th * b * xi;
            acc.add(-a * xi * ((-u).exp_m1() + u));
        }
        let tail_sum = |s: f64| {
            let lo = ((n + 1) as f64).powf(1.0 - s) / (s - 1.0);
            let hi = (n as f64).powf(1.0 - s) / (s - 1.0);
            ((lo + hi) / 2.0, (hi - lo) / 2.0)
        };
        let (q2, e2) = tail_sum(3.0 * al);
        let (q3, e3) = tail_sum(4.0 * al);
        let x = th * b;
        let tail = -a * x * x / 2.0 * q2 + a * x.powi(3) / 6.0 * q3;
        let oracle = (p.c - a * b) * th + acc.value() + tail;
        let slack = a * x * x / 2.0 * e2 + a * x.powi(3) / 6.0 * e3 + a * x.powi(4) / 24.0 * tail_sum(5.0 * al).0;
        let got = levy_exponent(&p, th, 1e-10).unwrap();
        assert!(slack < 1e-9);
        assert!((got.value - oracle).abs() < 1e-8, "{} vs {oracle}", got.value);
    }

    #[test]
    fn char_fn_basics() {
        let z = char_fn(0.4, 1.0, 0.0, 1000).unwrap();
        assert_eq!(z.modulus, 1.0);
        assert!((z.value - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        for th in [0.5, 1.0, 5.0, 20.0] {
            let v = char_fn(0.4, 1.0, th, 10_000).unwrap();
            assert!(v.modulus <= 1.0);
            assert!(v.modulus <= v.corrected_envelope * (1.0 + 1e-12));
        }
    }

    /// Compare with a Monte Carlo estimate of E[exp(i theta S'_t)].
    #[test]
    fn char_fn_matches_simulation() {
        let (alpha, t, th, k) = (0.4, 1.0, 2.0, 200u64);
        let exact = char_fn(alpha, t, th, k).unwrap().value;
        let mut rng = stream_rng(6, "cf", 0);
        let reps = 100_000;
        let mut acc = Complex64::new(0.0, 0.0);
        for _ in 0..reps {
            let mut s = 0.0;
            for j in 2..=k {
                let x = (j as f64).powf(-alpha);
                let ind = if rng.random::<f64>() < -(-x * t).exp_m1() { 1.0 } else { 0.0 };
                s += x * (ind - t * x);
            }
            acc += Complex64::from_polar(1.0, th * s);
        }
        let mc = acc / reps as f64;
        assert!((mc - exact).norm() < 4.0 / (reps as f64).sqrt(), "{mc} vs {exact}");
    }

    #[test]
    fn successive_first_excursion_matches_single_process() {
        let p = std_params(2000);
        let policy = HorizonPolicy::default();
        let reps = 4000;
        let mut rng = stream_rng(7, "succ", 0);
        let single: Vec<f64> = (0..reps).filter_map(|_| sample_hitting_time(&p, &policy, &mut rng).time).collect();
        let first: Vec<f64> = (0..reps)
            .map(|_| successive_hitting(&p, 1, CoefficientConvention::Standard, &policy, &mut rng).hits[0])
            .collect();
        let ks = crate::harness::stats::ks_statistic(&single, &first).unwrap();
        assert!(ks.p_value > 1e-3, "{ks:?}");
    }

    #[test]
    fn successive_drift_increases() {
        let p = std_params(2000);
        let mut rng = stream_rng(8, "succ", 0);
        let out = successive_hitting(&p, 10, CoefficientConvention::Standard, &HorizonPolicy::default(), &mut rng);
        assert!(out.drifts.windows(2).all(|d| d[1] > d[0]));
        assert_eq!(out.roots[0], 1);
        assert!(out.roots.windows(2).all(|r| r[1] > r[0]));
    }

    proptest! {
        #[test]
        fn dominating_path_bounds_thinned(seed in 0u64..200) {
            let p = std_params(500);
            let mut rng = stream_rng(seed, "dom", 0);
            let c = sample_clocks(&p, 4.0, true, &mut rng);
            let s = thinned_path(&p, &c, 4.0).unwrap();
            let r = dominating_path(&p, &c, 4.0).unwrap();
            prop_assert!(r.times.len() >= s.times.len());
            for &t in s.times.iter().chain(&r.times) {
                prop_assert!(s.value_at(t) <= r.value_at(t) + 1e-12);
            }
        }

        #[test]
        fn hitting_time_is_exact(seed in 0u64..200) {
            let p = std_params(1000);
            let mut rng = stream_rng(seed, "hit", 0);
            let c = sample_clocks(&p, 20.0, false, &mut rng);
            let path = thinned_path(&p, &c, 20.0).unwrap();
            if let Some(h) = path.hitting_time() {
                let v = path.value_at(h);
                prop_assert!(v <= 0.0 && v >= -1e-12, "value {v}");
                for k in 0..path.times.len() {
                    if path.times[k] < h {
                        prop_assert!(path.value_before(k) > 0.0);
                    }
                }
            }
        }
    }
}
