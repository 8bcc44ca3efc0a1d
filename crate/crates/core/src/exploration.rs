//! The mark-based cluster exploration walk and the sequential exploration
//! of clusters of successive lowest-index unexplored vertices.

use std::io::Write;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{nu_n, Exponents, WeightSequence};
use crate::numerics::compensated_sum;
use crate::rng::poisson;

/// One realized exploration. Step `l` of the walk is index `l` in `z` and `s`;
/// `marks[k]` and `thinned[k]` belong to step `l = k + 2`.
#[derive(Clone, Debug, Serialize)]
pub struct ExplorationTrace {
    pub start: usize,
    pub z: Vec<u64>,
    pub s: Vec<f64>,
    pub marks: Vec<u32>,
    /// `J_l`: true when the mark was new.
    pub thinned: Vec<bool>,
    /// Vertex checks: the first `l` with `Z_l = 0` (steps taken when incomplete).
    pub checks: usize,
    pub members: Vec<usize>,
    pub cluster_size: usize,
    /// Sum of the (windowed) weights of the members.
    pub cluster_weight: f64,
    /// Offspring scale `ell_n(i) / ell_n`; 1 for an unrestricted exploration.
    pub scale: f64,
    pub complete: bool,
}

impl ExplorationTrace {
    pub fn thinned_count(&self) -> usize {
        self.thinned.iter().filter(|j| !**j).count()
    }

    /// `scale * W - (V + S_V - 1)`; zero up to rounding.
    pub fn weight_identity_residual(&self) -> f64 {
        let sv = *self.s.last().unwrap();
        self.scale * self.cluster_weight - (self.checks as f64 + sv - 1.0)
    }

    /// Whether vertex `q` (0-based) belongs to the explored cluster.
    pub fn contains(&self, q: usize, n: usize) -> Result<bool> {
        if q >= n {
            return Err(Error::VertexOutOfRange { vertex: q + 1, n });
        }
        Ok(self.members.contains(&q))
    }

    /// CSV with columns `l,Z,S,M,J`; marks are 1-based and empty for `l < 2`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "l,Z,S,M,J")?;
        for l in 0..self.z.len() {
            if l >= 2 {
                let k = l - 2;
                writeln!(out, "{},{},{},{},{}", l, self.z[l], self.s[l], self.marks[k] + 1, self.thinned[k] as u8)?;
            } else {
                writeln!(out, "{},{},{},,", l, self.z[l], self.s[l])?;
            }
        }
        Ok(())
    }
}

/// Mark sampler for one forbidden-set epoch; reusable across explorations.
#[derive(Clone, Debug)]
pub struct Explorer<'a> {
    w: &'a WeightSequence,
    alias: WeightedAliasIndex<f64>,
    allowed: Option<Vec<bool>>,
    scale: f64,
}

impl<'a> Explorer<'a> {
    pub fn new(w: &'a WeightSequence) -> Result<Self> {
        Self::build(w, None)
    }

    /// Marks restricted to vertices outside `forbidden`, offspring scaled by `ell_n(i)/ell_n`.
    pub fn restricted(w: &'a WeightSequence, forbidden: &[bool]) -> Result<Self> {
        Self::build(w, Some(forbidden))
    }

    fn build(w: &'a WeightSequence, forbidden: Option<&[bool]>) -> Result<Self> {
        let (masses, allowed): (Vec<f64>, Option<Vec<bool>>) = match forbidden {
            None => (w.weights().to_vec(), None),
            Some(f) => {
                if f.len() != w.n() {
                    return Err(Error::InvalidParameter("forbidden mask length differs from n".into()));
                }
                let m = w.weights().iter().zip(f).map(|(x, &bad)| if bad { 0.0 } else { *x }).collect();
                (m, Some(f.iter().map(|b| !b).collect()))
            }
        };
        let residual = compensated_sum(masses.iter().copied());
        if !(residual > 0.0) {
            return Err(Error::ZeroResidualWeight);
        }
        let alias = WeightedAliasIndex::new(masses).map_err(|_| Error::ZeroResidualWeight)?;
        Ok(Self { w, alias, allowed, scale: residual / w.ell_n() })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn explore<R: Rng + ?Sized>(&self, start: usize, cap: Option<usize>, rng: &mut R) -> Result<ExplorationTrace> {
        let n = self.w.n();
        if start >= n {
            return Err(Error::VertexOutOfRange { vertex: start + 1, n });
        }
        if let Some(a) = &self.allowed {
            if !a[start] {
                return Err(Error::InvalidParameter(format!("start vertex {} is forbidden", start + 1)));
            }
        }
        let cap = cap.unwrap_or_else(|| default_step_cap(n, self.w.exponents()));
        let ws = self.w.weights();
        let scale = self.scale;
        let mut seen = std::collections::HashSet::new();
        seen.insert(start);
        let mut members = vec![start];
        let mut z = vec![1u64];
        let mut s = vec![1.0];
        let x1 = poisson(rng, ws[start] * scale);
        z.push(x1);
        s.push(ws[start] * scale);
        let mut marks = Vec::new();
        let mut thinned = Vec::new();
        let mut zl = x1;
        let mut sl = ws[start] * scale;
        let mut l = 1;
        while zl > 0 && l < cap {
            l += 1;
            let m = self.alias.sample(rng);
            let new = seen.insert(m);
            let x = if new {
                members.push(m);
                sl += ws[m] * scale;
                poisson(rng, ws[m] * scale)
            } else {
                0
            };
            sl -= 1.0;
            zl = zl + x - 1;
            marks.push(m as u32);
            thinned.push(new);
            z.push(zl);
            s.push(sl);
        }
        let cluster_weight = compensated_sum(members.iter().map(|&m| ws[m]));
        Ok(ExplorationTrace {
            start,
            z,
            s,
            marks,
            thinned,
            checks: l,
            cluster_size: members.len(),
            members,
            cluster_weight,
            scale,
            complete: zl == 0,
        })
    }

    /// Thinned marks among `M_2, ..., M_m` of the i.i.d. mark sequence with
    /// `M_1 = start`, next to the expectation bound for this fixed `m`.
    pub fn mark_repeats<R: Rng + ?Sized>(&self, start: usize, m: usize, rng: &mut R) -> Result<MultipleHits> {
        if start >= self.w.n() {
            return Err(Error::VertexOutOfRange { vertex: start + 1, n: self.w.n() });
        }
        let mut seen = std::collections::HashSet::new();
        seen.insert(start);
        let observed = (2..=m).filter(|_| !seen.insert(self.alias.sample(rng))).count();
        Ok(MultipleHits { observed, bound: hit_bound(self.w, start, m as f64)? })
    }
}

/// `50 n^rho`, or `50 n` without a tail exponent.
pub fn default_step_cap(n: usize, ex: Option<Exponents>) -> usize {
    let rho = ex.map(|e| e.rho).unwrap_or(1.0);
    ((50.0 * (n as f64).powf(rho)).ceil() as usize).max(2)
}

/// Explores the cluster of `start`, with marks restricted to vertices not in
/// `forbidden` (0-based ids).
pub fn explore_cluster<R: Rng + ?Sized>(
    w: &WeightSequence,
    start: usize,
    forbidden: &[usize],
    cap: Option<usize>,
    rng: &mut R,
) -> Result<ExplorationTrace> {
    if forbidden.is_empty() {
        return Explorer::new(w)?.explore(start, cap, rng);
    }
    let mut mask = vec![false; w.n()];
    for &f in forbidden {
        if f >= w.n() {
            return Err(Error::VertexOutOfRange { vertex: f + 1, n: w.n() });
        }
        mask[f] = true;
    }
    Explorer::restricted(w, &mask)?.explore(start, cap, rng)
}

#[derive(Clone, Debug, Serialize)]
pub struct SequentialState {
    /// Number of clusters explored so far (`i`).
    pub explored_clusters: usize,
    /// Number of explored vertices, `|D_<=i|`.
    pub explored_vertices: usize,
    /// `I_{i+1}` (0-based), the smallest unexplored vertex.
    pub next_start: usize,
    /// `ell_n(i)`: total (windowed) weight outside the explored set.
    pub residual_weight: f64,
    /// `n^eta sum_{q in B_i} w_q^2 / ell_n` over base weights with
    /// `B_i = D_<=i + {I_{i+1}}`; for Pareto weights this is `d sum_{q in B_i} q^{-2 alpha}` times `n E[W] / ell_n`.
    pub drift: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SequentialRun {
    pub traces: Vec<ExplorationTrace>,
    /// `states[i]` is the state before exploring cluster `i + 1`.
    pub states: Vec<SequentialState>,
    /// True when `[n]` ran out before `k` clusters.
    pub exhausted: bool,
}

/// Explores the clusters of `I_1 = 1`, then of the smallest unexplored vertex, and so on.
pub fn explore_sequential<R: Rng + ?Sized>(
    w: &WeightSequence,
    k: usize,
    cap: Option<usize>,
    rng: &mut R,
) -> Result<SequentialRun> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let n = w.n();
    let eta = w.exponents().map(|e| e.eta).unwrap_or(0.0);
    let base = w.base_weights();
    let base_ell = compensated_sum(base.iter().copied());
    let nf = n as f64;
    let mut explored = vec![false; n];
    let mut explored_count = 0;
    let mut next = 0;
    let mut drift_sum = crate::numerics::NeumaierSum::new();
    let mut traces = Vec::new();
    let mut states = Vec::new();
    while traces.len() < k {
        while next < n && explored[next] {
            next += 1;
        }
        if next == n {
            return Ok(SequentialRun { traces, states, exhausted: true });
        }
        let residual = compensated_sum(w.weights().iter().zip(&explored).filter(|(_, e)| !**e).map(|(x, _)| *x));
        let drift = if base_ell > 0.0 {
            nf.powf(eta) * (drift_sum.value() + base[next] * base[next]) / base_ell
        } else {
            0.0
        };
        states.push(SequentialState {
            explored_clusters: traces.len(),
            explored_vertices: explored_count,
            next_start: next,
            residual_weight: residual,
            drift,
        });
        let trace = if residual > 0.0 {
            Explorer::restricted(w, &explored)?.explore(next, cap, rng)?
        } else {
            // Only zero-weight vertices are left: each is an isolated vertex.
            isolated_trace(next)
        };
        for &m in &trace.members {
            explored[m] = true;
            drift_sum.add(base[m] * base[m]);
        }
        explored_count += trace.members.len();
        traces.push(trace);
    }
    Ok(SequentialRun { traces, states, exhausted: false })
}

fn isolated_trace(start: usize) -> ExplorationTrace {
    ExplorationTrace {
        start,
        z: vec![1, 0],
        s: vec![1.0, 0.0],
        marks: vec![],
        thinned: vec![],
        checks: 1,
        members: vec![start],
        cluster_size: 1,
        cluster_weight: 0.0,
        scale: 0.0,
        complete: true,
    }
}

/// `t -> n^{-alpha} Z_{floor(t n^rho)}`, stored at the grid `l / n^rho`.
#[derive(Clone, Debug, Serialize)]
pub struct RescaledWalk {
    pub time_step: f64,
    pub values: Vec<f64>,
}

impl RescaledWalk {
    /// Value at `t`; zero past the end of the walk.
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return f64::NAN;
        }
        let l = (t / self.time_step).floor() as usize;
        self.values.get(l).copied().unwrap_or(0.0)
    }

    pub fn end_time(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.time_step
    }
}

pub fn rescaled_walk(trace: &ExplorationTrace, ex: &Exponents, n: usize) -> RescaledWalk {
    let nf = n as f64;
    let space = nf.powf(-ex.alpha);
    RescaledWalk { time_step: nf.powf(-ex.rho), values: trace.z.iter().map(|&z| z as f64 * space).collect() }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MultipleHits {
    /// `sum (1 - J_l)` over the walk.
    pub observed: usize,
    /// `m w_start / ell_n + m (m - 1) nu_n / (2 ell_n)` with `m = V`.
    pub bound: f64,
}

/// Thinned count of a trace with the bound evaluated at `m = V`. The bound
/// holds in expectation for a fixed `m` only; see [`Explorer::mark_repeats`].
pub fn multiple_hit_check(trace: &ExplorationTrace, w: &WeightSequence) -> Result<MultipleHits> {
    Ok(MultipleHits { observed: trace.thinned_count(), bound: hit_bound(w, trace.start, trace.checks as f64)? })
}

fn hit_bound(w: &WeightSequence, start: usize, m: f64) -> Result<f64> {
    let ell = w.ell_n();
    Ok(m * w.w(start) / ell + m * (m - 1.0) * nu_n(w)? / (2.0 * ell))
}
