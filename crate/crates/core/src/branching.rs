//! The marked mixed-Poisson branching process dominating the exploration,
//! its closed-form progeny moments, and subcritical predictions.

use std::collections::{HashSet, VecDeque};
use std::io::Write;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{apply_window, nu_n, WeightSequence};
use crate::rng::poisson;

pub const DEFAULT_PROGENY_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Root {
    /// Fixed root vertex (0-based), giving `T(i)`.
    Vertex(usize),
    /// Root mark drawn from `w / ell_n`, giving `T`.
    SizeBiased,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BpOutcome {
    /// Total progeny, root included.
    pub t: u64,
    /// Total weight of the progeny, root included.
    pub wt: f64,
    pub capped: bool,
}

/// Branching process with marks drawn from `w / ell_n` and `Poisson(w_M)`
/// children, using the (windowed) weights of `w`. Build once per sequence.
#[derive(Clone, Debug)]
pub struct BranchingProcess<'a> {
    w: &'a WeightSequence,
    alias: WeightedAliasIndex<f64>,
}

impl<'a> BranchingProcess<'a> {
    pub fn new(w: &'a WeightSequence) -> Result<Self> {
        let alias = WeightedAliasIndex::new(w.weights().to_vec()).map_err(|_| Error::ZeroResidualWeight)?;
        Ok(Self { w, alias })
    }

    pub fn simulate<R: Rng + ?Sized>(&self, root: Root, cap: u64, rng: &mut R) -> BpOutcome {
        let ws = self.w.weights();
        let mut pending: u64 = 1;
        let mut t = 0;
        let mut wt = 0.0;
        let mut first = true;
        while pending > 0 {
            if t >= cap {
                return BpOutcome { t, wt, capped: true };
            }
            let m = match (first, root) {
                (true, Root::Vertex(i)) => i,
                _ => self.alias.sample(rng),
            };
            first = false;
            t += 1;
            wt += ws[m];
            pending = pending + poisson(rng, ws[m]) - 1;
        }
        BpOutcome { t, wt, capped: false }
    }

    /// Runs the branching process of `start` in breadth-first order alongside
    /// the exploration: an individual is a real vertex when its parent is real
    /// and its mark is new among real vertices; everything else is a ghost
    /// whose subtree exists only in the branching process.
    pub fn coupled<R: Rng + ?Sized>(&self, start: usize, cap: u64, rng: &mut R) -> CoupledGap {
        let ws = self.w.weights();
        let mut queue: VecDeque<bool> = VecDeque::new();
        let mut seen = HashSet::new();
        seen.insert(start);
        let (mut t, mut wt) = (1u64, ws[start]);
        let (mut size, mut weight) = (1usize, ws[start]);
        for _ in 0..poisson(rng, ws[start]) {
            queue.push_back(true);
        }
        let mut capped = false;
        while let Some(parent_real) = queue.pop_front() {
            if t >= cap {
                capped = true;
                break;
            }
            let m = self.alias.sample(rng);
            let real = parent_real && seen.insert(m);
            t += 1;
            wt += ws[m];
            if real {
                size += 1;
                weight += ws[m];
            }
            for _ in 0..poisson(rng, ws[m]) {
                queue.push_back(real);
            }
        }
        CoupledGap {
            bp: BpOutcome { t, wt, capped },
            cluster_size: size,
            cluster_weight: weight,
            size_gap: t as i64 - size as i64,
            weight_gap: wt - weight,
        }
    }
}

pub fn simulate_progeny<R: Rng + ?Sized>(w: &WeightSequence, root: Root, cap: u64, rng: &mut R) -> Result<BpOutcome> {
    if cap == 0 {
        return Err(Error::InvalidParameter("cap must be at least 1".into()));
    }
    if let Root::Vertex(i) = root {
        if i >= w.n() {
            return Err(Error::VertexOutOfRange { vertex: i + 1, n: w.n() });
        }
    }
    Ok(BranchingProcess::new(w)?.simulate(root, cap, rng))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoupledGap {
    pub bp: BpOutcome,
    pub cluster_size: usize,
    pub cluster_weight: f64,
    /// `T - |C|`.
    pub size_gap: i64,
    /// `w_T - W`.
    pub weight_gap: f64,
}

pub fn coupled_gap<R: Rng + ?Sized>(w: &WeightSequence, start: usize, cap: u64, rng: &mut R) -> Result<CoupledGap> {
    if start >= w.n() {
        return Err(Error::VertexOutOfRange { vertex: start + 1, n: w.n() });
    }
    Ok(BranchingProcess::new(w)?.coupled(start, cap, rng))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct VertexMoments {
    pub vertex: usize,
    pub mean_t: f64,
    pub mean_t2: f64,
    pub mean_wt: f64,
    pub mean_wt2: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProgenyMoments {
    pub nu: f64,
    /// `sum_j w_j^3 / ell_n`.
    pub s3: f64,
    pub mean_t: f64,
    pub mean_t2: f64,
    pub mean_wt: f64,
    pub mean_wt2: f64,
    pub vertex: Option<VertexMoments>,
}

/// Closed-form first and second moments of `T`, `w_T`, `T(i)` and `w_{T(i)}`.
pub fn progeny_moments(w: &WeightSequence, vertex: Option<usize>) -> Result<ProgenyMoments> {
    let nu = nu_n(w)?;
    if nu >= 1.0 {
        return Err(Error::NotSubcritical(nu));
    }
    let s3 = w.moment_ratio(3);
    let m = 1.0 / (1.0 - nu);
    let vertex = match vertex {
        None => None,
        Some(i) if i >= w.n() => return Err(Error::VertexOutOfRange { vertex: i + 1, n: w.n() }),
        Some(i) => {
            let wi = w.w(i);
            Some(VertexMoments {
                vertex: i,
                mean_t: 1.0 + wi * m,
                mean_t2: (1.0 + wi * m).powi(2) + wi * (1.0 + nu) * m * m + wi * s3 * m.powi(3),
                mean_wt: wi * m,
                mean_wt2: (wi * m).powi(2) + wi * s3 * m.powi(3),
            })
        }
    };
    Ok(ProgenyMoments {
        nu,
        s3,
        mean_t: m,
        mean_t2: (1.0 + nu) * m * m + s3 * m.powi(3),
        mean_wt: nu * m,
        mean_wt2: s3 * m.powi(3),
        vertex,
    })
}

/// One row of a moment comparison table.
#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub quantity: String,
    pub analytic: f64,
    pub monte_carlo: f64,
    pub se: f64,
    pub z: f64,
}

impl MomentRow {
    pub fn new(quantity: impl Into<String>, analytic: f64, monte_carlo: f64, se: f64) -> Self {
        let z = if se > 0.0 { (monte_carlo - analytic) / se } else if monte_carlo == analytic { 0.0 } else { f64::INFINITY };
        Self { quantity: quantity.into(), analytic, monte_carlo, se, z }
    }
}

pub fn write_moments_csv<W: Write>(rows: &[MomentRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "quantity,analytic,monte_carlo,se,z")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.quantity, r.analytic, r.monte_carlo, r.se, r.z)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SubcriticalPrediction {
    /// `w_j(lambda_n) / (1 - nu_n(lambda_n))`.
    pub finite: f64,
    /// `c_j n^rho / |lambda_n|` with `c_j = n^{-alpha} w_j`.
    pub limit: f64,
}

/// Predicted size of the cluster of vertex `j` (0-based) at `lambda_n`;
/// `w` carries the unperturbed weights.
pub fn subcritical_prediction(j: usize, w: &WeightSequence, lambda_n: f64) -> Result<SubcriticalPrediction> {
    if j >= w.n() {
        return Err(Error::VertexOutOfRange { vertex: j + 1, n: w.n() });
    }
    let ex = w.exponents().ok_or_else(|| Error::InvalidParameter("subcritical prediction needs tau".into()))?;
    let ww = apply_window(w, lambda_n)?;
    let nu = nu_n(&ww)?;
    if nu >= 1.0 || lambda_n >= 0.0 {
        return Err(Error::NotSubcritical(nu));
    }
    let nf = w.n() as f64;
    let cj = nf.powf(-ex.alpha) * w.base_weights()[j];
    Ok(SubcriticalPrediction { finite: ww.w(j) / (1.0 - nu), limit: cj * nf.powf(ex.rho) / lambda_n.abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_weights, critical_pareto};
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    #[test]
    fn closed_form_examples() {
        let w = WeightSequence::from_weights(vec![0.6, 0.6], None).unwrap();
        let m = progeny_moments(&w, Some(0)).unwrap();
        assert!((m.nu - 0.6).abs() < 1e-15);
        assert!((m.s3 - 0.36).abs() < 1e-15);
        assert!((m.mean_t2 - 15.625).abs() < 1e-12);
        assert!((m.mean_t - 2.5).abs() < 1e-12);
        let w = WeightSequence::from_weights(vec![1.0, 1.0], None).unwrap();
        assert!(matches!(progeny_moments(&w, None), Err(Error::NotSubcritical(_))));
        let w = WeightSequence::from_weights(vec![0.9; 10], None).unwrap();
        assert!((progeny_moments(&w, None).unwrap().mean_t - 10.0).abs() < 1e-12);
    }

    #[test]
    fn vertex_weight_mean_is_linear() {
        let w = WeightSequence::from_weights(vec![0.8, 0.5, 0.4, 0.1], None).unwrap();
        let m0 = progeny_moments(&w, Some(0)).unwrap().vertex.unwrap();
        let m2 = progeny_moments(&w, Some(2)).unwrap().vertex.unwrap();
        assert!((m0.mean_wt / 0.8 - m2.mean_wt / 0.4).abs() < 1e-14);
    }

    /// Constant weights make `T` Borel distributed; sum its law directly.
    #[test]
    fn moments_match_exact_recursion() {
        // P(T = k) = e^{-k/2} (k/2)^{k-1} / k!
        let w = WeightSequence::from_weights(vec![0.5; 4], None).unwrap();
        let mut e1 = 0.0;
        let mut e2 = 0.0;
        let mut log_fact = 0.0;
        for k in 1..400 {
            let kf = k as f64;
            if k > 1 {
                log_fact += kf.ln();
            }
            let p = (-kf / 2.0 + (kf - 1.0) * (kf / 2.0).ln() - log_fact).exp();
            e1 += kf * p;
            e2 += kf * kf * p;
        }
        let m = progeny_moments(&w, None).unwrap();
        assert!((m.mean_t - e1).abs() < 1e-10);
        assert!((m.mean_t2 - e2).abs() < 1e-10);
        assert!((m.mean_wt2 - 0.25 * e2).abs() < 1e-10);
    }

    #[test]
    fn subcritical_vertex_mean() {
        let law = critical_pareto(3.5).unwrap();
        let base = build_weights(&law, 2000).unwrap();
        let w = crate::model::apply_window(&base, -4.0).unwrap();
        let bp = BranchingProcess::new(&w).unwrap();
        let m = progeny_moments(&w, Some(0)).unwrap();
        let mut rng = stream_rng(9, "bp", 0);
        let reps = 20_000;
        let xs: Vec<f64> = (0..reps).map(|_| bp.simulate(Root::Vertex(0), DEFAULT_PROGENY_CAP, &mut rng).t as f64).collect();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let target = m.vertex.unwrap().mean_t;
        assert!((mean - target).abs() < 4.0 * (var / reps as f64).sqrt(), "{mean} vs {target}");
    }

    #[test]
    fn subcritical_prediction_ordering() {
        let law = critical_pareto(3.5).unwrap();
        let n = 100_000;
        let w = build_weights(&law, n).unwrap();
        let lam = -(n as f64).powf(0.1);
        let p1 = subcritical_prediction(0, &w, lam).unwrap();
        let p2 = subcritical_prediction(1, &w, lam).unwrap();
        assert!(p1.finite > p2.finite && p1.limit > p2.limit);
        let cj = law.c_f.powf(0.4);
        assert!((p1.limit - cj * (n as f64).powf(0.6) / lam.abs()).abs() < 1e-9 * p1.limit);
        assert!(subcritical_prediction(0, &w, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn coupling_gap_is_non_negative(seed in 0u64..400, lambda in -3.0f64..1.0) {
            let law = critical_pareto(3.5).unwrap();
            let w = crate::model::apply_window(&build_weights(&law, 500).unwrap(), lambda).unwrap();
            let mut rng = stream_rng(seed, "gap", 0);
            let g = coupled_gap(&w, (seed % 7) as usize, 100_000, &mut rng).unwrap();
            prop_assert!(g.size_gap >= 0);
            prop_assert!(g.weight_gap >= -1e-12);
            prop_assert!(g.bp.t >= 1);
        }
    }
}
