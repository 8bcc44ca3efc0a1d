//! Graph generation (Norros-Reittu, Chung-Lu, generalized random graph),
//! connected components, and the clock-coupled multiplicative coalescent.

use std::io::Write;

use rand_distr::weighted::WeightedAliasIndex;
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Exponents, WeightSequence};
use crate::rng::{bernoulli_skip, poisson, truncated_exponential};

pub const DEFAULT_DENSE_GUARD: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    NorrosReittu,
    ChungLu,
    Grg,
}

impl KernelKind {
    pub fn edge_probability(self, wi: f64, wj: f64, ell_n: f64) -> f64 {
        if ell_n <= 0.0 {
            return 0.0;
        }
        let x = wi * wj / ell_n;
        match self {
            KernelKind::NorrosReittu => -(-x).exp_m1(),
            KernelKind::ChungLu => x.min(1.0),
            KernelKind::Grg => wi * wj / (ell_n + wi * wj),
        }
    }
}

/// Simple graph on `0..n`; each edge is stored once as `(i, j)` with `i < j`, sorted.
#[derive(Clone, Debug)]
pub struct EdgeList {
    pub n: usize,
    pub edges: Vec<(u32, u32)>,
    pub kernel: KernelKind,
    /// Multi-edge count before simplification (sparse generator only).
    pub raw_edges: Option<u64>,
    pub provenance: Option<String>,
}

impl EdgeList {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        let key = (i.min(j) as u32, i.max(j) as u32);
        self.edges.binary_search(&key).is_ok()
    }

    /// Two-column CSV `i,j` with 1-based ids.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,j")?;
        for &(i, j) in &self.edges {
            writeln!(out, "{},{}", i + 1, j + 1)?;
        }
        Ok(())
    }
}

/// Independent pairs with kernel probabilities, by geometric skipping over
/// `j` (the weights are sorted, so `p_ij` is non-increasing in `j`).
pub fn generate_dense<R: Rng + ?Sized>(
    w: &WeightSequence,
    kernel: KernelKind,
    guard: usize,
    rng: &mut R,
) -> Result<EdgeList> {
    let n = w.n();
    if n > guard {
        return Err(Error::DenseGuard { n, guard });
    }
    let ws = w.weights();
    let ell = w.ell_n();
    let mut edges = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let wi = ws[i];
        bernoulli_skip(
            rng,
            i as u64 + 1,
            n as u64,
            |j| kernel.edge_probability(wi, ws[j as usize], ell),
            |j| edges.push((i as u32, j as u32)),
        );
    }
    Ok(EdgeList { n, edges, kernel, raw_edges: None, provenance: None })
}

/// Norros-Reittu sampler: a Poisson(ell_n / 2) number of multi-edges with
/// i.i.d. size-biased endpoints, which gives Poisson(w_i w_j / ell_n) edges
/// per unordered pair. Build once and reuse across replications.
#[derive(Clone, Debug)]
pub struct SparseSampler {
    alias: Option<WeightedAliasIndex<f64>>,
    ell_n: f64,
    n: usize,
}

impl SparseSampler {
    pub fn new(w: &WeightSequence) -> Result<Self> {
        let alias = if w.ell_n() > 0.0 {
            Some(
                WeightedAliasIndex::new(w.weights().to_vec())
                    .map_err(|e| Error::InvalidParameter(format!("alias table: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { alias, ell_n: w.ell_n(), n: w.n() })
    }

    fn multi_edges<R: Rng + ?Sized>(&self, rng: &mut R) -> (u64, Vec<u64>) {
        let Some(alias) = &self.alias else { return (0, Vec::new()) };
        let m = poisson(rng, self.ell_n / 2.0);
        let mut keys = Vec::with_capacity(m as usize);
        for _ in 0..m {
            let i = alias.sample(rng) as u64;
            let j = alias.sample(rng) as u64;
            if i != j {
                keys.push((i.min(j) << 32) | i.max(j));
            }
        }
        keys.sort_unstable();
        keys.dedup();
        (m, keys)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> EdgeList {
        let (m, keys) = self.multi_edges(rng);
        let edges = keys.into_iter().map(|k| ((k >> 32) as u32, k as u32)).collect();
        EdgeList { n: self.n, edges, kernel: KernelKind::NorrosReittu, raw_edges: Some(m), provenance: None }
    }
}

pub fn generate_sparse<R: Rng + ?Sized>(w: &WeightSequence, rng: &mut R) -> Result<EdgeList> {
    Ok(SparseSampler::new(w)?.sample(rng))
}

/// Union-find with union by size and path halving; tracks size, weight and
/// minimal vertex per root.
#[derive(Clone, Debug)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
    weight: Vec<f64>,
    min: Vec<u32>,
}

impl DisjointSets {
    pub fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            weight: weights.to_vec(),
            min: (0..n as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let gp = self.parent[self.parent[x] as usize];
            self.parent[x] = gp;
            x = gp as usize;
        }
        x
    }

    /// Returns the new root if two different sets were merged.
    pub fn union(&mut self, a: usize, b: usize) -> Option<usize> {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        self.weight[ra] += self.weight[rb];
        self.min[ra] = self.min[ra].min(self.min[rb]);
        Some(ra)
    }

    pub fn is_root(&self, x: usize) -> bool {
        self.parent[x] as usize == x
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }

    pub fn set_weight(&mut self, x: usize) -> f64 {
        let r = self.find(x);
        self.weight[r]
    }

    pub fn set_min(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.min[r] as usize
    }

    /// Weights of all current sets, unsorted.
    pub fn root_weights(&self) -> Vec<f64> {
        (0..self.len()).filter(|&x| self.is_root(x)).map(|x| self.weight[x]).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub size: usize,
    pub weight: f64,
    pub surplus: u64,
    /// Smallest vertex (0-based).
    pub min_vertex: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<usize>>,
}

/// Components ordered by minimal vertex, with the component index of every vertex.
#[derive(Clone, Debug)]
pub struct Partition {
    pub components: Vec<ComponentSummary>,
    pub label: Vec<u32>,
}

impl Partition {
    pub fn component_of(&self, v: usize) -> &ComponentSummary {
        &self.components[self.label[v] as usize]
    }

    pub fn same_component(&self, u: usize, v: usize) -> bool {
        self.label[u] == self.label[v]
    }

    /// Fills `members` for every component.
    pub fn with_members(mut self) -> Self {
        for c in &mut self.components {
            c.members = Some(Vec::with_capacity(c.size));
        }
        for (v, &l) in self.label.iter().enumerate() {
            self.components[l as usize].members.as_mut().unwrap().push(v);
        }
        self
    }
}

pub fn partition(g: &EdgeList, w: &WeightSequence) -> Result<Partition> {
    if g.n != w.n() {
        return Err(Error::InvalidParameter(format!("graph has n = {} but weights have n = {}", g.n, w.n())));
    }
    let n = g.n;
    let mut ds = DisjointSets::new(w.weights());
    for &(i, j) in &g.edges {
        if i as usize >= n || j as usize >= n {
            return Err(Error::VertexOutOfRange { vertex: i.max(j) as usize + 1, n });
        }
        ds.union(i as usize, j as usize);
    }
    let mut label = vec![u32::MAX; n];
    let mut components = Vec::new();
    // Vertices are visited in increasing order, so each component is first
    // met at its minimal vertex and the list comes out ordered by it.
    for v in 0..n {
        let r = ds.find(v);
        if label[r] == u32::MAX {
            label[r] = components.len() as u32;
            components.push(ComponentSummary {
                size: ds.size[r] as usize,
                weight: ds.weight[r],
                surplus: 0,
                min_vertex: ds.min[r] as usize,
                members: None,
            });
        }
        label[v] = label[r];
    }
    let mut edge_count = vec![0u64; components.len()];
    for &(i, _) in &g.edges {
        edge_count[label[i as usize] as usize] += 1;
    }
    for (c, e) in components.iter_mut().zip(edge_count) {
        c.surplus = e + 1 - c.size as u64;
    }
    Ok(Partition { components, label })
}

pub fn components(g: &EdgeList, w: &WeightSequence) -> Result<Vec<ComponentSummary>> {
    Ok(partition(g, w)?.components)
}

/// CSV with columns `rank,size,weight,surplus,min_vertex` (1-based), in the given order.
pub fn write_components_csv<W: Write>(comps: &[ComponentSummary], mut out: W) -> std::io::Result<()> {
    writeln!(out, "rank,size,weight,surplus,min_vertex")?;
    for (k, c) in comps.iter().enumerate() {
        writeln!(out, "{},{},{},{},{}", k + 1, c.size, c.weight, c.surplus, c.min_vertex + 1)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderedClusters {
    /// `n^{-rho} |C_(i)|`, descending.
    pub sizes: Vec<f64>,
    /// `n^{-rho} W_(i)`, descending.
    pub weights: Vec<f64>,
    /// Component indices in size order (ties by smaller minimal vertex).
    pub size_order: Vec<usize>,
}

pub fn ordered_statistics(comps: &[ComponentSummary], n: usize, ex: &Exponents) -> OrderedClusters {
    let scale = (n as f64).powf(-ex.rho);
    let mut size_order: Vec<usize> = (0..comps.len()).collect();
    size_order.sort_by(|&x, &y| {
        comps[y].size.cmp(&comps[x].size).then(comps[x].min_vertex.cmp(&comps[y].min_vertex))
    });
    let mut weight_order: Vec<usize> = (0..comps.len()).collect();
    weight_order.sort_by(|&x, &y| {
        comps[y]
            .weight
            .total_cmp(&comps[x].weight)
            .then(comps[x].min_vertex.cmp(&comps[y].min_vertex))
    });
    OrderedClusters {
        sizes: size_order.iter().map(|&k| comps[k].size as f64 * scale).collect(),
        weights: weight_order.iter().map(|&k| comps[k].weight * scale).collect(),
        size_order,
    }
}

/// Both sides of `sum_j W_<=(j)^m = sum_j w_j W(j)^{m-1}`, where `W_<=(j)`
/// is the weight of the component of `j` when `j` is its minimal vertex and 0 otherwise.
pub fn cluster_weight_identity(p: &Partition, w: &WeightSequence, m: i32) -> (f64, f64) {
    let lhs = crate::numerics::compensated_sum(p.components.iter().map(|c| c.weight.powi(m)));
    let rhs = crate::numerics::compensated_sum(
        w.weights().iter().enumerate().map(|(j, wj)| wj * p.component_of(j).weight.powi(m - 1)),
    );
    (lhs, rhs)
}

/// Per-`t` ordered rescaled component weights from one shared clock realization.
#[derive(Clone, Debug, Serialize)]
pub struct CoalescentFamily {
    pub t: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// `n^{-rho}` times component weights, descending, one vector per `t`.
    pub states: Vec<Vec<f64>>,
    /// Number of clocks below the largest threshold.
    pub clocks: usize,
}

/// Clock `xi_ij ~ Exp(w_i w_j / ell_n)` per pair; the edge is present at `t`
/// iff `xi_ij <= 1 + (lambda_n + t) ell_n n^{-2 rho}`. Only clocks below the
/// largest threshold are drawn (by skipping), so every `t` shares one realization.
pub fn coalescent_family<R: Rng + ?Sized>(
    w: &WeightSequence,
    lambda_n: f64,
    t_grid: &[f64],
    rng: &mut R,
) -> Result<CoalescentFamily> {
    let ex = w.exponents().ok_or_else(|| Error::InvalidParameter("coalescent_family needs tau".into()))?;
    if t_grid.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::InvalidParameter("t grid must be ascending".into()));
    }
    let n = w.n();
    let nf = n as f64;
    let ell = w.ell_n();
    let thresholds: Vec<f64> = t_grid.iter().map(|t| 1.0 + (lambda_n + t) * ell * nf.powf(-2.0 * ex.rho)).collect();
    for (s, t) in thresholds.iter().zip(t_grid) {
        if *s < 0.0 {
            return Err(Error::NegativeThreshold(*s, *t));
        }
    }
    let s_max = thresholds.last().copied().unwrap_or(0.0);
    let ws = w.weights();
    let mut clocks: Vec<(f64, u32, u32)> = Vec::new();
    if s_max > 0.0 && ell > 0.0 {
        for i in 0..n.saturating_sub(1) {
            let wi = ws[i];
            bernoulli_skip(
                rng,
                i as u64 + 1,
                n as u64,
                |j| -(-wi * ws[j as usize] * s_max / ell).exp_m1(),
                |j| clocks.push((0.0, i as u32, j as u32)),
            );
        }
        for c in &mut clocks {
            let rate = ws[c.1 as usize] * ws[c.2 as usize] / ell;
            c.0 = truncated_exponential(rng, rate, s_max);
        }
    }
    clocks.sort_by(|x, y| x.0.total_cmp(&y.0));
    let scale = nf.powf(-ex.rho);
    let mut ds = DisjointSets::new(ws);
    let mut next = 0;
    let mut states = Vec::with_capacity(t_grid.len());
    for &s in &thresholds {
        while next < clocks.len() && clocks[next].0 <= s {
            ds.union(clocks[next].1 as usize, clocks[next].2 as usize);
            next += 1;
        }
        let mut x: Vec<f64> = ds.root_weights().into_iter().map(|v| v * scale).collect();
        x.sort_by(|a, b| b.total_cmp(a));
        states.push(x);
    }
    Ok(CoalescentFamily { t: t_grid.to_vec(), thresholds, states, clocks: clocks.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_weights, critical_pareto};
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    fn ws(v: Vec<f64>) -> WeightSequence {
        WeightSequence::from_weights(v, None).unwrap()
    }

    fn graph(n: usize, edges: &[(u32, u32)]) -> EdgeList {
        let mut e = edges.to_vec();
        e.sort();
        EdgeList { n, edges: e, kernel: KernelKind::NorrosReittu, raw_edges: None, provenance: None }
    }

    #[test]
    fn zero_weights_give_no_edges() {
        let w = ws(vec![0.0; 5]);
        let mut rng = stream_rng(1, "g", 0);
        assert!(generate_dense(&w, KernelKind::NorrosReittu, 100, &mut rng).unwrap().edges.is_empty());
        assert!(generate_sparse(&w, &mut rng).unwrap().edges.is_empty());
    }

    #[test]
    fn kernel_probabilities() {
        assert!((KernelKind::NorrosReittu.edge_probability(1.0, 1.0, 2.0) - 0.393_469_340_287).abs() < 1e-11);
        assert!((KernelKind::Grg.edge_probability(1.0, 1.0, 2.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(KernelKind::ChungLu.edge_probability(3.0, 3.0, 2.0), 1.0);
        assert_eq!(KernelKind::ChungLu.edge_probability(1.0, 1.0, 4.0), 0.25);
    }

    #[test]
    fn dense_guard() {
        let w = ws(vec![1.0; 20]);
        let mut rng = stream_rng(1, "g", 0);
        assert!(matches!(
            generate_dense(&w, KernelKind::ChungLu, 10, &mut rng),
            Err(Error::DenseGuard { n: 20, guard: 10 })
        ));
    }

    #[test]
    fn two_vertex_edge_frequency() {
        let w = ws(vec![1.0, 1.0]);
        let reps = 100_000;
        for (kernel, p) in [(KernelKind::NorrosReittu, 1.0 - (-0.5f64).exp()), (KernelKind::Grg, 1.0 / 3.0)] {
            let mut rng = stream_rng(2, "two", kernel as u64);
            let hits = (0..reps)
                .filter(|_| !generate_dense(&w, kernel, 10, &mut rng).unwrap().edges.is_empty())
                .count();
            let f = hits as f64 / reps as f64;
            assert!((f - p).abs() < 3.0 * (p * (1.0 - p) / reps as f64).sqrt(), "{kernel:?}: {f}");
        }
        let mut rng = stream_rng(2, "two-sparse", 0);
        let s = SparseSampler::new(&w).unwrap();
        let none = (0..reps).filter(|_| s.sample(&mut rng).edges.is_empty()).count() as f64 / reps as f64;
        let p = (-0.5f64).exp();
        assert!((none - p).abs() < 3.0 * (p * (1.0 - p) / reps as f64).sqrt());
    }

    #[test]
    fn sparse_raw_edge_count_mean() {
        let law = critical_pareto(3.5).unwrap();
        let w = build_weights(&law, 2000).unwrap();
        let s = SparseSampler::new(&w).unwrap();
        let mut rng = stream_rng(3, "raw", 0);
        let reps = 2000;
        let total: u64 = (0..reps).map(|_| s.sample(&mut rng).raw_edges.unwrap()).sum();
        let mean = total as f64 / reps as f64;
        let target = w.ell_n() / 2.0;
        assert!((mean - target).abs() < 4.0 * (target / reps as f64).sqrt());
    }

    #[test]
    fn component_examples() {
        let w = ws(vec![1.0, 1.0, 1.0]);
        let c = components(&graph(3, &[]), &w).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|x| x.size == 1 && x.surplus == 0));
        let c = components(&graph(3, &[(0, 1), (1, 2), (0, 2)]), &w).unwrap();
        assert_eq!((c.len(), c[0].size, c[0].surplus), (1, 3, 1));
        let c = components(&graph(3, &[(0, 1), (1, 2)]), &w).unwrap();
        assert_eq!((c[0].size, c[0].surplus, c[0].min_vertex), (3, 0, 0));
    }

    #[test]
    fn ordering_ties_by_min_vertex() {
        let mk = |size, min_vertex| ComponentSummary { size, weight: size as f64, surplus: 0, min_vertex, members: None };
        let comps = vec![mk(5, 1), mk(3, 0), mk(3, 3), mk(1, 6)];
        let ex = crate::model::exponents(3.5).unwrap();
        let o = ordered_statistics(&comps, 12, &ex);
        assert_eq!(o.size_order, vec![0, 1, 2, 3]);
        let single = ordered_statistics(&[mk(1, 0)], 1, &ex);
        assert_eq!(single.sizes, vec![1.0]);
    }

    #[test]
    fn two_vertex_coalescent_merge_probability() {
        let law = critical_pareto(3.5).unwrap();
        let w = build_weights(&law, 2).unwrap();
        let ex = law.exponents();
        let ell = w.ell_n();
        let t = 5.0;
        let s = 1.0 + t * ell * 2f64.powf(-2.0 * ex.rho);
        let p = -(-s * w.w(0) * w.w(1) / ell).exp_m1();
        let reps = 50_000;
        let mut rng = stream_rng(4, "cf", 0);
        let merged = (0..reps)
            .filter(|_| coalescent_family(&w, 0.0, &[t], &mut rng).unwrap().states[0].len() == 1)
            .count() as f64
            / reps as f64;
        assert!((merged - p).abs() < 3.5 * (p * (1.0 - p) / reps as f64).sqrt(), "{merged} vs {p}");
    }

    #[test]
    fn coalescent_family_reaches_single_component() {
        let law = critical_pareto(3.5).unwrap();
        let w = build_weights(&law, 30).unwrap();
        let mut rng = stream_rng(5, "cf", 0);
        let f = coalescent_family(&w, 0.0, &[0.0, 1e5, 1e9], &mut rng).unwrap();
        let last = f.states.last().unwrap();
        assert_eq!(last.len(), 1);
        assert!((last[0] - w.ell_n() * 30f64.powf(-0.6)).abs() < 1e-12);
        assert!(coalescent_family(&w, -1e9, &[0.0], &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn partition_invariants(seed in 0u64..500, n in 1usize..80) {
            let law = critical_pareto(3.5).unwrap();
            let w = crate::model::apply_window(&build_weights(&law, n).unwrap(), 3.0).unwrap();
            let mut rng = stream_rng(seed, "inv", 0);
            let g = generate_sparse(&w, &mut rng).unwrap();
            prop_assert!(g.edges.iter().all(|&(i, j)| i < j && (j as usize) < n));
            prop_assert!(g.edges.windows(2).all(|p| p[0] < p[1]));
            let p = partition(&g, &w).unwrap();
            prop_assert_eq!(p.components.iter().map(|c| c.size).sum::<usize>(), n);
            let tw: f64 = p.components.iter().map(|c| c.weight).sum();
            prop_assert!((tw - w.ell_n()).abs() <= 1e-12 * w.ell_n().max(1.0));
            for m in [2, 3] {
                let (l, r) = cluster_weight_identity(&p, &w, m);
                prop_assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0));
            }
        }

        #[test]
        fn surplus_rises_by_one_per_cycle_edge(n in 3usize..40) {
            let w = ws(vec![1.0; n]);
            let path: Vec<(u32, u32)> = (0..n as u32 - 1).map(|i| (i, i + 1)).collect();
            let c = components(&graph(n, &path), &w).unwrap();
            prop_assert_eq!(c[0].surplus, 0);
            let mut more = path.clone();
            more.push((0, n as u32 - 1));
            let c = components(&graph(n, &more), &w).unwrap();
            prop_assert_eq!(c[0].surplus, 1);
        }

        #[test]
        fn coalescent_max_weight_non_decreasing(seed in 0u64..100) {
            let law = critical_pareto(3.5).unwrap();
            let w = build_weights(&law, 300).unwrap();
            let mut rng = stream_rng(seed, "mono", 0);
            let grid = [-2.0, 0.0, 2.0, 10.0, 40.0];
            let f = coalescent_family(&w, 0.0, &grid, &mut rng).unwrap();
            for k in 1..f.states.len() {
                prop_assert!(f.states[k][0] >= f.states[k - 1][0]);
                prop_assert!(f.states[k].len() <= f.states[k - 1].len());
            }
        }
    }
}
