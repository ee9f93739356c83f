//! The weighted shift `(Sf)(v) = λ_v f(pa v)` on `ℓ²(β)`, its adjoint, and
//! the per-vertex supremum formula for `‖Sᵏ‖`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;
use crate::tree::{DirectedTree, VertexId};
use crate::weights::{WeightSystem, WeightedTree};
use crate::{Flagged, TruncationDiagnostic};

/// A finitely supported function on the vertices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TreeVector {
    values: BTreeMap<VertexId, Complex64>,
}

impl TreeVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// The characteristic function `e_u`.
    pub fn basis(u: VertexId) -> Self {
        let mut f = Self::new();
        f.set(u, Complex64::new(1.0, 0.0));
        f
    }

    /// Keeps the nonzero entries of a dense vector indexed by vertex id.
    pub fn from_dense(values: &[Complex64]) -> Self {
        let values = values
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != Complex64::new(0.0, 0.0))
            .map(|(i, x)| (VertexId(i), *x))
            .collect();
        Self { values }
    }

    pub fn to_dense(&self, n: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (v, x) in &self.values {
            out[v.0] = *x;
        }
        out
    }

    pub fn get(&self, v: VertexId) -> Complex64 {
        self.values.get(&v).copied().unwrap_or_default()
    }

    pub fn set(&mut self, v: VertexId, x: Complex64) {
        if x == Complex64::new(0.0, 0.0) {
            self.values.remove(&v);
        } else {
            self.values.insert(v, x);
        }
    }

    pub fn add_at(&mut self, v: VertexId, x: Complex64) {
        let y = self.get(v) + x;
        self.set(v, y);
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, Complex64)> + '_ {
        self.values.iter().map(|(v, x)| (*v, *x))
    }

    pub fn support(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.values.keys().copied()
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = Self::new();
        for (v, x) in self.iter() {
            out.set(v, x * c);
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (v, x) in other.iter() {
            out.add_at(v, x);
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Deepest vertex of the support.
    pub fn max_depth(&self, tree: &DirectedTree) -> Option<usize> {
        self.support().map(|v| tree.depth(v)).max()
    }

    /// `Σ |f(v)|² β_v`.
    pub fn norm_sqr(&self, weights: &WeightSystem) -> f64 {
        self.iter()
            .map(|(v, x)| x.norm_sqr() * weights.beta(v))
            .collect::<NeumaierSum>()
            .total()
    }

    pub fn norm(&self, weights: &WeightSystem) -> f64 {
        self.norm_sqr(weights).sqrt()
    }

    /// `⟨f, g⟩_β = Σ f(v) conj(g(v)) β_v`.
    pub fn inner(&self, g: &Self, weights: &WeightSystem) -> Complex64 {
        let (mut re, mut im) = (NeumaierSum::new(), NeumaierSum::new());
        for (v, x) in self.iter() {
            let term = x * g.get(v).conj() * weights.beta(v);
            re.add(term.re);
            im.add(term.im);
        }
        Complex64::new(re.total(), im.total())
    }
}

/// `S f`: mass at `u` moves to each stored child `v` scaled by `λ_v`. Mass on
/// frontier or pruned vertices would reach unstored children and raises the
/// truncation flag.
pub fn apply_shift(wt: &WeightedTree, f: &TreeVector) -> Flagged<TreeVector> {
    let (tree, w) = (&wt.tree, &wt.weights);
    let mut out = TreeVector::new();
    let mut truncation_loss = false;
    for (u, x) in f.iter() {
        if !tree.is_complete(u) {
            truncation_loss = true;
        }
        for &v in tree.children(u) {
            out.add_at(v, w.lambda(v) * x);
        }
    }
    Flagged {
        value: out,
        truncation_loss,
    }
}

/// `(S* f)(u) = Σ_{v ∈ Chi(u)} conj(λ_v) (β_v/β_u) f(v)`, so that
/// `S* e_v = conj(λ_v)(β_v/β_{pa v}) e_{pa v}` and `S* e_root = 0`.
///
/// The flag is raised when the support touches a frontier or pruned vertex:
/// the value there would also depend on children that are not stored.
pub fn apply_adjoint(wt: &WeightedTree, f: &TreeVector) -> Flagged<TreeVector> {
    let (tree, w) = (&wt.tree, &wt.weights);
    let mut out = TreeVector::new();
    let mut truncation_loss = false;
    for (v, x) in f.iter() {
        if !tree.is_complete(v) {
            truncation_loss = true;
        }
        if let Some(p) = tree.parent(v) {
            out.add_at(p, w.lambda(v).conj() * (w.beta(v) / w.beta(p)) * x);
        }
    }
    Flagged {
        value: out,
        truncation_loss,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerNorm {
    pub k: usize,
    /// `‖Sᵏ‖` over the stored tree.
    pub value: f64,
    /// `‖Sᵏ‖²`.
    pub squared: f64,
    pub argmax: VertexId,
    /// Depth of the vertex at which the running supremum last increased
    /// during a scan in BFS order.
    pub stabilized_at: usize,
    pub diagnostic: TruncationDiagnostic,
}

/// `‖Sᵏ‖² = sup_u Σ_{v ∈ Chi⟨k⟩(u)} |λ_{u|v}|² β_v/β_u`, the supremum taken
/// over vertices whose `k` generations of descendants are fully stored.
pub fn power_norm(wt: &WeightedTree, k: usize) -> Result<PowerNorm> {
    if k == 0 {
        return Err(Error::InvalidTree("power_norm needs k ≥ 1".into()));
    }
    Ok(power_norms(wt, k)?.pop().expect("k ≥ 1 entries"))
}

/// `power_norm(j)` for `j = 1..=kmax`, sharing one pass over the tree.
///
/// `g_j(u) = Σ_{v ∈ Chi⟨j⟩(u)} |λ_{u|v}|² β_v` satisfies
/// `g_j(u) = Σ_{c ∈ Chi(u)} |λ_c|² g_{j−1}(c)` with `g_0 = β`.
pub fn power_norms(wt: &WeightedTree, kmax: usize) -> Result<Vec<PowerNorm>> {
    let (tree, w) = (&wt.tree, &wt.weights);
    let n = tree.n_vertices();
    let abs_lambda_sq: Vec<f64> = w.lambdas().iter().map(|l| l.norm_sqr()).collect();
    let mut g: Vec<f64> = w.betas().to_vec();
    let mut out = Vec::with_capacity(kmax);
    let half = tree.horizon() / 2;
    for j in 1..=kmax {
        g = (0..n)
            .into_par_iter()
            .map(|u| {
                let u = VertexId(u);
                if tree.complete_height(u) < j {
                    return 0.0;
                }
                tree.children(u)
                    .iter()
                    .map(|c| abs_lambda_sq[c.0] * g[c.0])
                    .collect::<NeumaierSum>()
                    .total()
            })
            .collect();
        let mut best: Option<(f64, VertexId)> = None;
        let mut stabilized_at = 0;
        let mut half_best = f64::NAN;
        for u in tree.bfs_order() {
            if tree.complete_height(u) < j {
                continue;
            }
            let ratio = g[u.0] / w.beta(u);
            if best.is_none_or(|(b, _)| ratio > b) {
                best = Some((ratio, u));
                stabilized_at = tree.depth(u);
            }
            if tree.depth(u) + j <= half && (ratio > half_best || ratio.is_nan()) {
                half_best = ratio;
            }
        }
        let (squared, argmax) = best.ok_or(Error::HorizonTooShallow { needed: j })?;
        let value = squared.sqrt();
        out.push(PowerNorm {
            k: j,
            value,
            squared,
            argmax,
            stabilized_at,
            diagnostic: TruncationDiagnostic::new(value, half_best.sqrt()),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Boundedness {
    /// `sup_u Σ_{v ∈ Chi(u)} |λ_v|² β_v/β_u` over complete vertices.
    pub value: f64,
    /// The same supremum restricted to each depth.
    pub per_depth_max: Vec<f64>,
    /// Per-depth maxima strictly increase through the tail half of the tree.
    pub unbounded_trend: bool,
}

pub fn boundedness_margin(wt: &WeightedTree) -> Boundedness {
    let (tree, w) = (&wt.tree, &wt.weights);
    let mut per_depth_max = Vec::new();
    for level in tree.levels() {
        let m = level
            .iter()
            .filter(|&&u| tree.is_complete(u))
            .map(|&u| {
                tree.children(u)
                    .iter()
                    .map(|&c| w.lambda(c).norm_sqr() * w.beta(c) / w.beta(u))
                    .collect::<NeumaierSum>()
                    .total()
            })
            .fold(f64::NAN, f64::max);
        if m.is_nan() {
            break;
        }
        per_depth_max.push(m);
    }
    let value = per_depth_max.iter().copied().fold(0.0, f64::max);
    let tail = &per_depth_max[per_depth_max.len().div_ceil(2).min(per_depth_max.len())..];
    let unbounded_trend = tail.len() >= 3 && tail.windows(2).all(|p| p[1] > p[0]);
    Boundedness {
        value,
        per_depth_max,
        unbounded_trend,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GelfandEstimate {
    /// `‖Sᵏ‖^{1/k}` for `k = 1..=kmax`.
    pub sequence: Vec<f64>,
    /// Last term of the sequence.
    pub estimate: f64,
    pub nonincreasing: bool,
    /// Last term computed at the full horizon vs. at half the horizon.
    pub diagnostic: TruncationDiagnostic,
}

/// `‖Sᵏ‖^{1/k}`, `k = 1..=kmax`; converges to the spectral radius of the
/// untruncated operator.
pub fn spectral_radius_estimate(wt: &WeightedTree, kmax: usize) -> Result<GelfandEstimate> {
    if kmax == 0 {
        return Err(Error::InvalidTree("kmax must be at least 1".into()));
    }
    let norms = power_norms(wt, kmax)?;
    let sequence: Vec<f64> = norms
        .iter()
        .map(|p| p.value.powf(1.0 / p.k as f64))
        .collect();
    let last = norms.last().expect("kmax ≥ 1");
    let estimate = *sequence.last().expect("kmax ≥ 1");
    let half = last.diagnostic.at_half_horizon.powf(1.0 / last.k as f64);
    Ok(GelfandEstimate {
        nonincreasing: sequence.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12)),
        estimate,
        diagnostic: TruncationDiagnostic::new(estimate, half),
        sequence,
    })
}
