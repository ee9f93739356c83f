//! Vertex weights `β`, edge weights `λ`, ancestor products and the unitary
//! changes of weights between `ℓ²(β)` and `ℓ²(𝟙)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::tree::{DirectedTree, Label, TreeKind, TreeSpec, VertexId};

/// Default tolerance for the child-sum normalization check.
pub const DEFAULT_NORMALIZATION_TOL: f64 = 1e-9;

/// The pair `(β, λ)` on a fixed tree. `lambda[root]` is unused and stored as 1.
#[derive(Clone, Debug)]
pub struct WeightSystem {
    beta: Vec<f64>,
    lambda: Vec<Complex64>,
    /// `λ_{root|v}` for every vertex.
    root_product: Vec<Complex64>,
    /// `ln |λ_{root|v}|`, kept separately so deep products never underflow.
    log_abs_root_product: Vec<f64>,
    positive: bool,
    normalized: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormalizationViolation {
    pub vertex: VertexId,
    pub child_sum: Complex64,
}

impl WeightSystem {
    pub fn new(tree: &DirectedTree, beta: Vec<f64>, mut lambda: Vec<Complex64>) -> Result<Self> {
        let n = tree.n_vertices();
        if beta.len() != n || lambda.len() != n {
            return Err(Error::InvalidWeights(format!(
                "expected {n} entries, got {} beta and {} lambda",
                beta.len(),
                lambda.len()
            )));
        }
        if let Some(v) = beta.iter().position(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::InvalidWeights(format!(
                "beta at vertex {v} must be positive and finite"
            )));
        }
        if let Some(v) = lambda
            .iter()
            .position(|l| !(l.re.is_finite() && l.im.is_finite()))
        {
            return Err(Error::InvalidWeights(format!(
                "lambda at vertex {v} is not finite"
            )));
        }
        lambda[0] = Complex64::new(1.0, 0.0);
        let mut root_product = vec![Complex64::new(1.0, 0.0); n];
        let mut log_abs = vec![0.0; n];
        for v in tree.bfs_order().skip(1) {
            let p = tree.parent(v).expect("non-root vertex has a parent");
            root_product[v.0] = root_product[p.0] * lambda[v.0];
            log_abs[v.0] = log_abs[p.0] + lambda[v.0].norm().ln();
        }
        let positive = lambda.iter().skip(1).all(|l| l.im == 0.0 && l.re > 0.0);
        let mut w = Self {
            beta,
            lambda,
            root_product,
            log_abs_root_product: log_abs,
            positive,
            normalized: false,
        };
        w.normalized = positive
            && w.check_normalized(tree, DEFAULT_NORMALIZATION_TOL)
                .is_empty();
        Ok(w)
    }

    pub fn from_real(tree: &DirectedTree, beta: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        Self::new(
            tree,
            beta,
            lambda.into_iter().map(|l| Complex64::new(l, 0.0)).collect(),
        )
    }

    #[inline]
    pub fn beta(&self, v: VertexId) -> f64 {
        self.beta[v.0]
    }

    #[inline]
    pub fn lambda(&self, v: VertexId) -> Complex64 {
        self.lambda[v.0]
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    pub fn lambdas(&self) -> &[Complex64] {
        &self.lambda
    }

    /// `λ_{root|v}`.
    #[inline]
    pub fn root_product(&self, v: VertexId) -> Complex64 {
        self.root_product[v.0]
    }

    #[inline]
    pub fn log_abs_root_product(&self, v: VertexId) -> f64 {
        self.log_abs_root_product[v.0]
    }

    /// All `λ_v` are positive reals.
    pub fn is_positive(&self) -> bool {
        self.positive
    }

    /// Positive weights whose child sums equal 1 at every complete vertex
    /// (within [`DEFAULT_NORMALIZATION_TOL`]).
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Fails with `NotNormalized` unless the child-sum condition holds.
    pub fn require_normalized(&self, tree: &DirectedTree) -> Result<()> {
        if self.normalized {
            return Ok(());
        }
        if let Some(v) =
            (1..self.lambda.len()).find(|&v| !(self.lambda[v].im == 0.0 && self.lambda[v].re > 0.0))
        {
            return Err(Error::NotNormalized(VertexId(v)));
        }
        let first = self.check_normalized(tree, DEFAULT_NORMALIZATION_TOL);
        Err(Error::NotNormalized(
            first.first().map_or(VertexId::ROOT, |x| x.vertex),
        ))
    }

    pub fn require_positive(&self) -> Result<()> {
        match (1..self.lambda.len())
            .find(|&v| !(self.lambda[v].im == 0.0 && self.lambda[v].re > 0.0))
        {
            Some(v) => Err(Error::NotPositive(VertexId(v))),
            None => Ok(()),
        }
    }

    /// `λ_{u|v}`: 1 if `u = v`, otherwise the product of `λ` along the chain
    /// from the child of `u` down to `v`.
    pub fn lambda_product(
        &self,
        tree: &DirectedTree,
        u: VertexId,
        v: VertexId,
    ) -> Result<Complex64> {
        if !tree.contains(u) {
            return Err(Error::UnknownVertex(u.0));
        }
        if !tree.contains(v) {
            return Err(Error::UnknownVertex(v.0));
        }
        let mut prod = Complex64::new(1.0, 0.0);
        for x in tree.ancestors(v) {
            if x == u {
                return Ok(prod);
            }
            prod *= self.lambda[x.0];
        }
        Err(Error::NotAnAncestor(u, v))
    }

    /// Complete interior vertices whose children's weights do not sum to 1.
    pub fn check_normalized(&self, tree: &DirectedTree, tol: f64) -> Vec<NormalizationViolation> {
        tree.vertices()
            .filter(|&u| tree.is_complete(u))
            .filter_map(|u| {
                let child_sum: Complex64 = tree.children(u).iter().map(|c| self.lambda[c.0]).sum();
                ((child_sum - 1.0).norm() > tol).then_some(NormalizationViolation {
                    vertex: u,
                    child_sum,
                })
            })
            .collect()
    }
}

/// A tree together with its weights.
#[derive(Clone, Debug)]
pub struct WeightedTree {
    pub tree: DirectedTree,
    pub weights: WeightSystem,
}

impl WeightedTree {
    pub fn new(tree: DirectedTree, weights: WeightSystem) -> Result<Self> {
        if weights.betas().len() != tree.n_vertices() {
            return Err(Error::InvalidWeights(
                "weight system does not match the tree".into(),
            ));
        }
        Ok(Self { tree, weights })
    }

    pub fn from_real(tree: DirectedTree, beta: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        let weights = WeightSystem::from_real(&tree, beta, lambda)?;
        Ok(Self { tree, weights })
    }

    /// The two-branch tree with `λ = 1/2` on the root edges and 1 elsewhere,
    /// `β = 1` on branch 1 and `β_{(2,j)} = 4^{−j}` on branch 2.
    pub fn t20(depth: usize) -> Result<Self> {
        let tree = DirectedTree::build_t20(depth)?;
        let beta = tree.vertices().map(|v| t20_beta(tree.label(v))).collect();
        let lambda = uniform_split(&tree);
        Self::from_real(tree, beta, lambda)
    }

    /// κ-ary tree with `λ ≡ 1/κ` and `β_v = κ^{−|v|}`.
    pub fn kary(kappa: usize, depth: usize) -> Result<Self> {
        Self::kary_on(DirectedTree::build_kary(kappa, depth)?)
    }

    /// As [`WeightedTree::kary`] on a capped tree.
    pub fn kary_capped(kappa: usize, depth: usize, budget: usize) -> Result<Self> {
        Self::kary_on(DirectedTree::build_kary_capped(kappa, depth, budget)?)
    }

    fn kary_on(tree: DirectedTree) -> Result<Self> {
        let kappa = match tree.kind() {
            TreeKind::Kary { kappa } => kappa as f64,
            _ => unreachable!("kary_on is only called with κ-ary trees"),
        };
        let beta = tree
            .vertices()
            .map(|v| kappa.powi(-(tree.depth(v) as i32)))
            .collect();
        let lambda = vec![1.0 / kappa; tree.n_vertices()];
        Self::from_real(tree, beta, lambda)
    }

    /// The isometric unilateral shift: `λ ≡ 1`, `β ≡ 1` on a ray.
    pub fn ray(depth: usize) -> Result<Self> {
        let tree = DirectedTree::build_ray(depth)?;
        let n = tree.n_vertices();
        Self::from_real(tree, vec![1.0; n], vec![1.0; n])
    }

    pub fn from_specs(tree_spec: &TreeSpec, weight_spec: &WeightSpec) -> Result<Self> {
        let tree = DirectedTree::from_spec(tree_spec)?;
        let weights = weight_spec.build(&tree)?;
        Ok(Self { tree, weights })
    }

    pub fn n_vertices(&self) -> usize {
        self.tree.n_vertices()
    }
}

fn t20_beta(label: Label) -> f64 {
    match label {
        Label(2, j) => 4f64.powi(-(j as i32)),
        _ => 1.0,
    }
}

/// `λ_v = 1 / (number of children of pa(v))`, counting pruned children.
pub fn uniform_split(tree: &DirectedTree) -> Vec<f64> {
    tree.vertices()
        .map(|v| tree.parent(v).map_or(1.0, |p| 1.0 / tree.fanout(p) as f64))
        .collect()
}

/// Output of [`normalize_mu`]: `[μ]` (edge weights) and `⟨μ⟩` (vertex weights).
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedWeights {
    pub lambda: Vec<f64>,
    pub beta: Vec<f64>,
}

/// `[μ]_v = |μ_v|²/μ_{[v]}` and `⟨μ⟩_v = |μ_{[root|v]}/μ_{root|v}|²`, where
/// `μ_{[v]}` is the square sum of `|μ|` over the stored siblings of `v`
/// (including `v`). `mu[root]` is ignored.
pub fn normalize_mu(tree: &DirectedTree, mu: &[Complex64]) -> Result<NormalizedWeights> {
    let n = tree.n_vertices();
    if mu.len() != n {
        return Err(Error::InvalidWeights(format!(
            "expected {n} entries, got {}",
            mu.len()
        )));
    }
    if let Some(v) = (1..n).find(|&v| mu[v] == Complex64::new(0.0, 0.0)) {
        return Err(Error::ZeroWeight(VertexId(v)));
    }
    let mut lambda = vec![1.0; n];
    let mut beta = vec![1.0; n];
    // ln μ_{[root|v]} and ln |μ_{root|v}|
    let mut log_sq = vec![0.0; n];
    let mut log_mu = vec![0.0; n];
    for u in tree.bfs_order() {
        let kids = tree.children(u);
        if kids.is_empty() {
            continue;
        }
        let square_sum: f64 = kids.iter().map(|c| mu[c.0].norm_sqr()).sum();
        for &c in kids {
            lambda[c.0] = mu[c.0].norm_sqr() / square_sum;
            log_sq[c.0] = log_sq[u.0] + square_sum.ln();
            log_mu[c.0] = log_mu[u.0] + mu[c.0].norm().ln();
            beta[c.0] = (2.0 * (log_sq[c.0] - log_mu[c.0])).exp();
        }
    }
    Ok(NormalizedWeights { lambda, beta })
}

/// `μ_v = √(β_v/β_{pa(v)}) λ_v`: the weights of the unitarily equivalent
/// shift on the unweighted tree. Entry 0 (root) is set to 1.
pub fn weights_to_ones(tree: &DirectedTree, weights: &WeightSystem) -> Vec<Complex64> {
    tree.vertices()
        .map(|v| match tree.parent(v) {
            Some(p) => weights.lambda(v) * (weights.beta(v) / weights.beta(p)).sqrt(),
            None => Complex64::new(1.0, 0.0),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjugationFactors {
    /// `β_v = |μ_{root|v}/λ_{root|v}|²`.
    pub beta: Vec<f64>,
    /// `(Uf)(u) = diag[u]·f(u)` with `diag[u] = λ_{root|u}/μ_{root|u}`.
    pub diag: Vec<Complex64>,
}

/// The vertex weights and diagonal unitary `U: ℓ²(𝟙) → ℓ²(β)` with
/// `U S_μ = S_λ U`, for nonzero `μ` and positive `λ`.
pub fn unitary_conjugation_factors(
    tree: &DirectedTree,
    mu: &[Complex64],
    lambda: &[f64],
) -> Result<ConjugationFactors> {
    let n = tree.n_vertices();
    if mu.len() != n || lambda.len() != n {
        return Err(Error::InvalidWeights(format!("expected {n} entries")));
    }
    if let Some(v) = (1..n).find(|&v| mu[v] == Complex64::new(0.0, 0.0)) {
        return Err(Error::ZeroWeight(VertexId(v)));
    }
    if let Some(v) = (1..n).find(|&v| lambda[v].is_nan() || lambda[v] <= 0.0) {
        return Err(Error::NotPositive(VertexId(v)));
    }
    let mut diag = vec![Complex64::new(1.0, 0.0); n];
    for v in tree.bfs_order().skip(1) {
        let p = tree.parent(v).expect("non-root vertex has a parent");
        diag[v.0] = diag[p.0] * lambda[v.0] / mu[v.0];
    }
    let beta = diag.iter().map(|d| 1.0 / d.norm_sqr()).collect();
    Ok(ConjugationFactors { beta, diag })
}

/// A scalar in weight JSON: a real number, `[re, im]`, or a named family.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum WeightExpr {
    Real(f64),
    Complex([f64; 2]),
    Family(String),
}

impl<'de> Deserialize<'de> for WeightExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match (&v, json::scalar(&v)) {
            (serde_json::Value::String(s), _) => Ok(WeightExpr::Family(s.clone())),
            (serde_json::Value::Number(_), Some(z)) => z.map(|[re, _]| WeightExpr::Real(re)),
            (_, Some(z)) => z.map(WeightExpr::Complex),
            _ => Err(serde::de::Error::custom(format!(
                "expected a number, [re, im] or a family name, found {v}"
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<WeightExpr>,
    /// Base for the `kappa_pow` family; defaults to the tree's arity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Overrides keyed by vertex id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_vertex: BTreeMap<String, WeightExpr>,
}

/// Weight JSON: `{"beta": {...}, "lambda": {...}}`.
///
/// `beta` families: `one`, `kappa_pow` (`κ^{−|v|}`), `four_pow_branch2`
/// (`4^{−j}` on branch 2 of the two-branch tree, 1 elsewhere).
/// `lambda` families: `one`, `uniform_split` (`1/card Chi(pa v)`),
/// `kappa_inv` (`1/κ`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    #[serde(default)]
    pub beta: FieldSpec,
    #[serde(default)]
    pub lambda: FieldSpec,
}

impl WeightSpec {
    /// Default weights for a tree family: the κ-ary and two-branch families
    /// get their standard normalized weights, explicit trees get
    /// `uniform_split` with `β ≡ 1`.
    pub fn default_for(tree: &DirectedTree) -> Self {
        let family = |s: &str| Some(WeightExpr::Family(s.into()));
        let (beta, lambda) = match tree.kind() {
            TreeKind::Kary { .. } => (family("kappa_pow"), family("kappa_inv")),
            TreeKind::T20 => (family("four_pow_branch2"), family("uniform_split")),
            TreeKind::Explicit => (family("one"), family("uniform_split")),
        };
        Self {
            beta: FieldSpec {
                default: beta,
                ..Default::default()
            },
            lambda: FieldSpec {
                default: lambda,
                ..Default::default()
            },
        }
    }

    pub fn build(&self, tree: &DirectedTree) -> Result<WeightSystem> {
        let beta = self.beta.resolve(tree, FieldRole::Beta)?;
        if let Some(v) = beta.iter().position(|b| b.im != 0.0) {
            return Err(Error::InvalidWeights(format!(
                "beta at vertex {v} must be real"
            )));
        }
        let lambda = self.lambda.resolve(tree, FieldRole::Lambda)?;
        WeightSystem::new(tree, beta.into_iter().map(|b| b.re).collect(), lambda)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum FieldRole {
    Beta,
    Lambda,
}

impl FieldSpec {
    fn resolve(&self, tree: &DirectedTree, role: FieldRole) -> Result<Vec<Complex64>> {
        let tree_kappa = match tree.kind() {
            TreeKind::Kary { kappa } => Some(kappa as f64),
            _ => None,
        };
        let kappa = self.kappa.or(tree_kappa);
        let need_kappa =
            || kappa.ok_or_else(|| Error::InvalidWeights("family needs \"kappa\"".into()));
        let default = self.default.clone().unwrap_or(WeightExpr::Family(
            match role {
                FieldRole::Beta => "one",
                FieldRole::Lambda => "uniform_split",
            }
            .into(),
        ));
        let split = uniform_split(tree);
        let mut values = Vec::with_capacity(tree.n_vertices());
        for v in tree.vertices() {
            let x = match &default {
                WeightExpr::Real(r) => Complex64::new(*r, 0.0),
                WeightExpr::Complex([re, im]) => Complex64::new(*re, *im),
                WeightExpr::Family(name) => match (role, name.as_str()) {
                    (_, "one") => Complex64::new(1.0, 0.0),
                    (FieldRole::Beta, "kappa_pow") => {
                        Complex64::new(need_kappa()?.powi(-(tree.depth(v) as i32)), 0.0)
                    }
                    (FieldRole::Beta, "four_pow_branch2") => {
                        if tree.kind() != TreeKind::T20 {
                            return Err(Error::InvalidWeights(
                                "four_pow_branch2 needs the t20 tree".into(),
                            ));
                        }
                        Complex64::new(t20_beta(tree.label(v)), 0.0)
                    }
                    (FieldRole::Lambda, "uniform_split" | "inverse_fanout") => {
                        Complex64::new(split[v.0], 0.0)
                    }
                    (FieldRole::Lambda, "kappa_inv") => Complex64::new(1.0 / need_kappa()?, 0.0),
                    (_, other) => {
                        return Err(Error::InvalidWeights(format!(
                            "unknown weight family {other:?}"
                        )))
                    }
                },
            };
            values.push(x);
        }
        for (key, expr) in &self.per_vertex {
            let v: usize = key.trim().parse().map_err(|_| {
                Error::InvalidWeights(format!("per_vertex key {key:?} is not a vertex id"))
            })?;
            if v >= values.len() {
                return Err(Error::UnknownVertex(v));
            }
            values[v] = match expr {
                WeightExpr::Real(r) => Complex64::new(*r, 0.0),
                WeightExpr::Complex([re, im]) => Complex64::new(*re, *im),
                WeightExpr::Family(f) => {
                    return Err(Error::InvalidWeights(format!(
                        "per_vertex value {f:?} must be numeric"
                    )))
                }
            };
        }
        Ok(values)
    }
}
