//! Bounded point evaluations, evaluation kernels, eigen-identities for the
//! adjoint, path radii and the assembled spectral report.
//!
//! Limits over depth are replaced by extrema over the tail window
//! `[⌈N/2⌉, N]` of the stored horizon `N`. Each such estimate is published
//! together with the spread of the window and the value the same procedure
//! gives at half the horizon.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::multiplier::{gamma_apply, Symbol};
use crate::oracle::materialize_multiplier;
use crate::shift::{
    apply_adjoint, power_norm, spectral_radius_estimate, GelfandEstimate, TreeVector,
};
use crate::sum::{log_sum_exp, NeumaierSum};
use crate::tree::{DirectedTree, Path, VertexId};
use crate::weights::{WeightSystem, WeightedTree};
use crate::TruncationDiagnostic;

/// Relative guard band around the bpe radius.
pub const DEFAULT_GUARD: f64 = 1e-3;
/// Relative window spread above which an estimate is marked unstable.
pub const UNSTABLE_SPREAD: f64 = 1e-3;
pub const DEFAULT_PATH_BUDGET: usize = 1024;

/// `[⌈n/2⌉, n]`, starting at 1.
fn tail_window(n: usize) -> std::ops::RangeInclusive<usize> {
    n.div_ceil(2).max(1)..=n
}

fn relative_spread(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 || a == b {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BpeProfile {
    /// `c_k = Σ_{|v|=k} 1/β_v`.
    pub c: Vec<f64>,
    pub log_c: Vec<f64>,
    /// `1 / max_{k ∈ [⌈N/2⌉, N]} c_k^{1/(2k)}`.
    pub radius_estimate: f64,
    /// The estimate over the lower and upper halves of the tail window.
    pub window_low: f64,
    pub window_high: f64,
    pub window_spread: f64,
    pub unstable: bool,
    /// `‖S‖` on the stored tree, recorded for normalized systems.
    pub norm: Option<f64>,
    pub diagnostic: TruncationDiagnostic,
}

/// Radius `1/max_{k∈window} exp(log_x[k]/(2k))`.
fn window_radius(log_x: &[f64], window: std::ops::RangeInclusive<usize>) -> f64 {
    let m = window
        .map(|k| log_x[k] / (2 * k) as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    (-m).exp()
}

fn split_window(
    n: usize,
) -> (
    std::ops::RangeInclusive<usize>,
    std::ops::RangeInclusive<usize>,
) {
    let w = tail_window(n);
    let (lo, hi) = (*w.start(), *w.end());
    let mid = lo + (hi - lo) / 2;
    (lo..=mid, mid.max(lo)..=hi)
}

pub fn bpe_profile(wt: &WeightedTree) -> Result<BpeProfile> {
    let (tree, w) = (&wt.tree, &wt.weights);
    if let Some(v) = tree.first_pruned() {
        return Err(Error::IncompleteSlices(v));
    }
    let n = tree.horizon();
    if n == 0 {
        return Err(Error::HorizonTooShallow { needed: 1 });
    }
    // Direct compensated sums, with the log domain as a fallback when a
    // slice sum leaves the floating-point range.
    let (c, log_c): (Vec<f64>, Vec<f64>) = tree
        .levels()
        .par_iter()
        .map(|level| {
            let direct = level
                .iter()
                .map(|&v| 1.0 / w.beta(v))
                .collect::<NeumaierSum>()
                .total();
            if direct.is_finite() && direct > 0.0 {
                (direct, direct.ln())
            } else {
                let log = log_sum_exp(level.iter().map(|&v| -w.beta(v).ln()));
                (log.exp(), log)
            }
        })
        .unzip();
    let radius_estimate = window_radius(&log_c, tail_window(n));
    let (lo, hi) = split_window(n);
    let (window_low, window_high) = (window_radius(&log_c, lo), window_radius(&log_c, hi));
    let window_spread = relative_spread(window_low, window_high);
    let half = if n >= 2 {
        window_radius(&log_c, tail_window(n / 2))
    } else {
        f64::NAN
    };
    let norm = if w.is_normalized() {
        power_norm(wt, 1).ok().map(|p| p.value)
    } else {
        None
    };
    Ok(BpeProfile {
        c,
        log_c,
        radius_estimate,
        window_low,
        window_high,
        window_spread,
        unstable: window_spread > UNSTABLE_SPREAD,
        norm,
        diagnostic: TruncationDiagnostic::new(radius_estimate, half),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Inside,
    Outside,
    BoundaryIndeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BpeVerdict {
    pub w: Complex64,
    pub modulus: f64,
    pub radius: f64,
    pub verdict: Verdict,
    pub reason: &'static str,
    /// `ln Σ_{k ≤ m} c_k |w|^{2k}` at `m = N/2` and `m = N`.
    pub log_partial_sum_half: f64,
    pub log_partial_sum_full: f64,
}

/// Whether `w` is a bounded point evaluation, judged from the slice sums.
///
/// Moduli within the relative guard band of the radius are reported as
/// indeterminate, except that for normalized systems `|w| ≥ ‖S‖` is always
/// outside.
pub fn is_bpe(profile: &BpeProfile, w: Complex64, guard: f64) -> BpeVerdict {
    let modulus = w.norm();
    let radius = profile.radius_estimate;
    let log_term = |k: usize| {
        if k == 0 {
            profile.log_c[0]
        } else {
            profile.log_c[k] + 2.0 * k as f64 * modulus.ln()
        }
    };
    let n = profile.log_c.len() - 1;
    let partial = |m: usize| log_sum_exp((0..=m).map(log_term));
    let (verdict, reason) = if modulus == 0.0 {
        (Verdict::Inside, "single-term series")
    } else if profile.norm.is_some_and(|s| modulus >= s * (1.0 - 1e-14)) {
        (
            Verdict::Outside,
            "modulus at least the norm of a normalized shift",
        )
    } else if (modulus / radius - 1.0).abs() <= guard {
        (
            Verdict::BoundaryIndeterminate,
            "within guard band of the radius",
        )
    } else if modulus < radius {
        (Verdict::Inside, "slice root test")
    } else {
        (Verdict::Outside, "slice root test")
    };
    BpeVerdict {
        w,
        modulus,
        radius,
        verdict,
        reason,
        log_partial_sum_half: partial(n / 2),
        log_partial_sum_full: partial(n),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationKernel {
    pub w: Complex64,
    /// `k_w(v) = conj(w)^{|v|}/β_v`, indexed by vertex id.
    pub values: Vec<Complex64>,
}

impl EvaluationKernel {
    pub fn to_vector(&self) -> TreeVector {
        TreeVector::from_dense(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// `k_w` on every stored vertex, with `0⁰ = 1`.
pub fn kernel(wt: &WeightedTree, w: Complex64) -> EvaluationKernel {
    let (tree, ws) = (&wt.tree, &wt.weights);
    let wc = w.conj();
    let values = tree
        .vertices()
        .map(|v| wc.powu(tree.depth(v) as u32) / ws.beta(v))
        .collect();
    EvaluationKernel { w, values }
}

/// `V_w(f) = Σ f(v) w^{|v|}`.
pub fn point_evaluation(tree: &DirectedTree, f: &TreeVector, w: Complex64) -> Complex64 {
    let (mut re, mut im) = (NeumaierSum::new(), NeumaierSum::new());
    for (v, x) in f.iter() {
        let t = x * w.powu(tree.depth(v) as u32);
        re.add(t.re);
        im.add(t.im);
    }
    Complex64::new(re.total(), im.total())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenResidual {
    /// `max_u |r(u)|·√β_u`: the residual measured in the orthonormal basis.
    pub scaled: f64,
    /// `max_u |r(u)|`.
    pub absolute: f64,
    /// `max_v |k_w(v)|`.
    pub kernel_scale: f64,
    pub vertices_checked: usize,
}

impl EigenResidual {
    /// Both residual forms within `tol` of their natural scale.
    pub fn within(&self, tol: f64) -> bool {
        self.scaled <= tol && self.absolute <= tol * (1.0 + self.kernel_scale)
    }
}

fn eigen_residual(
    wt: &WeightedTree,
    lhs: &TreeVector,
    k: &EvaluationKernel,
    eigenvalue: Complex64,
    vertices: impl Iterator<Item = VertexId>,
) -> EigenResidual {
    let mut scaled: f64 = 0.0;
    let mut absolute: f64 = 0.0;
    let mut count = 0;
    for u in vertices {
        let r = (lhs.get(u) - eigenvalue * k.values[u.0]).norm();
        absolute = absolute.max(r);
        scaled = scaled.max(r * wt.weights.beta(u).sqrt());
        count += 1;
    }
    EigenResidual {
        scaled,
        absolute,
        kernel_scale: k.max_abs(),
        vertices_checked: count,
    }
}

/// Residual of `S* k_w = conj(w) k_w` over complete vertices of depth at
/// most `interior_depth`.
pub fn adjoint_eigen_residual(
    wt: &WeightedTree,
    w: Complex64,
    interior_depth: usize,
) -> Result<EigenResidual> {
    wt.weights.require_normalized(&wt.tree)?;
    let k = kernel(wt, w);
    let lhs = apply_adjoint(wt, &k.to_vector()).value;
    let tree = &wt.tree;
    let vertices = tree
        .vertices()
        .filter(|&u| tree.is_complete(u) && tree.depth(u) <= interior_depth);
    Ok(eigen_residual(wt, &lhs, &k, w.conj(), vertices))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntertwiningResidual {
    /// `|V_w(Γ_φ f) − φ(w) V_w(f)|`.
    pub residual: f64,
    /// `Σ_k |φ̂(k)||w|^k · Σ_v |f(v)||w|^{|v|}`, bounding both sides.
    pub scale: f64,
    pub relative: f64,
}

pub fn intertwining_residual(
    wt: &WeightedTree,
    phi: &Symbol,
    f: &TreeVector,
    w: Complex64,
) -> Result<IntertwiningResidual> {
    wt.weights.require_normalized(&wt.tree)?;
    let g = gamma_apply(wt, phi, f);
    if g.truncation_loss {
        return Err(Error::TruncationLoss);
    }
    let tree = &wt.tree;
    let lhs = point_evaluation(tree, &g.value, w);
    let rhs = phi.eval(w)? * point_evaluation(tree, f, w);
    let r = w.norm();
    let bound = phi
        .support_bound()
        .expect("finite support when nothing was truncated");
    let sym_scale: f64 = (0..=bound)
        .map(|k| phi.coeff(k).norm() * r.powi(k as i32))
        .sum();
    let f_scale: f64 = f
        .iter()
        .map(|(v, x)| x.norm() * r.powi(tree.depth(v) as i32))
        .sum();
    let residual = (lhs - rhs).norm();
    let scale = sym_scale * f_scale;
    Ok(IntertwiningResidual {
        residual,
        scale,
        relative: residual / (1.0 + scale),
    })
}

/// Residual of `M_φ* k_w = conj(φ(w)) k_w`, applying `M_φ*` through the dense
/// oracle, over vertices of depth at most `interior_depth` whose
/// descendants up to the degree of `φ` are stored.
pub fn multiplier_adjoint_eigen_residual(
    wt: &WeightedTree,
    phi: &Symbol,
    w: Complex64,
    interior_depth: usize,
) -> Result<EigenResidual> {
    wt.weights.require_normalized(&wt.tree)?;
    let op = materialize_multiplier(wt, phi)?;
    let degree = phi
        .support_bound()
        .expect("checked by materialize_multiplier");
    let k = kernel(wt, w);
    let lhs = op.adjoint_apply(&k.to_vector());
    let tree = &wt.tree;
    let vertices = tree
        .vertices()
        .filter(|&u| tree.complete_height(u) >= degree && tree.depth(u) <= interior_depth);
    Ok(eigen_residual(wt, &lhs, &k, phi.eval(w)?.conj(), vertices))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Constant,
    Nonincreasing,
    Nondecreasing,
    Mixed,
}

fn trend(xs: &[f64]) -> Trend {
    let tol = |a: f64, b: f64| 1e-14 * a.abs().max(b.abs());
    let up = xs.windows(2).all(|p| p[1] >= p[0] - tol(p[0], p[1]));
    let down = xs.windows(2).all(|p| p[1] <= p[0] + tol(p[0], p[1]));
    match (up, down) {
        (true, true) => Trend::Constant,
        (false, true) => Trend::Nonincreasing,
        (true, false) => Trend::Nondecreasing,
        (false, false) => Trend::Mixed,
    }
}

/// `ln(√β_v |λ_{root|v}|)`.
fn log_r2_term(w: &WeightSystem, v: VertexId) -> f64 {
    0.5 * w.beta(v).ln() + w.log_abs_root_product(v)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathRadius {
    /// Final vertex of the path.
    pub end: VertexId,
    /// `a_k = (√β_{v_k} |λ_{root|v_k}|)^{1/k}` for `k = 1..=L`.
    pub samples: Vec<f64>,
    /// Minimum of the samples over the tail window.
    pub r2_estimate: f64,
    pub window_spread: f64,
    pub trend: Trend,
    pub diagnostic: TruncationDiagnostic,
}

fn window_min(samples: &[f64], window: std::ops::RangeInclusive<usize>) -> f64 {
    window.map(|k| samples[k - 1]).fold(f64::INFINITY, f64::min)
}

fn window_max(samples: &[f64], window: std::ops::RangeInclusive<usize>) -> f64 {
    window
        .map(|k| samples[k - 1])
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn path_r2(wt: &WeightedTree, path: &Path) -> Result<PathRadius> {
    let len = path.len().saturating_sub(1);
    if len == 0 {
        return Err(Error::HorizonTooShallow { needed: 1 });
    }
    let samples: Vec<f64> = (1..=len)
        .map(|k| (log_r2_term(&wt.weights, path.vertices[k]) / k as f64).exp())
        .collect();
    let window = tail_window(len);
    let r2_estimate = window_min(&samples, window.clone());
    let window_spread = relative_spread(window_max(&samples, window.clone()), r2_estimate);
    let half = if len >= 2 {
        window_min(&samples, tail_window(len / 2))
    } else {
        f64::NAN
    };
    let tail: Vec<f64> = window.map(|k| samples[k - 1]).collect();
    Ok(PathRadius {
        end: path.end(),
        trend: trend(&tail),
        r2_estimate,
        window_spread,
        diagnostic: TruncationDiagnostic::new(r2_estimate, half),
        samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct R2Plus {
    /// Largest path estimate among enumerated paths.
    pub path_max: f64,
    pub paths_enumerated: usize,
    pub paths_complete: bool,
    /// Largest tail-window minimum along the ancestor chains of frontier
    /// vertices.
    pub frontier_proxy: f64,
    pub frontier_argmax: VertexId,
    pub estimate: f64,
    pub diagnostic: TruncationDiagnostic,
}

/// `max_{v ∈ frontier} min_{k ∈ window} a_k` along the chain root → v.
fn frontier_proxy(wt: &WeightedTree, horizon: usize) -> (f64, VertexId) {
    let tree = &wt.tree;
    let window = tail_window(horizon);
    let mut chain_min = vec![f64::INFINITY; tree.n_vertices()];
    let mut best = (f64::NEG_INFINITY, VertexId::ROOT);
    for v in tree.bfs_order() {
        let d = tree.depth(v);
        if d > horizon {
            break;
        }
        let inherited = tree.parent(v).map_or(f64::INFINITY, |p| chain_min[p.0]);
        chain_min[v.0] = if window.contains(&d) {
            inherited.min((log_r2_term(&wt.weights, v) / d as f64).exp())
        } else {
            inherited
        };
        if d == horizon && chain_min[v.0] > best.0 {
            best = (chain_min[v.0], v);
        }
    }
    best
}

pub fn r2_plus(wt: &WeightedTree, path_budget: usize) -> Result<R2Plus> {
    let n = wt.tree.horizon();
    if n == 0 {
        return Err(Error::HorizonTooShallow { needed: 1 });
    }
    let paths = wt.tree.enumerate_paths(path_budget);
    let radii: Vec<f64> = paths
        .paths
        .par_iter()
        .map(|p| path_r2(wt, p).map(|r| r.r2_estimate))
        .collect::<Result<_>>()?;
    let path_max = radii.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (frontier_proxy, frontier_argmax) = frontier_proxy(wt, n);
    let estimate = path_max.max(frontier_proxy);
    let half = if n >= 2 {
        frontier_proxy_at(wt, n / 2)
    } else {
        f64::NAN
    };
    Ok(R2Plus {
        path_max,
        paths_enumerated: radii.len(),
        paths_complete: paths.complete,
        frontier_proxy,
        frontier_argmax,
        estimate,
        diagnostic: TruncationDiagnostic::new(estimate, half),
    })
}

fn frontier_proxy_at(wt: &WeightedTree, horizon: usize) -> f64 {
    frontier_proxy(wt, horizon).0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathBpe {
    pub end: VertexId,
    /// `1 / max_{k ∈ window} (1/β_{v_k})^{1/(2k)}`.
    pub radius: f64,
    pub window_spread: f64,
    pub diagnostic: TruncationDiagnostic,
}

pub fn path_bpe_radius(wt: &WeightedTree, path: &Path) -> Result<PathBpe> {
    let len = path.len().saturating_sub(1);
    if len == 0 {
        return Err(Error::HorizonTooShallow { needed: 1 });
    }
    let log_x: Vec<f64> = path
        .vertices
        .iter()
        .map(|&v| -wt.weights.beta(v).ln())
        .collect();
    let radius = window_radius(&log_x, tail_window(len));
    let (lo, hi) = split_window(len);
    let window_spread = relative_spread(window_radius(&log_x, lo), window_radius(&log_x, hi));
    let half = if len >= 2 {
        window_radius(&log_x, tail_window(len / 2))
    } else {
        f64::NAN
    };
    Ok(PathBpe {
        end: path.end(),
        radius,
        window_spread,
        diagnostic: TruncationDiagnostic::new(radius, half),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceMargin {
    pub k: usize,
    /// `‖S‖^{2k+2} c_{k+1} / (‖S‖^{2k} c_k) − 1`.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryExclusion {
    pub norm: f64,
    pub slices: Vec<SliceMargin>,
    pub min_margin: f64,
}

impl BoundaryExclusion {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_margin >= -tol
    }
}

/// For normalized systems `‖S‖^{2k+2} c_{k+1} ≥ ‖S‖^{2k} c_k` at every
/// depth, so the series at `|w| = ‖S‖` cannot converge.
pub fn boundary_exclusion_check(wt: &WeightedTree) -> Result<BoundaryExclusion> {
    wt.weights.require_normalized(&wt.tree)?;
    let profile = bpe_profile(wt)?;
    let norm = power_norm(wt, 1)?.value;
    let log_s2 = 2.0 * norm.ln();
    let slices: Vec<SliceMargin> = profile
        .log_c
        .windows(2)
        .enumerate()
        .map(|(k, p)| SliceMargin {
            k,
            margin: (log_s2 + p[1] - p[0]).exp_m1(),
        })
        .collect();
    let min_margin = slices
        .iter()
        .map(|s| s.margin)
        .fold(f64::INFINITY, f64::min);
    Ok(BoundaryExclusion {
        norm,
        slices,
        min_margin,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InclusionStatus {
    /// Checked numerically on the stored tree.
    Verified,
    /// A statement about the untruncated operator, reported with the radius
    /// computed here but not checked.
    Asserted,
    /// A numeric check was attempted and failed.
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Inclusion {
    pub kind: &'static str,
    pub statement: String,
    pub radius: f64,
    pub status: InclusionStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub diagnostic: TruncationDiagnostic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BpeSummary {
    pub value: f64,
    pub window_spread: f64,
    pub unstable: bool,
    pub diagnostic: TruncationDiagnostic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathSummary {
    pub end: VertexId,
    pub end_label: String,
    pub r2: f64,
    pub r2_diagnostic: TruncationDiagnostic,
    pub bpe_radius: f64,
    pub bpe_diagnostic: TruncationDiagnostic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportDiagnostics {
    pub n_vertices: usize,
    pub horizon: usize,
    pub normalized: bool,
    pub full_slices: bool,
    pub branching_vertices: usize,
    pub deepest_branching: Option<usize>,
    pub paths_reported: usize,
    pub paths_complete: bool,
    pub eigen_witnesses: usize,
    pub max_eigen_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralReport {
    pub norm: Estimate,
    pub gelfand_seq: GelfandEstimate,
    pub bpe_radius: Option<BpeSummary>,
    pub r2_paths: Vec<PathSummary>,
    pub r2_plus: R2Plus,
    pub inclusions: Vec<Inclusion>,
    pub diagnostics: ReportDiagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportOptions {
    pub kmax: usize,
    pub path_budget: usize,
    /// Paths listed individually in the report.
    pub paths_reported: usize,
    pub tol: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            kmax: 10,
            path_budget: DEFAULT_PATH_BUDGET,
            paths_reported: 16,
            tol: 1e-10,
        }
    }
}

pub fn spectral_report(wt: &WeightedTree, opts: &ReportOptions) -> Result<SpectralReport> {
    let tree = &wt.tree;
    let n = tree.horizon();
    let normalized = wt.weights.is_normalized();
    let norm = power_norm(wt, 1)?;
    let kmax = opts.kmax.clamp(1, n.max(1));
    let gelfand_seq = spectral_radius_estimate(wt, kmax)?;
    let profile = if tree.has_full_slices() {
        Some(bpe_profile(wt)?)
    } else {
        None
    };
    let r2_plus = r2_plus(wt, opts.path_budget)?;
    let enumeration = tree.enumerate_paths(opts.paths_reported);
    let r2_paths = enumeration
        .paths
        .iter()
        .map(|p| {
            let r2 = path_r2(wt, p)?;
            let bpe = path_bpe_radius(wt, p)?;
            Ok(PathSummary {
                end: p.end(),
                end_label: tree.label(p.end()).to_string(),
                r2: r2.r2_estimate,
                r2_diagnostic: r2.diagnostic,
                bpe_radius: bpe.radius,
                bpe_diagnostic: bpe.diagnostic,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let branching = tree.branching_vertices();
    let deepest_branching = branching.iter().map(|&v| tree.depth(v)).max();
    let mut inclusions = Vec::new();
    let mut eigen_witnesses = 0;
    let mut max_eigen_residual: f64 = 0.0;
    inclusions.push(Inclusion {
        kind: "point-spectrum-in-norm-disc",
        statement: "σ_p(S*) ⊆ closed disc of radius ‖S‖".into(),
        radius: norm.value,
        status: InclusionStatus::Asserted,
    });
    if let (Some(p), true) = (&profile, normalized) {
        // Kernels inside the disc are eigenvectors of the adjoint on the
        // stored tree; a few radii and phases serve as witnesses.
        let mut ok = true;
        for (i, frac) in [0.0, 0.3, 0.6, 0.9].into_iter().enumerate() {
            let w = Complex64::from_polar(frac * p.radius_estimate, 0.7 * i as f64);
            let r = adjoint_eigen_residual(wt, w, n.saturating_sub(1))?;
            eigen_witnesses += 1;
            max_eigen_residual = max_eigen_residual.max(r.scaled);
            ok &= r.within(opts.tol);
        }
        inclusions.push(Inclusion {
            kind: "kernel-eigenvectors",
            statement: "S* k_w = conj(w) k_w for sampled |w| ≤ 0.9·bpe radius".into(),
            radius: 0.9 * p.radius_estimate,
            status: if ok {
                InclusionStatus::Verified
            } else {
                InclusionStatus::Failed
            },
        });
        inclusions.push(Inclusion {
            kind: "bpe-in-point-spectrum",
            statement: "conj(bpe disc) ⊆ σ_p(S*)".into(),
            radius: p.radius_estimate,
            status: InclusionStatus::Asserted,
        });
        let excl = boundary_exclusion_check(wt)?;
        inclusions.push(Inclusion {
            kind: "norm-circle-outside-bpe",
            statement: "slice sums are non-decreasing at |w| = ‖S‖, so |w| = ‖S‖ is not a bpe"
                .into(),
            radius: norm.value,
            status: if excl.holds(1e-12) {
                InclusionStatus::Verified
            } else {
                InclusionStatus::Failed
            },
        });
    }
    if normalized {
        inclusions.push(Inclusion {
            kind: "r2plus-disc-in-point-spectrum",
            statement: "open disc of radius r₂⁺ ⊆ σ_p(S*)".into(),
            radius: r2_plus.estimate,
            status: InclusionStatus::Asserted,
        });
        if deepest_branching.is_none_or(|d| 2 * d < n) {
            inclusions.push(Inclusion {
                kind: "point-spectrum-in-closed-r2plus-disc",
                statement: "finitely many branching vertices: σ_p(S*) ⊆ closed disc of radius r₂⁺"
                    .into(),
                radius: r2_plus.estimate,
                status: InclusionStatus::Asserted,
            });
        }
    }
    if let Some(p) = &profile {
        if let Some(max_path) = r2_paths.iter().map(|s| s.bpe_radius).reduce(f64::max) {
            let complete = enumeration.complete;
            inclusions.push(Inclusion {
                kind: "bpe-in-union-of-path-bpe",
                statement: "bpe(T) ⊆ ⋃_P bpe(P) over the listed paths".into(),
                radius: max_path,
                status: if !complete {
                    InclusionStatus::Asserted
                } else if p.radius_estimate <= max_path * (1.0 + 1e-12) {
                    InclusionStatus::Verified
                } else {
                    InclusionStatus::Failed
                },
            });
        }
    }

    Ok(SpectralReport {
        norm: Estimate {
            value: norm.value,
            diagnostic: norm.diagnostic,
        },
        gelfand_seq,
        bpe_radius: profile.as_ref().map(|p| BpeSummary {
            value: p.radius_estimate,
            window_spread: p.window_spread,
            unstable: p.unstable,
            diagnostic: p.diagnostic,
        }),
        diagnostics: ReportDiagnostics {
            n_vertices: tree.n_vertices(),
            horizon: n,
            normalized,
            full_slices: profile.is_some(),
            branching_vertices: branching.len(),
            deepest_branching,
            paths_reported: r2_paths.len(),
            paths_complete: enumeration.complete,
            eigen_witnesses,
            max_eigen_residual,
        },
        r2_paths,
        r2_plus,
        inclusions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::apply_shift;
    use crate::tree::Label;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn slice_profiles() {
        let p = bpe_profile(&WeightedTree::t20(60).unwrap()).unwrap();
        assert_eq!(p.c[0], 1.0);
        for k in 1..=20 {
            assert!((p.c[k] / (1.0 + 4f64.powi(k as i32)) - 1.0).abs() < 1e-14);
        }
        assert!((p.radius_estimate - 0.5).abs() < 1e-15);
        assert!(p.window_spread < 1e-9 && !p.unstable);

        let p = bpe_profile(&WeightedTree::kary(3, 8).unwrap()).unwrap();
        assert!((p.radius_estimate - 1.0 / 3.0).abs() < 1e-14);
        let p = bpe_profile(&WeightedTree::ray(10).unwrap()).unwrap();
        assert!(p.c.iter().all(|&x| x == 1.0));
        assert_eq!(p.radius_estimate, 1.0);

        let capped = WeightedTree::kary_capped(4, 30, 2000).unwrap();
        assert!(matches!(
            bpe_profile(&capped),
            Err(Error::IncompleteSlices(_))
        ));
    }

    #[test]
    fn verdicts() {
        let p = bpe_profile(&WeightedTree::t20(60).unwrap()).unwrap();
        assert_eq!(is_bpe(&p, c(0.0), DEFAULT_GUARD).verdict, Verdict::Inside);
        assert_eq!(is_bpe(&p, c(0.49), DEFAULT_GUARD).verdict, Verdict::Inside);
        assert_eq!(is_bpe(&p, c(0.51), DEFAULT_GUARD).verdict, Verdict::Outside);
        assert_eq!(
            is_bpe(&p, c(0.5), DEFAULT_GUARD).verdict,
            Verdict::BoundaryIndeterminate
        );
        assert_eq!(is_bpe(&p, c(1.0), DEFAULT_GUARD).verdict, Verdict::Outside);
        let p = bpe_profile(&WeightedTree::kary(3, 8).unwrap()).unwrap();
        let v = is_bpe(&p, Complex64::from_polar(1.0 / 3.0, 1.0), DEFAULT_GUARD);
        assert_eq!(v.verdict, Verdict::Outside);
    }

    #[test]
    fn kernels() {
        let wt = WeightedTree::t20(6).unwrap();
        let k = kernel(&wt, c(0.0));
        assert_eq!(k.values[0], c(1.0));
        assert!(k.values[1..].iter().all(|z| *z == c(0.0)));
        let k = kernel(&wt, c(0.3));
        let v = wt.tree.find_label(Label(2, 2)).unwrap();
        assert!((k.values[v.0] - c(0.09 * 16.0)).norm() < 1e-14);
        let w = Complex64::new(0.2, 0.35);
        let k = kernel(&wt, w).to_vector();
        for u in wt.tree.vertices() {
            let pairing = TreeVector::basis(u).inner(&k, &wt.weights);
            assert!((pairing - w.powu(wt.tree.depth(u) as u32)).norm() < 1e-15);
        }
    }

    #[test]
    fn point_evaluations() {
        let wt = WeightedTree::t20(6).unwrap();
        let t = &wt.tree;
        let u = t.find_label(Label(1, 3)).unwrap();
        let w = Complex64::new(0.3, -0.1);
        assert_eq!(point_evaluation(t, &TreeVector::basis(u), w), w.powu(3));
        let f = TreeVector::basis(VertexId::ROOT)
            .plus(&TreeVector::basis(t.find_label(Label(1, 1)).unwrap()));
        assert!((point_evaluation(t, &f, c(0.2)) - c(1.2)).norm() < 1e-15);
        let sf = apply_shift(&wt, &f).value;
        assert!((point_evaluation(t, &sf, w) - w * point_evaluation(t, &f, w)).norm() < 1e-15);
    }

    #[test]
    fn adjoint_eigen_examples() {
        let wt = WeightedTree::t20(30).unwrap();
        assert_eq!(
            adjoint_eigen_residual(&wt, c(0.0), 29).unwrap().absolute,
            0.0
        );
        let r = adjoint_eigen_residual(&wt, c(0.4), 28).unwrap();
        assert!(r.scaled <= 1e-12 && r.within(1e-12), "{r:?}");
        let wt = WeightedTree::kary(3, 7).unwrap();
        let r = adjoint_eigen_residual(&wt, c(0.3), 6).unwrap();
        assert!(r.absolute <= 1e-12);
        // S* f_w = (w/κ) f_w with f_w(v) = w^{|v|}, through k_{conj(w)/κ} = f_w.
        let w = Complex64::from_polar(0.9, 2.0);
        let r = adjoint_eigen_residual(&wt, w.conj() / 3.0, 6).unwrap();
        assert!(r.absolute <= 1e-12);

        let tree = crate::DirectedTree::build_ray(5).unwrap();
        let bad = WeightedTree::from_real(tree, vec![1.0; 6], vec![0.9; 6]).unwrap();
        assert_eq!(
            adjoint_eigen_residual(&bad, c(0.1), 4),
            Err(Error::NotNormalized(VertexId::ROOT))
        );
    }

    #[test]
    fn intertwining_examples() {
        let wt = WeightedTree::t20(20).unwrap();
        let mut f = TreeVector::new();
        for v in wt.tree.vertices().filter(|&v| wt.tree.depth(v) <= 5) {
            f.set(v, Complex64::new((v.0 as f64).sin(), 0.5));
        }
        let w = c(0.25);
        assert_eq!(
            intertwining_residual(&wt, &Symbol::unit(), &f, w)
                .unwrap()
                .residual,
            0.0
        );
        assert!(
            intertwining_residual(&wt, &Symbol::Indicator(1), &f, w)
                .unwrap()
                .residual
                < 1e-15
        );
        let phi = Symbol::Finite(vec![
            c(1.0),
            Complex64::new(-0.5, 0.2),
            c(2.0),
            c(0.0),
            c(-1.5),
        ]);
        assert!(intertwining_residual(&wt, &phi, &f, w).unwrap().residual < 1e-11);
        let deep = TreeVector::basis(wt.tree.frontier()[0]);
        assert_eq!(
            intertwining_residual(&wt, &phi, &deep, w),
            Err(Error::TruncationLoss)
        );
    }

    #[test]
    fn multiplier_eigen_examples() {
        let wt = WeightedTree::kary(2, 8).unwrap();
        let w = c(0.2);
        assert_eq!(
            multiplier_adjoint_eigen_residual(&wt, &Symbol::unit(), w, 7)
                .unwrap()
                .absolute,
            0.0
        );
        let a = multiplier_adjoint_eigen_residual(&wt, &Symbol::Indicator(1), w, 7).unwrap();
        let b = adjoint_eigen_residual(&wt, w, 7).unwrap();
        assert!((a.absolute - b.absolute).abs() < 1e-15);
        let phi = Symbol::Finite(vec![c(0.5), Complex64::new(1.0, -1.0), c(0.25), c(-2.0)]);
        assert!(
            multiplier_adjoint_eigen_residual(&wt, &phi, w, 7)
                .unwrap()
                .absolute
                <= 1e-9
        );
    }

    #[test]
    fn path_radii() {
        let wt = WeightedTree::kary(3, 8).unwrap();
        for p in wt.tree.enumerate_paths(5).paths {
            let r = path_r2(&wt, &p).unwrap();
            assert!(r
                .samples
                .iter()
                .all(|a| (a - 3f64.powf(-1.5)).abs() < 1e-15));
        }
        let wt = WeightedTree::ray(12).unwrap();
        let p = wt.tree.enumerate_paths(2).paths.remove(0);
        assert_eq!(path_r2(&wt, &p).unwrap().r2_estimate, 1.0);
        assert_eq!(path_bpe_radius(&wt, &p).unwrap().radius, 1.0);

        let n = 60;
        let wt = WeightedTree::t20(n).unwrap();
        let paths = wt.tree.enumerate_paths(10);
        assert!(paths.complete && paths.paths.len() == 2);
        for p in &paths.paths {
            let r = path_r2(&wt, p).unwrap();
            let bpe = path_bpe_radius(&wt, p).unwrap();
            if wt.tree.label(p.end()).0 == 2 {
                for (i, a) in r.samples.iter().enumerate() {
                    let k = (i + 1) as i32;
                    assert!((a - 2f64.powi(-k - 1).powf(1.0 / k as f64)).abs() < 1e-15);
                }
                assert!((r.r2_estimate - 0.5).abs() < 0.5 * (2.0 / n as f64) * 0.7);
                assert!((bpe.radius - 0.5).abs() < 1e-15);
            } else {
                assert!((r.r2_estimate - 0.5f64.powf(2.0 / n as f64)).abs() < 1e-15);
                assert_eq!(bpe.radius, 1.0);
            }
        }
        let r = r2_plus(&wt, 10).unwrap();
        assert!(r.paths_complete);
        assert!((r.estimate - 0.5f64.powf(2.0 / n as f64)).abs() < 1e-15);
        assert_eq!(r.estimate, r.frontier_proxy);
    }

    #[test]
    fn r2_plus_on_capped_kary() {
        for kappa in 2..=4 {
            let wt = WeightedTree::kary_capped(kappa, 50, 20_000).unwrap();
            let r = r2_plus(&wt, 256).unwrap();
            assert!((r.estimate - (kappa as f64).powf(-1.5)).abs() < 1e-12);
            assert!((r.frontier_proxy - r.path_max).abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_exclusion() {
        for wt in [
            WeightedTree::t20(40).unwrap(),
            WeightedTree::kary(3, 7).unwrap(),
            WeightedTree::ray(20).unwrap(),
        ] {
            let b = boundary_exclusion_check(&wt).unwrap();
            assert_eq!(b.slices.len(), wt.tree.horizon());
            assert!(b.holds(1e-12), "{:?}", b.min_margin);
        }
    }

    #[test]
    fn reports() {
        let r = spectral_report(
            &WeightedTree::kary(3, 8).unwrap(),
            &ReportOptions::default(),
        )
        .unwrap();
        assert!((r.r2_plus.estimate - 3f64.powf(-1.5)).abs() < 1e-14);
        let bpe = r
            .inclusions
            .iter()
            .find(|i| i.kind == "bpe-in-point-spectrum")
            .unwrap();
        assert!((bpe.radius - 1.0 / 3.0).abs() < 1e-14);
        assert!(r
            .inclusions
            .iter()
            .all(|i| i.status != InclusionStatus::Failed));
        assert!(!r
            .inclusions
            .iter()
            .any(|i| i.kind == "point-spectrum-in-closed-r2plus-disc"));

        let r =
            spectral_report(&WeightedTree::t20(60).unwrap(), &ReportOptions::default()).unwrap();
        assert!((r.bpe_radius.as_ref().unwrap().value - 0.5).abs() < 1e-15);
        assert!(r
            .inclusions
            .iter()
            .any(|i| i.kind == "point-spectrum-in-closed-r2plus-disc"));
        assert!(r
            .inclusions
            .iter()
            .all(|i| i.status != InclusionStatus::Failed));
        assert_eq!(r.r2_paths.len(), 2);

        let r =
            spectral_report(&WeightedTree::ray(30).unwrap(), &ReportOptions::default()).unwrap();
        assert_eq!(r.norm.value, 1.0);
        assert_eq!(r.bpe_radius.unwrap().value, 1.0);
        assert_eq!(r.r2_plus.estimate, 1.0);
        assert!(r.gelfand_seq.sequence.iter().all(|&x| x == 1.0));
    }
}
