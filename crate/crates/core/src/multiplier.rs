//! Multipliers `Γ_φ` given by a coefficient sequence `φ̂`, acting as
//! `(Γ_φ f)(v) = Σ_{k=0}^{|v|} λ_{paᵏ v|v} φ̂(k) f(paᵏ v)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::shift::{power_norms, TreeVector};
use crate::tree::VertexId;
use crate::weights::WeightedTree;
use crate::Flagged;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default number of boundary points for the sup-norm bound.
pub const DEFAULT_GRID: usize = 4096;

/// A coefficient sequence `k ↦ φ̂(k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymbolRepr", into = "SymbolRepr")]
pub enum Symbol {
    /// `φ̂(k) = coeffs[k]`, zero past the end.
    Finite(Vec<Complex64>),
    /// `φ̂(k) = a·ratioᵏ`.
    Geometric { a: Complex64, ratio: Complex64 },
    /// `χ_{n}`: one at `n`, zero elsewhere.
    Indicator(usize),
}

impl Symbol {
    pub fn unit() -> Self {
        Symbol::Indicator(0)
    }

    pub fn finite_real(coeffs: &[f64]) -> Self {
        Symbol::Finite(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        match self {
            Symbol::Finite(c) => c.get(k).copied().unwrap_or(ZERO),
            Symbol::Geometric { a, ratio } => a * ratio.powu(k as u32),
            Symbol::Indicator(n) => {
                if k == *n {
                    ONE
                } else {
                    ZERO
                }
            }
        }
    }

    /// Largest index that may carry a nonzero coefficient, if finite.
    pub fn support_bound(&self) -> Option<usize> {
        match self {
            Symbol::Finite(c) => Some(c.len().saturating_sub(1)),
            Symbol::Geometric { .. } => None,
            Symbol::Indicator(n) => Some(*n),
        }
    }

    /// `φ̂(0), …, φ̂(m)`.
    pub fn coeffs_upto(&self, m: usize) -> Vec<Complex64> {
        (0..=m).map(|k| self.coeff(k)).collect()
    }

    /// `a·φ̂ + b·ψ̂`; finite when both inputs are.
    pub fn linear_combination(
        a: Complex64,
        phi: &Symbol,
        b: Complex64,
        psi: &Symbol,
    ) -> Result<Symbol> {
        let (Some(m), Some(n)) = (phi.support_bound(), psi.support_bound()) else {
            return Err(Error::InvalidSymbol(
                "linear combination needs finite support".into(),
            ));
        };
        Ok(Symbol::Finite(
            (0..=m.max(n))
                .map(|k| a * phi.coeff(k) + b * psi.coeff(k))
                .collect(),
        ))
    }

    /// `φ(z) = Σ φ̂(k) zᵏ`, where the series converges.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        match self {
            Symbol::Finite(c) => Ok(c.iter().rev().fold(ZERO, |acc, &a| acc * z + a)),
            Symbol::Indicator(n) => Ok(z.powu(*n as u32)),
            Symbol::Geometric { a, ratio } => {
                let q = ratio * z;
                if q.norm() >= 1.0 {
                    return Err(Error::DivergentSeries {
                        radius: z.norm(),
                        reason: format!("geometric ratio modulus {} reaches 1", q.norm()),
                    });
                }
                Ok(a / (ONE - q))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
enum CoeffRepr {
    Real(f64),
    Complex([f64; 2]),
}

impl<'de> Deserialize<'de> for CoeffRepr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match json::scalar(&v) {
            Some(z) => z.map(|[re, im]| {
                if matches!(v, serde_json::Value::Number(_)) {
                    CoeffRepr::Real(re)
                } else {
                    CoeffRepr::Complex([re, im])
                }
            }),
            None => Err(serde::de::Error::custom(format!(
                "expected a number or [re, im], found {v}"
            ))),
        }
    }
}

impl From<CoeffRepr> for Complex64 {
    fn from(c: CoeffRepr) -> Self {
        match c {
            CoeffRepr::Real(x) => Complex64::new(x, 0.0),
            CoeffRepr::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

impl From<Complex64> for CoeffRepr {
    fn from(z: Complex64) -> Self {
        if z.im == 0.0 {
            CoeffRepr::Real(z.re)
        } else {
            CoeffRepr::Complex([z.re, z.im])
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum SymbolRepr {
    Finite {
        coeffs: Vec<CoeffRepr>,
    },
    Geometric {
        a: CoeffRepr,
        ratio: CoeffRepr,
    },
    Indicator {
        #[serde(deserialize_with = "crate::json::usize_value")]
        n: usize,
    },
}

impl TryFrom<SymbolRepr> for Symbol {
    type Error = Error;

    fn try_from(r: SymbolRepr) -> Result<Self> {
        let check = |z: Complex64| {
            if z.re.is_finite() && z.im.is_finite() {
                Ok(z)
            } else {
                Err(Error::InvalidSymbol("coefficients must be finite".into()))
            }
        };
        match r {
            SymbolRepr::Finite { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::InvalidSymbol(
                        "finite symbol needs at least one coefficient".into(),
                    ));
                }
                Ok(Symbol::Finite(
                    coeffs
                        .into_iter()
                        .map(|c| check(c.into()))
                        .collect::<Result<_>>()?,
                ))
            }
            SymbolRepr::Geometric { a, ratio } => Ok(Symbol::Geometric {
                a: check(a.into())?,
                ratio: check(ratio.into())?,
            }),
            SymbolRepr::Indicator { n } => Ok(Symbol::Indicator(n)),
        }
    }
}

impl From<Symbol> for SymbolRepr {
    fn from(s: Symbol) -> Self {
        match s {
            Symbol::Finite(c) => SymbolRepr::Finite {
                coeffs: c.into_iter().map(Into::into).collect(),
            },
            Symbol::Geometric { a, ratio } => SymbolRepr::Geometric {
                a: a.into(),
                ratio: ratio.into(),
            },
            Symbol::Indicator(n) => SymbolRepr::Indicator { n },
        }
    }
}

/// `Γ_φ f` on the stored tree. Each source vertex `u` pushes
/// `λ_{u|v} φ̂(k) f(u)` to its descendants `v` at distance `k`. The flag is
/// raised when a nonzero contribution would continue past a frontier or
/// pruned vertex.
pub fn gamma_apply(wt: &WeightedTree, phi: &Symbol, f: &TreeVector) -> Flagged<TreeVector> {
    let (tree, w) = (&wt.tree, &wt.weights);
    let reach = phi.support_bound().unwrap_or(usize::MAX);
    let sources: Vec<(VertexId, Complex64)> = f.iter().collect();
    let parts: Vec<(Vec<(VertexId, Complex64)>, bool)> = sources
        .par_iter()
        .map(|&(u, x)| {
            let mut out = Vec::new();
            let mut loss = false;
            let mut stack = vec![(u, 0usize, ONE)];
            while let Some((v, k, prod)) = stack.pop() {
                let a = phi.coeff(k);
                if a != ZERO {
                    out.push((v, prod * a * x));
                }
                if k >= reach {
                    continue;
                }
                if !tree.is_complete(v) && (k + 1..=reach.min(k + 64)).any(|j| phi.coeff(j) != ZERO)
                {
                    loss = true;
                }
                for &c in tree.children(v) {
                    stack.push((c, k + 1, prod * w.lambda(c)));
                }
            }
            (out, loss)
        })
        .collect();
    let mut value = TreeVector::new();
    let mut truncation_loss = false;
    for (out, loss) in parts {
        truncation_loss |= loss;
        for (v, y) in out {
            value.add_at(v, y);
        }
    }
    Flagged {
        value,
        truncation_loss,
    }
}

/// `(φ̂∗ψ̂)(k) = Σ_{j≤k} φ̂(j) ψ̂(k−j)` for finitely supported symbols.
pub fn cauchy_mult(phi: &Symbol, psi: &Symbol) -> Result<Symbol> {
    match (phi, psi) {
        (Symbol::Indicator(m), Symbol::Indicator(n)) => Ok(Symbol::Indicator(m + n)),
        _ => {
            let (Some(m), Some(n)) = (phi.support_bound(), psi.support_bound()) else {
                return Err(Error::InvalidSymbol(
                    "product of infinitely supported symbols needs an explicit order".into(),
                ));
            };
            Ok(cauchy_mult_upto(phi, psi, m + n))
        }
    }
}

/// The first `order + 1` coefficients of `φ̂∗ψ̂`.
pub fn cauchy_mult_upto(phi: &Symbol, psi: &Symbol, order: usize) -> Symbol {
    let a = phi.coeffs_upto(order);
    let b = psi.coeffs_upto(order);
    Symbol::Finite(
        (0..=order)
            .map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum())
            .collect(),
    )
}

/// `‖Γ_φ(Γ_ψ f) − Γ_{φ∗ψ} f‖_β`.
pub fn multiplier_product_check(
    wt: &WeightedTree,
    phi: &Symbol,
    psi: &Symbol,
    f: &TreeVector,
) -> Result<f64> {
    let prod = cauchy_mult(phi, psi)?;
    let inner = gamma_apply(wt, psi, f);
    let lhs = gamma_apply(wt, phi, &inner.value);
    let rhs = gamma_apply(wt, &prod, f);
    if inner.truncation_loss || lhs.truncation_loss || rhs.truncation_loss {
        return Err(Error::TruncationLoss);
    }
    Ok(lhs.value.minus(&rhs.value).norm(&wt.weights))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientMargin {
    pub k: usize,
    pub coeff_abs: f64,
    /// `‖Sᵏ‖`, with `‖S⁰‖ = 1`.
    pub power_norm: f64,
    /// `‖M_φ̂‖ − |φ̂(k)|·‖Sᵏ‖`.
    pub margin: f64,
}

/// Margins of the bound `|φ̂(k)|·‖Sᵏ‖ ≤ ‖M_φ̂‖` for `k = 0..=kmax`.
pub fn coefficient_bound_check(
    wt: &WeightedTree,
    phi: &Symbol,
    multiplier_norm: f64,
    kmax: usize,
) -> Result<Vec<CoefficientMargin>> {
    let mut norms = vec![1.0];
    if kmax > 0 {
        norms.extend(power_norms(wt, kmax)?.into_iter().map(|p| p.value));
    }
    Ok(norms
        .into_iter()
        .enumerate()
        .map(|(k, power_norm)| {
            let coeff_abs = phi.coeff(k).norm();
            CoefficientMargin {
                k,
                coeff_abs,
                power_norm,
                margin: multiplier_norm - coeff_abs * power_norm,
            }
        })
        .collect())
}

/// Lower bound `max_k |φ̂(k)|·‖Sᵏ‖` on `‖M_φ̂‖`.
pub fn multiplier_norm_lower(wt: &WeightedTree, phi: &Symbol, kmax: usize) -> Result<f64> {
    Ok(coefficient_bound_check(wt, phi, 0.0, kmax)?
        .iter()
        .map(|m| m.coeff_abs * m.power_norm)
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupNormBound {
    /// Largest `|φ(z)|` sampled on the refined grid of `2·grid` points.
    pub value: f64,
    /// The same maximum on `grid` points.
    pub coarse: f64,
    /// `|value − coarse| / value`.
    pub relative_change: f64,
    /// `value` plus a Lipschitz correction covering the gaps between
    /// sample points; a guaranteed bound for `sup_{|z| ≤ s} |φ(z)|`.
    pub certified: f64,
}

/// Upper estimate of `‖M_φ̂‖` by `sup_{|z| ≤ ‖S‖} |φ(z)|`, sampled on the
/// circle `|z| = norm_s`.
pub fn multiplier_norm_upper(phi: &Symbol, norm_s: f64, grid: usize) -> Result<SupNormBound> {
    if grid == 0 || norm_s.is_nan() || norm_s < 0.0 {
        return Err(Error::InvalidSymbol(
            "grid must be positive and the radius non-negative".into(),
        ));
    }
    if let Symbol::Geometric { ratio, .. } = phi {
        if ratio.norm() * norm_s >= 1.0 {
            return Err(Error::DivergentSeries {
                radius: norm_s,
                reason: format!(
                    "geometric ratio modulus {} times radius reaches 1",
                    ratio.norm()
                ),
            });
        }
    }
    let sample = |m: usize| -> Result<f64> {
        (0..m)
            .map(|j| {
                phi.eval(Complex64::from_polar(
                    norm_s,
                    2.0 * PI * j as f64 / m as f64,
                ))
                .map(|z| z.norm())
            })
            .try_fold(0.0, |acc, x| x.map(|x| f64::max(acc, x)))
    };
    let coarse = sample(grid)?;
    let value = sample(2 * grid)?;
    // sup |φ'| on the circle, bounded termwise.
    let lipschitz = match phi {
        Symbol::Geometric { a, ratio } => {
            let q = ratio.norm();
            a.norm() * q / (1.0 - q * norm_s).powi(2)
        }
        _ => (1..=phi.support_bound().unwrap_or(0))
            .map(|k| k as f64 * phi.coeff(k).norm() * norm_s.powi(k as i32 - 1))
            .sum(),
    };
    let certified = value + norm_s * PI / (2 * grid) as f64 * lipschitz;
    let relative_change = if value > 0.0 {
        (value - coarse).abs() / value
    } else {
        0.0
    };
    Ok(SupNormBound {
        value,
        coarse,
        relative_change,
        certified,
    })
}

/// Fejér weights: `ω̂_k(n) = ((k+1−n)/(k+1))·φ̂(n)` for `n ≤ k+1`.
pub fn cesaro_symbol(phi: &Symbol, k: usize) -> Symbol {
    let d = (k + 1) as f64;
    Symbol::Finite(
        (0..=k + 1)
            .map(|n| phi.coeff(n) * ((d - n as f64) / d))
            .collect(),
    )
}

/// Which indices survive `truncate_symbol`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationConvention {
    /// Keep `k = 0..=n`.
    #[default]
    IncludeZero,
    /// Keep `k = 1..=n`, dropping the constant term.
    FromOne,
}

pub fn truncate_symbol(phi: &Symbol, n: usize, convention: TruncationConvention) -> Symbol {
    let first = match convention {
        TruncationConvention::IncludeZero => 0,
        TruncationConvention::FromOne => 1,
    };
    Symbol::Finite(
        (0..=n)
            .map(|k| if k >= first { phi.coeff(k) } else { ZERO })
            .collect(),
    )
}
