//! Dense-matrix realizations of the shift and of multipliers on small
//! truncations, used as ground truth.
//!
//! Matrices are stored in the orthonormal basis `e_u/√β_u`, where the
//! Hilbert-space adjoint is the conjugate transpose. Vectors passed in and
//! out are in vertex coordinates (the `TreeVector` convention).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::multiplier::Symbol;
use crate::shift::TreeVector;
use crate::weights::WeightedTree;

pub const DEFAULT_DENSE_BUDGET: usize = 3000;
const SEED: u64 = 0x7265_6573_6869_6674;
const TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    orthonormal: DMatrix<Complex64>,
    sqrt_beta: Vec<f64>,
}

impl DenseOperator {
    pub fn dim(&self) -> usize {
        self.sqrt_beta.len()
    }

    pub fn orthonormal(&self) -> &DMatrix<Complex64> {
        &self.orthonormal
    }

    /// Matrix in the basis `{e_u}`: entry `(v, u)` is the coefficient of
    /// `e_v` in `A e_u`.
    pub fn metric(&self) -> DMatrix<Complex64> {
        let s = &self.sqrt_beta;
        DMatrix::from_fn(self.dim(), self.dim(), |v, u| {
            self.orthonormal[(v, u)] * (s[u] / s[v])
        })
    }

    fn to_orthonormal(&self, f: &TreeVector) -> DVector<Complex64> {
        let mut x = DVector::zeros(self.dim());
        for (v, y) in f.iter() {
            x[v.0] = y * self.sqrt_beta[v.0];
        }
        x
    }

    fn vector_from_orthonormal(&self, x: &DVector<Complex64>) -> TreeVector {
        let vals: Vec<Complex64> = x.iter().zip(&self.sqrt_beta).map(|(y, s)| y / *s).collect();
        TreeVector::from_dense(&vals)
    }

    pub fn apply(&self, f: &TreeVector) -> TreeVector {
        self.vector_from_orthonormal(&(&self.orthonormal * self.to_orthonormal(f)))
    }

    /// Hilbert-space adjoint applied to `f`.
    pub fn adjoint_apply(&self, f: &TreeVector) -> TreeVector {
        self.vector_from_orthonormal(&self.orthonormal.ad_mul(&self.to_orthonormal(f)))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            orthonormal: &self.orthonormal * &other.orthonormal,
            sqrt_beta: self.sqrt_beta.clone(),
        }
    }

    pub fn power(&self, k: usize) -> DenseOperator {
        let mut out = DenseOperator {
            orthonormal: DMatrix::identity(self.dim(), self.dim()),
            sqrt_beta: self.sqrt_beta.clone(),
        };
        for _ in 0..k {
            out = self.compose(&out);
        }
        out
    }
}

fn check_budget(wt: &WeightedTree, budget: usize) -> Result<()> {
    let n = wt.n_vertices();
    if n > budget {
        return Err(Error::BudgetExceeded { budget, n });
    }
    Ok(())
}

fn sqrt_betas(wt: &WeightedTree) -> Vec<f64> {
    wt.weights.betas().iter().map(|b| b.sqrt()).collect()
}

pub fn materialize_shift(wt: &WeightedTree) -> Result<DenseOperator> {
    materialize_shift_with_budget(wt, DEFAULT_DENSE_BUDGET)
}

pub fn materialize_shift_with_budget(wt: &WeightedTree, budget: usize) -> Result<DenseOperator> {
    check_budget(wt, budget)?;
    let n = wt.n_vertices();
    let s = sqrt_betas(wt);
    let mut m = DMatrix::zeros(n, n);
    for v in wt.tree.vertices() {
        if let Some(p) = wt.tree.parent(v) {
            m[(v.0, p.0)] = wt.weights.lambda(v) * (s[v.0] / s[p.0]);
        }
    }
    Ok(DenseOperator {
        orthonormal: m,
        sqrt_beta: s,
    })
}

pub fn materialize_multiplier(wt: &WeightedTree, phi: &Symbol) -> Result<DenseOperator> {
    materialize_multiplier_with_budget(wt, phi, DEFAULT_DENSE_BUDGET)
}

/// Entry `(v, paᵏ v)` is `λ_{paᵏ v|v} φ̂(k)` in vertex coordinates.
pub fn materialize_multiplier_with_budget(
    wt: &WeightedTree,
    phi: &Symbol,
    budget: usize,
) -> Result<DenseOperator> {
    check_budget(wt, budget)?;
    let bound = phi.support_bound().ok_or_else(|| {
        Error::InvalidSymbol("dense multiplier needs a finitely supported symbol".into())
    })?;
    let n = wt.n_vertices();
    let s = sqrt_betas(wt);
    let mut m = DMatrix::zeros(n, n);
    for v in wt.tree.vertices() {
        let mut prod = Complex64::new(1.0, 0.0);
        for (k, u) in wt.tree.ancestors(v).enumerate() {
            if k > bound {
                break;
            }
            m[(v.0, u.0)] = prod * phi.coeff(k) * (s[v.0] / s[u.0]);
            prod *= wt.weights.lambda(u);
        }
    }
    Ok(DenseOperator {
        orthonormal: m,
        sqrt_beta: s,
    })
}

pub fn dense_adjoint_apply(op: &DenseOperator, f: &TreeVector) -> TreeVector {
    op.adjoint_apply(f)
}

/// Largest singular value of the operator.
pub fn operator_norm(op: &DenseOperator) -> Result<f64> {
    operator_norm_on(op, &vec![true; op.dim()])
}

/// Norm of the operator restricted to the span of `{e_u : domain[u]}`.
///
/// Lanczos iteration with full reorthogonalization on `P A* A P`, seeded
/// deterministically, stopping once the Ritz residual falls below `1e−10`
/// relative to the top Ritz value.
pub fn operator_norm_on(op: &DenseOperator, domain: &[bool]) -> Result<f64> {
    power_norm_on(op, 1, domain)
}

/// `‖Aᵏ P‖` with `P` the projection onto `{e_u : domain[u]}`, without
/// forming `Aᵏ`.
pub fn power_norm_on(op: &DenseOperator, k: usize, domain: &[bool]) -> Result<f64> {
    let n = op.dim();
    let a = &op.orthonormal;
    let project = |x: &mut DVector<Complex64>| {
        for (i, keep) in domain.iter().enumerate() {
            if !keep {
                x[i] = Complex64::new(0.0, 0.0);
            }
        }
    };
    let apply = |x: &DVector<Complex64>| {
        let mut y = x.clone();
        for _ in 0..k {
            y = a * y;
        }
        for _ in 0..k {
            y = a.ad_mul(&y);
        }
        project(&mut y);
        y
    };

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut q = DVector::from_fn(n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    project(&mut q);
    let q_norm = q.norm();
    if q_norm == 0.0 {
        return Ok(0.0);
    }
    q /= Complex64::new(q_norm, 0.0);

    let max_iter = domain.iter().filter(|&&d| d).count();
    let mut basis: Vec<DVector<Complex64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last_theta = f64::NAN;
    for j in 0..max_iter {
        let mut w = apply(&q);
        let alpha = q.dotc(&w).re;
        basis.push(q.clone());
        alphas.push(alpha);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&w);
                w -= b * c;
            }
        }
        let beta = w.norm();
        let check = j < 20 || j % 10 == 0 || j + 1 == max_iter;
        if check || beta == 0.0 {
            let (theta, s_last) = top_ritz(&alphas, &betas);
            let converged = beta * s_last.abs() <= TOL * theta
                || beta <= f64::EPSILON * theta
                || (j >= 20 && (theta - last_theta).abs() <= 1e-15 * theta);
            if converged || j + 1 == max_iter {
                return Ok(theta.max(0.0).sqrt());
            }
            last_theta = theta;
        }
        betas.push(beta);
        q = w / Complex64::new(beta, 0.0);
    }
    Err(Error::NoConvergence(max_iter))
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `alphas` and off-diagonal `betas`, and the last component of its unit
/// eigenvector.
fn top_ritz(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let (idx, theta) =
        eig.eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
                if x > best.1 {
                    (i, x)
                } else {
                    best
                }
            });
    (theta, eig.eigenvectors[(m - 1, idx)])
}

/// `‖Sᵏ‖` on the stored tree, with `Sᵏ` restricted to vertices whose `k`
/// generations of descendants are fully stored.
pub fn shift_power_norm(wt: &WeightedTree, k: usize) -> Result<f64> {
    let s = materialize_shift(wt)?;
    let domain: Vec<bool> = wt
        .tree
        .vertices()
        .map(|u| wt.tree.complete_height(u) >= k)
        .collect();
    power_norm_on(&s, k, &domain)
}
