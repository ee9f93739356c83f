//! A named battery of property checks over one weighted tree.
//!
//! Every check reports a non-negative violation and a tolerance; a check
//! passes when the violation does not exceed the tolerance. Checks whose
//! preconditions fail (for instance weights that violate the child-sum
//! normalization) are reported as failures carrying the error message.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{
    adjoint_eigen_residual, boundary_exclusion_check, bpe_profile, intertwining_residual, is_bpe,
    kernel, point_evaluation, DEFAULT_GUARD,
};
use crate::error::Result;
use crate::multiplier::{multiplier_product_check, Symbol};
use crate::oracle::{materialize_shift, shift_power_norm, DEFAULT_DENSE_BUDGET};
use crate::shift::{apply_adjoint, apply_shift, power_norms, TreeVector};
use crate::weights::{WeightedTree, DEFAULT_NORMALIZATION_TOL};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub n_checks: usize,
    pub n_failed: usize,
    pub checks: Vec<CheckOutcome>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random samples per sampled check.
    pub samples: usize,
    /// Largest power used in the norm checks.
    pub kmax: usize,
    /// Multiplier applied to every default tolerance.
    pub tol_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            samples: 8,
            kmax: 4,
            tol_scale: 1.0,
        }
    }
}

struct Suite<'a> {
    wt: &'a WeightedTree,
    rng: ChaCha8Rng,
    opts: VerifyOptions,
    out: Vec<CheckOutcome>,
}

impl Suite<'_> {
    fn record(&mut self, name: &'static str, tolerance: f64, result: Result<(f64, String)>) {
        let tolerance = tolerance * self.opts.tol_scale;
        let outcome = match result {
            Ok((value, detail)) => CheckOutcome {
                name,
                passed: value <= tolerance,
                value,
                tolerance,
                detail,
            },
            Err(e) => CheckOutcome {
                name,
                passed: false,
                value: f64::NAN,
                tolerance,
                detail: e.to_string(),
            },
        };
        self.out.push(outcome);
    }

    fn complex(&mut self) -> Complex64 {
        Complex64::new(
            self.rng.random_range(-1.0..1.0),
            self.rng.random_range(-1.0..1.0),
        )
    }

    /// Random vector supported on vertices with `margin` stored generations
    /// below them, at most `cap` entries.
    fn vector(&mut self, margin: usize, cap: usize) -> TreeVector {
        let tree = &self.wt.tree;
        let pool: Vec<_> = tree
            .bfs_order()
            .filter(|&v| tree.complete_height(v) >= margin)
            .take(4 * cap)
            .collect();
        let mut f = TreeVector::new();
        for _ in 0..cap.min(pool.len()) {
            let v = pool[self.rng.random_range(0..pool.len())];
            let x = self.complex();
            f.set(v, x);
        }
        f
    }

    fn symbol(&mut self, degree: usize) -> Symbol {
        Symbol::Finite((0..=degree).map(|_| self.complex()).collect())
    }
}

pub fn verify(wt: &WeightedTree, opts: &VerifyOptions) -> VerifyReport {
    let mut s = Suite {
        wt,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        opts: *opts,
        out: Vec::new(),
    };
    let tree = &wt.tree;
    let n = tree.horizon();
    let kmax = opts.kmax.min(n).max(1);

    let violations = wt.weights.check_normalized(tree, DEFAULT_NORMALIZATION_TOL);
    let normalization = wt
        .weights
        .require_normalized(tree)
        .map(|_| (0.0, "all complete vertices".to_string()));
    s.record(
        "child-sum-normalization",
        0.0,
        normalization.map_err(|e| {
            let worst = violations
                .iter()
                .map(|v| (v.child_sum - 1.0).norm())
                .fold(0.0, f64::max);
            crate::Error::InvalidWeights(format!(
                "{e}; {} violations, largest deviation {worst}",
                violations.len()
            ))
        }),
    );

    // ⟨Sf, g⟩ = ⟨f, S*g⟩.
    let mut worst: f64 = 0.0;
    for _ in 0..opts.samples {
        let f = s.vector(1, 16);
        let g = s.vector(1, 16);
        let lhs = apply_shift(wt, &f).value.inner(&g, &wt.weights);
        let rhs = f.inner(&apply_adjoint(wt, &g).value, &wt.weights);
        worst = worst.max((lhs - rhs).norm() / (1.0 + f.norm(&wt.weights) * g.norm(&wt.weights)));
    }
    s.record(
        "adjoint-pairing",
        1e-12,
        Ok((worst, format!("{} random pairs", opts.samples))),
    );

    let norms = power_norms(wt, kmax);
    s.record(
        "power-norm-submultiplicative",
        1e-9,
        norms.as_ref().map_err(Clone::clone).map(|p| {
            let mut worst: f64 = 0.0;
            for j in 1..=p.len() {
                for k in 1..=p.len() - j {
                    worst = worst.max(p[j + k - 1].value - p[j - 1].value * p[k - 1].value);
                }
            }
            (worst, format!("k ≤ {kmax}"))
        }),
    );

    if tree.n_vertices() <= DEFAULT_DENSE_BUDGET {
        s.record(
            "power-norm-vs-oracle",
            1e-9,
            norms.as_ref().map_err(Clone::clone).and_then(|p| {
                let mut worst: f64 = 0.0;
                for pk in p.iter().take(3) {
                    let oracle = shift_power_norm(wt, pk.k)?;
                    worst = worst.max((pk.value - oracle).abs() / pk.value.max(f64::MIN_POSITIVE));
                }
                Ok((worst, "relative gap, k ≤ 3".to_string()))
            }),
        );
        let f = s.vector(1, 32);
        s.record(
            "dense-adjoint-agreement",
            1e-12,
            materialize_shift(wt).map(|op| {
                let d = op
                    .adjoint_apply(&f)
                    .minus(&apply_adjoint(wt, &f).value)
                    .norm(&wt.weights);
                (
                    d / (1.0 + f.norm(&wt.weights)),
                    "random vector away from the frontier".to_string(),
                )
            }),
        );
    }

    // Riesz identity and shift covariance at random points inside the disc.
    let profile = bpe_profile(wt);
    let radius = profile
        .as_ref()
        .map(|p| p.radius_estimate)
        .unwrap_or(0.5)
        .min(1.0);
    let mut riesz: f64 = 0.0;
    let mut covariance: Result<f64> = Ok(0.0);
    for _ in 0..opts.samples {
        let w = Complex64::from_polar(
            0.9 * radius * s.rng.random::<f64>(),
            s.rng.random_range(0.0..6.3),
        );
        let f = s.vector(1, 16);
        let k = kernel(wt, w).to_vector();
        let v = point_evaluation(tree, &f, w);
        riesz = riesz.max((v - f.inner(&k, &wt.weights)).norm() / (1.0 + v.norm()));
        covariance = covariance.and_then(|worst| {
            wt.weights.require_normalized(tree)?;
            let sv = point_evaluation(tree, &apply_shift(wt, &f).value, w);
            Ok(worst.max((sv - w * v).norm() / (1.0 + v.norm())))
        });
    }
    s.record(
        "riesz-identity",
        1e-12,
        Ok((riesz, "V_w(f) = ⟨f, k_w⟩".to_string())),
    );
    s.record(
        "shift-covariance",
        1e-12,
        covariance.map(|x| (x, "V_w(Sf) = w V_w(f)".to_string())),
    );

    let depth = n.saturating_sub(1);
    let mut eigen: Result<f64> = Ok(0.0);
    for i in 0..opts.samples {
        let w = Complex64::from_polar(
            0.9 * radius * (i + 1) as f64 / opts.samples as f64,
            i as f64,
        );
        eigen = eigen.and_then(|worst| Ok(worst.max(adjoint_eigen_residual(wt, w, depth)?.scaled)));
    }
    s.record(
        "kernel-eigenvector",
        1e-10,
        eigen.map(|x| (x, "S* k_w = conj(w) k_w, |w| ≤ 0.9·radius".to_string())),
    );

    let mut intertwining: Result<f64> = Ok(0.0);
    let mut product: Result<f64> = Ok(0.0);
    for _ in 0..opts.samples {
        let phi = s.symbol(3);
        let psi = s.symbol(2);
        let f = s.vector(5, 8);
        let w = Complex64::from_polar(
            0.9 * radius * s.rng.random::<f64>(),
            s.rng.random_range(0.0..6.3),
        );
        intertwining = intertwining
            .and_then(|worst| Ok(worst.max(intertwining_residual(wt, &phi, &f, w)?.relative)));
        product = product.and_then(|worst| {
            let r = multiplier_product_check(wt, &phi, &psi, &f)?;
            Ok(worst.max(r / (1.0 + f.norm(&wt.weights))))
        });
    }
    s.record(
        "intertwining",
        1e-10,
        intertwining.map(|x| (x, "V_w(Γ_φ f) = φ(w) V_w(f)".to_string())),
    );
    s.record(
        "multiplier-product",
        1e-11,
        product.map(|x| (x, "Γ_φ Γ_ψ = Γ_{φ∗ψ}".to_string())),
    );

    s.record(
        "boundary-exclusion",
        1e-12,
        boundary_exclusion_check(wt)
            .map(|b| ((-b.min_margin).max(0.0), format!("‖S‖ = {}", b.norm))),
    );

    let circularity = profile.map(|p| {
        let mut mismatches = 0;
        for _ in 0..opts.samples {
            let r = 2.0 * p.radius_estimate * s.rng.random::<f64>();
            let a = is_bpe(&p, Complex64::new(r, 0.0), DEFAULT_GUARD).verdict;
            let b = is_bpe(
                &p,
                Complex64::from_polar(r, s.rng.random_range(0.0..6.3)),
                DEFAULT_GUARD,
            )
            .verdict;
            mismatches += usize::from(a != b);
        }
        (mismatches as f64, "verdict depends on |w| only".to_string())
    });
    s.record("circularity", 0.0, circularity);

    let n_failed = s.out.iter().filter(|c| !c.passed).count();
    VerifyReport {
        passed: n_failed == 0,
        n_checks: s.out.len(),
        n_failed,
        checks: s.out,
    }
}
