mod common;

use common::{complex, random_normalized, random_poly, random_tree, random_vector, random_weights};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treeshift::analysis::{bpe_profile, is_bpe, kernel, point_evaluation, DEFAULT_GUARD};
use treeshift::multiplier::{
    cauchy_mult, gamma_apply, truncate_symbol, Symbol, TruncationConvention,
};
use treeshift::oracle::materialize_multiplier;
use treeshift::shift::{apply_adjoint, apply_shift, power_norm};
use treeshift::{DirectedTree, WeightedTree};

fn weighted(seed: u64, depth: usize) -> WeightedTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = random_tree(&mut rng, depth, 3, 400);
    let weights = random_weights(&mut rng, &tree, 3.0, (0.2, 1.5));
    WeightedTree::new(tree, weights).unwrap()
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

fn coeffs_close(a: &Symbol, b: &Symbol, tol: f64) -> bool {
    let n = a.support_bound().unwrap().max(b.support_bound().unwrap());
    (0..=n).all(|k| close(a.coeff(k), b.coeff(k), tol))
}

fn poly(seed: u64, degree: usize) -> Symbol {
    random_poly(&mut ChaCha8Rng::seed_from_u64(seed), degree)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adjoint_pairing(seed in any::<u64>(), depth in 3usize..9) {
        let wt = weighted(seed, depth);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let f = random_vector(&mut rng, &wt, 1, 8);
        let g = random_vector(&mut rng, &wt, 1, 8);
        let lhs = apply_shift(&wt, &f).value.inner(&g, &wt.weights);
        let adj = apply_adjoint(&wt, &g);
        prop_assert!(!adj.truncation_loss);
        let rhs = f.inner(&adj.value, &wt.weights);
        prop_assert!(close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn power_norms_are_submultiplicative(seed in any::<u64>(), j in 1usize..4, k in 1usize..4) {
        let wt = weighted(seed, 8);
        let a = power_norm(&wt, j).unwrap().value;
        let b = power_norm(&wt, k).unwrap().value;
        let ab = power_norm(&wt, j + k).unwrap().value;
        prop_assert!(ab <= a * b * (1.0 + 1e-12));
    }

    #[test]
    fn cauchy_product_laws(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>(),
                           d1 in 0usize..6, d2 in 0usize..6, d3 in 0usize..6) {
        let (p, q, r) = (poly(s1, d1), poly(s2, d2), poly(s3, d3));
        let pq = cauchy_mult(&p, &q).unwrap();
        prop_assert!(coeffs_close(&pq, &cauchy_mult(&q, &p).unwrap(), 1e-13));
        let left = cauchy_mult(&pq, &r).unwrap();
        let right = cauchy_mult(&p, &cauchy_mult(&q, &r).unwrap()).unwrap();
        prop_assert!(coeffs_close(&left, &right, 1e-13));
        prop_assert!(coeffs_close(&cauchy_mult(&Symbol::unit(), &p).unwrap(), &p, 1e-13));
        // The symbol of a product evaluates to the product of the symbols.
        let z = complex(&mut ChaCha8Rng::seed_from_u64(s1 ^ s2)) * 0.7;
        prop_assert!(close(pq.eval(z).unwrap(), p.eval(z).unwrap() * q.eval(z).unwrap(), 1e-12));
    }

    #[test]
    fn multiplier_is_linear(seed in any::<u64>(), d1 in 0usize..4, d2 in 0usize..4) {
        let wt = weighted(seed, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let (p, q) = (random_poly(&mut rng, d1), random_poly(&mut rng, d2));
        let (a, b) = (complex(&mut rng), complex(&mut rng));
        let f = random_vector(&mut rng, &wt, d1.max(d2), 6);
        let g = random_vector(&mut rng, &wt, d1.max(d2), 6);
        let combo = Symbol::linear_combination(a, &p, b, &q).unwrap();
        let lhs = gamma_apply(&wt, &combo, &f).value;
        let rhs = gamma_apply(&wt, &p, &f).value.scaled(a).plus(&gamma_apply(&wt, &q, &f).value.scaled(b));
        prop_assert!(lhs.minus(&rhs).norm(&wt.weights) <= 1e-12 * (1.0 + lhs.norm(&wt.weights)));
        let sum = gamma_apply(&wt, &p, &f.plus(&g)).value;
        let parts = gamma_apply(&wt, &p, &f).value.plus(&gamma_apply(&wt, &p, &g).value);
        prop_assert!(sum.minus(&parts).norm(&wt.weights) <= 1e-12 * (1.0 + sum.norm(&wt.weights)));
    }

    #[test]
    fn riesz_identity(seed in any::<u64>(), modulus in 0.0f64..0.9, phase in 0.0f64..6.3) {
        let wt = weighted(seed, 7);
        let w = Complex64::from_polar(modulus, phase);
        let f = random_vector(&mut ChaCha8Rng::seed_from_u64(seed ^ 3), &wt, 0, 10);
        let k = kernel(&wt, w).to_vector();
        prop_assert!(close(f.inner(&k, &wt.weights), point_evaluation(&wt.tree, &f, w), 1e-12));
    }

    #[test]
    fn bpe_verdict_depends_on_modulus_only(seed in any::<u64>(), scale in 0.0f64..2.0, phase in 0.0f64..6.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(&mut rng, 10, 3, 600);
        let weights = random_normalized(&mut rng, &tree, 2.0);
        let wt = WeightedTree::new(tree, weights).unwrap();
        let p = bpe_profile(&wt).unwrap();
        let r = scale * p.radius_estimate;
        let a = is_bpe(&p, Complex64::new(r, 0.0), DEFAULT_GUARD).verdict;
        let b = is_bpe(&p, Complex64::from_polar(r, phase), DEFAULT_GUARD).verdict;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn edge_list_round_trip(seed in any::<u64>(), depth in 1usize..8) {
        let tree = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), depth, 4, 300);
        let edges = tree.canonical_edges();
        let back = DirectedTree::from_edges(&edges, tree.horizon()).unwrap();
        prop_assert_eq!(back.canonical_edges(), edges);
        prop_assert_eq!(back.n_vertices(), tree.n_vertices());
        prop_assert!(back.vertices().all(|v| back.depth(v) == tree.depth(v)));
    }

    #[test]
    fn dense_multipliers_compose(seed in any::<u64>(), d1 in 0usize..4, d2 in 0usize..4) {
        let wt = weighted(seed, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let (p, q) = (random_poly(&mut rng, d1), random_poly(&mut rng, d2));
        let mp = materialize_multiplier(&wt, &p).unwrap();
        let mq = materialize_multiplier(&wt, &q).unwrap();
        let mpq = materialize_multiplier(&wt, &cauchy_mult(&p, &q).unwrap()).unwrap();
        let product = mp.compose(&mq);
        let diff = (product.orthonormal() - mpq.orthonormal()).iter().map(|x| x.norm()).fold(0.0, f64::max);
        let scale = mpq.orthonormal().iter().map(|x| x.norm()).fold(1.0, f64::max);
        prop_assert!(diff <= 1e-12 * scale, "{diff}");
    }

    #[test]
    fn truncations_converge(re in -1.0f64..1.0, im in -1.0f64..1.0, modulus in 0.0f64..0.8, phase in 0.0f64..6.3) {
        let phi = Symbol::Geometric { a: Complex64::new(1.0, 0.5), ratio: Complex64::new(re, im) / 1.5 };
        let z = Complex64::from_polar(modulus, phase);
        let exact = phi.eval(z).unwrap();
        let err = |n| (truncate_symbol(&phi, n, TruncationConvention::IncludeZero).eval(z).unwrap() - exact).norm();
        let (e10, e80) = (err(10), err(80));
        prop_assert!(e80 <= e10 + 1e-15);
        prop_assert!(e80 <= 1e-10 * (1.0 + exact.norm()));
        let from_one = truncate_symbol(&phi, 80, TruncationConvention::FromOne).eval(z).unwrap();
        prop_assert!(close(from_one + phi.coeff(0), exact, 1e-10));
    }
}
