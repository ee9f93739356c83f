#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use treeshift::shift::TreeVector;
use treeshift::{DirectedTree, WeightSystem, WeightedTree};

/// Random tree in which every vertex above `depth` gets `1..=max_children`
/// children, growing single chains once `max_vertices` would be exceeded.
pub fn random_tree(
    rng: &mut ChaCha8Rng,
    depth: usize,
    max_children: usize,
    max_vertices: usize,
) -> DirectedTree {
    let mut edges = Vec::new();
    let mut layer = vec![0usize];
    let mut next = 1usize;
    for d in 0..depth {
        let remaining_levels = depth - d;
        let mut new_layer = Vec::new();
        for &u in &layer {
            // Room left once every current leaf has a chain to the horizon.
            let reserve = (layer.len() + new_layer.len()) * remaining_levels;
            let room = max_vertices.saturating_sub(next + reserve);
            let want = rng.random_range(1..=max_children);
            let kids = if want - 1 <= room / remaining_levels.max(1) {
                want
            } else {
                1
            };
            for _ in 0..kids {
                edges.push([u, next]);
                new_layer.push(next);
                next += 1;
            }
        }
        layer = new_layer;
    }
    DirectedTree::from_edges(&edges, depth).expect("generated tree is valid")
}

/// Positive weights: `β` log-uniform in `[1/β_spread, β_spread]`, `λ`
/// uniform in `lambda_range`.
pub fn random_weights(
    rng: &mut ChaCha8Rng,
    tree: &DirectedTree,
    beta_spread: f64,
    lambda_range: (f64, f64),
) -> WeightSystem {
    let beta = tree
        .vertices()
        .map(|_| beta_spread.powf(rng.random_range(-1.0..1.0)))
        .collect();
    let lambda = tree
        .vertices()
        .map(|_| rng.random_range(lambda_range.0..lambda_range.1))
        .collect();
    WeightSystem::from_real(tree, beta, lambda).expect("positive weights")
}

/// Random `λ` with child sums exactly normalized up to rounding, random `β`.
pub fn random_normalized(
    rng: &mut ChaCha8Rng,
    tree: &DirectedTree,
    beta_spread: f64,
) -> WeightSystem {
    let mut lambda = vec![1.0; tree.n_vertices()];
    for u in tree.vertices() {
        let kids = tree.children(u);
        let raw: Vec<f64> = kids.iter().map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        for (c, r) in kids.iter().zip(raw) {
            lambda[c.0] = r / total;
        }
    }
    let beta = tree
        .vertices()
        .map(|_| beta_spread.powf(rng.random_range(-1.0..1.0)))
        .collect();
    WeightSystem::from_real(tree, beta, lambda).expect("positive weights")
}

pub fn complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Random vector on vertices with at least `margin` complete generations
/// below them.
pub fn random_vector(
    rng: &mut ChaCha8Rng,
    wt: &WeightedTree,
    margin: usize,
    entries: usize,
) -> TreeVector {
    let pool: Vec<_> = wt
        .tree
        .vertices()
        .filter(|&v| wt.tree.complete_height(v) >= margin)
        .collect();
    let mut f = TreeVector::new();
    for _ in 0..entries {
        let v = pool[rng.random_range(0..pool.len())];
        f.set(v, complex(rng));
    }
    f
}

pub fn random_poly(rng: &mut ChaCha8Rng, degree: usize) -> treeshift::multiplier::Symbol {
    treeshift::multiplier::Symbol::Finite((0..=degree).map(|_| complex(rng)).collect())
}
