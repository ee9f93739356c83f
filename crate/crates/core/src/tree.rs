//! Rooted, leafless directed trees stored up to a depth horizon.
//!
//! Vertices are dense indices with the root at `0`. Every vertex above the
//! horizon has at least one stored child; vertices on the horizon form the
//! frontier and have none. A vertex may additionally be *pruned*: it has
//! children in the untruncated tree that are not stored (used by the capped
//! κ-ary builder to reach large depths under a vertex budget).

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of stored vertices.
pub const DEFAULT_VERTEX_BUDGET: usize = 8_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub usize);

impl VertexId {
    pub const ROOT: VertexId = VertexId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Human-facing coordinates of a vertex: `(k, l)` for κ-ary trees,
/// `(i, j)` (branch, position) for the two-branch tree, and
/// `(depth, ordinal)` for explicit trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Label(pub u64, pub u128);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TreeKind {
    Kary { kappa: usize },
    T20,
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeSpecKind {
    Kary,
    T20,
    Explicit,
}

/// JSON description of a tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub kind: TreeSpecKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<usize>,
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
    /// κ-ary only: store full levels while the budget allows, then a single
    /// descending chain below each vertex of the last full level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capped: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
}

impl TreeSpec {
    pub fn kary(kappa: usize, depth: usize) -> Self {
        Self {
            kind: TreeSpecKind::Kary,
            kappa: Some(kappa),
            depth,
            edges: None,
            capped: None,
            budget: None,
        }
    }

    pub fn t20(depth: usize) -> Self {
        Self {
            kind: TreeSpecKind::T20,
            kappa: None,
            depth,
            edges: None,
            capped: None,
            budget: None,
        }
    }

    pub fn explicit(depth: usize, edges: Vec<[usize; 2]>) -> Self {
        Self {
            kind: TreeSpecKind::Explicit,
            kappa: None,
            depth,
            edges: Some(edges),
            capped: None,
            budget: None,
        }
    }
}

/// A path from the root to the frontier: one vertex per depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Path {
    pub vertices: Vec<VertexId>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Last stored vertex of the path.
    pub fn end(&self) -> VertexId {
        *self.vertices.last().expect("paths contain the root")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathEnumeration {
    pub paths: Vec<Path>,
    /// `false` when the tree has more stored paths than the budget allowed.
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Descendants {
    pub vertices: Vec<VertexId>,
    /// Set when the requested generations extend past the stored part of
    /// the tree below `u`.
    pub truncated: bool,
}

#[derive(Clone, Debug)]
pub struct DirectedTree {
    parent: Vec<Option<VertexId>>,
    children: Vec<Vec<VertexId>>,
    depth: Vec<usize>,
    pruned: Vec<bool>,
    labels: Vec<Label>,
    levels: Vec<Vec<VertexId>>,
    complete_height: Vec<usize>,
    horizon: usize,
    kind: TreeKind,
}

/// Incremental builder; vertices must be added parent-first.
struct Assembler {
    parent: Vec<Option<VertexId>>,
    children: Vec<Vec<VertexId>>,
    depth: Vec<usize>,
    pruned: Vec<bool>,
    labels: Vec<Label>,
    budget: usize,
}

impl Assembler {
    fn new(budget: usize, root_label: Label) -> Self {
        Self {
            parent: vec![None],
            children: vec![Vec::new()],
            depth: vec![0],
            pruned: vec![false],
            labels: vec![root_label],
            budget,
        }
    }

    fn add_child(&mut self, parent: VertexId, label: Label) -> Result<VertexId> {
        let id = VertexId(self.parent.len());
        if id.0 + 1 > self.budget {
            return Err(Error::Capacity {
                budget: self.budget,
                needed: id.0 + 1,
            });
        }
        self.parent.push(Some(parent));
        self.children.push(Vec::new());
        self.children[parent.0].push(id);
        self.depth.push(self.depth[parent.0] + 1);
        self.pruned.push(false);
        self.labels.push(label);
        Ok(id)
    }

    fn finish(self, horizon: usize, kind: TreeKind) -> Result<DirectedTree> {
        DirectedTree::from_parts(
            self.parent,
            self.children,
            self.depth,
            self.pruned,
            self.labels,
            horizon,
            kind,
        )
    }
}

fn kary_count(kappa: usize, depth: usize) -> Option<usize> {
    let mut total: usize = 0;
    let mut width: usize = 1;
    for level in 0..=depth {
        total = total.checked_add(width)?;
        if level < depth {
            width = width.checked_mul(kappa)?;
        }
    }
    Some(total)
}

impl DirectedTree {
    fn from_parts(
        parent: Vec<Option<VertexId>>,
        children: Vec<Vec<VertexId>>,
        depth: Vec<usize>,
        pruned: Vec<bool>,
        labels: Vec<Label>,
        horizon: usize,
        kind: TreeKind,
    ) -> Result<Self> {
        let n = parent.len();
        let mut levels = vec![Vec::new(); horizon + 1];
        // BFS so that each level lists vertices in child-order.
        let mut queue = VecDeque::from([VertexId::ROOT]);
        while let Some(v) = queue.pop_front() {
            let d = depth[v.0];
            if d > horizon {
                return Err(Error::InvalidTree(format!(
                    "vertex {v} lies below the horizon {horizon}"
                )));
            }
            if d < horizon && children[v.0].is_empty() {
                return Err(Error::InteriorLeaf(v.0));
            }
            levels[d].push(v);
            queue.extend(children[v.0].iter().copied());
        }
        let mut complete_height = vec![0usize; n];
        for level in levels.iter().rev() {
            for &v in level {
                if depth[v.0] < horizon && !pruned[v.0] {
                    let below = children[v.0]
                        .iter()
                        .map(|c| complete_height[c.0])
                        .min()
                        .unwrap_or(0);
                    complete_height[v.0] = below + 1;
                }
            }
        }
        Ok(Self {
            parent,
            children,
            depth,
            pruned,
            labels,
            levels,
            complete_height,
            horizon,
            kind,
        })
    }

    /// Rooted κ-ary tree truncated at `depth`, vertex `(k, l)` having children
    /// `(k+1, κ(l−1)+1) … (k+1, κl)`.
    pub fn build_kary(kappa: usize, depth: usize) -> Result<Self> {
        Self::build_kary_with_budget(kappa, depth, DEFAULT_VERTEX_BUDGET)
    }

    pub fn build_kary_with_budget(kappa: usize, depth: usize, budget: usize) -> Result<Self> {
        check_kary_args(kappa, depth)?;
        let needed = kary_count(kappa, depth).unwrap_or(usize::MAX);
        if needed > budget {
            return Err(Error::Capacity { budget, needed });
        }
        Self::kary_impl(kappa, depth, depth, budget)
    }

    /// κ-ary tree of the given depth whose full levels are stored only while
    /// the vertex budget allows. Below the last full level each vertex keeps a
    /// single chain of first children down to the horizon; the vertices on
    /// those chains are marked pruned.
    pub fn build_kary_capped(kappa: usize, depth: usize, budget: usize) -> Result<Self> {
        check_kary_args(kappa, depth)?;
        let mut full_depth = None;
        for d in 0..=depth {
            let total = kary_count(kappa, d).and_then(|full| {
                kappa
                    .checked_pow(d as u32)
                    .and_then(|w| w.checked_mul(depth - d))
                    .and_then(|c| c.checked_add(full))
            });
            match total {
                Some(t) if t <= budget => full_depth = Some(d),
                _ => break,
            }
        }
        let full_depth = full_depth.ok_or(Error::Capacity {
            budget,
            needed: depth + 1,
        })?;
        Self::kary_impl(kappa, depth, full_depth, budget)
    }

    fn kary_impl(kappa: usize, depth: usize, full_depth: usize, budget: usize) -> Result<Self> {
        let mut asm = Assembler::new(budget, Label(0, 1));
        let mut frontier = vec![VertexId::ROOT];
        for k in 0..depth {
            let mut next = Vec::with_capacity(if k < full_depth {
                frontier.len() * kappa
            } else {
                frontier.len()
            });
            for &v in &frontier {
                let l = asm.labels[v.0].1;
                let first = (l - 1)
                    .checked_mul(kappa as u128)
                    .and_then(|x| x.checked_add(1))
                    .ok_or_else(|| Error::InvalidTree("vertex label overflow".into()))?;
                let count = if k < full_depth { kappa } else { 1 };
                for m in 0..count {
                    next.push(asm.add_child(v, Label(k as u64 + 1, first + m as u128))?);
                }
                if k >= full_depth && kappa > 1 {
                    asm.pruned[v.0] = true;
                }
            }
            frontier = next;
        }
        asm.finish(depth, TreeKind::Kary { kappa })
    }

    /// The unilateral ray `0 → 1 → 2 → …`.
    pub fn build_ray(depth: usize) -> Result<Self> {
        Self::build_kary(1, depth)
    }

    /// Root `(0,0)` with two rays `(1,j)` and `(2,j)`, `j ≥ 1`.
    pub fn build_t20(depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidTree("depth must be at least 1".into()));
        }
        let needed = 2 * depth + 1;
        if needed > DEFAULT_VERTEX_BUDGET {
            return Err(Error::Capacity {
                budget: DEFAULT_VERTEX_BUDGET,
                needed,
            });
        }
        let mut asm = Assembler::new(DEFAULT_VERTEX_BUDGET, Label(0, 0));
        let mut tips = [VertexId::ROOT, VertexId::ROOT];
        for j in 1..=depth {
            for (b, tip) in tips.iter_mut().enumerate() {
                *tip = asm.add_child(*tip, Label(b as u64 + 1, j as u128))?;
            }
        }
        asm.finish(depth, TreeKind::T20)
    }

    /// Validates an explicit `(parent, child)` edge list rooted at `0`.
    pub fn from_edges(edges: &[[usize; 2]], horizon: usize) -> Result<Self> {
        let n = edges
            .iter()
            .flat_map(|e| e.iter().copied())
            .max()
            .map_or(1, |m| m + 1);
        if n > DEFAULT_VERTEX_BUDGET {
            return Err(Error::Capacity {
                budget: DEFAULT_VERTEX_BUDGET,
                needed: n,
            });
        }
        let mut parent: Vec<Option<VertexId>> = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for &[p, c] in edges {
            if p == c {
                return Err(Error::CycleDetected(c));
            }
            if parent[c].is_some() {
                return Err(Error::MultipleParents(c));
            }
            parent[c] = Some(VertexId(p));
            children[p].push(VertexId(c));
        }
        if parent[0].is_some() {
            return Err(Error::CycleDetected(0));
        }
        let mut depth = vec![usize::MAX; n];
        depth[0] = 0;
        let mut queue = VecDeque::from([VertexId::ROOT]);
        while let Some(v) = queue.pop_front() {
            for &c in &children[v.0] {
                depth[c.0] = depth[v.0] + 1;
                queue.push_back(c);
            }
        }
        if let Some(v) = (0..n).find(|&v| depth[v] == usize::MAX) {
            // Unreached: either it sits on a cycle or hangs off nothing.
            let mut seen = vec![false; n];
            let mut cur = v;
            while let Some(p) = parent[cur] {
                if seen[cur] {
                    return Err(Error::CycleDetected(cur));
                }
                seen[cur] = true;
                cur = p.0;
            }
            return Err(Error::NotConnected(v));
        }
        let mut labels = vec![Label(0, 0); n];
        let mut counters = vec![0u128; horizon + 1];
        let mut queue = VecDeque::from([VertexId::ROOT]);
        while let Some(v) = queue.pop_front() {
            let d = depth[v.0];
            if d > horizon {
                return Err(Error::InvalidTree(format!(
                    "vertex {v} at depth {d} lies below the horizon {horizon}"
                )));
            }
            counters[d] += 1;
            labels[v.0] = Label(d as u64, counters[d]);
            queue.extend(children[v.0].iter().copied());
        }
        Self::from_parts(
            parent,
            children,
            depth,
            vec![false; n],
            labels,
            horizon,
            TreeKind::Explicit,
        )
    }

    pub fn from_spec(spec: &TreeSpec) -> Result<Self> {
        match spec.kind {
            TreeSpecKind::Kary => {
                let kappa = spec
                    .kappa
                    .ok_or_else(|| Error::InvalidTree("kary tree needs \"kappa\"".into()))?;
                let budget = spec.budget.unwrap_or(DEFAULT_VERTEX_BUDGET);
                if spec.capped.unwrap_or(false) {
                    Self::build_kary_capped(kappa, spec.depth, budget)
                } else {
                    Self::build_kary_with_budget(kappa, spec.depth, budget)
                }
            }
            TreeSpecKind::T20 => Self::build_t20(spec.depth),
            TreeSpecKind::Explicit => {
                let edges = spec
                    .edges
                    .as_deref()
                    .ok_or_else(|| Error::InvalidTree("explicit tree needs \"edges\"".into()))?;
                Self::from_edges(edges, spec.depth)
            }
        }
    }

    /// Edge list in canonical BFS numbering.
    pub fn canonical_edges(&self) -> Vec<[usize; 2]> {
        let mut relabel = vec![0usize; self.n_vertices()];
        for (i, v) in self.bfs_order().enumerate() {
            relabel[v.0] = i;
        }
        self.bfs_order()
            .flat_map(|v| self.children(v).iter().map(move |c| (v, *c)))
            .map(|(p, c)| [relabel[p.0], relabel[c.0]])
            .collect()
    }

    pub fn to_spec(&self) -> TreeSpec {
        TreeSpec::explicit(self.horizon, self.canonical_edges())
    }

    /// Canonical JSON form: explicit spec, BFS order, newline-terminated.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string(&self.to_spec()).expect("tree spec serializes");
        s.push('\n');
        s
    }

    pub fn n_vertices(&self) -> usize {
        self.parent.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn root(&self) -> VertexId {
        VertexId::ROOT
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.0 < self.n_vertices()
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v.0]
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v.0]
    }

    pub fn depth(&self, v: VertexId) -> usize {
        self.depth[v.0]
    }

    pub fn label(&self, v: VertexId) -> Label {
        self.labels[v.0]
    }

    pub fn find_label(&self, label: Label) -> Option<VertexId> {
        self.labels.iter().position(|l| *l == label).map(VertexId)
    }

    pub fn is_frontier(&self, v: VertexId) -> bool {
        self.depth[v.0] == self.horizon
    }

    pub fn is_pruned(&self, v: VertexId) -> bool {
        self.pruned[v.0]
    }

    /// Below the horizon and with every child stored.
    pub fn is_complete(&self, v: VertexId) -> bool {
        self.depth[v.0] < self.horizon && !self.pruned[v.0]
    }

    /// Number of generations below `v` that are stored in full.
    pub fn complete_height(&self, v: VertexId) -> usize {
        self.complete_height[v.0]
    }

    /// `true` when no vertex has unstored children above the horizon, so
    /// every depth slice is the full slice of the untruncated tree.
    pub fn has_full_slices(&self) -> bool {
        !self.pruned.iter().any(|&p| p)
    }

    pub fn first_pruned(&self) -> Option<VertexId> {
        self.pruned.iter().position(|&p| p).map(VertexId)
    }

    /// Vertices at depth `k`, in BFS order.
    pub fn level(&self, k: usize) -> &[VertexId] {
        self.levels.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn levels(&self) -> &[Vec<VertexId>] {
        &self.levels
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.n_vertices()).map(VertexId)
    }

    pub fn bfs_order(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.levels.iter().flatten().copied()
    }

    pub fn frontier(&self) -> &[VertexId] {
        self.level(self.horizon)
    }

    /// `v, pa(v), pa²(v), …, root`.
    pub fn ancestors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        std::iter::successors(Some(v), move |&x| self.parent[x.0])
    }

    /// `paᵏ(v)`, if it exists.
    pub fn ancestor(&self, v: VertexId, k: usize) -> Option<VertexId> {
        self.ancestors(v).nth(k)
    }

    /// Whether `u = paᵏ(v)` for some `k ≥ 0`.
    pub fn is_ancestor_or_self(&self, u: VertexId, v: VertexId) -> bool {
        let (du, dv) = (self.depth[u.0], self.depth[v.0]);
        dv >= du && self.ancestor(v, dv - du) == Some(u)
    }

    /// `{v : paᵏ(v) = u for some 0 ≤ k ≤ n}` among stored vertices.
    pub fn descendants_n(&self, u: VertexId, n: usize) -> Descendants {
        let mut vertices = vec![u];
        let mut layer = vec![u];
        let mut truncated = false;
        for _ in 0..n {
            if layer.iter().any(|&v| !self.is_complete(v)) {
                truncated = true;
            }
            layer = layer
                .iter()
                .flat_map(|&v| self.children(v).iter().copied())
                .collect();
            if layer.is_empty() {
                break;
            }
            vertices.extend_from_slice(&layer);
        }
        Descendants {
            vertices,
            truncated,
        }
    }

    /// Stored vertices exactly `n` generations below `u`.
    pub fn children_n(&self, u: VertexId, n: usize) -> Vec<VertexId> {
        let mut layer = vec![u];
        for _ in 0..n {
            layer = layer
                .iter()
                .flat_map(|&v| self.children(v).iter().copied())
                .collect();
        }
        layer
    }

    /// Maximal stored root-to-frontier paths in DFS order, at most `budget`.
    pub fn enumerate_paths(&self, budget: usize) -> PathEnumeration {
        let mut paths = Vec::new();
        let mut current = vec![VertexId::ROOT];
        // Stack of (vertex, index of next child to visit).
        let mut stack = vec![(VertexId::ROOT, 0usize)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let kids = self.children(v);
            if kids.is_empty() {
                if paths.len() == budget {
                    return PathEnumeration {
                        paths,
                        complete: false,
                    };
                }
                paths.push(Path {
                    vertices: current.clone(),
                });
                stack.pop();
                current.pop();
            } else if *next < kids.len() {
                let c = kids[*next];
                *next += 1;
                stack.push((c, 0));
                current.push(c);
            } else {
                stack.pop();
                current.pop();
            }
        }
        PathEnumeration {
            paths,
            complete: true,
        }
    }

    /// Stored path from the root down to `v`.
    pub fn path_to(&self, v: VertexId) -> Path {
        let mut vertices: Vec<_> = self.ancestors(v).collect();
        vertices.reverse();
        Path { vertices }
    }

    /// Number of children of `v` in the untruncated tree; frontier vertices
    /// report what is known from the tree family (0 for explicit trees).
    pub fn fanout(&self, v: VertexId) -> usize {
        match self.kind {
            TreeKind::Kary { kappa } if self.pruned[v.0] || self.is_frontier(v) => kappa,
            TreeKind::T20 if self.is_frontier(v) => 1,
            _ => self.children[v.0].len(),
        }
    }

    /// Stored vertices with at least two children, counting children that
    /// were pruned away.
    pub fn branching_vertices(&self) -> Vec<VertexId> {
        self.vertices()
            .filter(|&v| !self.is_frontier(v) && self.fanout(v) >= 2)
            .collect()
    }
}

fn check_kary_args(kappa: usize, depth: usize) -> Result<()> {
    if kappa == 0 {
        return Err(Error::InvalidTree("kappa must be at least 1".into()));
    }
    if depth == 0 {
        return Err(Error::InvalidTree("depth must be at least 1".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_has_one_vertex_per_level() {
        let t = DirectedTree::build_kary(1, 5).unwrap();
        assert_eq!(t.n_vertices(), 6);
        assert!(t.branching_vertices().is_empty());
        assert_eq!(t.enumerate_paths(10).paths.len(), 1);
    }

    #[test]
    fn ternary_tree_labels() {
        let t = DirectedTree::build_kary(3, 2).unwrap();
        assert_eq!(t.n_vertices(), 13);
        let labels: Vec<_> = t.children(t.root()).iter().map(|&c| t.label(c)).collect();
        assert_eq!(labels, vec![Label(1, 1), Label(1, 2), Label(1, 3)]);
        let v = t.find_label(Label(1, 2)).unwrap();
        let kids: Vec<_> = t.children(v).iter().map(|&c| t.label(c)).collect();
        assert_eq!(kids, vec![Label(2, 4), Label(2, 5), Label(2, 6)]);
    }

    #[test]
    fn binary_slices_by_traversal() {
        let t = DirectedTree::build_kary(2, 10).unwrap();
        assert_eq!(t.n_vertices(), 2047);
        for k in 0..=10 {
            // count by walking parents rather than trusting the level table
            let count = t
                .vertices()
                .filter(|&v| t.ancestors(v).count() == k + 1)
                .count();
            assert_eq!(count, 1 << k);
            assert_eq!(t.level(k).len(), 1 << k);
        }
    }

    #[test]
    fn kary_budget_overflow_is_a_capacity_error() {
        let err = DirectedTree::build_kary_with_budget(3, 5, 100).unwrap_err();
        assert_eq!(
            err,
            Error::Capacity {
                budget: 100,
                needed: 364
            }
        );
    }

    #[test]
    fn t20_shape() {
        let t = DirectedTree::build_t20(1).unwrap();
        assert_eq!(t.n_vertices(), 3);
        assert_eq!(t.children(t.root()).len(), 2);
        let t = DirectedTree::build_t20(3).unwrap();
        assert_eq!(t.n_vertices(), 7);
        assert_eq!(t.frontier().len(), 2);
        assert!(t.frontier().iter().all(|&v| t.depth(v) == 3));
        let t = DirectedTree::build_t20(100).unwrap();
        assert_eq!(t.branching_vertices(), vec![t.root()]);
        assert_eq!(t.enumerate_paths(10).paths.len(), 2);
    }

    #[test]
    fn explicit_ray_and_errors() {
        let t = DirectedTree::from_edges(&[[0, 1], [1, 2]], 2).unwrap();
        assert_eq!(t.n_vertices(), 3);
        assert_eq!(
            DirectedTree::from_edges(&[[0, 1], [0, 2], [1, 2]], 2).unwrap_err(),
            Error::MultipleParents(2)
        );
        assert_eq!(
            DirectedTree::from_edges(&[[0, 1], [1, 2], [2, 1]], 3).unwrap_err(),
            Error::MultipleParents(1)
        );
        assert_eq!(
            DirectedTree::from_edges(&[[0, 1], [2, 3], [3, 2]], 2).unwrap_err(),
            Error::CycleDetected(2)
        );
        assert_eq!(
            DirectedTree::from_edges(&[[0, 1], [2, 3], [3, 4], [4, 2]], 1).unwrap_err(),
            Error::CycleDetected(2)
        );
        assert_eq!(
            DirectedTree::from_edges(&[[0, 1], [2, 3]], 1).unwrap_err(),
            Error::NotConnected(2)
        );
        assert_eq!(
            DirectedTree::from_edges(&[[1, 0]], 1).unwrap_err(),
            Error::CycleDetected(0)
        );
        assert_eq!(
            DirectedTree::from_edges(&[[0, 1], [0, 2], [1, 3]], 2).unwrap_err(),
            Error::InteriorLeaf(2)
        );
    }

    #[test]
    fn explicit_t20_matches_builder() {
        let spec: TreeSpec = serde_json::from_str(
            r#"{"kind":"explicit","depth":3,"edges":[[0,1],[0,2],[1,3],[2,4],[3,5],[4,6]]}"#,
        )
        .unwrap();
        let explicit = DirectedTree::from_spec(&spec).unwrap();
        let built = DirectedTree::build_t20(3).unwrap();
        assert_eq!(explicit.canonical_edges(), built.canonical_edges());
    }

    #[test]
    fn descendants() {
        let t = DirectedTree::build_kary(3, 4).unwrap();
        assert_eq!(t.descendants_n(t.root(), 0).vertices, vec![t.root()]);
        assert_eq!(t.descendants_n(t.root(), 2).vertices.len(), 13);
        assert!(!t.descendants_n(t.root(), 4).truncated);
        assert!(t.descendants_n(t.root(), 5).truncated);

        let t = DirectedTree::build_t20(6).unwrap();
        let v = t.find_label(Label(1, 1)).unwrap();
        let labels: Vec<_> = t
            .descendants_n(v, 2)
            .vertices
            .iter()
            .map(|&x| t.label(x))
            .collect();
        assert_eq!(labels, vec![Label(1, 1), Label(1, 2), Label(1, 3)]);
    }

    #[test]
    fn path_counts() {
        let t = DirectedTree::build_kary(2, 4).unwrap();
        let e = t.enumerate_paths(100);
        assert!(e.complete);
        assert_eq!(e.paths.len(), 16);
        assert!(e.paths.iter().all(|p| p.len() == 5));
        let e = t.enumerate_paths(5);
        assert!(!e.complete);
        assert_eq!(e.paths.len(), 5);
    }

    #[test]
    fn branching_in_full_ternary() {
        let t = DirectedTree::build_kary(3, 3).unwrap();
        let b = t.branching_vertices();
        assert_eq!(b.len(), 13);
        assert!(b.iter().all(|&v| t.depth(v) < 3));
    }

    #[test]
    fn capped_kary_keeps_budget_and_chains() {
        let t = DirectedTree::build_kary_capped(4, 50, 20_000).unwrap();
        assert!(t.n_vertices() <= 20_000);
        assert_eq!(t.horizon(), 50);
        assert!(!t.has_full_slices());
        for &v in t.frontier() {
            assert_eq!(t.label(v).0, 50);
        }
        // full levels survive intact
        assert_eq!(t.level(3).len(), 64);
        assert!(t.is_complete(t.root()));
        assert_eq!(
            t.branching_vertices().len(),
            t.n_vertices() - t.frontier().len()
        );
        assert!(DirectedTree::build_kary_capped(4, 50, 10).is_err());
    }

    #[test]
    fn complete_height_counts_stored_generations() {
        let t = DirectedTree::build_kary(2, 5).unwrap();
        assert_eq!(t.complete_height(t.root()), 5);
        assert_eq!(t.complete_height(t.frontier()[0]), 0);
    }
}
