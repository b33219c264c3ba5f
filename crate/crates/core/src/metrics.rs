//! Finite-scale distances between labeled trees and finite measures.
//!
//! Trees are compared through the correspondence pairing equal leaf labels
//! and the two roots. Each tree is embedded in ℓ∞ over the labeled points by
//! x ↦ (d(x, ℓ))_ℓ, which is isometric for trees spanned by their labeled
//! points; component Hausdorff terms are measured in that embedding.

use std::collections::BTreeMap;

use petgraph::algo::ford_fulkerson;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{capability, domain, Result};
use crate::rtree::{DiscreteTree, EdgeId, Label, Mark, NodeId};
use crate::scalar::Real;

/// Largest support enumerated by the exact Prokhorov check.
pub const PROKHOROV_EXACT_MAX: usize = 15;

/// Root-to-root and leaf-to-leaf pairing of two trees with equal label sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledCorrespondence {
    /// `None` stands for the root.
    pub labels: Vec<Option<u32>>,
    pub pairs: Vec<(NodeId, NodeId)>,
}

impl LabeledCorrespondence {
    pub fn new(a: &DiscreteTree, b: &DiscreteTree) -> Result<Self> {
        let la: BTreeMap<u32, NodeId> = a.leaves().into_iter().collect();
        let lb: BTreeMap<u32, NodeId> = b.leaves().into_iter().collect();
        if la.keys().ne(lb.keys()) {
            return domain("trees do not share their leaf labels");
        }
        let mut labels = vec![None];
        let mut pairs = vec![(a.root(), b.root())];
        for (l, &x) in &la {
            labels.push(Some(*l));
            pairs.push((x, lb[l]));
        }
        Ok(Self { labels, pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// `rows[i][v]`: distance from the i-th labeled point to node v.
fn label_rows(t: &DiscreteTree, points: impl Iterator<Item = NodeId>) -> Vec<Vec<f64>> {
    points.map(|p| t.distances_from(p)).collect()
}

fn distortion(c: &LabeledCorrespondence, ra: &[Vec<f64>], rb: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            worst = worst.max((ra[i][c.pairs[j].0] - rb[i][c.pairs[j].1]).abs());
        }
    }
    worst
}

/// Half the distortion of the labeled correspondence; an upper bound on d_GH.
pub fn gh_labeled(a: &DiscreteTree, b: &DiscreteTree) -> Result<f64> {
    let c = LabeledCorrespondence::new(a, b)?;
    let ra = label_rows(a, c.pairs.iter().map(|p| p.0));
    let rb = label_rows(b, c.pairs.iter().map(|p| p.1));
    Ok(distortion(&c, &ra, &rb) / 2.0)
}

/// Largest distance between two points of the tree.
pub fn diameter(t: &DiscreteTree) -> f64 {
    let far = |d: &[f64]| (0..d.len()).max_by(|&i, &j| d[i].total_cmp(&d[j])).unwrap_or(0);
    let from_root = t.distances_from(t.root());
    let x = far(&from_root);
    let dx = t.distances_from(x);
    dx[far(&dx)]
}

/// Truncated marked distance with its tail bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedDistance {
    pub value: f64,
    /// 2^{-K} max(diam A, diam B).
    pub tail_bound: f64,
    /// Term k of the sum, before the 2^{-k} weight.
    pub terms: Vec<f64>,
}

fn component_vertices(t: &DiscreteTree, component: u32) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = t
        .edges()
        .iter()
        .filter(|e| e.mark == Mark::Marked && e.component == component)
        .flat_map(|e| [e.parent, e.child])
        .collect();
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        out.push(t.root());
    }
    out
}

fn sup_distance(ra: &[Vec<f64>], xs: &[NodeId], rb: &[Vec<f64>], ys: &[NodeId]) -> f64 {
    let dist = |x: NodeId, y: NodeId| ra.iter().zip(rb).map(|(a, b)| (a[x] - b[y]).abs()).fold(0.0, f64::max);
    let one = |xs: &[NodeId], ys: &[NodeId], flip: bool| {
        xs.iter()
            .map(|&x| ys.iter().map(|&y| if flip { dist(y, x) } else { dist(x, y) }).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one(xs, ys, false).max(one(ys, xs, true))
}

/// Σ_{k ≤ K} 2^{-k} d^{[k]}, where d^{[k]} is the larger of half the labeled
/// distortion and the Hausdorff distances between components 1..k.
/// A component absent from a tree is replaced by its root.
pub fn gh_marked_truncated(a: &DiscreteTree, b: &DiscreteTree, k_max: usize) -> Result<TruncatedDistance> {
    if k_max == 0 {
        return domain("truncation needs K >= 1");
    }
    let c = LabeledCorrespondence::new(a, b)?;
    let ra = label_rows(a, c.pairs.iter().map(|p| p.0));
    let rb = label_rows(b, c.pairs.iter().map(|p| p.1));
    let mut level = distortion(&c, &ra, &rb) / 2.0;
    let mut terms = Vec::with_capacity(k_max);
    let mut value = 0.0;
    for k in 1..=k_max {
        let comp = k as u32;
        let h = sup_distance(&ra, &component_vertices(a, comp), &rb, &component_vertices(b, comp));
        level = level.max(h);
        terms.push(level);
        value += level / 2f64.powi(k as i32);
    }
    let tail_bound = diameter(a).max(diameter(b)) / 2f64.powi(k_max as i32);
    Ok(TruncatedDistance { value, tail_bound, terms })
}

/// Distance from every node to the union of the given edges.
fn distance_to_edges(t: &DiscreteTree, set: &[EdgeId]) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; t.node_count()];
    for &e in set {
        d[t.edge(e).parent] = 0.0;
        d[t.edge(e).child] = 0.0;
    }
    let order = t.preorder();
    for &v in order.iter().rev() {
        if let Some(p) = t.node(v).parent {
            let e = t.edge(p);
            d[e.parent] = d[e.parent].min(d[v] + e.length);
        }
    }
    for &v in &order {
        if let Some(p) = t.node(v).parent {
            let e = t.edge(p);
            d[v] = d[v].min(d[e.parent] + e.length);
        }
    }
    d
}

fn directed_hausdorff(t: &DiscreteTree, from: &[EdgeId], to: &[EdgeId]) -> f64 {
    let d = distance_to_edges(t, to);
    from.iter()
        .filter(|e| !to.contains(e))
        .map(|&e| {
            let edge = t.edge(e);
            (edge.length + d[edge.parent] + d[edge.child]) / 2.0
        })
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two unions of edges of the same tree.
pub fn hausdorff_subtree(t: &DiscreteTree, a: &[EdgeId], b: &[EdgeId]) -> Result<f64> {
    if let Some(&e) = a.iter().chain(b).find(|&&e| e >= t.edge_count()) {
        return domain(format!("no edge {e}"));
    }
    match (a.is_empty(), b.is_empty()) {
        (true, true) => Ok(0.0),
        (true, false) | (false, true) => domain("Hausdorff distance to an empty set"),
        _ => Ok(directed_hausdorff(t, a, b).max(directed_hausdorff(t, b, a))),
    }
}

/// Leaf points of a tree labeled `Label::Leaf`, for use as a measure support.
pub fn leaf_points(t: &DiscreteTree) -> Vec<NodeId> {
    (0..t.node_count()).filter(|&v| matches!(t.node(v).label, Label::Leaf(_))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProkhorovMode {
    /// Enumerate subsets; capability error above [`PROKHOROV_EXACT_MAX`] points.
    Exact,
    /// Enumerate small supports, use max-flow otherwise.
    Auto,
}

struct Neighbourhoods<'a, T> {
    dist: &'a [Vec<T>],
}

impl<T: Real> Neighbourhoods<'_, T> {
    /// max_D μ(D) − ν(D^ε) over subsets D of the support of μ, by enumeration.
    fn deficit_exact(&self, mu: &[T], nu: &[T], support: &[usize], eps: T) -> T {
        let n = mu.len();
        let words = n.div_ceil(64);
        let m = support.len();
        let mut nb = vec![0u64; words << m];
        let mut mass = vec![T::zero(); 1 << m];
        let mut best = T::zero();
        for set in 1usize..(1 << m) {
            let low = set.trailing_zeros() as usize;
            let rest = set & (set - 1);
            let x = support[low];
            mass[set] = mass[rest] + mu[x];
            for w in 0..words {
                let mut bits = nb[rest * words + w];
                for y in w * 64..((w + 1) * 64).min(n) {
                    if self.dist[x][y] <= eps {
                        bits |= 1 << (y - w * 64);
                    }
                }
                nb[set * words + w] = bits;
            }
            let mut covered = T::zero();
            for (y, &ny) in nu.iter().enumerate() {
                if nb[set * words + y / 64] >> (y % 64) & 1 == 1 {
                    covered = covered + ny;
                }
            }
            let gap = mass[set] - covered;
            if gap > best {
                best = gap;
            }
        }
        best
    }

    /// Same deficit as total μ minus a maximum flow.
    fn deficit_flow(&self, mu: &[T], nu: &[T], eps: T) -> T {
        let n = mu.len();
        let mut g = DiGraph::<(), f64>::new();
        let s = g.add_node(());
        let left: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
        let right: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
        let sink = g.add_node(());
        let big: f64 = mu.iter().map(|x| x.to_f64().unwrap_or(0.0)).sum::<f64>() + 1.0;
        for x in 0..n {
            let m = mu[x].to_f64().unwrap_or(0.0);
            if m > 0.0 {
                g.add_edge(s, left[x], m);
                for y in 0..n {
                    if self.dist[x][y] <= eps && nu[y] > T::zero() {
                        g.add_edge(left[x], right[y], big);
                    }
                }
            }
            let v = nu[x].to_f64().unwrap_or(0.0);
            if v > 0.0 {
                g.add_edge(right[x], sink, v);
            }
        }
        let (flow, _) = ford_fulkerson(&g, s, sink);
        let total = mu.iter().fold(T::zero(), |a, &b| a + b);
        let gap = total - T::lit(flow);
        if gap > T::zero() {
            gap
        } else {
            T::zero()
        }
    }
}

/// Prokhorov distance between two measures on the points of a finite metric
/// space given by `dist`.
pub fn prokhorov_finite<T: Real>(mu: &[T], nu: &[T], dist: &[Vec<T>], mode: ProkhorovMode) -> Result<T> {
    let n = dist.len();
    if mu.len() != n || nu.len() != n || dist.iter().any(|r| r.len() != n) {
        return domain("measures and distance matrix disagree in size");
    }
    if mu.iter().chain(nu).any(|&x| !(x >= T::zero()) || !x.is_finite()) {
        return domain("measures must be finite and nonnegative");
    }
    for i in 0..n {
        if dist[i][i] != T::zero() {
            return domain("distance matrix has a nonzero diagonal");
        }
        for j in 0..n {
            if !(dist[i][j] >= T::zero()) || dist[i][j] != dist[j][i] {
                return domain("distance matrix must be symmetric and nonnegative");
            }
        }
    }
    let supp = |m: &[T]| (0..n).filter(|&i| m[i] > T::zero()).collect::<Vec<_>>();
    let (sa, sb) = (supp(mu), supp(nu));
    let exact = sa.len() <= PROKHOROV_EXACT_MAX && sb.len() <= PROKHOROV_EXACT_MAX;
    if mode == ProkhorovMode::Exact && !exact {
        return capability(format!("exact Prokhorov limited to {PROKHOROV_EXACT_MAX} support points"));
    }
    let nbh = Neighbourhoods { dist };
    let deficit = |eps: T| {
        if exact {
            let a = nbh.deficit_exact(mu, nu, &sa, eps);
            let b = nbh.deficit_exact(nu, mu, &sb, eps);
            a.max(b)
        } else {
            nbh.deficit_flow(mu, nu, eps).max(nbh.deficit_flow(nu, mu, eps))
        }
    };
    let mut radii: Vec<T> = dist.iter().flatten().copied().collect();
    radii.push(T::zero());
    radii.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    radii.dedup();
    // First radius whose deficit is at most the radius itself.
    let (mut lo, mut hi) = (0, radii.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if deficit(radii[mid]) <= radii[mid] {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(match lo {
        0 => radii[0],
        i if i == radii.len() => deficit(radii[i - 1]),
        i => radii[i].min(deficit(radii[i - 1])),
    })
}
