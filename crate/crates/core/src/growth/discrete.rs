//! Discrete chains with unit edge lengths: Marchal, alpha-gamma and the
//! discrete two-colour model.

use rand::Rng;

use super::{check_beta, Fenwick};
use crate::error::{domain, Result};
use crate::rtree::{DiscreteTree, EdgeId, EdgeSpec, Label, Mark, NodeId, Position};
use crate::scalar::Exact;

/// A tree-valued Markov chain driven by an explicit random stream.
pub trait Chain {
    fn tree(&self) -> &DiscreteTree;
    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()>;
}

/// Where a new leaf is hung.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Site {
    Edge(EdgeId),
    Vertex(NodeId),
}

pub(crate) fn marchal_vertex_weight<F: Exact>(beta: &F, d: usize) -> F {
    if d < 3 {
        return F::zero();
    }
    let one = F::one();
    F::from_ratio(d as i64 - 3, 1) * (one.clone() - beta.clone()) + one - F::from_ratio(2, 1) * beta.clone()
}

pub(crate) fn alpha_gamma_vertex_weight<F: Exact>(alpha: &F, gamma: &F, d: usize) -> F {
    if d < 3 {
        return F::zero();
    }
    F::from_ratio(d as i64 - 2, 1) * alpha.clone() - gamma.clone()
}

pub(crate) fn alpha_gamma_edge_weight<F: Exact>(alpha: &F, gamma: &F, external: bool) -> F {
    if external {
        F::one() - alpha.clone()
    } else {
        gamma.clone()
    }
}

pub(crate) fn two_colour_edge_weight<F: Exact>(beta: &F, position: Position) -> F {
    match position {
        Position::External => F::one() - F::from_ratio(2, 1) * beta.clone(),
        Position::Internal | Position::Unmarked => beta.clone(),
    }
}

pub(crate) fn is_external(tree: &DiscreteTree, e: EdgeId) -> bool {
    tree.node(tree.edge(e).child).children.is_empty()
}

/// Replaces edge `e` by two unit edges; returns the new middle vertex.
pub(crate) fn unit_split(tree: &mut DiscreteTree, e: EdgeId) -> Result<NodeId> {
    let (j, _) = tree.split_edge(e, 0.5, [0.5, 0.0, 0.5])?;
    let lower = tree.edge_count() - 1;
    tree.edge_mut(e).length = 1.0;
    tree.edge_mut(lower).length = 1.0;
    Ok(j)
}

/// Hangs a leaf from `site`, splitting the edge first if needed; returns the
/// vertex it hangs from.
pub(crate) fn insert_leaf(tree: &mut DiscreteTree, site: Site, label: u32) -> Result<NodeId> {
    let j = match site {
        Site::Edge(e) => unit_split(tree, e)?,
        Site::Vertex(v) => v,
    };
    tree.add_child(j, EdgeSpec::unmarked(1.0, 0.0), Label::Leaf(label));
    Ok(j)
}

/// Two-colour insertion on edge `e`: split, then a marked edge to a new
/// degree-2 vertex and an unmarked edge to leaf `label`. Returns the
/// component receiving the marked edge.
pub(crate) fn insert_two_colour(tree: &mut DiscreteTree, e: EdgeId, label: u32, components: u32) -> Result<u32> {
    let edge = tree.edge(e).clone();
    let comp = match edge.mark {
        Mark::Marked => edge.component,
        Mark::Unmarked => components + 1,
    };
    let j = unit_split(tree, e)?;
    let (_, v) = tree.add_child(j, EdgeSpec::marked(1.0, 0.0, comp), Label::Internal);
    tree.add_child(v, EdgeSpec::unmarked(1.0, 0.0), Label::Leaf(label));
    Ok(comp)
}

/// Marchal's chain: edges weigh β, vertices of degree d ≥ 3 weigh
/// (d − 3)(1 − β) + 1 − 2β.
#[derive(Debug, Clone)]
pub struct Marchal {
    beta: f64,
    steps: usize,
    tree: DiscreteTree,
    vertices: Fenwick,
}

impl Marchal {
    /// T_0: root joined to leaf 0.
    pub fn new(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let mut vertices = Fenwick::new();
        vertices.push(0.0);
        vertices.push(0.0);
        Ok(Self { beta, steps: 0, tree: DiscreteTree::single_edge(1.0, 0.0, 0), vertices })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

impl Chain for Marchal {
    fn tree(&self) -> &DiscreteTree {
        &self.tree
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let edges = self.tree.edge_count();
        let on_edges = self.beta * edges as f64;
        let u = rng.random::<f64>() * (on_edges + self.vertices.total());
        let site = if u < on_edges || self.vertices.total() <= 0.0 {
            Site::Edge(((u / self.beta) as usize).min(edges - 1))
        } else {
            Site::Vertex(self.vertices.find(u - on_edges))
        };
        let j = insert_leaf(&mut self.tree, site, self.steps as u32 + 1)?;
        while self.vertices.len() < self.tree.node_count() {
            self.vertices.push(0.0);
        }
        self.vertices.set(j, marchal_vertex_weight(&self.beta, self.tree.degree(j)));
        self.steps += 1;
        Ok(())
    }
}

/// Alpha-gamma chain: vertices (d − 2)α − γ, external edges 1 − α,
/// internal edges γ; requires 0 < γ ≤ α < 1.
#[derive(Debug, Clone)]
pub struct AlphaGamma {
    alpha: f64,
    gamma: f64,
    leaves: usize,
    tree: DiscreteTree,
    edges: Fenwick,
    vertices: Fenwick,
}

impl AlphaGamma {
    /// T_1: root joined to leaf 1.
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= alpha && alpha < 1.0) {
            return domain(format!("alpha-gamma needs 0 < gamma <= alpha < 1, got ({alpha}, {gamma})"));
        }
        let mut edges = Fenwick::new();
        edges.push(1.0 - alpha);
        let mut vertices = Fenwick::new();
        vertices.push(0.0);
        vertices.push(0.0);
        Ok(Self { alpha, gamma, leaves: 1, tree: DiscreteTree::single_edge(1.0, 0.0, 1), edges, vertices })
    }

    pub fn leaves(&self) -> usize {
        self.leaves
    }
}

impl Chain for AlphaGamma {
    fn tree(&self) -> &DiscreteTree {
        &self.tree
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.leaves += 1;
        let label = self.leaves as u32;
        let on_edges = self.edges.total();
        let u = rng.random::<f64>() * (on_edges + self.vertices.total());
        let site = if u < on_edges || self.vertices.total() <= 0.0 {
            let e = self.edges.find(u.min(on_edges));
            let old = self.edges.get(e);
            self.edges.set(e, self.gamma);
            self.edges.push(old);
            Site::Edge(e)
        } else {
            Site::Vertex(self.vertices.find(u - on_edges))
        };
        let j = insert_leaf(&mut self.tree, site, label)?;
        self.edges.push(1.0 - self.alpha);
        while self.vertices.len() < self.tree.node_count() {
            self.vertices.push(0.0);
        }
        self.vertices.set(j, alpha_gamma_vertex_weight(&self.alpha, &self.gamma, self.tree.degree(j)));
        Ok(())
    }
}

/// Discrete two-colour chain: unmarked and internal marked edges weigh β,
/// external marked edges 1 − 2β.
#[derive(Debug, Clone)]
pub struct DiscreteTwoColour {
    beta: f64,
    steps: usize,
    tree: DiscreteTree,
    edges: Fenwick,
    components: u32,
}

impl DiscreteTwoColour {
    /// T_0: root joined to leaf 0.
    pub fn new(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let mut edges = Fenwick::new();
        edges.push(beta);
        Ok(Self { beta, steps: 0, tree: DiscreteTree::single_edge(1.0, 0.0, 0), edges, components: 0 })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

impl Chain for DiscreteTwoColour {
    fn tree(&self) -> &DiscreteTree {
        &self.tree
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let e = self.edges.sample(rng);
        let old = self.edges.get(e);
        let comp = insert_two_colour(&mut self.tree, e, self.steps as u32 + 1, self.components)?;
        self.components = self.components.max(comp);
        self.edges.set(e, self.beta);
        self.edges.push(old);
        self.edges.push(1.0 - 2.0 * self.beta);
        self.edges.push(self.beta);
        self.steps += 1;
        Ok(())
    }
}

fn snapshots<C: Chain, R: Rng + ?Sized>(mut chain: C, steps: usize, rng: &mut R) -> Result<Vec<DiscreteTree>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(chain.tree().clone());
    for _ in 0..steps {
        chain.step(rng)?;
        out.push(chain.tree().clone());
    }
    Ok(out)
}

/// Marchal trees T_0, …, T_{n_max}.
pub fn marchal<R: Rng + ?Sized>(beta: f64, n_max: usize, rng: &mut R) -> Result<Vec<DiscreteTree>> {
    snapshots(Marchal::new(beta)?, n_max, rng)
}

/// Alpha-gamma trees T_1, …, T_{n_max}.
pub fn alpha_gamma<R: Rng + ?Sized>(alpha: f64, gamma: f64, n_max: usize, rng: &mut R) -> Result<Vec<DiscreteTree>> {
    if n_max == 0 {
        return domain("alpha-gamma trees start at n = 1");
    }
    snapshots(AlphaGamma::new(alpha, gamma)?, n_max - 1, rng)
}

/// Discrete two-colour trees T_0, …, T_{n_max}.
pub fn discrete_two_colour<R: Rng + ?Sized>(beta: f64, n_max: usize, rng: &mut R) -> Result<Vec<DiscreteTree>> {
    snapshots(DiscreteTwoColour::new(beta)?, n_max, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn total_marchal_weight(t: &DiscreteTree, beta: f64) -> f64 {
        let v: f64 = (0..t.node_count()).map(|v| marchal_vertex_weight(&beta, t.degree(v))).sum();
        v + beta * t.edge_count() as f64
    }

    #[test]
    fn marchal_total_weight_is_n_plus_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trees = marchal(0.3, 30, &mut rng).unwrap();
        for (n, t) in trees.iter().enumerate() {
            assert!((total_marchal_weight(t, 0.3) - (n as f64 + 0.3)).abs() < 1e-9);
            assert_eq!(t.leaves().len(), n + 1);
            t.check().unwrap();
        }
        let first = &trees[1];
        assert_eq!(first.edge_count(), 3);
    }

    #[test]
    fn marchal_half_is_binary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = marchal(0.5, 200, &mut rng).unwrap().pop().unwrap();
        assert!((1..t.node_count()).all(|v| t.degree(v) == 1 || t.degree(v) == 3));
    }

    #[test]
    fn alpha_gamma_total_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, g) = (0.6, 0.3);
        let trees = alpha_gamma(a, g, 25, &mut rng).unwrap();
        for (i, t) in trees.iter().enumerate() {
            let n = i + 1;
            let mut w: f64 = (0..t.node_count()).map(|v| alpha_gamma_vertex_weight(&a, &g, t.degree(v))).sum();
            w += (0..t.edge_count()).map(|e| alpha_gamma_edge_weight(&a, &g, is_external(t, e))).sum::<f64>();
            assert!((w - (n as f64 - a)).abs() < 1e-9);
            let labels: Vec<u32> = t.leaves().iter().map(|l| l.0).collect();
            assert_eq!(labels, (1..=n as u32).collect::<Vec<_>>());
        }
        assert!(AlphaGamma::new(0.3, 0.5).is_err());
    }

    #[test]
    fn discrete_two_colour_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let beta = 0.3;
        let trees = discrete_two_colour(beta, 40, &mut rng).unwrap();
        for (n, t) in trees.iter().enumerate() {
            assert_eq!(t.edge_count(), 3 * n + 1);
            t.check().unwrap();
            let w: f64 = (0..t.edge_count()).map(|e| two_colour_edge_weight(&beta, t.position(e))).sum();
            assert!((w - (n as f64 + beta)).abs() < 1e-9);
            let c = t.contract_marked();
            for &b in &c.branch_of_component {
                let v = c.tree.node(b);
                assert!(v.children.len() >= 2);
            }
        }
        let t = trees.last().unwrap();
        for v in 0..t.node_count() {
            let marked_kids = t.node(v).children.iter().filter(|&&e| t.edge(e).mark == Mark::Marked).count();
            assert!(marked_kids <= 2);
        }
    }
}
