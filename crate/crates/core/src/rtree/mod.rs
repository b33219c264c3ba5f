//! Finite rooted ℝ-trees with per-edge length, mass, mark and component.
//!
//! Node 0 is the root. Every other node has exactly one parent edge; edge
//! ids and node ids are stable under all mutations.

mod io;
mod ops;

pub use io::{export, import, Format};
pub use ops::{ContractedTree, ShapeKey};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mark {
    Unmarked,
    Marked,
}

/// Position of an edge within its marked component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Position {
    Internal,
    External,
    Unmarked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Root,
    Leaf(u32),
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub parent: Option<EdgeId>,
    pub children: Vec<EdgeId>,
    pub label: Label,
    pub atom_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub parent: NodeId,
    pub child: NodeId,
    pub length: f64,
    pub mass: f64,
    pub mark: Mark,
    /// Component id (1-based) of a marked edge; 0 when unmarked.
    pub component: u32,
}

/// Annotations of an edge to be created.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub length: f64,
    pub mass: f64,
    pub mark: Mark,
    pub component: u32,
}

impl EdgeSpec {
    pub fn unmarked(length: f64, mass: f64) -> Self {
        Self { length, mass, mark: Mark::Unmarked, component: 0 }
    }

    pub fn marked(length: f64, mass: f64, component: u32) -> Self {
        Self { length, mass, mark: Mark::Marked, component }
    }
}

/// A branch hung from an existing node: an optional marked stub followed by
/// an unmarked tip ending at a new leaf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub stub: Option<EdgeSpec>,
    pub tip: EdgeSpec,
    pub leaf: u32,
}

impl Branch {
    pub fn plain(tip: EdgeSpec, leaf: u32) -> Self {
        Self { stub: None, tip, leaf }
    }

    /// Marked stub plus unmarked tip; a stub with zero length and mass is dropped.
    pub fn two_segment(stub: EdgeSpec, tip: EdgeSpec, leaf: u32) -> Self {
        let stub = (stub.length > 0.0 || stub.mass > 0.0).then_some(stub);
        Self { stub, tip, leaf }
    }
}

/// Arena representation of a rooted finite tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTree {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl Default for DiscreteTree {
    fn default() -> Self {
        Self::new()
    }
}

impl DiscreteTree {
    /// A tree consisting of the root alone.
    pub fn new() -> Self {
        Self {
            nodes: vec![Node { parent: None, children: Vec::new(), label: Label::Root, atom_mass: 0.0 }],
            edges: Vec::new(),
        }
    }

    /// Root joined to leaf `label` by one unmarked edge.
    pub fn single_edge(length: f64, mass: f64, label: u32) -> Self {
        let mut t = Self::new();
        t.add_child(0, EdgeSpec::unmarked(length, mass), Label::Leaf(label));
        t
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn edge_mut(&mut self, id: EdgeId) -> &mut Edge {
        &mut self.edges[id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Degree counting the parent edge.
    pub fn degree(&self, id: NodeId) -> usize {
        let n = &self.nodes[id];
        n.children.len() + usize::from(n.parent.is_some())
    }

    /// Adds a child of `parent` and returns (edge, node).
    pub fn add_child(&mut self, parent: NodeId, spec: EdgeSpec, label: Label) -> (EdgeId, NodeId) {
        let child = self.nodes.len();
        let edge = self.edges.len();
        self.nodes.push(Node { parent: Some(edge), children: Vec::new(), label, atom_mass: 0.0 });
        self.edges.push(Edge {
            parent,
            child,
            length: spec.length,
            mass: spec.mass,
            mark: spec.mark,
            component: spec.component,
        });
        self.nodes[parent].children.push(edge);
        (edge, child)
    }

    /// Splits `edge` at an atom. The root-side piece keeps the edge id.
    /// Returns the new node and the atom mass removed from the edge.
    pub fn split_edge(&mut self, edge: EdgeId, length_frac: f64, mass_fracs: [f64; 3]) -> Result<(NodeId, f64)> {
        if edge >= self.edges.len() {
            return domain(format!("no edge {edge}"));
        }
        if !(0.0..=1.0).contains(&length_frac)
            || mass_fracs.iter().any(|f| !(*f >= 0.0))
            || (mass_fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return domain(format!("invalid split fractions {length_frac}, {mass_fracs:?}"));
        }
        let e = self.edges[edge].clone();
        let lower = EdgeSpec {
            length: e.length * (1.0 - length_frac),
            mass: e.mass * mass_fracs[2],
            mark: e.mark,
            component: e.component,
        };
        let mid = self.nodes.len();
        let new_edge = self.edges.len();
        self.nodes.push(Node { parent: Some(edge), children: vec![new_edge], label: Label::Internal, atom_mass: 0.0 });
        self.edges.push(Edge {
            parent: mid,
            child: e.child,
            length: lower.length,
            mass: lower.mass,
            mark: lower.mark,
            component: lower.component,
        });
        self.nodes[e.child].parent = Some(new_edge);
        let up = &mut self.edges[edge];
        up.child = mid;
        up.length = e.length * length_frac;
        up.mass = e.mass * mass_fracs[0];
        Ok((mid, e.mass * mass_fracs[1]))
    }

    /// Hangs `branch` from `node`; returns the ids of the created edges.
    pub fn attach_branch(&mut self, node: NodeId, branch: Branch) -> Result<Vec<EdgeId>> {
        if node >= self.nodes.len() {
            return domain(format!("no node {node}"));
        }
        let mut created = Vec::with_capacity(2);
        let mut at = node;
        if let Some(stub) = branch.stub {
            let (e, n) = self.add_child(at, stub, Label::Internal);
            created.push(e);
            at = n;
        }
        let (e, _) = self.add_child(at, branch.tip, Label::Leaf(branch.leaf));
        created.push(e);
        Ok(created)
    }

    /// Position of an edge within its marked component.
    pub fn position(&self, edge: EdgeId) -> Position {
        let e = &self.edges[edge];
        if e.mark == Mark::Unmarked {
            return Position::Unmarked;
        }
        let continues = self.nodes[e.child]
            .children
            .iter()
            .any(|&c| self.edges[c].mark == Mark::Marked && self.edges[c].component == e.component);
        if continues {
            Position::Internal
        } else {
            Position::External
        }
    }

    /// Node carrying leaf label `label`.
    pub fn leaf_node(&self, label: u32) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.label == Label::Leaf(label))
    }

    /// Leaf (label, node) pairs sorted by label.
    pub fn leaves(&self) -> Vec<(u32, NodeId)> {
        let mut out: Vec<(u32, NodeId)> = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.label {
                Label::Leaf(l) => Some((l, i)),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn component_length(&self, component: u32) -> f64 {
        self.edges.iter().filter(|e| e.mark == Mark::Marked && e.component == component).map(|e| e.length).sum()
    }

    pub fn component_mass(&self, component: u32) -> f64 {
        self.edges.iter().filter(|e| e.mark == Mark::Marked && e.component == component).map(|e| e.mass).sum()
    }

    /// Largest component id in use.
    pub fn component_count(&self) -> u32 {
        self.edges.iter().filter(|e| e.mark == Mark::Marked).map(|e| e.component).max().unwrap_or(0)
    }

    /// Edge masses plus node atoms.
    pub fn total_mass(&self) -> f64 {
        self.edges.iter().map(|e| e.mass).sum::<f64>() + self.nodes.iter().map(|n| n.atom_mass).sum::<f64>()
    }

    /// Mass of the subtree below `edge`, the edge included.
    pub fn subtree_mass(&self, edge: EdgeId) -> f64 {
        let mut total = 0.0;
        let mut stack = vec![edge];
        while let Some(e) = stack.pop() {
            let edge = &self.edges[e];
            total += edge.mass + self.nodes[edge.child].atom_mass;
            stack.extend(self.nodes[edge.child].children.iter().copied());
        }
        total
    }

    /// Nodes in depth-first pre-order from the root.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            out.push(v);
            for &e in self.nodes[v].children.iter().rev() {
                stack.push(self.edges[e].child);
            }
        }
        out
    }

    /// Distance from the root to every node.
    pub fn depths(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nodes.len()];
        for v in self.preorder() {
            for &e in &self.nodes[v].children {
                d[self.edges[e].child] = d[v] + self.edges[e].length;
            }
        }
        d
    }

    /// Distance from `source` to every node.
    pub fn distances_from(&self, source: NodeId) -> Vec<f64> {
        let mut d = vec![f64::NAN; self.nodes.len()];
        d[source] = 0.0;
        let mut stack = vec![source];
        while let Some(v) = stack.pop() {
            let node = &self.nodes[v];
            let parent = node.parent.map(|e| (self.edges[e].parent, self.edges[e].length));
            let kids = node.children.iter().map(|&e| (self.edges[e].child, self.edges[e].length));
            for (w, len) in parent.into_iter().chain(kids) {
                if d[w].is_nan() {
                    d[w] = d[v] + len;
                    stack.push(w);
                }
            }
        }
        d
    }

    /// Symmetric matrix of distances among the root (index 0) and the leaves
    /// in label order.
    pub fn leaf_matrix(&self) -> Vec<Vec<f64>> {
        let mut points = vec![0];
        points.extend(self.leaves().into_iter().map(|(_, n)| n));
        let mut m: Vec<Vec<f64>> = points
            .iter()
            .map(|&p| {
                let d = self.distances_from(p);
                points.iter().map(|&q| d[q]).collect()
            })
            .collect();
        for i in 0..m.len() {
            for j in 0..i {
                m[i][j] = m[j][i];
            }
        }
        m
    }

    /// Structural invariants; returns a description of the first violation.
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.nodes[0].parent.is_some() || self.nodes[0].label != Label::Root {
            return Err("root must have no parent and the root label".into());
        }
        for (i, e) in self.edges.iter().enumerate() {
            if self.nodes[e.child].parent != Some(i) {
                return Err(format!("edge {i} child does not point back"));
            }
            if !self.nodes[e.parent].children.contains(&i) {
                return Err(format!("edge {i} missing from parent's children"));
            }
            if !(e.length >= 0.0 && e.mass >= 0.0) {
                return Err(format!("edge {i} has negative annotation"));
            }
            if (e.mark == Mark::Marked) != (e.component > 0) {
                return Err(format!("edge {i} mark/component mismatch"));
            }
        }
        if self.preorder().len() != self.nodes.len() {
            return Err("nodes unreachable from the root".into());
        }
        for c in 1..=self.component_count() {
            let tops = self
                .edges
                .iter()
                .filter(|e| e.mark == Mark::Marked && e.component == c)
                .filter(|e| match self.nodes[e.parent].parent {
                    Some(p) => !(self.edges[p].mark == Mark::Marked && self.edges[p].component == c),
                    None => true,
                })
                .count();
            if tops != 1 {
                return Err(format!("component {c} is not a connected subtree ({tops} tops)"));
            }
        }
        Ok(())
    }
}

/// Convenience alias for the concrete tree type.
pub type Tree = DiscreteTree;
