use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{DiscreteTree, EdgeId, EdgeSpec, Label, Mark, NodeId, Position};
use crate::error::{domain, Result};

/// Canonical encoding of a tree shape.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ShapeKey(pub String);

impl std::fmt::Display for ShapeKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Result of collapsing each marked component to a single node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractedTree {
    pub tree: DiscreteTree,
    /// Node of the contracted tree standing for component c at index c − 1.
    pub branch_of_component: Vec<NodeId>,
}

impl DiscreteTree {
    /// Shape key with leaf labels, marks and component ids.
    pub fn shape_key(&self) -> ShapeKey {
        ShapeKey(self.encode(0, true))
    }

    /// Shape key with marks only.
    pub fn unlabeled_shape_key(&self) -> ShapeKey {
        ShapeKey(self.encode(0, false))
    }

    fn encode(&self, v: NodeId, labeled: bool) -> String {
        let node = self.node(v);
        if let Label::Leaf(l) = node.label {
            if node.children.is_empty() {
                return if labeled { l.to_string() } else { "*".into() };
            }
        }
        let mut parts: Vec<String> = node
            .children
            .iter()
            .map(|&e| {
                let edge = self.edge(e);
                let prefix = match (edge.mark, labeled) {
                    (Mark::Unmarked, _) => String::new(),
                    (Mark::Marked, true) => format!("m{}:", edge.component),
                    (Mark::Marked, false) => "m:".into(),
                };
                prefix + &self.encode(edge.child, labeled)
            })
            .collect();
        parts.sort_unstable();
        format!("({})", parts.join(","))
    }

    /// Smallest leaf label in the subtree of every node (`u32::MAX` if none).
    pub fn min_labels(&self) -> Vec<u32> {
        let mut m = vec![u32::MAX; self.node_count()];
        for &v in self.preorder().iter().rev() {
            let node = self.node(v);
            if let Label::Leaf(l) = node.label {
                m[v] = m[v].min(l);
            }
            for &e in &node.children {
                m[v] = m[v].min(m[self.edge(e).child]);
            }
        }
        m
    }

    /// Depth-first edge order visiting children by least leaf label, with
    /// external marked edges moved to the end.
    pub fn edge_order_dfs(&self) -> Vec<EdgeId> {
        let mins = self.min_labels();
        let mut order = Vec::with_capacity(self.edge_count());
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            let mut kids = self.node(v).children.clone();
            kids.sort_by_key(|&e| (mins[self.edge(e).child], e));
            for &e in kids.iter().rev() {
                stack.push(self.edge(e).child);
            }
            if let Some(p) = self.node(v).parent {
                order.push(p);
            }
        }
        let (mut first, last): (Vec<EdgeId>, Vec<EdgeId>) =
            order.into_iter().partition(|&e| self.position(e) != Position::External);
        first.extend(last);
        first
    }

    /// Collapses every marked component to one node; marked masses become
    /// that node's atom.
    pub fn contract_marked(&self) -> ContractedTree {
        let mut out = DiscreteTree::new();
        out.node_mut(0).atom_mass = self.node(0).atom_mass;
        let mut class = vec![0; self.node_count()];
        for v in self.preorder().into_iter().skip(1) {
            let e = self.node(v).parent.expect("non-root node has a parent");
            let edge = self.edge(e);
            let up = class[edge.parent];
            if edge.mark == Mark::Marked {
                class[v] = up;
                out.node_mut(up).atom_mass += edge.mass;
            } else {
                let (_, w) = out.add_child(up, EdgeSpec::unmarked(edge.length, edge.mass), self.node(v).label);
                class[v] = w;
            }
            out.node_mut(class[v]).atom_mass += self.node(v).atom_mass;
        }
        let r = self.component_count() as usize;
        let mut branch_of_component = vec![0; r];
        for edge in self.edges().iter().filter(|e| e.mark == Mark::Marked) {
            branch_of_component[edge.component as usize - 1] = class[edge.parent];
        }
        ContractedTree { tree: out, branch_of_component }
    }

    /// Subtree spanned by the root and the leaves with the given labels.
    /// Pruned mass is projected onto attachment points; massless degree-2
    /// nodes between unmarked edges are suppressed.
    pub fn reduce(&self, labels: &[u32]) -> Result<DiscreteTree> {
        let mut keep = vec![false; self.node_count()];
        keep[0] = true;
        for &l in labels {
            let mut v = match self.leaf_node(l) {
                Some(v) => v,
                None => return domain(format!("no leaf labelled {l}")),
            };
            while !keep[v] {
                keep[v] = true;
                v = self.edge(self.node(v).parent.expect("non-root")).parent;
            }
        }
        let wanted: BTreeSet<u32> = labels.iter().copied().collect();
        let mut pruned = DiscreteTree::new();
        let mut map = vec![usize::MAX; self.node_count()];
        map[0] = 0;
        for v in self.preorder() {
            if !keep[v] {
                continue;
            }
            let w = map[v];
            pruned.node_mut(w).atom_mass += self.node(v).atom_mass;
            for &e in &self.node(v).children {
                let edge = self.edge(e);
                if keep[edge.child] {
                    let label = match self.node(edge.child).label {
                        Label::Leaf(l) if wanted.contains(&l) => Label::Leaf(l),
                        _ => Label::Internal,
                    };
                    let spec =
                        EdgeSpec { length: edge.length, mass: edge.mass, mark: edge.mark, component: edge.component };
                    map[edge.child] = pruned.add_child(w, spec, label).1;
                } else {
                    pruned.node_mut(w).atom_mass += self.subtree_mass(e);
                }
            }
        }
        Ok(pruned.suppress_degree_two())
    }

    /// Copy with massless unmarked degree-2 chains merged into single edges.
    pub fn suppress_degree_two(&self) -> DiscreteTree {
        let mut out = DiscreteTree::new();
        out.node_mut(0).atom_mass = self.node(0).atom_mass;
        let mut stack = vec![(0, 0)];
        while let Some((v, w)) = stack.pop() {
            for &e in &self.node(v).children {
                let mut edge = self.edge(e).clone();
                loop {
                    let c = self.node(edge.child);
                    let passable = c.label == Label::Internal
                        && c.children.len() == 1
                        && c.atom_mass == 0.0
                        && edge.mark == Mark::Unmarked
                        && self.edge(c.children[0]).mark == Mark::Unmarked;
                    if !passable {
                        break;
                    }
                    let next = self.edge(c.children[0]);
                    edge.length += next.length;
                    edge.mass += next.mass;
                    edge.child = next.child;
                }
                let spec =
                    EdgeSpec { length: edge.length, mass: edge.mass, mark: edge.mark, component: edge.component };
                let (_, x) = out.add_child(w, spec, self.node(edge.child).label);
                out.node_mut(x).atom_mass = self.node(edge.child).atom_mass;
                stack.push((edge.child, x));
            }
        }
        out
    }

    /// Top edge of a marked component.
    pub fn component_top(&self, component: u32) -> Option<EdgeId> {
        self.edges().iter().position(|e| {
            e.mark == Mark::Marked
                && e.component == component
                && self.node(e.parent).parent.is_none_or(|p| {
                    let up = self.edge(p);
                    !(up.mark == Mark::Marked && up.component == component)
                })
        })
    }

    /// Component `component` as a standalone unmarked tree rooted at its
    /// attachment point; `leaf_order[j]` becomes leaf j + 1.
    pub fn component_tree(&self, component: u32, leaf_order: &[NodeId]) -> Result<DiscreteTree> {
        let Some(top) = self.component_top(component) else {
            return domain(format!("no component {component}"));
        };
        let mut out = DiscreteTree::new();
        let mut stack = vec![(top, 0)];
        let mut seen = 0;
        while let Some((e, w)) = stack.pop() {
            let edge = self.edge(e);
            let label = match leaf_order.iter().position(|&n| n == edge.child) {
                Some(j) => {
                    seen += 1;
                    Label::Leaf(j as u32 + 1)
                }
                None => Label::Internal,
            };
            let (_, x) = out.add_child(w, EdgeSpec::unmarked(edge.length, edge.mass), label);
            for &c in &self.node(edge.child).children {
                let ce = self.edge(c);
                if ce.mark == Mark::Marked && ce.component == component {
                    stack.push((c, x));
                }
            }
        }
        if seen != leaf_order.len() {
            return domain(format!("leaf order does not match component {component}"));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::super::Branch;
    use super::*;

    /// Root edge split once, with a marked stub and tip hanging off.
    fn two_colour_k1() -> DiscreteTree {
        let mut t = DiscreteTree::single_edge(2.0, 0.5, 0);
        let (mid, _) = t.split_edge(0, 0.5, [0.5, 0.0, 0.5]).unwrap();
        t.attach_branch(mid, Branch::two_segment(EdgeSpec::marked(0.5, 0.3, 1), EdgeSpec::unmarked(1.5, 0.2), 1))
            .unwrap();
        t
    }

    #[test]
    fn shape_key_ignores_ids() {
        let mut a = DiscreteTree::new();
        let (_, x) = a.add_child(0, EdgeSpec::unmarked(1.0, 0.0), Label::Internal);
        a.add_child(x, EdgeSpec::unmarked(1.0, 0.0), Label::Leaf(0));
        a.add_child(x, EdgeSpec::unmarked(1.0, 0.0), Label::Leaf(1));
        let mut b = DiscreteTree::new();
        let (_, y) = b.add_child(0, EdgeSpec::unmarked(3.0, 0.0), Label::Internal);
        b.add_child(y, EdgeSpec::unmarked(1.0, 0.0), Label::Leaf(1));
        b.add_child(y, EdgeSpec::unmarked(2.0, 0.0), Label::Leaf(0));
        assert_eq!(a.shape_key(), b.shape_key());
        assert_eq!(a.shape_key().0, "((0,1))");
        assert_eq!(a.unlabeled_shape_key().0, "((*,*))");
    }

    #[test]
    fn dfs_order_puts_external_marked_last() {
        let t = two_colour_k1();
        let order = t.edge_order_dfs();
        assert_eq!(order.len(), 4);
        assert_eq!(t.position(*order.last().unwrap()), Position::External);
        assert_eq!(DiscreteTree::single_edge(1.0, 1.0, 0).edge_order_dfs(), vec![0]);
    }

    #[test]
    fn contraction_removes_marked_length() {
        let t = two_colour_k1();
        let c = t.contract_marked();
        assert!((c.tree.total_length() - (t.total_length() - t.component_length(1))).abs() < 1e-12);
        assert_eq!(c.branch_of_component.len(), 1);
        assert_eq!(c.tree.degree(c.branch_of_component[0]), 3);
        assert!((c.tree.total_mass() - t.total_mass()).abs() < 1e-12);
        let plain = DiscreteTree::single_edge(1.0, 1.0, 0);
        assert_eq!(plain.contract_marked().tree, plain);
    }

    #[test]
    fn reduce_projects_mass_and_suppresses() {
        let t = two_colour_k1();
        let all = t.reduce(&[0, 1]).unwrap();
        assert_eq!(all.leaf_matrix(), t.leaf_matrix());
        let one = t.reduce(&[0]).unwrap();
        assert!((one.total_length() - 2.0).abs() < 1e-12);
        assert!((one.total_mass() - t.total_mass()).abs() < 1e-12);
        assert!(t.reduce(&[5]).is_err());
    }

    #[test]
    fn component_tree_is_planted() {
        let t = two_colour_k1();
        let leaf = t.edge(t.component_top(1).unwrap()).child;
        let c = t.component_tree(1, &[leaf]).unwrap();
        assert_eq!(c.edge_count(), 1);
        assert_eq!(c.shape_key().0, "(1)");
    }
}
