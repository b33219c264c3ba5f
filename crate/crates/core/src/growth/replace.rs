use rand::Rng;

use super::{ford_tree, GrowthState};
use crate::distributions::{alpha_diversity, gem_continue, AlphaTheta, MassOrder};
use crate::error::{domain, Result};
use crate::rtree::{DiscreteTree, EdgeId, EdgeSpec, Label, NodeId};

/// Default number of sticks used to estimate each diversity.
pub const REPLACE_DEFAULT_STICKS: usize = 10_000;

/// Two-colour tree obtained by replacing branch points with Ford trees.
#[derive(Debug, Clone, PartialEq)]
pub struct Replaced {
    pub tree: DiscreteTree,
    /// Length scale (C^{(i)})^{-1} applied to the Ford tree of branch point i.
    pub scales: Vec<f64>,
    /// Truncated diversity estimate D^{(i)}.
    pub diversities: Vec<f64>,
    /// Fragment mass left after the N sticks, relative to P^{(i)}.
    pub residuals: Vec<f64>,
}

/// Replaces every branch point of a stable state (with masses) by a scaled
/// Ford tree whose edges form marked component i + 1.
pub fn branch_point_replace<R: Rng + ?Sized>(state: &GrowthState, n_sticks: usize, rng: &mut R) -> Result<Replaced> {
    if n_sticks < 10 {
        return domain(format!("need at least 10 sticks, got {n_sticks}"));
    }
    let beta = state.beta;
    let t = &state.tree;
    let count = state.branch_points.len();
    let mut out = Replaced {
        tree: t.clone(),
        scales: Vec::with_capacity(count),
        diversities: Vec::with_capacity(count),
        residuals: Vec::with_capacity(count),
    };
    if beta >= 0.5 || count == 0 {
        return Ok(out);
    }
    let beta_prime = beta / (1.0 - beta);
    let gem = AlphaTheta::new(1.0 - beta, -beta)?;

    let mut fords: Vec<Option<(DiscreteTree, Vec<EdgeId>)>> = vec![None; t.node_count()];
    for (i, rec) in state.branch_points.iter().enumerate() {
        let node = t.node(rec.node);
        let off: Vec<EdgeId> = node.children.iter().copied().filter(|&e| e != rec.path_edge).collect();
        let m = off.len();
        let masses: Vec<f64> = off.iter().map(|&e| t.subtree_mass(e)).collect();
        let p = node.atom_mass + masses.iter().sum::<f64>();
        let mut fracs: Vec<f64> = masses.iter().map(|x| x / p).collect();
        let rest = node.atom_mass / p;
        if n_sticks > m {
            fracs.extend(gem_continue(gem, m, rest, n_sticks - m, rng)?);
        }
        let residual = (1.0 - fracs.iter().sum::<f64>()).max(0.0);
        let d = alpha_diversity(&fracs, 1.0 - beta, MassOrder::Stick)?.value;
        let scale = p.powf(beta) * d.powf(beta / (1.0 - beta));
        let mut ford = ford_tree(beta_prime, m, rng)?;
        for e in 0..ford.edge_count() {
            let edge = ford.edge_mut(e);
            edge.length *= scale;
            edge.mark = crate::rtree::Mark::Marked;
            edge.component = i as u32 + 1;
        }
        fords[rec.node] = Some((ford, off));
        out.scales.push(scale);
        out.diversities.push(d);
        out.residuals.push(residual);
    }

    let mut tree = DiscreteTree::new();
    tree.node_mut(0).atom_mass = t.node(0).atom_mass;
    let mut stack: Vec<(NodeId, NodeId)> = vec![(0, 0)];
    let copy = |tree: &mut DiscreteTree, e: EdgeId, at: NodeId, stack: &mut Vec<(NodeId, NodeId)>| {
        let edge = t.edge(e);
        let spec = EdgeSpec { length: edge.length, mass: edge.mass, mark: edge.mark, component: edge.component };
        let (_, x) = tree.add_child(at, spec, t.node(edge.child).label);
        tree.node_mut(x).atom_mass = t.node(edge.child).atom_mass;
        stack.push((edge.child, x));
    };
    while let Some((u, w)) = stack.pop() {
        match &fords[u] {
            None => {
                for &e in &t.node(u).children {
                    copy(&mut tree, e, w, &mut stack);
                }
            }
            Some((ford, off)) => {
                for &e in t.node(u).children.iter().filter(|e| !off.contains(e)) {
                    copy(&mut tree, e, w, &mut stack);
                }
                let mut map = vec![usize::MAX; ford.node_count()];
                map[0] = w;
                for f in ford.preorder() {
                    for &fe in &ford.node(f).children {
                        let edge = ford.edge(fe);
                        let spec =
                            EdgeSpec { length: edge.length, mass: 0.0, mark: edge.mark, component: edge.component };
                        let (_, x) = tree.add_child(map[f], spec, Label::Internal);
                        map[edge.child] = x;
                        if let Label::Leaf(j) = ford.node(edge.child).label {
                            copy(&mut tree, off[j as usize - 1], x, &mut stack);
                        }
                    }
                }
            }
        }
    }
    out.tree = tree;
    Ok(out)
}
