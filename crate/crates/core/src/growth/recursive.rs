use rand::Rng;

use super::check_beta;
use crate::beads::{coin_toss_split, draw_beta_mixed, StringDescriptor, StringKind};
use crate::distributions::{ml, AlphaTheta};
use crate::error::{capability, Result};
use crate::rtree::{DiscreteTree, EdgeId, EdgeSpec, Label, NodeId};

/// Largest number of strings a construction may create.
pub const RECURSIVE_MAX_STRINGS: usize = 1_000_000;

/// Truncated recursive construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveTree {
    pub tree: DiscreteTree,
    /// Total mass of the strings at each level.
    pub level_masses: Vec<f64>,
    /// Total length of the strings at each level.
    pub level_lengths: Vec<f64>,
    /// Mass carried by the deepest level, not expanded further.
    pub retained_mass: f64,
}

struct Builder {
    tree: DiscreteTree,
    kinds: Vec<AlphaTheta>,
    levels: Vec<usize>,
    next_leaf: u32,
}

impl Builder {
    fn push_edge(&mut self, at: NodeId, kind: AlphaTheta, level: usize, mass: f64, label: Label) -> (EdgeId, NodeId) {
        self.kinds.push(kind);
        self.levels.push(level);
        self.tree.add_child(at, EdgeSpec::unmarked(0.0, mass), label)
    }

    fn leaf(&mut self) -> Label {
        self.next_leaf += 1;
        Label::Leaf(self.next_leaf - 1)
    }

    /// β-mixed string of mass `mass` hung from `at`.
    fn mixed_string<R: Rng + ?Sized>(
        &mut self,
        beta: f64,
        level: usize,
        at: NodeId,
        mass: f64,
        rng: &mut R,
    ) -> Result<Vec<EdgeId>> {
        let draw = draw_beta_mixed(beta, rng)?;
        let b = draw.marked_mass_frac;
        let mut edges = Vec::with_capacity(2);
        let mut from = at;
        if b > 0.0 {
            let (e, v) = self.push_edge(at, draw.marked_kind(), level, mass * b, Label::Internal);
            edges.push(e);
            from = v;
        }
        let label = self.leaf();
        let (e, _) = self.push_edge(from, draw.unmarked_kind(), level, mass * (1.0 - b), label);
        edges.push(e);
        Ok(edges)
    }

    /// Picks one atom of the string by mass; returns its node and mass.
    fn pick_atom<R: Rng + ?Sized>(&mut self, string: &mut Vec<EdgeId>, rng: &mut R) -> Result<Option<(NodeId, f64)>> {
        let total: f64 = string.iter().map(|&e| self.tree.edge(e).mass).sum();
        if total <= 0.0 {
            return Ok(None);
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = *string.last().expect("nonempty string");
        for &e in string.iter() {
            let m = self.tree.edge(e).mass;
            if u < m {
                pick = e;
                break;
            }
            u -= m;
        }
        let edge = self.tree.edge(pick);
        let desc =
            StringDescriptor { kind: StringKind::AlphaTheta(self.kinds[pick]), mass: edge.mass, length: edge.length };
        let split = coin_toss_split(&desc, rng)?;
        let (j, atom) = self.tree.split_edge(pick, split.length_frac_left, split.mass_fracs)?;
        self.kinds[pick] = split.left_kind;
        self.kinds.push(split.right_kind);
        self.levels.push(self.levels[pick]);
        string.push(self.tree.edge_count() - 1);
        Ok(Some((j, atom)))
    }
}

/// Root (β, β)-string, then `depth` levels of β-mixed strings grafted at the
/// first `atoms_per_string` size-biased atoms of every string. Lengths are
/// drawn at the end from the final masses and string kinds.
pub fn recursive_construction<R: Rng + ?Sized>(
    beta: f64,
    depth: usize,
    atoms_per_string: usize,
    rng: &mut R,
) -> Result<RecursiveTree> {
    check_beta(beta)?;
    if depth > 6 || atoms_per_string > 20 {
        return capability(format!(
            "recursive construction limited to depth 6 and 20 atoms, got ({depth}, {atoms_per_string})"
        ));
    }
    let strings: usize = (0..=depth as u32).map(|l| atoms_per_string.saturating_pow(l)).sum();
    if strings > RECURSIVE_MAX_STRINGS {
        return capability(format!("recursive construction would create {strings} strings"));
    }

    let mut b = Builder { tree: DiscreteTree::new(), kinds: Vec::new(), levels: Vec::new(), next_leaf: 0 };
    let root_kind = AlphaTheta::new(beta, beta)?;
    let label = b.leaf();
    let (e, _) = b.push_edge(0, root_kind, 0, 1.0, label);
    let mut level = vec![vec![e]];
    let mut level_masses = vec![1.0];

    for d in 1..=depth {
        let mut next = Vec::new();
        for string in &mut level {
            for _ in 0..atoms_per_string {
                let Some((j, atom)) = b.pick_atom(string, rng)? else { break };
                if atom > 0.0 {
                    next.push(b.mixed_string(beta, d, j, atom, rng)?);
                }
            }
        }
        let t = &b.tree;
        level_masses.push(next.iter().flatten().map(|&e| t.edge(e).mass).sum());
        level = next;
    }
    let mut level_lengths = vec![0.0; depth + 1];
    for e in 0..b.tree.edge_count() {
        let m = b.tree.edge(e).mass;
        let length = if m > 0.0 { m.powf(beta) * ml(b.kinds[e].alpha, b.kinds[e].theta, rng)? } else { 0.0 };
        b.tree.edge_mut(e).length = length;
        level_lengths[b.levels[e]] += length;
    }
    let retained_mass = *level_masses.last().expect("root level");
    Ok(RecursiveTree { tree: b.tree, level_masses, level_lengths, retained_mass })
}
