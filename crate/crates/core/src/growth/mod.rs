//! Tree growth processes.
//!
//! The mass-based two-colour and stable constructions are the master
//! engines; length-based laws are read off them as views or drawn as
//! independent marginals.

mod discrete;
mod ford;
mod oracle;
mod recursive;
mod replace;
mod stable_mass;
mod two_colour;

pub use discrete::{alpha_gamma, discrete_two_colour, marchal, AlphaGamma, Chain, DiscreteTwoColour, Marchal};
pub use ford::{ford_lengths, ford_tree, grow_ford, FordShapes};
pub use oracle::{shape_prob_oracle, OracleModel, ORACLE_MAX_N, ORACLE_MAX_STATES};
pub use recursive::{recursive_construction, RecursiveTree, RECURSIVE_MAX_STRINGS};
pub use replace::{branch_point_replace, Replaced, REPLACE_DEFAULT_STICKS};
pub use stable_mass::{gh_marginal, grow_stable_mass, stable_mass_state, w_degree, StableMass};
pub use two_colour::{grow_two_colour, two_colour_state, weighted_view, TwoColour};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::fmt17;
use crate::rtree::{DiscreteTree, EdgeId, NodeId};

/// Column header of [`GrowthState::trajectory_row`].
pub const TRAJECTORY_HEADER: &str = "k,S_k,r_k,component_lengths";

/// Growth history of one marked component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub id: u32,
    /// Steps k_1 < k_2 < … at which the component received a new leaf.
    pub insertions: Vec<usize>,
    /// Component leaf Ω_m added at the m-th insertion.
    pub leaves: Vec<NodeId>,
    /// Component length after each insertion.
    pub lengths: Vec<f64>,
    /// Component mass after each insertion.
    pub masses: Vec<f64>,
}

impl ComponentRecord {
    pub fn created_at(&self) -> usize {
        self.insertions[0]
    }

    /// Number of leaves m_i.
    pub fn size(&self) -> usize {
        self.leaves.len()
    }

    pub fn length(&self) -> f64 {
        *self.lengths.last().expect("component has an insertion")
    }
}

/// A branch point created by splitting an edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub node: NodeId,
    pub created_at: usize,
    /// Lower piece of the split edge, leading to the older leaves.
    pub path_edge: EdgeId,
    /// Branch attached when the point was created.
    pub first_edge: EdgeId,
}

/// State of a growth process after `step` insertions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthState {
    pub tree: DiscreteTree,
    pub beta: f64,
    pub step: usize,
    /// Marked components in creation order; record i has id i + 1.
    pub components: Vec<ComponentRecord>,
    /// Branch points in creation order (one-colour mode).
    pub branch_points: Vec<BranchRecord>,
}

impl GrowthState {
    pub(crate) fn new(tree: DiscreteTree, beta: f64) -> Self {
        Self { tree, beta, step: 0, components: Vec::new(), branch_points: Vec::new() }
    }

    pub fn total_length(&self) -> f64 {
        self.tree.total_length()
    }

    /// r_k.
    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn component_lengths(&self) -> Vec<f64> {
        self.components.iter().map(ComponentRecord::length).collect()
    }

    /// Relative mass of the first subtree hung from a branch point, out of
    /// all mass off the path through it.
    pub fn first_fragment(&self, record: &BranchRecord) -> f64 {
        let t = &self.tree;
        let node = t.node(record.node);
        let off: f64 = node.children.iter().filter(|&&e| e != record.path_edge).map(|&e| t.subtree_mass(e)).sum();
        t.subtree_mass(record.first_edge) / (off + node.atom_mass)
    }

    pub fn trajectory_row(&self) -> String {
        let lengths: Vec<String> = self.component_lengths().into_iter().map(fmt17).collect();
        format!("{},{},{},{}", self.step, fmt17(self.total_length()), self.component_count(), lengths.join(";"))
    }
}

/// Contracted tree with branch-point weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedViewRecord {
    pub tree: DiscreteTree,
    /// Weight of each branch point, in creation order.
    pub weights: Vec<f64>,
    /// Node of `tree` carrying each weight.
    pub branch_nodes: Vec<NodeId>,
    /// S_k: edge lengths plus weights.
    pub total_length: f64,
}

impl WeightedViewRecord {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }
}

/// Edges touched by one mass step, enough to rewind edge lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StepLog {
    /// Edge count before the step.
    pub edges_before: usize,
    /// Root-side and lower pieces of a split edge.
    pub split: Option<(EdgeId, EdgeId)>,
    /// Marked stub and its component.
    pub stub: Option<(EdgeId, u32)>,
}

/// Draws every edge length of `state` from its mass as m^β·ML(β, θ_e), then
/// rewinds the lengths through `log` into the component records and into
/// `history`, which is either empty or holds the states before each step.
pub(crate) fn assign_lengths<R: rand::Rng + ?Sized>(
    state: &mut GrowthState,
    log: &[StepLog],
    theta: impl Fn(&DiscreteTree, EdgeId) -> f64,
    history: &mut [GrowthState],
    rng: &mut R,
) -> Result<()> {
    let beta = state.beta;
    let t = &mut state.tree;
    let mut len = Vec::with_capacity(t.edge_count());
    for e in 0..t.edge_count() {
        let m = t.edge(e).mass;
        len.push(if m > 0.0 { m.powf(beta) * crate::distributions::ml(beta, theta(t, e), rng)? } else { 0.0 });
    }
    let mut comp_len = vec![0.0; state.components.len()];
    for (e, &l) in len.iter().enumerate() {
        let edge = t.edge_mut(e);
        edge.length = l;
        if edge.mark == crate::rtree::Mark::Marked {
            comp_len[edge.component as usize - 1] += l;
        }
    }
    let mut left: Vec<usize> = state.components.iter().map(|r| r.lengths.len()).collect();
    for (s, entry) in log.iter().enumerate().rev() {
        if let Some((e, c)) = entry.stub {
            let i = c as usize - 1;
            left[i] -= 1;
            state.components[i].lengths[left[i]] = comp_len[i];
            comp_len[i] -= len[e];
        }
        if let Some((kept, piece)) = entry.split {
            len[kept] += len[piece];
        }
        len.truncate(entry.edges_before);
        if let Some(h) = history.get_mut(s) {
            for (e, &l) in len.iter().enumerate() {
                h.tree.edge_mut(e).length = l;
            }
        }
    }
    for h in history {
        for rec in &mut h.components {
            let done = &state.components[rec.id as usize - 1].lengths;
            let n = rec.lengths.len();
            rec.lengths.copy_from_slice(&done[..n]);
        }
    }
    Ok(())
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 0.5) {
        return domain(format!("beta = {beta} not in (0, 1/2]"));
    }
    Ok(())
}

/// Prefix-sum tree over nonnegative weights, for proportional selection.
#[derive(Debug, Clone, Default)]
pub(crate) struct Fenwick {
    sums: Vec<f64>,
    values: Vec<f64>,
}

impl Fenwick {
    pub fn new() -> Self {
        Self::default()
    }

    fn prefix(&self, mut i: usize) -> f64 {
        let mut s = 0.0;
        while i > 0 {
            s += self.sums[i - 1];
            i &= i - 1;
        }
        s
    }

    pub fn push(&mut self, w: f64) {
        let i = self.values.len() + 1;
        let low = i & i.wrapping_neg();
        let node = w + self.prefix(i - 1) - self.prefix(i - low);
        self.sums.push(node);
        self.values.push(w);
    }

    pub fn set(&mut self, index: usize, w: f64) {
        let delta = w - self.values[index];
        self.values[index] = w;
        let mut i = index + 1;
        while i <= self.sums.len() {
            self.sums[i - 1] += delta;
            i += i & i.wrapping_neg();
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.sums.len())
    }

    /// Index whose cumulative range contains `u`, skipping zero weights.
    pub fn find(&self, mut u: f64) -> usize {
        let n = self.sums.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.sums[next - 1] <= u {
                u -= self.sums[next - 1];
                pos = next;
            }
            step >>= 1;
        }
        let mut idx = pos.min(n - 1);
        while self.values[idx] <= 0.0 && idx > 0 {
            idx -= 1;
        }
        while self.values[idx] <= 0.0 && idx + 1 < n {
            idx += 1;
        }
        idx
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.find(rng.random::<f64>() * self.total())
    }
}
