use rand::Rng;

use super::{assign_lengths, check_beta, BranchRecord, Fenwick, GrowthState, StepLog, WeightedViewRecord};
use crate::beads::{uniform_atom_split, StringDescriptor, StringKind};
use crate::distributions::{ml, sample_beta, AlphaTheta};
use crate::error::Result;
use crate::rtree::{Branch, DiscreteTree, EdgeSpec, NodeId};

/// w(d) = (d − 3)(1 − β) + 1 − 2β.
pub fn w_degree(beta: f64, d: usize) -> f64 {
    (d as f64 - 3.0) * (1.0 - beta) + 1.0 - 2.0 * beta
}

/// Stable line-breaking with masses on edges and branch points.
///
/// Steps move mass only; [`StableMass::finish`] draws the lengths.
#[derive(Debug, Clone)]
pub struct StableMass {
    state: GrowthState,
    edges: Fenwick,
    atoms: Fenwick,
    log: Vec<StepLog>,
}

impl StableMass {
    pub fn new(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let tree = DiscreteTree::single_edge(0.0, 1.0, 0);
        let mut edges = Fenwick::new();
        edges.push(1.0);
        let mut atoms = Fenwick::new();
        atoms.push(0.0);
        atoms.push(0.0);
        Ok(Self { state: GrowthState::new(tree, beta), edges, atoms, log: Vec::new() })
    }

    /// Shape and masses so far; every length is 0 until
    /// [`StableMass::finish`].
    pub fn masses(&self) -> &GrowthState {
        &self.state
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let beta = self.state.beta;
        let k = self.state.step;
        let tree = &mut self.state.tree;
        let edges_before = tree.edge_count();
        let on_edges = self.edges.total();
        let u = rng.random::<f64>() * (on_edges + self.atoms.total());
        let (j, atom, created): (NodeId, f64, Option<usize>) = if u < on_edges || self.atoms.total() <= 0.0 {
            let e = self.edges.find(u.min(on_edges));
            let edge = tree.edge(e);
            let desc = StringDescriptor {
                kind: StringKind::AlphaTheta(AlphaTheta { alpha: beta, theta: beta }),
                mass: edge.mass,
                length: edge.length,
            };
            let split = uniform_atom_split(&desc, rng)?;
            let (j, atom) = tree.split_edge(e, split.length_frac_left, split.mass_fracs)?;
            self.edges.set(e, tree.edge(e).mass);
            self.edges.push(tree.edge(edges_before).mass);
            self.atoms.push(0.0);
            self.log.push(StepLog { edges_before, split: Some((e, edges_before)), stub: None });
            (j, atom, Some(edges_before))
        } else {
            let j = self.atoms.find(u - on_edges);
            self.log.push(StepLog { edges_before, split: None, stub: None });
            (j, tree.node(j).atom_mass, None)
        };
        let d = tree.degree(j);
        let q = sample_beta(beta, w_degree(beta, d) + 1.0 - beta, rng)?;
        let mass = q * atom;
        let new_edge = tree.attach_branch(j, Branch::plain(EdgeSpec::unmarked(0.0, mass), k as u32 + 1))?[0];
        self.edges.push(mass);
        self.atoms.push(0.0);
        let rest = (1.0 - q) * atom;
        tree.node_mut(j).atom_mass = rest;
        self.atoms.set(j, rest);
        if let Some(path_edge) = created {
            self.state.branch_points.push(BranchRecord { node: j, created_at: k + 1, path_edge, first_edge: new_edge });
        }
        self.state.step += 1;
        Ok(())
    }

    /// Current state with edge lengths m^β·ML(β, β) drawn.
    pub fn finish<R: Rng + ?Sized>(self, rng: &mut R) -> Result<GrowthState> {
        let mut state = self.state;
        let beta = state.beta;
        assign_lengths(&mut state, &self.log, |_, _| beta, &mut [], rng)?;
        Ok(state)
    }
}

/// State after `k` steps of the stable construction with masses.
pub fn stable_mass_state<R: Rng + ?Sized>(beta: f64, k: usize, rng: &mut R) -> Result<GrowthState> {
    let mut p = StableMass::new(beta)?;
    for _ in 0..k {
        p.step(rng)?;
    }
    p.finish(rng)
}

/// States after 0, 1, …, `k_max` steps of the stable construction with masses.
pub fn grow_stable_mass<R: Rng + ?Sized>(beta: f64, k_max: usize, rng: &mut R) -> Result<Vec<GrowthState>> {
    let mut p = StableMass::new(beta)?;
    let mut history = Vec::with_capacity(k_max + 1);
    for _ in 0..k_max {
        history.push(p.masses().clone());
        p.step(rng)?;
    }
    let mut last = p.state;
    assign_lengths(&mut last, &p.log, |_, _| beta, &mut history, rng)?;
    history.push(last);
    Ok(history)
}

/// Weighted tree at step k with lengths and weights drawn from masses:
/// edge length X^β·ML(β, β), branch-point weight X^β·ML(β, w(d)).
pub fn gh_marginal<R: Rng + ?Sized>(beta: f64, k: usize, rng: &mut R) -> Result<WeightedViewRecord> {
    let state = stable_mass_state(beta, k, rng)?;
    let tree = state.tree;
    let mut weights = Vec::with_capacity(state.branch_points.len());
    let mut branch_nodes = Vec::with_capacity(state.branch_points.len());
    for rec in &state.branch_points {
        let x = tree.node(rec.node).atom_mass;
        let w = w_degree(beta, tree.degree(rec.node));
        weights.push(if x > 0.0 && w > 0.0 { x.powf(beta) * ml(beta, w, rng)? } else { 0.0 });
        branch_nodes.push(rec.node);
    }
    let total_length = tree.total_length() + weights.iter().sum::<f64>();
    Ok(WeightedViewRecord { tree, weights, branch_nodes, total_length })
}
