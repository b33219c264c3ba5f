use rand::Rng;

use super::{assign_lengths, check_beta, ComponentRecord, Fenwick, GrowthState, StepLog, WeightedViewRecord};
use crate::beads::{coin_toss_split, draw_beta_mixed, uniform_atom_split, StringDescriptor, StringKind};
use crate::distributions::AlphaTheta;
use crate::error::Result;
use crate::rtree::{Branch, DiscreteTree, EdgeId, EdgeSpec, Mark, Position};

/// Two-colour line-breaking with masses.
///
/// Steps move mass only. Lengths are drawn by [`TwoColour::finish`] from
/// the final masses and summed back into earlier edges, which gives every
/// state its exact joint law of lengths and masses.
#[derive(Debug, Clone)]
pub struct TwoColour {
    state: GrowthState,
    masses: Fenwick,
    log: Vec<StepLog>,
}

fn string_theta(beta: f64, t: &DiscreteTree, e: EdgeId) -> f64 {
    if t.position(e) == Position::External {
        1.0 - 2.0 * beta
    } else {
        beta
    }
}

impl TwoColour {
    /// Step 0: one unmarked (β, β)-string of unit mass.
    pub fn new(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let tree = DiscreteTree::single_edge(0.0, 1.0, 0);
        let mut masses = Fenwick::new();
        masses.push(1.0);
        Ok(Self { state: GrowthState::new(tree, beta), masses, log: Vec::new() })
    }

    /// Shape, marks and masses so far; every length is 0 until
    /// [`TwoColour::finish`].
    pub fn masses(&self) -> &GrowthState {
        &self.state
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let beta = self.state.beta;
        let k = self.state.step;
        let tree = &mut self.state.tree;
        let edges_before = tree.edge_count();
        let e = self.masses.sample(rng);
        let edge = tree.edge(e).clone();
        let external = tree.position(e) == Position::External;
        let theta = if external { 1.0 - 2.0 * beta } else { beta };
        let desc = StringDescriptor {
            kind: StringKind::AlphaTheta(AlphaTheta { alpha: beta, theta }),
            mass: edge.mass,
            length: edge.length,
        };
        let split = if external { coin_toss_split(&desc, rng)? } else { uniform_atom_split(&desc, rng)? };
        let (j, atom) = tree.split_edge(e, split.length_frac_left, split.mass_fracs)?;
        self.masses.set(e, tree.edge(e).mass);
        self.masses.push(tree.edge(edges_before).mass);

        let comp = match edge.mark {
            Mark::Marked => edge.component,
            Mark::Unmarked => self.state.components.len() as u32 + 1,
        };
        let b = draw_beta_mixed(beta, rng)?.marked_mass_frac;
        let stub = EdgeSpec::marked(0.0, atom * b, comp);
        let tip = EdgeSpec::unmarked(0.0, atom * (1.0 - b));
        let branch = Branch { stub: (beta < 0.5).then_some(stub), tip, leaf: k as u32 + 1 };
        let created = tree.attach_branch(j, branch)?;
        for &c in &created {
            self.masses.push(tree.edge(c).mass);
        }
        let mut log = StepLog { edges_before, split: Some((e, edges_before)), stub: None };
        if created.len() == 2 {
            log.stub = Some((created[0], comp));
            let omega = tree.edge(created[0]).child;
            let step = k + 1;
            match self.state.components.get_mut(comp as usize - 1) {
                Some(rec) => {
                    rec.insertions.push(step);
                    rec.leaves.push(omega);
                    rec.lengths.push(0.0);
                    let before = *rec.masses.last().expect("nonempty");
                    rec.masses.push(before - atom + stub.mass);
                }
                None => self.state.components.push(ComponentRecord {
                    id: comp,
                    insertions: vec![step],
                    leaves: vec![omega],
                    lengths: vec![0.0],
                    masses: vec![stub.mass],
                }),
            }
        }
        self.log.push(log);
        self.state.step += 1;
        Ok(())
    }

    /// Current state with lengths drawn.
    pub fn finish<R: Rng + ?Sized>(self, rng: &mut R) -> Result<GrowthState> {
        let mut state = self.state;
        let beta = state.beta;
        assign_lengths(&mut state, &self.log, |t, e| string_theta(beta, t, e), &mut [], rng)?;
        Ok(state)
    }
}

/// State after `k` steps of the two-colour construction.
pub fn two_colour_state<R: Rng + ?Sized>(beta: f64, k: usize, rng: &mut R) -> Result<GrowthState> {
    let mut p = TwoColour::new(beta)?;
    for _ in 0..k {
        p.step(rng)?;
    }
    p.finish(rng)
}

/// States after 0, 1, …, `k_max` steps of the two-colour construction.
pub fn grow_two_colour<R: Rng + ?Sized>(beta: f64, k_max: usize, rng: &mut R) -> Result<Vec<GrowthState>> {
    let mut p = TwoColour::new(beta)?;
    let mut history = Vec::with_capacity(k_max + 1);
    for _ in 0..k_max {
        history.push(p.masses().clone());
        p.step(rng)?;
    }
    let mut last = p.state;
    assign_lengths(&mut last, &p.log, |t, e| string_theta(beta, t, e), &mut history, rng)?;
    history.push(last);
    Ok(history)
}

/// Contracts every marked component to a branch point weighted by its length.
pub fn weighted_view(state: &GrowthState) -> WeightedViewRecord {
    let c = state.tree.contract_marked();
    WeightedViewRecord {
        weights: state.component_lengths(),
        branch_nodes: c.branch_of_component,
        total_length: state.total_length(),
        tree: c.tree,
    }
}
