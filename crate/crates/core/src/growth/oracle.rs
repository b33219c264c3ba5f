//! Exact shape laws of the discrete chains by enumeration.

use std::collections::BTreeMap;

use super::discrete::{
    alpha_gamma_edge_weight, alpha_gamma_vertex_weight, insert_leaf, insert_two_colour, is_external,
    marchal_vertex_weight, two_colour_edge_weight, Site,
};
use crate::error::{capability, domain, Result};
use crate::rtree::{DiscreteTree, ShapeKey};
use crate::scalar::Exact;

/// Largest n accepted by [`shape_prob_oracle`].
pub const ORACLE_MAX_N: usize = 8;
/// Largest number of distinct states kept at any step.
pub const ORACLE_MAX_STATES: usize = 200_000;

/// Shape chain whose law is enumerated.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleModel<F> {
    /// n counts insertions after T_0.
    Marchal { beta: F },
    /// n counts leaves.
    AlphaGamma { alpha: F, gamma: F },
    /// n counts insertions after T_0.
    TwoColour { beta: F },
}

impl<F: Exact> OracleModel<F> {
    fn validate(&self) -> Result<()> {
        let half = F::from_ratio(1, 2);
        let ok = match self {
            OracleModel::Marchal { beta } | OracleModel::TwoColour { beta } => *beta > F::zero() && *beta <= half,
            OracleModel::AlphaGamma { alpha, gamma } => *gamma > F::zero() && gamma <= alpha && *alpha < F::one(),
        };
        if !ok {
            return domain(format!("oracle parameters out of range: {self:?}"));
        }
        Ok(())
    }

    fn start(&self) -> DiscreteTree {
        match self {
            OracleModel::AlphaGamma { .. } => DiscreteTree::single_edge(1.0, 0.0, 1),
            _ => DiscreteTree::single_edge(1.0, 0.0, 0),
        }
    }

    fn steps(&self, n: usize) -> Result<usize> {
        match self {
            OracleModel::AlphaGamma { .. } if n == 0 => domain("alpha-gamma trees start at n = 1"),
            OracleModel::AlphaGamma { .. } => Ok(n - 1),
            _ => Ok(n),
        }
    }

    fn sites(&self, t: &DiscreteTree) -> Vec<(Site, F)> {
        let mut out = Vec::new();
        for e in 0..t.edge_count() {
            let w = match self {
                OracleModel::Marchal { beta } => beta.clone(),
                OracleModel::AlphaGamma { alpha, gamma } => alpha_gamma_edge_weight(alpha, gamma, is_external(t, e)),
                OracleModel::TwoColour { beta } => two_colour_edge_weight(beta, t.position(e)),
            };
            out.push((Site::Edge(e), w));
        }
        for v in 1..t.node_count() {
            let d = t.degree(v);
            let w = match self {
                OracleModel::Marchal { beta } => marchal_vertex_weight(beta, d),
                OracleModel::AlphaGamma { alpha, gamma } => alpha_gamma_vertex_weight(alpha, gamma, d),
                OracleModel::TwoColour { .. } => F::zero(),
            };
            out.push((Site::Vertex(v), w));
        }
        out.retain(|(_, w)| *w > F::zero());
        out
    }

    fn apply(&self, t: &DiscreteTree, site: Site) -> Result<DiscreteTree> {
        let mut next = t.clone();
        let label = match self {
            OracleModel::AlphaGamma { .. } => t.leaves().len() as u32 + 1,
            _ => t.leaves().len() as u32,
        };
        match (self, site) {
            (OracleModel::TwoColour { .. }, Site::Edge(e)) => {
                let components = next.component_count();
                insert_two_colour(&mut next, e, label, components)?;
            }
            _ => {
                insert_leaf(&mut next, site, label)?;
            }
        }
        Ok(next)
    }
}

/// Exact law of the shape after n steps, keyed by [`DiscreteTree::shape_key`]
/// (labeled) or [`DiscreteTree::unlabeled_shape_key`].
pub fn shape_prob_oracle<F: Exact>(model: &OracleModel<F>, n: usize, labeled: bool) -> Result<BTreeMap<ShapeKey, F>> {
    model.validate()?;
    if n > ORACLE_MAX_N {
        return capability(format!("oracle limited to n <= {ORACLE_MAX_N}, got {n}"));
    }
    let start = model.start();
    let mut states: BTreeMap<ShapeKey, (DiscreteTree, F)> = BTreeMap::new();
    states.insert(start.shape_key(), (start, F::one()));
    for _ in 0..model.steps(n)? {
        let mut next: BTreeMap<ShapeKey, (DiscreteTree, F)> = BTreeMap::new();
        for (tree, p) in states.values() {
            let sites = model.sites(tree);
            let total = sites.iter().fold(F::zero(), |acc, (_, w)| acc + w.clone());
            for (site, w) in sites {
                let t = model.apply(tree, site)?;
                let q = p.clone() * w / total.clone();
                match next.entry(t.shape_key()) {
                    std::collections::btree_map::Entry::Occupied(mut o) => {
                        let slot = &mut o.get_mut().1;
                        *slot = slot.clone() + q;
                    }
                    std::collections::btree_map::Entry::Vacant(v) => {
                        v.insert((t, q));
                    }
                }
            }
            if next.len() > ORACLE_MAX_STATES {
                return capability(format!("oracle exceeded {ORACLE_MAX_STATES} states"));
            }
        }
        states = next;
    }
    let mut out: BTreeMap<ShapeKey, F> = BTreeMap::new();
    for (key, (tree, p)) in states {
        let key = if labeled { key } else { tree.unlabeled_shape_key() };
        let slot = out.entry(key).or_insert_with(F::zero);
        *slot = slot.clone() + p;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn r(a: i64, b: i64) -> Rational {
        Rational::from_ratio(a, b)
    }

    fn sums_to_one(m: &BTreeMap<ShapeKey, Rational>) -> bool {
        m.values().fold(r(0, 1), |a, b| a + b) == r(1, 1)
    }

    #[test]
    fn single_shape_at_start() {
        let m = shape_prob_oracle(&OracleModel::Marchal { beta: r(1, 3) }, 0, true).unwrap();
        assert_eq!(m.len(), 1);
        let m = shape_prob_oracle(&OracleModel::AlphaGamma { alpha: r(1, 2), gamma: r(1, 2) }, 1, true).unwrap();
        assert_eq!(m.values().next().unwrap(), &r(1, 1));
    }

    #[test]
    fn marchal_star_probability() {
        let m = shape_prob_oracle(&OracleModel::Marchal { beta: r(1, 3) }, 2, false).unwrap();
        assert!(sums_to_one(&m));
        let star = ShapeKey("((*,*,*))".into());
        assert_eq!(m[&star], r(1, 4));
        let half = shape_prob_oracle(&OracleModel::Marchal { beta: r(1, 2) }, 2, false).unwrap();
        assert!(!half.contains_key(&star));
    }

    #[test]
    fn alpha_gamma_reduces_to_marchal() {
        let beta = r(1, 3);
        let a = shape_prob_oracle(&OracleModel::AlphaGamma { alpha: r(2, 3), gamma: beta.clone() }, 5, false).unwrap();
        let b = shape_prob_oracle(&OracleModel::Marchal { beta }, 4, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_colour_contracts_to_marchal() {
        let beta = r(1, 3);
        let tc = shape_prob_oracle(&OracleModel::TwoColour { beta: beta.clone() }, 3, false).unwrap();
        assert!(sums_to_one(&tc));
        let mc = shape_prob_oracle(&OracleModel::Marchal { beta }, 3, false).unwrap();
        assert!(sums_to_one(&mc));
        assert!(tc.len() >= mc.len());
    }

    #[test]
    fn limits_and_domain() {
        assert!(shape_prob_oracle(&OracleModel::Marchal { beta: r(1, 3) }, 9, true).is_err());
        assert!(shape_prob_oracle(&OracleModel::Marchal { beta: r(2, 3) }, 2, true).is_err());
        assert!(shape_prob_oracle(&OracleModel::Marchal { beta: 0.25f64 }, 3, true).is_ok());
    }
}
