use rand::Rng;

use crate::distributions::{ml, sample_dirichlet};
use crate::error::{domain, Result};
use crate::rtree::{DiscreteTree, EdgeSpec, Label};

fn check_beta_prime(beta_prime: f64) -> Result<()> {
    if !(beta_prime > 0.0 && beta_prime < 1.0) {
        return domain(format!("beta' = {beta_prime} not in (0, 1)"));
    }
    Ok(())
}

/// Shape chain of Ford trees: internal edges weigh β′, external 1 − β′.
#[derive(Debug, Clone)]
pub struct FordShapes {
    beta_prime: f64,
    tree: DiscreteTree,
}

impl FordShapes {
    /// F_1: root joined to leaf 1.
    pub fn new(beta_prime: f64) -> Result<Self> {
        check_beta_prime(beta_prime)?;
        Ok(Self { beta_prime, tree: DiscreteTree::single_edge(1.0, 0.0, 1) })
    }

    pub fn tree(&self) -> &DiscreteTree {
        &self.tree
    }

    /// Number of leaves m.
    pub fn size(&self) -> usize {
        self.tree.leaves().len()
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let m = self.size();
        let t = &mut self.tree;
        let weights: Vec<f64> = (0..t.edge_count())
            .map(|e| if t.node(t.edge(e).child).children.is_empty() { 1.0 - self.beta_prime } else { self.beta_prime })
            .collect();
        let mut u = rng.random::<f64>() * weights.iter().sum::<f64>();
        let mut pick = weights.len() - 1;
        for (e, w) in weights.iter().enumerate() {
            if u < *w {
                pick = e;
                break;
            }
            u -= w;
        }
        let (j, _) = t.split_edge(pick, 0.5, [0.5, 0.0, 0.5])?;
        t.add_child(j, EdgeSpec::unmarked(1.0, 0.0), Label::Leaf(m as u32 + 1));
        Ok(())
    }
}

/// Assigns Ford lengths to a shape with m leaves: total ML(β′, m − β′) split
/// Dirichlet with weight 1 per internal and (1 − β′)/β′ per external edge.
pub fn ford_lengths<R: Rng + ?Sized>(shape: &DiscreteTree, beta_prime: f64, rng: &mut R) -> Result<DiscreteTree> {
    check_beta_prime(beta_prime)?;
    let m = shape.leaves().len();
    let mut t = shape.clone();
    let ext = (1.0 - beta_prime) / beta_prime;
    let weights: Vec<f64> =
        (0..t.edge_count()).map(|e| if t.node(t.edge(e).child).children.is_empty() { ext } else { 1.0 }).collect();
    let total = ml(beta_prime, m as f64 - beta_prime, rng)?;
    let split = sample_dirichlet(&weights, rng)?.values;
    for (e, x) in split.into_iter().enumerate() {
        t.edge_mut(e).length = total * x;
    }
    Ok(t)
}

/// Ford trees F_1, …, F_{m_max}: lengths are drawn on F_{m_max} and each
/// earlier tree is its reduction to leaves 1..m.
pub fn grow_ford<R: Rng + ?Sized>(beta_prime: f64, m_max: usize, rng: &mut R) -> Result<Vec<DiscreteTree>> {
    if m_max == 0 {
        return Ok(Vec::new());
    }
    let mut chain = FordShapes::new(beta_prime)?;
    for _ in 1..m_max {
        chain.step(rng)?;
    }
    let last = ford_lengths(chain.tree(), beta_prime, rng)?;
    let mut out = Vec::with_capacity(m_max);
    for m in 1..m_max {
        let labels: Vec<u32> = (1..=m as u32).collect();
        out.push(last.reduce(&labels)?);
    }
    out.push(last);
    Ok(out)
}

/// A single Ford tree with m ≥ 1 leaves.
pub fn ford_tree<R: Rng + ?Sized>(beta_prime: f64, m: usize, rng: &mut R) -> Result<DiscreteTree> {
    if m == 0 {
        return domain("a Ford tree needs at least one leaf");
    }
    let mut chain = FordShapes::new(beta_prime)?;
    for _ in 1..m {
        chain.step(rng)?;
    }
    ford_lengths(chain.tree(), beta_prime, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{ml_moment, AlphaTheta};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn binary_with_leaf_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trees = grow_ford(0.4, 6, &mut rng).unwrap();
        for (i, t) in trees.iter().enumerate() {
            let m = i + 1;
            assert_eq!(t.edge_count(), 2 * m - 1);
            let labels: Vec<u32> = t.leaves().iter().map(|l| l.0).collect();
            assert_eq!(labels, (1..=m as u32).collect::<Vec<_>>());
            assert!(t.nodes().iter().skip(1).all(|n| n.children.is_empty() || n.children.len() == 2));
        }
        assert!(grow_ford(1.0, 2, &mut rng).is_err());
        assert!(ford_tree(0.5, 0, &mut rng).is_err());
    }

    #[test]
    fn single_edge_length_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bp = 0.5;
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| ford_tree(bp, 1, &mut rng).unwrap().total_length()).collect();
        let p = AlphaTheta::new(bp, 1.0 - bp).unwrap();
        let (m1, m2) = (ml_moment(p, 1).unwrap(), ml_moment(p, 2).unwrap());
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - m1).abs() < 4.0 * ((m2 - m1 * m1) / n as f64).sqrt());
    }

    #[test]
    fn reduced_trajectory_keeps_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (bp, n) = (0.4, 20_000);
        let mut sums = [0.0; 3];
        for _ in 0..n {
            let trees = grow_ford(bp, 3, &mut rng).unwrap();
            for (s, t) in sums.iter_mut().zip(&trees) {
                *s += t.total_length();
            }
            assert!(trees.windows(2).all(|w| w[0].total_length() <= w[1].total_length()));
        }
        for (m, s) in sums.iter().enumerate() {
            let p = AlphaTheta::new(bp, (m + 1) as f64 - bp).unwrap();
            let (m1, m2) = (ml_moment(p, 1).unwrap(), ml_moment(p, 2).unwrap());
            assert!((s / n as f64 - m1).abs() < 4.0 * ((m2 - m1 * m1) / n as f64).sqrt());
        }
    }
}
