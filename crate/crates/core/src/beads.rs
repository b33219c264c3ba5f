//! Strings of beads as (kind, mass, length) records with their split laws.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{gem_sticks, ml, sample_beta, sample_dirichlet, AlphaTheta};
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StringKind {
    AlphaTheta(AlphaTheta),
    BetaMixed(f64),
}

/// A string of beads scaled to total `mass` and total `length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StringDescriptor {
    pub kind: StringKind,
    pub mass: f64,
    pub length: f64,
}

impl StringDescriptor {
    pub fn new(kind: StringKind, mass: f64, length: f64) -> Result<Self> {
        if !(mass > 0.0 && length > 0.0) {
            return domain(format!("string needs positive mass and length, got ({mass}, {length})"));
        }
        Ok(Self { kind, mass, length })
    }

    fn alpha_theta(&self) -> Result<AlphaTheta> {
        match self.kind {
            StringKind::AlphaTheta(p) => Ok(p),
            StringKind::BetaMixed(_) => domain("split laws apply to (alpha, theta)-strings only"),
        }
    }
}

/// Outcome of selecting one atom of a string.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StringSplit {
    /// Mass fractions (left, atom, right).
    pub mass_fracs: [f64; 3],
    pub length_frac_left: f64,
    pub left_kind: AlphaTheta,
    pub right_kind: AlphaTheta,
}

impl StringSplit {
    /// The two sub-strings and the atom mass, scaled to `desc`.
    pub fn pieces(&self, desc: &StringDescriptor) -> (StringDescriptor, f64, StringDescriptor) {
        let [l, a, r] = self.mass_fracs;
        let left = StringDescriptor {
            kind: StringKind::AlphaTheta(self.left_kind),
            mass: desc.mass * l,
            length: desc.length * self.length_frac_left,
        };
        let right = StringDescriptor {
            kind: StringKind::AlphaTheta(self.right_kind),
            mass: desc.mass * r,
            length: desc.length * (1.0 - self.length_frac_left),
        };
        (left, desc.mass * a, right)
    }
}

/// Coin-tossing atom selection on an (α, θ)-string.
pub fn coin_toss_split<R: Rng + ?Sized>(desc: &StringDescriptor, rng: &mut R) -> Result<StringSplit> {
    let p = desc.alpha_theta()?;
    split_raw(p, rng)
}

/// Uniform atom selection on an (α, α)-string.
pub fn uniform_atom_split<R: Rng + ?Sized>(desc: &StringDescriptor, rng: &mut R) -> Result<StringSplit> {
    let p = desc.alpha_theta()?;
    if p.theta != p.alpha {
        return domain(format!("uniform selection needs theta = alpha, got ({}, {})", p.alpha, p.theta));
    }
    split_raw(p, rng)
}

pub(crate) fn split_raw<R: Rng + ?Sized>(p: AlphaTheta, rng: &mut R) -> Result<StringSplit> {
    let AlphaTheta { alpha, theta } = p;
    if theta <= 0.0 {
        return domain(format!("coin tossing needs theta > 0, got {theta}"));
    }
    let d = sample_dirichlet(&[alpha, 1.0 - alpha, theta], rng)?.values;
    Ok(StringSplit {
        mass_fracs: [d[0], d[1], d[2]],
        length_frac_left: sample_beta(1.0, theta / alpha, rng)?,
        left_kind: AlphaTheta { alpha, theta: alpha },
        right_kind: p,
    })
}

/// One β-mixed string at unit mass: a marked (β, 1−2β) part closest to the
/// root followed by an unmarked (β, β) part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaMixedDraw {
    pub beta: f64,
    pub total_length: f64,
    pub marked_length_frac: f64,
    pub marked_mass_frac: f64,
}

impl BetaMixedDraw {
    pub fn marked_kind(&self) -> AlphaTheta {
        AlphaTheta { alpha: self.beta, theta: 1.0 - 2.0 * self.beta }
    }

    pub fn unmarked_kind(&self) -> AlphaTheta {
        AlphaTheta { alpha: self.beta, theta: self.beta }
    }

    pub fn marked_length(&self) -> f64 {
        self.total_length * self.marked_length_frac
    }

    pub fn unmarked_length(&self) -> f64 {
        self.total_length * (1.0 - self.marked_length_frac)
    }
}

/// K = B^β K₁ + (1−B)^β K₂ with K₁ ~ ML(β,1−2β), K₂ ~ ML(β,β), B ~ Beta(1−2β,β).
pub fn draw_beta_mixed<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> Result<BetaMixedDraw> {
    if !(beta > 0.0 && beta <= 0.5) {
        return domain(format!("beta = {beta} not in (0, 1/2]"));
    }
    let k2 = ml(beta, beta, rng)?;
    if beta == 0.5 {
        return Ok(BetaMixedDraw { beta, total_length: k2, marked_length_frac: 0.0, marked_mass_frac: 0.0 });
    }
    let k1 = ml(beta, 1.0 - 2.0 * beta, rng)?;
    let b = sample_beta(1.0 - 2.0 * beta, beta, rng)?;
    let marked = b.powf(beta) * k1;
    let total = marked + (1.0 - b).powf(beta) * k2;
    Ok(BetaMixedDraw { beta, total_length: total, marked_length_frac: marked / total, marked_mass_frac: b })
}

/// Leading atom masses of a β-mixed string given its marked mass fraction:
/// B·GEM(β, 1−2β) on the marked part and (1−B)·GEM(β, β) on the rest.
pub fn beta_mixed_atoms<R: Rng + ?Sized>(draw: &BetaMixedDraw, sticks: usize, rng: &mut R) -> Result<Vec<f64>> {
    let beta = draw.beta;
    let b = draw.marked_mass_frac;
    let mut atoms = Vec::with_capacity(2 * sticks);
    if b > 0.0 {
        let marked = gem_sticks(AlphaTheta::new(beta, 1.0 - 2.0 * beta)?, sticks, rng)?;
        atoms.extend(marked.sticks.iter().map(|x| x * b));
    }
    let unmarked = gem_sticks(AlphaTheta::new(beta, beta)?, sticks, rng)?;
    atoms.extend(unmarked.sticks.iter().map(|x| x * (1.0 - b)));
    Ok(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn string(alpha: f64, theta: f64) -> StringDescriptor {
        StringDescriptor::new(StringKind::AlphaTheta(AlphaTheta::new(alpha, theta).unwrap()), 1.0, 1.0).unwrap()
    }

    #[test]
    fn split_kinds_and_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = coin_toss_split(&string(0.3, 0.9), &mut rng).unwrap();
        assert_eq!(s.left_kind, AlphaTheta { alpha: 0.3, theta: 0.3 });
        assert_eq!(s.right_kind, AlphaTheta { alpha: 0.3, theta: 0.9 });
        assert!((s.mass_fracs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let u = uniform_atom_split(&string(0.5, 0.5), &mut rng).unwrap();
        assert_eq!(u.left_kind, AlphaTheta { alpha: 0.5, theta: 0.5 });
        assert!((u.mass_fracs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_domain_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let external = StringDescriptor {
            kind: StringKind::AlphaTheta(AlphaTheta { alpha: 0.5, theta: 0.0 }),
            mass: 1.0,
            length: 1.0,
        };
        assert!(coin_toss_split(&external, &mut rng).is_err());
        assert!(uniform_atom_split(&string(0.5, 0.7), &mut rng).is_err());
        assert!(draw_beta_mixed(0.6, &mut rng).is_err());
        assert!(StringDescriptor::new(StringKind::BetaMixed(0.3), 0.0, 1.0).is_err());
    }

    #[test]
    fn pieces_conserve_mass_and_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let desc = StringDescriptor::new(StringKind::AlphaTheta(AlphaTheta::new(0.4, 0.2).unwrap()), 0.3, 2.0).unwrap();
        let s = coin_toss_split(&desc, &mut rng).unwrap();
        let (l, a, r) = s.pieces(&desc);
        assert!((l.mass + a + r.mass - 0.3).abs() < 1e-12);
        assert!((l.length + r.length - 2.0).abs() < 1e-12);
    }

    #[test]
    fn beta_mixed_half_is_unmarked() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let d = draw_beta_mixed(0.5, &mut rng).unwrap();
            assert_eq!(d.marked_length_frac, 0.0);
            assert_eq!(d.marked_mass_frac, 0.0);
        }
    }

    #[test]
    fn beta_mixed_atoms_partition_unit_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = draw_beta_mixed(1.0 / 3.0, &mut rng).unwrap();
        let atoms = beta_mixed_atoms(&d, 5_000, &mut rng).unwrap();
        let total: f64 = atoms.iter().sum();
        assert!(total < 1.0 && total > 0.95);
    }
}
