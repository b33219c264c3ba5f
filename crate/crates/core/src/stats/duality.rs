//! Coagulation–fragmentation duality of Chinese restaurant partitions,
//! checked structure by structure.

use super::TestReport;
use crate::error::{capability, domain, Result};
use crate::scalar::Exact;

/// Largest n swept by [`duality_check`].
pub const DUALITY_MAX_N: usize = 8;

/// x(x + step)…(x + (j − 1)step).
fn rising<F: Exact>(x: &F, j: usize, step: &F) -> F {
    let mut out = F::one();
    let mut term = x.clone();
    for _ in 0..j {
        out = out * term.clone();
        term = term + step.clone();
    }
    out
}

fn pow<F: Exact>(x: &F, e: usize) -> F {
    (0..e).fold(F::one(), |acc, _| acc * x.clone())
}

fn compositions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for mut rest in compositions(n - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// All ways to write n as a sequence of groups of positive parts.
pub fn grouped_compositions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for parts in compositions(n) {
        for sizes in compositions(parts.len()) {
            let mut at = 0;
            let groups = sizes
                .iter()
                .map(|&k| {
                    at += k;
                    parts[at - k..at].to_vec()
                })
                .collect();
            out.push(groups);
        }
    }
    out
}

/// Coagulation side: unordered (α, θ) tables grouped by an ordered
/// (β′, θ/α) restaurant with ℓ right-most openings.
fn coagulation<F: Exact>(groups: &[Vec<usize>], l: usize, a: &F, t: &F, bp: &F) -> F {
    let one = F::one();
    let n: usize = groups.iter().flatten().sum();
    let k: usize = groups.iter().map(Vec::len).sum();
    let m = groups.len();
    let t_over_a = t.clone() / a.clone();
    let mut tables = rising(&(t.clone() + a.clone()), k - 1, a);
    for &nij in groups.iter().flatten() {
        tables = tables * rising(&(one.clone() - a.clone()), nij - 1, &one);
    }
    tables = tables / rising(&(one.clone() + t.clone()), n - 1, &one);
    let mut order = pow(bp, m - l - 1) * pow(&t_over_a, l);
    for g in groups {
        order = order * rising(&(one.clone() - bp.clone()), g.len() - 1, &one);
    }
    order = order / rising(&(one.clone() + t_over_a), k - 1, &one);
    tables * order
}

/// Fragmentation side: an ordered (αβ′, θ) restaurant with ℓ right-most
/// openings whose tables split as unordered (α, −αβ′) restaurants.
fn fragmentation<F: Exact>(groups: &[Vec<usize>], l: usize, a: &F, t: &F, bp: &F) -> F {
    let one = F::one();
    let n: usize = groups.iter().flatten().sum();
    let m = groups.len();
    let ab = a.clone() * bp.clone();
    let mut out = pow(&ab, m - l - 1) * pow(t, l) / rising(&(one.clone() + t.clone()), n - 1, &one);
    for g in groups {
        let size: usize = g.iter().sum();
        let block = rising(&(one.clone() - ab.clone()), size - 1, &one);
        let mut inner = rising(&(a.clone() - ab.clone()), g.len() - 1, a);
        for &nij in g {
            inner = inner * rising(&(one.clone() - a.clone()), nij - 1, &one);
        }
        out = out * block.clone() * inner / block;
    }
    out
}

/// Evaluates both sides for every grouped composition of every n ≤ `n_max`
/// and every ℓ < m; the statistic is the largest relative discrepancy.
pub fn duality_check<F: Exact>(alpha: &F, theta: &F, beta_prime: &F, n_max: usize) -> Result<TestReport> {
    let (zero, one) = (F::zero(), F::one());
    if !(*alpha > zero && *alpha < one && *beta_prime > zero && *beta_prime < one && *theta > zero) {
        return domain(format!(
            "duality needs 0 < alpha, beta' < 1 and theta > 0, got {alpha:?}, {theta:?}, {beta_prime:?}"
        ));
    }
    if n_max > DUALITY_MAX_N {
        return capability(format!("duality check limited to n <= {DUALITY_MAX_N}"));
    }
    let mut worst = 0.0f64;
    let mut structures = 0;
    let mut exact = true;
    for n in 1..=n_max {
        for groups in grouped_compositions(n) {
            for l in 0..groups.len() {
                let c = coagulation(&groups, l, alpha, theta, beta_prime);
                let f = fragmentation(&groups, l, alpha, theta, beta_prime);
                exact &= c == f;
                let scale = c.to_f64().abs().max(f.to_f64().abs());
                let diff = (c - f).abs().to_f64();
                worst = worst.max(if scale > 0.0 { diff / scale } else { diff });
                structures += 1;
            }
        }
    }
    let name = format!(
        "duality alpha={:.4} theta={:.4} beta'={:.4} n<={n_max}",
        alpha.to_f64(),
        theta.to_f64(),
        beta_prime.to_f64()
    );
    Ok(TestReport::exact(&name, exact || worst <= 1e-12, worst, structures))
}
