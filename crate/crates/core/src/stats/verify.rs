//! Acceptance bundles.

use std::collections::BTreeMap;

use rand::Rng;

use super::{
    chi_square_keyed, chi_square_keyed_two_sample, count, duality_check, ks_two_sample, ks_vs_beta, ml_moment_tests,
    moment_test, Bundle, Reference, TestReport, DUALITY_MAX_N,
};
use crate::distributions::{ml_moment, sample_ml, AlphaTheta};
use crate::error::{capability, domain, Result};
use crate::growth::{
    gh_marginal, shape_prob_oracle, two_colour_state, weighted_view, Chain, DiscreteTwoColour, Marchal, OracleModel,
    StableMass, TwoColour,
};
use crate::metrics::{gh_labeled, gh_marked_truncated, prokhorov_finite, ProkhorovMode};
use crate::rtree::{DiscreteTree, Mark, Position, ShapeKey};
use crate::{replicate, Rational, Stream};

/// (α, θ) grid of the ML sampler bundle.
pub const ML_GRID: [(f64, f64); 7] =
    [(0.3, 0.0), (0.3, 0.3), (0.3, 0.4), (0.3, 1.0), (0.5, 0.0), (0.5, 0.5), (0.5, 1.0)];

/// Steps each two-colour run takes before its components are pooled.
pub const FORD_HORIZON: usize = 200;

fn relative(name: &str, value: f64, target: f64, tol: f64, n: usize) -> TestReport {
    TestReport::new(name, (value - target) / target, Reference::Value(target), None, Some(tol), vec![n])
}

fn constant(xs: &[f64]) -> Option<f64> {
    let first = *xs.first()?;
    xs.iter().all(|&x| x == first).then_some(first)
}

/// Two-sample KS, or an exact comparison when both samples are constant.
fn ks_or_constant(name: &str, xs: &[f64], ys: &[f64]) -> Result<TestReport> {
    if let (Some(a), Some(b)) = (constant(xs), constant(ys)) {
        return Ok(TestReport::exact(name, a == b, (a - b).abs(), xs.len() + ys.len()));
    }
    Ok(ks_two_sample(xs, ys)?.named(name))
}

fn modal<K: Ord + Clone>(counts: &BTreeMap<K, u64>) -> Option<K> {
    counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(k, _)| k.clone())
}

/// Moments p = 1, 2 of the ML sampler at every grid point.
pub fn verify_ml_sampler(n: usize, seed: u64) -> Result<Bundle> {
    let mut reports = Vec::new();
    for (i, &(alpha, theta)) in ML_GRID.iter().enumerate() {
        let params = AlphaTheta::new(alpha, theta)?;
        let xs = replicate(seed.wrapping_add(i as u64), n, |rng| sample_ml(params, rng))?;
        reports.extend(ml_moment_tests(&xs, params)?);
    }
    Ok(Bundle::new("ml-sampler", reports))
}

struct Weighted {
    shape: ShapeKey,
    total_length: f64,
    max_weight: f64,
    total_weight: f64,
}

/// Contracted two-colour trees against the stable marginal: shape law (also
/// against the exact Marchal oracle), S_k, the largest weight given the
/// modal shape, and the total weight.
pub fn verify_theorem_1_1(beta: f64, k: usize, n: usize, seed: u64) -> Result<Bundle> {
    if k > 5 {
        return capability(format!("theorem bundle supports k <= 5, got {k}"));
    }
    let two = replicate(seed, n, |rng| {
        let v = weighted_view(&two_colour_state(beta, k, rng)?);
        Ok(Weighted {
            shape: v.tree.shape_key(),
            total_length: v.total_length,
            max_weight: v.max_weight(),
            total_weight: v.total_weight(),
        })
    })?;
    let stable = replicate(seed ^ 0x5eed_0001, n, |rng| {
        let v = gh_marginal(beta, k, rng)?;
        Ok(Weighted {
            shape: v.tree.shape_key(),
            total_length: v.total_length,
            max_weight: v.max_weight(),
            total_weight: v.total_weight(),
        })
    })?;
    let tag = format!("beta={beta:.4} k={k}");
    let shapes_a = count(two.iter().map(|w| w.shape.clone()));
    let shapes_b = count(stable.iter().map(|w| w.shape.clone()));
    let mut reports = Vec::new();
    if shapes_a.len() > 1 || shapes_b.len() > 1 {
        reports.push(chi_square_keyed_two_sample(&shapes_a, &shapes_b)?.named(format!("shape two-sample {tag}")));
        let oracle = shape_prob_oracle(&OracleModel::Marchal { beta }, k, true)?;
        reports.push(chi_square_keyed(&shapes_a, &oracle)?.named(format!("shape vs oracle {tag}")));
    } else {
        let same = shapes_a == shapes_b;
        reports.push(TestReport::exact(&format!("shape {tag}"), same, if same { 0.0 } else { 1.0 }, 2 * n));
    }
    let col = |xs: &[Weighted], f: fn(&Weighted) -> f64| xs.iter().map(f).collect::<Vec<f64>>();
    reports.push(ks_or_constant(
        &format!("S_k {tag}"),
        &col(&two, |w| w.total_length),
        &col(&stable, |w| w.total_length),
    )?);
    let mut pooled = shapes_a.clone();
    for (key, c) in &shapes_b {
        *pooled.entry(key.clone()).or_insert(0) += c;
    }
    let mode = modal(&pooled).expect("nonempty sample");
    let given = |xs: &[Weighted]| xs.iter().filter(|w| w.shape == mode).map(|w| w.max_weight).collect::<Vec<f64>>();
    reports.push(ks_or_constant(&format!("max weight | modal shape {tag}"), &given(&two), &given(&stable))?);
    reports.push(ks_or_constant(
        &format!("total weight {tag}"),
        &col(&two, |w| w.total_weight),
        &col(&stable, |w| w.total_weight),
    )?);
    Ok(Bundle::new(format!("theorem-1-1 {tag}"), reports))
}

#[derive(Default)]
struct FordPool {
    shapes: Vec<Vec<ShapeKey>>,
    ratios: Vec<Vec<f64>>,
    starts: Vec<f64>,
}

/// Marked components pooled over two-colour runs of [`FORD_HORIZON`] steps:
/// shapes against the alpha-model oracle, m → m + 1 length ratios against
/// Beta(m(1/β − 1), 1/β − 2), and starting lengths over mass^β against
/// ML(β, 1 − 2β).
pub fn verify_ford_embedding(beta: f64, runs: usize, m_max: usize, seed: u64) -> Result<Bundle> {
    if !(2..=6).contains(&m_max) {
        return capability(format!("Ford bundle supports 2 <= m_max <= 6, got {m_max}"));
    }
    if !(beta > 0.0 && beta < 0.5) {
        return domain(format!("Ford embedding needs 0 < beta < 1/2, got {beta}"));
    }
    let per_run = replicate(seed, runs, |rng| {
        let state = two_colour_state(beta, FORD_HORIZON, rng)?;
        let mut pool =
            FordPool { shapes: vec![Vec::new(); m_max + 1], ratios: vec![Vec::new(); m_max], ..Default::default() };
        for rec in &state.components {
            pool.starts.push(rec.lengths[0] / rec.masses[0].powf(beta));
            let size = rec.size().min(m_max);
            for m in 1..size {
                pool.ratios[m].push(rec.lengths[m - 1] / rec.lengths[m]);
            }
            if size >= 3 {
                let mut comp = state.tree.component_tree(rec.id, &rec.leaves)?;
                for e in 0..comp.edge_count() {
                    comp.edge_mut(e).mass = 0.0;
                }
                for m in 3..=size {
                    let labels: Vec<u32> = (1..=m as u32).collect();
                    pool.shapes[m].push(comp.reduce(&labels)?.shape_key());
                }
            }
        }
        Ok(pool)
    })?;
    let beta_prime = beta / (1.0 - beta);
    let mut reports = Vec::new();
    for m in 3..=m_max {
        let observed = count(per_run.iter().flat_map(|p| p.shapes[m].iter().cloned()));
        let oracle = shape_prob_oracle(&OracleModel::AlphaGamma { alpha: beta_prime, gamma: beta_prime }, m, true)?;
        reports.push(chi_square_keyed(&observed, &oracle)?.named(format!("component shape m={m}")));
    }
    for m in 1..m_max {
        let xs: Vec<f64> = per_run.iter().flat_map(|p| p.ratios[m].iter().copied()).collect();
        let (a, b) = (m as f64 * (1.0 / beta - 1.0), 1.0 / beta - 2.0);
        reports.push(ks_vs_beta(&xs, a, b)?.named(format!("length ratio {m}->{}", m + 1)));
    }
    let starts: Vec<f64> = per_run.iter().flat_map(|p| p.starts.iter().copied()).collect();
    reports.extend(ml_moment_tests(&starts, AlphaTheta::new(beta, 1.0 - 2.0 * beta)?)?);
    Ok(Bundle::new(format!("ford-embedding beta={beta:.4}"), reports))
}

/// First fragment of the branch point created at step k, for each k in
/// `steps`, against Beta(β, 1 − 2β).
pub fn verify_gem_fragments(beta: f64, steps: &[usize], n: usize, seed: u64) -> Result<Bundle> {
    if !(beta > 0.0 && beta < 0.5) {
        return domain(format!("GEM fragments need 0 < beta < 1/2, got {beta}"));
    }
    let mut reports = Vec::new();
    for &k in steps {
        if k == 0 {
            return domain("branch points appear from step 1");
        }
        let xs = replicate(seed.wrapping_add(k as u64), n, |rng| {
            let mut p = StableMass::new(beta)?;
            for _ in 0..k {
                p.step(rng)?;
            }
            let s = p.masses();
            Ok(s.branch_points.last().filter(|b| b.created_at == k).map(|b| s.first_fragment(b)))
        })?;
        let xs: Vec<f64> = xs.into_iter().flatten().collect();
        reports.push(ks_vs_beta(&xs, beta, 1.0 - 2.0 * beta)?.named(format!("first fragment beta={beta:.4} k={k}")));
    }
    Ok(Bundle::new(format!("gem-fragments beta={beta:.4}"), reports))
}

/// Largest violation of the structural invariants of a two-colour tree.
fn structure_violations(state: &crate::growth::GrowthState) -> usize {
    let t = &state.tree;
    let k = state.step;
    let mut bad = usize::from(t.edge_count() != 3 * k + 1) + usize::from(t.leaves().len() != k + 1);
    let c = t.contract_marked();
    for rec in &state.components {
        let node = c.branch_of_component[rec.id as usize - 1];
        bad += usize::from(c.tree.degree(node) != rec.size() + 2);
    }
    bad
}

/// Edge counts, leaf counts and component sizes over `structure_runs` runs
/// of `k_max` steps, then the mass split at step 2 given the modal shape
/// against its Dirichlet means.
pub fn verify_two_colour_structure(
    beta: f64,
    k_max: usize,
    structure_runs: usize,
    n: usize,
    seed: u64,
) -> Result<Bundle> {
    let bad = replicate(seed, structure_runs, |rng| {
        let mut p = TwoColour::new(beta)?;
        let mut bad = structure_violations(p.masses());
        for _ in 0..k_max {
            p.step(rng)?;
            bad += structure_violations(p.masses());
        }
        Ok(bad)
    })?;
    let bad: usize = bad.iter().sum();
    let mut reports = vec![TestReport::exact(
        &format!("edges, leaves, component degrees k<={k_max}"),
        bad == 0,
        bad as f64,
        structure_runs,
    )];

    let k = 2;
    let trees = replicate(seed ^ 0x5eed_0002, n, |rng| Ok(two_colour_state(beta, k, rng)?.tree))?;
    let shapes = count(trees.iter().map(DiscreteTree::shape_key));
    let mode = modal(&shapes).expect("nonempty sample");
    let given: Vec<&DiscreteTree> = trees.iter().filter(|t| t.shape_key() == mode).collect();
    let reference = given[0];
    let weights: Vec<f64> = reference
        .edge_order_dfs()
        .into_iter()
        .map(|e| match (reference.edge(e).mark, reference.position(e)) {
            (Mark::Marked, Position::External) => 1.0 - 2.0 * beta,
            _ => beta,
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let size = given.len() as f64;
    let split: Vec<Vec<f64>> =
        given.iter().map(|t| t.edge_order_dfs().into_iter().map(|e| t.edge(e).mass).collect()).collect();
    for (i, &a) in weights.iter().enumerate() {
        let xs: Vec<f64> = split.iter().map(|s| s[i]).collect();
        let var = a * (total - a) / (total * total * (total + 1.0));
        let name = format!("mass of edge {i} | modal shape k={k}");
        reports.push(moment_test(&xs, a / total, (var / size).sqrt())?.named(name));
    }
    Ok(Bundle::new(format!("two-colour-structure beta={beta:.4}"), reports))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn scaled_reduced_length<C: Chain>(
    mut chain: C,
    beta: f64,
    steps: usize,
    leaves: u32,
    rng: &mut Stream,
) -> Result<f64> {
    for _ in 0..steps {
        chain.step(rng)?;
    }
    let labels: Vec<u32> = (0..leaves).collect();
    Ok(chain.tree().reduce(&labels)?.total_length() / (steps as f64).powf(beta))
}

/// Mean of n^{−β} times the length spanned by leaves 0, 1, 2 against the
/// ML(β, β + 2) mean, for Marchal at β = 1/2 and the discrete two-colour
/// chain at `beta`, within 10%.
pub fn verify_discrete_scaling(beta: f64, steps: usize, replicates: usize, seed: u64) -> Result<Bundle> {
    let k = 2;
    let mut reports = Vec::new();
    for (name, b) in [("marchal", 0.5), ("discrete two-colour", beta)] {
        let xs = replicate(seed, replicates, |rng| {
            if name == "marchal" {
                scaled_reduced_length(Marchal::new(b)?, b, steps, k + 1, rng)
            } else {
                scaled_reduced_length(DiscreteTwoColour::new(b)?, b, steps, k + 1, rng)
            }
        })?;
        let target = ml_moment(AlphaTheta::new(b, b + k as f64)?, 1)?;
        reports.push(relative(
            &format!("{name} beta={b:.4} n={steps} scaled length"),
            mean(&xs),
            target,
            0.1,
            replicates,
        ));
    }
    Ok(Bundle::new("discrete-scaling", reports))
}

fn random_tree(rng: &mut Stream, steps: usize) -> Result<DiscreteTree> {
    let mut chain = DiscreteTwoColour::new(1.0 / 3.0)?;
    for _ in 0..steps {
        chain.step(rng)?;
    }
    let mut t = chain.tree().clone();
    for e in 0..t.edge_count() {
        t.edge_mut(e).length = rng.random::<f64>() * 2.0 + 0.01;
    }
    Ok(t)
}

fn random_measure(rng: &mut Stream, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() }).collect();
    let s: f64 = w.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    w.into_iter().map(|x| x / s).collect()
}

fn axiom_violation(d: impl Fn(usize, usize) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..3 {
        worst = worst.max(d(i, i).abs());
        for j in 0..3 {
            worst = worst.max((d(i, j) - d(j, i)).abs()).max(-d(i, j));
            for l in 0..3 {
                worst = worst.max(d(i, l) - d(i, j) - d(j, l));
            }
        }
    }
    worst
}

/// Metric axioms of the labeled, marked and Prokhorov distances on random
/// triples, and the truncation tail bound on trees that differ only in
/// late components.
pub fn verify_metrics(triples: usize, seed: u64) -> Result<Bundle> {
    const EXACT: f64 = 1e-12;
    let k_max = 4;
    let worst = replicate(seed, triples, |rng| {
        let steps = rng.random_range(1..6);
        let trees = [random_tree(rng, steps)?, random_tree(rng, steps)?, random_tree(rng, steps)?];
        let gh: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| gh_labeled(&trees[i], &trees[j])).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let marked: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| Ok(gh_marked_truncated(&trees[i], &trees[j], k_max)?.value)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let dist = trees[0].leaf_matrix();
        let n = dist.len();
        let mus = [random_measure(rng, n), random_measure(rng, n), random_measure(rng, n)];
        let pr: Vec<Vec<f64>> = (0..3)
            .map(|i| {
                (0..3).map(|j| prokhorov_finite(&mus[i], &mus[j], &dist, ProkhorovMode::Exact)).collect::<Result<_>>()
            })
            .collect::<Result<_>>()?;
        Ok([axiom_violation(|i, j| gh[i][j]), axiom_violation(|i, j| marked[i][j]), axiom_violation(|i, j| pr[i][j])])
    })?;
    let mut reports = Vec::new();
    for (c, name) in ["labeled GH", "truncated marked GH", "Prokhorov"].iter().enumerate() {
        let w = worst.iter().map(|x| x[c]).fold(0.0, f64::max);
        reports.push(TestReport::exact(&format!("{name} metric axioms"), w <= EXACT, w, triples));
    }

    let tails = replicate(seed ^ 0x5eed_0003, triples / 10 + 1, |rng| {
        let a = random_tree(rng, 30)?;
        let k = rng.random_range(1..4usize);
        let mut b = a.clone();
        let factor = 1.0 + 5.0 * rng.random::<f64>();
        for e in 0..b.edge_count() {
            if b.edge(e).mark == Mark::Marked && b.edge(e).component as usize > k {
                b.edge_mut(e).length *= factor;
            }
        }
        let short = gh_marked_truncated(&a, &b, k)?;
        let long = gh_marked_truncated(&a, &b, 60)?;
        Ok((long.value - short.value - short.tail_bound).max(short.value - long.value))
    })?;
    let w = tails.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    reports.push(TestReport::exact("truncation tail bound", w <= EXACT, w.max(0.0), tails.len()));
    Ok(Bundle::new("metrics", reports))
}

/// The coagulation and fragmentation sides agree for every structure up to n.
pub fn verify_duality(n_max: usize, beta_primes: &[Rational]) -> Result<Bundle> {
    if n_max > DUALITY_MAX_N {
        return capability(format!("duality check limited to n <= {DUALITY_MAX_N}"));
    }
    let r = |a, b| <Rational as crate::scalar::Exact>::from_ratio(a, b);
    let mut reports = Vec::new();
    for (alpha, theta) in [(r(1, 2), r(1, 2)), (r(2, 3), r(1, 3))] {
        for bp in beta_primes {
            reports.push(duality_check(&alpha, &theta, bp, n_max)?);
        }
    }
    Ok(Bundle::new("duality", reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_bundles_pass() {
        assert!(verify_ml_sampler(2000, 1).unwrap().pass);
        assert!(verify_metrics(50, 2).unwrap().pass);
        let r = <Rational as crate::scalar::Exact>::from_ratio(1, 2);
        assert!(verify_duality(4, &[r]).unwrap().pass);
    }

    #[test]
    fn brownian_theorem_bundle_has_zero_weights() {
        let b = verify_theorem_1_1(0.5, 2, 500, 3).unwrap();
        assert!(b.reports.iter().any(|r| r.name.starts_with("total weight") && r.p_value.is_none() && r.pass));
    }

    #[test]
    fn parameter_limits() {
        assert!(verify_theorem_1_1(0.3, 6, 100, 0).is_err());
        assert!(verify_ford_embedding(0.3, 10, 7, 0).is_err());
        assert!(verify_gem_fragments(0.5, &[1], 100, 0).is_err());
        assert!(verify_duality(9, &[]).is_err());
    }
}
