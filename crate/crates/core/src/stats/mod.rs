//! Verification harness: goodness-of-fit tests, the exact duality check and
//! the acceptance bundles.

mod calibration;
mod duality;
mod verify;

pub use calibration::{calibration, CalibrationResult, CALIBRATION_MIN_RATE};
pub use duality::{duality_check, grouped_compositions, DUALITY_MAX_N};
pub use verify::{
    verify_discrete_scaling, verify_duality, verify_ford_embedding, verify_gem_fragments, verify_metrics,
    verify_ml_sampler, verify_theorem_1_1, verify_two_colour_structure, FORD_HORIZON, ML_GRID,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ChiSquared, ContinuousCDF};

use crate::distributions::{ml_moment, AlphaTheta};
use crate::error::{domain, Result};

/// Significance threshold of a single test.
pub const P_THRESHOLD: f64 = 0.01;
/// No sub-test of a passing bundle may fall below this p-value.
pub const P_FLOOR: f64 = 1e-4;
/// Fraction of sub-tests a bundle needs to pass.
pub const BUNDLE_PASS_RATE: f64 = 0.9;
/// Moment tests accept deviations up to this many standard errors.
pub const MOMENT_SIGMAS: f64 = 4.0;
/// Smallest expected count of a pooled chi-square cell.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    Value(f64),
    TwoSample,
    Law(String),
}

/// Result of one test. `pass` is recomputed from the other fields by
/// [`TestReport::verdict`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub reference: Reference,
    pub p_value: Option<f64>,
    /// Accepted band for |statistic| when there is no p-value.
    pub tolerance: Option<f64>,
    pub sample_sizes: Vec<usize>,
    pub pass: bool,
    pub seed: Option<u64>,
}

impl TestReport {
    fn new(
        name: &str,
        statistic: f64,
        reference: Reference,
        p_value: Option<f64>,
        tolerance: Option<f64>,
        sample_sizes: Vec<usize>,
    ) -> Self {
        let mut r =
            Self { name: name.into(), statistic, reference, p_value, tolerance, sample_sizes, pass: false, seed: None };
        r.pass = r.verdict();
        r
    }

    /// p > [`P_THRESHOLD`] for p-value tests, |statistic| ≤ tolerance otherwise.
    pub fn verdict(&self) -> bool {
        match (self.p_value, self.tolerance) {
            (Some(p), _) => p > P_THRESHOLD,
            (None, Some(t)) => self.statistic.abs() <= t,
            (None, None) => false,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Record of a deterministic check with a discrepancy.
    pub fn exact(name: &str, ok: bool, discrepancy: f64, size: usize) -> Self {
        let mut r = Self::new(name, discrepancy, Reference::Value(0.0), None, Some(0.0), vec![size]);
        r.pass = ok;
        r
    }
}

/// Named collection of reports with the bundle pass rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub name: String,
    pub reports: Vec<TestReport>,
    pub pass: bool,
}

impl Bundle {
    pub fn new(name: impl Into<String>, reports: Vec<TestReport>) -> Self {
        let pass = bundle_passes(&reports);
        Self { name: name.into(), reports, pass }
    }

    pub fn passed(&self) -> usize {
        self.reports.iter().filter(|r| r.pass).count()
    }

    /// Fixed-width table, one row per report.
    pub fn summary_table(&self) -> String {
        let mut s = format!(
            "{} [{}] {}/{}\n",
            self.name,
            if self.pass { "pass" } else { "FAIL" },
            self.passed(),
            self.reports.len()
        );
        for r in &self.reports {
            let p = r
                .p_value
                .map_or_else(|| format!("tol {:.3e}", r.tolerance.unwrap_or(f64::NAN)), |p| format!("p {p:.4}"));
            let _ = writeln!(
                s,
                "  {:<4} {:<48} stat {:>12.5e}  {}",
                if r.pass { "ok" } else { "FAIL" },
                r.name,
                r.statistic,
                p
            );
        }
        s
    }
}

/// At least [`BUNDLE_PASS_RATE`] of the reports pass and none has p < [`P_FLOOR`].
pub fn bundle_passes(reports: &[TestReport]) -> bool {
    if reports.is_empty() {
        return false;
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    let floor = reports.iter().all(|r| r.p_value.is_none_or(|p| p >= P_FLOOR));
    passed as f64 >= BUNDLE_PASS_RATE * reports.len() as f64 && floor
}

/// Asymptotic Kolmogorov survival function Q(λ) = 2 Σ (−1)^{j−1} e^{−2j²λ²}.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value with the Stephens small-sample correction.
fn ks_p(d: f64, effective_n: f64) -> f64 {
    let s = effective_n.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return domain("empty sample");
    }
    if xs.iter().any(|x| x.is_nan()) {
        return domain("sample contains NaN");
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample KS test against a continuous CDF.
pub fn ks_vs_cdf(xs: &[f64], cdf: impl Fn(f64) -> f64, law: &str) -> Result<TestReport> {
    let v = sorted(xs)?;
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(TestReport::new("ks", d, Reference::Law(law.into()), Some(ks_p(d, n)), None, vec![v.len()]))
}

pub fn ks_vs_beta(xs: &[f64], a: f64, b: f64) -> Result<TestReport> {
    let law = Beta::new(a, b).map_err(|e| crate::Error::Domain(format!("Beta({a}, {b}): {e}")))?;
    Ok(ks_vs_cdf(xs, |x| law.cdf(x.clamp(0.0, 1.0)), &format!("Beta({a}, {b})"))?.named("ks_vs_beta"))
}

pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<TestReport> {
    let (a, b) = (sorted(xs)?, sorted(ys)?);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let p = ks_p(d, n * m / (n + m));
    Ok(TestReport::new("ks_two_sample", d, Reference::TwoSample, Some(p), None, vec![a.len(), b.len()]))
}

/// Greedy pooling of cells in increasing order of weight until every pooled
/// cell reaches `min`; returns the cell → pool map and the pool count.
fn pool(weights: &[f64], min: f64) -> (Vec<usize>, usize) {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| weights[i].total_cmp(&weights[j]).then(i.cmp(&j)));
    let mut map = vec![0; weights.len()];
    let mut pools = 0;
    let mut acc = 0.0;
    for &i in &order {
        map[i] = pools;
        acc += weights[i];
        if acc >= min {
            pools += 1;
            acc = 0.0;
        }
    }
    if map.contains(&pools) {
        if pools == 0 {
            pools = 1;
        } else {
            for m in &mut map {
                if *m == pools {
                    *m = pools - 1;
                }
            }
        }
    }
    (map, pools)
}

fn chi_p(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let law = ChiSquared::new(dof as f64).expect("positive dof");
    law.sf(stat)
}

/// Pearson chi-square of counts against probabilities, pooling cells with
/// expected count below [`MIN_EXPECTED`].
pub fn chi_square(counts: &[u64], probs: &[f64]) -> Result<TestReport> {
    if counts.len() != probs.len() || counts.is_empty() {
        return domain("counts and probabilities differ in length");
    }
    if probs.iter().any(|&p| !(p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return domain("probabilities must be nonnegative and sum to 1");
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return domain("no observations");
    }
    if counts.iter().zip(probs).any(|(&c, &p)| c > 0 && p == 0.0) {
        return Ok(TestReport::new(
            "chi_square",
            f64::INFINITY,
            Reference::Law("oracle".into()),
            Some(0.0),
            None,
            vec![n as usize],
        ));
    }
    let expected: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
    let (map, pools) = pool(&expected, MIN_EXPECTED);
    let mut obs = vec![0.0; pools];
    let mut exp = vec![0.0; pools];
    for i in 0..counts.len() {
        obs[map[i]] += counts[i] as f64;
        exp[map[i]] += expected[i];
    }
    let stat: f64 = obs.iter().zip(&exp).filter(|(_, &e)| e > 0.0).map(|(o, e)| (o - e).powi(2) / e).sum();
    Ok(TestReport::new(
        "chi_square",
        stat,
        Reference::Law("oracle".into()),
        Some(chi_p(stat, pools - 1)),
        None,
        vec![n as usize],
    ))
}

/// Chi-square test of homogeneity between two count vectors over the same cells.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<TestReport> {
    if a.len() != b.len() || a.is_empty() {
        return domain("count vectors differ in length");
    }
    let (na, nb): (u64, u64) = (a.iter().sum(), b.iter().sum());
    if na == 0 || nb == 0 {
        return domain("no observations");
    }
    let total = (na + nb) as f64;
    let scale = na.min(nb) as f64 / total;
    let combined: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x + y) as f64 * scale).collect();
    let (map, pools) = pool(&combined, MIN_EXPECTED);
    let mut pa = vec![0.0; pools];
    let mut pb = vec![0.0; pools];
    for i in 0..a.len() {
        pa[map[i]] += a[i] as f64;
        pb[map[i]] += b[i] as f64;
    }
    let mut stat = 0.0;
    for (x, y) in pa.iter().zip(&pb) {
        let c = x + y;
        if c > 0.0 {
            let (ea, eb) = (c * na as f64 / total, c * nb as f64 / total);
            stat += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
        }
    }
    Ok(TestReport::new(
        "chi_square_two_sample",
        stat,
        Reference::TwoSample,
        Some(chi_p(stat, pools - 1)),
        None,
        vec![na as usize, nb as usize],
    ))
}

/// Chi-square of keyed observations against keyed probabilities.
pub fn chi_square_keyed<K: Ord + Clone>(observed: &BTreeMap<K, u64>, probs: &BTreeMap<K, f64>) -> Result<TestReport> {
    let mut keys: Vec<K> = probs.keys().cloned().collect();
    keys.extend(observed.keys().filter(|k| !probs.contains_key(k)).cloned());
    let counts: Vec<u64> = keys.iter().map(|k| observed.get(k).copied().unwrap_or(0)).collect();
    let p: Vec<f64> = keys.iter().map(|k| probs.get(k).copied().unwrap_or(0.0)).collect();
    chi_square(&counts, &p)
}

/// Homogeneity chi-square between two keyed samples.
pub fn chi_square_keyed_two_sample<K: Ord + Clone>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> Result<TestReport> {
    let mut keys: Vec<K> = a.keys().cloned().collect();
    keys.extend(b.keys().filter(|k| !a.contains_key(k)).cloned());
    let ca: Vec<u64> = keys.iter().map(|k| a.get(k).copied().unwrap_or(0)).collect();
    let cb: Vec<u64> = keys.iter().map(|k| b.get(k).copied().unwrap_or(0)).collect();
    chi_square_two_sample(&ca, &cb)
}

/// Passes iff |mean − reference| ≤ 4 · `reference_sd_of_mean`.
pub fn moment_test(xs: &[f64], reference: f64, reference_sd_of_mean: f64) -> Result<TestReport> {
    if xs.is_empty() {
        return domain("empty sample");
    }
    if !(reference_sd_of_mean >= 0.0) {
        return domain("standard error must be nonnegative");
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    Ok(TestReport::new(
        "moment",
        mean - reference,
        Reference::Value(reference),
        None,
        Some(MOMENT_SIGMAS * reference_sd_of_mean),
        vec![xs.len()],
    ))
}

/// Moment tests of E[X^p], p = 1, 2, against ML(α, θ).
pub fn ml_moment_tests(xs: &[f64], params: AlphaTheta) -> Result<Vec<TestReport>> {
    let n = xs.len() as f64;
    let mut out = Vec::with_capacity(2);
    for p in 1..=2u32 {
        let (m, m2) = (ml_moment(params, p)?, ml_moment(params, 2 * p)?);
        let powers: Vec<f64> = xs.iter().map(|x| x.powi(p as i32)).collect();
        let name = format!("ML({:.4}, {:.4}) moment {p}", params.alpha, params.theta);
        out.push(moment_test(&powers, m, ((m2 - m * m) / n).sqrt())?.named(name));
    }
    Ok(out)
}

/// Tallies keys.
pub fn count<K: Ord>(keys: impl IntoIterator<Item = K>) -> BTreeMap<K, u64> {
    let mut m = BTreeMap::new();
    for k in keys {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample_beta, sample_ml};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_samples() {
        let xs = [0.3, 0.1, 0.7, 0.2];
        let r = ks_two_sample(&xs, &xs).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, Some(1.0));
        assert!(ks_two_sample(&[], &xs).is_err());
        let c = ks_two_sample(&[0.0; 5], &[0.0; 7]).unwrap();
        assert!(c.pass);
    }

    #[test]
    fn kolmogorov_values() {
        assert!((kolmogorov_q(1.0) - 0.26999967).abs() < 1e-6);
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 1e-3);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn uniform_beta_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_vs_beta(&xs, 1.0, 1.0).unwrap().pass);
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(!ks_vs_beta(&ys, 1.0, 1.0).unwrap().pass);
        let zs: Vec<f64> = (0..5000).map(|_| sample_beta(2.0, 1.0, &mut rng).unwrap()).collect();
        assert!(ks_vs_beta(&zs, 2.0, 1.0).unwrap().pass);
    }

    #[test]
    fn chi_square_pooling_and_support() {
        let probs = [0.5, 0.3, 0.199, 0.001];
        let r = chi_square(&[500, 300, 199, 1], &probs).unwrap();
        assert!(r.pass);
        assert!(r.statistic < 1e-9);
        let bad = chi_square(&[1, 0], &[0.0, 1.0]).unwrap();
        assert!(!bad.pass);
        assert!(chi_square(&[1, 2], &[0.5, 0.6]).is_err());
        let same = chi_square_two_sample(&[40, 60, 3], &[40, 60, 3]).unwrap();
        assert_eq!(same.statistic, 0.0);
        let far = chi_square_two_sample(&[100, 0], &[0, 100]).unwrap();
        assert!(!far.pass);
    }

    #[test]
    fn pooling_covers_all_cells() {
        let (map, pools) = pool(&[1.0, 1.0, 1.0, 10.0, 2.0], 5.0);
        assert!(map.iter().all(|&m| m < pools));
        assert_eq!(pools, 2);
        let (_, one) = pool(&[1.0, 1.0], 5.0);
        assert_eq!(one, 1);
    }

    #[test]
    fn moment_and_bundle_rule() {
        let r = moment_test(&[1.0, 3.0], 2.0, 0.1).unwrap();
        assert!(r.pass && r.verdict());
        let bad = moment_test(&[1.0, 1.0], 2.0, 0.1).unwrap();
        assert!(!bad.pass);
        let mut reports = vec![r.clone(); 9];
        reports.push(bad);
        assert!(bundle_passes(&reports));
        reports.push(ks_two_sample(&[0.0; 50], &[1.0; 50]).unwrap());
        assert!(!bundle_passes(&reports));
    }

    #[test]
    fn ml_moments_of_sampler() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = AlphaTheta::new(0.5, 0.5).unwrap();
        let xs: Vec<f64> = (0..20_000).map(|_| sample_ml(p, &mut rng).unwrap()).collect();
        assert!(ml_moment_tests(&xs, p).unwrap().iter().all(|r| r.pass));
    }
}
