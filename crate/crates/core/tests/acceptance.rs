//! Acceptance suite: one pass/fail line per criterion.
//!
//! Statistical criteria run at their stated sample sizes with fixed seeds;
//! a red line is reported, not turned into a test failure.

use std::time::Instant;

use crt_core::scalar::Exact;
use crt_core::stats::{
    bundle_passes, calibration, verify_discrete_scaling, verify_duality, verify_ford_embedding, verify_gem_fragments,
    verify_metrics, verify_ml_sampler, verify_theorem_1_1, verify_two_colour_structure, Bundle, TestReport,
};
use crt_core::{Rational, Result};

const SEED: u64 = 20_240_601;

fn failures(reports: &[TestReport]) -> String {
    let bad: Vec<String> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| match r.p_value {
            Some(p) => format!("{} (p={p:.2e})", r.name),
            None => format!("{} (stat={:.3e}, tol={:.3e})", r.name, r.statistic, r.tolerance.unwrap_or(f64::NAN)),
        })
        .collect();
    if bad.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", bad.join(", "))
    }
}

fn line(id: u32, title: &str, started: Instant, outcome: Result<(bool, String)>) {
    let secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok((pass, detail)) => {
            println!("criterion {id}: {} {title} [{secs:.1}s] {detail}", if pass { "PASS" } else { "FAIL" })
        }
        Err(e) => println!("criterion {id}: FAIL {title} [{secs:.1}s] error: {e}"),
    }
}

fn summary(reports: &[TestReport]) -> (bool, String) {
    let passed = reports.iter().filter(|r| r.pass).count();
    (bundle_passes(reports), format!("{passed}/{} sub-tests{}", reports.len(), failures(reports)))
}

fn all_pass(reports: &[TestReport]) -> (bool, String) {
    let passed = reports.iter().filter(|r| r.pass).count();
    (passed == reports.len(), format!("{passed}/{} checks{}", reports.len(), failures(reports)))
}

fn pooled(bundles: Vec<Bundle>) -> Vec<TestReport> {
    bundles.into_iter().flat_map(|b| b.reports).collect()
}

fn main() {
    let t = Instant::now();
    line(
        1,
        "exact duality, n <= 8, beta' in {1/4, 1/2, 3/4}",
        t,
        (|| {
            let bps = [Rational::from_ratio(1, 4), Rational::from_ratio(1, 2), Rational::from_ratio(3, 4)];
            let b = verify_duality(8, &bps)?;
            let exact = b.reports.iter().all(|r| r.statistic == 0.0);
            Ok((b.pass && exact, format!("{} parameter sets, max discrepancy 0: {exact}", b.reports.len())))
        })(),
    );

    let t = Instant::now();
    line(
        2,
        "ML sampler moments p = 1, 2 within 4 SE, N = 1e5",
        t,
        (|| Ok(all_pass(&verify_ml_sampler(100_000, SEED)?.reports)))(),
    );

    let t = Instant::now();
    line(
        3,
        "contracted two-colour tree vs stable marginal, beta in {1/3, 0.4, 1/2}, k in {1, 2, 3}, N = 1e4",
        t,
        (|| {
            let mut bundles = Vec::new();
            for beta in [1.0 / 3.0, 0.4, 0.5] {
                for k in 1..=3 {
                    bundles.push(verify_theorem_1_1(beta, k, 10_000, SEED + k as u64)?);
                }
            }
            Ok(summary(&pooled(bundles)))
        })(),
    );

    let t = Instant::now();
    line(
        4,
        "two-colour structure and Dirichlet mass split at k = 2, N = 1e5",
        t,
        (|| {
            let mut bundles = Vec::new();
            for beta in [1.0 / 3.0, 0.25] {
                bundles.push(verify_two_colour_structure(beta, 10, 2_000, 100_000, SEED)?);
            }
            Ok(all_pass(&pooled(bundles)))
        })(),
    );

    let t = Instant::now();
    line(
        5,
        "Ford embedding at beta = 1/3, m_max = 4, 1e4 runs",
        t,
        (|| Ok(summary(&verify_ford_embedding(1.0 / 3.0, 10_000, 4, SEED)?.reports)))(),
    );

    let t = Instant::now();
    line(
        6,
        "first GEM fragment vs Beta(beta, 1 - 2 beta), N = 1e4",
        t,
        (|| {
            let mut bundles = Vec::new();
            for beta in [1.0 / 3.0, 0.25, 0.4] {
                bundles.push(verify_gem_fragments(beta, &[1, 5], 10_000, SEED)?);
            }
            Ok(summary(&pooled(bundles)))
        })(),
    );

    let t = Instant::now();
    line(
        7,
        "discrete scaling within 10%, n = 1e4",
        t,
        (|| Ok(all_pass(&verify_discrete_scaling(1.0 / 3.0, 10_000, 1_000, SEED)?.reports)))(),
    );

    let t = Instant::now();
    line(
        8,
        "metric axioms on 1e3 triples and truncation tail bound",
        t,
        (|| Ok(all_pass(&verify_metrics(1_000, SEED)?.reports)))(),
    );

    let t = Instant::now();
    line(
        9,
        "own-null calibration, >= 98/100 seeds",
        t,
        (|| {
            let results = calibration(SEED, 100, 2_000)?;
            let detail: Vec<String> = results.iter().map(|r| format!("{} {}/{}", r.test, r.passes, r.seeds)).collect();
            Ok((results.iter().all(|r| r.pass), detail.join(", ")))
        })(),
    );
}
