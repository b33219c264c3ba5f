//! Every statistical test run against its own null.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{chi_square, chi_square_two_sample, ks_two_sample, ks_vs_beta, moment_test, TestReport};
use crate::distributions::sample_beta;
use crate::error::{domain, Result};
use crate::{replicate, Stream};

/// Smallest fraction of seeds on which a test must pass its own null.
pub const CALIBRATION_MIN_RATE: f64 = 0.98;

/// Pass count of one test over independent seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub test: String,
    pub passes: usize,
    pub seeds: usize,
    pub pass: bool,
}

impl CalibrationResult {
    pub fn rate(&self) -> f64 {
        self.passes as f64 / self.seeds as f64
    }
}

const PROBS: [f64; 6] = [0.05, 0.1, 0.15, 0.2, 0.2, 0.3];

fn category(rng: &mut Stream) -> usize {
    let mut u = rng.random::<f64>();
    for (i, p) in PROBS.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    PROBS.len() - 1
}

fn counts(rng: &mut Stream, n: usize) -> Vec<u64> {
    let mut c = vec![0; PROBS.len()];
    for _ in 0..n {
        c[category(rng)] += 1;
    }
    c
}

fn betas(rng: &mut Stream, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| sample_beta(2.0, 3.0, rng)).collect()
}

type Trial = fn(&mut Stream, usize) -> Result<TestReport>;

const TRIALS: [(&str, Trial); 6] = [
    ("ks_vs_beta", |rng, n| ks_vs_beta(&betas(rng, n)?, 2.0, 3.0)),
    ("ks_vs_uniform", |rng, n| ks_vs_beta(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>(), 1.0, 1.0)),
    ("ks_two_sample", |rng, n| ks_two_sample(&betas(rng, n)?, &betas(rng, n + n / 3)?)),
    ("chi_square", |rng, n| chi_square(&counts(rng, n), &PROBS)),
    ("chi_square_two_sample", |rng, n| chi_square_two_sample(&counts(rng, n), &counts(rng, n + n / 3))),
    ("moment_test", |rng, n| moment_test(&betas(rng, n)?, 0.4, (0.04 / n as f64).sqrt())),
];

/// Runs each test on `seeds` independent samples of size `n` drawn from its
/// own null hypothesis.
pub fn calibration(seed: u64, seeds: usize, n: usize) -> Result<Vec<CalibrationResult>> {
    if seeds == 0 || n < 100 {
        return domain(format!("calibration needs seeds >= 1 and n >= 100, got {seeds} and {n}"));
    }
    let mut out = Vec::with_capacity(TRIALS.len());
    for (t, (name, trial)) in TRIALS.iter().enumerate() {
        let pass = replicate(seed.wrapping_add(t as u64 * 1_000_003), seeds, |rng| Ok(trial(rng, n)?.pass))?;
        let passes = pass.iter().filter(|&&p| p).count();
        out.push(CalibrationResult {
            test: name.to_string(),
            passes,
            seeds,
            pass: passes as f64 >= CALIBRATION_MIN_RATE * seeds as f64,
        });
    }
    Ok(out)
}
