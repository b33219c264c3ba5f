//! Scalar samplers and closed forms: Beta, Gamma, Dirichlet, GEM sticks,
//! one-sided stable, generalized Mittag-Leffler and α-diversity.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{capability, domain, Result};

/// Largest θ/α accepted by [`sample_ml`] unless a caller raises it.
pub const ML_GUARD: f64 = 15.0;

/// Two-parameter family index (α, θ) with 0 < α < 1 and θ > −α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaTheta {
    pub alpha: f64,
    pub theta: f64,
}

impl AlphaTheta {
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        let p = Self { alpha, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return domain(format!("alpha = {} not in (0,1)", self.alpha));
        }
        if !(self.theta > -self.alpha) || !self.theta.is_finite() {
            return domain(format!("theta = {} not > -alpha = {}", self.theta, -self.alpha));
        }
        Ok(())
    }
}

/// p-th moment of ML(α, θ).
pub fn ml_moment(params: AlphaTheta, p: u32) -> Result<f64> {
    params.validate()?;
    if p == 0 {
        return Ok(1.0);
    }
    let AlphaTheta { alpha: a, theta: t } = params;
    let p = p as f64;
    let log = ln_gamma(t + 1.0) + ln_gamma(t / a + 1.0 + p) - ln_gamma(t / a + 1.0) - ln_gamma(t + p * a + 1.0);
    Ok(log.exp())
}

/// Beta(a, b) with the conventions Beta(a, 0) = δ₁ and Beta(0, b) = δ₀.
pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    if !(a >= 0.0 && b >= 0.0) || (a == 0.0 && b == 0.0) {
        return domain(format!("Beta({a}, {b}) undefined"));
    }
    if b == 0.0 {
        return Ok(1.0);
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let x = sample_gamma(a, rng)?;
    let y = sample_gamma(b, rng)?;
    Ok(if x + y > 0.0 { x / (x + y) } else { sample_beta(a, b, rng)? })
}

/// Gamma(shape, 1).
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    match Gamma::new(shape, 1.0) {
        Ok(g) => Ok(g.sample(rng)),
        Err(_) => domain(format!("Gamma shape {shape} must be positive")),
    }
}

/// Positive stable variable with E e^{−λT} = e^{−λ^α} (Kanter's representation).
pub fn sample_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("stable index {alpha} not in (0,1)"));
    }
    loop {
        let u = PI * rng.random::<f64>();
        let e: f64 = Exp1.sample(rng);
        if u <= 0.0 || e <= 0.0 {
            continue;
        }
        let log_a = (alpha * u).sin().ln() * alpha / (1.0 - alpha) + ((1.0 - alpha) * u).sin().ln()
            - u.sin().ln() / (1.0 - alpha);
        let t = ((log_a - e.ln()) * (1.0 - alpha) / alpha).exp();
        if t.is_finite() && t > 0.0 {
            return Ok(t);
        }
    }
}

/// ML(α, θ) for θ ≥ 0 with the default guard θ/α ≤ [`ML_GUARD`].
pub fn sample_ml<R: Rng + ?Sized>(params: AlphaTheta, rng: &mut R) -> Result<f64> {
    sample_ml_guarded(params, ML_GUARD, rng)
}

/// ML(α, θ) by polynomial tilting of T^{−α}: λ = G^{1/α} with G ~ Gamma(θ/α),
/// then T exponentially tilted by λ. The tilted variable is built as a sum of
/// ⌈G⌉ pieces each accepted with probability ≥ e^{−1}, so work is linear in θ/α.
pub fn sample_ml_guarded<R: Rng + ?Sized>(params: AlphaTheta, guard: f64, rng: &mut R) -> Result<f64> {
    params.validate()?;
    let AlphaTheta { alpha, theta } = params;
    if theta < 0.0 {
        return domain(format!("sample_ml needs theta >= 0, got {theta}"));
    }
    if theta / alpha > guard {
        return capability(format!(
            "theta/alpha = {} exceeds the rejection guard {guard}; build the law constructively",
            theta / alpha
        ));
    }
    if theta == 0.0 {
        return Ok(sample_stable(alpha, rng)?.powf(-alpha));
    }
    let g = sample_gamma(theta / alpha, rng)?;
    let pieces = g.ceil().max(1.0);
    let mu = (g / pieces).powf(1.0 / alpha);
    let mut sum = 0.0;
    for _ in 0..pieces as usize {
        loop {
            let t = sample_stable(alpha, rng)?;
            if rng.random::<f64>() <= (-mu * t).exp() {
                sum += t;
                break;
            }
        }
    }
    Ok(pieces * sum.powf(-alpha))
}

/// ML(α, θ) without the guard, for internal chains whose θ/α grows with size.
pub(crate) fn ml<R: Rng + ?Sized>(alpha: f64, theta: f64, rng: &mut R) -> Result<f64> {
    sample_ml_guarded(AlphaTheta::new(alpha, theta)?, f64::INFINITY, rng)
}

/// Parameters and one draw of a Dirichlet vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSplit {
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

/// Dirichlet(weights) by Gamma normalization.
pub fn sample_dirichlet<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<DirichletSplit> {
    if weights.is_empty() {
        return domain("Dirichlet needs at least one weight");
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return domain(format!("Dirichlet weight {w} must be positive"));
    }
    if weights.len() == 1 {
        return Ok(DirichletSplit { weights: weights.to_vec(), values: vec![1.0] });
    }
    loop {
        let g: Vec<f64> = weights.iter().map(|&w| sample_gamma(w, rng)).collect::<Result<_>>()?;
        let total: f64 = g.iter().sum();
        if total > 0.0 && total.is_finite() {
            return Ok(DirichletSplit { weights: weights.to_vec(), values: g.iter().map(|x| x / total).collect() });
        }
    }
}

/// First `sticks.len()` proportions of a GEM(α, θ) sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickSequence {
    pub params: AlphaTheta,
    pub sticks: Vec<f64>,
}

impl StickSequence {
    pub fn truncation(&self) -> usize {
        self.sticks.len()
    }

    pub fn residual(&self) -> f64 {
        1.0 - self.sticks.iter().sum::<f64>()
    }
}

/// GEM(α, θ) stick-breaking with V_i ~ Beta(1−α, θ+iα).
pub fn gem_sticks<R: Rng + ?Sized>(params: AlphaTheta, n: usize, rng: &mut R) -> Result<StickSequence> {
    params.validate()?;
    if n == 0 {
        return domain("gem_sticks needs n >= 1");
    }
    Ok(StickSequence { params, sticks: gem_continue(params, 0, 1.0, n, rng)? })
}

/// Sticks `start+1 ..= start+n` of GEM(α, θ) given remaining mass `rest`.
pub(crate) fn gem_continue<R: Rng + ?Sized>(
    params: AlphaTheta,
    start: usize,
    mut rest: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let AlphaTheta { alpha, theta } = params;
    let mut out = Vec::with_capacity(n);
    for i in start + 1..=start + n {
        let b = theta + i as f64 * alpha;
        if b <= 0.0 {
            return domain(format!("GEM stick {i}: theta + i*alpha = {b} <= 0"));
        }
        let v = sample_beta(1.0 - alpha, b, rng)?;
        out.push(rest * v);
        rest *= 1.0 - v;
    }
    Ok(out)
}

/// How the masses handed to [`alpha_diversity`] are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MassOrder {
    /// Size-biased (GEM) order.
    Stick,
    /// Arbitrary order; ranked internally.
    Ranked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DiversityEstimator {
    /// (1 − Σ_{i≤k} P_i)^α α^{−α} k^{1−α}.
    StickOrder { k: usize },
    /// i Γ(1−α) (P_i^↓)^α.
    Ranked { i: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityEstimate {
    pub value: f64,
    pub estimator: DiversityEstimator,
}

/// Truncation estimate of the α-diversity of a mass partition.
///
/// The ranked variant reads the order statistic at i = ⌊len/10⌋, deep enough
/// to average out fluctuations but well above the truncation point.
pub fn alpha_diversity(masses: &[f64], alpha: f64, order: MassOrder) -> Result<DiversityEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha = {alpha} not in (0,1)"));
    }
    if masses.len() < 10 {
        return domain(format!("alpha_diversity needs at least 10 masses, got {}", masses.len()));
    }
    match order {
        MassOrder::Stick => {
            let k = masses.len();
            let rest = (1.0 - masses.iter().sum::<f64>()).max(0.0);
            let value = rest.powf(alpha) * alpha.powf(-alpha) * (k as f64).powf(1.0 - alpha);
            Ok(DiversityEstimate { value, estimator: DiversityEstimator::StickOrder { k } })
        }
        MassOrder::Ranked => {
            let mut ranked = masses.to_vec();
            ranked.sort_by(|a, b| b.total_cmp(a));
            let i = masses.len() / 10;
            let value = i as f64 * ln_gamma(1.0 - alpha).exp() * ranked[i - 1].powf(alpha);
            Ok(DiversityEstimate { value, estimator: DiversityEstimator::Ranked { i } })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean_sd(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn moment_formula_at_half() {
        let p = AlphaTheta::new(0.5, 0.5).unwrap();
        assert_eq!(ml_moment(p, 0).unwrap(), 1.0);
        // Γ(1.5)Γ(3)/(Γ(2)Γ(2)) = √π/2 · 2
        let sqrt_pi = PI.sqrt();
        assert!((ml_moment(p, 1).unwrap() - sqrt_pi).abs() < 1e-12);
        // Γ(1.5)Γ(4)/(Γ(2)Γ(2.5)) = 6 / 1.5
        assert!((ml_moment(p, 2).unwrap() - 4.0).abs() < 1e-12);
        // θ = 0: Γ(2)/Γ(1.5) = 2/√π
        let p0 = AlphaTheta::new(0.5, 0.0).unwrap();
        assert!((ml_moment(p0, 1).unwrap() - 2.0 / sqrt_pi).abs() < 1e-12);
    }

    #[test]
    fn parameter_domain() {
        assert!(AlphaTheta::new(1.0, 0.5).is_err());
        assert!(AlphaTheta::new(0.5, -0.5).is_err());
        assert!(AlphaTheta::new(0.5, -0.4).is_ok());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_stable(1.0, &mut rng).is_err());
        let far = AlphaTheta::new(0.5, 10.0).unwrap();
        assert!(matches!(sample_ml(far, &mut rng), Err(crate::Error::Capability(_))));
        assert!(sample_dirichlet(&[1.0, 0.0], &mut rng).is_err());
    }

    #[test]
    fn stable_laplace_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<f64> = (0..100_000).map(|_| sample_stable(0.5, &mut rng).unwrap()).collect();
        for lambda in [0.5_f64, 1.0, 2.0] {
            let xs: Vec<f64> = draws.iter().map(|t| (-lambda * t).exp()).collect();
            let (m, se) = mean_sd(&xs);
            assert!((m - (-lambda.sqrt()).exp()).abs() < 4.0 * se, "lambda {lambda}: {m}");
        }
    }

    #[test]
    fn ml_first_two_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (a, t) in [(0.5, 0.0), (0.5, 0.5), (0.3, 1.0)] {
            let p = AlphaTheta::new(a, t).unwrap();
            let xs: Vec<f64> = (0..50_000).map(|_| sample_ml(p, &mut rng).unwrap()).collect();
            for k in [1, 2] {
                let pow: Vec<f64> = xs.iter().map(|x| x.powi(k)).collect();
                let (m, se) = mean_sd(&pow);
                let r = ml_moment(p, k as u32).unwrap();
                assert!((m - r).abs() < 4.0 * se, "({a},{t}) p={k}: {m} vs {r}");
            }
        }
    }

    #[test]
    fn dirichlet_means_and_single_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = 1.0 / 3.0;
        let w = [b, 1.0 - 2.0 * b, b];
        let draws: Vec<Vec<f64>> = (0..50_000).map(|_| sample_dirichlet(&w, &mut rng).unwrap().values).collect();
        for i in 0..3 {
            let xs: Vec<f64> = draws.iter().map(|d| d[i]).collect();
            let (m, se) = mean_sd(&xs);
            assert!((m - 1.0 / 3.0).abs() < 4.0 * se);
        }
        for d in &draws {
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(sample_dirichlet(&[5.0], &mut rng).unwrap().values, vec![1.0]);
    }

    #[test]
    fn beta_point_masses() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(sample_beta(0.5, 0.0, &mut rng).unwrap(), 1.0);
        assert_eq!(sample_beta(0.0, 2.0, &mut rng).unwrap(), 0.0);
        assert!(sample_beta(0.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn gem_first_stick_and_partial_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = 1.0 / 3.0;
        let p = AlphaTheta::new(1.0 - b, -b).unwrap();
        let firsts: Vec<f64> = (0..20_000).map(|_| gem_sticks(p, 1, &mut rng).unwrap().sticks[0]).collect();
        let (m, se) = mean_sd(&firsts);
        assert!((m - 0.5).abs() < 4.0 * se);

        let half = AlphaTheta::new(0.5, 0.5).unwrap();
        let mut residuals = Vec::new();
        for _ in 0..20_000 {
            let s = gem_sticks(half, 50, &mut rng).unwrap();
            let mut acc = 0.0;
            for x in &s.sticks {
                assert!(*x > 0.0 && *x < 1.0);
                let next = acc + x;
                assert!(next > acc && next < 1.0);
                acc = next;
            }
            residuals.push(1.0 - acc);
        }
        // E Π(1−V_j) = Π (θ+jα)/(1−α+θ+jα) by independence of the V_j.
        let expected: f64 = (1..=50).map(|j| (0.5 + 0.5 * j as f64) / (1.0 + 0.5 * j as f64)).product();
        let (m, se) = mean_sd(&residuals);
        assert!((m - expected).abs() < 4.0 * se, "{m} vs {expected}");
    }

    #[test]
    fn diversity_degenerate_and_domain() {
        let mut masses = vec![1.0];
        masses.extend([0.0; 9]);
        let est = alpha_diversity(&masses, 0.5, MassOrder::Stick).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(alpha_diversity(&[0.5, 0.5], 0.5, MassOrder::Stick).is_err());
    }

    #[test]
    fn diversity_estimators_agree_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = AlphaTheta::new(0.5, 0.5).unwrap();
        let (mut stick, mut ranked) = (Vec::new(), Vec::new());
        for _ in 0..400 {
            let s = gem_sticks(p, 10_000, &mut rng).unwrap();
            stick.push(alpha_diversity(&s.sticks, 0.5, MassOrder::Stick).unwrap().value);
            ranked.push(alpha_diversity(&s.sticks, 0.5, MassOrder::Ranked).unwrap().value);
        }
        let (ms, _) = mean_sd(&stick);
        let (mr, _) = mean_sd(&ranked);
        let reference = ml_moment(p, 1).unwrap();
        assert!((ms - reference).abs() / reference < 0.05, "stick {ms} vs {reference}");
        assert!((mr - ms).abs() / ms < 0.10, "ranked {mr} vs stick {ms}");
    }
}
