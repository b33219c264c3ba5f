//! Ordered (α, θ) Chinese restaurant process.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::AlphaTheta;
use crate::error::{domain, Result};
use crate::fmt17;

/// Column header of [`CrpState::csv_row`].
pub const CSV_HEADER: &str = "n,K_n,n^{-alpha}K_n,composition";

/// Seating state of an ordered CRP with θ > 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrpState {
    pub params: AlphaTheta,
    pub n: usize,
    /// Table occupancies, left to right.
    pub tables_ltr: Vec<usize>,
    /// Least-label rank to left-to-right position.
    pub least_label_order: Vec<usize>,
    /// Customer labels (1-based, increasing) per table, left to right.
    pub customer_of_table: Vec<Vec<u32>>,
}

impl CrpState {
    pub fn new(params: AlphaTheta) -> Result<Self> {
        params.validate()?;
        if params.theta <= 0.0 {
            return domain(format!("ordered CRP needs theta > 0, got {}", params.theta));
        }
        Ok(Self { params, n: 0, tables_ltr: Vec::new(), least_label_order: Vec::new(), customer_of_table: Vec::new() })
    }

    /// Number of occupied tables K_n.
    pub fn tables(&self) -> usize {
        self.tables_ltr.len()
    }

    /// Seats customer n+1.
    pub fn seat<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let AlphaTheta { alpha, theta } = self.params;
        let k = self.tables();
        let label = self.n as u32 + 1;
        let mut u = rng.random::<f64>() * (self.n as f64 + theta);
        for pos in 0..k {
            u -= self.tables_ltr[pos] as f64 - alpha;
            if u < 0.0 {
                self.tables_ltr[pos] += 1;
                self.customer_of_table[pos].push(label);
                self.n += 1;
                return;
            }
        }
        let pos = if u < k as f64 * alpha { ((u / alpha) as usize).min(k - 1) } else { k };
        for p in self.least_label_order.iter_mut() {
            if *p >= pos {
                *p += 1;
            }
        }
        self.least_label_order.push(pos);
        self.tables_ltr.insert(pos, 1);
        self.customer_of_table.insert(pos, vec![label]);
        self.n += 1;
    }

    /// Left-to-right occupancies.
    pub fn composition(&self) -> Vec<usize> {
        self.tables_ltr.clone()
    }

    /// Occupancies in least-label order.
    pub fn least_label_sizes(&self) -> Vec<usize> {
        self.least_label_order.iter().map(|&p| self.tables_ltr[p]).collect()
    }

    /// Occupancies over n in least-label order.
    pub fn limiting_frequencies(&self) -> Result<Vec<f64>> {
        if self.n == 0 {
            return domain("limiting_frequencies needs n >= 1");
        }
        Ok(self.least_label_sizes().into_iter().map(|c| c as f64 / self.n as f64).collect())
    }

    /// n^{−α} K_n.
    pub fn scaled_tables(&self) -> f64 {
        self.tables() as f64 / (self.n as f64).powf(self.params.alpha)
    }

    pub fn csv_row(&self) -> String {
        let comp: Vec<String> = self.tables_ltr.iter().map(|c| c.to_string()).collect();
        format!("{},{},{},{}", self.n, self.tables(), fmt17(self.scaled_tables()), comp.join(";"))
    }
}

/// Returns the state after seating one more customer.
pub fn crp_seat<R: Rng + ?Sized>(mut state: CrpState, rng: &mut R) -> CrpState {
    state.seat(rng);
    state
}

/// Seats `n` customers, writing one CSV row per `every` customers (and the last).
pub fn run_csv<R: Rng + ?Sized, W: Write>(
    params: AlphaTheta,
    n: usize,
    every: usize,
    rng: &mut R,
    out: &mut W,
) -> Result<CrpState> {
    let mut state = CrpState::new(params)?;
    writeln!(out, "{CSV_HEADER}")?;
    let every = every.max(1);
    for i in 1..=n {
        state.seat(rng);
        if i % every == 0 || i == n {
            writeln!(out, "{}", state.csv_row())?;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn half() -> AlphaTheta {
        AlphaTheta::new(0.5, 0.5).unwrap()
    }

    #[test]
    fn first_customer_opens_first_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = crp_seat(CrpState::new(half()).unwrap(), &mut rng);
        assert_eq!(s.composition(), vec![1]);
        assert_eq!(s.limiting_frequencies().unwrap(), vec![1.0]);
        assert_eq!(s.least_label_order, vec![0]);
    }

    #[test]
    fn rejects_nonpositive_theta() {
        assert!(CrpState::new(AlphaTheta::new(0.5, 0.0).unwrap()).is_err());
    }

    #[test]
    fn second_customer_join_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mut joins = 0;
        for _ in 0..n {
            let mut s = CrpState::new(half()).unwrap();
            s.seat(&mut rng);
            s.seat(&mut rng);
            if s.tables() == 1 {
                joins += 1;
            }
        }
        let p = 1.0 / 3.0;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((joins as f64 / n as f64 - p).abs() < 4.0 * sd);
    }

    #[test]
    fn bookkeeping_is_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = CrpState::new(AlphaTheta::new(0.3, 1.0).unwrap()).unwrap();
        for _ in 0..2_000 {
            s.seat(&mut rng);
        }
        assert_eq!(s.tables_ltr.iter().sum::<usize>(), s.n);
        let mut labels: Vec<u32> = s.customer_of_table.iter().flatten().copied().collect();
        labels.sort_unstable();
        assert_eq!(labels, (1..=s.n as u32).collect::<Vec<_>>());
        let mut order = s.least_label_order.clone();
        order.sort_unstable();
        assert_eq!(order, (0..s.tables()).collect::<Vec<_>>());
        let mins: Vec<u32> = s.least_label_order.iter().map(|&p| s.customer_of_table[p][0]).collect();
        assert!(mins.windows(2).all(|w| w[0] < w[1]));
        for (t, c) in s.tables_ltr.iter().zip(&s.customer_of_table) {
            assert_eq!(*t, c.len());
        }
        let total: f64 = s.limiting_frequencies().unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut buf = Vec::new();
        run_csv(half(), 10, 5, &mut rng, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("10,"));
    }
}
