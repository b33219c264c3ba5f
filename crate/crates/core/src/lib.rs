//! Random tree growth on strings of beads: stable, Ford and two-colour
//! constructions, their discrete analogues, and a verification harness.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod beads;
pub mod crp;
pub mod distributions;
pub mod error;
pub mod growth;
pub mod metrics;
pub mod rtree;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use num_rational::BigRational as Rational;
pub use rtree::{DiscreteTree, Tree};

/// Random stream used by every sampler in the crate.
pub type Stream = rand_chacha::ChaCha8Rng;

/// Stream for replicate `index` under master `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    use rand::SeedableRng;
    let mut rng = Stream::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f` on replicates 0..n in parallel, each on its own stream, and
/// returns the results in replicate order.
pub fn replicate<T, F>(seed: u64, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut Stream) -> Result<T> + Sync,
{
    use rayon::prelude::*;
    (0..n as u64).into_par_iter().map(|i| f(&mut stream(seed, i))).collect()
}

/// Formats a float with 17 significant digits (round-trip exact).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
