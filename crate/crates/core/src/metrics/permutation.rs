//! Paired sign-flip permutation test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{MetricsError, Result};

/// Two-sided p-value for the mean of `a - b` under random sign flips:
/// `(1 + #{|resampled mean| >= |observed mean|}) / (1 + resamples)`.
///
/// Resample `i` draws its signs from stream `i` of a generator seeded with
/// `seed`, so the result does not depend on thread count.
pub fn permutation_test(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(MetricsError::TooFewScores(a.len()));
    }
    if resamples == 0 {
        return Err(MetricsError::NoResamples);
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len() as f64;
    let observed = (diffs.iter().sum::<f64>() / n).abs();
    // absorbs summation-order noise so ties with the observed value count
    let tolerance = 1e-12 * (1.0 + observed);
    let hits = (0..resamples)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let sum: f64 = diffs.iter().map(|d| if rng.random::<bool>() { *d } else { -*d }).sum();
            (sum / n).abs() >= observed - tolerance
        })
        .count();
    Ok((1 + hits) as f64 / (1 + resamples) as f64)
}
