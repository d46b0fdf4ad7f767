//! Seeded train/test splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Sample;
use crate::error::{LucidError, Result};

/// Disjoint, exhaustive split after a seeded shuffle. The test side gets
/// `round(n * test_fraction)` rows; both sides must end up non-empty.
pub fn split(
    samples: &[Sample],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<Sample>, Vec<Sample>)> {
    if !(0.0..1.0).contains(&test_fraction) || test_fraction == 0.0 {
        return Err(LucidError::InvalidConfig(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n = samples.len();
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(LucidError::InvalidConfig(format!(
            "degenerate split: {n} rows at test_fraction {test_fraction} \
             leaves {n_test} test rows"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order[..n_test].iter().map(|&i| samples[i].clone()).collect();
    let train = order[n_test..].iter().map(|&i| samples[i].clone()).collect();
    Ok((train, test))
}
