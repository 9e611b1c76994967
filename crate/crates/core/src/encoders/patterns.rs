use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;
use crate::spikes::SpikeTensor;

const PATTERN_STREAM: u64 = 0x7061_7474;

/// `n_patterns` seeded Bernoulli spike patterns of shape `[horizon x channels]`,
/// pairwise distinct.
pub fn gen_patterns(
    n_patterns: usize,
    channels: usize,
    horizon: usize,
    pattern_rate: f64,
    seed: u64,
) -> Result<Vec<SpikeTensor>> {
    if !(pattern_rate > 0.0 && pattern_rate < 1.0) {
        return Err(Error::param(
            "pattern_rate",
            format!("must be in (0, 1), got {pattern_rate}"),
        ));
    }
    let mut patterns: Vec<SpikeTensor> = Vec::with_capacity(n_patterns);
    for k in 0..n_patterns {
        let mut attempt = 0u64;
        loop {
            let mut rng = rng::stream(seed, &[PATTERN_STREAM, k as u64, attempt]);
            let mut p = SpikeTensor::zeros(horizon, channels);
            for t in 0..horizon {
                for n in 0..channels {
                    if rng.random::<f64>() < pattern_rate {
                        p.set(t, n, true);
                    }
                }
            }
            if !patterns.contains(&p) {
                patterns.push(p);
                break;
            }
            attempt += 1;
            if attempt > 1000 {
                return Err(Error::param(
                    "n_patterns",
                    "cannot draw that many distinct patterns at this size and rate",
                ));
            }
        }
    }
    Ok(patterns)
}
