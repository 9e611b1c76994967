use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::spikes::SpikeTensor;

/// Zeroes a block of channels `[channels.0, channels.1)` over steps `[times.0, times.1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occlusion {
    pub channels: (usize, usize),
    pub times: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Standard deviation of the Gaussian timing jitter, in steps.
    #[serde(default = "default_jitter")]
    pub jitter_sigma: f64,
    #[serde(default = "default_delete")]
    pub delete_prob: f64,
    /// Spikes per step per channel.
    #[serde(default = "default_background")]
    pub background_rate: f64,
    #[serde(default)]
    pub occlusions: Vec<Occlusion>,
    #[serde(default)]
    pub seed: u64,
}

fn default_jitter() -> f64 {
    2.0
}
fn default_delete() -> f64 {
    0.2
}
fn default_background() -> f64 {
    0.01
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            jitter_sigma: default_jitter(),
            delete_prob: default_delete(),
            background_rate: default_background(),
            occlusions: Vec::new(),
            seed: 0,
        }
    }
}

impl NoiseModel {
    /// No corruption at all.
    pub fn none() -> Self {
        NoiseModel {
            jitter_sigma: 0.0,
            delete_prob: 0.0,
            background_rate: 0.0,
            occlusions: Vec::new(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_identity(&self) -> bool {
        self.jitter_sigma == 0.0 && self.delete_prob == 0.0 && self.background_rate == 0.0 && self.occlusions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return Err(Error::param("jitter_sigma", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.delete_prob) {
            return Err(Error::param("delete_prob", "must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.background_rate) {
            return Err(Error::param("background_rate", "must be in [0, 1]"));
        }
        Ok(())
    }
}

/// Occlusion, then per-spike deletion, then Gaussian jitter (rounded half to even; spikes
/// pushed outside `[0, T)` are lost, collisions merge), then background spikes OR-ed in.
pub fn corrupt(pattern: &SpikeTensor, noise: &NoiseModel) -> Result<SpikeTensor> {
    noise.validate()?;
    let (horizon, channels) = (pattern.horizon(), pattern.channels());
    let mut rng = rng::stream(noise.seed, &[]);

    let mut kept: Vec<(usize, usize)> = pattern
        .events()
        .filter(|&(t, n)| {
            !noise
                .occlusions
                .iter()
                .any(|o| (o.channels.0..o.channels.1).contains(&n) && (o.times.0..o.times.1).contains(&t))
        })
        .collect();

    if noise.delete_prob > 0.0 {
        kept.retain(|_| rng.random::<f64>() >= noise.delete_prob);
    }

    let mut out = SpikeTensor::zeros(horizon, channels);
    if noise.jitter_sigma > 0.0 {
        let normal = Normal::new(0.0, noise.jitter_sigma).map_err(|e| Error::param("jitter_sigma", e.to_string()))?;
        for (t, n) in kept {
            let shifted = (t as f64 + normal.sample(&mut rng)).round_ties_even();
            if shifted >= 0.0 && shifted < horizon as f64 {
                out.set(shifted as usize, n, true);
            }
        }
    } else {
        for (t, n) in kept {
            out.set(t, n, true);
        }
    }

    if noise.background_rate > 0.0 {
        for t in 0..horizon {
            for n in 0..channels {
                if rng.random::<f64>() < noise.background_rate {
                    out.set(t, n, true);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::gen_patterns;

    fn pattern() -> SpikeTensor {
        gen_patterns(1, 20, 60, 0.1, 4).unwrap().remove(0)
    }

    #[test]
    fn identity_noise() {
        let p = pattern();
        assert!(NoiseModel::none().is_identity());
        assert_eq!(corrupt(&p, &NoiseModel::none()).unwrap(), p);
    }

    #[test]
    fn full_deletion() {
        let noise = NoiseModel {
            delete_prob: 1.0,
            background_rate: 0.0,
            ..NoiseModel::default()
        };
        assert_eq!(corrupt(&pattern(), &noise).unwrap().count(), 0);
    }

    #[test]
    fn occlusion_zeroes_block() {
        let p = SpikeTensor::from_vec(4, 3, vec![1; 12]).unwrap();
        let noise = NoiseModel {
            occlusions: vec![Occlusion {
                channels: (0, 2),
                times: (1, 3),
            }],
            ..NoiseModel::none()
        };
        let out = corrupt(&p, &noise).unwrap();
        assert_eq!(out.count(), 8);
        assert!(!out.get(1, 0) && !out.get(2, 1) && out.get(1, 2) && out.get(0, 0));
    }

    #[test]
    fn jitter_only_losses_are_boundary_or_merges() {
        let p = pattern();
        for k in 0..100 {
            let noise = NoiseModel {
                jitter_sigma: 2.0,
                ..NoiseModel::none()
            }
            .with_seed(k);
            let out = corrupt(&p, &noise).unwrap();
            assert!(out.count() <= p.count());
            assert!(out.count() + p.count() / 4 >= p.count(), "lost too many spikes");
        }
    }

    #[test]
    fn seeded_reproducible() {
        let noise = NoiseModel::default().with_seed(77);
        assert_eq!(
            corrupt(&pattern(), &noise).unwrap(),
            corrupt(&pattern(), &noise).unwrap()
        );
        assert!(corrupt(
            &pattern(),
            &NoiseModel {
                delete_prob: 2.0,
                ..NoiseModel::none()
            }
        )
        .is_err());
    }
}
