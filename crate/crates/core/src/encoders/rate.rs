use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::spikes::SpikeTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    /// Independent per-step spikes with probability `value * max_rate`.
    #[default]
    Bernoulli,
    /// `round(value * max_rate * T)` spikes at evenly spaced steps; consumes no randomness.
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEncodeConfig {
    pub horizon: usize,
    pub mode: RateMode,
    pub max_rate: f64,
    pub seed: u64,
}

impl Default for RateEncodeConfig {
    fn default() -> Self {
        RateEncodeConfig {
            horizon: 20,
            mode: RateMode::Bernoulli,
            max_rate: 1.0,
            seed: 0,
        }
    }
}

/// One spike train per value; spike count proportional to the value.
pub fn rate_encode(values: &[f64], cfg: &RateEncodeConfig) -> Result<SpikeTensor> {
    if !(cfg.max_rate > 0.0 && cfg.max_rate <= 1.0) {
        return Err(Error::param(
            "max_rate",
            format!("must be in (0, 1], got {}", cfg.max_rate),
        ));
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfRange { index, value });
    }
    let horizon = cfg.horizon;
    let mut out = SpikeTensor::zeros(horizon, values.len());
    match cfg.mode {
        RateMode::Bernoulli => {
            let mut rng = rng::stream(cfg.seed, &[]);
            for t in 0..horizon {
                for (n, v) in values.iter().enumerate() {
                    let p = v * cfg.max_rate;
                    if rng.random::<f64>() < p {
                        out.set(t, n, true);
                    }
                }
            }
        }
        RateMode::Deterministic => {
            for (n, v) in values.iter().enumerate() {
                let k = ((v * cfg.max_rate * horizon as f64).round() as usize).min(horizon);
                for i in 0..k {
                    out.set(i * horizon / k, n, true);
                }
            }
        }
    }
    Ok(out)
}
