use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuron::spike;
use crate::spikes::{SpikeTensor, Trace};

/// A layer of current-driven encoder neurons:
/// `V[t] = leak V[t-1] + gain_c x[t] - threshold R[t]`, `R[t] = reset_decay R[t-1] + O[t-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentLifEncoderConfig {
    /// One gain per channel, or a single gain shared by all.
    pub gain: Vec<f64>,
    pub threshold: f64,
    pub leak: f64,
    pub reset_decay: f64,
    pub horizon: usize,
}

impl CurrentLifEncoderConfig {
    /// Gains chosen so each channel's maximum drives about 0.5 spikes per step with no leak
    /// and no reset decay (the encoder then alternates between firing and recovering).
    pub fn calibrated(channel_max: &[f64], threshold: f64, horizon: usize) -> Self {
        CurrentLifEncoderConfig {
            gain: channel_max
                .iter()
                .map(|&m| if m > 0.0 { 1.5 * threshold / m } else { 0.0 })
                .collect(),
            threshold,
            leak: 0.0,
            reset_decay: 0.0,
            horizon,
        }
    }

    fn gain(&self, c: usize) -> f64 {
        if self.gain.len() == 1 {
            self.gain[0]
        } else {
            self.gain[c]
        }
    }
}

/// Encodes a `[T x C]` series. Shorter series are treated as zero current past their end;
/// longer ones are cut at the horizon.
pub fn current_lif_encode(series: &Trace, cfg: &CurrentLifEncoderConfig) -> Result<SpikeTensor> {
    let channels = series.channels();
    if cfg.gain.len() != 1 && cfg.gain.len() != channels {
        return Err(Error::shape("encoder gains", channels, cfg.gain.len()));
    }
    if !(cfg.threshold > 0.0) {
        return Err(Error::param("threshold", "must be > 0"));
    }
    let mut out = SpikeTensor::zeros(cfg.horizon, channels);
    for c in 0..channels {
        let gain = cfg.gain(c);
        let (mut v, mut r, mut o) = (0.0, 0.0, 0.0);
        for t in 0..cfg.horizon {
            let x = if t < series.horizon() { series.get(t, c) } else { 0.0 };
            r = cfg.reset_decay * r + o;
            v = cfg.leak * v + gain * x - cfg.threshold * r;
            let fired = spike(v, cfg.threshold);
            o = fired as u8 as f64;
            out.set(t, c, fired);
        }
    }
    Ok(out)
}
