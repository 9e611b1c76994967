//! Dense time-major containers for spike trains and real-valued traces.

use crate::error::{Error, Result};

/// Binary spike data `O[t, n]` over a fixed horizon, stored row-major by time.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpikeTensor {
    horizon: usize,
    channels: usize,
    data: Vec<u8>,
}

impl SpikeTensor {
    pub fn zeros(horizon: usize, channels: usize) -> Self {
        SpikeTensor {
            horizon,
            channels,
            data: vec![0; horizon * channels],
        }
    }

    /// Builds a tensor from row-major `[t][n]` bytes; every entry must be 0 or 1.
    pub fn from_vec(horizon: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != horizon * channels {
            return Err(Error::shape("spike tensor", horizon * channels, data.len()));
        }
        if let Some(pos) = data.iter().position(|&b| b > 1) {
            return Err(Error::param(
                "spikes",
                format!("entry {pos} is {}, expected 0 or 1", data[pos]),
            ));
        }
        Ok(SpikeTensor {
            horizon,
            channels,
            data,
        })
    }

    /// Builds a tensor from `(t, channel)` events. Duplicate events merge.
    pub fn from_events(
        horizon: usize,
        channels: usize,
        events: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut out = SpikeTensor::zeros(horizon, channels);
        for (t, n) in events {
            if t >= horizon || n >= channels {
                return Err(Error::shape(
                    "spike event",
                    format!("t < {horizon}, channel < {channels}"),
                    format!("({t}, {n})"),
                ));
            }
            out.set(t, n, true);
        }
        Ok(out)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, t: usize, n: usize) -> bool {
        self.data[t * self.channels + n] != 0
    }

    #[inline]
    pub fn set(&mut self, t: usize, n: usize, spike: bool) {
        self.data[t * self.channels + n] = spike as u8;
    }

    pub fn row(&self, t: usize) -> &[u8] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    pub fn count(&self) -> usize {
        self.data.iter().map(|&b| b as usize).sum()
    }

    /// Spike count per channel.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.channels];
        for row in self.data.chunks_exact(self.channels.max(1)) {
            for (c, &b) in counts.iter_mut().zip(row) {
                *c += b as usize;
            }
        }
        counts
    }

    /// `(t, channel)` pairs of every spike, in time-major order.
    pub fn events(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let channels = self.channels;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0)
            .map(move |(k, _)| (k / channels, k % channels))
    }

    pub fn to_trace(&self) -> Trace {
        Trace {
            horizon: self.horizon,
            channels: self.channels,
            data: self.data.iter().map(|&b| b as f64).collect(),
        }
    }
}

/// Real-valued `[t, n]` matrix: membrane potentials, synapse traces, adjoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    horizon: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Trace {
    pub fn zeros(horizon: usize, channels: usize) -> Self {
        Trace {
            horizon,
            channels,
            data: vec![0.0; horizon * channels],
        }
    }

    pub fn from_vec(horizon: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != horizon * channels {
            return Err(Error::shape("trace", horizon * channels, data.len()));
        }
        Ok(Trace {
            horizon,
            channels,
            data,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, t: usize, n: usize) -> f64 {
        self.data[t * self.channels + n]
    }

    #[inline]
    pub fn set(&mut self, t: usize, n: usize, value: f64) {
        self.data[t * self.channels + n] = value;
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.channels..(t + 1) * self.channels]
    }

    /// Sum over time, per channel.
    pub fn channel_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.channels];
        for t in 0..self.horizon {
            for (s, &x) in sums.iter_mut().zip(self.row(t)) {
                *s += x;
            }
        }
        sums
    }

    /// Thresholds every entry at 0.5. Used to read hard-mode activity back as spikes.
    pub fn to_spikes(&self) -> SpikeTensor {
        SpikeTensor {
            horizon: self.horizon,
            channels: self.channels,
            data: self.data.iter().map(|&x| (x >= 0.5) as u8).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }
}
