use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Membrane leak, reset-trace decay, threshold and surrogate noise scale of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronParams {
    pub lambda: f64,
    pub theta: f64,
    pub v_th: f64,
    pub sigma: f64,
}

impl NeuronParams {
    pub fn new(lambda: f64, theta: f64, v_th: f64, sigma: f64) -> Result<Self> {
        let p = NeuronParams {
            lambda,
            theta,
            v_th,
            sigma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(Error::param(
                "lambda",
                format!("must be in [0, 1), got {}", self.lambda),
            ));
        }
        if !(0.0..1.0).contains(&self.theta) {
            return Err(Error::param("theta", format!("must be in [0, 1), got {}", self.theta)));
        }
        if !(self.v_th > 0.0) {
            return Err(Error::param("v_th", format!("must be > 0, got {}", self.v_th)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma", format!("must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }
}

impl Default for NeuronParams {
    /// `lambda = 0`, `theta = exp(-1/4)`, `V_th = 1`, `sigma = 0.4 V_th`.
    fn default() -> Self {
        NeuronParams {
            lambda: 0.0,
            theta: (-0.25_f64).exp(),
            v_th: 1.0,
            sigma: 0.4,
        }
    }
}

/// Heaviside on `v - v_th`, with `U(0) = 1`.
#[inline]
pub fn spike(v: f64, v_th: f64) -> bool {
    v - v_th >= 0.0
}

/// Spike probability under Gaussian membrane noise: `erfc((V_th - v) / (sqrt(2) sigma)) / 2`.
#[inline]
pub fn spike_probability(v: f64, params: &NeuronParams) -> f64 {
    0.5 * libm::erfc((params.v_th - v) / (std::f64::consts::SQRT_2 * params.sigma))
}

/// Derivative of [`spike_probability`]: a Gaussian density centred on the threshold.
#[inline]
pub fn surrogate_grad(v: f64, params: &NeuronParams) -> f64 {
    let sigma = params.sigma;
    let d = params.v_th - v;
    (-(d * d) / (2.0 * sigma * sigma)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma)
}
