use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::training::backward::Gradients;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments, laid out like [`NetworkSpec::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, num_params: usize) -> Self {
        AdamState {
            config,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn for_network(config: AdamConfig, net: &NetworkSpec) -> Self {
        AdamState::new(config, net.num_params())
    }
}

/// One optimizer update of all weights and trainable coefficients, followed by the
/// radial pole clamp on every trainable filter.
pub fn adam_step(net: &mut NetworkSpec, grads: &Gradients, opt: &mut AdamState) -> Result<()> {
    let g = grads.to_vec();
    if g.len() != opt.m.len() || g.len() != net.num_params() {
        return Err(Error::shape(
            "optimizer state",
            net.num_params(),
            format!("{} moments, {} gradients", opt.m.len(), g.len()),
        ));
    }
    let AdamConfig { lr, beta1, beta2, eps } = opt.config;
    opt.step += 1;
    let bc1 = 1.0 - beta1.powi(opt.step as i32);
    let bc2 = 1.0 - beta2.powi(opt.step as i32);
    let mut params = net.params();
    for k in 0..g.len() {
        opt.m[k] = beta1 * opt.m[k] + (1.0 - beta1) * g[k];
        opt.v[k] = beta2 * opt.v[k] + (1.0 - beta2) * g[k] * g[k];
        let m_hat = opt.m[k] / bc1;
        let v_hat = opt.v[k] / bc2;
        params[k] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    net.set_params(&params)?;
    net.clamp_filters();
    Ok(())
}
