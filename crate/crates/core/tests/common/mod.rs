#![allow(clippy::needless_range_loop)]
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snn_iir::network::LayerSpec;
use snn_iir::training::{backward, Gradients, LossKind, Target};
use snn_iir::{FilterCoeffs, NetworkSpec, NeuronParams, SpikeMode, SpikeTensor};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_spikes(rng: &mut impl Rng, horizon: usize, channels: usize, rate: f64) -> SpikeTensor {
    let data = (0..horizon * channels).map(|_| rng.random_bool(rate) as u8).collect();
    SpikeTensor::from_vec(horizon, channels, data).unwrap()
}

pub fn random_net(rng: &mut impl Rng, sizes: &[usize], filter: &FilterCoeffs, gain: f64) -> NetworkSpec {
    let filters = vec![filter.clone(); sizes.len() - 1];
    NetworkSpec::random(sizes, &filters, NeuronParams::default(), gain, rng).unwrap()
}

pub fn soft_loss(net: &NetworkSpec, input: &SpikeTensor, loss: &LossKind, target: &Target) -> f64 {
    let state = net.simulate(&input.to_trace(), SpikeMode::Soft).unwrap();
    loss.evaluate(state.output(), target).unwrap().0
}

pub fn soft_grads(net: &NetworkSpec, input: &SpikeTensor, loss: &LossKind, target: &Target) -> Gradients {
    let state = net.simulate(&input.to_trace(), SpikeMode::Soft).unwrap();
    let (_, d_out) = loss.evaluate(state.output(), target).unwrap();
    backward(net, &state, &d_out).unwrap()
}

/// Central differences over every parameter in canonical order.
pub fn finite_differences(
    net: &NetworkSpec,
    input: &SpikeTensor,
    loss: &LossKind,
    target: &Target,
    h: f64,
) -> Vec<f64> {
    let base = net.params();
    let mut probe = net.clone();
    (0..base.len())
        .map(|k| {
            let mut p = base.clone();
            p[k] = base[k] + h;
            probe.set_params(&p).unwrap();
            let up = soft_loss(&probe, input, loss, target);
            p[k] = base[k] - h;
            probe.set_params(&p).unwrap();
            let down = soft_loss(&probe, input, loss, target);
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error with an absolute floor for gradients that are numerically zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

pub const REL_FLOOR: f64 = 1e-6;

pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> (f64, usize) {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .enumerate()
        .map(|(k, (a, b))| (rel_err(*a, *b), k))
        .fold((0.0, 0), |acc, x| if x.0 > acc.0 { x } else { acc })
}

/// Reference layer that keeps a separate filter state for every (neuron, axon) pair.
pub fn per_synapse_layer(layer: &LayerSpec, input: &SpikeTensor) -> (Vec<Vec<f64>>, SpikeTensor) {
    let (n_in, n_out, horizon) = (layer.n_in(), layer.n_out(), input.horizon());
    let mut state = vec![vec![vec![0.0f64; horizon]; n_in]; n_out];
    let p = *layer.neuron();
    let mut v_hist = vec![vec![0.0; horizon]; n_out];
    let mut out = SpikeTensor::zeros(horizon, n_out);
    for i in 0..n_out {
        let (mut v, mut r, mut o) = (0.0, 0.0, 0.0);
        for t in 0..horizon {
            for j in 0..n_in {
                let c = &layer.filters()[j];
                let mut acc = 0.0;
                for (q, b) in c.feedforward().iter().enumerate() {
                    if q > t {
                        break;
                    }
                    acc += b * input.get(t - q, j) as u8 as f64;
                }
                for (k, a) in c.feedback().iter().enumerate() {
                    if k + 1 > t {
                        break;
                    }
                    acc += a * state[i][j][t - k - 1];
                }
                state[i][j][t] = acc;
            }
            let current: f64 = (0..n_in).map(|j| layer.weights().get(i, j) * state[i][j][t]).sum();
            r = p.theta * r + o;
            v = p.lambda * v + current - p.v_th * r;
            o = (v - p.v_th >= 0.0) as u8 as f64;
            v_hist[i][t] = v;
            out.set(t, i, o == 1.0);
        }
    }
    (v_hist, out)
}

pub fn random_filter(rng: &mut impl Rng) -> FilterCoeffs {
    match rng.random_range(0..4) {
        0 => FilterCoeffs::dual_exp(rng.random_range(2.0..10.0), rng.random_range(0.5..1.5)).unwrap(),
        1 => FilterCoeffs::alpha(rng.random_range(1.0..6.0)).unwrap(),
        2 => FilterCoeffs::simple_lif(),
        _ => FilterCoeffs::new(vec![0.5, -0.1], vec![0.2, 0.6, 0.3], false).unwrap(),
    }
}
