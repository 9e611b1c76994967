mod common;

use common::*;
use proptest::prelude::*;
use snn_iir::network::{LayerSpec, Matrix};
use snn_iir::training::{backward, LossKind, Target};
use snn_iir::{FilterCoeffs, NetworkSpec, NeuronParams, SpikeMode, SpikeTensor, Trace};

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn check(net: &NetworkSpec, input: &SpikeTensor, loss: &LossKind, target: &Target) -> f64 {
    let analytic = soft_grads(net, input, loss, target).to_vec();
    let numeric = finite_differences(net, input, loss, target, H);
    let (err, k) = max_rel_err(&analytic, &numeric);
    assert!(
        err <= TOL,
        "param {k}: analytic {} numeric {} (rel {err:e})",
        analytic[k],
        numeric[k]
    );
    assert!(
        analytic.iter().any(|g| g.abs() > 1e-6),
        "degenerate check: all gradients vanish"
    );
    err
}

fn trainable_dual_exp() -> FilterCoeffs {
    FilterCoeffs::dual_exp(4.0, 1.0).unwrap().with_trainable(true)
}

#[test]
fn rate_loss_5_8_3() {
    let mut r = rng(11);
    let net = random_net(&mut r, &[5, 8, 3], &trainable_dual_exp(), 3.0);
    assert_eq!(net.num_params(), 5 * 8 + 8 * 3 + 5 * 4 + 8 * 4);
    let input = random_spikes(&mut r, 20, 5, 0.3);
    check(&net, &input, &LossKind::RateCrossEntropy, &Target::Class(1));
}

#[test]
fn van_rossum_loss_5_8_3() {
    let mut r = rng(12);
    let net = random_net(&mut r, &[5, 8, 3], &trainable_dual_exp(), 3.0);
    let input = random_spikes(&mut r, 20, 5, 0.3);
    let target = random_spikes(&mut r, 20, 3, 0.2);
    let loss = LossKind::van_rossum(FilterCoeffs::dual_exp(4.0, 1.0).unwrap()).unwrap();
    check(&net, &input, &loss, &Target::Pattern(target));
}

#[test]
fn one_layer_one_channel_coefficients() {
    let mut r = rng(13);
    let net = random_net(&mut r, &[1, 1], &trainable_dual_exp(), 1.0);
    let mut net = net;
    net.layers_mut()[0].weights_mut().set(0, 0, 2.5);
    let input = SpikeTensor::from_events(20, 1, [(0, 0), (3, 0), (4, 0), (11, 0)]).unwrap();
    let loss = LossKind::van_rossum(FilterCoeffs::dual_exp(4.0, 1.0).unwrap()).unwrap();
    let target = SpikeTensor::from_events(20, 1, [(5, 0), (12, 0)]).unwrap();
    check(&net, &input, &loss, &Target::Pattern(target));
}

#[test]
fn higher_order_filters_with_delay_taps() {
    let mut r = rng(14);
    let f = FilterCoeffs::new(vec![0.9, -0.3, 0.05], vec![0.1, 0.4, 0.2], true).unwrap();
    let net = random_net(&mut r, &[4, 6, 2], &f, 3.0);
    let input = random_spikes(&mut r, 25, 4, 0.3);
    check(&net, &input, &LossKind::RateCrossEntropy, &Target::Class(0));
}

#[test]
fn leaky_membrane_and_mixed_trainability() {
    let mut r = rng(15);
    let neuron = NeuronParams::new(0.6, 0.5, 1.0, 0.4).unwrap();
    let filters = [trainable_dual_exp(), FilterCoeffs::alpha(3.0).unwrap()];
    let net = NetworkSpec::random(&[3, 5, 2], &filters, neuron, 2.5, &mut r).unwrap();
    let input = random_spikes(&mut r, 20, 3, 0.3);
    let target = random_spikes(&mut r, 20, 2, 0.25);
    let loss = LossKind::van_rossum(FilterCoeffs::dual_exp(4.0, 1.0).unwrap()).unwrap();
    let target = Target::Pattern(target);
    check(&net, &input, &loss, &target);
    let g = soft_grads(&net, &input, &loss, &target);
    assert!(g.layers[0].filters.iter().all(Option::is_some));
    assert!(g.layers[1].filters.iter().all(Option::is_none));
}

#[test]
fn identity_filter_tap_gradient() {
    // With F = X the sole tap scales every weight of its axon: d_beta0_j = sum_i w_ij dW_ij.
    let mut r = rng(16);
    let f = FilterCoeffs::simple_lif().with_trainable(true);
    let net = random_net(&mut r, &[4, 3], &f, 3.0);
    let input = random_spikes(&mut r, 20, 4, 0.4);
    let g = soft_grads(&net, &input, &LossKind::RateCrossEntropy, &Target::Class(2));
    let w = net.layers()[0].weights();
    for j in 0..4 {
        let expected: f64 = (0..3).map(|i| w.get(i, j) * g.layers[0].weights.get(i, j)).sum();
        let got = g.d_beta(0, j, 0).unwrap();
        assert!(
            (got - expected).abs() <= 1e-12 * expected.abs().max(1.0),
            "{got} vs {expected}"
        );
        assert_eq!(g.d_alpha(0, j, 1), None);
    }
    check(&net, &input, &LossKind::RateCrossEntropy, &Target::Class(2));
}

#[test]
fn quiet_neuron_weight_gradient_by_hand() {
    // Single neuron, simple-LIF, lambda = 0, one input spike at t = 1, no output spike.
    // Only F[1] = 1 is nonzero, so dW = gV[1]; the reset adjoint is walked back by hand.
    let w = 0.5;
    let layer = LayerSpec::new(
        Matrix::from_vec(1, 1, vec![w]).unwrap(),
        vec![FilterCoeffs::simple_lif()],
        NeuronParams::default(),
    )
    .unwrap();
    let net = NetworkSpec::new(vec![layer]).unwrap();
    let input = SpikeTensor::from_events(5, 1, [(1, 0)]).unwrap();
    let state = net.simulate(&input.to_trace(), SpikeMode::Hard).unwrap();
    assert_eq!(state.output_spikes().count(), 0);
    let d_out = Trace::from_vec(5, 1, vec![0.3; 5]).unwrap();
    let g = backward(&net, &state, &d_out).unwrap();

    let p = *net.layers()[0].neuron();
    let v = [0.0, w, 0.0, 0.0, 0.0];
    let (mut g_r_next, mut g_v1) = (0.0, 0.0);
    for t in (1..5).rev() {
        let g_o = 0.3 + g_r_next;
        let g_v = snn_iir::surrogate_grad(v[t], &p) * g_o;
        g_r_next = -p.v_th * g_v + p.theta * g_r_next;
        if t == 1 {
            g_v1 = g_v;
        }
    }
    assert!((g.layers[0].weights.get(0, 0) - g_v1).abs() < 1e-15);
    let loss = LossKind::van_rossum(FilterCoeffs::dual_exp(4.0, 1.0).unwrap()).unwrap();
    let target = SpikeTensor::from_events(5, 1, [(2, 0)]).unwrap();
    check(&net, &input, &loss, &Target::Pattern(target));
}

#[test]
fn zero_upstream_gives_zero_gradients() {
    let mut r = rng(17);
    let net = random_net(&mut r, &[5, 8, 3], &trainable_dual_exp(), 3.0);
    let input = random_spikes(&mut r, 20, 5, 0.3);
    let state = net.simulate(&input.to_trace(), SpikeMode::Hard).unwrap();
    let g = backward(&net, &state, &Trace::zeros(20, 3)).unwrap();
    assert!(g.is_zero());
}

#[test]
fn horizon_mismatch_is_an_error() {
    let mut r = rng(18);
    let net = random_net(&mut r, &[2, 2], &trainable_dual_exp(), 1.0);
    let input = random_spikes(&mut r, 10, 2, 0.3);
    let state = net.simulate(&input.to_trace(), SpikeMode::Hard).unwrap();
    assert!(backward(&net, &state, &Trace::zeros(9, 2)).is_err());
    assert!(backward(&net, &state, &Trace::zeros(10, 3)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn soft_mode_oracle_on_random_nets(seed in 0u64..10_000, label in 0usize..3) {
        let mut r = rng(seed);
        let net = random_net(&mut r, &[5, 8, 3], &trainable_dual_exp(), 3.0);
        let input = random_spikes(&mut r, 20, 5, 0.3);
        check(&net, &input, &LossKind::RateCrossEntropy, &Target::Class(label));
        let target = random_spikes(&mut r, 20, 3, 0.2);
        let loss = LossKind::van_rossum(FilterCoeffs::dual_exp(4.0, 1.0).unwrap()).unwrap();
        check(&net, &input, &loss, &Target::Pattern(target));
    }
}
