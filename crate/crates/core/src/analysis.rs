//! Post-training analyses: class prediction, spike-rate maps and pairwise distance matrices
//! of a layer's responses.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::FilterCoeffs;
use crate::network::{NetworkSpec, SpikeMode};
use crate::spikes::SpikeTensor;
use crate::training::van_rossum_distance;

/// Index of the largest count; ties go to the lowest index.
pub fn predict_class(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Spikes of layer `layer` (0 = first layer after the input) in response to `input`.
pub fn layer_response(net: &NetworkSpec, input: &SpikeTensor, layer: usize) -> Result<SpikeTensor> {
    if layer >= net.layers().len() {
        return Err(Error::param(
            "layer",
            format!("index {layer} out of range for {} layers", net.layers().len()),
        ));
    }
    let state = net.simulate(&input.to_trace(), SpikeMode::Hard)?;
    Ok(state.layers[layer].o.to_spikes())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateMap {
    /// Class of each row, non-decreasing.
    pub classes: Vec<usize>,
    /// Original sample index of each row.
    pub sample_index: Vec<usize>,
    /// `rates[row][neuron]` in spikes per step.
    pub rates: Vec<Vec<f64>>,
}

fn sorted_by_class(samples: &[(SpikeTensor, usize)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by_key(|&i| (samples[i].1, i));
    order
}

pub fn rate_map(net: &NetworkSpec, samples: &[(SpikeTensor, usize)], layer: usize) -> Result<RateMap> {
    let order = sorted_by_class(samples);
    let rates = order
        .par_iter()
        .map(|&i| {
            let r = layer_response(net, &samples[i].0, layer)?;
            let horizon = r.horizon().max(1) as f64;
            Ok(r.counts().into_iter().map(|c| c as f64 / horizon).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(RateMap {
        classes: order.iter().map(|&i| samples[i].1).collect(),
        sample_index: order,
        rates,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub classes: Vec<usize>,
    pub sample_index: Vec<usize>,
    pub distances: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    /// Mean off-diagonal distance among same-class pairs and among cross-class pairs.
    pub fn block_means(&self) -> (f64, f64) {
        let (mut within, mut nw, mut cross, mut nc) = (0.0, 0usize, 0.0, 0usize);
        for x in 0..self.classes.len() {
            for y in 0..self.classes.len() {
                if x == y {
                    continue;
                }
                if self.classes[x] == self.classes[y] {
                    within += self.distances[x][y];
                    nw += 1;
                } else {
                    cross += self.distances[x][y];
                    nc += 1;
                }
            }
        }
        (within / nw.max(1) as f64, cross / nc.max(1) as f64)
    }
}

/// Pairwise van Rossum distances between the layer's responses, rows grouped by class.
pub fn distance_matrix(
    net: &NetworkSpec,
    samples: &[(SpikeTensor, usize)],
    layer: usize,
    kernel: &FilterCoeffs,
) -> Result<DistanceMatrix> {
    let order = sorted_by_class(samples);
    let responses = order
        .par_iter()
        .map(|&i| layer_response(net, &samples[i].0, layer))
        .collect::<Result<Vec<_>>>()?;
    let n = responses.len();
    let mut distances = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in x + 1..n {
            let d = van_rossum_distance(&responses[x], &responses[y], kernel)?;
            distances[x][y] = d;
            distances[y][x] = d;
        }
    }
    Ok(DistanceMatrix {
        classes: order.iter().map(|&i| samples[i].1).collect(),
        sample_index: order,
        distances,
    })
}

/// How much per-neuron firing rates change with the class: the mean over neurons of the
/// standard deviation of class-mean rates, and the mean over neurons of the overall rate.
pub fn class_rate_variation(map: &RateMap) -> (f64, f64) {
    let n_neurons = map.rates.first().map_or(0, Vec::len);
    let mut classes: Vec<usize> = map.classes.clone();
    classes.dedup();
    let mut std_sum = 0.0;
    let mut mean_sum = 0.0;
    for neuron in 0..n_neurons {
        let class_means: Vec<f64> = classes
            .iter()
            .map(|&c| {
                let rows: Vec<f64> = map
                    .rates
                    .iter()
                    .zip(&map.classes)
                    .filter(|(_, &k)| k == c)
                    .map(|(r, _)| r[neuron])
                    .collect();
                rows.iter().sum::<f64>() / rows.len() as f64
            })
            .collect();
        let mean = class_means.iter().sum::<f64>() / class_means.len() as f64;
        let var = class_means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / class_means.len() as f64;
        std_sum += var.sqrt();
        mean_sum += mean;
    }
    let n = n_neurons.max(1) as f64;
    (std_sum / n, mean_sum / n)
}
