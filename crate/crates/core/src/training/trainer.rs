use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::predict_class;
use crate::data::shuffled_indices;
use crate::error::{Error, Result};
use crate::network::{NetworkSpec, SimState, SpikeMode};
use crate::spikes::SpikeTensor;
use crate::training::adam::{adam_step, AdamState};
use crate::training::backward::{backward, Gradients};
use crate::training::loss::{van_rossum_distance_trace, LossKind, Target};

/// An encoded sample ready for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: SpikeTensor,
    pub target: Target,
}

/// Random-access training data. `epoch` lets stochastic encoders and noise models draw
/// fresh, seeded randomness every epoch.
pub trait TrainSet: Sync {
    fn len(&self) -> usize;

    fn sample(&self, index: usize, epoch: u64) -> Result<Sample>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl TrainSet for [Sample] {
    fn len(&self) -> usize {
        <[Sample]>::len(self)
    }

    fn sample(&self, index: usize, _epoch: u64) -> Result<Sample> {
        Ok(self[index].clone())
    }
}

impl TrainSet for Vec<Sample> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn sample(&self, index: usize, epoch: u64) -> Result<Sample> {
        self.as_slice().sample(index, epoch)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub batch_size: usize,
    /// Global-norm gradient clip; off when `None`.
    pub clip_norm: Option<f64>,
    /// Shuffle seed; samples are visited in index order when `None`.
    pub shuffle_seed: Option<u64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            batch_size: 64,
            clip_norm: None,
            shuffle_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub epoch: u64,
    pub loss: f64,
    /// Accuracy for class targets, mean van Rossum distance for pattern targets.
    pub metric: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub loss: f64,
    pub grads: Gradients,
    pub state: SimState,
}

/// Hard-mode forward pass, loss and backward pass for one sample.
pub fn sample_gradient(net: &NetworkSpec, sample: &Sample, loss: &LossKind) -> Result<SampleOutcome> {
    let state = net.simulate(&sample.input.to_trace(), SpikeMode::Hard)?;
    let (value, d_out) = loss.evaluate(state.output(), &sample.target)?;
    let grads = backward(net, &state, &d_out)?;
    Ok(SampleOutcome {
        loss: value,
        grads,
        state,
    })
}

/// Mean loss and mean gradient over a batch. Samples may be processed on any number of
/// threads; the sum runs in sample order so the result does not depend on scheduling.
pub fn batch_gradient(
    net: &NetworkSpec,
    samples: &[Sample],
    loss: &LossKind,
) -> Result<(f64, Gradients, Vec<SampleOutcome>)> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let outcomes = samples
        .par_iter()
        .map(|s| sample_gradient(net, s, loss))
        .collect::<Result<Vec<_>>>()?;
    let mut total = Gradients::zeros_like(net);
    let mut loss_sum = 0.0;
    for o in &outcomes {
        total.add_assign(&o.grads);
        loss_sum += o.loss;
    }
    let scale = 1.0 / samples.len() as f64;
    total.scale(scale);
    Ok((loss_sum * scale, total, outcomes))
}

fn sample_metric(loss: &LossKind, sample: &Sample, state: &SimState) -> Result<f64> {
    match &sample.target {
        Target::Class(label) => {
            let counts = state.output_spikes().counts();
            Ok((predict_class(&counts) == *label) as u8 as f64)
        }
        Target::Pattern(p) => {
            let kernel = match loss {
                LossKind::VanRossum { kernel } => kernel.clone(),
                LossKind::RateCrossEntropy => crate::filter::FilterCoeffs::dual_exp(4.0, 1.0)?,
            };
            van_rossum_distance_trace(&state.output_spikes().to_trace(), &p.to_trace(), &kernel)
        }
    }
}

/// One pass over `data` in mini-batches: mean gradient per batch, one Adam step per batch.
/// Parameters stay fixed while a batch is evaluated.
pub fn train_epoch(
    net: &mut NetworkSpec,
    data: &dyn TrainSet,
    loss: &LossKind,
    opt: &mut AdamState,
    options: &TrainOptions,
    epoch: u64,
) -> Result<TrainRecord> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if options.batch_size == 0 {
        return Err(Error::param("batch_size", "must be at least 1"));
    }
    let start = Instant::now();
    let order: Vec<usize> = match options.shuffle_seed {
        Some(seed) => shuffled_indices(data.len(), seed, epoch),
        None => (0..data.len()).collect(),
    };
    let mut loss_sum = 0.0;
    let mut metric_sum = 0.0;
    for chunk in order.chunks(options.batch_size) {
        let batch = chunk
            .par_iter()
            .map(|&k| data.sample(k, epoch))
            .collect::<Result<Vec<_>>>()?;
        let (_, mut grads, outcomes) = batch_gradient(net, &batch, loss)?;
        for (s, o) in batch.iter().zip(&outcomes) {
            loss_sum += o.loss;
            metric_sum += sample_metric(loss, s, &o.state)?;
        }
        if let Some(max_norm) = options.clip_norm {
            grads.clip_norm(max_norm);
        }
        adam_step(net, &grads, opt)?;
    }
    let n = data.len() as f64;
    Ok(TrainRecord {
        epoch,
        loss: loss_sum / n,
        metric: metric_sum / n,
        seconds: start.elapsed().as_secs_f64(),
    })
}
