//! Dataset ingestion, synthetic datasets and checkpoint persistence.

pub mod checkpoint;
pub mod csv_series;
pub mod mnist;
pub mod spike_io;
pub mod synthetic;

use rand::Rng;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use csv_series::{load_csv_series, CsvSchema, MinMax};
pub use mnist::{load_mnist_idx, MnistSet};
pub use spike_io::{read_spikes_csv, write_spikes_csv};
pub use synthetic::{NoisyPatternSet, SyntheticData, SyntheticSpec};

use crate::rng;
use crate::spikes::{SpikeTensor, Trace};

#[derive(Debug, Clone, PartialEq)]
pub enum SampleInput {
    /// A flat analog vector, e.g. normalised pixels.
    Analog(Vec<f64>),
    /// A `[T x C]` analog time series.
    Series(Trace),
    Spikes(SpikeTensor),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Label {
    Class(usize),
    Pattern(SpikeTensor),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub input: SampleInput,
    pub label: Label,
}

const SHUFFLE_STREAM: u64 = 0x5348_5546;

/// Seeded Fisher-Yates permutation of `0..n` for one epoch.
pub fn shuffled_indices(n: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut rng = rng::stream(seed, &[SHUFFLE_STREAM, epoch]);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    order
}
