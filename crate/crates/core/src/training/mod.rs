//! Losses, surrogate-gradient BPTT and the optimizer loop.

pub mod adam;
pub mod backward;
pub mod loss;
pub mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use backward::{backward, FilterGrads, Gradients, LayerGrads};
pub use loss::{
    rate_loss, rate_loss_trace, van_rossum_distance, van_rossum_distance_trace, van_rossum_loss, van_rossum_loss_trace,
    LossKind, Target,
};
pub use trainer::{batch_gradient, sample_gradient, train_epoch, Sample, TrainOptions, TrainRecord, TrainSet};
