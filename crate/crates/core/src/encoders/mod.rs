//! Analog-to-spike encoders and the synthetic pattern/noise generators.

pub mod current_lif;
pub mod noise;
pub mod patterns;
pub mod rate;

pub use current_lif::{current_lif_encode, CurrentLifEncoderConfig};
pub use noise::{corrupt, NoiseModel, Occlusion};
pub use patterns::gen_patterns;
pub use rate::{rate_encode, RateEncodeConfig, RateMode};
