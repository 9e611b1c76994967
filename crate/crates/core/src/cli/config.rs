//! Run configuration, read from a TOML file.
//!
//! Format version 1. Every field has a default except `network.sizes` and the dataset
//! paths of a classification run. See `configs/` in the repository for complete examples.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{CsvSchema, SyntheticSpec};
use crate::encoders::{NoiseModel, RateMode};
use crate::error::{Error, Result};
use crate::filter::FilterCoeffs;
use crate::neuron::NeuronParams;
use crate::training::{AdamConfig, LossKind};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    #[default]
    Classify,
    Associate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "version")]
    pub version: u32,
    #[serde(default)]
    pub task: TaskKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "epochs")]
    pub epochs: u64,
    #[serde(default = "batch_size")]
    pub batch_size: usize,
    #[serde(default = "one")]
    pub threads: usize,
    /// Global-norm gradient clip, off unless set.
    #[serde(default)]
    pub clip_norm: Option<f64>,
    #[serde(default = "yes")]
    pub shuffle: bool,
    pub network: NetworkConfig,
    #[serde(default)]
    pub neuron: NeuronConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub loss: LossConfig,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub patterns: PatternsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn version() -> u32 {
    CONFIG_VERSION
}
fn epochs() -> u64 {
    50
}
fn batch_size() -> usize {
    64
}
fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Layer widths including the input, e.g. `[784, 200, 10]`.
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub filter: FilterConfig,
    /// Per-layer filters; overrides `filter` when present.
    #[serde(default)]
    pub filters: Option<Vec<FilterConfig>>,
    /// Initial weights are uniform in `[-gain/sqrt(n_in), gain/sqrt(n_in)]`.
    #[serde(default = "unit")]
    pub weight_gain: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterKind {
    #[default]
    DualExp,
    Alpha,
    SimpleLif,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    #[serde(default)]
    pub kind: FilterKind,
    #[serde(default = "tau_m")]
    pub tau_m: f64,
    #[serde(default = "tau_s")]
    pub tau_s: f64,
    /// Time constant of the alpha kernel.
    #[serde(default = "tau_m")]
    pub tau: f64,
    /// Pads the kernel to feedback order `P` with zero coefficients.
    #[serde(default)]
    pub feedback_order: Option<usize>,
    /// Pads the kernel to feedforward order `Q` (extra delay taps).
    #[serde(default)]
    pub feedforward_order: Option<usize>,
    #[serde(default)]
    pub trainable: bool,
}

fn tau_m() -> f64 {
    4.0
}
fn tau_s() -> f64 {
    1.0
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            kind: FilterKind::DualExp,
            tau_m: tau_m(),
            tau_s: tau_s(),
            tau: tau_m(),
            feedback_order: None,
            feedforward_order: None,
            trainable: false,
        }
    }
}

impl FilterConfig {
    pub fn build(&self) -> Result<FilterCoeffs> {
        let base = match self.kind {
            FilterKind::DualExp => FilterCoeffs::dual_exp(self.tau_m, self.tau_s)?,
            FilterKind::Alpha => FilterCoeffs::alpha(self.tau)?,
            FilterKind::SimpleLif => FilterCoeffs::simple_lif(),
        };
        let p = self.feedback_order.unwrap_or(base.feedback_order());
        let q = self.feedforward_order.unwrap_or(base.feedforward_order());
        Ok(base.padded(p, q)?.with_trainable(self.trainable))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronConfig {
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "theta")]
    pub theta: f64,
    #[serde(default = "unit")]
    pub v_th: f64,
    /// Surrogate width in units of `v_th`.
    #[serde(default = "sigma")]
    pub sigma: f64,
}

fn theta() -> f64 {
    (-1.0 / tau_m()).exp()
}
fn sigma() -> f64 {
    0.4
}

impl Default for NeuronConfig {
    fn default() -> Self {
        NeuronConfig {
            lambda: 0.0,
            theta: theta(),
            v_th: 1.0,
            sigma: sigma(),
        }
    }
}

impl NeuronConfig {
    pub fn build(&self) -> Result<NeuronParams> {
        NeuronParams::new(self.lambda, self.theta, self.v_th, self.sigma * self.v_th)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default = "lr")]
    pub lr: f64,
    #[serde(default = "beta1")]
    pub beta1: f64,
    #[serde(default = "beta2")]
    pub beta2: f64,
    #[serde(default = "adam_eps")]
    pub eps: f64,
}

fn lr() -> f64 {
    1e-4
}
fn beta1() -> f64 {
    0.9
}
fn beta2() -> f64 {
    0.999
}
fn adam_eps() -> f64 {
    1e-8
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            lr: lr(),
            beta1: beta1(),
            beta2: beta2(),
            eps: adam_eps(),
        }
    }
}

impl OptimizerConfig {
    pub fn build(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossChoice {
    Rate,
    VanRossum,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    /// Defaults to `rate` for classification and `van-rossum` for association.
    #[serde(default)]
    pub kind: Option<LossChoice>,
    /// Kernel of the van Rossum distance (also used by `distance-matrix`).
    #[serde(default)]
    pub kernel: FilterConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    Rate,
    CurrentLif,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    /// Defaults to `rate` for MNIST and `current-lif` for CSV series.
    #[serde(default)]
    pub kind: Option<EncoderKind>,
    #[serde(default = "horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub mode: RateMode,
    #[serde(default = "unit")]
    pub max_rate: f64,
    /// Current-LIF gain per unit of normalised input.
    #[serde(default = "encoder_gain")]
    pub gain: f64,
    #[serde(default = "unit")]
    pub threshold: f64,
    #[serde(default)]
    pub leak: f64,
    #[serde(default)]
    pub reset_decay: f64,
}

fn horizon() -> usize {
    20
}
fn encoder_gain() -> f64 {
    1.5
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            kind: None,
            horizon: horizon(),
            mode: RateMode::Bernoulli,
            max_rate: 1.0,
            gain: encoder_gain(),
            threshold: 1.0,
            leak: 0.0,
            reset_decay: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataConfig {
    Mnist {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        #[serde(default)]
        train_limit: Option<usize>,
        #[serde(default)]
        test_limit: Option<usize>,
    },
    Csv {
        train: PathBuf,
        test: PathBuf,
        #[serde(default = "sample_column")]
        sample_column: String,
        #[serde(default = "label_column")]
        label_column: String,
    },
}

fn sample_column() -> String {
    CsvSchema::default().sample_column
}
fn label_column() -> String {
    CsvSchema::default().label_column
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternsConfig {
    #[serde(default = "n_patterns")]
    pub n_patterns: usize,
    /// Defaults to the network input width.
    #[serde(default)]
    pub channels: Option<usize>,
    #[serde(default = "pattern_horizon")]
    pub horizon: usize,
    #[serde(default = "pattern_rate")]
    pub pattern_rate: f64,
    #[serde(default = "train_variants")]
    pub train_variants: usize,
    #[serde(default = "test_variants")]
    pub test_variants: usize,
    #[serde(default)]
    pub resample_noise: bool,
    /// Read a `gen-data` directory instead of generating in memory.
    #[serde(default)]
    pub dataset_dir: Option<PathBuf>,
    #[serde(default)]
    pub noise: NoiseModel,
}

fn n_patterns() -> usize {
    10
}
fn pattern_horizon() -> usize {
    300
}
fn pattern_rate() -> f64 {
    0.05
}
fn train_variants() -> usize {
    16
}
fn test_variants() -> usize {
    8
}

impl Default for PatternsConfig {
    fn default() -> Self {
        PatternsConfig {
            n_patterns: n_patterns(),
            channels: None,
            horizon: pattern_horizon(),
            pattern_rate: pattern_rate(),
            train_variants: train_variants(),
            test_variants: test_variants(),
            resample_noise: false,
            dataset_dir: None,
            noise: NoiseModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "out_dir")]
    pub dir: PathBuf,
}

fn out_dir() -> PathBuf {
    PathBuf::from("runs/default")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: out_dir() }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| format!("at bytes {}..{}", s.start, s.end))
                .unwrap_or_else(|| "file".into());
            Error::config(field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml(&text)
    }

    pub fn filters(&self) -> Result<Vec<FilterCoeffs>> {
        let n_layers = self.network.sizes.len().saturating_sub(1);
        match &self.network.filters {
            Some(list) => list.iter().map(FilterConfig::build).collect(),
            None => Ok(vec![self.network.filter.build()?; n_layers]),
        }
    }

    pub fn loss_choice(&self) -> LossChoice {
        self.loss.kind.unwrap_or(match self.task {
            TaskKind::Classify => LossChoice::Rate,
            TaskKind::Associate => LossChoice::VanRossum,
        })
    }

    pub fn loss_kind(&self) -> Result<LossKind> {
        Ok(match self.loss_choice() {
            LossChoice::Rate => LossKind::RateCrossEntropy,
            LossChoice::VanRossum => LossKind::van_rossum(self.loss.kernel.build()?)?,
        })
    }

    pub fn kernel(&self) -> Result<FilterCoeffs> {
        self.loss.kernel.build()
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        let p = &self.patterns;
        SyntheticSpec {
            n_patterns: p.n_patterns,
            channels: p
                .channels
                .unwrap_or_else(|| self.network.sizes.first().copied().unwrap_or(0)),
            horizon: p.horizon,
            pattern_rate: p.pattern_rate,
            train_variants: p.train_variants,
            test_variants: p.test_variants,
            resample_noise: p.resample_noise,
            seed: self.seed,
            noise: p.noise.clone(),
        }
    }

    /// Checks every field; nothing is computed from an invalid configuration.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::config(
                "version",
                format!("unsupported version {}, expected {CONFIG_VERSION}", self.version),
            ));
        }
        let sizes = &self.network.sizes;
        if sizes.len() < 2 {
            return Err(Error::config(
                "network.sizes",
                "needs an input width and at least one layer",
            ));
        }
        if sizes.contains(&0) {
            return Err(Error::config("network.sizes", "widths must be positive"));
        }
        if let Some(list) = &self.network.filters {
            if list.len() != sizes.len() - 1 {
                return Err(Error::config(
                    "network.filters",
                    format!("expected {} entries, one per layer", sizes.len() - 1),
                ));
            }
        }
        if !(self.network.weight_gain > 0.0) {
            return Err(Error::config("network.weight_gain", "must be > 0"));
        }
        self.filters()
            .map_err(|e| Error::config("network.filter", e.to_string()))?;
        self.neuron
            .build()
            .map_err(|e| Error::config("neuron", e.to_string()))?;
        let o = &self.optimizer;
        if !(o.lr > 0.0) {
            return Err(Error::config("optimizer.lr", "must be > 0"));
        }
        if !(0.0..1.0).contains(&o.beta1) {
            return Err(Error::config("optimizer.beta1", "must be in [0, 1)"));
        }
        if !(0.0..1.0).contains(&o.beta2) {
            return Err(Error::config("optimizer.beta2", "must be in [0, 1)"));
        }
        if !(o.eps > 0.0) {
            return Err(Error::config("optimizer.eps", "must be > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if self.threads == 0 {
            return Err(Error::config("threads", "must be at least 1"));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::config("clip_norm", "must be > 0"));
            }
        }
        self.loss_kind()
            .map_err(|e| Error::config("loss.kernel", e.to_string()))?;
        let e = &self.encoder;
        if e.horizon == 0 {
            return Err(Error::config("encoder.horizon", "must be at least 1"));
        }
        if !(e.max_rate > 0.0 && e.max_rate <= 1.0) {
            return Err(Error::config("encoder.max_rate", "must be in (0, 1]"));
        }
        if !(e.threshold > 0.0) {
            return Err(Error::config("encoder.threshold", "must be > 0"));
        }
        if !(0.0..1.0).contains(&e.leak) {
            return Err(Error::config("encoder.leak", "must be in [0, 1)"));
        }
        if !(0.0..1.0).contains(&e.reset_decay) {
            return Err(Error::config("encoder.reset_decay", "must be in [0, 1)"));
        }
        match self.task {
            TaskKind::Classify => {
                if self.data.is_none() {
                    return Err(Error::config(
                        "data",
                        "classification needs a [data] section with dataset paths",
                    ));
                }
                if self.loss_choice() != LossChoice::Rate {
                    return Err(Error::config("loss.kind", "classification uses the rate loss"));
                }
            }
            TaskKind::Associate => {
                let spec = self.synthetic_spec();
                let p = &self.patterns;
                if spec.channels != sizes[0] {
                    return Err(Error::config(
                        "patterns.channels",
                        format!("{} does not match input width {}", spec.channels, sizes[0]),
                    ));
                }
                if *sizes.last().unwrap() != spec.channels {
                    return Err(Error::config(
                        "network.sizes",
                        "associative memory needs output width equal to pattern channels",
                    ));
                }
                if p.n_patterns == 0 {
                    return Err(Error::config("patterns.n_patterns", "must be at least 1"));
                }
                if p.horizon == 0 {
                    return Err(Error::config("patterns.horizon", "must be at least 1"));
                }
                if !(p.pattern_rate > 0.0 && p.pattern_rate < 1.0) {
                    return Err(Error::config("patterns.pattern_rate", "must be in (0, 1)"));
                }
                if p.train_variants == 0 {
                    return Err(Error::config("patterns.train_variants", "must be at least 1"));
                }
                p.noise
                    .validate()
                    .map_err(|e| Error::config("patterns.noise", e.to_string()))?;
                if self.loss_choice() != LossChoice::VanRossum {
                    return Err(Error::config(
                        "loss.kind",
                        "associative memory uses the van Rossum loss",
                    ));
                }
            }
        }
        Ok(())
    }
}
