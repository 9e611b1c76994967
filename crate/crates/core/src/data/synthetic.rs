//! Clean spatio-temporal patterns plus noisy variants, for associative-memory training.
//!
//! On disk a dataset is a directory holding `dataset.toml` (every generation parameter,
//! seed included) and event CSVs under `clean/`, `train/` and `test/`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::spike_io::{read_spikes_csv, write_spikes_csv};
use crate::encoders::{corrupt, gen_patterns, NoiseModel};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::spikes::SpikeTensor;
use crate::training::{Sample, Target, TrainSet};

const NOISE_STREAM: u64 = 0x4e4f_4953;
const TRAIN_SPLIT: u64 = 1;
const TEST_SPLIT: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_patterns: usize,
    pub channels: usize,
    pub horizon: usize,
    pub pattern_rate: f64,
    pub train_variants: usize,
    pub test_variants: usize,
    /// Draw new noise every epoch instead of reusing the fixed training variants.
    #[serde(default)]
    pub resample_noise: bool,
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseModel,
}

impl SyntheticSpec {
    fn noise_for(&self, split: u64, pattern: usize, variant: usize, epoch: u64) -> NoiseModel {
        let epoch_tag = if split == TRAIN_SPLIT && self.resample_noise {
            epoch + 1
        } else {
            0
        };
        self.noise.clone().with_seed(derive_seed(
            self.seed,
            &[NOISE_STREAM, split, pattern as u64, variant as u64, epoch_tag],
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub spec: SyntheticSpec,
    pub clean: Vec<SpikeTensor>,
    /// `train[k]` holds the noisy variants of pattern `k`.
    pub train: Vec<Vec<SpikeTensor>>,
    pub test: Vec<Vec<SpikeTensor>>,
}

impl SyntheticData {
    pub fn generate(spec: &SyntheticSpec) -> Result<Self> {
        spec.noise.validate()?;
        let clean = gen_patterns(
            spec.n_patterns,
            spec.channels,
            spec.horizon,
            spec.pattern_rate,
            spec.seed,
        )?;
        let variants = |split: u64, count: usize| -> Result<Vec<Vec<SpikeTensor>>> {
            clean
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    (0..count)
                        .map(|v| corrupt(p, &spec.noise_for(split, k, v, 0)))
                        .collect()
                })
                .collect()
        };
        Ok(SyntheticData {
            spec: spec.clone(),
            train: variants(TRAIN_SPLIT, spec.train_variants)?,
            test: variants(TEST_SPLIT, spec.test_variants)?,
            clean,
        })
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        for sub in ["clean", "train", "test"] {
            let d = dir.join(sub);
            std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        }
        let manifest = toml::to_string(&self.spec).map_err(|e| Error::config("dataset", e.to_string()))?;
        let mpath = dir.join("dataset.toml");
        std::fs::write(&mpath, manifest).map_err(|e| Error::io(&mpath, e))?;
        for (k, p) in self.clean.iter().enumerate() {
            write_spikes_csv(dir.join("clean").join(format!("pattern_{k:03}.csv")), p)?;
        }
        for (split, sets) in [("train", &self.train), ("test", &self.test)] {
            for (k, vs) in sets.iter().enumerate() {
                for (v, s) in vs.iter().enumerate() {
                    write_spikes_csv(dir.join(split).join(format!("pattern_{k:03}_{v:03}.csv")), s)?;
                }
            }
        }
        Ok(())
    }

    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mpath = dir.join("dataset.toml");
        let text = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
        let spec: SyntheticSpec = toml::from_str(&text).map_err(|e| Error::config("dataset.toml", e.to_string()))?;
        let (h, c) = (spec.horizon, spec.channels);
        let clean = (0..spec.n_patterns)
            .map(|k| read_spikes_csv(dir.join("clean").join(format!("pattern_{k:03}.csv")), h, c))
            .collect::<Result<Vec<_>>>()?;
        let split = |name: &str, count: usize| -> Result<Vec<Vec<SpikeTensor>>> {
            (0..spec.n_patterns)
                .map(|k| {
                    (0..count)
                        .map(|v| read_spikes_csv(dir.join(name).join(format!("pattern_{k:03}_{v:03}.csv")), h, c))
                        .collect()
                })
                .collect()
        };
        Ok(SyntheticData {
            train: split("train", spec.train_variants)?,
            test: split("test", spec.test_variants)?,
            clean,
            spec,
        })
    }

    /// Test variants as `(noisy input, clean target, class)`, ordered by class.
    pub fn test_samples(&self) -> Vec<(SpikeTensor, SpikeTensor, usize)> {
        self.test
            .iter()
            .enumerate()
            .flat_map(|(k, vs)| vs.iter().map(move |v| (v.clone(), self.clean[k].clone(), k)))
            .collect()
    }

    pub fn train_set(&self) -> NoisyPatternSet<'_> {
        NoisyPatternSet { data: self }
    }
}

/// Training view: sample `i` is variant `i % train_variants` of pattern
/// `i / train_variants`, with the clean pattern as its target.
#[derive(Debug, Clone, Copy)]
pub struct NoisyPatternSet<'a> {
    data: &'a SyntheticData,
}

impl TrainSet for NoisyPatternSet<'_> {
    fn len(&self) -> usize {
        self.data.spec.n_patterns * self.data.spec.train_variants
    }

    fn sample(&self, index: usize, epoch: u64) -> Result<Sample> {
        let per = self.data.spec.train_variants;
        let (k, v) = (index / per, index % per);
        let clean = &self.data.clean[k];
        let input = if self.data.spec.resample_noise && epoch > 0 {
            corrupt(clean, &self.data.spec.noise_for(TRAIN_SPLIT, k, v, epoch))?
        } else {
            self.data.train[k][v].clone()
        };
        Ok(Sample {
            input,
            target: Target::Pattern(clean.clone()),
        })
    }
}
