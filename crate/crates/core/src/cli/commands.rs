//! Subcommand implementations. Each one validates its configuration and inputs before any
//! compute and writes its results as plain CSV under the output directory.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{distance_matrix, predict_class, rate_map};
use crate::cli::config::{DataConfig, EncoderKind, RunConfig, TaskKind};
use crate::data::{
    load_checkpoint, load_csv_series, load_mnist_idx, save_checkpoint, write_spikes_csv, Checkpoint, CsvSchema, Label,
    MinMax, MnistSet, SampleInput, SyntheticData,
};
use crate::encoders::{current_lif_encode, rate_encode, CurrentLifEncoderConfig, RateEncodeConfig};
use crate::error::{Error, Result};
use crate::network::{NetworkSpec, SpikeMode};
use crate::rng;
use crate::spikes::{SpikeTensor, Trace};
use crate::training::{
    train_epoch, van_rossum_distance, AdamState, Sample, Target, TrainOptions, TrainRecord, TrainSet,
};

const INIT_STREAM: u64 = 0x494e_4954;
const ENCODE_STREAM: u64 = 0x454e_4344;
const SHUFFLE_STREAM: u64 = 0x5348_4646;
const TRAIN_SPLIT: u64 = 1;
const TEST_SPLIT: u64 = 2;

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Overrides {
    /// Folds the overrides into `cfg` and re-validates.
    pub fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig> {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(threads) = self.threads {
            cfg.threads = threads;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    Ok(pool.install(f))
}

pub fn build_network(cfg: &RunConfig) -> Result<NetworkSpec> {
    let mut init = rng::stream(cfg.seed, &[INIT_STREAM]);
    NetworkSpec::random(
        &cfg.network.sizes,
        &cfg.filters()?,
        cfg.neuron.build()?,
        cfg.network.weight_gain,
        &mut init,
    )
}

enum ClassSource {
    Images {
        set: MnistSet,
        encoder: RateEncodeConfig,
    },
    Series {
        series: Vec<(Trace, usize)>,
        encoder: CurrentLifEncoderConfig,
    },
}

/// A classification split encoded on demand. Rate-coded inputs draw a fresh seeded
/// encoding per epoch; the test split always uses epoch 0.
pub struct ClassSet {
    source: ClassSource,
    split: u64,
    seed: u64,
}

impl ClassSet {
    pub fn channels(&self) -> usize {
        match &self.source {
            ClassSource::Images { set, .. } => set.pixels_per_image(),
            ClassSource::Series { series, .. } => series.first().map_or(0, |(s, _)| s.channels()),
        }
    }

    pub fn label(&self, index: usize) -> usize {
        match &self.source {
            ClassSource::Images { set, .. } => set.label(index),
            ClassSource::Series { series, .. } => series[index].1,
        }
    }

    fn max_label(&self) -> usize {
        (0..TrainSet::len(self)).map(|i| self.label(i)).max().unwrap_or(0)
    }

    pub fn encode(&self, index: usize, epoch: u64) -> Result<SpikeTensor> {
        match &self.source {
            ClassSource::Images { set, encoder } => {
                let cfg = RateEncodeConfig {
                    seed: rng::derive_seed(self.seed, &[ENCODE_STREAM, self.split, epoch, index as u64]),
                    ..*encoder
                };
                rate_encode(&set.normalized(index), &cfg)
            }
            ClassSource::Series { series, encoder } => current_lif_encode(&series[index].0, encoder),
        }
    }
}

impl TrainSet for ClassSet {
    fn len(&self) -> usize {
        match &self.source {
            ClassSource::Images { set, .. } => set.len(),
            ClassSource::Series { series, .. } => series.len(),
        }
    }

    fn sample(&self, index: usize, epoch: u64) -> Result<Sample> {
        Ok(Sample {
            input: self.encode(index, epoch)?,
            target: Target::Class(self.label(index)),
        })
    }
}

pub enum TaskData {
    Classify { train: ClassSet, test: ClassSet },
    Associate(SyntheticData),
}

impl TaskData {
    pub fn train_set(&self) -> Box<dyn TrainSet + '_> {
        match self {
            TaskData::Classify { train, .. } => Box::new(ClassSetRef(train)),
            TaskData::Associate(data) => Box::new(data.train_set()),
        }
    }

    pub fn input_channels(&self) -> usize {
        match self {
            TaskData::Classify { train, .. } => train.channels(),
            TaskData::Associate(data) => data.spec.channels,
        }
    }

    /// Test inputs with their class, interleaved across classes so any prefix is balanced.
    pub fn labelled_test_inputs(&self, limit: Option<usize>) -> Result<Vec<(SpikeTensor, usize)>> {
        match self {
            TaskData::Classify { test, .. } => {
                let n = limit.unwrap_or(usize::MAX).min(test.len());
                (0..n)
                    .into_par_iter()
                    .map(|i| Ok((test.encode(i, 0)?, test.label(i))))
                    .collect()
            }
            TaskData::Associate(data) => {
                let per = data.spec.test_variants;
                let mut out = Vec::new();
                for v in 0..per {
                    for (k, variants) in data.test.iter().enumerate() {
                        out.push((variants[v].clone(), k));
                    }
                }
                out.truncate(limit.unwrap_or(usize::MAX));
                Ok(out)
            }
        }
    }
}

struct ClassSetRef<'a>(&'a ClassSet);

impl TrainSet for ClassSetRef<'_> {
    fn len(&self) -> usize {
        TrainSet::len(self.0)
    }

    fn sample(&self, index: usize, epoch: u64) -> Result<Sample> {
        self.0.sample(index, epoch)
    }
}

fn series_of(samples: Vec<crate::data::LabeledSample>) -> Vec<(Trace, usize)> {
    samples
        .into_iter()
        .filter_map(|s| match (s.input, s.label) {
            (SampleInput::Series(t), Label::Class(c)) => Some((t, c)),
            _ => None,
        })
        .collect()
}

/// Loads and encodes the datasets named by `cfg`, checking them against the topology.
pub fn load_task_data(cfg: &RunConfig) -> Result<TaskData> {
    let data = match cfg.task {
        TaskKind::Associate => TaskData::Associate(match &cfg.patterns.dataset_dir {
            Some(dir) => {
                let data = SyntheticData::read(dir)?;
                if data.spec.channels != cfg.network.sizes[0] {
                    return Err(Error::config(
                        "patterns.dataset_dir",
                        format!(
                            "dataset has {} channels, network input is {}",
                            data.spec.channels, cfg.network.sizes[0]
                        ),
                    ));
                }
                data
            }
            None => SyntheticData::generate(&cfg.synthetic_spec())?,
        }),
        TaskKind::Classify => {
            let Some(data_cfg) = &cfg.data else {
                return Err(Error::config("data", "missing"));
            };
            let enc = &cfg.encoder;
            match data_cfg {
                DataConfig::Mnist {
                    train_images,
                    train_labels,
                    test_images,
                    test_labels,
                    train_limit,
                    test_limit,
                } => {
                    if enc.kind.unwrap_or(EncoderKind::Rate) != EncoderKind::Rate {
                        return Err(Error::config("encoder.kind", "image data uses the rate encoder"));
                    }
                    let mut train = load_mnist_idx(train_images, train_labels)?;
                    let mut test = load_mnist_idx(test_images, test_labels)?;
                    if let Some(n) = train_limit {
                        train.truncate(*n);
                    }
                    if let Some(n) = test_limit {
                        test.truncate(*n);
                    }
                    let encoder = RateEncodeConfig {
                        horizon: enc.horizon,
                        mode: enc.mode,
                        max_rate: enc.max_rate,
                        seed: 0,
                    };
                    TaskData::Classify {
                        train: ClassSet {
                            source: ClassSource::Images { set: train, encoder },
                            split: TRAIN_SPLIT,
                            seed: cfg.seed,
                        },
                        test: ClassSet {
                            source: ClassSource::Images { set: test, encoder },
                            split: TEST_SPLIT,
                            seed: cfg.seed,
                        },
                    }
                }
                DataConfig::Csv {
                    train,
                    test,
                    sample_column,
                    label_column,
                } => {
                    if enc.kind.unwrap_or(EncoderKind::CurrentLif) != EncoderKind::CurrentLif {
                        return Err(Error::config(
                            "encoder.kind",
                            "time-series data uses the current-lif encoder",
                        ));
                    }
                    let schema = CsvSchema {
                        sample_column: sample_column.clone(),
                        label_column: label_column.clone(),
                    };
                    let mut train = load_csv_series(train, &schema)?;
                    let mut test = load_csv_series(test, &schema)?;
                    let scale = MinMax::fit(&train)?;
                    scale.apply_all(&mut train);
                    scale.apply_all(&mut test);
                    let encoder = CurrentLifEncoderConfig {
                        gain: vec![enc.gain],
                        threshold: enc.threshold,
                        leak: enc.leak,
                        reset_decay: enc.reset_decay,
                        horizon: enc.horizon,
                    };
                    let test_set = ClassSet {
                        source: ClassSource::Series {
                            series: series_of(test),
                            encoder: encoder.clone(),
                        },
                        split: TEST_SPLIT,
                        seed: cfg.seed,
                    };
                    if test_set.channels() != scale.min.len() {
                        return Err(Error::shape(
                            "test series channels",
                            scale.min.len(),
                            test_set.channels(),
                        ));
                    }
                    TaskData::Classify {
                        train: ClassSet {
                            source: ClassSource::Series {
                                series: series_of(train),
                                encoder,
                            },
                            split: TRAIN_SPLIT,
                            seed: cfg.seed,
                        },
                        test: test_set,
                    }
                }
            }
        }
    };
    let input = cfg.network.sizes[0];
    if data.input_channels() != input {
        return Err(Error::config(
            "network.sizes",
            format!(
                "input width {input} does not match {} data channels",
                data.input_channels()
            ),
        ));
    }
    if let TaskData::Classify { train, test } = &data {
        let classes = *cfg.network.sizes.last().unwrap();
        let max = train.max_label().max(test.max_label());
        if max >= classes {
            return Err(Error::config(
                "network.sizes",
                format!("label {max} needs more than {classes} output neurons"),
            ));
        }
    }
    Ok(data)
}

fn check_topology(net: &NetworkSpec, cfg: &RunConfig) -> Result<()> {
    if net.sizes() != cfg.network.sizes {
        return Err(Error::shape(
            "checkpoint topology",
            format!("{:?}", cfg.network.sizes),
            format!("{:?}", net.sizes()),
        ));
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_writer(path: &Path, append: bool, header: &str) -> Result<BufWriter<File>> {
    let exists = path.exists();
    let file = if append {
        OpenOptions::new().create(true).append(true).open(path)
    } else {
        File::create(path)
    }
    .map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    if !(append && exists) {
        writeln!(w, "{header}").map_err(|e| Error::io(path, e))?;
    }
    Ok(w)
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub records: Vec<TrainRecord>,
    pub checkpoint: PathBuf,
}

/// Trains for `cfg.epochs` total epochs, resuming from `resume` when given. A checkpoint
/// and a curve row are written after every epoch.
pub fn train(cfg: &RunConfig, resume: Option<&Path>) -> Result<TrainSummary> {
    let data = load_task_data(cfg)?;
    let (mut net, mut opt, start) = match resume {
        Some(path) => {
            let ckpt = load_checkpoint(path)?;
            check_topology(&ckpt.network, cfg)?;
            if ckpt.seed != cfg.seed {
                log::warn!(
                    "checkpoint seed {} differs from configured seed {}",
                    ckpt.seed,
                    cfg.seed
                );
            }
            (ckpt.network, ckpt.optimizer, ckpt.epoch)
        }
        None => {
            let net = build_network(cfg)?;
            let opt = AdamState::for_network(cfg.optimizer.build(), &net);
            (net, opt, 0)
        }
    };
    let out = &cfg.output.dir;
    create_dir(out)?;
    let curve_path = out.join("curve.csv");
    let timing_path = out.join("timing.csv");
    let ckpt_path = out.join("checkpoint.bin");
    let mut curve = csv_writer(&curve_path, resume.is_some(), "epoch,loss,metric")?;
    let mut timing = csv_writer(&timing_path, resume.is_some(), "epoch,seconds")?;
    let loss = cfg.loss_kind()?;
    let options = TrainOptions {
        batch_size: cfg.batch_size,
        clip_norm: cfg.clip_norm,
        shuffle_seed: cfg.shuffle.then(|| rng::derive_seed(cfg.seed, &[SHUFFLE_STREAM])),
    };
    let save = |net: &NetworkSpec, opt: &AdamState, epoch: u64| {
        save_checkpoint(
            &Checkpoint {
                network: net.clone(),
                optimizer: opt.clone(),
                seed: cfg.seed,
                epoch,
            },
            &ckpt_path,
        )
    };
    if start >= cfg.epochs {
        save(&net, &opt, start)?;
    }
    let train_set = data.train_set();
    let mut records = Vec::new();
    for epoch in start..cfg.epochs {
        let record = train_epoch(&mut net, train_set.as_ref(), &loss, &mut opt, &options, epoch)?;
        log::info!(
            "epoch {} loss {:.6} metric {:.6} ({:.1}s)",
            epoch + 1,
            record.loss,
            record.metric,
            record.seconds
        );
        writeln!(curve, "{},{},{}", epoch + 1, record.loss, record.metric)
            .and_then(|_| curve.flush())
            .map_err(|e| Error::io(&curve_path, e))?;
        writeln!(timing, "{},{}", epoch + 1, record.seconds)
            .and_then(|_| timing.flush())
            .map_err(|e| Error::io(&timing_path, e))?;
        save(&net, &opt, epoch + 1)?;
        records.push(record);
    }
    Ok(TrainSummary {
        records,
        checkpoint: ckpt_path,
    })
}

pub fn checkpoint_path(cfg: &RunConfig, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output.dir.join("checkpoint.bin"))
}

fn load_for(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<NetworkSpec> {
    let ckpt = load_checkpoint(checkpoint_path(cfg, checkpoint))?;
    check_topology(&ckpt.network, cfg)?;
    Ok(ckpt.network)
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalReport {
    Classify {
        samples: usize,
        accuracy: f64,
    },
    Associate {
        samples: usize,
        /// Mean distance between the network output and the clean pattern.
        output_distance: f64,
        /// Mean distance between the noisy input and the clean pattern.
        input_distance: f64,
    },
}

/// Test-split metrics of a trained network.
pub fn evaluate(net: &NetworkSpec, cfg: &RunConfig, data: &TaskData) -> Result<EvalReport> {
    match data {
        TaskData::Classify { test, .. } => {
            let hits = (0..TrainSet::len(test))
                .into_par_iter()
                .map(|i| {
                    let input = test.encode(i, 0)?;
                    let state = net.simulate(&input.to_trace(), SpikeMode::Hard)?;
                    Ok((predict_class(&state.output_spikes().counts()) == test.label(i)) as usize)
                })
                .collect::<Result<Vec<usize>>>()?;
            if hits.is_empty() {
                return Err(Error::EmptyDataset);
            }
            Ok(EvalReport::Classify {
                samples: hits.len(),
                accuracy: hits.iter().sum::<usize>() as f64 / hits.len() as f64,
            })
        }
        TaskData::Associate(data) => {
            let kernel = cfg.kernel()?;
            let samples = data.test_samples();
            if samples.is_empty() {
                return Err(Error::EmptyDataset);
            }
            let pairs = samples
                .par_iter()
                .map(|(noisy, clean, _)| {
                    let state = net.simulate(&noisy.to_trace(), SpikeMode::Hard)?;
                    Ok((
                        van_rossum_distance(&state.output_spikes(), clean, &kernel)?,
                        van_rossum_distance(noisy, clean, &kernel)?,
                    ))
                })
                .collect::<Result<Vec<(f64, f64)>>>()?;
            let n = pairs.len() as f64;
            Ok(EvalReport::Associate {
                samples: pairs.len(),
                output_distance: pairs.iter().map(|p| p.0).sum::<f64>() / n,
                input_distance: pairs.iter().map(|p| p.1).sum::<f64>() / n,
            })
        }
    }
}

pub fn eval(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<EvalReport> {
    let data = load_task_data(cfg)?;
    let net = load_for(cfg, checkpoint)?;
    let report = evaluate(&net, cfg, &data)?;
    create_dir(&cfg.output.dir)?;
    let path = cfg.output.dir.join("metrics.csv");
    let mut w = csv_writer(&path, false, "metric,value")?;
    let rows = match &report {
        EvalReport::Classify { samples, accuracy } => {
            format!("samples,{samples}\naccuracy,{accuracy}\n")
        }
        EvalReport::Associate {
            samples,
            output_distance,
            input_distance,
        } => format!("samples,{samples}\noutput_distance,{output_distance}\ninput_distance,{input_distance}\n"),
    };
    w.write_all(rows.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

fn write_matrix(path: &Path, prefix: &str, samples: &[usize], classes: &[usize], rows: &[Vec<f64>]) -> Result<()> {
    let width = rows.first().map_or(0, Vec::len);
    let header: Vec<String> = ["sample".to_string(), "class".to_string()]
        .into_iter()
        .chain((0..width).map(|j| format!("{prefix}{j}")))
        .collect();
    let mut w = csv_writer(path, false, &header.join(","))?;
    for ((s, c), row) in samples.iter().zip(classes).zip(rows) {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(w, "{s},{c},{}", cells.join(",")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-neuron firing rates of `layer` over the first `samples` test inputs, rows sorted by class.
pub fn rate_map_cmd(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    layer: usize,
    samples: Option<usize>,
) -> Result<PathBuf> {
    let data = load_task_data(cfg)?;
    let net = load_for(cfg, checkpoint)?;
    let inputs = data.labelled_test_inputs(samples)?;
    let map = rate_map(&net, &inputs, layer)?;
    create_dir(&cfg.output.dir)?;
    let path = cfg.output.dir.join("rate_map.csv");
    write_matrix(&path, "n", &map.sample_index, &map.classes, &map.rates)?;
    Ok(path)
}

/// Pairwise van Rossum distances between `layer` responses to the first `samples` test inputs.
pub fn distance_matrix_cmd(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    layer: usize,
    samples: Option<usize>,
) -> Result<PathBuf> {
    let data = load_task_data(cfg)?;
    let net = load_for(cfg, checkpoint)?;
    let inputs = data.labelled_test_inputs(samples)?;
    let m = distance_matrix(&net, &inputs, layer, &cfg.kernel()?)?;
    create_dir(&cfg.output.dir)?;
    let path = cfg.output.dir.join("distance_matrix.csv");
    write_matrix(&path, "d", &m.sample_index, &m.classes, &m.distances)?;
    Ok(path)
}

/// Writes the synthetic pattern dataset described by the config.
pub fn gen_data(cfg: &RunConfig) -> Result<PathBuf> {
    if cfg.task != TaskKind::Associate {
        return Err(Error::config("task", "gen-data needs task = \"associate\""));
    }
    let data = SyntheticData::generate(&cfg.synthetic_spec())?;
    let dir = cfg.output.dir.clone();
    data.write(&dir)?;
    Ok(dir)
}

/// Encodes the first `samples` test inputs and writes them as spike-event CSVs.
pub fn encode(cfg: &RunConfig, samples: Option<usize>) -> Result<PathBuf> {
    let data = load_task_data(cfg)?;
    let inputs = data.labelled_test_inputs(samples)?;
    let dir = cfg.output.dir.join("encoded");
    create_dir(&dir)?;
    let labels = dir.join("labels.csv");
    let mut w = csv_writer(&labels, false, "sample,label,file")?;
    for (i, (spikes, label)) in inputs.iter().enumerate() {
        let name = format!("sample_{i:05}.csv");
        write_spikes_csv(dir.join(&name), spikes)?;
        writeln!(w, "{i},{label},{name}").map_err(|e| Error::io(&labels, e))?;
    }
    w.flush().map_err(|e| Error::io(&labels, e))?;
    Ok(dir)
}
