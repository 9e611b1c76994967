//! Command-line front end: `snn-iir <command> --config run.toml [overrides]`.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Result;
pub use commands::{Overrides, TaskData};
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "snn-iir",
    version,
    about = "Train and analyse spiking networks with IIR synapses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Checkpoint to resume from (train) or evaluate (other commands).
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Probe {
    /// Layer index, 0 being the first layer after the input.
    #[arg(long, default_value_t = 0)]
    pub layer: usize,
    /// Number of test samples.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train and write curve.csv, timing.csv and checkpoint.bin.
    Train,
    /// Evaluate a checkpoint on the test split and write metrics.csv.
    Eval,
    /// Per-neuron firing rates of one layer, written to rate_map.csv.
    RateMap(Probe),
    /// Pairwise van Rossum distances of one layer's responses, written to distance_matrix.csv.
    DistanceMatrix(Probe),
    /// Generate the synthetic pattern dataset.
    GenData,
    /// Encode test inputs to spike-event CSVs.
    Encode {
        #[arg(long)]
        samples: Option<usize>,
    },
}

/// Parses the config, applies overrides and runs the command.
pub fn run(cli: Cli) -> Result<()> {
    let Some(path) = &cli.common.config else {
        return Err(crate::error::Error::config(
            "--config",
            "a run configuration is required",
        ));
    };
    let overrides = Overrides {
        seed: cli.common.seed,
        out: cli.common.out.clone(),
        threads: cli.common.threads,
    };
    let cfg = overrides.apply(RunConfig::load(path)?)?;
    let ckpt = cli.common.checkpoint.as_deref();
    commands::with_threads(cfg.threads, || match &cli.command {
        Command::Train => {
            let summary = commands::train(&cfg, ckpt)?;
            log::info!("wrote {}", summary.checkpoint.display());
            Ok(())
        }
        Command::Eval => {
            let report = commands::eval(&cfg, ckpt)?;
            log::info!("{report:?}");
            Ok(())
        }
        Command::RateMap(p) => commands::rate_map_cmd(&cfg, ckpt, p.layer, p.samples).map(drop),
        Command::DistanceMatrix(p) => commands::distance_matrix_cmd(&cfg, ckpt, p.layer, p.samples).map(drop),
        Command::GenData => commands::gen_data(&cfg).map(drop),
        Command::Encode { samples } => commands::encode(&cfg, *samples).map(drop),
    })?
}
