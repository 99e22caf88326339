use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use bnn_rram::artifact::{artifact_path, extract_spec, write_atomic};
use bnn_rram::run::run_command;
use bnn_rram::spec::{CellModeSpec, DataflowSpec, ExperimentSpec, SensingSpec};

#[derive(Parser)]
#[command(
    name = "bnn-rram",
    about = "Experiment runner for binarized-network inference on differential resistive memory",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed; every stochastic quantity derives from it (mandatory, no
    /// wall-clock default)
    #[arg(long)]
    seed: u64,
    /// Output path; companion artifacts append suffixes to it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train a binarized network on an IDX dataset and export the model
    Train {
        #[command(flatten)]
        common: Common,
        /// Directory with train/t10k IDX files (.gz or raw)
        #[arg(long, default_value = "data/mnist")]
        data_dir: String,
        /// Layer widths, input first
        #[arg(long, value_delimiter = ',', default_values_t = vec![784, 256, 256, 10])]
        topology: Vec<usize>,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 100)]
        batch_size: usize,
        #[arg(long, default_value_t = 0.01)]
        learning_rate: f32,
        #[arg(long, default_value_t = 0.2)]
        hinge_margin: f32,
    },
    /// Accuracy vs weight bit-error-rate sweep
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "data/mnist")]
        data_dir: String,
        /// Comma-separated bit error rates
        #[arg(long, value_delimiter = ',', required = true)]
        bers: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
        /// Evaluate only the first N validation items
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Monte Carlo read-after-write BER of one programming condition
    DeviceBer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        condition: String,
        /// Readout structure: 1t1r or 2t2r
        #[arg(long, value_parser = parse_cell_mode, default_value = "2t2r")]
        mode: CellModeSpec,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        /// Condition table file (defaults to the calibrated built-in table)
        #[arg(long)]
        config: Option<String>,
    },
    /// BER vs programming cycle count for one condition
    Endurance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        condition: String,
        /// Comma-separated cycle checkpoints, strictly increasing
        #[arg(long, value_delimiter = ',', required = true)]
        checkpoints: Vec<u64>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        config: Option<String>,
    },
    /// Analytic reliability tradeoff table (1T1R vs 2T2R vs ECC)
    Tradeoff {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        config: Option<String>,
    },
    /// Cycle-level tile simulation of one model on one dataset item
    TileRun {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "data/mnist")]
        data_dir: String,
        /// Validation item index to run
        #[arg(long, default_value_t = 0)]
        item: usize,
        /// Dataflow: p2s or s2p
        #[arg(long, value_parser = parse_dataflow, default_value = "p2s")]
        mode: DataflowSpec,
        #[arg(long, default_value_t = 32)]
        block_dim: usize,
        #[arg(long, default_value_t = 32)]
        tile_rows: usize,
        #[arg(long, default_value_t = 32)]
        tile_cols: usize,
        /// Also emit a per-cycle trace artifact
        #[arg(long)]
        trace: bool,
    },
    /// Inference with weights stored in simulated differential arrays
    DeviceInfer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "data/mnist")]
        data_dir: String,
        #[arg(long)]
        condition: String,
        #[arg(long)]
        limit: Option<usize>,
        /// frozen (read weights once) or per-read (re-sense each inference)
        #[arg(long, value_parser = parse_sensing, default_value = "frozen")]
        sensing: SensingSpec,
        #[arg(long)]
        config: Option<String>,
    },
    /// Re-run the spec embedded in an artifact and rewrite its outputs
    Replay {
        /// Artifact whose embedded spec to re-run
        #[arg(long)]
        artifact: PathBuf,
        /// Output path for the regenerated artifacts
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_cell_mode(s: &str) -> Result<CellModeSpec, String> {
    match s {
        "1t1r" => Ok(CellModeSpec::Single1T1R),
        "2t2r" => Ok(CellModeSpec::Diff2T2R),
        other => Err(format!("unknown mode {other} (expected 1t1r or 2t2r)")),
    }
}

fn parse_dataflow(s: &str) -> Result<DataflowSpec, String> {
    match s {
        "p2s" => Ok(DataflowSpec::P2s),
        "s2p" => Ok(DataflowSpec::S2p),
        other => Err(format!("unknown dataflow {other} (expected p2s or s2p)")),
    }
}

fn parse_sensing(s: &str) -> Result<SensingSpec, String> {
    match s {
        "frozen" => Ok(SensingSpec::Frozen),
        "per-read" => Ok(SensingSpec::PerRead),
        other => Err(format!(
            "unknown sensing {other} (expected frozen or per-read)"
        )),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let (spec, out) = match cli.command {
        Command::Train {
            common,
            data_dir,
            topology,
            epochs,
            batch_size,
            learning_rate,
            hinge_margin,
        } => (
            ExperimentSpec::Train {
                data_dir,
                topology,
                epochs,
                batch_size,
                learning_rate,
                hinge_margin,
                seed: common.seed,
            },
            common.out,
        ),
        Command::Sweep {
            common,
            model,
            data_dir,
            bers,
            repetitions,
            limit,
        } => (
            ExperimentSpec::Sweep {
                model,
                data_dir,
                bers,
                repetitions,
                limit,
                seed: common.seed,
            },
            common.out,
        ),
        Command::DeviceBer {
            common,
            condition,
            mode,
            trials,
            config,
        } => (
            ExperimentSpec::DeviceBer {
                condition,
                mode,
                trials,
                config,
                seed: common.seed,
            },
            common.out,
        ),
        Command::Endurance {
            common,
            condition,
            checkpoints,
            trials,
            config,
        } => (
            ExperimentSpec::Endurance {
                condition,
                checkpoints,
                trials,
                config,
                seed: common.seed,
            },
            common.out,
        ),
        Command::Tradeoff { common, config } => (
            ExperimentSpec::Tradeoff {
                config,
                seed: common.seed,
            },
            common.out,
        ),
        Command::TileRun {
            common,
            model,
            data_dir,
            item,
            mode,
            block_dim,
            tile_rows,
            tile_cols,
            trace,
        } => (
            ExperimentSpec::TileRun {
                model,
                data_dir,
                item,
                mode,
                block_dim,
                tile_rows,
                tile_cols,
                trace,
                seed: common.seed,
            },
            common.out,
        ),
        Command::DeviceInfer {
            common,
            model,
            data_dir,
            condition,
            limit,
            sensing,
            config,
        } => (
            ExperimentSpec::DeviceInfer {
                model,
                data_dir,
                condition,
                limit,
                sensing,
                config,
                seed: common.seed,
            },
            common.out,
        ),
        Command::Replay { artifact, out } => {
            let bytes = std::fs::read(&artifact)
                .with_context(|| format!("reading artifact {}", artifact.display()))?;
            let spec = extract_spec(&bytes)?;
            (spec, out)
        }
    };

    let artifacts = run_command(&spec)?;
    for artifact in &artifacts {
        let path = artifact_path(&out, &artifact.name);
        write_atomic(&path, &artifact.bytes)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
