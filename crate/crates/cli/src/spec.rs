//! Experiment specifications: one serializable record per command run.
//! Every artifact embeds its spec, so any output can be regenerated
//! byte-for-byte from the artifact alone.

use serde::{Deserialize, Serialize};

/// Readout structure selector for BER measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellModeSpec {
    #[serde(rename = "1t1r")]
    Single1T1R,
    #[serde(rename = "2t2r")]
    Diff2T2R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataflowSpec {
    P2s,
    S2p,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensingSpec {
    Frozen,
    PerRead,
}

/// The full description of one experiment. The seed is mandatory: nothing
/// ever falls back to wall-clock entropy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum ExperimentSpec {
    /// Train a binarized network on an IDX dataset directory and export the
    /// model plus a training-log CSV.
    Train {
        data_dir: String,
        topology: Vec<usize>,
        epochs: usize,
        batch_size: usize,
        learning_rate: f32,
        hinge_margin: f32,
        seed: u64,
    },
    /// Weight-error injection sweep over a list of BERs.
    Sweep {
        model: String,
        data_dir: String,
        bers: Vec<f64>,
        repetitions: usize,
        /// evaluate on the first N validation items (whole set when absent)
        limit: Option<usize>,
        seed: u64,
    },
    /// Monte Carlo read-after-write BER of one programming condition.
    DeviceBer {
        condition: String,
        mode: CellModeSpec,
        trials: u64,
        config: Option<String>,
        seed: u64,
    },
    /// BER vs cycle count for one condition, both readout structures.
    Endurance {
        condition: String,
        checkpoints: Vec<u64>,
        trials: u64,
        config: Option<String>,
        seed: u64,
    },
    /// Analytic reliability tradeoff table across all conditions and the
    /// shipped ECC codes.
    Tradeoff { config: Option<String>, seed: u64 },
    /// Cycle-level tile simulation of one model on one dataset item.
    TileRun {
        model: String,
        data_dir: String,
        item: usize,
        mode: DataflowSpec,
        block_dim: usize,
        tile_rows: usize,
        tile_cols: usize,
        trace: bool,
        seed: u64,
    },
    /// Inference with weights stored in simulated differential arrays.
    DeviceInfer {
        model: String,
        data_dir: String,
        condition: String,
        limit: Option<usize>,
        sensing: SensingSpec,
        config: Option<String>,
        seed: u64,
    },
}

impl ExperimentSpec {
    pub fn seed(&self) -> u64 {
        match self {
            ExperimentSpec::Train { seed, .. }
            | ExperimentSpec::Sweep { seed, .. }
            | ExperimentSpec::DeviceBer { seed, .. }
            | ExperimentSpec::Endurance { seed, .. }
            | ExperimentSpec::Tradeoff { seed, .. }
            | ExperimentSpec::TileRun { seed, .. }
            | ExperimentSpec::DeviceInfer { seed, .. } => *seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}
