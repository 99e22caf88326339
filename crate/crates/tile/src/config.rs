//! Tile geometry and per-operation energy costs.

use crate::error::{Result, TileError};

/// Dataflow configuration of the tile grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Dataflow {
    /// Inputs applied in parallel across tile rows; outputs produced
    /// sequentially, M neurons per cycle (one per tile column).
    ParallelToSequential,
    /// Inputs presented sequentially in chunks of n; each basic cell owns
    /// one output neuron and accumulates its partial popcount across cycles.
    SequentialToParallel,
}

/// Geometry of the accelerator: an N x M grid of basic cells, each holding
/// an n x n memory block with XNOR sense amplifiers and a partial-popcount
/// counter of `partial_counter_bits` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TileConfig {
    pub block_dim: usize,
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub mode: Dataflow,
    pub partial_counter_bits: u32,
    /// Saturate partial counters instead of erroring on overflow. Only the
    /// compatibility constructor sets this; the default geometry always
    /// sizes counters to hold a full row popcount.
    pub saturate_counters: bool,
}

impl TileConfig {
    /// Counter width that can represent every row popcount 0..=n.
    pub fn required_counter_bits(block_dim: usize) -> u32 {
        (usize::BITS - block_dim.leading_zeros()).max(1)
    }

    pub fn new(
        block_dim: usize,
        tile_rows: usize,
        tile_cols: usize,
        mode: Dataflow,
    ) -> Result<Self> {
        Self::with_counter_bits(
            block_dim,
            tile_rows,
            tile_cols,
            mode,
            Self::required_counter_bits(block_dim),
        )
    }

    pub fn with_counter_bits(
        block_dim: usize,
        tile_rows: usize,
        tile_cols: usize,
        mode: Dataflow,
        partial_counter_bits: u32,
    ) -> Result<Self> {
        if block_dim == 0 || tile_rows == 0 || tile_cols == 0 {
            return Err(TileError::InvalidConfig("empty tile geometry".into()));
        }
        let needed = Self::required_counter_bits(block_dim);
        if partial_counter_bits < needed {
            return Err(TileError::InvalidConfig(format!(
                "{partial_counter_bits}-bit counters cannot hold popcount {block_dim} (need {needed})"
            )));
        }
        Ok(TileConfig {
            block_dim,
            tile_rows,
            tile_cols,
            mode,
            partial_counter_bits,
            saturate_counters: false,
        })
    }

    /// The published 32x32-block geometry with five-bit saturating counters.
    /// Five bits cannot represent the all-agree popcount of 32, so this mode
    /// exists for comparison only; counters clamp at 31.
    pub fn strict_five_bit(tile_rows: usize, tile_cols: usize, mode: Dataflow) -> Self {
        TileConfig {
            block_dim: 32,
            tile_rows,
            tile_cols,
            mode,
            partial_counter_bits: 5,
            saturate_counters: true,
        }
    }

    pub fn counter_max(&self) -> u32 {
        if self.partial_counter_bits >= 32 {
            u32::MAX
        } else {
            (1u32 << self.partial_counter_bits) - 1
        }
    }

    /// Capacity bounds of the selected dataflow: (max inputs, max outputs).
    pub fn capacity(&self) -> (usize, usize) {
        match self.mode {
            Dataflow::ParallelToSequential => (
                self.block_dim * self.tile_rows,
                self.block_dim * self.tile_cols,
            ),
            Dataflow::SequentialToParallel => (
                self.block_dim * self.block_dim,
                self.tile_rows * self.tile_cols,
            ),
        }
    }
}

/// Per-operation energy costs. One read of a weight bit through the XNOR
/// sense amplifier plus its addition into the partial counter costs
/// `read_xnor_add_fj`; partial-popcount merges (the column adder tree in the
/// parallel-to-sequential flow, the accumulate loop in the other) cost
/// `tree_add_fj` each; the final threshold subtraction costs
/// `threshold_subtract_fj`. Programming costs are per device pair.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnergyTable {
    pub read_xnor_add_fj: f64,
    pub tree_add_fj: f64,
    pub threshold_subtract_fj: f64,
    pub set_program_pj: f64,
    pub reset_program_pj: f64,
}

impl Default for EnergyTable {
    fn default() -> Self {
        EnergyTable {
            read_xnor_add_fj: 14.0,
            tree_add_fj: 5.0,
            threshold_subtract_fj: 20.0,
            set_program_pj: 300.0,
            reset_program_pj: 350.0,
        }
    }
}

impl EnergyTable {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.read_xnor_add_fj,
            self.tree_add_fj,
            self.threshold_subtract_fj,
            self.set_program_pj,
            self.reset_program_pj,
        ];
        if all.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(TileError::InvalidConfig(
                "energy costs must be non-negative".into(),
            ));
        }
        Ok(())
    }
}
