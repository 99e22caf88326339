//! Deterministic mapping of a layer's weight matrix onto the tile grid.

use bnn::BnnLinearLayer;

use crate::config::{Dataflow, TileConfig};
use crate::error::{Result, TileError};

/// Where one block row of one basic cell gets its weight bits from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct BlockRowAssignment {
    pub tile_row: usize,
    pub tile_col: usize,
    pub block_row: usize,
    /// Output neuron whose weights live in this block row.
    pub neuron: usize,
    /// First input index of the slice stored here.
    pub input_start: usize,
    /// Number of valid weight bits (the rest of the row is unused).
    pub width: usize,
}

/// Placement of one layer: every weight bit lands in exactly one block row
/// slice, thresholds are assigned to the column (or cell) that finishes the
/// corresponding neuron, and the cycle schedule follows from the mapping.
#[derive(Clone, Debug)]
pub struct LayerPlacement {
    pub config: TileConfig,
    pub in_features: usize,
    pub out_features: usize,
    pub assignments: Vec<BlockRowAssignment>,
    /// threshold_home[j] = (tile_row, tile_col) owning neuron j's threshold.
    /// In the parallel-to-sequential flow thresholds sit at the column foot
    /// (tile_row is the last row of the grid).
    pub threshold_home: Vec<(usize, usize)>,
}

impl LayerPlacement {
    /// Cycles needed to run the whole layer once, derived purely from the
    /// assignment structure: the largest block-row index touched, plus one.
    pub fn schedule_length(&self) -> u64 {
        match self.config.mode {
            Dataflow::ParallelToSequential => self
                .assignments
                .iter()
                .map(|a| a.block_row as u64 + 1)
                .max()
                .unwrap_or(0),
            Dataflow::SequentialToParallel => self
                .assignments
                .iter()
                .map(|a| a.block_row as u64 + 1)
                .max()
                .unwrap_or(0),
        }
    }
}

/// Lay a layer out on the tile grid.
///
/// Parallel-to-sequential: input chunk r (n wide) goes to tile row r, output
/// chunk c (n wide) to tile column c; block row k of cell (r, c) holds the
/// weights of neuron c*n + k. Sequential-to-parallel: each cell owns one
/// output neuron (row-major over the grid) and block row k holds that
/// neuron's k-th input chunk.
pub fn map_layer(layer: &BnnLinearLayer, config: &TileConfig) -> Result<LayerPlacement> {
    let (in_features, out_features) = (layer.in_features(), layer.out_features());
    let (max_in, max_out) = config.capacity();
    if in_features > max_in {
        return Err(TileError::CapacityExceeded {
            what: match config.mode {
                Dataflow::ParallelToSequential => "inputs exceed n*N",
                Dataflow::SequentialToParallel => "inputs exceed n*n",
            },
            needed: in_features,
            available: max_in,
        });
    }
    if out_features > max_out {
        return Err(TileError::CapacityExceeded {
            what: match config.mode {
                Dataflow::ParallelToSequential => "outputs exceed n*M",
                Dataflow::SequentialToParallel => "outputs exceed N*M",
            },
            needed: out_features,
            available: max_out,
        });
    }

    let n = config.block_dim;
    let mut assignments = Vec::new();
    let mut threshold_home = Vec::with_capacity(out_features);
    match config.mode {
        Dataflow::ParallelToSequential => {
            let in_chunks = in_features.div_ceil(n);
            for neuron in 0..out_features {
                let tile_col = neuron / n;
                let block_row = neuron % n;
                for tile_row in 0..in_chunks {
                    let input_start = tile_row * n;
                    let width = (in_features - input_start).min(n);
                    assignments.push(BlockRowAssignment {
                        tile_row,
                        tile_col,
                        block_row,
                        neuron,
                        input_start,
                        width,
                    });
                }
                // threshold memory sits at the foot of the producing column
                threshold_home.push((config.tile_rows - 1, tile_col));
            }
        }
        Dataflow::SequentialToParallel => {
            let in_chunks = in_features.div_ceil(n);
            for neuron in 0..out_features {
                let tile_row = neuron / config.tile_cols;
                let tile_col = neuron % config.tile_cols;
                for block_row in 0..in_chunks {
                    let input_start = block_row * n;
                    let width = (in_features - input_start).min(n);
                    assignments.push(BlockRowAssignment {
                        tile_row,
                        tile_col,
                        block_row,
                        neuron,
                        input_start,
                        width,
                    });
                }
                threshold_home.push((tile_row, tile_col));
            }
        }
    }

    debug_assert_eq!(
        assignments.iter().map(|a| a.width).sum::<usize>(),
        in_features * out_features,
        "every weight bit placed exactly once"
    );
    Ok(LayerPlacement {
        config: *config,
        in_features,
        out_features,
        assignments,
        threshold_home,
    })
}
