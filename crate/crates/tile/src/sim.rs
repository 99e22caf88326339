//! Cycle-level execution of a placed layer, with operation counting, an
//! optional per-cycle trace, and bit-exact equivalence with the packed
//! reference path in ideal sense mode.

use bnn::bits::BinaryVector;
use bnn::BnnLinearLayer;
use rram::rng::Stream;

use crate::config::Dataflow;
use crate::error::{Result, TileError};
use crate::place::LayerPlacement;

/// Sensing behavior during reads. Stochastic mode flips each read weight bit
/// independently with the given probability (a flat abstraction of the
/// sense-amplifier error curve; device-resolved inference lives in the
/// fault-injection layer).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SenseMode {
    Ideal,
    Stochastic { flip_prob: f64 },
}

/// Operation counts of one simulation, the basis of energy accounting.
/// `reads` counts per-bit XNOR read+add events (only valid lanes sense);
/// `tree_adds` counts partial-popcount merges; `threshold_subtracts` counts
/// final threshold subtractions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct OpCounts {
    pub reads: u64,
    pub tree_adds: u64,
    pub threshold_subtracts: u64,
}

impl OpCounts {
    pub fn accumulate(&mut self, other: &OpCounts) {
        self.reads += other.reads;
        self.tree_adds += other.tree_adds;
        self.threshold_subtracts += other.threshold_subtracts;
    }
}

/// One cell activation in the trace.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct CellEvent {
    pub tile_row: usize,
    pub tile_col: usize,
    pub block_row: usize,
    pub neuron: usize,
    pub partial: u32,
}

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct CycleTrace {
    pub cycle: u64,
    pub active_cells: Vec<CellEvent>,
    /// neurons finished this cycle: (neuron, activation or score)
    pub outputs: Vec<(usize, i32)>,
}

#[derive(Clone, Debug)]
pub struct LayerSim {
    /// Hidden-layer activations (one bit per neuron).
    pub activations: BinaryVector,
    /// Integer scores pc - T (meaningful for final layers).
    pub scores: Vec<i32>,
    pub cycles: u64,
    pub ops: OpCounts,
    pub trace: Vec<CycleTrace>,
}

/// Run one layer through the tile, cycle by cycle.
///
/// Parallel-to-sequential: at cycle k every active cell reads one full block
/// row with XNOR against its input chunk and counts agreements into its
/// partial counter; the column adder tree merges the per-cell partials, the
/// threshold is subtracted at the column foot and the sign bit emitted,
/// so M neurons finish per cycle. Sequential-to-parallel: each cell owns one
/// neuron and accumulates one input chunk per cycle; thresholds apply after
/// the last chunk.
pub fn simulate_layer(
    placement: &LayerPlacement,
    layer: &BnnLinearLayer,
    x: &BinaryVector,
    sense: SenseMode,
    stream: &mut Stream,
    record_trace: bool,
) -> Result<LayerSim> {
    if layer.in_features() != placement.in_features
        || layer.out_features() != placement.out_features
    {
        return Err(TileError::LengthMismatch {
            expected: placement.in_features,
            got: layer.in_features(),
        });
    }
    if x.len() != placement.in_features {
        return Err(TileError::LengthMismatch {
            expected: placement.in_features,
            got: x.len(),
        });
    }
    let cfg = &placement.config;
    let cycles = placement.schedule_length();
    let mut ops = OpCounts::default();
    let mut trace = Vec::new();
    let mut activations = BinaryVector::zeros(placement.out_features);
    let mut scores = vec![0i32; placement.out_features];
    // loop accumulators of the sequential-to-parallel flow (one wide
    // register per owned neuron; per-row partials stay counter-bounded)
    let mut accumulators = vec![0u32; placement.out_features];

    for cycle in 0..cycles {
        let mut cycle_trace = CycleTrace {
            cycle,
            ..CycleTrace::default()
        };
        // assignments active this cycle: block_row == cycle
        for a in placement
            .assignments
            .iter()
            .filter(|a| a.block_row as u64 == cycle)
        {
            let mut partial = 0u32;
            for i in 0..a.width {
                let col = a.input_start + i;
                let mut w_bit = layer.weights().get(a.neuron, col);
                if let SenseMode::Stochastic { flip_prob } = sense {
                    if flip_prob > 0.0 && stream.bernoulli(flip_prob) {
                        w_bit = !w_bit;
                    }
                }
                ops.reads += 1;
                if w_bit == x.get(col) {
                    partial += 1;
                }
            }
            if partial > cfg.counter_max() {
                if cfg.saturate_counters {
                    partial = cfg.counter_max();
                } else {
                    return Err(TileError::CounterOverflow {
                        value: partial,
                        max: cfg.counter_max(),
                    });
                }
            }
            match cfg.mode {
                Dataflow::ParallelToSequential => {
                    // stash into the neuron's slot; the tree merge follows
                    accumulators[a.neuron] += partial;
                }
                Dataflow::SequentialToParallel => {
                    if cycle > 0 {
                        ops.tree_adds += 1; // accumulate loop add
                    }
                    accumulators[a.neuron] += partial;
                }
            }
            if record_trace {
                cycle_trace.active_cells.push(CellEvent {
                    tile_row: a.tile_row,
                    tile_col: a.tile_col,
                    block_row: a.block_row,
                    neuron: a.neuron,
                    partial,
                });
            }
        }

        if cfg.mode == Dataflow::ParallelToSequential {
            // neurons whose (single) block row ran this cycle finish now:
            // merge their per-cell partials through the column tree, then
            // subtract the threshold at the column foot
            for neuron in
                (0..placement.out_features).filter(|&j| j % cfg.block_dim == cycle as usize)
            {
                let chunks = placement.in_features.div_ceil(cfg.block_dim) as u64;
                ops.tree_adds += chunks.saturating_sub(1);
                ops.threshold_subtracts += 1;
                let pc = accumulators[neuron];
                let score = pc as i32 - layer.thresholds()[neuron] as i32;
                scores[neuron] = score;
                if score >= 0 {
                    activations.set(neuron, true);
                }
                if record_trace {
                    cycle_trace.outputs.push((neuron, score));
                }
            }
        }
        if record_trace {
            trace.push(cycle_trace);
        }
    }

    if cfg.mode == Dataflow::SequentialToParallel {
        // after the last chunk every cell subtracts its threshold
        for neuron in 0..placement.out_features {
            ops.threshold_subtracts += 1;
            let score = accumulators[neuron] as i32 - layer.thresholds()[neuron] as i32;
            scores[neuron] = score;
            if score >= 0 {
                activations.set(neuron, true);
            }
            if record_trace {
                if let Some(last) = trace.last_mut() {
                    last.outputs.push((neuron, score));
                }
            }
        }
    }

    Ok(LayerSim {
        activations,
        scores,
        cycles,
        ops,
        trace,
    })
}

/// Simulation of a whole model on one input: per-layer runs chained through
/// the tile, final class by argmax over the last layer's scores.
#[derive(Clone, Debug)]
pub struct ModelSim {
    pub class: usize,
    pub scores: Vec<i32>,
    pub cycles: u64,
    pub ops: OpCounts,
    pub per_layer: Vec<(u64, OpCounts)>,
}

/// Map and run every layer of a model under one tile configuration.
pub fn simulate_model(
    model: &bnn::BnnModel,
    config: &crate::config::TileConfig,
    x_raw: &[f32],
    sense: SenseMode,
    stream: &mut Stream,
) -> Result<ModelSim> {
    let mut act = model
        .binarize_input(x_raw)
        .map_err(|e| TileError::InvalidConfig(e.to_string()))?;
    let mut total_ops = OpCounts::default();
    let mut total_cycles = 0u64;
    let mut per_layer = Vec::new();
    let mut scores = Vec::new();
    for layer in model.layers() {
        let placement = crate::place::map_layer(layer, config)?;
        let sim = simulate_layer(&placement, layer, &act, sense, stream, false)?;
        total_cycles += sim.cycles;
        total_ops.accumulate(&sim.ops);
        per_layer.push((sim.cycles, sim.ops));
        scores = sim.scores;
        act = sim.activations;
    }
    Ok(ModelSim {
        class: bnn::argmax(&scores),
        scores,
        cycles: total_cycles,
        ops: total_ops,
        per_layer,
    })
}
