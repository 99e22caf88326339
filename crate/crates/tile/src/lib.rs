//! Cycle-level simulator for the tiled in-memory-computing architecture: an
//! N x M grid of basic cells, each an n x n memory block with XNOR sense
//! amplifiers and partial-popcount counters, runnable in the
//! parallel-to-sequential or sequential-to-parallel dataflow, with exact
//! operation counting and energy accounting. Ideal-sense simulation is
//! bit-exact against the packed reference implementation.

pub mod config;
pub mod energy;
pub mod error;
pub mod place;
pub mod sim;

pub use config::{Dataflow, EnergyTable, TileConfig};
pub use energy::{energy_report, programming_energy_j, EnergyReport};
pub use error::{Result, TileError};
pub use place::{map_layer, LayerPlacement};
pub use sim::{simulate_layer, simulate_model, LayerSim, ModelSim, OpCounts, SenseMode};
