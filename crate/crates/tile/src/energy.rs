//! Energy accounting: operation counts times per-operation costs, exactly
//! linear by construction.

use crate::config::EnergyTable;
use crate::error::Result;
use crate::sim::OpCounts;

const FEMTO: f64 = 1e-15;
const PICO: f64 = 1e-12;

/// Energy breakdown in joules.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct EnergyReport {
    pub reads_j: f64,
    pub tree_adds_j: f64,
    pub threshold_subtracts_j: f64,
    pub total_j: f64,
    pub counts: OpCounts,
}

/// Energy of a set of inference operations.
pub fn energy_report(ops: &OpCounts, table: &EnergyTable) -> Result<EnergyReport> {
    table.validate()?;
    let reads_j = ops.reads as f64 * table.read_xnor_add_fj * FEMTO;
    let tree_adds_j = ops.tree_adds as f64 * table.tree_add_fj * FEMTO;
    let threshold_subtracts_j =
        ops.threshold_subtracts as f64 * table.threshold_subtract_fj * FEMTO;
    Ok(EnergyReport {
        reads_j,
        tree_adds_j,
        threshold_subtracts_j,
        total_j: reads_j + tree_adds_j + threshold_subtracts_j,
        counts: *ops,
    })
}

/// One-time programming energy for loading `weight_bits` device pairs.
pub fn programming_energy_j(weight_bits: u64, table: &EnergyTable) -> f64 {
    weight_bits as f64 * (table.set_program_pj + table.reset_program_pj) * PICO
}
