//! Stochastic model of OxRAM resistance states per programming condition:
//! log-normal state populations, endurance drift and the calibrated
//! condition table.

use crate::error::{Result, RramError};
use crate::math;
use crate::rng::Stream;

/// One SET/RESET programming recipe. Ranges follow the device sweep limits:
/// compliance 20..=200 uA, RESET voltage 1.5..=2.5 V, pulse 0.1..=100 us.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProgrammingCondition {
    pub set_compliance_ua: f64,
    pub reset_voltage_v: f64,
    pub pulse_width_us: f64,
}

impl ProgrammingCondition {
    pub fn new(set_compliance_ua: f64, reset_voltage_v: f64, pulse_width_us: f64) -> Result<Self> {
        if !(20.0..=200.0).contains(&set_compliance_ua) {
            return Err(RramError::InvalidParameter(format!(
                "SET compliance {set_compliance_ua} uA outside [20, 200]"
            )));
        }
        if !(1.5..=2.5).contains(&reset_voltage_v) {
            return Err(RramError::InvalidParameter(format!(
                "RESET voltage {reset_voltage_v} V outside [1.5, 2.5]"
            )));
        }
        if !(0.1..=100.0).contains(&pulse_width_us) {
            return Err(RramError::InvalidParameter(format!(
                "pulse width {pulse_width_us} us outside [0.1, 100]"
            )));
        }
        Ok(ProgrammingCondition {
            set_compliance_ua,
            reset_voltage_v,
            pulse_width_us,
        })
    }

    fn label(&self) -> String {
        format!(
            "({} uA, {} V, {} us)",
            self.set_compliance_ua, self.reset_voltage_v, self.pulse_width_us
        )
    }

    /// Distance in normalized parameter space, for "nearest known" reporting.
    fn distance(&self, other: &ProgrammingCondition) -> f64 {
        let di = (self.set_compliance_ua - other.set_compliance_ua) / 180.0;
        let dv = (self.reset_voltage_v - other.reset_voltage_v) / 1.0;
        let dw = (self.pulse_width_us.ln() - other.pulse_width_us.ln()) / 100.0f64.ln();
        (di * di + dv * dv + dw * dw).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum State {
    Lrs,
    Hrs,
}

/// Log-normal resistance population for one state: ln R ~ N(log_median, log_sigma^2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResistanceDistribution {
    pub state: State,
    pub log_median: f64,
    pub log_sigma: f64,
}

impl ResistanceDistribution {
    /// `log_sigma` = 0 is allowed and means a degenerate (noise-free) device.
    pub fn new(state: State, log_median: f64, log_sigma: f64) -> Result<Self> {
        if !log_median.is_finite() || !log_sigma.is_finite() || log_sigma < 0.0 {
            return Err(RramError::InvalidParameter(format!(
                "resistance distribution: log_median {log_median}, log_sigma {log_sigma}"
            )));
        }
        Ok(ResistanceDistribution {
            state,
            log_median,
            log_sigma,
        })
    }

    pub fn median_ohms(&self) -> f64 {
        self.log_median.exp()
    }
}

/// Draw one resistance in ohms; always strictly positive.
pub fn sample_resistance(dist: &ResistanceDistribution, stream: &mut Stream) -> f64 {
    if dist.log_sigma == 0.0 {
        return dist.log_median.exp();
    }
    (dist.log_median + dist.log_sigma * stream.normal()).exp()
}

/// Endurance drift law: linear in log10(cycles/onset) past the onset.
/// Median drifts close the LRS/HRS gap (LRS up, HRS down) and sigmas never
/// shrink, so aged populations only get worse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgingModel {
    pub lrs_median_drift_per_decade: f64,
    pub hrs_median_drift_per_decade: f64,
    pub lrs_sigma_growth_per_decade: f64,
    pub hrs_sigma_growth_per_decade: f64,
    pub onset_cycles: u64,
}

impl AgingModel {
    pub fn new(
        lrs_median_drift_per_decade: f64,
        hrs_median_drift_per_decade: f64,
        lrs_sigma_growth_per_decade: f64,
        hrs_sigma_growth_per_decade: f64,
        onset_cycles: u64,
    ) -> Result<Self> {
        if lrs_median_drift_per_decade < 0.0 || hrs_median_drift_per_decade > 0.0 {
            return Err(RramError::InvalidParameter(
                "median drift must close the gap (LRS >= 0, HRS <= 0)".into(),
            ));
        }
        if lrs_sigma_growth_per_decade < 0.0 || hrs_sigma_growth_per_decade < 0.0 {
            return Err(RramError::InvalidParameter(
                "sigma growth must be non-negative".into(),
            ));
        }
        if onset_cycles == 0 {
            return Err(RramError::InvalidParameter(
                "aging onset must be at least one cycle".into(),
            ));
        }
        Ok(AgingModel {
            lrs_median_drift_per_decade,
            hrs_median_drift_per_decade,
            lrs_sigma_growth_per_decade,
            hrs_sigma_growth_per_decade,
            onset_cycles,
        })
    }

    pub fn none() -> Self {
        AgingModel {
            lrs_median_drift_per_decade: 0.0,
            hrs_median_drift_per_decade: 0.0,
            lrs_sigma_growth_per_decade: 0.0,
            hrs_sigma_growth_per_decade: 0.0,
            onset_cycles: u64::MAX,
        }
    }

    pub fn decades(&self, cycles: u64) -> f64 {
        if cycles <= self.onset_cycles {
            0.0
        } else {
            (cycles as f64 / self.onset_cycles as f64).log10()
        }
    }
}

/// Apply endurance drift; `cycles <= onset` returns the inputs unchanged.
pub fn age_distributions(
    lrs: &ResistanceDistribution,
    hrs: &ResistanceDistribution,
    aging: &AgingModel,
    cycles: u64,
) -> (ResistanceDistribution, ResistanceDistribution) {
    let d = aging.decades(cycles);
    if d == 0.0 {
        return (*lrs, *hrs);
    }
    let mut lrs2 = *lrs;
    let mut hrs2 = *hrs;
    lrs2.log_median += aging.lrs_median_drift_per_decade * d;
    hrs2.log_median += aging.hrs_median_drift_per_decade * d;
    lrs2.log_sigma += aging.lrs_sigma_growth_per_decade * d;
    hrs2.log_sigma += aging.hrs_sigma_growth_per_decade * d;
    // Drift never pushes the medians past each other.
    if hrs2.log_median < lrs2.log_median {
        let mid = 0.5 * (hrs2.log_median + lrs2.log_median);
        lrs2.log_median = mid;
        hrs2.log_median = mid;
    }
    (lrs2, hrs2)
}

/// Calibrated per-condition record.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionEntry {
    pub name: String,
    pub condition: ProgrammingCondition,
    pub lrs: ResistanceDistribution,
    pub hrs: ResistanceDistribution,
    pub aging: AgingModel,
    pub set_energy_pj: f64,
    pub reset_energy_pj: f64,
    pub cyclability_cycles: u64,
    /// True when the underlying error count was below the measurement floor
    /// and the calibrated BER is an upper-bound placeholder.
    pub ber_is_placeholder: bool,
}

impl ConditionEntry {
    /// LRS/HRS populations after `cycles` programming cycles.
    pub fn aged(&self, cycles: u64) -> (ResistanceDistribution, ResistanceDistribution) {
        age_distributions(&self.lrs, &self.hrs, &self.aging, cycles)
    }
}

/// Table of calibrated programming conditions, looked up by exact match.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConditionTable {
    entries: Vec<ConditionEntry>,
}

impl ConditionTable {
    pub fn new(entries: Vec<ConditionEntry>) -> Result<Self> {
        for e in &entries {
            if e.hrs.log_median <= e.lrs.log_median {
                return Err(RramError::InvalidParameter(format!(
                    "condition {}: HRS median must exceed LRS median",
                    e.name
                )));
            }
        }
        Ok(ConditionTable { entries })
    }

    pub fn entries(&self) -> &[ConditionEntry] {
        &self.entries
    }

    pub fn lookup(&self, cond: &ProgrammingCondition) -> Result<&ConditionEntry> {
        if let Some(e) = self.entries.iter().find(|e| e.condition == *cond) {
            return Ok(e);
        }
        let mut by_distance: Vec<&ConditionEntry> = self.entries.iter().collect();
        by_distance.sort_by(|a, b| {
            cond.distance(&a.condition)
                .total_cmp(&cond.distance(&b.condition))
        });
        Err(RramError::UnknownCondition {
            requested: cond.label(),
            nearest: by_distance
                .iter()
                .take(3)
                .map(|e| format!("{} {}", e.name, e.condition.label()))
                .collect(),
        })
    }

    pub fn by_name(&self, name: &str) -> Result<&ConditionEntry> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| RramError::UnknownCondition {
                requested: name.to_string(),
                nearest: self.entries.iter().map(|e| e.name.clone()).collect(),
            })
    }
}

/// Solve the per-state sigma that makes the single-device analytic BER (with
/// the optimal mid reference and equal sigmas) hit `target_ber`.
///
/// Root finding on a monotone function of sigma; unreachable targets are
/// reported as a bracketing failure.
pub fn calibrate_sigma(target_ber: f64, log_median_gap: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&target_ber) || target_ber == 0.0 {
        return Err(RramError::InvalidParameter(format!(
            "target BER {target_ber} outside (0, 0.5)"
        )));
    }
    if log_median_gap <= 0.0 {
        return Err(RramError::InvalidParameter(format!(
            "log-median gap {log_median_gap} must be positive"
        )));
    }
    let ber_of_sigma = |sigma: f64| {
        // optimal reference for equal sigmas is the mid point of the medians
        math::normal_sf(log_median_gap / (2.0 * sigma))
    };
    let (lo, hi) = (1e-9, 1e7);
    if ber_of_sigma(lo) > target_ber || ber_of_sigma(hi) < target_ber {
        return Err(RramError::RootNotBracketed {
            what: format!("sigma for 1T1R BER {target_ber}"),
            lo,
            hi,
        });
    }
    let sigma = math::brent_root(|s| ber_of_sigma(s) - target_ber, lo, hi, 1e-13, 300).ok_or(
        RramError::RootNotBracketed {
            what: format!("sigma for 1T1R BER {target_ber}"),
            lo,
            hi,
        },
    )?;
    Ok(sigma)
}
