//! Plain-text tabular config for the condition table and sense model.
//!
//! One `condition` line per programming condition plus one `sense` line;
//! `#` starts a comment. Floats are written in shortest round-trip form, so
//! serialize/parse is lossless. The crate ships a default file generated
//! from [`crate::calibrate::default_table`].

use crate::error::{Result, RramError};
use crate::sense::SenseModel;
use crate::stats::{
    AgingModel, ConditionEntry, ConditionTable, ProgrammingCondition, ResistanceDistribution, State,
};

/// The calibrated default config shipped with the crate.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default_conditions.txt");

/// Parse the shipped default config.
pub fn default_config() -> (ConditionTable, SenseModel) {
    parse_config(DEFAULT_CONFIG).expect("shipped default config is valid")
}

pub fn serialize_config(table: &ConditionTable, sense: &SenseModel) -> String {
    let mut out = String::new();
    out.push_str("# calibrated programming conditions and sense model\n");
    out.push_str("# condition <name> <current_ua> <voltage_v> <width_us> <lrs_log_median> <hrs_log_median> \\\n");
    out.push_str("#   <lrs_sigma> <hrs_sigma> <lrs_drift/dec> <hrs_drift/dec> <lrs_growth/dec> <hrs_growth/dec> \\\n");
    out.push_str("#   <onset_cycles> <set_pj> <reset_pj> <cyclability> <measured|placeholder>\n");
    out.push_str(&format!(
        "sense {:?} {:?}\n",
        sense.deterministic_ratio, sense.halfwidth
    ));
    for e in table.entries() {
        out.push_str(&format!(
            "condition {} {:?} {:?} {:?} {:?} {:?} {:?} {:?} {:?} {:?} {:?} {:?} {} {:?} {:?} {} {}\n",
            e.name,
            e.condition.set_compliance_ua,
            e.condition.reset_voltage_v,
            e.condition.pulse_width_us,
            e.lrs.log_median,
            e.hrs.log_median,
            e.lrs.log_sigma,
            e.hrs.log_sigma,
            e.aging.lrs_median_drift_per_decade,
            e.aging.hrs_median_drift_per_decade,
            e.aging.lrs_sigma_growth_per_decade,
            e.aging.hrs_sigma_growth_per_decade,
            e.aging.onset_cycles,
            e.set_energy_pj,
            e.reset_energy_pj,
            e.cyclability_cycles,
            if e.ber_is_placeholder {
                "placeholder"
            } else {
                "measured"
            },
        ));
    }
    out
}

pub fn parse_config(text: &str) -> Result<(ConditionTable, SenseModel)> {
    let mut sense = None;
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let err = |message: String| RramError::ConfigParse {
            line: idx + 1,
            message,
        };
        match fields[0] {
            "sense" => {
                if fields.len() != 3 {
                    return Err(err(format!(
                        "sense needs 2 fields, got {}",
                        fields.len() - 1
                    )));
                }
                let ratio = parse_f64(fields[1], idx)?;
                let halfwidth = parse_f64(fields[2], idx)?;
                sense = Some(SenseModel::new(ratio, halfwidth)?);
            }
            "condition" => {
                if fields.len() != 18 {
                    return Err(err(format!(
                        "condition needs 17 fields, got {}",
                        fields.len() - 1
                    )));
                }
                let name = fields[1].to_string();
                let f: Vec<f64> = fields[2..13]
                    .iter()
                    .map(|s| parse_f64(s, idx))
                    .collect::<Result<_>>()?;
                let onset: u64 = fields[13]
                    .parse()
                    .map_err(|_| err(format!("bad onset {}", fields[13])))?;
                let set_pj = parse_f64(fields[14], idx)?;
                let reset_pj = parse_f64(fields[15], idx)?;
                let cyclability: u64 = fields[16]
                    .parse()
                    .map_err(|_| err(format!("bad cyclability {}", fields[16])))?;
                let placeholder = match fields[17] {
                    "placeholder" => true,
                    "measured" => false,
                    other => return Err(err(format!("bad flag {other}"))),
                };
                entries.push(ConditionEntry {
                    name,
                    condition: ProgrammingCondition::new(f[0], f[1], f[2])?,
                    lrs: ResistanceDistribution::new(State::Lrs, f[3], f[5])?,
                    hrs: ResistanceDistribution::new(State::Hrs, f[4], f[6])?,
                    aging: AgingModel::new(f[7], f[8], f[9], f[10], onset)?,
                    set_energy_pj: set_pj,
                    reset_energy_pj: reset_pj,
                    cyclability_cycles: cyclability,
                    ber_is_placeholder: placeholder,
                });
            }
            other => {
                return Err(err(format!("unknown directive {other}")));
            }
        }
    }
    let sense = sense.ok_or(RramError::ConfigParse {
        line: 0,
        message: "missing sense line".into(),
    })?;
    Ok((ConditionTable::new(entries)?, sense))
}

fn parse_f64(s: &str, line_idx: usize) -> Result<f64> {
    s.parse().map_err(|_| RramError::ConfigParse {
        line: line_idx + 1,
        message: format!("bad number {s}"),
    })
}
