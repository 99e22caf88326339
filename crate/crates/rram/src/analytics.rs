//! Closed-form bit-error-rate mathematics for single-device and differential
//! readout, plus the tradeoff table comparing both against ECC baselines.
//!
//! All BER quantities live in log-resistance space, so they depend only on
//! the log-median gap and the sigmas; rescaling every resistance by a common
//! factor leaves them unchanged.

use crate::ecc::{ecc_output_ber, EccCode};
use crate::error::Result;
use crate::math;
use crate::sense::{sense_error_prob, SenseModel};
use crate::stats::{ConditionTable, ResistanceDistribution};

/// Single-device read-error probability against a fixed reference, for
/// equiprobable states: 0.5 P(R_LRS > ref) + 0.5 P(R_HRS < ref).
pub fn analytic_ber_1t1r(
    lrs: &ResistanceDistribution,
    hrs: &ResistanceDistribution,
    r_ref_ohms: f64,
) -> f64 {
    debug_assert!(r_ref_ohms > 0.0);
    let x = r_ref_ohms.ln();
    let p_lrs_high = tail_above(lrs, x);
    let p_hrs_low = tail_below(hrs, x);
    0.5 * p_lrs_high + 0.5 * p_hrs_low
}

fn tail_above(d: &ResistanceDistribution, x: f64) -> f64 {
    if d.log_sigma == 0.0 {
        return if d.log_median > x { 1.0 } else { 0.0 };
    }
    math::normal_sf((x - d.log_median) / d.log_sigma)
}

fn tail_below(d: &ResistanceDistribution, x: f64) -> f64 {
    if d.log_sigma == 0.0 {
        return if d.log_median < x { 1.0 } else { 0.0 };
    }
    math::normal_cdf((x - d.log_median) / d.log_sigma)
}

/// Reference resistance minimizing the single-device BER, found by 1-D
/// minimization in log space. Unique for log-normal pairs with distinct
/// medians; equal sigmas give exactly the geometric mean of the medians.
pub fn optimal_reference(lrs: &ResistanceDistribution, hrs: &ResistanceDistribution) -> f64 {
    debug_assert!(hrs.log_median > lrs.log_median);
    if lrs.log_sigma == 0.0 && hrs.log_sigma == 0.0 {
        return (0.5 * (lrs.log_median + hrs.log_median)).exp();
    }
    let x = math::golden_min(
        |x| analytic_ber_1t1r(lrs, hrs, x.exp()),
        lrs.log_median,
        hrs.log_median,
        1e-12,
    );
    x.exp()
}

/// Single-device BER at the optimal reference.
pub fn ber_1t1r_optimal(lrs: &ResistanceDistribution, hrs: &ResistanceDistribution) -> f64 {
    analytic_ber_1t1r(lrs, hrs, optimal_reference(lrs, hrs))
}

/// Differential BER with an ideal comparator: probability that an HRS draw
/// is not above an independent LRS draw.
pub fn analytic_ber_2t2r_ideal(lrs: &ResistanceDistribution, hrs: &ResistanceDistribution) -> f64 {
    let gap = hrs.log_median - lrs.log_median;
    let s2 = lrs.log_sigma * lrs.log_sigma + hrs.log_sigma * hrs.log_sigma;
    if s2 == 0.0 {
        return if gap > 0.0 {
            0.0
        } else if gap < 0.0 {
            1.0
        } else {
            0.5
        };
    }
    math::normal_sf(gap / s2.sqrt())
}

/// Differential BER through the behavioral sense amplifier, by quadrature
/// over the log-ratio D = ln R_HRS - ln R_LRS:
///
///   P(err) = P(D < 0) + integral over 0 <= t < ln(det_ratio) of
///            p(t) * (f_D(t) - f_D(-t)) dt
///
/// since a flip hurts when the nominal compare was right (D > 0) and rescues
/// when it was wrong (D < 0).
pub fn ber_2t2r_sensed(
    lrs: &ResistanceDistribution,
    hrs: &ResistanceDistribution,
    sense: &SenseModel,
) -> f64 {
    let m = hrs.log_median - lrs.log_median;
    let s2 = lrs.log_sigma * lrs.log_sigma + hrs.log_sigma * hrs.log_sigma;
    if s2 == 0.0 {
        // noise-free devices: the pair sits at exactly ratio exp(|m|)
        let ideal = if m > 0.0 {
            0.0
        } else if m < 0.0 {
            1.0
        } else {
            0.5
        };
        let ratio = m.abs().exp();
        let p = sense_error_prob(ratio.max(1.0), sense).expect("ratio >= 1");
        return if m >= 0.0 { p.max(ideal) } else { 1.0 - p };
    }
    let s = s2.sqrt();
    let ideal = math::normal_cdf(-m / s);
    let density = |t: f64| math::normal_pdf((t - m) / s) / s;
    let top = sense.deterministic_ratio.ln();
    let correction = math::integrate(
        |t| {
            let p = sense_error_prob(t.exp(), sense).expect("ratio >= 1");
            p * (density(t) - density(-t))
        },
        0.0,
        top,
        8,
        24,
    );
    (ideal + correction).clamp(0.0, 1.0)
}

/// One row of the reliability tradeoff table.
#[derive(Clone, Debug)]
pub struct TradeoffRow {
    pub name: String,
    pub ber_1t1r: f64,
    pub ber_2t2r_ideal: f64,
    pub ber_2t2r_sensed: f64,
    pub ecc: Vec<f64>,
    pub ber_is_placeholder: bool,
}

/// Tradeoff table: per condition, single-device BER vs differential BER
/// (ideal and sensed) vs post-decode BER of each code fed with the
/// single-device BER.
#[derive(Clone, Debug)]
pub struct TradeoffTable {
    pub code_names: Vec<String>,
    pub rows: Vec<TradeoffRow>,
}

pub fn tradeoff_curve(
    table: &ConditionTable,
    sense: &SenseModel,
    codes: &[EccCode],
) -> Result<TradeoffTable> {
    let mut rows = Vec::new();
    for entry in table.entries() {
        let p1 = ber_1t1r_optimal(&entry.lrs, &entry.hrs);
        let ecc: Result<Vec<f64>> = codes.iter().map(|c| ecc_output_ber(c, p1)).collect();
        rows.push(TradeoffRow {
            name: entry.name.clone(),
            ber_1t1r: p1,
            ber_2t2r_ideal: analytic_ber_2t2r_ideal(&entry.lrs, &entry.hrs),
            ber_2t2r_sensed: ber_2t2r_sensed(&entry.lrs, &entry.hrs, sense),
            ecc: ecc?,
            ber_is_placeholder: entry.ber_is_placeholder,
        });
    }
    rows.sort_by(|a, b| a.ber_1t1r.total_cmp(&b.ber_1t1r));
    Ok(TradeoffTable {
        code_names: codes.iter().map(|c| c.name()).collect(),
        rows,
    })
}

impl TradeoffTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,ber_1t1r,ber_2t2r_ideal,ber_2t2r_sensed");
        for name in &self.code_names {
            out.push(',');
            out.push_str(name);
        }
        out.push_str(",ber_is_placeholder\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:e},{:e},{:e}",
                row.name, row.ber_1t1r, row.ber_2t2r_ideal, row.ber_2t2r_sensed
            ));
            for v in &row.ecc {
                out.push_str(&format!(",{v:e}"));
            }
            out.push_str(&format!(",{}\n", row.ber_is_placeholder));
        }
        out
    }
}
