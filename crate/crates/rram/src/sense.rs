//! Behavioral model of the precharge sense amplifier (PCSA): differential
//! readout, the XNOR-augmented variant and single-device readout against a
//! reference.
//!
//! The PCSA is treated as a comparator with a ratio-dependent error
//! probability: a read is always correct once the two branch resistances
//! differ by the deterministic ratio, and degenerates to a coin flip when
//! they are equal. Timing is not modeled.

use crate::error::{Result, RramError};
use crate::rng::Stream;

/// Error-probability curve of the sense amplifier in log-ratio space:
/// p(r) = 0.5 * (1 - ln r / ln deterministic_ratio)^halfwidth for r below
/// the deterministic ratio, 0 above. `halfwidth` = 1 is the plain linear
/// interpolant; the shipped config calibrates it against measured array BER.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SenseModel {
    pub deterministic_ratio: f64,
    pub halfwidth: f64,
}

impl SenseModel {
    pub fn new(deterministic_ratio: f64, halfwidth: f64) -> Result<Self> {
        if deterministic_ratio <= 1.0 || !deterministic_ratio.is_finite() {
            return Err(RramError::InvalidParameter(format!(
                "deterministic ratio {deterministic_ratio} must exceed 1"
            )));
        }
        if halfwidth <= 0.0 || !halfwidth.is_finite() {
            return Err(RramError::InvalidParameter(format!(
                "halfwidth {halfwidth} must be positive"
            )));
        }
        Ok(SenseModel {
            deterministic_ratio,
            halfwidth,
        })
    }

    /// A sense amplifier that only errs on exactly equal resistances.
    pub fn ideal() -> Self {
        SenseModel {
            deterministic_ratio: 1.0 + 1e-12,
            halfwidth: 1.0,
        }
    }
}

/// Probability that a compare of two branches at the given resistance ratio
/// resolves the wrong way. p(1) = 0.5, p is non-increasing, p = 0 at and
/// beyond the deterministic ratio.
pub fn sense_error_prob(ratio: f64, model: &SenseModel) -> Result<f64> {
    if ratio < 1.0 || ratio.is_nan() {
        return Err(RramError::RatioBelowOne(ratio));
    }
    if ratio >= model.deterministic_ratio {
        return Ok(0.0);
    }
    let t = 1.0 - ratio.ln() / model.deterministic_ratio.ln();
    Ok(0.5 * t.powf(model.halfwidth))
}

fn flip(nominal: bool, ratio: f64, model: &SenseModel, stream: &mut Stream) -> bool {
    let p = sense_error_prob(ratio, model).expect("ratio >= 1 by construction");
    if p > 0.0 && stream.bernoulli(p) {
        !nominal
    } else {
        nominal
    }
}

/// Differential read of a complementary pair. HRS on BL with LRS on BLb
/// encodes logic one, so the nominal output is `r_bl > r_blb`; the result is
/// flipped with the ratio-dependent error probability.
pub fn pcsa_read(r_bl: f64, r_blb: f64, model: &SenseModel, stream: &mut Stream) -> bool {
    debug_assert!(r_bl > 0.0 && r_blb > 0.0);
    let nominal = r_bl > r_blb;
    let ratio = if r_bl > r_blb {
        r_bl / r_blb
    } else {
        r_blb / r_bl
    };
    flip(nominal, ratio, model, stream)
}

/// Read with the XNOR-enriched PCSA: returns XNOR(stored, x) where `stored`
/// is the (possibly erroneous) differential read outcome.
pub fn pcsa_xnor_read(
    r_bl: f64,
    r_blb: f64,
    x: bool,
    model: &SenseModel,
    stream: &mut Stream,
) -> bool {
    let stored = pcsa_read(r_bl, r_blb, model, stream);
    stored == x
}

/// Single-device read against a reference resistance: nominal one iff the
/// device is more resistive than the reference, flipped with the same
/// ratio-dependent error model.
pub fn read_1t1r(r: f64, r_ref: f64, model: &SenseModel, stream: &mut Stream) -> bool {
    debug_assert!(r > 0.0 && r_ref > 0.0);
    let nominal = r > r_ref;
    let ratio = if r > r_ref { r / r_ref } else { r_ref / r };
    flip(nominal, ratio, model, stream)
}
