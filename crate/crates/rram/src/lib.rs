//! Device-to-array model of differential (2T2R) resistive-memory bit cells:
//! log-normal state populations per programming condition, endurance drift,
//! a behavioral precharge sense amplifier with in-sense XNOR, closed-form and
//! Monte Carlo bit-error analytics, and Hamming/extended-Hamming baselines.

pub mod analytics;
pub mod array;
pub mod calibrate;
pub mod config;
pub mod ecc;
pub mod error;
pub mod math;
pub mod rng;
pub mod sense;
pub mod stats;

pub use error::{Result, RramError};
pub use rng::{Stream, StreamKey};
pub use sense::SenseModel;
pub use stats::{
    AgingModel, ConditionEntry, ConditionTable, ProgrammingCondition, ResistanceDistribution, State,
};
