//! Experiment runner: dataset ingestion, experiment specs and artifact
//! serialization for the differential-RRAM binarized network simulator.

pub mod artifact;
pub mod mnist;
pub mod run;
pub mod spec;
