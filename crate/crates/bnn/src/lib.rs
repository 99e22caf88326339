//! Bit-packed binarized neural networks: XNOR-popcount inference with
//! integer thresholds, straight-through-estimator training with batch-norm
//! folding, weight-error injection, and inference backed by differential
//! memory arrays.

pub mod bits;
pub mod data;
pub mod error;
pub mod fault;
pub mod model;
pub mod train;

pub use bits::{BinaryMatrix, BinaryVector};
pub use data::Dataset;
pub use error::{BnnError, Result};
pub use model::{argmax, fold_batchnorm, read_model, write_model, BnnLinearLayer, BnnModel};
pub use train::{evaluate, train, TrainConfig, TrainLog};
