//! XNOR-popcount layers with integer thresholds: the golden model that every
//! other execution path (tile simulation, device-backed inference) is held
//! bit-exact against.
//!
//! A hidden neuron fires (+1) iff its agreement count pc reaches the
//! threshold: pc >= T, with sign(0) := +1 realized by the >= compare. The
//! last layer emits raw integer scores pc - T instead of signs; class is the
//! argmax with ties broken toward the lowest index.

use std::io::Write;

use crate::bits::{xnor_popcount_words, BinaryMatrix, BinaryVector};
use crate::error::{BnnError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BnnLinearLayer {
    weights: BinaryMatrix,
    thresholds: Vec<u32>,
}

impl BnnLinearLayer {
    pub fn new(weights: BinaryMatrix, thresholds: Vec<u32>) -> Result<Self> {
        if thresholds.len() != weights.rows() {
            return Err(BnnError::LengthMismatch {
                expected: weights.rows(),
                got: thresholds.len(),
            });
        }
        if let Some(&t) = thresholds.iter().find(|&&t| t as usize > weights.cols()) {
            return Err(BnnError::InvalidParameter(format!(
                "threshold {t} exceeds fan-in {}",
                weights.cols()
            )));
        }
        Ok(BnnLinearLayer {
            weights,
            thresholds,
        })
    }

    pub fn out_features(&self) -> usize {
        self.weights.rows()
    }

    pub fn in_features(&self) -> usize {
        self.weights.cols()
    }

    pub fn weights(&self) -> &BinaryMatrix {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut BinaryMatrix {
        &mut self.weights
    }

    pub fn thresholds(&self) -> &[u32] {
        &self.thresholds
    }

    fn check_input(&self, x: &BinaryVector) -> Result<()> {
        if x.len() != self.in_features() {
            return Err(BnnError::LengthMismatch {
                expected: self.in_features(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Agreement count of one output row against the input.
    pub fn popcount_row(&self, row: usize, x: &BinaryVector) -> Result<u32> {
        self.check_input(x)?;
        Ok(xnor_popcount_words(
            self.weights.row_words(row),
            x.words(),
            x.len(),
        ))
    }

    /// Hidden-layer semantics: output bit j is [pc_j >= T_j].
    pub fn forward(&self, x: &BinaryVector) -> Result<BinaryVector> {
        self.check_input(x)?;
        let mut out = BinaryVector::zeros(self.out_features());
        for j in 0..self.out_features() {
            let pc = xnor_popcount_words(self.weights.row_words(j), x.words(), x.len());
            if pc >= self.thresholds[j] {
                out.set(j, true);
            }
        }
        Ok(out)
    }

    /// Final-layer semantics: integer scores pc_j - T_j, no sign.
    pub fn scores(&self, x: &BinaryVector) -> Result<Vec<i32>> {
        self.check_input(x)?;
        Ok((0..self.out_features())
            .map(|j| {
                let pc = xnor_popcount_words(self.weights.row_words(j), x.words(), x.len());
                pc as i32 - self.thresholds[j] as i32
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnnModel {
    layers: Vec<BnnLinearLayer>,
    /// Inputs in [0,1] binarize to +1 iff pixel > threshold.
    pub input_threshold: f32,
}

impl BnnModel {
    pub fn new(layers: Vec<BnnLinearLayer>, input_threshold: f32) -> Result<Self> {
        for i in 1..layers.len() {
            if layers[i].in_features() != layers[i - 1].out_features() {
                return Err(BnnError::DimensionMismatch {
                    layer: i,
                    expected_in: layers[i - 1].out_features(),
                    got: layers[i].in_features(),
                });
            }
        }
        if layers.is_empty() {
            return Err(BnnError::InvalidParameter("model needs layers".into()));
        }
        Ok(BnnModel {
            layers,
            input_threshold,
        })
    }

    pub fn layers(&self) -> &[BnnLinearLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [BnnLinearLayer] {
        &mut self.layers
    }

    pub fn in_features(&self) -> usize {
        self.layers[0].in_features()
    }

    pub fn classes(&self) -> usize {
        self.layers.last().expect("non-empty").out_features()
    }

    pub fn weight_bits(&self) -> u64 {
        self.layers
            .iter()
            .map(|l| (l.in_features() * l.out_features()) as u64)
            .sum()
    }

    pub fn binarize_input(&self, x_raw: &[f32]) -> Result<BinaryVector> {
        if x_raw.len() != self.in_features() {
            return Err(BnnError::LengthMismatch {
                expected: self.in_features(),
                got: x_raw.len(),
            });
        }
        Ok(BinaryVector::from_bools(
            &x_raw
                .iter()
                .map(|&p| p > self.input_threshold)
                .collect::<Vec<_>>(),
        ))
    }

    /// Forward from binarized input to hidden activations and final scores.
    pub fn forward_binary(&self, x: &BinaryVector) -> Result<(usize, Vec<i32>)> {
        let mut act = x.clone();
        for layer in &self.layers[..self.layers.len() - 1] {
            act = layer.forward(&act)?;
        }
        let scores = self.layers.last().expect("non-empty").scores(&act)?;
        Ok((argmax(&scores), scores))
    }

    /// Full pipeline: binarize a raw input, chain all layers, argmax.
    pub fn forward(&self, x_raw: &[f32]) -> Result<(usize, Vec<i32>)> {
        let x = self.binarize_input(x_raw)?;
        self.forward_binary(&x)
    }
}

/// Index of the maximum score; ties break toward the lowest index.
pub fn argmax(scores: &[i32]) -> usize {
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Result of folding batch-norm parameters into an integer threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FoldedThreshold {
    pub threshold: u32,
    /// When set, the affine slope was negative: the caller must complement
    /// the weight row so the runtime compare stays pc >= T.
    pub flip: bool,
}

/// Convert learned normalization (gamma, beta, mu, sigma) over the sum
/// domain s = 2 pc - n into a popcount-domain integer threshold.
///
/// gamma(s - mu)/sigma + beta >= 0 reduces to s >= s* (or s <= s* when gamma
/// is negative) with s* = mu - beta sigma / gamma; the popcount compare is
/// exact for every achievable integer s.
pub fn fold_batchnorm(
    gamma: f64,
    beta: f64,
    mu: f64,
    sigma: f64,
    n: usize,
) -> Result<FoldedThreshold> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(BnnError::InvalidParameter(format!(
            "batch-norm sigma must be positive, got {sigma}"
        )));
    }
    // gamma == 0 degenerates to sign(beta); fold as the gamma > 0 limit
    let s_star = if gamma == 0.0 {
        if beta >= 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        mu - beta * sigma / gamma
    };
    let nf = n as f64;
    if gamma >= 0.0 {
        // fire iff s >= s*  <=>  pc >= ceil((s* + n)/2)
        let t = ((s_star + nf) / 2.0).ceil().clamp(0.0, nf);
        Ok(FoldedThreshold {
            threshold: t as u32,
            flip: false,
        })
    } else {
        // fire iff s <= s*  <=>  pc <= floor((s* + n)/2); complementing the
        // row maps pc to n - pc, so the compare becomes pc' >= n - floor(..)
        let t = (nf - ((s_star + nf) / 2.0).floor()).clamp(0.0, nf);
        Ok(FoldedThreshold {
            threshold: t as u32,
            flip: true,
        })
    }
}

const MODEL_MAGIC: &[u8; 4] = b"BNN1";

/// Serialize in the fixed little-endian container format.
pub fn write_model(model: &BnnModel, mut w: impl Write) -> Result<()> {
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&1u32.to_le_bytes())?;
    w.write_all(&(model.layers.len() as u32).to_le_bytes())?;
    w.write_all(&model.input_threshold.to_le_bytes())?;
    for layer in &model.layers {
        w.write_all(&(layer.out_features() as u32).to_le_bytes())?;
        w.write_all(&(layer.in_features() as u32).to_le_bytes())?;
    }
    for layer in &model.layers {
        for &t in layer.thresholds() {
            w.write_all(&t.to_le_bytes())?;
        }
        for &word in layer.weights().words() {
            w.write_all(&word.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn model_to_bytes(model: &BnnModel) -> Vec<u8> {
    let mut buf = Vec::new();
    write_model(model, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

struct Cursor<'a> {
    data: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.offset + n > self.data.len() {
            return Err(BnnError::ModelFormat {
                offset: self.offset,
                message: format!("truncated while reading {what}"),
            });
        }
        let s = &self.data[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

/// Parse and validate a model file: magic, version, dimension chain,
/// threshold bounds and zero padding bits are all checked.
pub fn read_model(data: &[u8]) -> Result<BnnModel> {
    let mut c = Cursor { data, offset: 0 };
    if c.take(4, "magic")? != MODEL_MAGIC {
        return Err(BnnError::ModelFormat {
            offset: 0,
            message: "bad magic (expected BNN1)".into(),
        });
    }
    let version = c.u32("version")?;
    if version != 1 {
        return Err(BnnError::ModelFormat {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let n_layers = c.u32("layer count")? as usize;
    if n_layers == 0 || n_layers > 1024 {
        return Err(BnnError::ModelFormat {
            offset: 8,
            message: format!("implausible layer count {n_layers}"),
        });
    }
    let input_threshold = c.f32("input threshold")?;
    let mut dims = Vec::with_capacity(n_layers);
    for i in 0..n_layers {
        let out = c.u32("out features")? as usize;
        let inp = c.u32("in features")? as usize;
        if out == 0 || inp == 0 {
            return Err(BnnError::ModelFormat {
                offset: c.offset,
                message: format!("layer {i} has zero dimension"),
            });
        }
        dims.push((out, inp));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for (i, &(out, inp)) in dims.iter().enumerate() {
        let mut thresholds = Vec::with_capacity(out);
        for _ in 0..out {
            let t = c.u32("threshold")?;
            if t as usize > inp {
                return Err(BnnError::ModelFormat {
                    offset: c.offset - 4,
                    message: format!("layer {i} threshold {t} exceeds fan-in {inp}"),
                });
            }
            thresholds.push(t);
        }
        let mut weights = BinaryMatrix::zeros(out, inp);
        let words_per_row = weights.words_per_row();
        for r in 0..out {
            for w in 0..words_per_row {
                weights.row_words_mut(r)[w] = c.u64("weight word")?;
            }
        }
        if !weights.padding_is_zero() {
            return Err(BnnError::ModelFormat {
                offset: c.offset,
                message: format!("layer {i} has nonzero padding bits"),
            });
        }
        layers.push(BnnLinearLayer::new(weights, thresholds)?);
    }
    if c.offset != data.len() {
        return Err(BnnError::ModelFormat {
            offset: c.offset,
            message: format!("{} trailing bytes", data.len() - c.offset),
        });
    }
    BnnModel::new(layers, input_threshold)
}
