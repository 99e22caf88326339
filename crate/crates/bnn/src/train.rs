//! Training of binarized networks: binary weights and activations in both
//! passes, hardtanh straight-through estimator for the sign derivative, Adam
//! on the clipped real-valued shadow weights, batch normalization on hidden
//! layers folded into integer thresholds at export.
//!
//! The forward pass runs on packed bits (XNOR + popcount, exact integers);
//! only the backward pass works in f32. All reductions run in a fixed order,
//! so training is bit-reproducible for a given seed.

use rayon::prelude::*;

use rram::rng::{Stream, StreamKey};

use crate::bits::{xnor_popcount_words, BinaryMatrix, BinaryVector};
use crate::data::Dataset;
use crate::error::{BnnError, Result};
use crate::model::{fold_batchnorm, BnnLinearLayer, BnnModel};

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub learning_rate: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub epsilon: f32,
    pub epochs: usize,
    pub batch_size: usize,
    /// Real-weight clip bound; the interval is fixed, not learned.
    pub weight_clip: f32,
    /// Square-hinge margin on fan-in-normalized scores.
    pub hinge_margin: f32,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.003,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 30,
            batch_size: 100,
            weight_clip: 1.0,
            hinge_margin: 0.5,
            seed: 1,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.epsilon > 0.0
            && self.epochs > 0
            && self.batch_size > 0
            && self.hinge_margin > 0.0;
        if !ok {
            return Err(BnnError::InvalidParameter(
                "training hyperparameters must be positive (betas in (0,1))".into(),
            ));
        }
        if self.weight_clip != 1.0 {
            return Err(BnnError::InvalidParameter(
                "the weight clip interval is fixed at [-1, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Input binarization threshold on [0,1]-normalized features.
pub const INPUT_THRESHOLD: f32 = 0.5;

/// Hardtanh derivative used in place of the sign derivative.
pub fn ste_grad(pre_activation: f64) -> f64 {
    if pre_activation.abs() <= 1.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Clone, Debug)]
struct Adam {
    m: Vec<f32>,
    v: Vec<f32>,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn step(
        &mut self,
        params: &mut [f32],
        grads: &[f32],
        lr: f32,
        cfg: &TrainConfig,
        t: i32,
        clip: Option<f32>,
    ) {
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let update = lr * (*m / bc1) / ((*v / bc2).sqrt() + cfg.epsilon);
            *p -= update;
            if let Some(c) = clip {
                *p = p.clamp(-c, c);
            }
        }
    }
}

/// One layer of the training graph: real-valued shadow weights plus the
/// batch-norm state of its neurons (the final layer carries no batch norm;
/// its integer scores feed the loss directly).
#[derive(Clone, Debug)]
pub struct ShadowLayer {
    pub out_features: usize,
    pub in_features: usize,
    pub weights: Vec<f32>,
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub running_mean: Vec<f32>,
    pub running_var: Vec<f32>,
    pub has_batchnorm: bool,
}

impl ShadowLayer {
    fn init(out_features: usize, in_features: usize, has_batchnorm: bool, s: &mut Stream) -> Self {
        // Glorot-uniform shadow weights, comfortably inside the clip interval
        let limit = (6.0 / (in_features + out_features) as f64).sqrt().min(0.9) as f32;
        let weights = (0..out_features * in_features)
            .map(|_| (s.uniform() as f32 * 2.0 - 1.0) * limit)
            .collect();
        ShadowLayer {
            out_features,
            in_features,
            weights,
            gamma: vec![1.0; out_features],
            beta: vec![0.0; out_features],
            running_mean: vec![0.0; out_features],
            running_var: vec![1.0; out_features],
            has_batchnorm,
        }
    }

    /// Binary weights: elementwise sign of the shadow reals, sign(0) := +1.
    pub fn binarize_weights(&self) -> BinaryMatrix {
        let mut m = BinaryMatrix::zeros(self.out_features, self.in_features);
        for r in 0..self.out_features {
            let row = &self.weights[r * self.in_features..(r + 1) * self.in_features];
            for (c, &w) in row.iter().enumerate() {
                if w >= 0.0 {
                    m.set(r, c, true);
                }
            }
        }
        m
    }
}

const BN_EPS: f32 = 1e-5;
const BN_MOMENTUM: f32 = 0.9;

#[derive(Clone, Copy, Debug)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_accuracy\n");
        for row in &self.epochs {
            out.push_str(&format!(
                "{},{},{}\n",
                row.epoch, row.train_loss, row.val_accuracy
            ));
        }
        out
    }
}

/// Train and export: the real weights serve no purpose after folding and are
/// dropped with the shadow state.
pub fn train(
    train_set: &Dataset,
    val_set: &Dataset,
    topology: &[usize],
    config: &TrainConfig,
) -> Result<(BnnModel, TrainLog)> {
    let (shadows, log) = train_shadow(train_set, val_set, topology, config)?;
    Ok((export(&shadows, INPUT_THRESHOLD)?, log))
}

/// Train and return the full training-graph state (shadow weights and batch
/// norm), for callers that need to inspect it before export.
pub fn train_shadow(
    train_set: &Dataset,
    val_set: &Dataset,
    topology: &[usize],
    config: &TrainConfig,
) -> Result<(Vec<ShadowLayer>, TrainLog)> {
    config.validate()?;
    if topology.len() < 2 {
        return Err(BnnError::InvalidParameter(
            "topology needs at least input and output widths".into(),
        ));
    }
    if topology[0] != train_set.dim() || topology[0] != val_set.dim() {
        return Err(BnnError::LengthMismatch {
            expected: topology[0],
            got: train_set.dim(),
        });
    }
    let classes = *topology.last().expect("non-empty");
    if classes != train_set.classes() || classes != val_set.classes() {
        return Err(BnnError::InvalidParameter(format!(
            "topology emits {classes} classes, dataset has {}",
            train_set.classes()
        )));
    }

    let key = StreamKey::new(config.seed);
    let n_layers = topology.len() - 1;
    let mut layers: Vec<ShadowLayer> = (0..n_layers)
        .map(|l| {
            ShadowLayer::init(
                topology[l + 1],
                topology[l],
                l + 1 < n_layers,
                &mut key.stream("init", &[l as u64]),
            )
        })
        .collect();
    let mut adam_w: Vec<Adam> = layers.iter().map(|l| Adam::new(l.weights.len())).collect();
    let mut adam_gamma: Vec<Adam> = layers.iter().map(|l| Adam::new(l.out_features)).collect();
    let mut adam_beta: Vec<Adam> = layers.iter().map(|l| Adam::new(l.out_features)).collect();

    // binarize the whole training set once
    let train_bits: Vec<BinaryVector> = (0..train_set.len())
        .map(|i| binarize(train_set.feature(i), INPUT_THRESHOLD))
        .collect();

    let mut log = TrainLog::default();
    let mut step_t: i32 = 0;
    let decay_epoch = (config.epochs * 4).div_ceil(5);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 0..config.epochs {
        let lr = if epoch >= decay_epoch {
            config.learning_rate * 0.1
        } else {
            config.learning_rate
        };
        shuffle(&mut order, &mut key.stream("shuffle", &[epoch as u64]));

        let mut epoch_loss = 0.0f64;
        let mut seen = 0usize;
        for batch in order.chunks(config.batch_size) {
            step_t += 1;
            let (loss, grads) = train_batch(&mut layers, train_set, &train_bits, batch, config);
            epoch_loss += loss * batch.len() as f64;
            seen += batch.len();
            for (l, layer) in layers.iter_mut().enumerate() {
                adam_w[l].step(
                    &mut layer.weights,
                    &grads[l].w,
                    lr,
                    config,
                    step_t,
                    Some(config.weight_clip),
                );
                if layer.has_batchnorm {
                    adam_gamma[l].step(&mut layer.gamma, &grads[l].gamma, lr, config, step_t, None);
                    adam_beta[l].step(&mut layer.beta, &grads[l].beta, lr, config, step_t, None);
                }
                debug_assert!(layer.weights.iter().all(|w| w.abs() <= config.weight_clip));
            }
        }

        let model = export(&layers, INPUT_THRESHOLD)?;
        let val_accuracy = evaluate(&model, val_set)?;
        log.epochs.push(EpochLog {
            epoch,
            train_loss: epoch_loss / seen as f64,
            val_accuracy,
        });
        if epoch == 0 && val_accuracy < 1.0 / classes as f64 {
            return Err(BnnError::Diverged {
                epoch,
                accuracy: val_accuracy,
            });
        }
    }

    Ok((layers, log))
}

fn binarize(x: &[f32], threshold: f32) -> BinaryVector {
    BinaryVector::from_bools(&x.iter().map(|&p| p > threshold).collect::<Vec<_>>())
}

fn shuffle(order: &mut [usize], s: &mut Stream) {
    for i in (1..order.len()).rev() {
        let j = s.range(i as u64 + 1) as usize;
        order.swap(i, j);
    }
}

struct LayerGrads {
    w: Vec<f32>,
    gamma: Vec<f32>,
    beta: Vec<f32>,
}

struct BatchCache {
    input_signs: Vec<f32>,
    z: Vec<f32>,
    x_hat: Vec<f32>,
    y: Vec<f32>,
    batch_mean: Vec<f32>,
    batch_var: Vec<f32>,
}

/// Forward and backward over one minibatch; returns the mean loss and the
/// gradients w.r.t. shadow weights and batch-norm parameters.
fn train_batch(
    layers: &mut [ShadowLayer],
    data: &Dataset,
    data_bits: &[BinaryVector],
    batch: &[usize],
    config: &TrainConfig,
) -> (f64, Vec<LayerGrads>) {
    let b = batch.len();
    let n_layers = layers.len();
    let binary_weights: Vec<BinaryMatrix> = layers.iter().map(|l| l.binarize_weights()).collect();

    // ---- forward ----
    let mut caches: Vec<BatchCache> = Vec::with_capacity(n_layers);
    let mut act_bits: Vec<BinaryVector> = batch.iter().map(|&i| data_bits[i].clone()).collect();
    for (l, layer) in layers.iter().enumerate() {
        let (n_in, n_out) = (layer.in_features, layer.out_features);
        let input_signs = unpack_signs(&act_bits, n_in);

        // z = 2 pc - n, computed exactly on packed bits
        let wb = &binary_weights[l];
        let mut z = vec![0.0f32; b * n_out];
        z.par_chunks_mut(n_out)
            .zip(act_bits.par_iter())
            .for_each(|(z_row, x)| {
                for (j, zj) in z_row.iter_mut().enumerate() {
                    let pc = xnor_popcount_words(wb.row_words(j), x.words(), n_in);
                    *zj = (2 * pc as i64 - n_in as i64) as f32;
                }
            });

        let mut cache = BatchCache {
            input_signs,
            z,
            x_hat: Vec::new(),
            y: Vec::new(),
            batch_mean: Vec::new(),
            batch_var: Vec::new(),
        };

        if layer.has_batchnorm {
            let mut mean = vec![0.0f32; n_out];
            let mut var = vec![0.0f32; n_out];
            for row in cache.z.chunks_exact(n_out) {
                for (m, &v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
            for m in &mut mean {
                *m /= b as f32;
            }
            for row in cache.z.chunks_exact(n_out) {
                for ((va, &m), &v) in var.iter_mut().zip(&mean).zip(row) {
                    let d = v - m;
                    *va += d * d;
                }
            }
            for va in &mut var {
                *va /= b as f32;
            }

            let mut x_hat = vec![0.0f32; b * n_out];
            let mut y = vec![0.0f32; b * n_out];
            let mut next_bits = Vec::with_capacity(b);
            let mut out_bools = vec![false; n_out];
            for (bi, row) in cache.z.chunks_exact(n_out).enumerate() {
                for j in 0..n_out {
                    let xh = (row[j] - mean[j]) / (var[j] + BN_EPS).sqrt();
                    let yv = layer.gamma[j] * xh + layer.beta[j];
                    x_hat[bi * n_out + j] = xh;
                    y[bi * n_out + j] = yv;
                    out_bools[j] = yv >= 0.0;
                }
                next_bits.push(BinaryVector::from_bools(&out_bools));
            }
            cache.x_hat = x_hat;
            cache.y = y;
            cache.batch_mean = mean;
            cache.batch_var = var;
            act_bits = next_bits;
        }
        caches.push(cache);
    }

    // ---- loss on fan-in-normalized final scores ----
    let n_out_last = layers[n_layers - 1].out_features;
    let n_in_last = layers[n_layers - 1].in_features as f32;
    let scores = &caches[n_layers - 1].z;
    let mut delta = vec![0.0f32; b * n_out_last];
    let mut loss = 0.0f64;
    let margin = config.hinge_margin;
    for (bi, &idx) in batch.iter().enumerate() {
        let label = data.label(idx) as usize;
        for j in 0..n_out_last {
            let t = if j == label { 1.0f32 } else { -1.0 };
            let s_hat = scores[bi * n_out_last + j] / n_in_last;
            let violation = (margin - t * s_hat).max(0.0);
            loss += (violation * violation) as f64;
            // dL/dz = -2 t violation / n_in, averaged over the batch
            delta[bi * n_out_last + j] = -2.0 * t * violation / (n_in_last * b as f32);
        }
    }
    loss /= b as f64;

    // ---- backward ----
    let mut grads: Vec<LayerGrads> = layers
        .iter()
        .map(|l| LayerGrads {
            w: vec![0.0f32; l.weights.len()],
            gamma: vec![0.0f32; l.out_features],
            beta: vec![0.0f32; l.out_features],
        })
        .collect();

    let mut delta_z = delta; // gradient w.r.t. z of the current layer
    for l in (0..n_layers).rev() {
        let layer = &layers[l];
        let (n_in, n_out) = (layer.in_features, layer.out_features);
        let cache = &caches[l];

        // weight gradient: dW[j, i] = sum_b delta_z[b, j] * a_in[b, i]
        grads[l]
            .w
            .par_chunks_mut(n_in)
            .enumerate()
            .for_each(|(j, dw_row)| {
                for bi in 0..b {
                    let d = delta_z[bi * n_out + j];
                    if d != 0.0 {
                        let a_row = &cache.input_signs[bi * n_in..(bi + 1) * n_in];
                        for (dw, &a) in dw_row.iter_mut().zip(a_row) {
                            *dw += d * a;
                        }
                    }
                }
            });

        if l == 0 {
            break;
        }

        // input gradient through the binary weights:
        // delta_a[b, i] = sum_j delta_z[b, j] * w_b[j, i]
        let w_signs = unpack_matrix_signs(&binary_weights[l]);
        let mut delta_a = vec![0.0f32; b * n_in];
        delta_a
            .par_chunks_mut(n_in)
            .enumerate()
            .for_each(|(bi, da_row)| {
                for j in 0..n_out {
                    let d = delta_z[bi * n_out + j];
                    if d != 0.0 {
                        let w_row = &w_signs[j * n_in..(j + 1) * n_in];
                        for (da, &w) in da_row.iter_mut().zip(w_row) {
                            *da += d * w;
                        }
                    }
                }
            });

        // previous layer is a hidden layer: pass through sign via the
        // hardtanh STE, then through its batch norm
        let prev = &layers[l - 1];
        let prev_cache = &caches[l - 1];
        let pn = prev.out_features;
        debug_assert_eq!(pn, n_in);

        let mut delta_y = delta_a;
        for (dy, &yv) in delta_y.iter_mut().zip(prev_cache.y.iter()) {
            *dy *= ste_grad(yv as f64) as f32;
        }

        // batch-norm backward (batch statistics)
        let mut sum_dy = vec![0.0f32; pn];
        let mut sum_dy_xhat = vec![0.0f32; pn];
        for bi in 0..b {
            for j in 0..pn {
                let dy = delta_y[bi * pn + j];
                sum_dy[j] += dy;
                sum_dy_xhat[j] += dy * prev_cache.x_hat[bi * pn + j];
            }
        }
        grads[l - 1].beta.copy_from_slice(&sum_dy);
        grads[l - 1].gamma.copy_from_slice(&sum_dy_xhat);

        let mut delta_prev = vec![0.0f32; b * pn];
        let inv_b = 1.0 / b as f32;
        for bi in 0..b {
            for j in 0..pn {
                let inv_std = 1.0 / (prev_cache.batch_var[j] + BN_EPS).sqrt();
                let dy = delta_y[bi * pn + j];
                let xh = prev_cache.x_hat[bi * pn + j];
                delta_prev[bi * pn + j] = prev.gamma[j]
                    * inv_std
                    * (dy - inv_b * sum_dy[j] - xh * inv_b * sum_dy_xhat[j]);
            }
        }
        delta_z = delta_prev;
    }

    // update running statistics after the backward pass used batch stats
    for (layer, cache) in layers.iter_mut().zip(&caches) {
        if layer.has_batchnorm {
            for j in 0..layer.out_features {
                layer.running_mean[j] =
                    BN_MOMENTUM * layer.running_mean[j] + (1.0 - BN_MOMENTUM) * cache.batch_mean[j];
                layer.running_var[j] =
                    BN_MOMENTUM * layer.running_var[j] + (1.0 - BN_MOMENTUM) * cache.batch_var[j];
            }
        }
    }

    (loss, grads)
}

fn unpack_signs(rows: &[BinaryVector], n: usize) -> Vec<f32> {
    let mut out = vec![-1.0f32; rows.len() * n];
    for (bi, bits) in rows.iter().enumerate() {
        let row = &mut out[bi * n..(bi + 1) * n];
        for (i, v) in row.iter_mut().enumerate() {
            if bits.get(i) {
                *v = 1.0;
            }
        }
    }
    out
}

fn unpack_matrix_signs(m: &BinaryMatrix) -> Vec<f32> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut out = vec![-1.0f32; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            if m.get(r, c) {
                out[r * cols + c] = 1.0;
            }
        }
    }
    out
}

/// Export the training graph as a bit-packed model: hidden-layer batch norm
/// folds into integer thresholds (running statistics), negative-slope
/// neurons get their weight row complemented, the final layer uses the
/// constant offset ceil(n/2) so its scores stay argmax-equivalent to the
/// raw integer sums.
pub fn export(layers: &[ShadowLayer], input_threshold: f32) -> Result<BnnModel> {
    let mut packed = Vec::with_capacity(layers.len());
    for layer in layers {
        let mut weights = layer.binarize_weights();
        let n = layer.in_features;
        let thresholds = if layer.has_batchnorm {
            let mut t = Vec::with_capacity(layer.out_features);
            for j in 0..layer.out_features {
                let sigma = (layer.running_var[j] as f64 + BN_EPS as f64).sqrt();
                let fold = fold_batchnorm(
                    layer.gamma[j] as f64,
                    layer.beta[j] as f64,
                    layer.running_mean[j] as f64,
                    sigma,
                    n,
                )?;
                if fold.flip {
                    weights.complement_row(j);
                }
                t.push(fold.threshold);
            }
            t
        } else {
            vec![n.div_ceil(2) as u32; layer.out_features]
        };
        packed.push(BnnLinearLayer::new(weights, thresholds)?);
    }
    BnnModel::new(packed, input_threshold)
}

/// Fraction of items whose argmax class matches the label.
pub fn evaluate(model: &BnnModel, dataset: &Dataset) -> Result<f64> {
    if dataset.dim() != model.in_features() {
        return Err(BnnError::LengthMismatch {
            expected: model.in_features(),
            got: dataset.dim(),
        });
    }
    if dataset.is_empty() {
        return Ok(0.0);
    }
    let correct: usize = (0..dataset.len())
        .into_par_iter()
        .map(|i| {
            let (class, _) = model.forward(dataset.feature(i)).expect("shape checked");
            (class == dataset.label(i) as usize) as usize
        })
        .sum();
    Ok(correct as f64 / dataset.len() as f64)
}

/// Training-graph forward in inference mode (running statistics), used to
/// check that the exported integer model reproduces it exactly.
pub fn graph_inference(layers: &[ShadowLayer], x_raw: &[f32]) -> (usize, Vec<f64>) {
    let mut bits = binarize(x_raw, INPUT_THRESHOLD);
    for layer in layers {
        let wb = layer.binarize_weights();
        if layer.has_batchnorm {
            let mut out = vec![false; layer.out_features];
            for (j, o) in out.iter_mut().enumerate() {
                let pc = xnor_popcount_words(wb.row_words(j), bits.words(), layer.in_features);
                let z = (2 * pc as i64 - layer.in_features as i64) as f64;
                let sigma = (layer.running_var[j] as f64 + BN_EPS as f64).sqrt();
                let y = layer.gamma[j] as f64 * (z - layer.running_mean[j] as f64) / sigma
                    + layer.beta[j] as f64;
                *o = y >= 0.0;
            }
            bits = BinaryVector::from_bools(&out);
        } else {
            let scores: Vec<f64> = (0..layer.out_features)
                .map(|j| {
                    let pc = xnor_popcount_words(wb.row_words(j), bits.words(), layer.in_features);
                    (2 * pc as i64 - layer.in_features as i64) as f64
                })
                .collect();
            let mut best = 0;
            for (j, &s) in scores.iter().enumerate().skip(1) {
                if s > scores[best] {
                    best = j;
                }
            }
            return (best, scores);
        }
    }
    unreachable!("last layer has no batch norm")
}
