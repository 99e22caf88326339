//! Weight-error injection and accuracy-vs-BER sweeps, plus inference with
//! every weight physically stored in differential memory arrays.
//!
//! Thresholds are never corrupted: they live in a separate error-free
//! memory. Injection touches weight bits only.

use rayon::prelude::*;

use rram::array::DiffArray;
use rram::rng::Stream;
use rram::sense::{pcsa_read, SenseModel};
use rram::stats::ConditionEntry;

use crate::bits::BinaryVector;
use crate::data::Dataset;
use crate::error::{BnnError, Result};
use crate::model::{argmax, BnnModel};
use crate::train::evaluate;

/// Corrupt a copy of the model: each weight bit flips independently with
/// probability `ber`. The input model is untouched.
pub fn flip_weights(model: &BnnModel, ber: f64, stream: &mut Stream) -> Result<BnnModel> {
    if !(0.0..=1.0).contains(&ber) {
        return Err(BnnError::InvalidParameter(format!(
            "bit error rate {ber} outside [0, 1]"
        )));
    }
    let mut corrupted = model.clone();
    if ber == 0.0 {
        return Ok(corrupted);
    }
    for layer in corrupted.layers_mut() {
        let (rows, cols) = (layer.out_features(), layer.in_features());
        let w = layer.weights_mut();
        for r in 0..rows {
            for c in 0..cols {
                if stream.bernoulli(ber) {
                    let bit = w.get(r, c);
                    w.set(r, c, !bit);
                }
            }
        }
    }
    Ok(corrupted)
}

/// One BER point of a sweep: per-repetition accuracies plus their mean and
/// sample standard deviation.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub ber: f64,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Independent corruptions per (BER, repetition), evaluated in parallel with
/// derived streams and merged in (BER, repetition) order.
pub fn ber_accuracy_sweep(
    model: &BnnModel,
    dataset: &Dataset,
    bers: &[f64],
    repetitions: usize,
    stream: &mut Stream,
) -> Result<Vec<SweepPoint>> {
    if repetitions == 0 {
        return Err(BnnError::InvalidParameter(
            "sweep needs at least one repetition".into(),
        ));
    }
    let streams = stream.split(bers.len() * repetitions);
    let jobs: Vec<(usize, usize, Stream)> = streams
        .into_iter()
        .enumerate()
        .map(|(i, s)| (i / repetitions, i % repetitions, s))
        .collect();
    let accs: std::result::Result<Vec<(usize, usize, f64)>, BnnError> = jobs
        .into_par_iter()
        .map(|(bi, rep, mut s)| {
            let corrupted = flip_weights(model, bers[bi], &mut s)?;
            Ok((bi, rep, evaluate(&corrupted, dataset)?))
        })
        .collect();
    let mut accs = accs?;
    accs.sort_by_key(|&(bi, rep, _)| (bi, rep));

    let mut out = Vec::with_capacity(bers.len());
    for (bi, &ber) in bers.iter().enumerate() {
        let values: Vec<f64> = accs
            .iter()
            .filter(|&&(b, _, _)| b == bi)
            .map(|&(_, _, a)| a)
            .collect();
        // repetitions of an identical outcome (always the case at ber 0)
        // must report that exact value with zero spread, not a rounded mean
        let (mean, std) = if values.windows(2).all(|w| w[0] == w[1]) {
            (values[0], 0.0)
        } else {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let std = (values.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>()
                / (values.len() - 1) as f64)
                .sqrt();
            (mean, std)
        };
        out.push(SweepPoint {
            ber,
            accuracies: values,
            mean,
            std,
        });
    }
    Ok(out)
}

pub fn sweep_to_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("ber,repetition,accuracy\n");
    for p in points {
        for (rep, acc) in p.accuracies.iter().enumerate() {
            out.push_str(&format!("{:e},{rep},{acc}\n", p.ber));
        }
    }
    out.push_str("ber,mean,std\n");
    for p in points {
        out.push_str(&format!("{:e},{},{}\n", p.ber, p.mean, p.std));
    }
    out
}

/// How device-backed inference reads the stored weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SensingMode {
    /// Read every weight once after programming; errors freeze into the
    /// stored model (mirrors injecting errors on the weight memory).
    Frozen,
    /// Re-sense every weight at every inference through the XNOR read path,
    /// so sensing errors refresh per read.
    PerRead,
}

#[derive(Clone, Copy, Debug)]
pub struct DeviceBackedConfig {
    pub array_rows: usize,
    pub array_cols: usize,
    /// Maximum number of physical arrays available for one layer tiling.
    pub max_arrays: usize,
    pub mode: SensingMode,
}

impl Default for DeviceBackedConfig {
    fn default() -> Self {
        DeviceBackedConfig {
            array_rows: 32,
            array_cols: 32,
            max_arrays: 16_384,
            mode: SensingMode::Frozen,
        }
    }
}

/// Weight storage for one layer: a grid of differential arrays.
struct TiledLayer {
    arrays: Vec<DiffArray>,
    col_tiles: usize,
}

fn tile_layer(
    layer: &crate::model::BnnLinearLayer,
    entry: &ConditionEntry,
    sense: &SenseModel,
    cfg: &DeviceBackedConfig,
    stream: &mut Stream,
) -> Result<TiledLayer> {
    let row_tiles = layer.out_features().div_ceil(cfg.array_rows);
    let col_tiles = layer.in_features().div_ceil(cfg.array_cols);
    if row_tiles * col_tiles > cfg.max_arrays {
        return Err(BnnError::InvalidParameter(format!(
            "layer {}x{} needs {} arrays of {}x{}, budget is {}",
            layer.out_features(),
            layer.in_features(),
            row_tiles * col_tiles,
            cfg.array_rows,
            cfg.array_cols,
            cfg.max_arrays
        )));
    }
    let mut arrays = Vec::with_capacity(row_tiles * col_tiles);
    for rt in 0..row_tiles {
        for ct in 0..col_tiles {
            let mut arr = DiffArray::new(cfg.array_rows, cfg.array_cols, entry.clone(), *sense);
            for r in 0..cfg.array_rows {
                let row = rt * cfg.array_rows + r;
                if row >= layer.out_features() {
                    break;
                }
                for c in 0..cfg.array_cols {
                    let col = ct * cfg.array_cols + c;
                    if col >= layer.in_features() {
                        break;
                    }
                    arr.program_bit(r, c, layer.weights().get(row, col), stream)
                        .expect("indices in range by construction");
                }
            }
            arrays.push(arr);
        }
    }
    Ok(TiledLayer { arrays, col_tiles })
}

/// Program every layer into differential arrays under the given condition
/// and run inference on the dataset. In `Frozen` mode the weights are read
/// back once and inference runs on the (possibly corrupted) read-back model;
/// in `PerRead` mode each inference re-senses every weight through the XNOR
/// read path.
pub fn device_backed_inference(
    model: &BnnModel,
    entry: &ConditionEntry,
    sense: &SenseModel,
    dataset: &Dataset,
    cfg: &DeviceBackedConfig,
    stream: &mut Stream,
) -> Result<f64> {
    let tiled: Vec<TiledLayer> = model
        .layers()
        .iter()
        .map(|layer| tile_layer(layer, entry, sense, cfg, stream))
        .collect::<Result<_>>()?;

    match cfg.mode {
        SensingMode::Frozen => {
            let mut corrupted = model.clone();
            for (layer, tiles) in corrupted.layers_mut().iter_mut().zip(&tiled) {
                let (rows, cols) = (layer.out_features(), layer.in_features());
                let w = layer.weights_mut();
                for row in 0..rows {
                    let rt = row / cfg.array_rows;
                    for col in 0..cols {
                        let ct = col / cfg.array_cols;
                        let arr = &tiles.arrays[rt * tiles.col_tiles + ct];
                        let cell = arr
                            .cell(row % cfg.array_rows, col % cfg.array_cols)
                            .expect("in range");
                        let bit = pcsa_read(cell.r_bl, cell.r_blb, sense, stream);
                        w.set(row, col, bit);
                    }
                }
            }
            evaluate(&corrupted, dataset)
        }
        SensingMode::PerRead => {
            let mut correct = 0usize;
            for i in 0..dataset.len() {
                let x = model.binarize_input(dataset.feature(i))?;
                let class = forward_per_read(model, &tiled, &x, cfg, stream)?;
                if class == dataset.label(i) as usize {
                    correct += 1;
                }
            }
            Ok(correct as f64 / dataset.len().max(1) as f64)
        }
    }
}

fn forward_per_read(
    model: &BnnModel,
    tiled: &[TiledLayer],
    x: &BinaryVector,
    cfg: &DeviceBackedConfig,
    stream: &mut Stream,
) -> Result<usize> {
    let mut act = x.clone();
    for (li, (layer, tiles)) in model.layers().iter().zip(tiled).enumerate() {
        let is_last = li + 1 == model.layers().len();
        let n_out = layer.out_features();
        let n_in = layer.in_features();
        // input chunks padded with zeros; padded lanes read against
        // unprogrammed cells and are masked out of the popcount
        let mut x_chunks: Vec<Vec<bool>> = Vec::with_capacity(tiles.col_tiles);
        for ct in 0..tiles.col_tiles {
            let mut chunk = vec![false; cfg.array_cols];
            for (c, slot) in chunk.iter_mut().enumerate() {
                let col = ct * cfg.array_cols + c;
                if col < n_in {
                    *slot = act.get(col);
                }
            }
            x_chunks.push(chunk);
        }
        let mut scores = vec![0i32; n_out];
        let mut bits = BinaryVector::zeros(n_out);
        for (row, score) in scores.iter_mut().enumerate() {
            let rt = row / cfg.array_rows;
            let mut pc = 0u32;
            for (ct, x_chunk) in x_chunks.iter().enumerate() {
                let arr = &tiles.arrays[rt * tiles.col_tiles + ct];
                let outs = arr
                    .read_row_xnor(row % cfg.array_rows, x_chunk, stream)
                    .expect("chunk length matches array");
                let valid = (n_in - ct * cfg.array_cols).min(cfg.array_cols);
                pc += outs[..valid].iter().filter(|&&b| b).count() as u32;
            }
            let t = layer.thresholds()[row];
            if is_last {
                *score = pc as i32 - t as i32;
            } else if pc >= t {
                bits.set(row, true);
            }
        }
        if is_last {
            return Ok(argmax(&scores));
        }
        act = bits;
    }
    unreachable!("loop returns at the last layer")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BinaryMatrix;
    use crate::model::{model_to_bytes, BnnLinearLayer};
    use rram::rng::StreamKey;
    use rram::stats::{AgingModel, ProgrammingCondition, ResistanceDistribution, State};

    fn random_model(topology: &[usize], seed: u64) -> BnnModel {
        let key = StreamKey::new(seed);
        let layers = topology
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (n_in, n_out) = (w[0], w[1]);
                let mut s = key.stream("model", &[i as u64]);
                let mut m = BinaryMatrix::zeros(n_out, n_in);
                for r in 0..n_out {
                    for c in 0..n_in {
                        m.set(r, c, s.bit());
                    }
                }
                let t = (0..n_out)
                    .map(|_| (n_in / 2 + (s.range(9) as usize).saturating_sub(4)) as u32)
                    .collect();
                BnnLinearLayer::new(m, t).unwrap()
            })
            .collect();
        BnnModel::new(layers, 0.5).unwrap()
    }

    /// Random inputs labeled by the model itself: baseline accuracy 1.0.
    fn teacher_dataset(model: &BnnModel, n: usize, seed: u64) -> Dataset {
        let mut s = StreamKey::new(seed).stream("teacher", &[]);
        let dim = model.in_features();
        let mut features = Vec::with_capacity(n * dim);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let x: Vec<f32> = (0..dim).map(|_| s.uniform() as f32).collect();
            let (class, _) = model.forward(&x).unwrap();
            features.extend_from_slice(&x);
            labels.push(class as u8);
        }
        Dataset::new(features, labels, dim, model.classes()).unwrap()
    }

    fn noiseless_entry() -> ConditionEntry {
        ConditionEntry {
            name: "noiseless".into(),
            condition: ProgrammingCondition::new(55.0, 2.5, 1.0).unwrap(),
            lrs: ResistanceDistribution::new(State::Lrs, (1e4f64).ln(), 0.0).unwrap(),
            hrs: ResistanceDistribution::new(State::Hrs, (3e5f64).ln(), 0.0).unwrap(),
            aging: AgingModel::none(),
            set_energy_pj: 100.0,
            reset_energy_pj: 100.0,
            cyclability_cycles: 1,
            ber_is_placeholder: false,
        }
    }

    #[test]
    fn ber_zero_is_identity_and_ber_one_complements() {
        let model = random_model(&[64, 32, 4], 1);
        let key = StreamKey::new(2);
        let same = flip_weights(&model, 0.0, &mut key.stream("f", &[0])).unwrap();
        assert_eq!(model_to_bytes(&model), model_to_bytes(&same));

        let flipped = flip_weights(&model, 1.0, &mut key.stream("f", &[1])).unwrap();
        for (a, b) in model.layers().iter().zip(flipped.layers()) {
            for r in 0..a.out_features() {
                for c in 0..a.in_features() {
                    assert_eq!(a.weights().get(r, c), !b.weights().get(r, c));
                }
            }
            assert_eq!(a.thresholds(), b.thresholds(), "thresholds untouched");
        }
    }

    #[test]
    fn flip_count_matches_binomial_statistics() {
        let model = random_model(&[1000, 1000], 3);
        let n_weights = 1_000_000f64;
        let mut s = StreamKey::new(4).stream("binom", &[]);
        let corrupted = flip_weights(&model, 0.5, &mut s).unwrap();
        let mut flips = 0u64;
        let (a, b) = (&model.layers()[0], &corrupted.layers()[0]);
        for r in 0..1000 {
            for c in 0..1000 {
                if a.weights().get(r, c) != b.weights().get(r, c) {
                    flips += 1;
                }
            }
        }
        let want = 0.5 * n_weights;
        let tol = 3.0 * (n_weights * 0.25).sqrt();
        assert!(
            (flips as f64 - want).abs() < tol,
            "{flips} flips vs {want} +- {tol}"
        );
    }

    #[test]
    fn same_stream_flip_restores_model() {
        let model = random_model(&[48, 24, 4], 5);
        let key = StreamKey::new(6);
        let once = flip_weights(&model, 0.3, &mut key.stream("mask", &[7])).unwrap();
        let twice = flip_weights(&once, 0.3, &mut key.stream("mask", &[7])).unwrap();
        assert_eq!(model_to_bytes(&model), model_to_bytes(&twice));
    }

    #[test]
    fn sweep_baseline_row_is_exact_and_degradation_monotone() {
        let model = random_model(&[64, 48, 4], 8);
        let data = teacher_dataset(&model, 400, 9);
        let baseline = evaluate(&model, &data).unwrap();
        assert_eq!(baseline, 1.0, "teacher labels its own inputs perfectly");

        let mut s = StreamKey::new(10).stream("sweep", &[]);
        let bers = [0.0, 0.005, 0.02, 0.08, 0.3];
        let points = ber_accuracy_sweep(&model, &data, &bers, 5, &mut s).unwrap();
        assert_eq!(points[0].mean, baseline);
        assert_eq!(points[0].std, 0.0);
        // non-increasing in expectation, with one-sigma slack per step
        for w in points.windows(2) {
            let slack = w[0].std.max(w[1].std).max(0.01);
            assert!(
                w[1].mean <= w[0].mean + slack,
                "accuracy rose from {} to {} at ber {}",
                w[0].mean,
                w[1].mean,
                w[1].ber
            );
        }
        assert!(
            points.last().unwrap().mean < 0.9,
            "ber 0.3 must visibly hurt"
        );
    }

    #[test]
    fn sweep_is_deterministic() {
        let model = random_model(&[32, 16, 4], 11);
        let data = teacher_dataset(&model, 100, 12);
        let key = StreamKey::new(13);
        let a =
            ber_accuracy_sweep(&model, &data, &[0.01, 0.1], 3, &mut key.stream("s", &[])).unwrap();
        let b =
            ber_accuracy_sweep(&model, &data, &[0.01, 0.1], 3, &mut key.stream("s", &[])).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.accuracies, y.accuracies);
        }
    }

    #[test]
    fn noiseless_device_backing_reproduces_model_exactly() {
        let model = random_model(&[70, 33, 4], 14);
        let data = teacher_dataset(&model, 200, 15);
        let key = StreamKey::new(16);
        for mode in [SensingMode::Frozen, SensingMode::PerRead] {
            let cfg = DeviceBackedConfig {
                mode,
                ..DeviceBackedConfig::default()
            };
            let acc = device_backed_inference(
                &model,
                &noiseless_entry(),
                &SenseModel::ideal(),
                &data,
                &cfg,
                &mut key.stream("dev", &[mode as u64]),
            )
            .unwrap();
            assert_eq!(acc, 1.0, "mode {mode:?}");
        }
    }

    #[test]
    fn device_backed_is_deterministic_and_budget_checked() {
        let model = random_model(&[70, 33, 4], 17);
        let data = teacher_dataset(&model, 100, 18);
        let key = StreamKey::new(19);
        let mut entry = noiseless_entry();
        entry.lrs = ResistanceDistribution::new(State::Lrs, (1e4f64).ln(), 0.6).unwrap();
        entry.hrs = ResistanceDistribution::new(State::Hrs, (3e5f64).ln(), 0.6).unwrap();
        let sense = SenseModel::new(5.0, 2.878).unwrap();
        let cfg = DeviceBackedConfig::default();
        let a = device_backed_inference(
            &model,
            &entry,
            &sense,
            &data,
            &cfg,
            &mut key.stream("d", &[]),
        )
        .unwrap();
        let b = device_backed_inference(
            &model,
            &entry,
            &sense,
            &data,
            &cfg,
            &mut key.stream("d", &[]),
        )
        .unwrap();
        assert_eq!(a, b);

        let tiny = DeviceBackedConfig {
            max_arrays: 1,
            ..DeviceBackedConfig::default()
        };
        assert!(device_backed_inference(
            &model,
            &entry,
            &sense,
            &data,
            &tiny,
            &mut key.stream("d", &[1])
        )
        .is_err());
    }

    #[test]
    fn frozen_device_backing_agrees_with_bernoulli_injection() {
        // ablation: frozen device errors vs Bernoulli flips at the
        // condition's analytic sensed BER must land within Monte Carlo noise
        let model = random_model(&[128, 64, 4], 20);
        let data = teacher_dataset(&model, 500, 21);
        let key = StreamKey::new(22);

        let mut entry = noiseless_entry();
        // a deliberately error-prone condition so accuracies move visibly
        entry.lrs = ResistanceDistribution::new(State::Lrs, (1e4f64).ln(), 1.1).unwrap();
        entry.hrs = ResistanceDistribution::new(
            State::Hrs,
            (1e4f64).ln() + 1.5 * std::f64::consts::LN_10,
            1.1,
        )
        .unwrap();
        let sense = SenseModel::new(5.0, 2.878).unwrap();
        let rate = rram::analytics::ber_2t2r_sensed(&entry.lrs, &entry.hrs, &sense);
        assert!(rate > 0.01, "fixture should be noisy, got {rate}");

        let reps = 8;
        let mut dev_accs = Vec::new();
        for r in 0..reps {
            let cfg = DeviceBackedConfig::default();
            dev_accs.push(
                device_backed_inference(
                    &model,
                    &entry,
                    &sense,
                    &data,
                    &cfg,
                    &mut key.stream("dev", &[r]),
                )
                .unwrap(),
            );
        }
        let dev_mean = dev_accs.iter().sum::<f64>() / reps as f64;

        let points = ber_accuracy_sweep(
            &model,
            &data,
            &[rate],
            reps as usize,
            &mut key.stream("bern", &[]),
        )
        .unwrap();
        let bern_mean = points[0].mean;
        let spread = (points[0].std + 0.01).max(0.02);
        assert!(
            (dev_mean - bern_mean).abs() < 3.0 * spread,
            "device {dev_mean} vs bernoulli {bern_mean} (3s {})",
            3.0 * spread
        );
    }
}
