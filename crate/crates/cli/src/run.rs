//! Execution of experiment specs. A run is a pure function of the spec (and
//! the files it names): given the same spec, the produced artifacts are
//! byte-identical, which is what makes `replay` a verification tool.

use std::path::Path;

use anyhow::{Context, Result};

use bnn::fault::{
    ber_accuracy_sweep, device_backed_inference, sweep_to_csv, DeviceBackedConfig, SensingMode,
};
use bnn::train::{train, TrainConfig};
use bnn::{evaluate, read_model, Dataset};
use rram::analytics::tradeoff_curve;
use rram::array::{endurance_sweep, measure_ber, CellMode};
use rram::config::{default_config, parse_config};
use rram::ecc::EccCode;
use rram::rng::StreamKey;
use rram::sense::SenseModel;
use rram::stats::ConditionTable;
use tile_sim::{map_layer, simulate_layer, Dataflow, EnergyTable, OpCounts, SenseMode, TileConfig};

use crate::artifact::{csv_with_header, json_with_header, Artifact};
use crate::mnist::load_mnist_dir;
use crate::spec::{CellModeSpec, DataflowSpec, ExperimentSpec, SensingSpec};

fn load_table(config: &Option<String>) -> Result<(ConditionTable, SenseModel)> {
    match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading condition config {path}"))?;
            Ok(parse_config(&text)?)
        }
        None => Ok(default_config()),
    }
}

fn load_model(path: &str) -> Result<bnn::BnnModel> {
    let bytes = std::fs::read(path).with_context(|| format!("reading model {path}"))?;
    Ok(read_model(&bytes)?)
}

fn load_validation(data_dir: &str, limit: Option<usize>) -> Result<Dataset> {
    let set = load_mnist_dir(Path::new(data_dir), false)
        .with_context(|| format!("loading validation data from {data_dir}"))?;
    Ok(match limit {
        Some(n) => set.take(n),
        None => set,
    })
}

/// Run one experiment and return its artifacts (not yet written to disk).
pub fn run_command(spec: &ExperimentSpec) -> Result<Vec<Artifact>> {
    let key = StreamKey::new(spec.seed());
    match spec {
        ExperimentSpec::Train {
            data_dir,
            topology,
            epochs,
            batch_size,
            learning_rate,
            hinge_margin,
            seed,
        } => {
            let train_set = load_mnist_dir(Path::new(data_dir), true)
                .with_context(|| format!("loading training data from {data_dir}"))?;
            let val_set = load_mnist_dir(Path::new(data_dir), false)?;
            let config = TrainConfig {
                learning_rate: *learning_rate,
                hinge_margin: *hinge_margin,
                epochs: *epochs,
                batch_size: *batch_size,
                seed: *seed,
                ..TrainConfig::default()
            };
            let (model, log) = train(&train_set, &val_set, topology, &config)?;
            let accuracy = evaluate(&model, &val_set)?;
            let mut log_csv = log.to_csv();
            log_csv.push_str(&format!("final,,{accuracy}\n"));
            Ok(vec![
                Artifact::binary("", bnn::model::model_to_bytes(&model)),
                Artifact::text("log.csv", csv_with_header(spec, &log_csv)),
            ])
        }

        ExperimentSpec::Sweep {
            model,
            data_dir,
            bers,
            repetitions,
            limit,
            seed: _,
        } => {
            let model = load_model(model)?;
            let data = load_validation(data_dir, *limit)?;
            let points = ber_accuracy_sweep(
                &model,
                &data,
                bers,
                *repetitions,
                &mut key.stream("sweep", &[]),
            )?;
            Ok(vec![Artifact::text(
                "",
                csv_with_header(spec, &sweep_to_csv(&points)),
            )])
        }

        ExperimentSpec::DeviceBer {
            condition,
            mode,
            trials,
            config,
            seed: _,
        } => {
            let (table, sense) = load_table(config)?;
            let entry = table.by_name(condition)?;
            let cell_mode = match mode {
                CellModeSpec::Single1T1R => CellMode::Single1T1R,
                CellModeSpec::Diff2T2R => CellMode::Diff2T2R,
            };
            let est = measure_ber(
                entry,
                &sense,
                cell_mode,
                *trials,
                &mut key.stream("device-ber", &[]),
            )?;
            let body = serde_json::json!({
                "condition": condition,
                "ber": est.ber,
                "ci95": [est.ci95.0, est.ci95.1],
                "errors": est.errors,
                "trials": est.trials,
                "ber_is_placeholder_calibration": entry.ber_is_placeholder,
            });
            Ok(vec![Artifact::text("", json_with_header(spec, body))])
        }

        ExperimentSpec::Endurance {
            condition,
            checkpoints,
            trials,
            config,
            seed: _,
        } => {
            let (table, sense) = load_table(config)?;
            let entry = table.by_name(condition)?;
            let rows = endurance_sweep(
                entry,
                &sense,
                checkpoints,
                *trials,
                &mut key.stream("endurance", &[]),
            )?;
            let mut csv = String::from(
                "cycles,ber_1t1r,ber_1t1r_lo,ber_1t1r_hi,ber_2t2r,ber_2t2r_lo,ber_2t2r_hi\n",
            );
            for r in &rows {
                csv.push_str(&format!(
                    "{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                    r.cycles,
                    r.ber_1t1r.ber,
                    r.ber_1t1r.ci95.0,
                    r.ber_1t1r.ci95.1,
                    r.ber_2t2r.ber,
                    r.ber_2t2r.ci95.0,
                    r.ber_2t2r.ci95.1,
                ));
            }
            Ok(vec![Artifact::text("", csv_with_header(spec, &csv))])
        }

        ExperimentSpec::Tradeoff { config, seed: _ } => {
            let (table, sense) = load_table(config)?;
            let curve = tradeoff_curve(&table, &sense, &EccCode::shipped())?;
            Ok(vec![Artifact::text(
                "",
                csv_with_header(spec, &curve.to_csv()),
            )])
        }

        ExperimentSpec::TileRun {
            model,
            data_dir,
            item,
            mode,
            block_dim,
            tile_rows,
            tile_cols,
            trace,
            seed: _,
        } => {
            let model = load_model(model)?;
            let data = load_validation(data_dir, Some(item + 1))?;
            anyhow::ensure!(*item < data.len(), "item {item} beyond dataset");
            let dataflow = match mode {
                DataflowSpec::P2s => Dataflow::ParallelToSequential,
                DataflowSpec::S2p => Dataflow::SequentialToParallel,
            };
            let config = TileConfig::new(*block_dim, *tile_rows, *tile_cols, dataflow)?;
            let x = model.binarize_input(data.feature(*item))?;

            let mut total_ops = OpCounts::default();
            let mut total_cycles = 0u64;
            let mut traces = Vec::new();
            let mut act = x;
            let mut scores = Vec::new();
            for (li, layer) in model.layers().iter().enumerate() {
                let placement = map_layer(layer, &config)?;
                let sim = simulate_layer(
                    &placement,
                    layer,
                    &act,
                    SenseMode::Ideal,
                    &mut key.stream("tile", &[li as u64]),
                    *trace,
                )?;
                total_cycles += sim.cycles;
                total_ops.accumulate(&sim.ops);
                if *trace {
                    traces.push(serde_json::json!({
                        "layer": li,
                        "cycles": sim.trace,
                    }));
                }
                scores = sim.scores;
                act = sim.activations;
            }
            let energy = tile_sim::energy_report(&total_ops, &EnergyTable::default())?;
            let body = serde_json::json!({
                "item": item,
                "label": data.label(*item),
                "class": bnn::argmax(&scores),
                "scores": scores,
                "cycles": total_cycles,
                "ops": total_ops,
                "energy": energy,
            });
            let mut artifacts = vec![Artifact::text("", json_with_header(spec, body))];
            if *trace {
                artifacts.push(Artifact::text(
                    "trace.json",
                    json_with_header(spec, serde_json::Value::Array(traces)),
                ));
            }
            Ok(artifacts)
        }

        ExperimentSpec::DeviceInfer {
            model,
            data_dir,
            condition,
            limit,
            sensing,
            config,
            seed: _,
        } => {
            let model = load_model(model)?;
            let data = load_validation(data_dir, *limit)?;
            let (table, sense) = load_table(config)?;
            let entry = table.by_name(condition)?;
            let cfg = DeviceBackedConfig {
                mode: match sensing {
                    SensingSpec::Frozen => SensingMode::Frozen,
                    SensingSpec::PerRead => SensingMode::PerRead,
                },
                ..DeviceBackedConfig::default()
            };
            let accuracy = device_backed_inference(
                &model,
                entry,
                &sense,
                &data,
                &cfg,
                &mut key.stream("device-infer", &[]),
            )?;
            let body = serde_json::json!({
                "condition": condition,
                "items": data.len(),
                "accuracy": accuracy,
                "sensing": sensing,
            });
            Ok(vec![Artifact::text("", json_with_header(spec, body))])
        }
    }
}
