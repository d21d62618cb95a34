use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use serde_json::{json, Value};

use irvision::classify::io::{model_from_json, model_to_json, parse_features_csv};
use irvision::classify::{evaluate, train, AccuracyTable, ClassifyError, TrainConfig};
use irvision::FeatureRecord;

use crate::output::{invalid, json_text, write_atomic, RunManifest};

#[derive(Args)]
pub struct TrainArgs {
    features: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.0)]
    l2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = irvision::classify::CLASSES)]
    classes: usize,
}

#[derive(Args)]
pub struct EvalArgs {
    features: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Also write the table to this file, with a manifest
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn read_features(path: &Path) -> Result<Vec<FeatureRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_features_csv(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn classify_error(e: ClassifyError) -> anyhow::Error {
    invalid(e.to_string())
}

pub fn run_train(a: TrainArgs) -> Result<()> {
    let started = Instant::now();
    let config = TrainConfig {
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
        l2: a.l2,
        seed: a.seed,
        classes: a.classes,
    };
    config.validate().map_err(classify_error)?;
    let records = read_features(&a.features)?;
    let trained = train(&records, &config).map_err(classify_error)?;
    write_atomic(&a.output, model_to_json(&trained.model).as_bytes())?;
    let params = json!({
        "learning_rate": a.lr,
        "epochs": a.epochs,
        "batch_size": a.batch_size,
        "l2": a.l2,
        "seed": a.seed,
        "classes": a.classes,
        "records": records.len(),
        "loss_trace": trained.loss_trace,
    });
    let mut manifest = RunManifest::new("train", params, started);
    manifest.inputs.push(a.features);
    manifest.outputs.push(a.output.clone());
    manifest.write_next_to(&a.output)
}

/// One row per condition present, then the overall row.
pub fn table_json(t: &AccuracyTable) -> Value {
    let rows: Vec<Value> = t
        .conditions
        .iter()
        .map(|(c, acc)| json!({"condition": c, "correct": acc.correct, "total": acc.total, "accuracy": acc.accuracy}))
        .collect();
    json!({"conditions": rows, "overall": t.overall})
}

pub fn run_eval(a: EvalArgs) -> Result<()> {
    let started = Instant::now();
    let text = fs::read_to_string(&a.model).with_context(|| format!("cannot read {}", a.model.display()))?;
    let model = model_from_json::<f64>(&text).with_context(|| format!("cannot parse {}", a.model.display()))?;
    let records = read_features(&a.features)?;
    let table = table_json(&evaluate(&model, &records).map_err(classify_error)?);
    let body = json_text(&table);
    print!("{body}");
    if let Some(out) = a.output {
        write_atomic(&out, body.as_bytes())?;
        let mut manifest = RunManifest::new("eval", json!({"records": records.len()}), started);
        manifest.inputs = vec![a.features, a.model];
        manifest.outputs.push(out.clone());
        manifest.write_next_to(&out)?;
    }
    Ok(())
}
