//! Feature CSV and model JSON.
//!
//! A feature line holds the 2048 feature values, then the class label, then
//! the condition tag: `f0,...,f2047,label,condition`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ClassifyError, Condition, FeatureRecord, LinearClassifier, FEATURE_DIM};
use crate::scalar::{sig9, Real};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] ClassifyError),
}

pub fn parse_features_csv<F: Real>(text: &str) -> Result<Vec<FeatureRecord<F>>, FormatError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| FormatError::Parse { line: n + 1, message };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != FEATURE_DIM + 2 {
            return Err(err(format!("expected {} fields, got {}", FEATURE_DIM + 2, fields.len())));
        }
        let features = fields[..FEATURE_DIM]
            .iter()
            .map(|f| f.trim().parse::<f64>().map(F::of))
            .collect::<Result<Vec<F>, _>>()
            .map_err(|e| err(e.to_string()))?;
        let label = fields[FEATURE_DIM]
            .trim()
            .parse::<usize>()
            .map_err(|e| err(format!("label: {e}")))?;
        let condition = fields[FEATURE_DIM + 1].parse::<Condition>().map_err(err)?;
        out.push(FeatureRecord::new(features, label, condition).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

fn number<F: Real>(v: F) -> f64 {
    sig9(v.to_f64().expect("real converts to f64"))
}

pub fn format_features_csv<F: Real>(records: &[FeatureRecord<F>]) -> String {
    let mut out = String::new();
    for r in records {
        for &v in &r.features {
            let _ = write!(out, "{},", number(v));
        }
        let _ = writeln!(out, "{},{}", r.label, r.condition);
    }
    out
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// `{"weights": [...], "bias": [...]}` with the weights row-major
/// `inputs x classes` and numbers at 9 significant digits.
pub fn model_to_json<F: Real>(model: &LinearClassifier<F>) -> String {
    let file = ModelFile {
        weights: model.weights().iter().map(|&v| number(v)).collect(),
        bias: model.bias().iter().map(|&v| number(v)).collect(),
    };
    serde_json::to_string(&file).expect("plain struct serializes") + "\n"
}

pub fn model_from_json<F: Real>(text: &str) -> Result<LinearClassifier<F>, FormatError> {
    let file: ModelFile = serde_json::from_str(text)?;
    let cast = |v: Vec<f64>| v.into_iter().map(F::of).collect();
    Ok(LinearClassifier::from_parts(cast(file.weights), cast(file.bias))?)
}
