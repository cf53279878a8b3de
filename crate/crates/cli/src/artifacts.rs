//! On-disk result and model files written by `search` and read back by
//! `explain` and `report`.

use std::path::Path;

use ckdx_core::metrics::{ClassificationReport, ConfusionMatrix, ExplainabilityReport};
use ckdx_core::preprocess::FittedImputer;
use ckdx_core::search::{FamilySelection, PipelineConfig, SearchOutcome, SearchResult, SearchSettings};
use ckdx_core::trees::{deserialize_model, serialize_model, Algorithm, TreeEnsembleModel};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const RESULTS_FORMAT: &str = "ckdx-results";
pub const BUNDLE_FORMAT: &str = "ckdx-pipeline";
pub const FILE_VERSION: u32 = 1;

/// One classifier row of the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    /// True for the FIR-balanced winner.
    pub balanced: bool,
    pub config_index: usize,
    pub config_hash: String,
    pub config: PipelineConfig,
    pub cv: ClassificationReport<f64>,
    pub cv_folds: Vec<ClassificationReport<f64>>,
    pub holdout: ClassificationReport<f64>,
    pub holdout_confusion: ConfusionMatrix,
    pub families: Vec<FamilySelection>,
    pub selected: Vec<String>,
    pub surrogate_cv: ClassificationReport<f64>,
    pub explainability: ExplainabilityReport<f64>,
}

impl ResultRow {
    pub fn new(r: &SearchResult<f64>, balanced: bool) -> Self {
        ResultRow {
            algorithm: r.algorithm,
            balanced,
            config_index: r.config_index,
            config_hash: r.config_hash.clone(),
            config: r.config.clone(),
            cv: r.cv,
            cv_folds: r.cv_folds.clone(),
            holdout: r.holdout,
            holdout_confusion: r.holdout_confusion,
            families: r.families.clone(),
            selected: r.selected.clone(),
            surrogate_cv: r.surrogate_cv,
            explainability: r.explainability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingRow {
    pub algorithm: Algorithm,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsFile {
    pub format: String,
    pub version: u32,
    pub settings: SearchSettings,
    pub n_configs: usize,
    pub n_failed: usize,
    pub balanced: Option<Algorithm>,
    pub results: Vec<ResultRow>,
    pub missing: Vec<MissingRow>,
}

impl ResultsFile {
    pub fn new(outcome: &SearchOutcome<f64>) -> Self {
        ResultsFile {
            format: RESULTS_FORMAT.to_string(),
            version: FILE_VERSION,
            settings: outcome.settings,
            n_configs: outcome.evaluations.len(),
            n_failed: outcome.evaluations.iter().filter(|e| e.outcome.is_err()).count(),
            balanced: outcome.balanced.map(|i| outcome.results[i].algorithm),
            results: outcome
                .results
                .iter()
                .enumerate()
                .map(|(i, r)| ResultRow::new(r, outcome.balanced == Some(i)))
                .collect(),
            missing: outcome.missing.iter().map(|(a, why)| MissingRow { algorithm: *a, reason: why.clone() }).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = read(path)?;
        let file: ResultsFile = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if file.format != RESULTS_FORMAT || file.version != FILE_VERSION {
            return Err(CliError::Input(format!(
                "{}: expected {RESULTS_FORMAT} version {FILE_VERSION}, found {} version {}",
                path.display(),
                file.format,
                file.version
            )));
        }
        Ok(file)
    }
}

/// A refitted winner: the fill values, the selected columns, and the model.
/// Holds no dataset-derived data beyond what was fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBundle {
    pub format: String,
    pub version: u32,
    pub algorithm: Algorithm,
    pub config_hash: String,
    pub settings: SearchSettings,
    pub imputer: FittedImputer,
    pub families: Vec<FamilySelection>,
    pub selected: Vec<String>,
    /// The model in its own versioned envelope.
    pub model: serde_json::Value,
}

impl ModelBundle {
    pub fn new(r: &SearchResult<f64>, settings: SearchSettings) -> Self {
        let envelope = serialize_model(&r.pipeline.model);
        ModelBundle {
            format: BUNDLE_FORMAT.to_string(),
            version: FILE_VERSION,
            algorithm: r.algorithm,
            config_hash: r.config_hash.clone(),
            settings,
            imputer: r.pipeline.imputer.clone(),
            families: r.pipeline.families.clone(),
            selected: r.pipeline.selected.clone(),
            model: serde_json::from_slice(&envelope).expect("model envelope is valid JSON"),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("bundle serialization is infallible");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, TreeEnsembleModel<f64>), String> {
        let bundle: ModelBundle = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
        if bundle.format != BUNDLE_FORMAT || bundle.version != FILE_VERSION {
            return Err(format!(
                "expected {BUNDLE_FORMAT} version {FILE_VERSION}, found {} version {}",
                bundle.format, bundle.version
            ));
        }
        let envelope = serde_json::to_vec(&bundle.model).map_err(|e| e.to_string())?;
        let model = deserialize_model::<f64>(&envelope).map_err(|e| e.to_string())?;
        if model.feature_names != bundle.selected {
            return Err("model features differ from the selected features".to_string());
        }
        if model.algorithm != bundle.algorithm {
            return Err("model algorithm differs from the bundle header".to_string());
        }
        Ok((bundle, model))
    }

    pub fn load(path: &Path) -> Result<(Self, TreeEnsembleModel<f64>), CliError> {
        Self::from_bytes(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

pub fn to_pretty_json<S: Serialize>(value: &S) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serialization is infallible");
    out.push(b'\n');
    out
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub(crate) fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}
