//! Post-hoc explanations: impurity and permutation importance, partial
//! dependence, and exact interventional Shapley values.

mod importance;
mod pdp;
mod shapley;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::trees::TreeError;

pub use importance::{impurity_importance, mean_abs_shap, permutation_importance, tree_gains};
pub use pdp::{default_grid, pdp, PdpCurve, PDP_MAX_POINTS};
pub use shapley::{
    background_sample, shapley_exact, waterfall_data, OutputSpace, ShapRecord, WaterfallStep, BACKGROUND_ROWS,
    MAX_SHAPLEY_FEATURES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMethod {
    Impurity,
    Permutation,
    MeanAbsShap,
}

impl ImportanceMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ImportanceMethod::Impurity => "impurity",
            ImportanceMethod::Permutation => "permutation",
            ImportanceMethod::MeanAbsShap => "mean_abs_shap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector<T> {
    pub method: ImportanceMethod,
    pub names: Vec<String>,
    pub values: Vec<T>,
    pub normalized: bool,
    /// Set when the model has no split, so every importance is zero.
    pub degenerate: bool,
}

impl<T: Scalar> ImportanceVector<T> {
    /// Feature indices by decreasing importance; ties keep feature order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&a, &b| {
            self.values[b].partial_cmp(&self.values[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        idx
    }

    pub fn top(&self) -> Option<&str> {
        self.ranking().first().map(|&i| self.names[i].as_str())
    }

    pub fn get(&self, name: &str) -> Option<T> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExplainError {
    #[error(transparent)]
    Model(#[from] TreeError),
    #[error("feature '{0}' is not a model input")]
    UnknownFeature(String),
    #[error("grid must be non-empty")]
    EmptyGrid,
    #[error("exact Shapley enumeration supports at most {max} features, model has {found}; a sampling estimator would be needed")]
    TooManyFeatures { found: usize, max: usize },
    #[error("background sample is empty")]
    EmptyBackground,
    #[error("instance has {found} values, model expects {expected}")]
    Instance { found: usize, expected: usize },
    #[error("repeats must be at least 1")]
    Repeats,
    #[error("{labels} labels for {rows} rows")]
    Labels { labels: usize, rows: usize },
}
