//! Brute-force configuration search with stratified cross-validation.
//!
//! A configuration fixes the imputer, one selector per column family and a
//! classifier. Every configuration is scored by k-fold CV on the training
//! split with imputation and selection refitted inside each fold. The best
//! configuration per classifier is refitted on the whole training split and
//! scored once on the held-out rows.

mod cache;
mod evaluate;
mod finalize;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{ColumnKind, Dataset};
use crate::preprocess::{
    stratified_kfold, stratified_split, CategoricalStrategy, ImputerSpec, NumericStrategy, PreprocessError, SplitIndices,
};
use crate::select::{SelectorMethod, SelectorSpec};
use crate::seed;
use crate::trees::{Algorithm, ClassifierSpec};

pub use cache::CvCache;
pub use evaluate::{evaluate_all, evaluate_config_cv, ConfigEvaluation, CvOutcome};
pub use finalize::{
    finalize, run_search, search_best, select_by_fir, FamilySelection, FittedPipeline, SearchOutcome, SearchResult,
};

/// Methods and k values searched for one column family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyAxis {
    pub methods: Vec<SelectorMethod>,
    pub ks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub numeric_imputers: Vec<NumericStrategy>,
    pub categorical_imputers: Vec<CategoricalStrategy>,
    pub numeric: FamilyAxis,
    pub nominal: FamilyAxis,
    pub ordinal: FamilyAxis,
    pub classifiers: Vec<ClassifierSpec>,
}

impl Default for GridSpec {
    fn default() -> Self {
        use SelectorMethod::*;
        GridSpec {
            numeric_imputers: vec![NumericStrategy::Mean, NumericStrategy::Median],
            categorical_imputers: vec![CategoricalStrategy::MostFrequent],
            numeric: FamilyAxis { methods: vec![Anova, MutualInfo, Rfe], ks: vec![1, 2, 4, 7, 11] },
            nominal: FamilyAxis { methods: vec![Chi2, MutualInfo, Rfe], ks: vec![1, 3, 5, 10] },
            ordinal: FamilyAxis { methods: vec![MutualInfo, Chi2], ks: vec![1, 3] },
            classifiers: Algorithm::ALL.into_iter().map(ClassifierSpec::default_for).collect(),
        }
    }
}

impl GridSpec {
    pub fn axis(&self, family: ColumnKind) -> &FamilyAxis {
        match family {
            ColumnKind::Numeric => &self.numeric,
            ColumnKind::Nominal => &self.nominal,
            ColumnKind::Ordinal => &self.ordinal,
        }
    }

    /// Number of configurations for one classifier.
    pub fn points_per_classifier(&self) -> usize {
        self.numeric_imputers.len()
            * self.categorical_imputers.len()
            * ColumnKind::ALL.iter().map(|&f| self.axis(f).methods.len() * self.axis(f).ks.len()).product::<usize>()
    }

    pub fn size(&self) -> usize {
        self.classifiers.len() * self.points_per_classifier()
    }

    /// Check every axis against the family sizes `[numeric, nominal, ordinal]`.
    pub fn validate(&self, family_sizes: [usize; 3]) -> Result<(), SearchError> {
        let empty = |a: &str| Err(SearchError::EmptyAxis(a.to_string()));
        if self.numeric_imputers.is_empty() {
            return empty("numeric_imputers");
        }
        if self.categorical_imputers.is_empty() {
            return empty("categorical_imputers");
        }
        if self.classifiers.is_empty() {
            return empty("classifiers");
        }
        for (family, &size) in ColumnKind::ALL.iter().zip(&family_sizes) {
            let axis = self.axis(*family);
            if axis.methods.is_empty() {
                return empty(&format!("{}.methods", family.as_str()));
            }
            if axis.ks.is_empty() {
                return empty(&format!("{}.ks", family.as_str()));
            }
            if let Some(&k) = axis.ks.iter().find(|&&k| k == 0 || k > size) {
                return Err(SearchError::K { family: family.as_str(), k, size });
            }
            if *family == ColumnKind::Numeric && axis.methods.contains(&SelectorMethod::Chi2) {
                return Err(SearchError::Chi2Numeric);
            }
        }
        for c in &self.classifiers {
            c.hyperparameters.validate(c.algorithm).map_err(|e| SearchError::Classifier(e.to_string()))?;
        }
        Ok(())
    }
}

/// One point of the search grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub imputer: ImputerSpec,
    /// Numeric, nominal, ordinal.
    pub selectors: [SelectorSpec; 3],
    pub classifier: ClassifierSpec,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn total_k(&self) -> usize {
        self.selectors.iter().map(|s| s.k).sum()
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialization is infallible");
        hex::encode(&Sha256::digest(&json)[..8])
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("grid axis '{0}' is empty")]
    EmptyAxis(String),
    #[error("{family} k = {k} outside 1..={size}")]
    K { family: &'static str, k: usize, size: usize },
    #[error("chi-squared cannot score the numeric family")]
    Chi2Numeric,
    #[error("invalid classifier: {0}")]
    Classifier(String),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("no results to choose from")]
    NoResults,
}

impl SearchError {
    pub(crate) fn stage(stage: &'static str, e: impl std::fmt::Display) -> Self {
        SearchError::Stage { stage, message: e.to_string() }
    }
}

/// Configurations in the order classifier, numeric imputer, categorical
/// imputer, then (method, k) for the numeric, nominal and ordinal families.
pub fn enumerate_configs(grid: &GridSpec, family_sizes: [usize; 3], seed: u64) -> Result<Vec<PipelineConfig>, SearchError> {
    grid.validate(family_sizes)?;
    let mut out = Vec::with_capacity(grid.size());
    let pairs = |f: ColumnKind| -> Vec<SelectorSpec> {
        let a = grid.axis(f);
        a.methods
            .iter()
            .flat_map(|&method| a.ks.iter().map(move |&k| SelectorSpec { family: f, method, k }))
            .collect()
    };
    let (num, nom, ord) = (pairs(ColumnKind::Numeric), pairs(ColumnKind::Nominal), pairs(ColumnKind::Ordinal));
    for classifier in &grid.classifiers {
        for &numeric in &grid.numeric_imputers {
            for &categorical in &grid.categorical_imputers {
                for &a in &num {
                    for &b in &nom {
                        for &c in &ord {
                            out.push(PipelineConfig {
                                imputer: ImputerSpec { numeric, categorical },
                                selectors: [a, b, c],
                                classifier: *classifier,
                                seed,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Root seed, split ratio and fold count of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub seed: u64,
    pub train_ratio: f64,
    pub n_folds: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings { seed: 42, train_ratio: 0.7, n_folds: 5 }
    }
}

/// Train/test split and CV folds, all as dataset row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataPlan {
    pub split: SplitIndices,
    pub folds: Vec<Vec<usize>>,
}

impl DataPlan {
    pub fn new(ds: &Dataset, settings: &SearchSettings) -> Result<Self, SearchError> {
        let split = stratified_split(ds.target(), settings.train_ratio, seed::derive_seed(settings.seed, "split", 0))?;
        let train_targets: Vec<u8> = split.train.iter().map(|&r| ds.target()[r]).collect();
        let folds = stratified_kfold(&train_targets, settings.n_folds, seed::derive_seed(settings.seed, "folds", 0))?
            .into_iter()
            .map(|f| f.into_iter().map(|p| split.train[p]).collect())
            .collect();
        Ok(DataPlan { split, folds })
    }

    /// Training rows of fold `f`: the split's training rows outside the fold.
    pub fn fold_train(&self, f: usize) -> Vec<usize> {
        let held = &self.folds[f];
        self.split.train.iter().copied().filter(|r| held.binary_search(r).is_err()).collect()
    }
}

/// `[numeric, nominal, ordinal]` column counts of a dataset.
pub fn family_sizes(ds: &Dataset) -> [usize; 3] {
    let mut s = [0; 3];
    for c in &ds.schema().columns {
        s[ColumnKind::ALL.iter().position(|k| *k == c.kind).unwrap_or(0)] += 1;
    }
    s
}
