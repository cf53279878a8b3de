//! Run configuration file (TOML).
//!
//! Every key is optional; unknown keys are rejected. Defaults:
//!
//! | key | default |
//! |---|---|
//! | `dataset` | bundled UCI CKD ARFF file |
//! | `output_dir` | `ckdx-out` |
//! | `seed` | 42 |
//! | `train_ratio` | 0.7 |
//! | `cv_folds` | 5 |
//! | `permutation_repeats` | 10 |
//! | `emit_svg` | false |
//! | `[grid]` | the default search grid |
//! | `[hyperparameters.<algorithm>]` | per-algorithm defaults |
//!
//! Relative `dataset` and `output_dir` paths resolve against the directory
//! holding the config file.

use std::path::{Path, PathBuf};

use ckdx_core::preprocess::{CategoricalStrategy, NumericStrategy};
use ckdx_core::search::{FamilyAxis, GridSpec, SearchSettings};
use ckdx_core::trees::{Algorithm, ClassifierSpec, FeatureSubsample, Hyperparameters};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_OUTPUT_DIR: &str = "ckdx-out";
pub const DEFAULT_PERMUTATION_REPEATS: usize = 10;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub dataset: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub train_ratio: Option<f64>,
    pub cv_folds: Option<usize>,
    pub permutation_repeats: Option<usize>,
    pub emit_svg: Option<bool>,
    #[serde(default)]
    pub grid: GridOverrides,
    #[serde(default)]
    pub hyperparameters: HyperparameterOverrides,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    pub numeric_imputers: Option<Vec<NumericStrategy>>,
    pub categorical_imputers: Option<Vec<CategoricalStrategy>>,
    pub numeric: Option<FamilyAxis>,
    pub nominal: Option<FamilyAxis>,
    pub ordinal: Option<FamilyAxis>,
    pub classifiers: Option<Vec<Algorithm>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperparameterOverrides {
    pub cart: Option<HyperparameterPatch>,
    pub random_forest: Option<HyperparameterPatch>,
    pub extra_trees: Option<HyperparameterPatch>,
    pub adaboost: Option<HyperparameterPatch>,
    pub xgboost: Option<HyperparameterPatch>,
}

impl HyperparameterOverrides {
    fn get(&self, algorithm: Algorithm) -> Option<&HyperparameterPatch> {
        match algorithm {
            Algorithm::Cart => self.cart.as_ref(),
            Algorithm::RandomForest => self.random_forest.as_ref(),
            Algorithm::ExtraTrees => self.extra_trees.as_ref(),
            Algorithm::Adaboost => self.adaboost.as_ref(),
            Algorithm::Xgboost => self.xgboost.as_ref(),
        }
    }
}

/// Partial hyperparameters; absent keys keep the algorithm default.
/// `max_depth = 0` means unlimited depth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperparameterPatch {
    pub n_estimators: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: Option<usize>,
    pub learning_rate: Option<f64>,
    pub l2: Option<f64>,
    pub gamma: Option<f64>,
    pub feature_subsample: Option<FeatureSubsample>,
    pub bootstrap: Option<bool>,
}

impl HyperparameterPatch {
    pub fn apply(&self, mut hp: Hyperparameters) -> Hyperparameters {
        if let Some(v) = self.n_estimators {
            hp.n_estimators = v;
        }
        if let Some(v) = self.max_depth {
            hp.max_depth = (v > 0).then_some(v);
        }
        if let Some(v) = self.min_samples_leaf {
            hp.min_samples_leaf = v;
        }
        if let Some(v) = self.learning_rate {
            hp.learning_rate = v;
        }
        if let Some(v) = self.l2 {
            hp.l2 = v;
        }
        if let Some(v) = self.gamma {
            hp.gamma = v;
        }
        if let Some(v) = self.feature_subsample {
            hp.feature_subsample = v;
        }
        if let Some(v) = self.bootstrap {
            hp.bootstrap = v;
        }
        hp
    }
}

/// A config file with every default filled in and paths resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    /// `None` selects the bundled dataset.
    pub dataset: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub settings: SearchSettings,
    pub permutation_repeats: usize,
    pub emit_svg: bool,
    pub grid: GridSpec,
}

impl RunConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fill defaults; relative paths are joined onto `base`.
    pub fn resolve(&self, base: &Path) -> ResolvedConfig {
        let join = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        let defaults = SearchSettings::default();
        let g = &self.grid;
        let d = GridSpec::default();
        let algorithms = g.classifiers.clone().unwrap_or_else(|| Algorithm::ALL.to_vec());
        let classifiers = algorithms
            .into_iter()
            .map(|algorithm| {
                let base = Hyperparameters::default_for(algorithm);
                let hyperparameters = self.hyperparameters.get(algorithm).map_or(base, |p| p.apply(base));
                ClassifierSpec { algorithm, hyperparameters }
            })
            .collect();
        ResolvedConfig {
            dataset: self.dataset.as_ref().map(join),
            output_dir: join(self.output_dir.as_ref().unwrap_or(&PathBuf::from(DEFAULT_OUTPUT_DIR))),
            settings: SearchSettings {
                seed: self.seed.unwrap_or(defaults.seed),
                train_ratio: self.train_ratio.unwrap_or(defaults.train_ratio),
                n_folds: self.cv_folds.unwrap_or(defaults.n_folds),
            },
            permutation_repeats: self.permutation_repeats.unwrap_or(DEFAULT_PERMUTATION_REPEATS),
            emit_svg: self.emit_svg.unwrap_or(false),
            grid: GridSpec {
                numeric_imputers: g.numeric_imputers.clone().unwrap_or(d.numeric_imputers),
                categorical_imputers: g.categorical_imputers.clone().unwrap_or(d.categorical_imputers),
                numeric: g.numeric.clone().unwrap_or(d.numeric),
                nominal: g.nominal.clone().unwrap_or(d.nominal),
                ordinal: g.ordinal.clone().unwrap_or(d.ordinal),
                classifiers,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ckdx_core::select::SelectorMethod;

    #[test]
    fn empty_file_gives_defaults() {
        let r = RunConfigFile::parse("").unwrap().resolve(Path::new("/cfg"));
        assert_eq!(r.grid, GridSpec::default());
        assert_eq!(r.settings, SearchSettings::default());
        assert_eq!(r.output_dir, PathBuf::from("/cfg/ckdx-out"));
        assert_eq!(r.dataset, None);
        assert_eq!(r.permutation_repeats, 10);
        assert!(!r.emit_svg);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfigFile::parse("sed = 1").is_err());
        assert!(RunConfigFile::parse("[grid]\nclassifier = [\"cart\"]").is_err());
        assert!(RunConfigFile::parse("[hyperparameters.xgboost]\neta = 0.3").is_err());
    }

    #[test]
    fn overrides_apply() {
        let text = r#"
            dataset = "data/ckd.arff"
            output_dir = "/abs/out"
            seed = 7
            cv_folds = 3
            [grid]
            classifiers = ["xgboost", "cart"]
            numeric = { methods = ["anova"], ks = [2] }
            [hyperparameters.xgboost]
            n_estimators = 20
            max_depth = 0
            feature_subsample = { count = 2 }
        "#;
        let r = RunConfigFile::parse(text).unwrap().resolve(Path::new("/cfg"));
        assert_eq!(r.dataset, Some(PathBuf::from("/cfg/data/ckd.arff")));
        assert_eq!(r.output_dir, PathBuf::from("/abs/out"));
        assert_eq!(r.settings.seed, 7);
        assert_eq!(r.settings.n_folds, 3);
        assert_eq!(r.grid.numeric, FamilyAxis { methods: vec![SelectorMethod::Anova], ks: vec![2] });
        let xgb = r.grid.classifiers[0];
        assert_eq!(xgb.algorithm, Algorithm::Xgboost);
        assert_eq!(xgb.hyperparameters.n_estimators, 20);
        assert_eq!(xgb.hyperparameters.max_depth, None);
        assert_eq!(xgb.hyperparameters.feature_subsample, FeatureSubsample::Count(2));
        assert_eq!(r.grid.classifiers[1], ClassifierSpec::default_for(Algorithm::Cart));
    }
}
