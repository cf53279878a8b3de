//! CART trees and the four ensembles built on the same grower.
//!
//! Splits send `x[feature] < threshold` left. Thresholds are midpoints of
//! adjacent distinct training values (exact search) or uniform draws inside
//! the node range (extra trees).

mod boosting;
mod forest;
mod format;
mod grow;

use serde::{Deserialize, Serialize};

use crate::preprocess::EncodedMatrix;
use crate::scalar::{sigmoid, Scalar};

pub use boosting::{
    fit_adaboost, fit_gradient_boosting, newton_gain, newton_leaf_weight, samme_alpha, samme_reweight, ALPHA_CAP,
};
pub use forest::{fit_bagging, fit_cart};
pub use format::{deserialize_model, serialize_model, ModelFormatError, MODEL_FORMAT, MODEL_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Cart,
    RandomForest,
    ExtraTrees,
    Adaboost,
    Xgboost,
}

impl Algorithm {
    pub const ENSEMBLES: [Algorithm; 4] =
        [Algorithm::RandomForest, Algorithm::ExtraTrees, Algorithm::Adaboost, Algorithm::Xgboost];
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Cart,
        Algorithm::RandomForest,
        Algorithm::ExtraTrees,
        Algorithm::Adaboost,
        Algorithm::Xgboost,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Cart => "cart",
            Algorithm::RandomForest => "random_forest",
            Algorithm::ExtraTrees => "extra_trees",
            Algorithm::Adaboost => "adaboost",
            Algorithm::Xgboost => "xgboost",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::Cart => "Decision Trees",
            Algorithm::RandomForest => "Random Forest",
            Algorithm::ExtraTrees => "Extra Trees",
            Algorithm::Adaboost => "AdaBoost",
            Algorithm::Xgboost => "XGBoost",
        }
    }

    pub fn parse(s: &str) -> Option<Algorithm> {
        let s = s.trim().to_ascii_lowercase();
        Algorithm::ALL.into_iter().find(|a| a.as_str() == s || a.short() == s)
    }

    pub fn short(self) -> &'static str {
        match self {
            Algorithm::Cart => "dt",
            Algorithm::RandomForest => "rf",
            Algorithm::ExtraTrees => "et",
            Algorithm::Adaboost => "ada",
            Algorithm::Xgboost => "xgb",
        }
    }
}

/// How many features a node may consider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubsample {
    All,
    /// `ceil(sqrt(d))`.
    Sqrt,
    Count(usize),
}

impl FeatureSubsample {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            FeatureSubsample::All => d,
            FeatureSubsample::Sqrt => ((d as f64).sqrt().ceil() as usize).clamp(1, d.max(1)),
            FeatureSubsample::Count(m) => m.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    pub n_estimators: usize,
    /// `None` grows until purity or `min_samples_leaf`.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub gamma: f64,
    pub feature_subsample: FeatureSubsample,
    pub bootstrap: bool,
}

impl Hyperparameters {
    pub fn default_for(algorithm: Algorithm) -> Self {
        let base = Hyperparameters {
            n_estimators: 100,
            max_depth: None,
            min_samples_leaf: 1,
            learning_rate: 0.1,
            l2: 1.0,
            gamma: 0.0,
            feature_subsample: FeatureSubsample::All,
            bootstrap: false,
        };
        match algorithm {
            Algorithm::Cart => Hyperparameters { n_estimators: 1, ..base },
            Algorithm::RandomForest => {
                Hyperparameters { feature_subsample: FeatureSubsample::Sqrt, bootstrap: true, ..base }
            }
            Algorithm::ExtraTrees => Hyperparameters { feature_subsample: FeatureSubsample::Sqrt, ..base },
            Algorithm::Adaboost => Hyperparameters { n_estimators: 50, max_depth: Some(1), ..base },
            Algorithm::Xgboost => Hyperparameters { max_depth: Some(3), ..base },
        }
    }

    pub fn validate(&self, algorithm: Algorithm) -> Result<(), TreeError> {
        let bad = |m: &str| Err(TreeError::Hyperparameter(m.to_string()));
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1");
        }
        if matches!(self.feature_subsample, FeatureSubsample::Count(0)) {
            return bad("feature_subsample count must be at least 1");
        }
        match algorithm {
            Algorithm::Cart | Algorithm::RandomForest | Algorithm::ExtraTrees if self.n_estimators == 0 => {
                bad("n_estimators must be at least 1")
            }
            Algorithm::Xgboost if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) => {
                bad("learning_rate must be positive")
            }
            Algorithm::Xgboost if !(self.l2 >= 0.0 && self.l2.is_finite()) => bad("l2 must be non-negative"),
            Algorithm::Xgboost if !(self.gamma >= 0.0 && self.gamma.is_finite()) => {
                bad("gamma must be non-negative")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub algorithm: Algorithm,
    pub hyperparameters: Hyperparameters,
}

impl ClassifierSpec {
    pub fn default_for(algorithm: Algorithm) -> Self {
        ClassifierSpec { algorithm, hyperparameters: Hyperparameters::default_for(algorithm) }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TreeError {
    #[error("training matrix has no rows")]
    Empty,
    #[error("{labels} labels for {rows} rows")]
    Labels { labels: usize, rows: usize },
    #[error("both classes must be present")]
    SingleClass,
    #[error("invalid hyperparameters: {0}")]
    Hyperparameter(String),
    #[error("input features {found:?} do not match model features {expected:?}")]
    FeatureMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("margin output is only defined for gradient boosting")]
    NoMargin,
}

/// Payload of a terminal node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafValue<T> {
    /// `[p(notckd), p(ckd)]`.
    Distribution([T; 2]),
    Vote(u8),
    Score(T),
}

/// `weight` is the summed sample weight reaching the node (bootstrap
/// multiplicity, boosting weight, or plain count). `impurity` is the Gini
/// impurity of the labels under that weighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node<T> {
    Split { feature: usize, threshold: T, left: usize, right: usize, n_samples: usize, weight: T, impurity: T },
    Leaf { value: LeafValue<T>, n_samples: usize, weight: T, impurity: T },
}

impl<T: Scalar> Node<T> {
    pub fn n_samples(&self) -> usize {
        match *self {
            Node::Split { n_samples, .. } | Node::Leaf { n_samples, .. } => n_samples,
        }
    }

    pub fn weight(&self) -> T {
        match *self {
            Node::Split { weight, .. } | Node::Leaf { weight, .. } => weight,
        }
    }

    pub fn impurity(&self) -> T {
        match *self {
            Node::Split { impurity, .. } | Node::Leaf { impurity, .. } => impurity,
        }
    }
}

/// Nodes in preorder; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn leaf(value: LeafValue<T>, n_samples: usize, weight: T, impurity: T) -> Self {
        Tree { nodes: vec![Node::Leaf { value, n_samples, weight, impurity }] }
    }

    pub fn leaf_index(&self, x: &[T]) -> usize {
        let mut i = 0;
        while let Node::Split { feature, threshold, left, right, .. } = self.nodes[i] {
            i = if x[feature] < threshold { left } else { right };
        }
        i
    }

    pub fn evaluate(&self, x: &[T]) -> LeafValue<T> {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!("leaf_index stops at leaves"),
        }
    }

    pub fn depth(&self) -> usize {
        fn go<T: Scalar>(t: &Tree<T>, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Features tested by at least one split.
    pub fn used_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

/// A fitted model: trees, per-tree weights and everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsembleModel<T> {
    pub algorithm: Algorithm,
    pub trees: Vec<Tree<T>>,
    pub tree_weights: Vec<T>,
    /// Log-odds prior of the positive class.
    pub base_score: T,
    pub feature_names: Vec<String>,
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
    pub n_training_rows: usize,
}

impl<T: Scalar> TreeEnsembleModel<T> {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Probability of the positive class for one encoded row.
    pub fn predict_proba_row(&self, x: &[T]) -> T {
        match self.algorithm {
            Algorithm::Cart | Algorithm::RandomForest | Algorithm::ExtraTrees => {
                let mut num = T::zero();
                let mut den = T::zero();
                for (tree, &w) in self.trees.iter().zip(&self.tree_weights) {
                    if let LeafValue::Distribution(p) = tree.evaluate(x) {
                        num = num + w * p[1];
                        den = den + w;
                    }
                }
                if den > T::zero() {
                    num / den
                } else {
                    sigmoid(self.base_score)
                }
            }
            Algorithm::Adaboost => {
                let mut num = T::zero();
                let mut den = T::zero();
                for (tree, &a) in self.trees.iter().zip(&self.tree_weights) {
                    if let LeafValue::Vote(v) = tree.evaluate(x) {
                        if v == 1 {
                            num = num + a;
                        }
                        den = den + a;
                    }
                }
                if den > T::zero() {
                    num / den
                } else {
                    sigmoid(self.base_score)
                }
            }
            Algorithm::Xgboost => sigmoid(self.margin_row_unchecked(x)),
        }
    }

    fn margin_row_unchecked(&self, x: &[T]) -> T {
        let mut m = self.base_score;
        for (tree, &w) in self.trees.iter().zip(&self.tree_weights) {
            if let LeafValue::Score(s) = tree.evaluate(x) {
                m = m + w * s;
            }
        }
        m
    }

    /// Raw additive score `base + sum(eta * tree(x))`; gradient boosting only.
    pub fn predict_margin_row(&self, x: &[T]) -> Result<T, TreeError> {
        if self.algorithm != Algorithm::Xgboost {
            return Err(TreeError::NoMargin);
        }
        Ok(self.margin_row_unchecked(x))
    }

    pub fn check_features(&self, x: &EncodedMatrix<T>) -> Result<(), TreeError> {
        if x.feature_names() != self.feature_names.as_slice() {
            return Err(TreeError::FeatureMismatch {
                expected: self.feature_names.clone(),
                found: x.feature_names().to_vec(),
            });
        }
        Ok(())
    }

    pub fn predict_proba(&self, x: &EncodedMatrix<T>) -> Result<Vec<T>, TreeError> {
        self.check_features(x)?;
        Ok((0..x.n_rows()).map(|i| self.predict_proba_row(x.row(i))).collect())
    }

    /// Hard labels; ckd when `p >= 0.5`.
    pub fn predict(&self, x: &EncodedMatrix<T>) -> Result<Vec<u8>, TreeError> {
        let half = T::cast(0.5);
        Ok(self.predict_proba(x)?.into_iter().map(|p| u8::from(p >= half)).collect())
    }

    pub fn predict_margin(&self, x: &EncodedMatrix<T>) -> Result<Vec<T>, TreeError> {
        self.check_features(x)?;
        (0..x.n_rows()).map(|i| self.predict_margin_row(x.row(i))).collect()
    }

    /// Human-readable listing of every tree.
    pub fn dump(&self) -> String {
        format::dump(self)
    }
}

/// Fit any supported classifier.
pub fn fit<T: Scalar>(
    spec: &ClassifierSpec,
    x: &EncodedMatrix<T>,
    y: &[u8],
    seed: u64,
) -> Result<TreeEnsembleModel<T>, TreeError> {
    let hp = &spec.hyperparameters;
    match spec.algorithm {
        Algorithm::Cart => fit_cart(x, y, hp, seed),
        Algorithm::RandomForest | Algorithm::ExtraTrees => fit_bagging(x, y, hp, spec.algorithm, seed),
        Algorithm::Adaboost => fit_adaboost(x, y, hp, seed),
        Algorithm::Xgboost => fit_gradient_boosting(x, y, hp, seed),
    }
}

/// Gini impurity `1 - sum p_i^2` of a weighted class count.
pub fn gini_impurity<T: Scalar>(counts: [T; 2]) -> Option<T> {
    let total = counts[0] + counts[1];
    if !(total > T::zero()) {
        return None;
    }
    let p0 = counts[0] / total;
    let p1 = counts[1] / total;
    Some(T::one() - p0 * p0 - p1 * p1)
}

pub(crate) fn check_training<T: Scalar>(x: &EncodedMatrix<T>, y: &[u8]) -> Result<(), TreeError> {
    if x.n_rows() == 0 {
        return Err(TreeError::Empty);
    }
    if y.len() != x.n_rows() {
        return Err(TreeError::Labels { labels: y.len(), rows: x.n_rows() });
    }
    Ok(())
}

pub(crate) fn prior_log_odds<T: Scalar>(y: &[u8]) -> T {
    let pos = y.iter().filter(|&&v| v == 1).count();
    let p = T::from_count(pos) / T::from_count(y.len());
    crate::scalar::logit(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_values() {
        assert_eq!(gini_impurity([10.0_f64, 0.0]), Some(0.0));
        assert_eq!(gini_impurity([250.0_f64, 150.0]), Some(0.46875));
        assert_eq!(gini_impurity([1.0_f64, 1.0]), Some(0.5));
        assert_eq!(gini_impurity([0.0_f64, 0.0]), None);
        assert_eq!(gini_impurity([250.0_f32, 150.0]), Some(0.46875));
    }

    #[test]
    fn sqrt_subsample() {
        assert_eq!(FeatureSubsample::Sqrt.resolve(24), 5);
        assert_eq!(FeatureSubsample::Sqrt.resolve(3), 2);
        assert_eq!(FeatureSubsample::Sqrt.resolve(1), 1);
        assert_eq!(FeatureSubsample::Count(9).resolve(3), 3);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(Algorithm::parse(a.as_str()), Some(a));
            assert_eq!(Algorithm::parse(a.short()), Some(a));
        }
        assert_eq!(Algorithm::parse("svm"), None);
    }

    #[test]
    fn hyperparameter_validation() {
        let mut hp = Hyperparameters::default_for(Algorithm::Xgboost);
        assert!(hp.validate(Algorithm::Xgboost).is_ok());
        hp.learning_rate = 0.0;
        assert!(hp.validate(Algorithm::Xgboost).is_err());
        let mut hp = Hyperparameters::default_for(Algorithm::RandomForest);
        hp.min_samples_leaf = 0;
        assert!(hp.validate(Algorithm::RandomForest).is_err());
    }
}
