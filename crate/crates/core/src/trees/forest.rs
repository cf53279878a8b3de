//! Single CART trees and bagged forests.

use rand::Rng;

use super::grow::{grow, Criterion, GrowParams, Sample, ThresholdRule};
use super::{check_training, prior_log_odds, Algorithm, FeatureSubsample, Hyperparameters, TreeEnsembleModel, TreeError};
use crate::preprocess::EncodedMatrix;
use crate::scalar::Scalar;
use crate::seed;

fn unit_samples<T: Scalar>(y: &[u8]) -> Vec<Sample<T>> {
    y.iter().enumerate().map(|(row, &y)| Sample { row, y, w: T::one(), g: T::zero(), h: T::zero() }).collect()
}

fn max_features(rule: FeatureSubsample, d: usize) -> Option<usize> {
    match rule {
        FeatureSubsample::All => None,
        other => Some(other.resolve(d)),
    }
}

/// One exhaustive-split Gini tree.
pub fn fit_cart<T: Scalar>(
    x: &EncodedMatrix<T>,
    y: &[u8],
    hp: &Hyperparameters,
    seed: u64,
) -> Result<TreeEnsembleModel<T>, TreeError> {
    check_training(x, y)?;
    hp.validate(Algorithm::Cart)?;
    let cols = x.columns();
    let params = GrowParams {
        max_depth: hp.max_depth,
        min_samples_leaf: hp.min_samples_leaf,
        max_features: max_features(hp.feature_subsample, x.n_features()),
        thresholds: ThresholdRule::Best,
        criterion: Criterion::Gini { vote: false },
    };
    let mut rng = seed::rng(seed::derive_seed(seed, "tree", 0));
    let tree = grow(&cols, &unit_samples(y), params, &mut rng);
    Ok(TreeEnsembleModel {
        algorithm: Algorithm::Cart,
        trees: vec![tree],
        tree_weights: vec![T::one()],
        base_score: prior_log_odds(y),
        feature_names: x.feature_names().to_vec(),
        hyperparameters: *hp,
        seed,
        n_training_rows: x.n_rows(),
    })
}

/// Random forest (bootstrap, exact thresholds) or extra trees (full sample,
/// random thresholds). Tree `t` uses the stream `derive_seed(seed, "tree", t)`.
pub fn fit_bagging<T: Scalar>(
    x: &EncodedMatrix<T>,
    y: &[u8],
    hp: &Hyperparameters,
    variant: Algorithm,
    seed: u64,
) -> Result<TreeEnsembleModel<T>, TreeError> {
    check_training(x, y)?;
    hp.validate(variant)?;
    let thresholds = match variant {
        Algorithm::RandomForest => ThresholdRule::Best,
        Algorithm::ExtraTrees => ThresholdRule::Random,
        other => return Err(TreeError::Hyperparameter(format!("{} is not a bagging variant", other.as_str()))),
    };
    let cols = x.columns();
    let params = GrowParams {
        max_depth: hp.max_depth,
        min_samples_leaf: hp.min_samples_leaf,
        max_features: max_features(hp.feature_subsample, x.n_features()),
        thresholds,
        criterion: Criterion::Gini { vote: false },
    };
    let base = unit_samples::<T>(y);
    let n = base.len();
    let mut trees = Vec::with_capacity(hp.n_estimators);
    for t in 0..hp.n_estimators {
        let mut rng = seed::rng(seed::derive_seed(seed, "tree", t as u64));
        let tree = if hp.bootstrap {
            let mut drawn: Vec<Sample<T>> = (0..n).map(|_| base[rng.gen_range(0..n)]).collect();
            drawn.sort_by_key(|s| s.row);
            grow(&cols, &drawn, params, &mut rng)
        } else {
            grow(&cols, &base, params, &mut rng)
        };
        trees.push(tree);
    }
    Ok(TreeEnsembleModel {
        algorithm: variant,
        tree_weights: vec![T::one(); trees.len()],
        trees,
        base_score: prior_log_odds(y),
        feature_names: x.feature_names().to_vec(),
        hyperparameters: *hp,
        seed,
        n_training_rows: x.n_rows(),
    })
}
