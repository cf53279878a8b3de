//! SAMME AdaBoost over Gini stumps and second-order gradient boosting.

use super::grow::{grow, Criterion, GrowParams, Sample, ThresholdRule};
use super::{check_training, prior_log_odds, Algorithm, FeatureSubsample, Hyperparameters, LeafValue, TreeEnsembleModel, TreeError};
use crate::preprocess::EncodedMatrix;
use crate::scalar::{sigmoid, Scalar};
use crate::seed;

/// `ln(1e9)`, the largest round weight AdaBoost assigns.
pub const ALPHA_CAP: f64 = 20.723_265_836_946_41;

/// Binary SAMME round weight `ln((1 - err) / err)`, capped at [`ALPHA_CAP`].
pub fn samme_alpha<T: Scalar>(err: T) -> T {
    let cap = T::cast(ALPHA_CAP);
    if !(err > T::zero()) {
        return cap;
    }
    ((T::one() - err) / err).ln().min(cap)
}

/// Multiply misclassified weights by `exp(alpha)` and renormalise to sum 1.
pub fn samme_reweight<T: Scalar>(weights: &mut [T], missed: &[bool], alpha: T) {
    let boost = alpha.exp();
    for (w, &m) in weights.iter_mut().zip(missed) {
        if m {
            *w = *w * boost;
        }
    }
    let total: T = weights.iter().copied().sum();
    for w in weights.iter_mut() {
        *w = *w / total;
    }
}

fn max_features(rule: FeatureSubsample, d: usize) -> Option<usize> {
    match rule {
        FeatureSubsample::All => None,
        other => Some(other.resolve(d)),
    }
}

/// AdaBoost with `n_estimators` rounds. Stops early when a round has zero
/// error (that stump is kept with the capped weight) or error of at least
/// one half (that stump is discarded).
pub fn fit_adaboost<T: Scalar>(
    x: &EncodedMatrix<T>,
    y: &[u8],
    hp: &Hyperparameters,
    seed: u64,
) -> Result<TreeEnsembleModel<T>, TreeError> {
    check_training(x, y)?;
    hp.validate(Algorithm::Adaboost)?;
    let n = y.len();
    let cols = x.columns();
    let params = GrowParams {
        max_depth: hp.max_depth,
        min_samples_leaf: hp.min_samples_leaf,
        max_features: max_features(hp.feature_subsample, x.n_features()),
        thresholds: ThresholdRule::Best,
        criterion: Criterion::Gini { vote: true },
    };
    let mut weights = vec![T::one() / T::from_count(n); n];
    let mut trees = Vec::new();
    let mut alphas = Vec::new();
    for t in 0..hp.n_estimators {
        let samples: Vec<Sample<T>> = y
            .iter()
            .zip(&weights)
            .enumerate()
            .map(|(row, (&y, &w))| Sample { row, y, w, g: T::zero(), h: T::zero() })
            .collect();
        let mut rng = seed::rng(seed::derive_seed(seed, "tree", t as u64));
        let stump = grow(&cols, &samples, params, &mut rng);
        let missed: Vec<bool> = (0..n)
            .map(|i| match stump.evaluate(x.row(i)) {
                LeafValue::Vote(v) => v != y[i],
                _ => true,
            })
            .collect();
        let total: T = weights.iter().copied().sum();
        let err = weights.iter().zip(&missed).filter(|(_, &m)| m).map(|(&w, _)| w).sum::<T>() / total;
        if err >= T::cast(0.5) {
            break;
        }
        let alpha = samme_alpha(err);
        trees.push(stump);
        alphas.push(alpha);
        if !(err > T::zero()) {
            break;
        }
        samme_reweight(&mut weights, &missed, alpha);
    }
    Ok(TreeEnsembleModel {
        algorithm: Algorithm::Adaboost,
        trees,
        tree_weights: alphas,
        base_score: prior_log_odds(y),
        feature_names: x.feature_names().to_vec(),
        hyperparameters: *hp,
        seed,
        n_training_rows: n,
    })
}

/// Logistic-loss Newton boosting. Every stored tree weight equals the
/// learning rate.
pub fn fit_gradient_boosting<T: Scalar>(
    x: &EncodedMatrix<T>,
    y: &[u8],
    hp: &Hyperparameters,
    seed: u64,
) -> Result<TreeEnsembleModel<T>, TreeError> {
    check_training(x, y)?;
    hp.validate(Algorithm::Xgboost)?;
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(TreeError::SingleClass);
    }
    let n = y.len();
    let cols = x.columns();
    let eta = T::cast(hp.learning_rate);
    let params = GrowParams {
        max_depth: hp.max_depth,
        min_samples_leaf: hp.min_samples_leaf,
        max_features: max_features(hp.feature_subsample, x.n_features()),
        thresholds: ThresholdRule::Best,
        criterion: Criterion::Newton { lambda: T::cast(hp.l2), gamma: T::cast(hp.gamma) },
    };
    let base: T = prior_log_odds(y);
    let mut margin = vec![base; n];
    let mut trees = Vec::with_capacity(hp.n_estimators);
    for t in 0..hp.n_estimators {
        let samples: Vec<Sample<T>> = (0..n)
            .map(|i| {
                let p = sigmoid(margin[i]);
                let yi = T::from_count(usize::from(y[i]));
                Sample { row: i, y: y[i], w: T::one(), g: p - yi, h: p * (T::one() - p) }
            })
            .collect();
        let mut rng = seed::rng(seed::derive_seed(seed, "tree", t as u64));
        let tree = grow(&cols, &samples, params, &mut rng);
        for (i, m) in margin.iter_mut().enumerate() {
            if let LeafValue::Score(s) = tree.evaluate(x.row(i)) {
                *m = *m + eta * s;
            }
        }
        trees.push(tree);
    }
    Ok(TreeEnsembleModel {
        algorithm: Algorithm::Xgboost,
        tree_weights: vec![eta; trees.len()],
        trees,
        base_score: base,
        feature_names: x.feature_names().to_vec(),
        hyperparameters: *hp,
        seed,
        n_training_rows: n,
    })
}

/// Newton leaf weight `-G / (H + lambda)`.
pub fn newton_leaf_weight<T: Scalar>(g: T, h: T, lambda: T) -> T {
    -g / (h + lambda)
}

/// Split gain `0.5 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)] - gamma`.
pub fn newton_gain<T: Scalar>(left: (T, T), right: (T, T), lambda: T, gamma: T) -> T {
    let term = |g: T, h: T| g * g / (h + lambda);
    let (gl, hl) = left;
    let (gr, hr) = right;
    T::cast(0.5) * (term(gl, hl) + term(gr, hr) - term(gl + gr, hl + hr)) - gamma
}
