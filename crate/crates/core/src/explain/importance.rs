use rand::seq::SliceRandom;

use super::{ExplainError, ImportanceMethod, ImportanceVector, ShapRecord};
use crate::preprocess::EncodedMatrix;
use crate::scalar::Scalar;
use crate::seed;
use crate::trees::{Node, Tree, TreeEnsembleModel};

/// Per-feature sum of `w * imp - w_L * imp_L - w_R * imp_R` over a tree's splits.
pub fn tree_gains<T: Scalar>(tree: &Tree<T>, n_features: usize) -> Vec<T> {
    let mut g = vec![T::zero(); n_features];
    for node in &tree.nodes {
        if let Node::Split { feature, left, right, weight, impurity, .. } = *node {
            let l = &tree.nodes[left];
            let r = &tree.nodes[right];
            g[feature] = g[feature] + weight * impurity - l.weight() * l.impurity() - r.weight() * r.impurity();
        }
    }
    g
}

/// Tree-weighted mean of [`tree_gains`], normalised to sum 1.
pub fn impurity_importance<T: Scalar>(model: &TreeEnsembleModel<T>) -> ImportanceVector<T> {
    let d = model.n_features();
    let mut acc = vec![T::zero(); d];
    let mut wsum = T::zero();
    for (tree, &w) in model.trees.iter().zip(&model.tree_weights) {
        for (a, g) in acc.iter_mut().zip(tree_gains(tree, d)) {
            *a = *a + w * g;
        }
        wsum = wsum + w;
    }
    if wsum > T::zero() {
        for a in acc.iter_mut() {
            *a = *a / wsum;
        }
    }
    let total: T = acc.iter().copied().sum();
    let degenerate = !(total > T::zero());
    if !degenerate {
        for a in acc.iter_mut() {
            *a = *a / total;
        }
    }
    ImportanceVector {
        method: ImportanceMethod::Impurity,
        names: model.feature_names.clone(),
        values: if degenerate { vec![T::zero(); d] } else { acc },
        normalized: !degenerate,
        degenerate,
    }
}

fn hits<T: Scalar>(model: &TreeEnsembleModel<T>, x: &EncodedMatrix<T>, y: &[u8]) -> Result<usize, ExplainError> {
    let p = model.predict(x)?;
    Ok(p.iter().zip(y).filter(|(a, b)| a == b).count())
}

/// Baseline accuracy minus mean accuracy with one column shuffled. Repeat
/// `r` of feature `j` shuffles with `derive_seed(seed, "permutation", j * repeats + r)`.
pub fn permutation_importance<T: Scalar>(
    model: &TreeEnsembleModel<T>,
    x: &EncodedMatrix<T>,
    y: &[u8],
    repeats: usize,
    seed: u64,
) -> Result<ImportanceVector<T>, ExplainError> {
    if repeats == 0 {
        return Err(ExplainError::Repeats);
    }
    if y.len() != x.n_rows() {
        return Err(ExplainError::Labels { labels: y.len(), rows: x.n_rows() });
    }
    model.check_features(x)?;
    let baseline = hits(model, x, y)?;
    // Differences of hit counts keep an unchanged prediction at exactly zero.
    let scale = T::from_count(repeats * y.len().max(1));
    let mut values = Vec::with_capacity(x.n_features());
    for j in 0..x.n_features() {
        let original = x.column(j);
        let mut total = 0usize;
        for r in 0..repeats {
            let mut rng = seed::rng(seed::derive_seed(seed, "permutation", (j * repeats + r) as u64));
            let mut col = original.clone();
            col.shuffle(&mut rng);
            let mut xp = x.clone();
            for (i, v) in col.into_iter().enumerate() {
                xp.set(i, j, v);
            }
            total += hits(model, &xp, y)?;
        }
        let drop = T::from_count(baseline * repeats) - T::from_count(total);
        values.push(drop / scale);
    }
    Ok(ImportanceVector {
        method: ImportanceMethod::Permutation,
        names: model.feature_names.clone(),
        values,
        normalized: false,
        degenerate: false,
    })
}

/// Mean absolute attribution per feature over a set of records.
pub fn mean_abs_shap<T: Scalar>(records: &[ShapRecord<T>]) -> Option<ImportanceVector<T>> {
    let first = records.first()?;
    let d = first.phi.len();
    let mut values = vec![T::zero(); d];
    for r in records {
        for (v, p) in values.iter_mut().zip(&r.phi) {
            *v = *v + p.abs();
        }
    }
    let n = T::from_count(records.len());
    Some(ImportanceVector {
        method: ImportanceMethod::MeanAbsShap,
        names: first.names.clone(),
        values: values.into_iter().map(|v| v / n).collect(),
        normalized: false,
        degenerate: false,
    })
}
