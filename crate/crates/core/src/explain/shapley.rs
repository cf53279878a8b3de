use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::ExplainError;
use crate::preprocess::EncodedMatrix;
use crate::scalar::Scalar;
use crate::seed;
use crate::trees::TreeEnsembleModel;

/// Enumeration bound: `2^d` coalitions are evaluated.
pub const MAX_SHAPLEY_FEATURES: usize = 20;
/// Default background sample size.
pub const BACKGROUND_ROWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSpace {
    Probability,
    /// Additive log-odds score; gradient boosting only.
    Margin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapRecord<T> {
    pub instance: usize,
    pub names: Vec<String>,
    /// Encoded feature values of the instance.
    pub values: Vec<T>,
    /// Mean model output over the background.
    pub base: T,
    pub phi: Vec<T>,
    pub output: T,
    pub space: OutputSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterfallStep<T> {
    pub feature: String,
    pub value: T,
    pub phi: T,
    /// Running total before and after this attribution.
    pub start: T,
    pub end: T,
}

/// Up to `max_rows` distinct row indices drawn without replacement, sorted.
pub fn background_sample(n_rows: usize, max_rows: usize, seed: u64) -> Vec<usize> {
    if n_rows <= max_rows {
        return (0..n_rows).collect();
    }
    let mut rng = seed::rng(seed);
    let mut idx = sample(&mut rng, n_rows, max_rows).into_vec();
    idx.sort_unstable();
    idx
}

fn output<T: Scalar>(model: &TreeEnsembleModel<T>, x: &[T], space: OutputSpace) -> Result<T, ExplainError> {
    Ok(match space {
        OutputSpace::Probability => model.predict_proba_row(x),
        OutputSpace::Margin => model.predict_margin_row(x)?,
    })
}

/// Exact Shapley values under the interventional value function
/// `v(S) = mean_z f(x_S, z_rest)` over the background rows.
///
/// All `2^d` coalition values are computed once, turned into Harsanyi
/// dividends by a Moebius transform, and each dividend is shared equally
/// among the members of its coalition.
pub fn shapley_exact<T: Scalar>(
    model: &TreeEnsembleModel<T>,
    instance_id: usize,
    instance: &[T],
    background: &EncodedMatrix<T>,
    space: OutputSpace,
) -> Result<ShapRecord<T>, ExplainError> {
    let d = model.n_features();
    if d > MAX_SHAPLEY_FEATURES {
        return Err(ExplainError::TooManyFeatures { found: d, max: MAX_SHAPLEY_FEATURES });
    }
    if instance.len() != d {
        return Err(ExplainError::Instance { found: instance.len(), expected: d });
    }
    model.check_features(background)?;
    if background.n_rows() == 0 {
        return Err(ExplainError::EmptyBackground);
    }
    let n_masks = 1usize << d;
    let mut v = vec![T::zero(); n_masks];
    let mut hybrid = vec![T::zero(); d];
    for b in 0..background.n_rows() {
        let z = background.row(b);
        for (mask, slot) in v.iter_mut().enumerate() {
            for j in 0..d {
                hybrid[j] = if mask >> j & 1 == 1 { instance[j] } else { z[j] };
            }
            *slot = *slot + output(model, &hybrid, space)?;
        }
    }
    let nb = T::from_count(background.n_rows());
    for s in v.iter_mut() {
        *s = *s / nb;
    }
    let base = v[0];
    let mut dividend = v;
    for j in 0..d {
        let bit = 1 << j;
        for mask in 0..n_masks {
            if mask & bit != 0 {
                dividend[mask] = dividend[mask] - dividend[mask ^ bit];
            }
        }
    }
    let mut phi = vec![T::zero(); d];
    for (mask, &a) in dividend.iter().enumerate().skip(1) {
        let share = a / T::from_count(mask.count_ones() as usize);
        for (j, p) in phi.iter_mut().enumerate() {
            if mask >> j & 1 == 1 {
                *p = *p + share;
            }
        }
    }
    Ok(ShapRecord {
        instance: instance_id,
        names: model.feature_names.clone(),
        values: instance.to_vec(),
        base,
        phi,
        output: output(model, instance, space)?,
        space,
    })
}

/// Attributions by decreasing `|phi|` (ties in feature order) with running totals from the base.
pub fn waterfall_data<T: Scalar>(record: &ShapRecord<T>) -> Vec<WaterfallStep<T>> {
    let mut idx: Vec<usize> = (0..record.phi.len()).collect();
    idx.sort_by(|&a, &b| {
        record.phi[b].abs().partial_cmp(&record.phi[a].abs()).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let mut total = record.base;
    idx.into_iter()
        .map(|j| {
            let start = total;
            total = total + record.phi[j];
            WaterfallStep { feature: record.names[j].clone(), value: record.values[j], phi: record.phi[j], start, end: total }
        })
        .collect()
}
