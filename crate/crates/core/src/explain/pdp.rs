use serde::{Deserialize, Serialize};

use super::ExplainError;
use crate::preprocess::EncodedMatrix;
use crate::scalar::Scalar;
use crate::trees::TreeEnsembleModel;

/// Largest numeric grid produced by [`default_grid`].
pub const PDP_MAX_POINTS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpCurve<T> {
    pub feature: String,
    pub grid: Vec<T>,
    /// Mean predicted ckd probability at each grid value.
    pub values: Vec<T>,
}

/// Category codes for categorical columns; sorted unique values for numeric
/// ones, thinned to evenly spaced order statistics beyond [`PDP_MAX_POINTS`].
pub fn default_grid<T: Scalar>(x: &EncodedMatrix<T>, feature: usize) -> Vec<T> {
    if x.families()[feature].is_categorical() {
        return (0..x.categories(feature).len()).map(T::from_count).collect();
    }
    let mut v = x.column(feature);
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut unique = v.clone();
    unique.dedup();
    if unique.len() <= PDP_MAX_POINTS {
        return unique;
    }
    let n = v.len();
    let mut grid: Vec<T> = (0..PDP_MAX_POINTS)
        .map(|i| v[((i * (n - 1)) as f64 / (PDP_MAX_POINTS - 1) as f64).round() as usize])
        .collect();
    grid.dedup();
    grid
}

pub fn pdp<T: Scalar>(
    model: &TreeEnsembleModel<T>,
    x: &EncodedMatrix<T>,
    feature: &str,
    grid: &[T],
) -> Result<PdpCurve<T>, ExplainError> {
    model.check_features(x)?;
    let j = x.position(feature).ok_or_else(|| ExplainError::UnknownFeature(feature.to_string()))?;
    if grid.is_empty() {
        return Err(ExplainError::EmptyGrid);
    }
    let mut grid = grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = T::from_count(x.n_rows().max(1));
    let mut row = vec![T::zero(); x.n_features()];
    let values = grid
        .iter()
        .map(|&g| {
            let mut total = T::zero();
            for i in 0..x.n_rows() {
                row.copy_from_slice(x.row(i));
                row[j] = g;
                total = total + model.predict_proba_row(&row);
            }
            total / n
        })
        .collect();
    Ok(PdpCurve { feature: feature.to_string(), grid, values })
}
