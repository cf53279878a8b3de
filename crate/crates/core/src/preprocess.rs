//! Imputation, encoding and stratified partitioning.
//!
//! Imputers are fitted on an explicit row set so the caller controls which
//! rows may influence fill values.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, ColumnKind, ColumnValues, Dataset, DatasetError};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericStrategy {
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalStrategy {
    MostFrequent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ImputerSpec {
    pub numeric: NumericStrategy,
    pub categorical: CategoricalStrategy,
}

impl Default for ImputerSpec {
    fn default() -> Self {
        ImputerSpec { numeric: NumericStrategy::Mean, categorical: CategoricalStrategy::MostFrequent }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillValue {
    Number(f64),
    Category(u32),
}

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("column '{column}' has no observed value among the fitting rows")]
    AllMissing { column: String },
    #[error("imputer was fitted on a different schema")]
    SchemaMismatch,
    #[error("cell (row {row}, column '{column}') is missing; impute before encoding")]
    MissingCell { row: usize, column: String },
    #[error("ratio must lie strictly between 0 and 1, got {0}")]
    Ratio(f64),
    #[error("class {class} has {count} members; need at least {needed}")]
    ClassTooSmall { class: u8, count: usize, needed: usize },
    #[error("k must be at least 2, got {0}")]
    FoldCount(usize),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Per-column fill values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedImputer {
    pub spec: ImputerSpec,
    pub columns: Vec<String>,
    pub fills: Vec<FillValue>,
}

/// Compute fill values from `rows` only. Most-frequent ties go to the
/// category listed first in the schema.
pub fn fit_imputer(ds: &Dataset, rows: &[usize], spec: ImputerSpec) -> Result<FittedImputer, PreprocessError> {
    if let Some(&row) = rows.iter().find(|&&r| r >= ds.n_rows()) {
        return Err(DatasetError::Row { row, n_rows: ds.n_rows() }.into());
    }
    let mut fills = Vec::with_capacity(ds.n_columns());
    for (col, values) in ds.schema().columns.iter().zip(ds.columns()) {
        let all_missing = || PreprocessError::AllMissing { column: col.name.clone() };
        let fill = match values {
            ColumnValues::Numeric(v) => {
                let mut xs: Vec<f64> = rows.iter().filter_map(|&r| v[r]).collect();
                if xs.is_empty() {
                    return Err(all_missing());
                }
                let value = match spec.numeric {
                    NumericStrategy::Mean => xs.iter().sum::<f64>() / xs.len() as f64,
                    NumericStrategy::Median => {
                        xs.sort_by(f64::total_cmp);
                        let m = xs.len() / 2;
                        if xs.len() % 2 == 1 {
                            xs[m]
                        } else {
                            (xs[m - 1] + xs[m]) / 2.0
                        }
                    }
                };
                FillValue::Number(value)
            }
            ColumnValues::Categorical(v) => {
                let mut counts = vec![0usize; col.categories.len()];
                let mut seen = false;
                for &r in rows {
                    if let Some(i) = v[r] {
                        counts[i as usize] += 1;
                        seen = true;
                    }
                }
                if !seen {
                    return Err(all_missing());
                }
                let mut best = 0;
                for (i, &c) in counts.iter().enumerate() {
                    if c > counts[best] {
                        best = i;
                    }
                }
                FillValue::Category(best as u32)
            }
        };
        fills.push(fill);
    }
    Ok(FittedImputer { spec, columns: ds.schema().names(), fills })
}

impl FittedImputer {
    /// The selected rows, in order, with every missing cell replaced by its fill.
    pub fn apply(&self, ds: &Dataset, rows: &[usize]) -> Result<Dataset, PreprocessError> {
        if ds.schema().names() != self.columns {
            return Err(PreprocessError::SchemaMismatch);
        }
        let subset = ds.subset(rows)?;
        let columns = subset
            .columns()
            .iter()
            .zip(&self.fills)
            .map(|(values, fill)| match (values, fill) {
                (ColumnValues::Numeric(v), FillValue::Number(x)) => {
                    Ok(ColumnValues::Numeric(v.iter().map(|c| Some(c.unwrap_or(*x))).collect()))
                }
                (ColumnValues::Categorical(v), FillValue::Category(i)) => {
                    Ok(ColumnValues::Categorical(v.iter().map(|c| Some(c.unwrap_or(*i))).collect()))
                }
                _ => Err(PreprocessError::SchemaMismatch),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Dataset::new(subset.schema().clone(), columns, subset.target().to_vec())?)
    }

    /// Encoded fill value of a column, as fed to the classifiers.
    pub fn encoded_fill<T: Scalar>(&self, column: usize) -> T {
        match self.fills[column] {
            FillValue::Number(x) => T::cast(x),
            FillValue::Category(i) => T::cast(f64::from(i)),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("matrix has {values} values, expected {rows} x {cols}")]
    Shape { values: usize, rows: usize, cols: usize },
    #[error("column metadata lengths disagree")]
    Metadata,
    #[error("column index {index} out of range for {n} columns")]
    Column { index: usize, n: usize },
    #[error("row index {index} out of range for {n} rows")]
    Row { index: usize, n: usize },
}

/// Dense row-major numeric matrix with per-column family metadata.
///
/// Nominal columns hold 0/1, ordinal columns their rank 0..k-1, numeric
/// columns the raw value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedMatrix<T> {
    feature_names: Vec<String>,
    families: Vec<ColumnKind>,
    /// Category labels of categorical columns; empty for numeric ones.
    categories: Vec<Vec<String>>,
    n_rows: usize,
    values: Vec<T>,
}

impl<T: Scalar> EncodedMatrix<T> {
    pub fn new(
        feature_names: Vec<String>,
        families: Vec<ColumnKind>,
        categories: Vec<Vec<String>>,
        n_rows: usize,
        values: Vec<T>,
    ) -> Result<Self, MatrixError> {
        let d = feature_names.len();
        if families.len() != d || categories.len() != d {
            return Err(MatrixError::Metadata);
        }
        if values.len() != n_rows * d {
            return Err(MatrixError::Shape { values: values.len(), rows: n_rows, cols: d });
        }
        Ok(EncodedMatrix { feature_names, families, categories, n_rows, values })
    }

    /// Numeric-only matrix, handy for synthetic fixtures.
    pub fn from_rows(feature_names: &[&str], rows: &[Vec<T>]) -> Result<Self, MatrixError> {
        let d = feature_names.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(MatrixError::Metadata);
        }
        Self::new(
            feature_names.iter().map(|s| s.to_string()).collect(),
            vec![ColumnKind::Numeric; d],
            vec![Vec::new(); d],
            rows.len(),
            rows.iter().flatten().copied().collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn families(&self) -> &[ColumnKind] {
        &self.families
    }

    pub fn categories(&self, j: usize) -> &[String] {
        &self.categories[j]
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn row(&self, i: usize) -> &[T] {
        let d = self.n_features();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n_features() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let d = self.n_features();
        self.values[i * d + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    /// Column-major copy of the data.
    pub fn columns(&self) -> Vec<Vec<T>> {
        (0..self.n_features()).map(|j| self.column(j)).collect()
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<Self, MatrixError> {
        let d = self.n_features();
        if let Some(&index) = cols.iter().find(|&&c| c >= d) {
            return Err(MatrixError::Column { index, n: d });
        }
        let mut values = Vec::with_capacity(self.n_rows * cols.len());
        for i in 0..self.n_rows {
            let row = self.row(i);
            values.extend(cols.iter().map(|&c| row[c]));
        }
        Ok(EncodedMatrix {
            feature_names: cols.iter().map(|&c| self.feature_names[c].clone()).collect(),
            families: cols.iter().map(|&c| self.families[c]).collect(),
            categories: cols.iter().map(|&c| self.categories[c].clone()).collect(),
            n_rows: self.n_rows,
            values,
        })
    }

    pub fn select_names(&self, names: &[String]) -> Result<Self, MatrixError> {
        let cols = names
            .iter()
            .map(|n| self.position(n).ok_or(MatrixError::Metadata))
            .collect::<Result<Vec<_>, _>>()?;
        self.select_columns(&cols)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self, MatrixError> {
        if let Some(&index) = rows.iter().find(|&&r| r >= self.n_rows) {
            return Err(MatrixError::Row { index, n: self.n_rows });
        }
        let mut values = Vec::with_capacity(rows.len() * self.n_features());
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Ok(EncodedMatrix { values, n_rows: rows.len(), ..self.clone_metadata() })
    }

    /// Indices of columns belonging to a family, in column order.
    pub fn family_columns(&self, family: ColumnKind) -> Vec<usize> {
        (0..self.n_features()).filter(|&j| self.families[j] == family).collect()
    }

    fn clone_metadata(&self) -> Self {
        EncodedMatrix {
            feature_names: self.feature_names.clone(),
            families: self.families.clone(),
            categories: self.categories.clone(),
            n_rows: 0,
            values: Vec::new(),
        }
    }
}

/// Numeric passthrough, nominal as 0/1 by schema order, ordinal as rank.
pub fn encode<T: Scalar>(ds: &Dataset) -> Result<EncodedMatrix<T>, PreprocessError> {
    let n = ds.n_rows();
    let d = ds.n_columns();
    let mut values = Vec::with_capacity(n * d);
    for r in 0..n {
        for c in 0..d {
            let v = match ds.cell(r, c) {
                Cell::Number(x) => T::cast(x),
                Cell::Category(i) => T::cast(f64::from(i)),
                Cell::Missing => {
                    return Err(PreprocessError::MissingCell {
                        row: r,
                        column: ds.schema().columns[c].name.clone(),
                    })
                }
            };
            values.push(v);
        }
    }
    let schema = ds.schema();
    Ok(EncodedMatrix {
        feature_names: schema.names(),
        families: schema.columns.iter().map(|c| c.kind).collect(),
        categories: schema.columns.iter().map(|c| c.categories.clone()).collect(),
        n_rows: n,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Stratified train/test split.
///
/// The train size is `round(n * ratio)`; it is shared between classes by
/// largest remainder of `class_count * train_size / n`, ties going to the
/// class with the smaller label. With 250/150 and 0.7 this gives 175 + 105.
/// Rows are shuffled within each class by `seed`; both index lists are sorted.
pub fn stratified_split(targets: &[u8], ratio: f64, seed: u64) -> Result<SplitIndices, PreprocessError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(PreprocessError::Ratio(ratio));
    }
    let by_class = class_members(targets);
    for (class, members) in by_class.iter().enumerate() {
        if members.is_empty() {
            return Err(PreprocessError::ClassTooSmall { class: class as u8, count: 0, needed: 1 });
        }
    }
    let n = targets.len();
    let n_train = (n as f64 * ratio).round() as usize;
    let quotas: Vec<f64> = by_class.iter().map(|m| m.len() as f64 * n_train as f64 / n as f64).collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut remaining = n_train - alloc.iter().sum::<usize>();
    let mut order: Vec<usize> = vec![0, 1];
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())).then(a.cmp(&b)));
    for &c in &order {
        if remaining == 0 {
            break;
        }
        alloc[c] += 1;
        remaining -= 1;
    }
    let mut rng = seed::rng(seed);
    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);
    for (members, &take) in by_class.into_iter().zip(&alloc) {
        let mut members = members;
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..take]);
        test.extend_from_slice(&members[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test, seed })
}

/// Stratified k-fold partition of positions `0..targets.len()`.
///
/// Each class is shuffled and dealt round-robin-by-block; the leftover
/// members of the second class continue where the first class stopped so
/// fold sizes stay balanced. Every fold is returned sorted.
pub fn stratified_kfold(targets: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, PreprocessError> {
    if k < 2 {
        return Err(PreprocessError::FoldCount(k));
    }
    let by_class = class_members(targets);
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < k {
            return Err(PreprocessError::ClassTooSmall { class: class as u8, count: members.len(), needed: k });
        }
    }
    let mut rng = seed::rng(seed);
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for members in by_class {
        let mut members = members;
        members.shuffle(&mut rng);
        let base = members.len() / k;
        let extra = members.len() % k;
        let mut sizes = vec![base; k];
        for e in 0..extra {
            sizes[(offset + e) % k] += 1;
        }
        offset = (offset + extra) % k;
        let mut it = members.into_iter();
        for (fold, &size) in folds.iter_mut().zip(&sizes) {
            fold.extend(it.by_ref().take(size));
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

fn class_members(targets: &[u8]) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, &t) in targets.iter().enumerate() {
        out[usize::from(t.min(1))].push(i);
    }
    out
}
