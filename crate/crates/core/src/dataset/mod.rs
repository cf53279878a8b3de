//! Typed columnar dataset with a per-cell missing mask and a binary target.

mod arff;
mod ckd;
mod csv_io;
mod summary;

pub use arff::{parse_arff, parse_arff_lenient};
pub use ckd::{canonical_arff, ckd_schema, CANONICAL_SHA256};
pub use csv_io::{parse_csv, parse_csv_lenient, to_csv};
pub use summary::{summarize, ColumnSummary, SummaryStats, STD_CONVENTION};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Column family; also the unit the feature selectors operate on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Nominal,
    Ordinal,
}

impl ColumnKind {
    pub const ALL: [ColumnKind; 3] = [ColumnKind::Numeric, ColumnKind::Nominal, ColumnKind::Ordinal];

    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Nominal => "nominal",
            ColumnKind::Ordinal => "ordinal",
        }
    }

    pub fn is_categorical(self) -> bool {
        !matches!(self, ColumnKind::Numeric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    /// Admissible labels; ordinal columns list them in their natural order.
    pub categories: Vec<String>,
    pub units: String,
}

impl ColumnSchema {
    pub fn numeric(name: &str, units: &str) -> Self {
        ColumnSchema {
            name: name.to_string(),
            kind: ColumnKind::Numeric,
            categories: Vec::new(),
            units: units.to_string(),
        }
    }

    pub fn categorical(name: &str, kind: ColumnKind, categories: &[&str], units: &str) -> Self {
        ColumnSchema {
            name: name.to_string(),
            kind,
            categories: categories.iter().map(|c| c.to_string()).collect(),
            units: units.to_string(),
        }
    }

    /// Resolve a raw token to a category index. Tokens are trimmed and
    /// lowercased; numeric-looking labels also match by value so that
    /// `1.01` resolves to `1.010`.
    pub fn category_index(&self, token: &str) -> Option<u32> {
        let token = normalize_token(token);
        if let Some(i) = self.categories.iter().position(|c| *c == token) {
            return Some(i as u32);
        }
        let value: f64 = token.parse().ok()?;
        self.categories
            .iter()
            .position(|c| c.parse::<f64>().map(|cv| cv == value).unwrap_or(false))
            .map(|i| i as u32)
    }
}

/// Binary target; `positive` is encoded as 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSchema {
    pub name: String,
    pub positive: String,
    pub negative: String,
}

impl TargetSchema {
    pub fn encode(&self, token: &str) -> Option<u8> {
        let token = normalize_token(token);
        if token == self.positive {
            Some(1)
        } else if token == self.negative {
            Some(0)
        } else {
            None
        }
    }

    pub fn label(&self, value: u8) -> &str {
        if value == 1 {
            &self.positive
        } else {
            &self.negative
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub columns: Vec<ColumnSchema>,
    pub target: TargetSchema,
}

impl DatasetSchema {
    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }
}

/// One column of cell values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnValues {
    Numeric(Vec<Option<f64>>),
    /// Category indices into `ColumnSchema::categories`.
    Categorical(Vec<Option<u32>>),
}

impl ColumnValues {
    pub fn len(&self) -> usize {
        match self {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            ColumnValues::Numeric(v) => v[row].is_none(),
            ColumnValues::Categorical(v) => v[row].is_none(),
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_missing(i)).count()
    }

    fn subset(&self, rows: &[usize]) -> ColumnValues {
        match self {
            ColumnValues::Numeric(v) => ColumnValues::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnValues::Categorical(v) => {
                ColumnValues::Categorical(rows.iter().map(|&r| v[r]).collect())
            }
        }
    }
}

/// A single parsed cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Missing,
    Number(f64),
    Category(u32),
}

/// Immutable typed table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: DatasetSchema,
    columns: Vec<ColumnValues>,
    target: Vec<u8>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("column '{column}' has {found} values, expected {expected}")]
    Length { column: String, expected: usize, found: usize },
    #[error("schema has {schema} columns but {found} value columns were given")]
    ColumnCount { schema: usize, found: usize },
    #[error("column '{column}': value kind does not match the schema")]
    Kind { column: String },
    #[error("column '{column}', row {row}: category index {index} out of range")]
    Category { column: String, row: usize, index: u32 },
    #[error("row {row}: target value {value} is not 0 or 1")]
    Target { row: usize, value: u8 },
    #[error("row index {row} out of range for {n_rows} rows")]
    Row { row: usize, n_rows: usize },
}

impl Dataset {
    pub fn new(
        schema: DatasetSchema,
        columns: Vec<ColumnValues>,
        target: Vec<u8>,
    ) -> Result<Self, DatasetError> {
        if columns.len() != schema.columns.len() {
            return Err(DatasetError::ColumnCount {
                schema: schema.columns.len(),
                found: columns.len(),
            });
        }
        let n = target.len();
        for (row, &t) in target.iter().enumerate() {
            if t > 1 {
                return Err(DatasetError::Target { row, value: t });
            }
        }
        for (col, values) in schema.columns.iter().zip(&columns) {
            if values.len() != n {
                return Err(DatasetError::Length {
                    column: col.name.clone(),
                    expected: n,
                    found: values.len(),
                });
            }
            match (col.kind, values) {
                (ColumnKind::Numeric, ColumnValues::Numeric(_)) => {}
                (ColumnKind::Numeric, _) | (_, ColumnValues::Numeric(_)) => {
                    return Err(DatasetError::Kind { column: col.name.clone() });
                }
                (_, ColumnValues::Categorical(v)) => {
                    for (row, idx) in v.iter().enumerate() {
                        if let Some(idx) = *idx {
                            if idx as usize >= col.categories.len() {
                                return Err(DatasetError::Category {
                                    column: col.name.clone(),
                                    row,
                                    index: idx,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(Dataset { schema, columns, target })
    }

    pub fn schema(&self) -> &DatasetSchema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[ColumnValues] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &ColumnValues {
        &self.columns[j]
    }

    pub fn target(&self) -> &[u8] {
        &self.target
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        match &self.columns[col] {
            ColumnValues::Numeric(v) => v[row].map_or(Cell::Missing, Cell::Number),
            ColumnValues::Categorical(v) => v[row].map_or(Cell::Missing, Cell::Category),
        }
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.columns[col].is_missing(row)
    }

    /// Row-major missing mask.
    pub fn missing_mask(&self) -> Vec<Vec<bool>> {
        (0..self.n_rows())
            .map(|r| (0..self.n_columns()).map(|c| self.is_missing(r, c)).collect())
            .collect()
    }

    pub fn missing_cells(&self) -> usize {
        self.columns.iter().map(ColumnValues::missing_count).sum()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.target.iter().filter(|&&t| t == 1).count();
        [self.target.len() - pos, pos]
    }

    /// Rows in the given order (duplicates allowed).
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset, DatasetError> {
        if let Some(&row) = rows.iter().find(|&&r| r >= self.n_rows()) {
            return Err(DatasetError::Row { row, n_rows: self.n_rows() });
        }
        Ok(Dataset {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.subset(rows)).collect(),
            target: rows.iter().map(|&r| self.target[r]).collect(),
        })
    }

    /// Replace one cell; used by tests and tooling that perturb inputs.
    pub fn with_cell(&self, row: usize, col: usize, cell: Cell) -> Result<Dataset, DatasetError> {
        if row >= self.n_rows() {
            return Err(DatasetError::Row { row, n_rows: self.n_rows() });
        }
        let mut columns = self.columns.clone();
        match (&mut columns[col], cell) {
            (ColumnValues::Numeric(v), Cell::Number(x)) => v[row] = Some(x),
            (ColumnValues::Numeric(v), Cell::Missing) => v[row] = None,
            (ColumnValues::Categorical(v), Cell::Category(i)) => v[row] = Some(i),
            (ColumnValues::Categorical(v), Cell::Missing) => v[row] = None,
            _ => {
                return Err(DatasetError::Kind {
                    column: self.schema.columns[col].name.clone(),
                })
            }
        }
        Dataset::new(self.schema.clone(), columns, self.target.clone())
    }

    /// Hex SHA-256 of the canonical CSV rendering; independent of the source format.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(to_csv(self).as_bytes()))
    }

    /// Display label for a cell.
    pub fn cell_label(&self, row: usize, col: usize) -> String {
        match self.cell(row, col) {
            Cell::Missing => "?".to_string(),
            Cell::Number(x) => format!("{x}"),
            Cell::Category(i) => self.schema.columns[col].categories[i as usize].clone(),
        }
    }
}

/// Trim whitespace (including the stray tabs in the public CKD file) and lowercase.
pub(crate) fn normalize_token(token: &str) -> String {
    token.trim().to_lowercase()
}

pub(crate) fn is_missing_token(token: &str) -> bool {
    let t = token.trim();
    t.is_empty() || t == "?"
}

/// Parse ingestion errors.
#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("header: {0}")]
    Header(String),
    #[error("data row {row} (line {line}): expected {expected} fields, found {found}")]
    Arity { row: usize, line: usize, expected: usize, found: usize },
    #[error("data row {row}: column '{column}': unrecognised value '{token}'")]
    Value { row: usize, column: String, token: String },
    #[error("input is not valid UTF-8")]
    Utf8,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

impl IngestError {
    /// Row-level errors are collected by the lenient parsers; everything else is fatal.
    pub fn is_row_error(&self) -> bool {
        matches!(self, IngestError::Arity { .. } | IngestError::Value { .. })
    }
}

/// Outcome of a lenient parse: accepted rows plus one error per rejected row.
#[derive(Debug)]
pub struct ParseReport {
    pub dataset: Dataset,
    pub rejected: Vec<IngestError>,
    pub data_rows_seen: usize,
}

/// Shared row assembly used by both parsers.
pub(crate) struct RowBuilder {
    schema: DatasetSchema,
    columns: Vec<ColumnValues>,
    target: Vec<u8>,
}

impl RowBuilder {
    pub(crate) fn new(schema: DatasetSchema) -> Self {
        let columns = schema
            .columns
            .iter()
            .map(|c| match c.kind {
                ColumnKind::Numeric => ColumnValues::Numeric(Vec::new()),
                _ => ColumnValues::Categorical(Vec::new()),
            })
            .collect();
        RowBuilder { schema, columns, target: Vec::new() }
    }

    /// `feature_tokens` follow schema column order. `row` is the 0-based data row index for errors.
    pub(crate) fn push(
        &mut self,
        row: usize,
        feature_tokens: &[&str],
        target_token: &str,
    ) -> Result<(), IngestError> {
        debug_assert_eq!(feature_tokens.len(), self.schema.columns.len());
        let mut cells = Vec::with_capacity(feature_tokens.len());
        for (col, token) in self.schema.columns.iter().zip(feature_tokens) {
            if is_missing_token(token) {
                cells.push(Cell::Missing);
                continue;
            }
            let cell = match col.kind {
                ColumnKind::Numeric => token.trim().parse::<f64>().ok().filter(|v| v.is_finite()).map(Cell::Number),
                _ => col.category_index(token).map(Cell::Category),
            };
            match cell {
                Some(c) => cells.push(c),
                None => {
                    return Err(IngestError::Value {
                        row,
                        column: col.name.clone(),
                        token: token.trim().to_string(),
                    })
                }
            }
        }
        let target = self.schema.target.encode(target_token).ok_or_else(|| IngestError::Value {
            row,
            column: self.schema.target.name.clone(),
            token: target_token.trim().to_string(),
        })?;
        for (values, cell) in self.columns.iter_mut().zip(cells) {
            match (values, cell) {
                (ColumnValues::Numeric(v), Cell::Number(x)) => v.push(Some(x)),
                (ColumnValues::Numeric(v), Cell::Missing) => v.push(None),
                (ColumnValues::Categorical(v), Cell::Category(i)) => v.push(Some(i)),
                (ColumnValues::Categorical(v), Cell::Missing) => v.push(None),
                _ => unreachable!("cell kind follows column kind"),
            }
        }
        self.target.push(target);
        Ok(())
    }

    pub(crate) fn finish(self) -> Result<Dataset, IngestError> {
        Ok(Dataset::new(self.schema, self.columns, self.target)?)
    }
}
