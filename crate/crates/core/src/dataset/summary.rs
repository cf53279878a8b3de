//! Per-column descriptive statistics.

use serde::{Deserialize, Serialize};

use super::{ColumnValues, Dataset};

/// Standard deviations use the sample (n - 1) convention, which reproduces
/// the published descriptive table of the CKD data.
pub const STD_CONVENTION: &str = "sample (n-1)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SummaryStats {
    Numeric {
        /// `None` when the column has no observed values.
        mean: Option<f64>,
        /// `None` with fewer than two observed values.
        std: Option<f64>,
        min: Option<f64>,
        max: Option<f64>,
    },
    Categorical {
        /// Counts in schema category order.
        counts: Vec<(String, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub kind: super::ColumnKind,
    pub observed: usize,
    pub missing: usize,
    pub stats: SummaryStats,
}

pub fn summarize(ds: &Dataset) -> Vec<ColumnSummary> {
    ds.schema()
        .columns
        .iter()
        .zip(ds.columns())
        .map(|(col, values)| {
            let missing = values.missing_count();
            let stats = match values {
                ColumnValues::Numeric(v) => {
                    let xs: Vec<f64> = v.iter().flatten().copied().collect();
                    let n = xs.len() as f64;
                    let mean = (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / n);
                    let std = mean.filter(|_| xs.len() >= 2).map(|m| {
                        (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
                    });
                    SummaryStats::Numeric {
                        mean,
                        std,
                        min: xs.iter().copied().reduce(f64::min),
                        max: xs.iter().copied().reduce(f64::max),
                    }
                }
                ColumnValues::Categorical(v) => {
                    let mut counts = vec![0usize; col.categories.len()];
                    for idx in v.iter().flatten() {
                        counts[*idx as usize] += 1;
                    }
                    SummaryStats::Categorical {
                        counts: col.categories.iter().cloned().zip(counts).collect(),
                    }
                }
            };
            ColumnSummary {
                name: col.name.clone(),
                kind: col.kind,
                observed: values.len() - missing,
                missing,
                stats,
            }
        })
        .collect()
}
