//! Explainable chronic-kidney-disease prediction with tree ensembles.
//!
//! The crate covers the whole pipeline: typed ingestion of the UCI CKD table,
//! leak-free imputation/encoding/splitting, per-family feature selection,
//! from-scratch tree ensembles, classification and explainability metrics,
//! post-hoc explanations, and a brute-force configuration search.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`, which is what the CLI uses.

// `!(a > b)` is used on purpose: it is also true when either side is NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod explain;
pub mod metrics;
pub mod preprocess;
pub mod scalar;
pub mod seed;
pub mod search;
pub mod select;
pub mod trees;

pub use scalar::Scalar;

pub type EncodedMatrix = preprocess::EncodedMatrix<f64>;
pub type TreeEnsembleModel = trees::TreeEnsembleModel<f64>;
pub type ClassificationReport = metrics::ClassificationReport<f64>;
pub type ExplainabilityReport = metrics::ExplainabilityReport<f64>;
pub type ImportanceVector = explain::ImportanceVector<f64>;
pub type ShapRecord = explain::ShapRecord<f64>;
pub type PdpCurve = explain::PdpCurve<f64>;
pub type SearchResult = search::SearchResult<f64>;
pub type SearchOutcome = search::SearchOutcome<f64>;
