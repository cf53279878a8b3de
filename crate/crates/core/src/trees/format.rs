//! Versioned JSON model files and a plain-text tree dump.
//!
//! A model file is a JSON object
//! `{"format": "ckdx-model", "version": 1, "scalar": "f64", "model": {...}}`.
//! Floats are written in shortest round-trip form, so a file reloads to the
//! identical model.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{LeafValue, Node, TreeEnsembleModel};
use crate::scalar::Scalar;

pub const MODEL_FORMAT: &str = "ckdx-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelFormatError {
    #[error("malformed model file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("not a model file (format tag {0:?})")]
    Format(String),
    #[error("unsupported model version {found}, expected {MODEL_VERSION}")]
    Version { found: u64 },
    #[error("model stores {found} values, expected {expected}")]
    Scalar { found: String, expected: &'static str },
    #[error("model is structurally invalid: {0}")]
    Invalid(String),
}

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    format: &'static str,
    version: u32,
    scalar: &'static str,
    model: &'a TreeEnsembleModel<T>,
}

#[derive(Deserialize)]
struct Header {
    format: Option<String>,
    version: Option<u64>,
    scalar: Option<String>,
}

#[derive(Deserialize)]
struct EnvelopeIn<T> {
    model: TreeEnsembleModel<T>,
}

fn scalar_tag<T: Scalar>() -> &'static str {
    if std::mem::size_of::<T>() == 4 {
        "f32"
    } else {
        "f64"
    }
}

pub fn serialize_model<T: Scalar>(model: &TreeEnsembleModel<T>) -> Vec<u8> {
    let env = EnvelopeOut { format: MODEL_FORMAT, version: MODEL_VERSION, scalar: scalar_tag::<T>(), model };
    let mut out = serde_json::to_vec_pretty(&env).expect("model serialization is infallible");
    out.push(b'\n');
    out
}

pub fn deserialize_model<T: Scalar>(bytes: &[u8]) -> Result<TreeEnsembleModel<T>, ModelFormatError> {
    let header: Header = serde_json::from_slice(bytes)?;
    let format = header.format.unwrap_or_default();
    if format != MODEL_FORMAT {
        return Err(ModelFormatError::Format(format));
    }
    match header.version {
        Some(v) if v == u64::from(MODEL_VERSION) => {}
        other => return Err(ModelFormatError::Version { found: other.unwrap_or(0) }),
    }
    let scalar = header.scalar.unwrap_or_default();
    if scalar != scalar_tag::<T>() {
        return Err(ModelFormatError::Scalar { found: scalar, expected: scalar_tag::<T>() });
    }
    let env: EnvelopeIn<T> = serde_json::from_slice(bytes)?;
    validate(&env.model)?;
    Ok(env.model)
}

fn validate<T: Scalar>(m: &TreeEnsembleModel<T>) -> Result<(), ModelFormatError> {
    let invalid = |s: String| Err(ModelFormatError::Invalid(s));
    if m.trees.len() != m.tree_weights.len() {
        return invalid(format!("{} trees but {} weights", m.trees.len(), m.tree_weights.len()));
    }
    let d = m.feature_names.len();
    for (t, tree) in m.trees.iter().enumerate() {
        if tree.nodes.is_empty() {
            return invalid(format!("tree {t} has no nodes"));
        }
        for (i, node) in tree.nodes.iter().enumerate() {
            if let Node::Split { feature, left, right, .. } = *node {
                // Preorder layout: children come after their parent.
                if feature >= d || left <= i || right <= i || left >= tree.nodes.len() || right >= tree.nodes.len() {
                    return invalid(format!("tree {t} node {i} has out-of-range references"));
                }
            }
        }
    }
    Ok(())
}

pub(super) fn dump<T: Scalar>(m: &TreeEnsembleModel<T>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} model: {} trees, base_score {}, features [{}]",
        m.algorithm.as_str(),
        m.trees.len(),
        m.base_score,
        m.feature_names.join(", ")
    );
    for (t, (tree, w)) in m.trees.iter().zip(&m.tree_weights).enumerate() {
        let _ = writeln!(s, "tree {t} weight {w}");
        dump_node(&mut s, m, tree, 0, 1);
    }
    s
}

fn dump_node<T: Scalar>(s: &mut String, m: &TreeEnsembleModel<T>, tree: &super::Tree<T>, i: usize, depth: usize) {
    let pad = "  ".repeat(depth);
    match tree.nodes[i] {
        Node::Split { feature, threshold, left, right, n_samples, impurity, .. } => {
            let _ = writeln!(
                s,
                "{pad}[{i}] {} < {threshold} (n={n_samples}, gini={impurity})",
                m.feature_names[feature]
            );
            dump_node(s, m, tree, left, depth + 1);
            dump_node(s, m, tree, right, depth + 1);
        }
        Node::Leaf { value, n_samples, .. } => {
            let v = match value {
                LeafValue::Distribution(p) => format!("p(ckd)={}", p[1]),
                LeafValue::Vote(c) => format!("vote={c}"),
                LeafValue::Score(x) => format!("score={x}"),
            };
            let _ = writeln!(s, "{pad}[{i}] leaf {v} (n={n_samples})");
        }
    }
}
