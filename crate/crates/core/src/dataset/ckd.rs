//! Reference schema of the UCI chronic kidney disease table.

use super::{ColumnKind, ColumnSchema, DatasetSchema, TargetSchema};

/// SHA-256 of `data/chronic_kidney_disease.arff` as vendored.
pub const CANONICAL_SHA256: &str =
    "a5ea96369b8516d725e4f353ad9c6e7e25a1a7db227bc761f59d8e0dfab15797";

/// The vendored canonical ARFF file.
pub fn canonical_arff() -> &'static str {
    include_str!("../../data/chronic_kidney_disease.arff")
}

/// 24 feature columns in file order plus the `class` target (ckd = 1).
///
/// Nominal categories are listed so that the first maps to 0 (e.g. htn: no, yes).
pub fn ckd_schema() -> DatasetSchema {
    use ColumnKind::{Nominal, Ordinal};
    let num = ColumnSchema::numeric;
    let cat = ColumnSchema::categorical;
    let zero_to_five = ["0", "1", "2", "3", "4", "5"];
    DatasetSchema {
        columns: vec![
            num("age", "year"),
            num("bp", "mm/Hg"),
            cat("sg", Ordinal, &["1.005", "1.010", "1.015", "1.020", "1.025"], ""),
            cat("al", Ordinal, &zero_to_five, ""),
            cat("su", Ordinal, &zero_to_five, ""),
            cat("rbc", Nominal, &["normal", "abnormal"], ""),
            cat("pc", Nominal, &["normal", "abnormal"], ""),
            cat("pcc", Nominal, &["notpresent", "present"], ""),
            cat("ba", Nominal, &["notpresent", "present"], ""),
            num("bgr", "mgs/dl"),
            num("bu", "mgs/dl"),
            num("sc", "mgs/dl"),
            num("sod", "mEq/l"),
            num("pot", "mEq/l"),
            num("hemo", "gms"),
            num("pcv", ""),
            num("wc", "cells/cumm"),
            num("rc", "millions/cmm"),
            cat("htn", Nominal, &["no", "yes"], ""),
            cat("dm", Nominal, &["no", "yes"], ""),
            cat("cad", Nominal, &["no", "yes"], ""),
            cat("appet", Nominal, &["good", "poor"], ""),
            cat("pe", Nominal, &["no", "yes"], ""),
            cat("ane", Nominal, &["no", "yes"], ""),
        ],
        target: TargetSchema {
            name: "class".to_string(),
            positive: "ckd".to_string(),
            negative: "notckd".to_string(),
        },
    }
}

/// Map ARFF attribute names onto the short codes used by the reference schema.
pub(crate) fn canonical_name(name: &str) -> &str {
    match name {
        "wbcc" => "wc",
        "rbcc" => "rc",
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sha2::{Digest, Sha256};

    #[test]
    fn family_sizes() {
        let s = ckd_schema();
        let count = |k| s.columns.iter().filter(|c| c.kind == k).count();
        assert_eq!(count(ColumnKind::Numeric), 11);
        assert_eq!(count(ColumnKind::Nominal), 10);
        assert_eq!(count(ColumnKind::Ordinal), 3);
        assert!(s
            .columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Nominal)
            .all(|c| c.categories.len() == 2));
    }

    #[test]
    fn ordinal_categories_are_ascending() {
        for c in ckd_schema().columns.iter().filter(|c| c.kind == ColumnKind::Ordinal) {
            let v: Vec<f64> = c.categories.iter().map(|x| x.parse().unwrap()).collect();
            assert!(v.windows(2).all(|w| w[0] < w[1]), "{}", c.name);
        }
    }

    #[test]
    fn vendored_file_checksum() {
        let digest = hex::encode(Sha256::digest(canonical_arff().as_bytes()));
        assert_eq!(digest, CANONICAL_SHA256);
    }
}
