//! Filter scores, top-k selection, and recursive feature elimination.
//!
//! Selection runs per column family; `cols` arguments name the columns of
//! the family inside the full encoded matrix.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::ColumnKind;
use crate::explain::impurity_importance;
use crate::preprocess::{EncodedMatrix, MatrixError};
use crate::scalar::Scalar;
use crate::trees::{fit, ClassifierSpec, TreeError};

/// Equal-frequency bin count used for numeric columns.
pub const MI_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorMethod {
    Anova,
    Chi2,
    MutualInfo,
    Rfe,
}

impl SelectorMethod {
    pub const ALL: [SelectorMethod; 4] =
        [SelectorMethod::Anova, SelectorMethod::Chi2, SelectorMethod::MutualInfo, SelectorMethod::Rfe];

    pub fn as_str(self) -> &'static str {
        match self {
            SelectorMethod::Anova => "anova",
            SelectorMethod::Chi2 => "chi2",
            SelectorMethod::MutualInfo => "mutual_info",
            SelectorMethod::Rfe => "rfe",
        }
    }

    /// Short label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            SelectorMethod::Anova => "anova",
            SelectorMethod::Chi2 => "chi2",
            SelectorMethod::MutualInfo => "mut-inf",
            SelectorMethod::Rfe => "RFE",
        }
    }

    pub fn parse(s: &str) -> Option<SelectorMethod> {
        let s = s.trim().to_ascii_lowercase();
        SelectorMethod::ALL.into_iter().find(|m| m.as_str() == s || m.label().to_ascii_lowercase() == s)
    }

    pub fn is_filter(self) -> bool {
        self != SelectorMethod::Rfe
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SelectorSpec {
    pub family: ColumnKind,
    pub method: SelectorMethod,
    pub k: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum SelectError {
    #[error("both classes must be present")]
    SingleClass,
    #[error("{values} values for {labels} labels")]
    Length { values: usize, labels: usize },
    #[error("chi-squared needs non-negative values, found {0}")]
    Negative(f64),
    #[error("k = {k} outside 1..={size}")]
    K { k: usize, size: usize },
    #[error("chi-squared is not defined for the numeric family")]
    Chi2Numeric,
    #[error("mutual information needs at least 2 rows")]
    TooFewRows,
    #[error("no columns to select from")]
    EmptyFamily,
    #[error("rfe has no filter score")]
    NotFilter,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Model(#[from] TreeError),
}

fn class_split<T: Scalar>(values: &[T], labels: &[u8]) -> Result<[Vec<T>; 2], SelectError> {
    if values.len() != labels.len() {
        return Err(SelectError::Length { values: values.len(), labels: labels.len() });
    }
    let mut g = [Vec::new(), Vec::new()];
    for (&v, &y) in values.iter().zip(labels) {
        g[usize::from(y.min(1))].push(v);
    }
    if g[0].is_empty() || g[1].is_empty() {
        return Err(SelectError::SingleClass);
    }
    Ok(g)
}

/// One-way ANOVA F for two groups. `+inf` when groups differ but have no
/// within-group spread; 0 when there is no spread at all.
pub fn anova_f<T: Scalar>(values: &[T], labels: &[u8]) -> Result<T, SelectError> {
    let groups = class_split(values, labels)?;
    let n = T::from_count(values.len());
    let grand = values.iter().copied().sum::<T>() / n;
    let mut ssb = T::zero();
    let mut ssw = T::zero();
    for g in &groups {
        let m = g.iter().copied().sum::<T>() / T::from_count(g.len());
        ssb = ssb + T::from_count(g.len()) * (m - grand) * (m - grand);
        ssw = ssw + g.iter().map(|&v| (v - m) * (v - m)).sum::<T>();
    }
    if !(ssw > T::zero()) {
        return Ok(if ssb > T::zero() { T::infinity() } else { T::zero() });
    }
    let df_within = T::from_count(values.len() - 2);
    Ok(ssb / (ssw / df_within))
}

/// `sum (obs - exp)^2 / exp` over the two classes, where `obs` is the class
/// sum of the feature and `exp` the class prior times the total sum.
pub fn chi2_score<T: Scalar>(values: &[T], labels: &[u8]) -> Result<T, SelectError> {
    if let Some(v) = values.iter().find(|v| **v < T::zero()) {
        return Err(SelectError::Negative(v.as_f64()));
    }
    let groups = class_split(values, labels)?;
    let total: T = values.iter().copied().sum();
    if !(total > T::zero()) {
        return Ok(T::zero());
    }
    let n = T::from_count(values.len());
    let mut chi = T::zero();
    for g in &groups {
        let obs: T = g.iter().copied().sum();
        let exp = T::from_count(g.len()) / n * total;
        chi = chi + (obs - exp) * (obs - exp) / exp;
    }
    Ok(chi)
}

/// Bin codes: equal-frequency bins for numeric columns (edges at order
/// statistics `floor(i * n / bins)`, duplicates merged), raw codes otherwise.
fn discretize<T: Scalar>(values: &[T], continuous: bool, bins: usize) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let edges: Vec<T> = if continuous {
        let n = sorted.len();
        let mut e: Vec<T> = (1..bins.max(1)).map(|i| sorted[i * n / bins]).collect();
        e.dedup();
        e
    } else {
        let mut u = sorted;
        u.dedup();
        u.into_iter().skip(1).collect()
    };
    values.iter().map(|&v| edges.partition_point(|&e| e <= v)).collect()
}

/// Plug-in mutual information (nats) between a discretised column and the label.
pub fn mutual_info<T: Scalar>(values: &[T], labels: &[u8], continuous: bool, bins: usize) -> Result<T, SelectError> {
    if values.len() != labels.len() {
        return Err(SelectError::Length { values: values.len(), labels: labels.len() });
    }
    if values.len() < 2 {
        return Err(SelectError::TooFewRows);
    }
    let codes = discretize(values, continuous, bins);
    let mut joint: BTreeMap<(usize, u8), usize> = BTreeMap::new();
    let mut px: BTreeMap<usize, usize> = BTreeMap::new();
    let mut py = [0usize; 2];
    for (&c, &y) in codes.iter().zip(labels) {
        let y = y.min(1);
        *joint.entry((c, y)).or_default() += 1;
        *px.entry(c).or_default() += 1;
        py[usize::from(y)] += 1;
    }
    let n = T::from_count(values.len());
    let mut mi = T::zero();
    for (&(c, y), &nxy) in &joint {
        let pxy = T::from_count(nxy) / n;
        let denom = T::from_count(px[&c]) * T::from_count(py[usize::from(y)]) / (n * n);
        mi = mi + pxy * (pxy / denom).ln();
    }
    Ok(mi.max(T::zero()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore<T> {
    pub name: String,
    pub score: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScoreTable<T> {
    pub method: SelectorMethod,
    pub family: ColumnKind,
    /// In column order.
    pub scores: Vec<FeatureScore<T>>,
}

impl<T: Scalar> FeatureScoreTable<T> {
    /// Positions by decreasing score; ties keep column order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| {
            self.scores[b]
                .score
                .partial_cmp(&self.scores[a].score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        idx
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("family,method,feature,score\n");
        for f in &self.scores {
            s.push_str(&format!("{},{},{},{}\n", self.family.as_str(), self.method.as_str(), f.name, f.score));
        }
        s
    }
}

/// Score the columns `cols` of `x` with a filter method.
pub fn score_features<T: Scalar>(
    x: &EncodedMatrix<T>,
    labels: &[u8],
    cols: &[usize],
    family: ColumnKind,
    method: SelectorMethod,
) -> Result<FeatureScoreTable<T>, SelectError> {
    if method == SelectorMethod::Chi2 && family == ColumnKind::Numeric {
        return Err(SelectError::Chi2Numeric);
    }
    if !method.is_filter() {
        return Err(SelectError::NotFilter);
    }
    let scores = cols
        .iter()
        .map(|&c| {
            let v = x.column(c);
            let score = match method {
                SelectorMethod::Anova => anova_f(&v, labels)?,
                SelectorMethod::Chi2 => chi2_score(&v, labels)?,
                SelectorMethod::MutualInfo => mutual_info(&v, labels, family == ColumnKind::Numeric, MI_BINS)?,
                SelectorMethod::Rfe => unreachable!("checked above"),
            };
            Ok(FeatureScore { name: x.feature_names()[c].clone(), score })
        })
        .collect::<Result<Vec<_>, SelectError>>()?;
    Ok(FeatureScoreTable { method, family, scores })
}

/// The `k` best-scoring names, returned in column order.
pub fn select_k_best<T: Scalar>(table: &FeatureScoreTable<T>, k: usize) -> Result<Vec<String>, SelectError> {
    let size = table.scores.len();
    if k == 0 || k > size {
        return Err(SelectError::K { k, size });
    }
    let mut keep: Vec<usize> = table.ranking().into_iter().take(k).collect();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| table.scores[i].name.clone()).collect())
}

/// Elimination order of `cols`: position 0 is the last survivor, the final
/// entry the first feature dropped. The kept set for any `k` is the first `k`.
///
/// Each round refits `spec` on the surviving columns and drops the one with
/// the lowest impurity importance; ties drop the later column.
pub fn rfe_ranking<T: Scalar>(
    x: &EncodedMatrix<T>,
    labels: &[u8],
    cols: &[usize],
    spec: &ClassifierSpec,
    seed: u64,
) -> Result<Vec<usize>, SelectError> {
    rfe_until(x, labels, cols, spec, 1, seed)
}

fn rfe_until<T: Scalar>(
    x: &EncodedMatrix<T>,
    labels: &[u8],
    cols: &[usize],
    spec: &ClassifierSpec,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>, SelectError> {
    if cols.is_empty() {
        return Err(SelectError::EmptyFamily);
    }
    let mut alive: Vec<usize> = cols.to_vec();
    let mut dropped = Vec::new();
    while alive.len() > k {
        let sub = x.select_columns(&alive)?;
        let model = fit(spec, &sub, labels, seed)?;
        let imp = impurity_importance(&model);
        let mut worst = 0;
        for (i, &v) in imp.values.iter().enumerate() {
            if v <= imp.values[worst] {
                worst = i;
            }
        }
        dropped.push(alive.remove(worst));
    }
    dropped.reverse();
    alive.extend(dropped);
    Ok(alive)
}

/// RFE down to `k` columns; names returned in column order.
pub fn rfe<T: Scalar>(
    x: &EncodedMatrix<T>,
    labels: &[u8],
    cols: &[usize],
    spec: &ClassifierSpec,
    k: usize,
    seed: u64,
) -> Result<Vec<String>, SelectError> {
    if k == 0 || k > cols.len() {
        return Err(SelectError::K { k, size: cols.len() });
    }
    let mut keep: Vec<usize> = rfe_until(x, labels, cols, spec, k, seed)?.into_iter().take(k).collect();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|c| x.feature_names()[c].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{canonical_arff, parse_arff};
    use crate::preprocess::{encode, fit_imputer, ImputerSpec};
    use crate::seed;
    use crate::trees::Algorithm;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn anova_examples() {
        assert_eq!(anova_f(&[1.0_f64, 2.0, 3.0, 4.0], &[0, 0, 1, 1]).unwrap(), 8.0);
        assert_eq!(anova_f(&[1.0_f64, 3.0, 3.0, 1.0], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(anova_f(&[5.0_f64; 4], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(anova_f(&[1.0_f64, 1.0, 2.0, 2.0], &[0, 0, 1, 1]).unwrap(), f64::INFINITY);
        assert!(anova_f(&[1.0_f64, 2.0], &[1, 1]).is_err());
    }

    #[test]
    fn chi2_examples() {
        // 8 rows, 5 positive: sums ckd 30, notckd 10 against expected 25, 15.
        let values = [6.0_f64, 6.0, 6.0, 6.0, 6.0, 5.0, 5.0, 0.0];
        let labels = [1, 1, 1, 1, 1, 0, 0, 0];
        assert!((chi2_score(&values, &labels).unwrap() - (1.0 + 25.0 / 15.0)).abs() < 1e-12);
        assert_eq!(chi2_score(&[1.0_f64, 1.0, 1.0, 1.0], &[1, 1, 0, 0]).unwrap(), 0.0);
        assert_eq!(chi2_score(&[0.0_f64, 0.0], &[1, 0]).unwrap(), 0.0);
        assert!(chi2_score(&[1.0_f64, 2.0], &[1, 1]).is_err());
        assert!(chi2_score(&[-1.0_f64, 2.0], &[1, 0]).is_err());
    }

    #[test]
    fn mutual_info_examples() {
        let labels: Vec<u8> = (0..400).map(|i| u8::from(i < 250)).collect();
        let h = -(0.625_f64 * 0.625_f64.ln() + 0.375 * 0.375_f64.ln());
        let as_values: Vec<f64> = labels.iter().map(|&y| f64::from(y)).collect();
        for continuous in [false, true] {
            let mi = mutual_info(&as_values, &labels, continuous, MI_BINS).unwrap();
            assert!((mi - h).abs() < 1e-12);
            assert!((mi - 0.6616).abs() < 1e-4);
        }
        assert_eq!(mutual_info(&vec![3.0_f64; 400], &labels, true, MI_BINS).unwrap(), 0.0);
        let relabeled: Vec<f64> = as_values.iter().map(|&v| 10.0 - 7.0 * v).collect();
        assert_eq!(
            mutual_info(&relabeled, &labels, false, MI_BINS).unwrap(),
            mutual_info(&as_values, &labels, false, MI_BINS).unwrap()
        );
        assert!(mutual_info(&[1.0_f64], &[1], false, MI_BINS).is_err());
    }

    #[test]
    fn equal_frequency_edges() {
        let v: Vec<f64> = (0..20).map(f64::from).collect();
        let codes = discretize(&v, true, 10);
        assert_eq!(codes, (0..20).map(|i| i / 2).collect::<Vec<_>>());
        let tied = [1.0_f64, 1.0, 1.0, 1.0, 2.0];
        // Ties collapse the edges; only the grouping matters.
        assert_eq!(discretize(&tied, true, 10), vec![1, 1, 1, 1, 2]);
    }

    fn table(scores: &[(&str, f64)]) -> FeatureScoreTable<f64> {
        FeatureScoreTable {
            method: SelectorMethod::Anova,
            family: ColumnKind::Numeric,
            scores: scores.iter().map(|(n, s)| FeatureScore { name: n.to_string(), score: *s }).collect(),
        }
    }

    #[test]
    fn top_k() {
        let t = table(&[("a", 3.0), ("b", 1.0), ("c", 2.0)]);
        assert_eq!(select_k_best(&t, 2).unwrap(), vec!["a", "c"]);
        assert_eq!(select_k_best(&t, 3).unwrap(), vec!["a", "b", "c"]);
        assert!(select_k_best(&t, 0).is_err());
        assert!(select_k_best(&t, 4).is_err());
        let tied = table(&[("a", 1.0), ("b", 2.0), ("c", 2.0), ("d", f64::INFINITY)]);
        assert_eq!(select_k_best(&tied, 2).unwrap(), vec!["b", "d"]);
    }

    #[test]
    fn pcv_in_top_two_numeric_by_mutual_info() {
        let ds = parse_arff(canonical_arff().as_bytes()).unwrap();
        let rows: Vec<usize> = (0..ds.n_rows()).collect();
        let imp = fit_imputer(&ds, &rows, ImputerSpec::default()).unwrap();
        let x: EncodedMatrix<f64> = encode(&imp.apply(&ds, &rows).unwrap()).unwrap();
        let cols = x.family_columns(ColumnKind::Numeric);
        let t = score_features(&x, ds.target(), &cols, ColumnKind::Numeric, SelectorMethod::MutualInfo).unwrap();
        let top2: Vec<&str> = t.ranking().iter().take(2).map(|&i| t.scores[i].name.as_str()).collect();
        assert!(top2.contains(&"pcv"), "top two: {top2:?}");
        assert!(score_features(&x, ds.target(), &cols, ColumnKind::Numeric, SelectorMethod::Chi2).is_err());
    }

    fn rfe_fixture() -> (EncodedMatrix<f64>, Vec<u8>) {
        let mut rng = seed::rng(3);
        let y: Vec<u8> = (0..60).map(|i| u8::from(i % 3 == 0)).collect();
        let rows: Vec<Vec<f64>> =
            y.iter().map(|&l| vec![rng.gen_range(0.0..1.0), f64::from(l), rng.gen_range(0.0..1.0)]).collect();
        (EncodedMatrix::from_rows(&["n1", "copy", "n2"], &rows).unwrap(), y)
    }

    #[test]
    fn rfe_keeps_label_copy() {
        let (x, y) = rfe_fixture();
        for alg in Algorithm::ALL {
            let spec = ClassifierSpec::default_for(alg);
            assert_eq!(rfe(&x, &y, &[0, 1, 2], &spec, 1, 5).unwrap(), vec!["copy"], "{alg:?}");
            assert_eq!(rfe(&x, &y, &[0, 1, 2], &spec, 3, 5).unwrap(), vec!["n1", "copy", "n2"]);
        }
        let spec = ClassifierSpec::default_for(Algorithm::RandomForest);
        assert_eq!(rfe_ranking(&x, &y, &[0, 1, 2], &spec, 8).unwrap(), rfe_ranking(&x, &y, &[0, 1, 2], &spec, 8).unwrap());
    }

    #[test]
    fn rfe_prefix_matches_direct_elimination() {
        let (x, y) = rfe_fixture();
        let spec = ClassifierSpec::default_for(Algorithm::Xgboost);
        let ranking = rfe_ranking(&x, &y, &[0, 1, 2], &spec, 1).unwrap();
        for k in 1..=3 {
            let mut prefix: Vec<usize> = ranking[..k].to_vec();
            prefix.sort_unstable();
            let names: Vec<String> = prefix.iter().map(|&c| x.feature_names()[c].clone()).collect();
            assert_eq!(rfe(&x, &y, &[0, 1, 2], &spec, k, 1).unwrap(), names);
        }
    }

    proptest! {
        #[test]
        fn filters_invariant_under_row_permutation(seed in any::<u64>()) {
            let mut rng = seed::rng(seed);
            let n = 40;
            let v: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0u8..6))).collect();
            let y: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0 || rng.gen_bool(0.2))).collect();
            let mut idx: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), &mut rng);
            let vp: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
            let yp: Vec<u8> = idx.iter().map(|&i| y[i]).collect();
            let a = anova_f(&v, &y).unwrap();
            let b = anova_f(&vp, &yp).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            let a = chi2_score(&v, &y).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - chi2_score(&vp, &yp).unwrap()).abs() <= 1e-9 * a.max(1.0));
            for cont in [false, true] {
                let a = mutual_info(&v, &y, cont, MI_BINS).unwrap();
                prop_assert!(a >= 0.0);
                prop_assert!((a - mutual_info(&vp, &yp, cont, MI_BINS).unwrap()).abs() <= 1e-12);
            }
        }

        #[test]
        fn select_k_best_returns_exactly_k(scores in proptest::collection::vec(0.0f64..10.0, 1..12), k in 1usize..12) {
            prop_assume!(k <= scores.len());
            let names: Vec<String> = (0..scores.len()).map(|i| format!("f{i}")).collect();
            let t = FeatureScoreTable {
                method: SelectorMethod::MutualInfo,
                family: ColumnKind::Nominal,
                scores: names.iter().zip(&scores).map(|(n, &s)| FeatureScore { name: n.clone(), score: s }).collect(),
            };
            let kept = select_k_best(&t, k).unwrap();
            prop_assert_eq!(kept.len(), k);
            prop_assert!(kept.iter().all(|n| names.contains(n)));
        }
    }

    #[test]
    fn self_information_beats_random_label() {
        let mut rng = seed::rng(17);
        let v: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..1.0)).collect();
        let own: Vec<u8> = v.iter().map(|&x| u8::from(x > 0.5)).collect();
        let random: Vec<u8> = (0..200).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        assert!(mutual_info(&v, &own, true, MI_BINS).unwrap() >= mutual_info(&v, &random, true, MI_BINS).unwrap());
    }
}
