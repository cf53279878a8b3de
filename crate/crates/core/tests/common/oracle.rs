//! Brute-force oracles for impurity importance and exact Shapley values on
//! small seeded ensembles. Shared by the core tests and the acceptance suite.
//!
//! Ensembles use algorithms whose node weights are plain sample counts
//! (CART, unbootstrapped random forest, extra trees, gradient boosting), so
//! the gain oracle can recount every node from the training rows alone.

use ckdx_core::explain::{impurity_importance, shapley_exact, OutputSpace};
use ckdx_core::preprocess::EncodedMatrix;
use ckdx_core::seed;
use ckdx_core::trees::{fit, Algorithm, ClassifierSpec, FeatureSubsample, Hyperparameters, Node, TreeEnsembleModel};
use rand::Rng;

pub const CASES: u64 = 100;
pub const TOL: f64 = 1e-9;

pub struct Case {
    pub x: EncodedMatrix<f64>,
    pub y: Vec<u8>,
    pub model: TreeEnsembleModel<f64>,
}

pub fn make_case(i: u64) -> Case {
    let mut rng = seed::rng(seed::derive_seed(7, "oracle-case", i));
    let d = rng.gen_range(1..=4);
    let n = rng.gen_range(12..=40);
    let names: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let levels: Vec<u32> = (0..d).map(|_| rng.gen_range(2..=6)).collect();
    let rows: Vec<Vec<f64>> =
        (0..n).map(|_| levels.iter().map(|&l| f64::from(rng.gen_range(0..l))).collect()).collect();
    let mut y: Vec<u8> = rows
        .iter()
        .map(|r| {
            let s: f64 = r.iter().enumerate().map(|(j, v)| v * (j as f64 + 1.0)).sum();
            u8::from(s + rng.gen_range(-2.0..2.0) > 2.0 * d as f64)
        })
        .collect();
    y[0] = 0;
    y[1] = 1;
    let x = EncodedMatrix::from_rows(&name_refs, &rows).unwrap();
    let algorithm = [Algorithm::Cart, Algorithm::RandomForest, Algorithm::ExtraTrees, Algorithm::Xgboost]
        [rng.gen_range(0..4)];
    let mut hp = Hyperparameters::default_for(algorithm);
    hp.n_estimators = if algorithm == Algorithm::Cart { 1 } else { rng.gen_range(1..=3) };
    hp.max_depth = Some(rng.gen_range(1..=2));
    hp.bootstrap = false;
    if algorithm == Algorithm::RandomForest {
        hp.feature_subsample = FeatureSubsample::Count(rng.gen_range(1..=d));
    }
    if algorithm == Algorithm::Xgboost {
        hp.learning_rate = rng.gen_range(0.1..1.0);
        hp.l2 = rng.gen_range(0.0..2.0);
    }
    let model = fit(&ClassifierSpec { algorithm, hyperparameters: hp }, &x, &y, rng.gen()).unwrap();
    assert!(model.trees.len() <= 3 && model.trees.iter().all(|t| t.depth() <= 2));
    Case { x, y, model }
}

fn gini(labels: &[u8]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let p = labels.iter().filter(|&&v| v == 1).count() as f64 / labels.len() as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Gains recounted by routing the training rows through every split.
pub fn oracle_importance(case: &Case) -> Option<Vec<f64>> {
    let d = case.x.n_features();
    let mut acc = vec![0.0; d];
    let mut wsum = 0.0;
    for (tree, &w) in case.model.trees.iter().zip(&case.model.tree_weights) {
        let mut reach: Vec<Vec<u8>> = vec![Vec::new(); tree.nodes.len()];
        for i in 0..case.x.n_rows() {
            let row = case.x.row(i);
            let mut k = 0;
            loop {
                reach[k].push(case.y[i]);
                match tree.nodes[k] {
                    Node::Split { feature, threshold, left, right, .. } => {
                        k = if row[feature] < threshold { left } else { right };
                    }
                    Node::Leaf { .. } => break,
                }
            }
        }
        for (k, node) in tree.nodes.iter().enumerate() {
            if let Node::Split { feature, left, right, .. } = *node {
                let n = |v: &Vec<u8>| v.len() as f64;
                acc[feature] += w
                    * (n(&reach[k]) * gini(&reach[k])
                        - n(&reach[left]) * gini(&reach[left])
                        - n(&reach[right]) * gini(&reach[right]));
            }
        }
        wsum += w;
    }
    let total: f64 = acc.iter().map(|a| a / wsum).sum();
    (total > 0.0).then(|| acc.iter().map(|a| a / wsum / total).collect())
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Shapley values by the permutation-weight formula over all coalitions.
pub fn oracle_shapley(model: &TreeEnsembleModel<f64>, x: &[f64], bg: &EncodedMatrix<f64>, margin: bool) -> Vec<f64> {
    let d = x.len();
    let value = |mask: usize| -> f64 {
        let mut s = 0.0;
        for b in 0..bg.n_rows() {
            let z: Vec<f64> = (0..d).map(|j| if mask >> j & 1 == 1 { x[j] } else { bg.get(b, j) }).collect();
            s += if margin { model.predict_margin_row(&z).unwrap() } else { model.predict_proba_row(&z) };
        }
        s / bg.n_rows() as f64
    };
    (0..d)
        .map(|j| {
            let mut phi = 0.0;
            for mask in 0..1usize << d {
                if mask >> j & 1 == 1 {
                    continue;
                }
                let s = mask.count_ones() as usize;
                let weight = factorial(s) * factorial(d - s - 1) / factorial(d);
                phi += weight * (value(mask | 1 << j) - value(mask));
            }
            phi
        })
        .collect()
}

/// Compare [`impurity_importance`] with the recount. `Ok(true)` when the
/// ensemble has at least one positive-gain split.
pub fn check_importance(i: u64, case: &Case) -> Result<bool, String> {
    let got = impurity_importance(&case.model);
    match oracle_importance(case) {
        Some(expected) => {
            let close = !got.degenerate && got.values.iter().zip(&expected).all(|(g, e)| (g - e).abs() <= TOL);
            if close {
                Ok(true)
            } else {
                Err(format!("case {i}: {:?} vs {expected:?}", got.values))
            }
        }
        None if got.degenerate && got.values.iter().all(|&v| v == 0.0) => Ok(false),
        None => Err(format!("case {i}: expected a degenerate vector, got {:?}", got.values)),
    }
}

/// Compare [`shapley_exact`] with coalition enumeration on three seeded
/// instances, in probability space and (for boosting) margin space.
pub fn check_shapley(i: u64, case: &Case) -> Result<(), String> {
    let mut rng = seed::rng(seed::derive_seed(7, "oracle-shap", i));
    let bg_rows: Vec<usize> = (0..rng.gen_range(1..=8)).map(|_| rng.gen_range(0..case.x.n_rows())).collect();
    let bg = case.x.select_rows(&bg_rows).map_err(|e| e.to_string())?;
    let mut spaces = vec![OutputSpace::Probability];
    if case.model.algorithm == Algorithm::Xgboost {
        spaces.push(OutputSpace::Margin);
    }
    for probe in 0..3 {
        let instance = case.x.row(rng.gen_range(0..case.x.n_rows())).to_vec();
        for &space in &spaces {
            let rec = shapley_exact(&case.model, probe, &instance, &bg, space).map_err(|e| e.to_string())?;
            let expected = oracle_shapley(&case.model, &instance, &bg, space == OutputSpace::Margin);
            if rec.phi.iter().zip(&expected).any(|(g, e)| (g - e).abs() > TOL) {
                return Err(format!("case {i}: {:?} vs {expected:?}", rec.phi));
            }
            let sum: f64 = rec.base + rec.phi.iter().sum::<f64>();
            if (sum - rec.output).abs() > TOL {
                return Err(format!("case {i}: local accuracy off by {}", sum - rec.output));
            }
        }
    }
    Ok(())
}
