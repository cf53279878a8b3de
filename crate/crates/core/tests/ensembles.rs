use ckdx_core::dataset::{canonical_arff, parse_arff};
use ckdx_core::explain::{default_grid, pdp, shapley_exact, OutputSpace};
use ckdx_core::preprocess::{encode, fit_imputer, EncodedMatrix, ImputerSpec};
use ckdx_core::scalar::Scalar;
use ckdx_core::trees::{deserialize_model, fit, serialize_model, Algorithm, ClassifierSpec, TreeEnsembleModel};

fn ckd_matrix<T: Scalar>() -> (EncodedMatrix<T>, Vec<u8>) {
    let ds = parse_arff(canonical_arff().as_bytes()).unwrap();
    let rows: Vec<usize> = (0..ds.n_rows()).collect();
    let imp = fit_imputer(&ds, &rows, ImputerSpec::default()).unwrap();
    let full = imp.apply(&ds, &rows).unwrap();
    (encode(&full).unwrap(), full.target().to_vec())
}

fn log_loss(model: &TreeEnsembleModel<f64>, x: &EncodedMatrix<f64>, y: &[u8]) -> f64 {
    let m = model.predict_margin(x).unwrap();
    m.iter().zip(y).map(|(&m, &y)| (1.0 + (-m).exp()).ln() + (1.0 - f64::from(y)) * m).sum::<f64>() / y.len() as f64
}

#[test]
fn boosting_training_loss_never_increases() {
    let (x, y) = ckd_matrix::<f64>();
    let mut spec = ClassifierSpec::default_for(Algorithm::Xgboost);
    spec.hyperparameters.n_estimators = 40;
    let full = fit(&spec, &x, &y, 3).unwrap();
    let mut previous = f64::INFINITY;
    for k in 0..=full.trees.len() {
        let mut prefix = full.clone();
        prefix.trees.truncate(k);
        prefix.tree_weights.truncate(k);
        let loss = log_loss(&prefix, &x, &y);
        assert!(loss <= previous + 1e-12, "round {k}: {loss} > {previous}");
        previous = loss;
    }
    assert!(previous < 0.1);
}

#[test]
fn every_algorithm_fits_ckd_and_round_trips() {
    let (x, y) = ckd_matrix::<f64>();
    for alg in Algorithm::ALL {
        let model = fit(&ClassifierSpec::default_for(alg), &x, &y, 11).unwrap();
        let pred = model.predict(&x).unwrap();
        let hits = pred.iter().zip(&y).filter(|(a, b)| a == b).count();
        assert!(hits as f64 / y.len() as f64 >= 0.97, "{} training accuracy {hits}/400", alg.as_str());
        let bytes = serialize_model(&model);
        let back: TreeEnsembleModel<f64> = deserialize_model(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(serialize_model(&back), bytes);
        assert!(deserialize_model::<f32>(&bytes).is_err());
    }
}

#[test]
fn single_precision_pipeline_agrees_with_double() {
    let (x64, y) = ckd_matrix::<f64>();
    let (x32, _) = ckd_matrix::<f32>();
    let spec = ClassifierSpec::default_for(Algorithm::Cart);
    let a = fit(&spec, &x64, &y, 5).unwrap().predict(&x64).unwrap();
    let b = fit(&spec, &x32, &y, 5).unwrap().predict(&x32).unwrap();
    let agree = a.iter().zip(&b).filter(|(p, q)| p == q).count();
    assert!(agree >= 396, "{agree}/400");
}

#[test]
fn zero_round_boosting_has_flat_prior_dependence() {
    let (x, y) = ckd_matrix::<f64>();
    let mut spec = ClassifierSpec::default_for(Algorithm::Xgboost);
    spec.hyperparameters.n_estimators = 0;
    let prior = fit(&spec, &x, &y, 0).unwrap();
    let grid = default_grid(&x, x.position("pcv").unwrap());
    let curve = pdp(&prior, &x, "pcv", &grid).unwrap();
    assert!(grid.len() > 1);
    assert!(curve.values.iter().all(|v| (v - 0.625).abs() <= 1e-12));
}

#[test]
fn unused_features_get_zero_attribution() {
    let (x, y) = ckd_matrix::<f64>();
    let mut spec = ClassifierSpec::default_for(Algorithm::Xgboost);
    spec.hyperparameters.n_estimators = 5;
    spec.hyperparameters.max_depth = Some(2);
    let names: Vec<String> = ["hemo", "sg", "htn", "age"].map(String::from).to_vec();
    let xs = x.select_names(&names).unwrap();
    let model = fit(&spec, &xs, &y, 0).unwrap();
    let used: Vec<usize> = model.trees.iter().flat_map(|t| t.used_features()).collect();
    let bg = xs.select_rows(&(0..400).step_by(9).collect::<Vec<_>>()).unwrap();
    for i in [0, 150, 399] {
        let rec = shapley_exact(&model, i, xs.row(i), &bg, OutputSpace::Margin).unwrap();
        for j in 0..4 {
            if !used.contains(&j) {
                assert_eq!(rec.phi[j], 0.0);
            }
        }
        assert!((rec.base + rec.phi.iter().sum::<f64>() - rec.output).abs() <= 1e-9);
    }
}
