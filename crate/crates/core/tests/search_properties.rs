use ckdx_core::dataset::{
    canonical_arff, parse_arff, Cell, ColumnKind, ColumnSchema, ColumnValues, Dataset, DatasetSchema, TargetSchema,
};
use ckdx_core::metrics::ClassificationReport;
use ckdx_core::preprocess::ImputerSpec;
use ckdx_core::search::{
    enumerate_configs, evaluate_all, evaluate_config_cv, family_sizes, run_search, search_best, ConfigEvaluation,
    CvOutcome, DataPlan, FamilyAxis, GridSpec, PipelineConfig, SearchSettings,
};
use ckdx_core::select::{SelectorMethod, SelectorSpec};
use ckdx_core::trees::{serialize_model, Algorithm, ClassifierSpec};

fn ckd() -> Dataset {
    parse_arff(canonical_arff().as_bytes()).unwrap()
}

fn config(classifier: ClassifierSpec, ks: [usize; 3]) -> PipelineConfig {
    let methods = [SelectorMethod::Anova, SelectorMethod::Chi2, SelectorMethod::MutualInfo];
    PipelineConfig {
        imputer: ImputerSpec::default(),
        selectors: [0, 1, 2].map(|i| SelectorSpec { family: ColumnKind::ALL[i], method: methods[i], k: ks[i] }),
        classifier,
        seed: 42,
    }
}

/// One filter point per family for every listed classifier.
fn small_grid(classifiers: Vec<ClassifierSpec>) -> GridSpec {
    GridSpec {
        numeric: FamilyAxis { methods: vec![SelectorMethod::Anova], ks: vec![2, 4] },
        nominal: FamilyAxis { methods: vec![SelectorMethod::Chi2], ks: vec![3] },
        ordinal: FamilyAxis { methods: vec![SelectorMethod::MutualInfo], ks: vec![1] },
        numeric_imputers: vec![ckdx_core::preprocess::NumericStrategy::Mean],
        classifiers,
        ..GridSpec::default()
    }
}

fn majority_cart() -> ClassifierSpec {
    let mut c = ClassifierSpec::default_for(Algorithm::Cart);
    c.hyperparameters.max_depth = Some(0);
    c
}

#[test]
fn majority_predictor_scores_the_majority_rate() {
    let ds = ckd();
    let plan = DataPlan::new(&ds, &SearchSettings::default()).unwrap();
    let out: CvOutcome<f64> = evaluate_config_cv(&config(majority_cart(), [4, 3, 1]), &ds, &plan).unwrap();
    for f in &out.folds {
        assert_eq!(f.accuracy, Some(35.0 / 56.0));
    }
    assert!((out.mean.accuracy.unwrap() - 0.625).abs() < 1e-12);
}

fn separable_dataset() -> Dataset {
    let n = 100;
    let target: Vec<u8> = (0..n).map(|i| u8::from(i % 5 < 3)).collect();
    let signal = target.iter().enumerate().map(|(i, &t)| Some(f64::from(t) * 10.0 + (i % 7) as f64)).collect();
    let nominal = (0..n).map(|i| Some((i * 7 % 3) as u32)).collect();
    let ordinal = (0..n).map(|i| Some((i * 11 % 4) as u32)).collect();
    let schema = DatasetSchema {
        columns: vec![
            ColumnSchema::numeric("signal", ""),
            ColumnSchema::categorical("colour", ColumnKind::Nominal, &["red", "green", "blue"], ""),
            ColumnSchema::categorical("grade", ColumnKind::Ordinal, &["0", "1", "2", "3"], ""),
        ],
        target: TargetSchema { name: "class".into(), positive: "yes".into(), negative: "no".into() },
    };
    Dataset::new(
        schema,
        vec![ColumnValues::Numeric(signal), ColumnValues::Categorical(nominal), ColumnValues::Categorical(ordinal)],
        target,
    )
    .unwrap()
}

#[test]
fn separable_feature_gives_perfect_cart_cv() {
    let ds = separable_dataset();
    let plan = DataPlan::new(&ds, &SearchSettings::default()).unwrap();
    let cfg = config(ClassifierSpec::default_for(Algorithm::Cart), [1, 1, 1]);
    let out: CvOutcome<f64> = evaluate_config_cv(&cfg, &ds, &plan).unwrap();
    assert_eq!(out.mean.accuracy, Some(1.0));
}

#[test]
fn memoized_and_direct_evaluation_agree() {
    let ds = ckd();
    let plan = DataPlan::new(&ds, &SearchSettings::default()).unwrap();
    let grid = small_grid(vec![ClassifierSpec::default_for(Algorithm::Cart), ClassifierSpec::default_for(Algorithm::Adaboost)]);
    let configs = enumerate_configs(&grid, family_sizes(&ds), 42).unwrap();
    let all: Vec<ConfigEvaluation<f64>> = evaluate_all(&configs, &ds, &plan, None);
    for (e, c) in all.iter().zip(&configs) {
        let direct: CvOutcome<f64> = evaluate_config_cv(c, &ds, &plan).unwrap();
        assert_eq!(e.outcome.as_ref().unwrap(), &direct);
    }
    let again: Vec<ConfigEvaluation<f64>> = evaluate_all(&configs, &ds, &plan, None);
    assert_eq!(serde_json::to_string(&all).unwrap(), serde_json::to_string(&again).unwrap());
}

#[test]
fn winner_dominates_its_classifier_and_ignores_dominated_additions() {
    let ds = ckd();
    let settings = SearchSettings::default();
    let base = small_grid(vec![ClassifierSpec::default_for(Algorithm::Cart)]);
    let out = run_search::<f64>(&ds, &base, &settings, None).unwrap();
    let w = &out.results[0];
    for e in &out.evaluations {
        assert!(w.cv.accuracy.unwrap() >= e.outcome.as_ref().unwrap().mean.accuracy.unwrap());
    }
    let mut widened = base.clone();
    widened.classifiers.push(majority_cart());
    let out2 = run_search::<f64>(&ds, &widened, &settings, None).unwrap();
    assert_eq!(out2.evaluations.len(), 2 * out.evaluations.len());
    assert_eq!(out2.results[0].config_hash, w.config_hash);
    assert_eq!(serialize_model(&out2.results[0].pipeline.model), serialize_model(&w.pipeline.model));
}

fn synthetic(index: usize, alg: Algorithm, ks: [usize; 3], acc: f64) -> ConfigEvaluation<f64> {
    let c = config(ClassifierSpec::default_for(alg), ks);
    let mean = ClassificationReport { accuracy: Some(acc), ..ClassificationReport::default() };
    ConfigEvaluation { index, hash: c.hash(), config: c, outcome: Ok(CvOutcome { folds: vec![], mean }) }
}

#[test]
fn ranking_prefers_accuracy_then_fewer_features_then_order() {
    let evals = vec![
        synthetic(0, Algorithm::Cart, [4, 3, 1], 0.95),
        synthetic(1, Algorithm::Cart, [2, 3, 1], 0.95),
        synthetic(2, Algorithm::Cart, [1, 1, 1], 0.90),
        synthetic(3, Algorithm::Cart, [2, 2, 2], 0.95),
        synthetic(4, Algorithm::Xgboost, [1, 1, 1], 0.97),
        ConfigEvaluation { outcome: Err("boom".into()), ..synthetic(5, Algorithm::Xgboost, [1, 1, 1], 1.0) },
    ];
    let best: Vec<usize> = search_best(&evals).iter().map(|e| e.index).collect();
    assert_eq!(best, vec![1, 4]);
    let mut injected = evals.clone();
    injected.push(synthetic(6, Algorithm::Cart, [11, 10, 3], 0.96));
    let best: Vec<usize> = search_best(&injected).iter().map(|e| e.index).collect();
    assert_eq!(best, vec![6, 4]);
}

#[test]
fn held_out_cells_never_reach_fitted_models() {
    let ds = ckd();
    let settings = SearchSettings::default();
    let grid = small_grid(Algorithm::ALL.into_iter().map(ClassifierSpec::default_for).collect());
    let plan = DataPlan::new(&ds, &settings).unwrap();
    let mut mutated = ds.clone();
    for &row in plan.split.test.iter().step_by(7) {
        for col in 0..ds.n_columns() {
            let cell = match ds.cell(row, col) {
                Cell::Number(v) => Cell::Number(-v - 1000.0),
                Cell::Category(_) => Cell::Missing,
                Cell::Missing if ds.schema().columns[col].kind == ColumnKind::Numeric => Cell::Number(1e6),
                Cell::Missing => Cell::Category(0),
            };
            mutated = mutated.with_cell(row, col, cell).unwrap();
        }
    }
    let a = run_search::<f64>(&ds, &grid, &settings, None).unwrap();
    let b = run_search::<f64>(&mutated, &grid, &settings, None).unwrap();
    assert_eq!(a.results.len(), 5);
    for (x, y) in a.results.iter().zip(&b.results) {
        assert_eq!(serialize_model(&x.pipeline.model), serialize_model(&y.pipeline.model));
        assert_eq!(x.cv, y.cv);
    }
}

#[test]
fn all_failing_configs_drop_the_row_without_aborting() {
    let ds = separable_dataset();
    let mut broken = ds.clone();
    for row in 0..ds.n_rows() {
        broken = broken.with_cell(row, 1, Cell::Missing).unwrap();
    }
    let grid = GridSpec {
        numeric: FamilyAxis { methods: vec![SelectorMethod::Anova], ks: vec![1] },
        nominal: FamilyAxis { methods: vec![SelectorMethod::Chi2], ks: vec![1] },
        ordinal: FamilyAxis { methods: vec![SelectorMethod::Chi2], ks: vec![1] },
        ..small_grid(vec![ClassifierSpec::default_for(Algorithm::Cart)])
    };
    let out = run_search::<f64>(&broken, &grid, &SearchSettings::default(), None).unwrap();
    assert!(out.results.is_empty());
    assert_eq!(out.balanced, None);
    assert_eq!(out.missing.len(), 1);
    assert!(out.evaluations.iter().all(|e| e.outcome.is_err()));
    let ok = run_search::<f64>(&ds, &grid, &SearchSettings::default(), None).unwrap();
    assert_eq!(ok.results.len(), 1);
}

#[test]
fn all_positive_predictor_scores_the_test_prevalence() {
    let ds = ckd();
    let plan = DataPlan::new(&ds, &SearchSettings::default()).unwrap();
    let labels: Vec<u8> = plan.split.test.iter().map(|&r| ds.target()[r]).collect();
    let cm = ckdx_core::metrics::confusion(&labels, &vec![1; labels.len()]).unwrap();
    let r: ClassificationReport<f64> = ckdx_core::metrics::classification_metrics(&cm);
    assert_eq!((cm.tp, cm.fp), (75, 45));
    assert_eq!(r.accuracy, Some(0.625));
}
