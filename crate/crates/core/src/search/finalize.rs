use std::cmp::Ordering;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::{family_ranking, kept, prepare, score_subset};
use super::{enumerate_configs, evaluate_all, family_sizes, ConfigEvaluation, CvCache, DataPlan, GridSpec};
use super::{PipelineConfig, SearchError, SearchSettings};
use crate::dataset::{ColumnKind, Dataset};
use crate::metrics::{
    classification_metrics, confusion, explainability_metrics, ClassificationReport, ConfusionMatrix, ExplainabilityReport,
};
use crate::preprocess::FittedImputer;
use crate::scalar::Scalar;
use crate::select::SelectorMethod;
use crate::seed;
use crate::trees::{Algorithm, ClassifierSpec, TreeEnsembleModel};

/// Accuracy gap below which two CV means count as tied.
const TIE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySelection {
    pub family: ColumnKind,
    pub method: SelectorMethod,
    pub k: usize,
    /// In schema order.
    pub features: Vec<String>,
}

/// Everything fitted on the full training split for one winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline<T> {
    pub imputer: FittedImputer,
    pub families: Vec<FamilySelection>,
    /// Union of the family selections, in schema order.
    pub selected: Vec<String>,
    pub model: TreeEnsembleModel<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult<T> {
    pub algorithm: Algorithm,
    pub config: PipelineConfig,
    pub config_hash: String,
    pub config_index: usize,
    pub cv: ClassificationReport<T>,
    pub cv_folds: Vec<ClassificationReport<T>>,
    pub holdout: ClassificationReport<T>,
    pub holdout_confusion: ConfusionMatrix,
    pub selected: Vec<String>,
    pub families: Vec<FamilySelection>,
    /// CV of a default CART restricted to `selected`.
    pub surrogate_cv: ClassificationReport<T>,
    pub explainability: ExplainabilityReport<T>,
    #[serde(skip)]
    pub pipeline: FittedPipeline<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome<T> {
    pub settings: SearchSettings,
    pub grid: GridSpec,
    pub plan: DataPlan,
    pub evaluations: Vec<ConfigEvaluation<T>>,
    /// One per classifier that had a successful configuration, in classifier order.
    pub results: Vec<SearchResult<T>>,
    /// Index into `results` of the FIR-balanced winner.
    pub balanced: Option<usize>,
    /// Classifiers without any successful configuration or whose refit failed.
    pub missing: Vec<(Algorithm, String)>,
}

fn cv_accuracy<T: Scalar>(e: &ConfigEvaluation<T>) -> Option<f64> {
    e.outcome.as_ref().ok().and_then(|o| o.mean.accuracy).map(Scalar::as_f64)
}

/// Better-first order: higher CV accuracy, then fewer kept features, then
/// earlier enumeration index.
fn rank<T: Scalar>(a: &ConfigEvaluation<T>, b: &ConfigEvaluation<T>) -> Ordering {
    let (x, y) = (cv_accuracy(a).unwrap_or(f64::NEG_INFINITY), cv_accuracy(b).unwrap_or(f64::NEG_INFINITY));
    if (x - y).abs() > TIE {
        return y.partial_cmp(&x).unwrap_or(Ordering::Equal);
    }
    a.config.total_k().cmp(&b.config.total_k()).then(a.index.cmp(&b.index))
}

/// Best successful configuration of each classifier present, in classifier order.
pub fn search_best<T: Scalar>(evaluations: &[ConfigEvaluation<T>]) -> Vec<&ConfigEvaluation<T>> {
    Algorithm::ALL
        .into_iter()
        .filter_map(|alg| {
            evaluations
                .iter()
                .filter(|e| e.config.classifier.algorithm == alg && cv_accuracy(e).is_some())
                .min_by(|a, b| rank(a, b))
        })
        .collect()
}

/// Refit a winner on the whole training split, score it on the test rows,
/// and compute its CART-surrogate explainability scores.
pub fn finalize<T: Scalar>(
    evaluation: &ConfigEvaluation<T>,
    ds: &Dataset,
    plan: &DataPlan,
) -> Result<SearchResult<T>, SearchError> {
    let config = &evaluation.config;
    let cv = evaluation.outcome.clone().map_err(|m| SearchError::Stage { stage: "cv", message: m })?;
    let n_folds = plan.folds.len();
    let p = prepare::<T>(ds, &plan.split.train, &plan.split.test, config.imputer)?;
    let rfe_seed = seed::derive_seed(config.seed, "rfe", n_folds as u64);
    let mut cols = Vec::new();
    let mut families = Vec::new();
    for sel in &config.selectors {
        let r = family_ranking(&p.xtr, &p.ytr, sel.family, sel.method, &config.classifier, rfe_seed)?;
        let mut chosen = kept(&r, sel.k)?;
        chosen.sort_unstable();
        families.push(FamilySelection {
            family: sel.family,
            method: sel.method,
            k: sel.k,
            features: chosen.iter().map(|&c| p.xtr.feature_names()[c].clone()).collect(),
        });
        cols.extend(chosen);
    }
    cols.sort_unstable();
    let selected: Vec<String> = cols.iter().map(|&c| p.xtr.feature_names()[c].clone()).collect();
    let (model, holdout) =
        score_subset(&p, &cols, &config.classifier, seed::derive_seed(config.seed, "final-fit", 0))?;
    let pred = model.predict(&p.xev.select_columns(&cols).map_err(|e| SearchError::stage("select", e))?)
        .map_err(|e| SearchError::stage("predict", e))?;
    let holdout_confusion = confusion(&p.yev, &pred).map_err(|e| SearchError::stage("score", e))?;
    debug_assert_eq!(classification_metrics::<T>(&holdout_confusion), holdout);

    let surrogate_spec = ClassifierSpec::default_for(Algorithm::Cart);
    let mut surrogate_folds = Vec::with_capacity(n_folds);
    for (f, held) in plan.folds.iter().enumerate() {
        let pf = prepare::<T>(ds, &plan.fold_train(f), held, config.imputer)?;
        let fold_cols: Vec<usize> = selected
            .iter()
            .map(|n| pf.xtr.position(n).ok_or_else(|| SearchError::stage("surrogate", format!("missing column {n}"))))
            .collect::<Result<_, _>>()?;
        let seed = seed::derive_seed(config.seed, "surrogate", f as u64);
        surrogate_folds.push(score_subset(&pf, &fold_cols, &surrogate_spec, seed)?.1);
    }
    let surrogate_cv = ClassificationReport::mean(&surrogate_folds);
    let total = ds.n_columns();
    let explainability = explainability_metrics(
        total - selected.len(),
        total,
        surrogate_cv.accuracy_or_zero(),
        cv.mean.accuracy_or_zero(),
    )
    .map_err(|e| SearchError::stage("explainability", e))?;

    Ok(SearchResult {
        algorithm: config.classifier.algorithm,
        config: config.clone(),
        config_hash: evaluation.hash.clone(),
        config_index: evaluation.index,
        cv: cv.mean,
        cv_folds: cv.folds,
        holdout,
        holdout_confusion,
        selected: selected.clone(),
        families: families.clone(),
        surrogate_cv,
        explainability,
        pipeline: FittedPipeline { imputer: p.imputer, families, selected, model },
    })
}

/// Result whose FIR is closest to 0.5; ties go to higher holdout accuracy,
/// then to the earlier result.
pub fn select_by_fir<T: Scalar>(results: &[SearchResult<T>]) -> Option<usize> {
    let key = |r: &SearchResult<T>| {
        ((r.explainability.fir.as_f64() - 0.5).abs(), r.holdout.accuracy.map_or(f64::NEG_INFINITY, Scalar::as_f64))
    };
    (0..results.len()).min_by(|&a, &b| {
        let (da, ha) = key(&results[a]);
        let (db, hb) = key(&results[b]);
        if (da - db).abs() > TIE {
            da.partial_cmp(&db).unwrap_or(Ordering::Equal)
        } else {
            hb.partial_cmp(&ha).unwrap_or(Ordering::Equal).then(a.cmp(&b))
        }
    })
}

/// The whole search: plan, enumerate, cross-validate, pick and refit winners.
pub fn run_search<T: Scalar>(
    ds: &Dataset,
    grid: &GridSpec,
    settings: &SearchSettings,
    cache_dir: Option<&Path>,
) -> Result<SearchOutcome<T>, SearchError> {
    let plan = DataPlan::new(ds, settings)?;
    let configs = enumerate_configs(grid, family_sizes(ds), settings.seed)?;
    let cache = match cache_dir {
        Some(dir) => Some(CvCache::new(dir, ds, &plan).map_err(|e| SearchError::stage("cache", e))?),
        None => None,
    };
    let evaluations = evaluate_all::<T>(&configs, ds, &plan, cache.as_ref());
    let winners = search_best(&evaluations);
    let mut missing: Vec<(Algorithm, String)> = grid
        .classifiers
        .iter()
        .map(|c| c.algorithm)
        .filter(|a| !winners.iter().any(|w| w.config.classifier.algorithm == *a))
        .map(|a| (a, "every configuration failed".to_string()))
        .collect();
    let refits: Vec<Result<SearchResult<T>, SearchError>> =
        winners.par_iter().map(|w| finalize(w, ds, &plan)).collect();
    let mut results = Vec::new();
    for (w, r) in winners.iter().zip(refits) {
        match r {
            Ok(r) => results.push(r),
            Err(e) => missing.push((w.config.classifier.algorithm, e.to_string())),
        }
    }
    for (a, why) in &missing {
        log::warn!("no result for {}: {why}", a.as_str());
    }
    missing.sort();
    let balanced = select_by_fir(&results);
    Ok(SearchOutcome { settings: *settings, grid: grid.clone(), plan, evaluations, results, balanced, missing })
}
