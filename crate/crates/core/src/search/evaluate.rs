use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CvCache, DataPlan, PipelineConfig, SearchError};
use crate::dataset::{ColumnKind, Dataset};
use crate::metrics::{classification_metrics, confusion, ClassificationReport};
use crate::preprocess::{encode, fit_imputer, EncodedMatrix, FittedImputer, ImputerSpec};
use crate::scalar::Scalar;
use crate::select::{rfe_ranking, score_features, SelectorMethod, SelectorSpec};
use crate::seed;
use crate::trees::{fit, ClassifierSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome<T> {
    pub folds: Vec<ClassificationReport<T>>,
    /// Unweighted mean of the fold reports.
    pub mean: ClassificationReport<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEvaluation<T> {
    /// Position in enumeration order.
    pub index: usize,
    pub config: PipelineConfig,
    pub hash: String,
    /// `Err` holds the reason a stage failed.
    pub outcome: Result<CvOutcome<T>, String>,
}

/// Imputed and encoded rows for one (fit rows, evaluation rows) pair.
pub(crate) struct Prepared<T> {
    pub imputer: FittedImputer,
    pub xtr: EncodedMatrix<T>,
    pub ytr: Vec<u8>,
    pub xev: EncodedMatrix<T>,
    pub yev: Vec<u8>,
}

pub(crate) fn prepare<T: Scalar>(
    ds: &Dataset,
    fit_rows: &[usize],
    eval_rows: &[usize],
    spec: ImputerSpec,
) -> Result<Prepared<T>, SearchError> {
    let imputer = fit_imputer(ds, fit_rows, spec)?;
    let xtr = encode(&imputer.apply(ds, fit_rows)?)?;
    let xev = encode(&imputer.apply(ds, eval_rows)?)?;
    let labels = |rows: &[usize]| rows.iter().map(|&r| ds.target()[r]).collect();
    Ok(Prepared { imputer, xtr, ytr: labels(fit_rows), xev, yev: labels(eval_rows) })
}

/// Columns of `family` ordered best first under `method`.
pub(crate) fn family_ranking<T: Scalar>(
    x: &EncodedMatrix<T>,
    y: &[u8],
    family: ColumnKind,
    method: SelectorMethod,
    classifier: &ClassifierSpec,
    rfe_seed: u64,
) -> Result<Vec<usize>, SearchError> {
    let cols = x.family_columns(family);
    if method == SelectorMethod::Rfe {
        return rfe_ranking(x, y, &cols, classifier, rfe_seed).map_err(|e| SearchError::stage("rfe", e));
    }
    let table = score_features(x, y, &cols, family, method).map_err(|e| SearchError::stage("score", e))?;
    Ok(table.ranking().into_iter().map(|i| cols[i]).collect())
}

pub(crate) fn kept(ranking: &[usize], k: usize) -> Result<Vec<usize>, SearchError> {
    if k == 0 || k > ranking.len() {
        return Err(SearchError::K { family: "selector", k, size: ranking.len() });
    }
    Ok(ranking[..k].to_vec())
}

pub(crate) fn score_subset<T: Scalar>(
    p: &Prepared<T>,
    cols: &[usize],
    classifier: &ClassifierSpec,
    fit_seed: u64,
) -> Result<(crate::trees::TreeEnsembleModel<T>, ClassificationReport<T>), SearchError> {
    let xtr = p.xtr.select_columns(cols).map_err(|e| SearchError::stage("select", e))?;
    let xev = p.xev.select_columns(cols).map_err(|e| SearchError::stage("select", e))?;
    let model = fit(classifier, &xtr, &p.ytr, fit_seed).map_err(|e| SearchError::stage("fit", e))?;
    let pred = model.predict(&xev).map_err(|e| SearchError::stage("predict", e))?;
    let cm = confusion(&p.yev, &pred).map_err(|e| SearchError::stage("score", e))?;
    Ok((model, classification_metrics(&cm)))
}

fn rfe_seed(root: u64, fold: usize) -> u64 {
    seed::derive_seed(root, "rfe", fold as u64)
}

fn fit_seed(root: u64, fold: usize) -> u64 {
    seed::derive_seed(root, "cv-fit", fold as u64)
}

/// CV of one configuration, computed from scratch.
pub fn evaluate_config_cv<T: Scalar>(
    config: &PipelineConfig,
    ds: &Dataset,
    plan: &DataPlan,
) -> Result<CvOutcome<T>, SearchError> {
    let mut folds = Vec::with_capacity(plan.folds.len());
    for (f, held) in plan.folds.iter().enumerate() {
        let p = prepare::<T>(ds, &plan.fold_train(f), held, config.imputer)?;
        let mut cols = Vec::new();
        for sel in &config.selectors {
            let r = family_ranking(&p.xtr, &p.ytr, sel.family, sel.method, &config.classifier, rfe_seed(config.seed, f))?;
            cols.extend(kept(&r, sel.k)?);
        }
        cols.sort_unstable();
        folds.push(score_subset(&p, &cols, &config.classifier, fit_seed(config.seed, f))?.1);
    }
    let mean = ClassificationReport::mean(&folds);
    Ok(CvOutcome { folds, mean })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct RankKey {
    fold: usize,
    imputer: usize,
    family: ColumnKind,
    method: SelectorMethod,
    /// Only RFE depends on the classifier.
    classifier: Option<usize>,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct FitKey {
    fold: usize,
    imputer: usize,
    cols: Vec<usize>,
    classifier: usize,
    seed: u64,
}

fn index_of<X: PartialEq + Clone>(pool: &mut Vec<X>, x: &X) -> usize {
    match pool.iter().position(|p| p == x) {
        Some(i) => i,
        None => {
            pool.push(x.clone());
            pool.len() - 1
        }
    }
}

/// CV of every configuration, sharing work between configurations.
///
/// Prepared fold matrices are shared per imputer, rankings per
/// (fold, imputer, family, method[, classifier for RFE]) and fold scores per
/// (fold, imputer, selected columns, classifier). Work runs on the rayon
/// pool; results come back in enumeration order regardless of scheduling.
pub fn evaluate_all<T: Scalar>(
    configs: &[PipelineConfig],
    ds: &Dataset,
    plan: &DataPlan,
    cache: Option<&CvCache>,
) -> Vec<ConfigEvaluation<T>> {
    let mut results: Vec<Option<ConfigEvaluation<T>>> = configs
        .iter()
        .enumerate()
        .map(|(index, config)| {
            cache.and_then(|c| c.load::<T>(config)).map(|outcome| ConfigEvaluation {
                index,
                config: config.clone(),
                hash: config.hash(),
                outcome,
            })
        })
        .collect();
    let todo: Vec<usize> = (0..configs.len()).filter(|&i| results[i].is_none()).collect();

    let mut imputers: Vec<ImputerSpec> = Vec::new();
    let mut classifiers: Vec<ClassifierSpec> = Vec::new();
    let ids: BTreeMap<usize, (usize, usize)> = todo
        .iter()
        .map(|&i| (i, (index_of(&mut imputers, &configs[i].imputer), index_of(&mut classifiers, &configs[i].classifier))))
        .collect();
    let n_folds = plan.folds.len();

    let prep_keys: Vec<(usize, usize)> =
        (0..n_folds).flat_map(|f| (0..imputers.len()).map(move |m| (f, m))).collect();
    let prepared: BTreeMap<(usize, usize), Result<Prepared<T>, String>> = prep_keys
        .par_iter()
        .map(|&(f, m)| ((f, m), prepare::<T>(ds, &plan.fold_train(f), &plan.folds[f], imputers[m]).map_err(|e| e.to_string())))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    let rank_key = |f: usize, i: usize, sel: &SelectorSpec| {
        let (m, c) = ids[&i];
        RankKey {
            fold: f,
            imputer: m,
            family: sel.family,
            method: sel.method,
            classifier: (sel.method == SelectorMethod::Rfe).then_some(c),
            seed: configs[i].seed,
        }
    };
    let mut rank_keys = BTreeSet::new();
    for &i in &todo {
        for f in 0..n_folds {
            for sel in &configs[i].selectors {
                rank_keys.insert(rank_key(f, i, sel));
            }
        }
    }
    let rankings: BTreeMap<RankKey, Result<Vec<usize>, String>> = rank_keys
        .into_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|key| {
            let r = match &prepared[&(key.fold, key.imputer)] {
                Ok(p) => {
                    // Filters ignore the classifier; any spec will do.
                    let clf = &classifiers[key.classifier.unwrap_or(0)];
                    family_ranking(&p.xtr, &p.ytr, key.family, key.method, clf, rfe_seed(key.seed, key.fold))
                        .map_err(|e| e.to_string())
                }
                Err(e) => Err(e.clone()),
            };
            (key, r)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    let fit_keys_of = |i: usize| -> Result<Vec<FitKey>, String> {
        let (m, c) = ids[&i];
        (0..n_folds)
            .map(|f| {
                let mut cols = Vec::new();
                for sel in &configs[i].selectors {
                    let r = rankings[&rank_key(f, i, sel)].as_ref().map_err(Clone::clone)?;
                    cols.extend(kept(r, sel.k).map_err(|e| e.to_string())?);
                }
                cols.sort_unstable();
                Ok(FitKey { fold: f, imputer: m, cols, classifier: c, seed: configs[i].seed })
            })
            .collect()
    };
    let per_config: BTreeMap<usize, Result<Vec<FitKey>, String>> = todo.iter().map(|&i| (i, fit_keys_of(i))).collect();
    let fit_keys: BTreeSet<FitKey> = per_config.values().filter_map(|r| r.as_ref().ok()).flatten().cloned().collect();
    log::info!("{} configurations, {} distinct fold fits", todo.len(), fit_keys.len());
    let scores: BTreeMap<FitKey, Result<ClassificationReport<T>, String>> = fit_keys
        .into_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|key| {
            let r = match &prepared[&(key.fold, key.imputer)] {
                Ok(p) => score_subset(p, &key.cols, &classifiers[key.classifier], fit_seed(key.seed, key.fold))
                    .map(|(_, rep)| rep)
                    .map_err(|e| e.to_string()),
                Err(e) => Err(e.clone()),
            };
            (key, r)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    for (i, keys) in per_config {
        let outcome = keys.and_then(|keys| {
            let folds = keys.iter().map(|k| scores[k].clone()).collect::<Result<Vec<_>, String>>()?;
            let mean = ClassificationReport::mean(&folds);
            Ok(CvOutcome { folds, mean })
        });
        if let Err(reason) = &outcome {
            log::warn!("configuration {} failed: {reason}", configs[i].hash());
        }
        if let Some(c) = cache {
            c.store(&configs[i], &outcome);
        }
        results[i] = Some(ConfigEvaluation { index: i, config: configs[i].clone(), hash: configs[i].hash(), outcome });
    }
    results.into_iter().map(|r| r.expect("every configuration evaluated")).collect()
}
