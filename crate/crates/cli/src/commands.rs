//! The four subcommands as library functions writing into an output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ckdx_core::dataset::{canonical_arff, ckd_schema, parse_arff, parse_csv, summarize, Dataset};
use ckdx_core::explain::{
    background_sample, default_grid, impurity_importance, mean_abs_shap, pdp, permutation_importance, shapley_exact,
    waterfall_data, ImportanceVector, OutputSpace, ShapRecord, BACKGROUND_ROWS, MAX_SHAPLEY_FEATURES,
};
use ckdx_core::preprocess::{encode, EncodedMatrix};
use ckdx_core::search::{run_search, DataPlan, SearchError, SearchSettings};
use ckdx_core::seed::derive_seed;
use ckdx_core::trees::Algorithm;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::artifacts::{to_pretty_json, write, ModelBundle, ResultsFile, FILE_VERSION};
use crate::config::ResolvedConfig;
use crate::report::{self, CONFIGS_FILE, REPORT_FILE, TABLE4_FILE, TABLE5_FILE, TABLE6_FILE};
use crate::{svg, CliError};

pub const RESULTS_FILE: &str = "results.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MODELS_DIR: &str = "models";
pub const IMPORTANCE_FILE: &str = "importance.csv";
pub const EXPLAIN_SUMMARY_FILE: &str = "explain_summary.json";
pub const BUNDLED_SOURCE: &str = "bundled:chronic_kidney_disease.arff";

pub struct LoadedDataset {
    pub dataset: Dataset,
    /// File name, or [`BUNDLED_SOURCE`].
    pub source: String,
    pub sha256: String,
}

/// Read an ARFF file, or a `.csv` file against the CKD schema; `None` loads
/// the bundled copy.
pub fn load_dataset(path: Option<&Path>) -> Result<LoadedDataset, CliError> {
    let (bytes, source, csv) = match path {
        None => (canonical_arff().as_bytes().to_vec(), BUNDLED_SOURCE.to_string(), false),
        Some(p) => {
            let bytes = crate::artifacts::read(p)?;
            let name = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
            let csv = p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            (bytes, name, csv)
        }
    };
    let parsed = if csv { parse_csv(&bytes, &ckd_schema()) } else { parse_arff(&bytes) };
    let dataset = parsed.map_err(|e| CliError::Input(format!("{source}: {e}")))?;
    Ok(LoadedDataset { dataset, source, sha256: hex::encode(Sha256::digest(&bytes)) })
}

/// Descriptive table of a dataset file as CSV.
pub fn ingest(path: Option<&Path>) -> Result<String, CliError> {
    let loaded = load_dataset(path)?;
    Ok(report::summary_csv(&summarize(&loaded.dataset)))
}

#[derive(Debug, Serialize)]
struct DatasetInfo<'a> {
    source: &'a str,
    sha256: &'a str,
    content_hash: String,
    n_rows: usize,
    n_features: usize,
    class_counts: [usize; 2],
}

#[derive(Debug, Serialize)]
struct StageSeeds {
    root: u64,
    split: u64,
    folds: u64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    format: &'static str,
    version: u32,
    tool_version: &'static str,
    dataset: DatasetInfo<'a>,
    settings: SearchSettings,
    grid: &'a ckdx_core::search::GridSpec,
    seeds: StageSeeds,
    n_configs: usize,
    n_failed: usize,
    files: Vec<String>,
}

fn search_error(e: SearchError) -> CliError {
    match e {
        SearchError::EmptyAxis(_) | SearchError::K { .. } | SearchError::Chi2Numeric | SearchError::Classifier(_) => {
            CliError::Input(format!("grid: {e}"))
        }
        SearchError::Preprocess(_) => CliError::Input(format!("dataset: {e}")),
        _ => CliError::Runtime(e.to_string()),
    }
}

pub fn model_file_name(algorithm: Algorithm) -> String {
    format!("{}.model.json", algorithm.as_str())
}

/// Run the search and write results, manifest, tables and one model bundle
/// per classifier into `config.output_dir`. Returns the written paths.
pub fn search(config: &ResolvedConfig, cache_dir: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let loaded = load_dataset(config.dataset.as_deref())?;
    let ds = &loaded.dataset;
    let outcome = run_search::<f64>(ds, &config.grid, &config.settings, cache_dir).map_err(search_error)?;
    let results = ResultsFile::new(&outcome);
    let out = &config.output_dir;
    let mut files: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    for r in &outcome.results {
        let bundle = ModelBundle::new(r, config.settings);
        files.insert(format!("{MODELS_DIR}/{}", model_file_name(r.algorithm)), bundle.to_bytes());
    }
    files.insert(RESULTS_FILE.to_string(), to_pretty_json(&results));
    files.insert(CONFIGS_FILE.to_string(), report::configs_csv(&outcome.evaluations).into_bytes());
    files.extend(report_files(&results, config.emit_svg));
    let manifest = Manifest {
        format: "ckdx-manifest",
        version: FILE_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        dataset: DatasetInfo {
            source: &loaded.source,
            sha256: &loaded.sha256,
            content_hash: ds.content_hash(),
            n_rows: ds.n_rows(),
            n_features: ds.n_columns(),
            class_counts: ds.class_counts(),
        },
        settings: config.settings,
        grid: &config.grid,
        seeds: StageSeeds {
            root: config.settings.seed,
            split: derive_seed(config.settings.seed, "split", 0),
            folds: derive_seed(config.settings.seed, "folds", 0),
        },
        n_configs: results.n_configs,
        n_failed: results.n_failed,
        files: files.keys().cloned().collect(),
    };
    files.insert(MANIFEST_FILE.to_string(), to_pretty_json(&manifest));
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = out.join(name);
        write(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}

fn report_files(results: &ResultsFile, emit_svg: bool) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    files.insert(TABLE4_FILE.to_string(), report::table4_csv(results).into_bytes());
    files.insert(TABLE5_FILE.to_string(), report::table5_csv(results).into_bytes());
    files.insert(TABLE6_FILE.to_string(), report::table6_csv(results).into_bytes());
    files.insert(REPORT_FILE.to_string(), report::markdown_report(results).into_bytes());
    if emit_svg {
        let fir: Vec<(String, f64)> =
            results.results.iter().map(|r| (r.algorithm.display_name().to_string(), r.explainability.fir)).collect();
        files.insert("fir.svg".to_string(), svg::bar_chart("FIR per classifier", &fir).into_bytes());
    }
    files
}

/// Regenerate the report tables from a results file.
pub fn report(results_path: &Path, out: &Path, emit_svg: bool) -> Result<Vec<PathBuf>, CliError> {
    let results = ResultsFile::load(results_path)?;
    let mut written = Vec::new();
    for (name, bytes) in report_files(&results, emit_svg) {
        let path = out.join(name);
        write(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone)]
pub struct ExplainArgs {
    pub model: PathBuf,
    pub dataset: Option<PathBuf>,
    /// 0-based dataset row indices.
    pub ids: Vec<usize>,
    pub out: PathBuf,
    pub emit_svg: bool,
    pub permutation_repeats: usize,
    pub space: OutputSpace,
}

#[derive(Debug, Serialize)]
struct ShapFile<'a> {
    record: &'a ShapRecord<f64>,
    label: &'a str,
    predicted_probability: f64,
}

#[derive(Debug, Serialize)]
struct TopFeatures {
    impurity: Option<String>,
    permutation: Option<String>,
    mean_abs_shap: Option<String>,
}

#[derive(Debug, Serialize)]
struct ExplainSummary<'a> {
    algorithm: Algorithm,
    config_hash: &'a str,
    space: OutputSpace,
    features: &'a [String],
    permutation_repeats: usize,
    permutation_seed: u64,
    background_seed: u64,
    background_rows: usize,
    evaluation_rows: usize,
    top: TopFeatures,
    instances: &'a [usize],
}

fn pdp_file_stem(feature: &str) -> String {
    let safe: String = feature.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    format!("pdp_{safe}")
}

/// Every dataset row imputed with the bundle's training fills and restricted
/// to its selected columns, plus the bundle's split and folds.
pub fn model_inputs(bundle: &ModelBundle, ds: &Dataset) -> Result<(EncodedMatrix<f64>, DataPlan), CliError> {
    let runtime = |e: &dyn std::fmt::Display| CliError::Runtime(e.to_string());
    if ds.schema().names() != bundle.imputer.columns {
        return Err(CliError::Input("dataset columns differ from the model's training data".to_string()));
    }
    let plan = DataPlan::new(ds, &bundle.settings).map_err(|e| runtime(&e))?;
    let all: Vec<usize> = (0..ds.n_rows()).collect();
    let imputed = bundle.imputer.apply(ds, &all).map_err(|e| runtime(&e))?;
    let x = encode::<f64>(&imputed)
        .map_err(|e| runtime(&e))?
        .select_names(&bundle.selected)
        .map_err(|e| runtime(&e))?;
    Ok((x, plan))
}

/// Importances on the test rows, PDPs over the training rows, and Shapley
/// waterfalls for the requested instances.
pub fn explain(args: &ExplainArgs) -> Result<Vec<PathBuf>, CliError> {
    let (bundle, model) = ModelBundle::load(&args.model)?;
    let loaded = load_dataset(args.dataset.as_deref())?;
    let ds = &loaded.dataset;
    if ds.schema().names() != bundle.imputer.columns {
        return Err(CliError::Input(format!("{}: columns differ from the model's training data", loaded.source)));
    }
    if let Some(&bad) = args.ids.iter().find(|&&i| i >= ds.n_rows()) {
        return Err(CliError::Usage(format!("instance id {bad} out of range for {} rows", ds.n_rows())));
    }
    if args.permutation_repeats == 0 {
        return Err(CliError::Usage("permutation repeats must be at least 1".to_string()));
    }
    if args.space == OutputSpace::Margin && model.algorithm != Algorithm::Xgboost {
        return Err(CliError::Usage("margin output is only defined for xgboost models".to_string()));
    }
    let runtime = |e: &dyn std::fmt::Display| CliError::Runtime(e.to_string());
    let settings = bundle.settings;
    let (x, plan) = model_inputs(&bundle, ds)?;
    let x_train = x.select_rows(&plan.split.train).map_err(|e| runtime(&e))?;
    let x_test = x.select_rows(&plan.split.test).map_err(|e| runtime(&e))?;
    let y_test: Vec<u8> = plan.split.test.iter().map(|&r| ds.target()[r]).collect();

    let permutation_seed = derive_seed(settings.seed, "permutation", 0);
    let background_seed = derive_seed(settings.seed, "background", 0);
    let impurity = impurity_importance(&model);
    let permutation = permutation_importance(&model, &x_test, &y_test, args.permutation_repeats, permutation_seed)
        .map_err(|e| runtime(&e))?;
    let bg_pos = background_sample(x_train.n_rows(), BACKGROUND_ROWS, background_seed);
    let background = x_train.select_rows(&bg_pos).map_err(|e| runtime(&e))?;
    let shap_ok = model.n_features() <= MAX_SHAPLEY_FEATURES;
    let shap_importance: Option<ImportanceVector<f64>> = if shap_ok {
        let records = (0..x_test.n_rows())
            .map(|i| shapley_exact(&model, plan.split.test[i], x_test.row(i), &background, args.space))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| runtime(&e))?;
        mean_abs_shap(&records)
    } else {
        log::warn!("{} features exceed the Shapley bound of {MAX_SHAPLEY_FEATURES}; skipping", model.n_features());
        None
    };

    let mut files: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    files.insert(
        IMPORTANCE_FILE.to_string(),
        report::importance_csv(&impurity, &permutation, shap_importance.as_ref()).into_bytes(),
    );
    for (j, name) in bundle.selected.iter().enumerate() {
        let grid = default_grid(&x_train, j);
        let curve = pdp(&model, &x_train, name, &grid).map_err(|e| runtime(&e))?;
        let col = ds.schema().position(name).expect("selected names come from the schema");
        let labels = &ds.schema().columns[col].categories;
        let stem = pdp_file_stem(name);
        files.insert(format!("{stem}.csv"), report::pdp_csv(&curve, labels).into_bytes());
        if args.emit_svg {
            let pts: Vec<(f64, f64)> = curve.grid.iter().copied().zip(curve.values.iter().copied()).collect();
            files.insert(format!("{stem}.svg"), svg::line_chart(&format!("Partial dependence: {name}"), name, &pts).into_bytes());
        }
    }
    if args.emit_svg {
        for (tag, v) in [("impurity", Some(&impurity)), ("permutation", Some(&permutation)), ("mean_abs_shap", shap_importance.as_ref())] {
            if let Some(v) = v {
                let bars: Vec<(String, f64)> = v.names.iter().cloned().zip(v.values.iter().copied()).collect();
                files.insert(format!("importance_{tag}.svg"), svg::bar_chart(&format!("{tag} importance"), &bars).into_bytes());
            }
        }
    }
    if !args.ids.is_empty() && !shap_ok {
        return Err(CliError::Runtime(format!(
            "{} features exceed the Shapley bound of {MAX_SHAPLEY_FEATURES}",
            model.n_features()
        )));
    }
    for &id in &args.ids {
        let record = shapley_exact(&model, id, x.row(id), &background, args.space).map_err(|e| runtime(&e))?;
        let steps = waterfall_data(&record);
        files.insert(format!("waterfall_{id}.csv"), report::waterfall_csv(&steps).into_bytes());
        let shap = ShapFile {
            record: &record,
            label: ds.schema().target.label(ds.target()[id]),
            predicted_probability: model.predict_proba_row(x.row(id)),
        };
        files.insert(format!("shap_{id}.json"), to_pretty_json(&shap));
        if args.emit_svg {
            let bars: Vec<(String, f64, f64)> = steps.iter().map(|s| (s.feature.clone(), s.start, s.end)).collect();
            files.insert(format!("waterfall_{id}.svg"), svg::waterfall_chart(&format!("Instance {id}"), &bars).into_bytes());
        }
    }
    let summary = ExplainSummary {
        algorithm: model.algorithm,
        config_hash: &bundle.config_hash,
        space: args.space,
        features: &bundle.selected,
        permutation_repeats: args.permutation_repeats,
        permutation_seed,
        background_seed,
        background_rows: background.n_rows(),
        evaluation_rows: x_test.n_rows(),
        top: TopFeatures {
            impurity: impurity.top().map(String::from),
            permutation: permutation.top().map(String::from),
            mean_abs_shap: shap_importance.as_ref().and_then(|v| v.top().map(String::from)),
        },
        instances: &args.ids,
    };
    files.insert(EXPLAIN_SUMMARY_FILE.to_string(), to_pretty_json(&summary));
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = args.out.join(name);
        write(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}
