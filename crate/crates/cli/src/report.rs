//! Table and plot-data files.
//!
//! Machine tables carry raw values in shortest round-trip decimal form and
//! leave undefined metrics empty; the markdown report rounds for display.

use std::fmt::Write as _;

use ckdx_core::dataset::{ColumnKind, ColumnSummary, SummaryStats};
use ckdx_core::explain::{ImportanceVector, PdpCurve, WaterfallStep};
use ckdx_core::metrics::{ClassificationReport, ExplainabilityReport};
use ckdx_core::search::{ConfigEvaluation, FamilySelection};
use ckdx_core::select::SelectorMethod;
use ckdx_core::trees::Algorithm;

use crate::artifacts::ResultsFile;

pub const TABLE4_FILE: &str = "table4_features.csv";
pub const TABLE5_FILE: &str = "table5_performance.csv";
pub const TABLE6_FILE: &str = "table6_explainability.csv";
pub const CONFIGS_FILE: &str = "configs.csv";
pub const REPORT_FILE: &str = "report.md";

const TABLE5_HEADER: [&str; 7] = ["classifier", "subset", "accuracy", "sensitivity", "specificity", "f1", "precision"];
const TABLE6_HEADER: [&str; 8] = [
    "classifier",
    "masked_features",
    "total_features",
    "interpretability",
    "fidelity",
    "fir",
    "surrogate_cv_accuracy",
    "balanced",
];

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header {found:?} does not match {expected:?}")]
    Header { expected: Vec<String>, found: Vec<String> },
    #[error("row {row}: bad value '{value}' in column '{column}'")]
    Value { row: usize, column: String, value: String },
}

/// Cross-validation or held-out test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    Cv,
    Test,
}

impl Subset {
    pub fn as_str(self) -> &'static str {
        match self {
            Subset::Cv => "cv",
            Subset::Test => "test",
        }
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// The serde name of a unit enum variant.
fn serde_name<S: serde::Serialize>(v: &S) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is UTF-8")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn write_row<I, S>(w: &mut csv::Writer<Vec<u8>>, fields: I)
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(fields).expect("in-memory csv write");
}

fn metric_cells(r: &ClassificationReport<f64>) -> [String; 5] {
    [r.accuracy, r.sensitivity, r.specificity, r.f1, r.precision].map(opt)
}

/// Selected features per classifier and family.
pub fn table4_csv(results: &ResultsFile) -> String {
    let mut w = writer();
    write_row(&mut w, ["classifier", "family", "method", "k", "features"]);
    for r in &results.results {
        for f in &r.families {
            write_row(
                &mut w,
                [
                    r.algorithm.as_str().to_string(),
                    f.family.as_str().to_string(),
                    f.method.as_str().to_string(),
                    f.k.to_string(),
                    f.features.join(";"),
                ],
            );
        }
    }
    finish(w)
}

/// CV and test metrics per classifier.
pub fn table5_csv(results: &ResultsFile) -> String {
    let mut w = writer();
    write_row(&mut w, TABLE5_HEADER);
    for r in &results.results {
        for (subset, report) in [(Subset::Cv, &r.cv), (Subset::Test, &r.holdout)] {
            let mut row = vec![r.algorithm.as_str().to_string(), subset.as_str().to_string()];
            row.extend(metric_cells(report));
            write_row(&mut w, row);
        }
    }
    finish(w)
}

/// Interpretability, fidelity and FIR per classifier.
pub fn table6_csv(results: &ResultsFile) -> String {
    let mut w = writer();
    write_row(&mut w, TABLE6_HEADER);
    for r in &results.results {
        let e = &r.explainability;
        write_row(
            &mut w,
            [
                r.algorithm.as_str().to_string(),
                e.masked_features.to_string(),
                e.total_features.to_string(),
                num(e.interpretability),
                num(e.fidelity),
                num(e.fir),
                opt(r.surrogate_cv.accuracy),
                r.balanced.to_string(),
            ],
        );
    }
    finish(w)
}

/// Every evaluated configuration with its CV metrics or failure reason.
pub fn configs_csv(evaluations: &[ConfigEvaluation<f64>]) -> String {
    let mut w = writer();
    let mut header = vec![
        "index", "hash", "classifier", "numeric_imputer", "categorical_imputer", "numeric_method", "numeric_k",
        "nominal_method", "nominal_k", "ordinal_method", "ordinal_k", "total_k",
    ];
    header.extend(["cv_accuracy", "cv_sensitivity", "cv_specificity", "cv_f1", "cv_precision", "status"]);
    write_row(&mut w, header);
    for e in evaluations {
        let c = &e.config;
        let mut row = vec![
            e.index.to_string(),
            e.hash.clone(),
            c.classifier.algorithm.as_str().to_string(),
            serde_name(&c.imputer.numeric),
            serde_name(&c.imputer.categorical),
        ];
        for s in &c.selectors {
            row.push(s.method.as_str().to_string());
            row.push(s.k.to_string());
        }
        row.push(c.total_k().to_string());
        match &e.outcome {
            Ok(o) => {
                row.extend(metric_cells(&o.mean));
                row.push("ok".to_string());
            }
            Err(why) => {
                row.extend(std::iter::repeat_n(String::new(), 5));
                row.push(format!("failed: {why}"));
            }
        }
        write_row(&mut w, row);
    }
    finish(w)
}

/// Per-column descriptive table of a dataset.
pub fn summary_csv(summary: &[ColumnSummary]) -> String {
    let mut w = writer();
    write_row(&mut w, ["column", "kind", "observed", "missing", "mean", "std", "min", "max", "counts"]);
    for c in summary {
        let mut row = vec![c.name.clone(), c.kind.as_str().to_string(), c.observed.to_string(), c.missing.to_string()];
        match &c.stats {
            SummaryStats::Numeric { mean, std, min, max } => {
                row.extend([*mean, *std, *min, *max].map(opt));
                row.push(String::new());
            }
            SummaryStats::Categorical { counts } => {
                row.extend(std::iter::repeat_n(String::new(), 4));
                row.push(counts.iter().map(|(l, n)| format!("{l}:{n}")).collect::<Vec<_>>().join(";"));
            }
        }
        write_row(&mut w, row);
    }
    finish(w)
}

/// Feature importances side by side; `mean_abs_shap` may be absent.
pub fn importance_csv(
    impurity: &ImportanceVector<f64>,
    permutation: &ImportanceVector<f64>,
    shap: Option<&ImportanceVector<f64>>,
) -> String {
    let mut w = writer();
    write_row(&mut w, ["feature", "impurity", "permutation", "mean_abs_shap"]);
    for (j, name) in impurity.names.iter().enumerate() {
        write_row(
            &mut w,
            [
                name.clone(),
                num(impurity.values[j]),
                num(permutation.values[j]),
                shap.map(|s| num(s.values[j])).unwrap_or_default(),
            ],
        );
    }
    finish(w)
}

/// Grid value, its category label (categorical features), and mean ckd probability.
pub fn pdp_csv(curve: &PdpCurve<f64>, labels: &[String]) -> String {
    let mut w = writer();
    write_row(&mut w, ["value", "label", "mean_probability"]);
    for (&v, &p) in curve.grid.iter().zip(&curve.values) {
        let label = labels.get(v as usize).filter(|_| v >= 0.0 && v.fract() == 0.0).cloned().unwrap_or_default();
        write_row(&mut w, [num(v), label, num(p)]);
    }
    finish(w)
}

/// Attribution steps from the base value to the model output.
pub fn waterfall_csv(steps: &[WaterfallStep<f64>]) -> String {
    let mut w = writer();
    write_row(&mut w, ["step", "feature", "value", "phi", "start", "end"]);
    for (i, s) in steps.iter().enumerate() {
        write_row(&mut w, [(i + 1).to_string(), s.feature.clone(), num(s.value), num(s.phi), num(s.start), num(s.end)]);
    }
    finish(w)
}

fn reader<'a>(text: &'a str, expected: &[&str]) -> Result<csv::Reader<&'a [u8]>, ReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let found: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if found != expected {
        return Err(ReportError::Header { expected: expected.iter().map(|s| s.to_string()).collect(), found });
    }
    Ok(r)
}

fn bad(row: usize, column: &str, value: &str) -> ReportError {
    ReportError::Value { row, column: column.to_string(), value: value.to_string() }
}

fn parse_f64(row: usize, column: &str, value: &str) -> Result<f64, ReportError> {
    value.parse().map_err(|_| bad(row, column, value))
}

fn parse_opt(row: usize, column: &str, value: &str) -> Result<Option<f64>, ReportError> {
    if value.is_empty() {
        Ok(None)
    } else {
        parse_f64(row, column, value).map(Some)
    }
}

fn parse_algorithm(row: usize, value: &str) -> Result<Algorithm, ReportError> {
    Algorithm::parse(value).ok_or_else(|| bad(row, "classifier", value))
}

pub fn parse_table4(text: &str) -> Result<Vec<(Algorithm, FamilySelection)>, ReportError> {
    let mut r = reader(text, &["classifier", "family", "method", "k", "features"])?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let family = ColumnKind::ALL
            .into_iter()
            .find(|f| f.as_str() == &rec[1])
            .ok_or_else(|| bad(i, "family", &rec[1]))?;
        let method = SelectorMethod::parse(&rec[2]).ok_or_else(|| bad(i, "method", &rec[2]))?;
        let k = rec[3].parse().map_err(|_| bad(i, "k", &rec[3]))?;
        let features = if rec[4].is_empty() { Vec::new() } else { rec[4].split(';').map(String::from).collect() };
        out.push((parse_algorithm(i, &rec[0])?, FamilySelection { family, method, k, features }));
    }
    Ok(out)
}

pub fn parse_table5(text: &str) -> Result<Vec<(Algorithm, Subset, ClassificationReport<f64>)>, ReportError> {
    let mut r = reader(text, &TABLE5_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let subset = match &rec[1] {
            "cv" => Subset::Cv,
            "test" => Subset::Test,
            other => return Err(bad(i, "subset", other)),
        };
        let m = |c: usize| parse_opt(i, TABLE5_HEADER[c], &rec[c]);
        let report = ClassificationReport { accuracy: m(2)?, sensitivity: m(3)?, specificity: m(4)?, f1: m(5)?, precision: m(6)? };
        out.push((parse_algorithm(i, &rec[0])?, subset, report));
    }
    Ok(out)
}

pub fn parse_table6(text: &str) -> Result<Vec<(Algorithm, ExplainabilityReport<f64>, bool)>, ReportError> {
    let mut r = reader(text, &TABLE6_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let count = |c: usize| rec[c].parse::<usize>().map_err(|_| bad(i, TABLE6_HEADER[c], &rec[c]));
        let real = |c: usize| parse_f64(i, TABLE6_HEADER[c], &rec[c]);
        let report = ExplainabilityReport {
            masked_features: count(1)?,
            total_features: count(2)?,
            interpretability: real(3)?,
            fidelity: real(4)?,
            fir: real(5)?,
        };
        let balanced = rec[7].parse().map_err(|_| bad(i, "balanced", &rec[7]))?;
        out.push((parse_algorithm(i, &rec[0])?, report, balanced));
    }
    Ok(out)
}

fn pct(v: Option<f64>, decimals: usize) -> String {
    v.map(|v| format!("{:.*}", decimals, 100.0 * v)).unwrap_or_else(|| "n/a".to_string())
}

/// Human-readable tables rounded like the published ones: metric percentages
/// to one decimal, interpretability and fidelity to whole percent, FIR to two
/// decimals.
pub fn markdown_report(results: &ResultsFile) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# ckdx search report\n");
    let _ = writeln!(
        s,
        "Seed {}, train ratio {}, {} CV folds, {} configurations ({} failed).\n",
        results.settings.seed, results.settings.train_ratio, results.settings.n_folds, results.n_configs, results.n_failed
    );
    let _ = writeln!(s, "## Selected features\n\n| Classifier | Features (method) | Count |\n|---|---|---|");
    for r in &results.results {
        let feats: Vec<String> = r
            .families
            .iter()
            .flat_map(|f| f.features.iter().map(move |n| format!("{n} ({})", f.method.label())))
            .collect();
        let _ = writeln!(s, "| {} | {} | {} |", r.algorithm.display_name(), feats.join(", "), r.selected.len());
    }
    let _ = writeln!(
        s,
        "\n## Classification performance (%)\n\n| Classifier | Subset | Acc | Sen | Spe | F1 | Pre |\n|---|---|---|---|---|---|---|"
    );
    for r in &results.results {
        for (subset, m) in [("CV", &r.cv), ("Test", &r.holdout)] {
            let _ = writeln!(
                s,
                "| {} | {subset} | {} | {} | {} | {} | {} |",
                r.algorithm.display_name(),
                pct(m.accuracy, 1),
                pct(m.sensitivity, 1),
                pct(m.specificity, 1),
                pct(m.f1, 1),
                pct(m.precision, 1)
            );
        }
    }
    let _ = writeln!(s, "\n## Explainability\n\n| Classifier | I | F | FIR |\n|---|---|---|---|");
    for r in &results.results {
        let e = &r.explainability;
        let mark = if r.balanced { " (balanced)" } else { "" };
        let _ = writeln!(
            s,
            "| {}{mark} | {} % | {} % | {:.2} |",
            r.algorithm.display_name(),
            pct(Some(e.interpretability), 0),
            pct(Some(e.fidelity), 0),
            e.fir
        );
    }
    if results.results.iter().any(|r| r.explainability.fidelity > 1.0) {
        let _ = writeln!(s, "\nF above 100 % means the CART surrogate beat the ensemble in CV; the raw ratio is kept.");
    }
    for m in &results.missing {
        let _ = writeln!(s, "\nNo result for {}: {}", m.algorithm.display_name(), m.reason);
    }
    s
}
