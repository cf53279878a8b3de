use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ckdx_cli::artifacts::{ModelBundle, ResultsFile};
use ckdx_cli::report::{parse_table4, parse_table5, parse_table6, Subset, TABLE4_FILE, TABLE5_FILE, TABLE6_FILE};
use ckdx_core::dataset::{canonical_arff, parse_arff, to_csv};
use tempfile::TempDir;

const SMALL_GRID: &str = r#"
[grid]
numeric_imputers = ["mean"]
numeric = { methods = ["anova", "mutual_info"], ks = [1, 2] }
nominal = { methods = ["chi2"], ks = [1, 3] }
ordinal = { methods = ["mutual_info"], ks = [1, 3] }
"#;

fn ckdx(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ckdx"));
    cmd.args(args).env_remove(ckdx_cli::CACHE_DIR_ENV);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Write a config with `extra` lines prepended to the small grid and run `search` into `dir/out`.
fn small_search(dir: &Path, extra: &str, args: &[&str]) -> PathBuf {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, format!("output_dir = \"out\"\n{extra}\n{SMALL_GRID}")).unwrap();
    let mut all = vec!["search", "--config", cfg.to_str().unwrap()];
    all.extend_from_slice(args);
    ok(&ckdx(&all, &[]));
    dir.join("out")
}

fn files_under(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn ingest_reproduces_the_descriptive_table() {
    let csv = ok(&ckdx(&["ingest"], &[]));
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 24);
    let age = rows.iter().find(|r| &r[0] == "age").unwrap();
    assert!((age[4].parse::<f64>().unwrap() - 51.48).abs() < 0.01);
    assert!((age[5].parse::<f64>().unwrap() - 17.17).abs() < 0.01);
    let htn = rows.iter().find(|r| &r[0] == "htn").unwrap();
    assert!(htn[8].contains("yes:147"));
}

#[test]
fn ingest_handles_empty_csv_and_missing_files() {
    let dir = TempDir::new().unwrap();
    let text = canonical_arff();
    let header_end = text.find("@data").unwrap() + "@data\n".len();
    let empty = dir.path().join("empty.arff");
    fs::write(&empty, &text[..header_end]).unwrap();
    let csv = ok(&ckdx(&["ingest", empty.to_str().unwrap()], &[]));
    assert_eq!(csv.lines().count(), 25);
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(2) == Some("0")));

    let ds = parse_arff(text.as_bytes()).unwrap();
    let csv_path = dir.path().join("ckd.csv");
    fs::write(&csv_path, to_csv(&ds)).unwrap();
    assert_eq!(ok(&ckdx(&["ingest", csv_path.to_str().unwrap()], &[])), ok(&ckdx(&["ingest"], &[])));

    let missing = ckdx(&["ingest", dir.path().join("nope.arff").to_str().unwrap()], &[]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.arff"));

    let broken = dir.path().join("broken.arff");
    fs::write(&broken, text.replacen("@attribute 'age' numeric", "@attribute 'age' numerik", 1)).unwrap();
    let out = ckdx(&["ingest", broken.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn search_writes_one_row_per_classifier_and_a_winner() {
    let dir = TempDir::new().unwrap();
    let out = small_search(dir.path(), "", &[]);
    let results = ResultsFile::load(&out.join("results.json")).unwrap();
    assert_eq!(results.results.len(), 5);
    assert_eq!(results.results.iter().filter(|r| r.balanced).count(), 1);
    assert_eq!(results.n_configs, 5 * 16);
    let t6 = parse_table6(&fs::read_to_string(out.join(TABLE6_FILE)).unwrap()).unwrap();
    assert_eq!(t6.iter().filter(|r| r.2).count(), 1);
    for r in &results.results {
        let (bundle, model) = ModelBundle::load(&out.join("models").join(format!("{}.model.json", r.algorithm.as_str()))).unwrap();
        assert_eq!(bundle.selected, r.selected);
        assert_eq!(model.feature_names, r.selected);
        assert_eq!(bundle.config_hash, r.config_hash);
    }
    let configs = fs::read_to_string(out.join("configs.csv")).unwrap();
    assert_eq!(configs.lines().count(), 81);
}

#[test]
fn tables_reparse_into_the_result_values() {
    let dir = TempDir::new().unwrap();
    let out = small_search(dir.path(), "", &[]);
    let results = ResultsFile::load(&out.join("results.json")).unwrap();
    let t4 = parse_table4(&fs::read_to_string(out.join(TABLE4_FILE)).unwrap()).unwrap();
    let t5 = parse_table5(&fs::read_to_string(out.join(TABLE5_FILE)).unwrap()).unwrap();
    let t6 = parse_table6(&fs::read_to_string(out.join(TABLE6_FILE)).unwrap()).unwrap();
    assert_eq!(t4.len(), 15);
    for (i, r) in results.results.iter().enumerate() {
        for (f, fam) in r.families.iter().enumerate() {
            assert_eq!(t4[3 * i + f], (r.algorithm, fam.clone()));
        }
        assert_eq!(t5[2 * i], (r.algorithm, Subset::Cv, r.cv));
        assert_eq!(t5[2 * i + 1], (r.algorithm, Subset::Test, r.holdout));
        assert_eq!(t6[i], (r.algorithm, r.explainability, r.balanced));
    }
    let again = dir.path().join("again");
    ok(&ckdx(&["report", out.join("results.json").to_str().unwrap(), "--out", again.to_str().unwrap()], &[]));
    for name in [TABLE4_FILE, TABLE5_FILE, TABLE6_FILE, "report.md"] {
        assert_eq!(fs::read(out.join(name)).unwrap(), fs::read(again.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn classifier_filter_gives_a_single_row() {
    let dir = TempDir::new().unwrap();
    let out = small_search(dir.path(), "", &["--classifiers", "xgboost"]);
    let results = ResultsFile::load(&out.join("results.json")).unwrap();
    assert_eq!(results.results.len(), 1);
    assert!(results.results[0].balanced);
    assert_eq!(fs::read_to_string(out.join(TABLE6_FILE)).unwrap().lines().count(), 2);
    assert_eq!(fs::read_dir(out.join("models")).unwrap().count(), 1);
    let bad = ckdx(&["search", "--classifiers", "svm"], &[]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_bytes_with_and_without_cache() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cache = TempDir::new().unwrap();
    let out_a = small_search(a.path(), "seed = 9", &["--svg"]);
    let cfg = b.path().join("run.toml");
    fs::write(&cfg, format!("output_dir = \"out\"\nseed = 9\n{SMALL_GRID}")).unwrap();
    let args = ["search", "--config", cfg.to_str().unwrap(), "--svg"];
    ok(&ckdx(&args, &[(ckdx_cli::CACHE_DIR_ENV, cache.path())]));
    assert!(fs::read_dir(cache.path()).unwrap().count() > 0);
    let first = files_under(&out_a);
    assert_eq!(first, files_under(&b.path().join("out")));
    ok(&ckdx(&args, &[(ckdx_cli::CACHE_DIR_ENV, cache.path())]));
    assert_eq!(first, files_under(&b.path().join("out")));
}

#[test]
fn config_and_grid_errors_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "sed = 3\n").unwrap();
    let out = ckdx(&["search", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(3));
    fs::write(&cfg, "[grid]\nordinal = { methods = [\"chi2\"], ks = [4] }\n").unwrap();
    let out = ckdx(&["search", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ordinal"));
}

#[test]
fn explain_writes_global_and_per_instance_artifacts() {
    let dir = TempDir::new().unwrap();
    let out = small_search(dir.path(), "", &["--classifiers", "xgboost"]);
    let model = out.join("models/xgboost.model.json");
    let global = dir.path().join("global");
    ok(&ckdx(&["explain", "--model", model.to_str().unwrap(), "--out", global.to_str().unwrap()], &[]));
    let names: Vec<String> =
        files_under(&global).into_iter().map(|(p, _)| p.to_string_lossy().into_owned()).collect();
    assert!(names.contains(&"importance.csv".to_string()));
    assert!(names.iter().any(|n| n.starts_with("pdp_")));
    assert!(!names.iter().any(|n| n.starts_with("waterfall_")));

    let local = dir.path().join("local");
    ok(&ckdx(&["explain", "--model", model.to_str().unwrap(), "--ids", "0", "--out", local.to_str().unwrap(), "--svg"], &[]));
    let shap: serde_json::Value = serde_json::from_slice(&fs::read(local.join("shap_0.json")).unwrap()).unwrap();
    assert_eq!(shap["label"], "ckd");
    assert!(shap["predicted_probability"].as_f64().unwrap() >= 0.5);
    let output = shap["record"]["output"].as_f64().unwrap();
    let wf = fs::read_to_string(local.join("waterfall_0.csv")).unwrap();
    let last = wf.lines().last().unwrap();
    let end: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!((end - output).abs() <= 1e-9);
    assert!(local.join("waterfall_0.svg").exists());

    let again = dir.path().join("again");
    ok(&ckdx(&["explain", "--model", model.to_str().unwrap(), "--ids", "0", "--out", again.to_str().unwrap(), "--svg"], &[]));
    assert_eq!(files_under(&local), files_under(&again));

    let far = ckdx(&["explain", "--model", model.to_str().unwrap(), "--ids", "1000000"], &[]);
    assert_eq!(far.status.code(), Some(2));
    let margin = ckdx(
        &["explain", "--model", model.to_str().unwrap(), "--space", "margin", "--ids", "3", "--out", local.to_str().unwrap()],
        &[],
    );
    ok(&margin);
    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "{\"format\": \"nope\"}").unwrap();
    assert_eq!(ckdx(&["explain", "--model", garbage.to_str().unwrap()], &[]).status.code(), Some(3));
}
