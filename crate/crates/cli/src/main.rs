use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ckdx_cli::commands::{self, ExplainArgs};
use ckdx_cli::config::{RunConfigFile, DEFAULT_PERMUTATION_REPEATS};
use ckdx_cli::{CliError, CACHE_DIR_ENV};
use ckdx_core::explain::OutputSpace;
use ckdx_core::trees::Algorithm;
use clap::{Parser, Subcommand, ValueEnum};

/// Explainable chronic-kidney-disease prediction with tree ensembles.
///
/// Exit codes: 0 success, 2 usage, 3 input/parse error, 4 runtime failure.
#[derive(Debug, Parser)]
#[command(name = "ckdx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-column summary (mean/std/min/max or category counts, missing counts) as CSV.
    Ingest {
        /// ARFF file, or CSV with the CKD column codes as header. Omit for the bundled data.
        path: Option<PathBuf>,
        /// Write the summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configuration search and write results, tables and model bundles.
    Search {
        /// TOML run configuration; omit for all defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restrict to these classifiers (comma separated).
        #[arg(long, value_delimiter = ',')]
        classifiers: Option<Vec<String>>,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configured dataset.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Override the configured root seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write SVG charts.
        #[arg(long)]
        svg: bool,
    },
    /// Importance, partial dependence and Shapley waterfall files for a model bundle.
    Explain {
        /// Model bundle written by `search` (models/<algorithm>.model.json).
        #[arg(long)]
        model: PathBuf,
        /// Dataset the model was searched on; omit for the bundled data.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// 0-based row indices to explain individually (comma separated).
        #[arg(long, value_delimiter = ',')]
        ids: Vec<usize>,
        #[arg(long, default_value = "ckdx-explain")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PERMUTATION_REPEATS)]
        repeats: usize,
        #[arg(long, value_enum, default_value_t = Space::Probability)]
        space: Space,
        /// Also write SVG charts.
        #[arg(long)]
        svg: bool,
    },
    /// Regenerate the report tables from a results file.
    Report {
        /// results.json written by `search`.
        results: PathBuf,
        #[arg(long, default_value = "ckdx-report")]
        out: PathBuf,
        /// Also write SVG charts.
        #[arg(long)]
        svg: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Space {
    Probability,
    Margin,
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest { path, out } => {
            let csv = commands::ingest(path.as_deref())?;
            match out {
                Some(p) => std::fs::write(&p, csv)
                    .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display())))?,
                None => print!("{csv}"),
            }
        }
        Command::Search { config, classifiers, out, dataset, seed, svg } => {
            let (mut file, base) = match &config {
                Some(p) => (RunConfigFile::load(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
                None => (RunConfigFile::default(), PathBuf::new()),
            };
            if let Some(names) = classifiers {
                let algs = names
                    .iter()
                    .map(|n| Algorithm::parse(n.trim()).ok_or_else(|| CliError::Usage(format!("unknown classifier '{n}'"))))
                    .collect::<Result<Vec<_>, _>>()?;
                file.grid.classifiers = Some(algs);
            }
            let mut resolved = file.resolve(&base);
            if let Some(o) = out {
                resolved.output_dir = o;
            }
            if let Some(d) = dataset {
                resolved.dataset = Some(d);
            }
            if let Some(s) = seed {
                resolved.settings.seed = s;
            }
            resolved.emit_svg |= svg;
            let cache = std::env::var_os(CACHE_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
            print_written(&commands::search(&resolved, cache.as_deref())?);
        }
        Command::Explain { model, dataset, ids, out, repeats, space, svg } => {
            let space = match space {
                Space::Probability => OutputSpace::Probability,
                Space::Margin => OutputSpace::Margin,
            };
            let args = ExplainArgs { model, dataset, ids, out, emit_svg: svg, permutation_repeats: repeats, space };
            print_written(&commands::explain(&args)?);
        }
        Command::Report { results, out, svg } => print_written(&commands::report(&results, &out, svg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
