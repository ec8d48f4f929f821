//! Command-line interface. `run` parses arguments, executes one subcommand
//! and returns the process exit code: 0 success, 1 usage error, 2 data
//! error, 3 internal error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::circuit::{impedance_values, parse_circuit};
use crate::dataset::Dataset;
use crate::features::{default_bank, featurize, select_relevant};
use crate::fit::{fit_params, fit_quality, initial_guess};
use crate::io::{
    read_dataset, read_feature_matrix, write_confusion_csv, write_dataset, write_feature_matrix, write_filter_report,
    write_fit_results, write_relevance, ColumnMapping, DatasetFormat, FitRecord, IoError, RunConfig,
};
use crate::model::{
    matrix_labels, permutation_importance, train_gbt, train_random_forest, Classifier, Model, TrainData,
};
use crate::pipeline::{evaluate, run_pipeline, write_pipeline_outputs};
use crate::plot::{plot_confusion, plot_spectrum, PlotKind};
use crate::preprocess::{filter_dataset, interpolate_dataset, normalize_max_real, raw_matrix, PairMode};
use crate::{Error, Result};

pub const SEED_ENV: &str = "ECMKIT_SEED";

#[derive(Debug, Parser)]
#[command(name = "ecmkit", version, about = "Equivalent-circuit toolkit for impedance spectra")]
struct Cli {
    /// JSON run configuration (unknown keys are rejected).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config and the ECMKIT_SEED variable.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InputFormat {
    Csv,
    Jsonl,
    Imported,
}

#[derive(Debug, Args)]
struct Input {
    /// Dataset file.
    #[arg(long)]
    input: PathBuf,
    /// File layout; by default `.jsonl` is JSONL and anything else native CSV.
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    /// Column mapping (JSON) for `--format imported`.
    #[arg(long)]
    mapping: Option<PathBuf>,
}

impl Input {
    fn load(&self) -> Result<Dataset> {
        let format = match self.format {
            None => DatasetFormat::from_path(&self.input),
            Some(InputFormat::Csv) => DatasetFormat::NativeCsv,
            Some(InputFormat::Jsonl) => DatasetFormat::NativeJsonl,
            Some(InputFormat::Imported) => {
                let mapping = match &self.mapping {
                    Some(p) => {
                        let s = std::fs::read_to_string(p).map_err(|e| IoError::file(p, e))?;
                        serde_json::from_str::<ColumnMapping>(&s).map_err(|e| IoError::Parse {
                            line: e.line() as u64,
                            column: e.column(),
                            message: e.to_string(),
                        })?
                    }
                    None => ColumnMapping::default(),
                };
                DatasetFormat::ImportedCsv(mapping)
            }
        };
        Ok(read_dataset(&self.input, &format)?)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelKind {
    Rf,
    Gbt,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled synthetic dataset.
    Generate {
        /// Multiply every class count by this factor.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Apply the rejection criteria and write a per-spectrum report.
    Filter {
        #[command(flatten)]
        input: Input,
        /// Compare only consecutive points in the rising-real-part test.
        #[arg(long)]
        consecutive: bool,
    },
    /// Resample onto the common log-spaced grid.
    Interp {
        #[command(flatten)]
        input: Input,
    },
    /// Engineered features of a (common-grid) dataset.
    Featurize {
        #[command(flatten)]
        input: Input,
        /// Write the max-real-normalized raw impedance matrix instead.
        #[arg(long)]
        raw: bool,
    },
    /// Relevance filtering of a labeled feature table.
    Select {
        /// Feature table CSV.
        #[arg(long)]
        features: PathBuf,
    },
    /// Train a classifier on a labeled feature table.
    Train {
        #[arg(value_enum)]
        kind: ModelKind,
        #[arg(long)]
        features: PathBuf,
    },
    /// Score a model on a labeled feature table.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Also compute permutation importances.
        #[arg(long)]
        importance: bool,
    },
    /// Predict labels for a feature table.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
    },
    /// Estimate circuit parameters for each spectrum.
    Fit {
        #[command(flatten)]
        input: Input,
        /// `id,predicted` CSV overriding the dataset labels.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Draw spectra as SVG.
    Plot {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "combined")]
        kind: CliPlotKind,
        /// Only this spectrum id.
        #[arg(long)]
        id: Option<String>,
        /// Overlay the fitted model from a `fit` results file.
        #[arg(long)]
        fits: Option<PathBuf>,
    },
    /// Generate, filter, interpolate, featurize, train and evaluate.
    Pipeline,
    /// Print the effective configuration as JSON.
    Config,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliPlotKind {
    Nyquist,
    Bode,
    Combined,
}

impl From<CliPlotKind> for PlotKind {
    fn from(k: CliPlotKind) -> Self {
        match k {
            CliPlotKind::Nyquist => PlotKind::Nyquist,
            CliPlotKind::Bode => PlotKind::Bode,
            CliPlotKind::Combined => PlotKind::Combined,
        }
    }
}

/// Help of the deepest subcommand named in `args`, or the top-level help.
fn usage_help(args: &[OsString]) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let mut target = &mut cmd;
    for a in args.iter().skip(1).filter_map(|a| a.to_str()) {
        if target.find_subcommand(a).is_some() {
            target = target.find_subcommand_mut(a).expect("subcommand exists");
        }
    }
    target.render_help().to_string()
}

/// Parse `args` (including the program name) and run.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            eprint!("{}", e.render());
            eprintln!();
            eprint!("{}", usage_help(&args));
            return 1;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 3;
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| pool.install(|| execute(&cli))));
    match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            2
        }
        Err(_) => 3,
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let env_seed = || std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse::<u64>().ok());
    let seed = cli.seed.or(cfg.seed).or_else(env_seed).unwrap_or(0);
    Ok(cfg.with_seed(seed))
}

fn out_path(cli: &Cli, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&cli.out).map_err(|e| IoError::file(&cli.out, e))?;
    Ok(cli.out.join(name))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| IoError::file(path, e).into())
}

fn load_model(path: &Path) -> Result<Model> {
    let s = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    Ok(Model::from_json(&s)?)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Config => {
            println!("{}", cfg.to_json());
        }
        Command::Generate { scale } => {
            let g = cfg.generator.clone().scaled(*scale);
            let d = crate::datagen::generate_dataset(&g)?;
            let path = out_path(cli, "dataset.csv")?;
            write_dataset(&d, &path, &DatasetFormat::NativeCsv)?;
            eprintln!("wrote {} spectra to {}", d.len(), path.display());
        }
        Command::Filter { input, consecutive } => {
            let d = input.load()?;
            let mut fc = cfg.filter;
            if *consecutive {
                fc.pair_mode = PairMode::Consecutive;
            }
            let r = filter_dataset(&d, &fc);
            write_filter_report(&r, &out_path(cli, "filter_report.csv")?)?;
            write_dataset(&r.kept, &out_path(cli, "filtered.csv")?, &DatasetFormat::NativeCsv)?;
            println!("rejected {} of {}", r.rejected_count(), d.len());
            for (reason, n) in r.reason_counts() {
                println!("  {reason}: {n}");
            }
            for (class, n) in r.removed_per_class() {
                println!("  removed {class}: {n}");
            }
        }
        Command::Interp { input } => {
            let d = input.load()?;
            let items = interpolate_dataset(&d, &cfg.grid.grid()?)?;
            let n_extra = items.iter().filter(|i| i.extrapolated).count();
            let out = Dataset::new(items.into_iter().map(|i| i.spectrum).collect());
            write_dataset(&out, &out_path(cli, "interpolated.csv")?, &DatasetFormat::NativeCsv)?;
            if n_extra > 0 {
                eprintln!("warning: {n_extra} spectra extended by holding end values");
            }
        }
        Command::Featurize { input, raw } => {
            let d = input.load()?;
            if *raw {
                let m = normalize_max_real(&raw_matrix(&d.spectra)?)?;
                write_feature_matrix(&m, &out_path(cli, "raw_matrix.csv")?)?;
            } else {
                let bank = cfg.features.bank.clone().unwrap_or_else(default_bank);
                let (m, degenerate) = featurize(&d.spectra, &bank);
                write_feature_matrix(&m, &out_path(cli, "features.csv")?)?;
                let bad: usize = degenerate.iter().sum();
                if bad > 0 {
                    eprintln!("warning: {bad} degenerate feature values replaced by 0");
                }
            }
        }
        Command::Select { features } => {
            let m = read_feature_matrix(features)?;
            let t = select_relevant(&m, cfg.features.fdr_level)?;
            write_relevance(&t, &out_path(cli, "relevance.csv")?)?;
            write_feature_matrix(
                &m.select_columns(&t.selected_indices()),
                &out_path(cli, "selected_features.csv")?,
            )?;
            println!("selected {} of {} features", t.selected_indices().len(), t.features.len());
        }
        Command::Train { kind, features } => {
            let m = read_feature_matrix(features)?;
            let data = TrainData::from_matrix(&m)?;
            let (model, name) = match kind {
                ModelKind::Rf => (Model::Forest(train_random_forest(&data, &cfg.forest)?), "model_rf.json"),
                ModelKind::Gbt => (Model::Gbt(train_gbt(&data, &cfg.gbt)?), "model_gbt.json"),
            };
            write_text(&out_path(cli, name)?, &model.to_json())?;
        }
        Command::Evaluate {
            model,
            features,
            importance,
        } => {
            let model = load_model(model)?;
            let m = read_feature_matrix(features)?;
            let e = evaluate(&model, &m)?;
            write_confusion_csv(&e.confusion, &out_path(cli, "confusion.csv")?)?;
            write_text(&out_path(cli, "confusion.svg")?, &plot_confusion(&e.confusion))?;
            let json = serde_json::to_string_pretty(&e.scores).expect("scores serialize");
            write_text(&out_path(cli, "scores.json")?, &(json.clone() + "\n"))?;
            println!("{json}");
            if *importance {
                let rows = model.align(&m)?;
                let truth = matrix_labels(&m)?;
                let y = truth
                    .iter()
                    .map(|l| {
                        model
                            .classes()
                            .iter()
                            .position(|c| c == l)
                            .ok_or_else(|| crate::model::ModelError::UnknownLabel(l.clone()))
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                let imp = permutation_importance(&model, &rows, &y, cfg.importance_repeats, cfg.split_seed());
                let mut text = String::from("feature,importance\n");
                for (f, v) in model.features().iter().zip(imp) {
                    text.push_str(&format!("{f},{}\n", crate::io::format_float(v)));
                }
                write_text(&out_path(cli, "importance.csv")?, &text)?;
            }
        }
        Command::Classify { model, features } => {
            let model = load_model(model)?;
            let m = read_feature_matrix(features)?;
            let pred = model.classify(&m)?;
            let mut text = String::from("id,predicted\n");
            for (id, p) in m.ids.iter().zip(pred) {
                text.push_str(&format!("{id},{p}\n"));
            }
            write_text(&out_path(cli, "predictions.csv")?, &text)?;
        }
        Command::Fit { input, labels } => {
            let d = input.load()?;
            let overrides = match labels {
                Some(p) => read_predictions(p)?,
                None => Default::default(),
            };
            let records = fit_dataset(&d, &overrides, &cfg)?;
            write_fit_results(&records, &out_path(cli, "fits.csv")?)?;
            let ok = records.iter().filter(|r| r.converged).count();
            println!("fitted {} spectra, {ok} converged", records.len());
        }
        Command::Plot { input, kind, id, fits } => {
            let d = input.load()?;
            let fits = match fits {
                Some(p) => read_fit_params(p)?,
                None => Default::default(),
            };
            let dir = out_path(cli, "plots")?;
            std::fs::create_dir_all(&dir).map_err(|e| IoError::file(&dir, e))?;
            let mut n = 0;
            for (i, s) in d.spectra.iter().enumerate() {
                if id.as_ref().is_some_and(|want| want != &s.id) {
                    continue;
                }
                let overlay = match fits.get(&s.id) {
                    Some((circuit, params)) => {
                        let m = parse_circuit(circuit)?;
                        Some(impedance_values(&m, params, s.freq())?)
                    }
                    None => None,
                };
                let svg = plot_spectrum(s, (*kind).into(), overlay.as_deref())?;
                write_text(&dir.join(format!("spectrum_{i:05}.svg")), &svg)?;
                n += 1;
            }
            if n == 0 {
                return Err(IoError::Format("no spectrum matched".into()).into());
            }
        }
        Command::Pipeline => {
            let t0 = Instant::now();
            let out = run_pipeline(&cfg)?;
            write_pipeline_outputs(&out, &cli.out)?;
            let r = &out.report;
            println!(
                "generated {}, rejected {}, train {}, test {}, features {}/{}",
                r.generated,
                r.rejected,
                r.n_train,
                r.n_test,
                r.selected_features.len(),
                r.n_features
            );
            for (name, e) in [("gbt", &r.gbt), ("rf", &r.rf)] {
                println!(
                    "{name}: f1_weighted {:.4} f1_macro {:.4} recall_weighted {:.4} recall_macro {:.4}",
                    e.scores.f1_weighted, e.scores.f1_macro, e.scores.recall_weighted, e.scores.recall_macro
                );
            }
            eprintln!("elapsed {:.1} s", t0.elapsed().as_secs_f64());
        }
    }
    Ok(())
}

fn read_predictions(path: &Path) -> Result<std::collections::HashMap<String, String>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| IoError::Format(e.to_string()))?;
    let mut out = std::collections::HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| IoError::Format(e.to_string()))?;
        if rec.len() < 2 {
            return Err(IoError::Format(format!("{}: expected id,predicted", path.display())).into());
        }
        out.insert(rec[0].to_string(), rec[1].to_string());
    }
    Ok(out)
}

fn read_fit_params(path: &Path) -> Result<std::collections::HashMap<String, (String, Vec<f64>)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| IoError::Format(e.to_string()))?;
    let mut out = std::collections::HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| IoError::Format(e.to_string()))?;
        let params = rec[2]
            .split(';')
            .filter(|t| !t.is_empty())
            .map(|kv| {
                kv.split_once('=')
                    .and_then(|(_, v)| v.parse::<f64>().ok())
                    .ok_or_else(|| IoError::Format(format!("bad parameter `{kv}`")))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        out.insert(rec[0].to_string(), (rec[1].to_string(), params));
    }
    Ok(out)
}

/// Fit every spectrum with its label (or the override for its id).
pub fn fit_dataset(
    d: &Dataset,
    overrides: &std::collections::HashMap<String, String>,
    cfg: &RunConfig,
) -> Result<Vec<FitRecord>> {
    use rayon::prelude::*;
    d.spectra
        .par_iter()
        .map(|s| {
            let label = overrides
                .get(&s.id)
                .cloned()
                .or_else(|| s.label.clone())
                .ok_or_else(|| IoError::Format(format!("spectrum `{}` has no circuit label", s.id)))?;
            let m = parse_circuit(&label)?;
            let init = initial_guess(&m, s)?;
            let r = fit_params(&m, s, &init, &cfg.fit)?;
            Ok(FitRecord {
                id: s.id.clone(),
                circuit: m.canonical_name().to_string(),
                names: m.param_names().to_vec(),
                rel_rmse: fit_quality(&m, &r.params, s)?,
                params: r.params,
                cost: r.cost,
                converged: r.converged,
            })
        })
        .collect::<std::result::Result<Vec<_>, Error>>()
}
