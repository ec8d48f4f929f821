//! End-to-end run: generate, filter, interpolate, featurize, select, train
//! both classifiers on one stratified split and evaluate them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::generate_dataset;
use crate::dataset::Dataset;
use crate::features::{default_bank, featurize, select_relevant, RelevanceTable};
use crate::io::{
    write_confusion_csv, write_dataset, write_feature_matrix, write_filter_report, write_relevance, DatasetFormat,
    IoError, RunConfig,
};
use crate::metrics::{scores, ConfusionMatrix, Scores};
use crate::model::{matrix_labels, stratified_split, train_gbt, train_random_forest, Classifier, Model, TrainData};
use crate::plot::plot_confusion;
use crate::preprocess::{filter_dataset, interpolate_dataset, normalize_max_real, raw_matrix, FeatureMatrix, FilterReport};
use crate::Result;

/// Held-out evaluation of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub scores: Scores,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub seed: u64,
    pub generated: usize,
    pub rejected: usize,
    pub rejected_per_class: BTreeMap<String, usize>,
    pub rejected_per_reason: BTreeMap<String, usize>,
    pub n_train: usize,
    pub n_test: usize,
    pub n_features: usize,
    pub selected_features: Vec<String>,
    pub gbt: Evaluation,
    pub rf: Evaluation,
}

/// Everything produced by [`run_pipeline`].
pub struct PipelineOutput {
    pub dataset: Dataset,
    pub filter: FilterReport,
    pub features: FeatureMatrix,
    pub raw: FeatureMatrix,
    pub relevance: RelevanceTable,
    pub gbt: Model,
    pub rf: Model,
    pub report: PipelineReport,
}

/// Predict `m` and compare with its labels.
pub fn evaluate(model: &dyn Classifier, m: &FeatureMatrix) -> Result<Evaluation> {
    let truth = matrix_labels(m)?;
    let pred = model.classify(m)?;
    let confusion = crate::metrics::confusion(&truth, &pred, model.classes())?;
    Ok(Evaluation {
        scores: scores(&confusion)?,
        confusion,
    })
}

/// Run the whole pipeline in memory. `cfg.seed` must already be resolved.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineOutput> {
    let seed = cfg.split_seed();
    let dataset = generate_dataset(&cfg.generator)?;
    let filter = filter_dataset(&dataset, &cfg.filter);
    let grid = cfg.grid.grid()?;
    let interp = interpolate_dataset(&filter.kept, &grid)?;
    let spectra: Vec<_> = interp.into_iter().map(|i| i.spectrum).collect();

    let bank = cfg.features.bank.clone().unwrap_or_else(default_bank);
    let (features, _) = featurize(&spectra, &bank);
    let raw = normalize_max_real(&raw_matrix(&spectra)?)?;

    let labels = matrix_labels(&features)?;
    let (train_idx, test_idx) = stratified_split(&labels, cfg.split.test_fraction, seed);
    let train_f = features.select_rows(&train_idx);
    let test_f = features.select_rows(&test_idx);
    let relevance = select_relevant(&train_f, cfg.features.fdr_level)?;
    let keep = relevance.selected_indices();
    if keep.is_empty() {
        return Err(crate::features::FeatureError::Empty.into());
    }
    let train_sel = train_f.select_columns(&keep);
    let gbt = Model::Gbt(train_gbt(&TrainData::from_matrix(&train_sel)?, &cfg.gbt)?);
    let rf = Model::Forest(train_random_forest(
        &TrainData::from_matrix(&raw.select_rows(&train_idx))?,
        &cfg.forest,
    )?);
    let gbt_eval = evaluate(&gbt, &test_f)?;
    let rf_eval = evaluate(&rf, &raw.select_rows(&test_idx))?;

    let report = PipelineReport {
        seed,
        generated: dataset.len(),
        rejected: filter.rejected_count(),
        rejected_per_class: filter.removed_per_class(),
        rejected_per_reason: filter
            .reason_counts()
            .into_iter()
            .map(|(r, n)| (r.code().to_string(), n))
            .collect(),
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        n_features: features.n_cols(),
        selected_features: relevance.selected_names(),
        gbt: gbt_eval,
        rf: rf_eval,
    };
    Ok(PipelineOutput {
        dataset,
        filter,
        features,
        raw,
        relevance,
        gbt,
        rf,
        report,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| IoError::file(path, e).into())
}

/// Write every pipeline artifact into `dir`.
pub fn write_pipeline_outputs(out: &PipelineOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
    write_dataset(&out.dataset, &dir.join("dataset.csv"), &DatasetFormat::NativeCsv)?;
    write_filter_report(&out.filter, &dir.join("filter_report.csv"))?;
    write_dataset(&out.filter.kept, &dir.join("filtered.csv"), &DatasetFormat::NativeCsv)?;
    write_feature_matrix(&out.features, &dir.join("features.csv"))?;
    write_feature_matrix(&out.raw, &dir.join("raw_matrix.csv"))?;
    write_relevance(&out.relevance, &dir.join("relevance.csv"))?;
    write_text(&dir.join("model_gbt.json"), &out.gbt.to_json())?;
    write_text(&dir.join("model_rf.json"), &out.rf.to_json())?;
    for (name, e) in [("gbt", &out.report.gbt), ("rf", &out.report.rf)] {
        write_confusion_csv(&e.confusion, &dir.join(format!("confusion_{name}.csv")))?;
        write_text(&dir.join(format!("confusion_{name}.svg")), &plot_confusion(&e.confusion))?;
    }
    let json = serde_json::to_string_pretty(&out.report).expect("report serializes");
    write_text(&dir.join("scores.json"), &(json + "\n"))
}
