//! Tree-ensemble classifiers.
//!
//! Model file layout (JSON):
//!
//! ```text
//! { "format": "ecmkit-model", "version": 1, "kind": "forest" | "gbt",
//!   "classes": [..], "features": [..], "body": { ..model specific.. } }
//! ```
//!
//! Tree nodes are stored as flat arrays, `{"split": {feature, threshold,
//! left, right}}` or `{"leaf": [..]}`; rows with `x[feature] <= threshold`
//! go left.

mod forest;
mod gbt;
mod importance;
mod split;
mod tree;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::FeatureMatrix;

pub use forest::{train_random_forest, ForestConfig, ForestModel};
pub use gbt::{train_gbt, GbtConfig, GbtModel};
pub use importance::permutation_importance;
pub use split::stratified_split;
pub use tree::{DecisionTree, Node};

pub const MODEL_FORMAT: &str = "ecmkit-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training labels need at least two distinct classes, found {0}")]
    DegenerateLabels(usize),
    #[error("empty feature matrix")]
    EmptyMatrix,
    #[error("shape mismatch: expected {expected} features, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("feature `{0}` required by the model is missing from the input")]
    MissingFeature(String),
    #[error("label `{0}` is not a model class")]
    UnknownLabel(String),
    #[error("row {0} has no label")]
    MissingLabel(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    Format(String),
}

/// Column-major training data with integer-encoded labels.
#[derive(Debug, Clone)]
pub struct TrainData {
    pub classes: Vec<String>,
    pub features: Vec<String>,
    /// `columns[f][row]`
    pub columns: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub n_classes: usize,
}

impl TrainData {
    /// Build from row-major values. Classes are the sorted distinct labels.
    pub fn new<S: AsRef<str>>(features: Vec<String>, rows: &[Vec<f64>], labels: &[S]) -> Result<Self, ModelError> {
        let classes: Vec<String> = labels
            .iter()
            .map(|s| s.as_ref().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Self::with_classes(features, rows, labels, classes)
    }

    /// Build with an explicit class list (labels must all belong to it).
    pub fn with_classes<S: AsRef<str>>(
        features: Vec<String>,
        rows: &[Vec<f64>],
        labels: &[S],
        classes: Vec<String>,
    ) -> Result<Self, ModelError> {
        if rows.is_empty() || features.is_empty() {
            return Err(ModelError::EmptyMatrix);
        }
        if rows.len() != labels.len() {
            return Err(ModelError::ShapeMismatch {
                expected: rows.len(),
                actual: labels.len(),
            });
        }
        let p = features.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for r in rows {
            if r.len() != p {
                return Err(ModelError::ShapeMismatch {
                    expected: p,
                    actual: r.len(),
                });
            }
            for (c, v) in columns.iter_mut().zip(r) {
                c.push(*v);
            }
        }
        let y = labels
            .iter()
            .map(|l| {
                classes
                    .iter()
                    .position(|c| c == l.as_ref())
                    .ok_or_else(|| ModelError::UnknownLabel(l.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let n_classes = classes.len();
        Ok(Self {
            classes,
            features,
            columns,
            y,
            n_classes,
        })
    }

    /// Use every labelled row of a feature matrix.
    pub fn from_matrix(m: &FeatureMatrix) -> Result<Self, ModelError> {
        let labels = matrix_labels(m)?;
        Self::new(m.columns.clone(), &m.rows, &labels)
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub(crate) fn validate(&self) -> Result<(), ModelError> {
        if self.n_rows() == 0 || self.n_features() == 0 {
            return Err(ModelError::EmptyMatrix);
        }
        let distinct: BTreeSet<usize> = self.y.iter().copied().collect();
        if distinct.len() < 2 {
            return Err(ModelError::DegenerateLabels(distinct.len()));
        }
        Ok(())
    }
}

pub fn matrix_labels(m: &FeatureMatrix) -> Result<Vec<String>, ModelError> {
    m.labels
        .iter()
        .enumerate()
        .map(|(i, l)| l.clone().ok_or(ModelError::MissingLabel(i)))
        .collect()
}

/// Shared prediction interface of the trained ensembles.
pub trait Classifier: Sync {
    fn classes(&self) -> &[String];
    fn features(&self) -> &[String];
    /// Class probabilities for one row in training feature order.
    fn proba_row(&self, x: &[f64]) -> Vec<f64>;

    fn predict_row(&self, x: &[f64]) -> usize {
        argmax(&self.proba_row(x))
    }

    fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ModelError> {
        self.check_rows(rows)?;
        Ok(rows.iter().map(|r| self.proba_row(r)).collect())
    }

    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>, ModelError> {
        self.check_rows(rows)?;
        Ok(rows.iter().map(|r| self.predict_row(r)).collect())
    }

    fn check_rows(&self, rows: &[Vec<f64>]) -> Result<(), ModelError> {
        let p = self.features().len();
        match rows.iter().find(|r| r.len() != p) {
            Some(r) => Err(ModelError::ShapeMismatch {
                expected: p,
                actual: r.len(),
            }),
            None => Ok(()),
        }
    }

    /// Reorder the columns of `m` into training feature order, by name.
    fn align(&self, m: &FeatureMatrix) -> Result<Vec<Vec<f64>>, ModelError> {
        let idx = self
            .features()
            .iter()
            .map(|f| m.column_index(f).ok_or_else(|| ModelError::MissingFeature(f.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(m.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect())
    }

    /// Predicted class names for a feature matrix, matching columns by name.
    fn classify(&self, m: &FeatureMatrix) -> Result<Vec<String>, ModelError> {
        let rows = self.align(m)?;
        Ok(self
            .predict(&rows)?
            .into_iter()
            .map(|i| self.classes()[i].clone())
            .collect())
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Either trained ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Forest(ForestModel),
    Gbt(GbtModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Forest(_) => "forest",
            Model::Gbt(_) => "gbt",
        }
    }

    pub fn to_json(&self) -> String {
        let body = match self {
            Model::Forest(m) => serde_json::to_value(ForestBody {
                config: m.config.clone(),
                trees: m.trees.clone(),
            }),
            Model::Gbt(m) => serde_json::to_value(GbtBody {
                config: m.config.clone(),
                base_scores: m.base_scores.clone(),
                rounds: m.rounds.clone(),
                train_loss: m.train_loss.clone(),
            }),
        }
        .expect("model body serializes");
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            kind: self.kind().to_string(),
            classes: self.classes().to_vec(),
            features: self.features().to_vec(),
            body,
        };
        serde_json::to_string(&file).expect("model file serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(s).map_err(|e| ModelError::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(ModelError::Format(format!("unexpected format tag `{}`", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(ModelError::Format(format!("unsupported version {}", file.version)));
        }
        let bad = |e: serde_json::Error| ModelError::Format(e.to_string());
        let model = match file.kind.as_str() {
            "forest" => {
                let b: ForestBody = serde_json::from_value(file.body).map_err(bad)?;
                Model::Forest(ForestModel {
                    classes: file.classes,
                    features: file.features,
                    trees: b.trees,
                    config: b.config,
                })
            }
            "gbt" => {
                let b: GbtBody = serde_json::from_value(file.body).map_err(bad)?;
                Model::Gbt(GbtModel {
                    classes: file.classes,
                    features: file.features,
                    base_scores: b.base_scores,
                    rounds: b.rounds,
                    train_loss: b.train_loss,
                    config: b.config,
                })
            }
            k => return Err(ModelError::Format(format!("unknown model kind `{k}`"))),
        };
        model.check_consistency()?;
        Ok(model)
    }

    fn check_consistency(&self) -> Result<(), ModelError> {
        let k = self.classes().len();
        let p = self.features().len();
        let trees: Vec<&DecisionTree> = match self {
            Model::Forest(m) => m.trees.iter().collect(),
            Model::Gbt(m) => {
                if m.base_scores.len() != k || m.rounds.iter().any(|r| r.len() != k) {
                    return Err(ModelError::Format("per-class tree count mismatch".into()));
                }
                m.rounds.iter().flatten().collect()
            }
        };
        let leaf_len = if matches!(self, Model::Forest(_)) { k } else { 1 };
        for t in trees {
            let ok = t.is_well_formed()
                && t.nodes.iter().all(|n| match n {
                    Node::Split { feature, .. } => *feature < p,
                    Node::Leaf(v) => v.len() == leaf_len,
                });
            if !ok {
                return Err(ModelError::Format("malformed tree".into()));
            }
        }
        Ok(())
    }
}

impl Classifier for Model {
    fn classes(&self) -> &[String] {
        match self {
            Model::Forest(m) => m.classes(),
            Model::Gbt(m) => m.classes(),
        }
    }

    fn features(&self) -> &[String] {
        match self {
            Model::Forest(m) => m.features(),
            Model::Gbt(m) => m.features(),
        }
    }

    fn proba_row(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Model::Forest(m) => m.proba_row(x),
            Model::Gbt(m) => m.proba_row(x),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    kind: String,
    classes: Vec<String>,
    features: Vec<String>,
    body: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct ForestBody {
    config: ForestConfig,
    trees: Vec<DecisionTree>,
}

#[derive(Serialize, Deserialize)]
struct GbtBody {
    config: GbtConfig,
    base_scores: Vec<f64>,
    rounds: Vec<Vec<DecisionTree>>,
    train_loss: Vec<f64>,
}
