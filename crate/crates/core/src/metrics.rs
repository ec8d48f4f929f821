//! Confusion matrices and averaged precision/recall/F1 scores.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("label `{0}` is not in the class list")]
    UnknownLabel(String),
    #[error("y_true has {0} entries but y_pred has {1}")]
    LengthMismatch(usize, usize),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
}

/// `counts[i][j]`: samples of true class `i` predicted as class `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_indices(classes: Vec<String>, y_true: &[usize], y_pred: &[usize]) -> Result<Self, MetricsError> {
        if y_true.len() != y_pred.len() {
            return Err(MetricsError::LengthMismatch(y_true.len(), y_pred.len()));
        }
        let k = classes.len();
        let mut counts = vec![vec![0u64; k]; k];
        for (&t, &p) in y_true.iter().zip(y_pred) {
            if t >= k || p >= k {
                return Err(MetricsError::UnknownLabel(t.max(p).to_string()));
            }
            counts[t][p] += 1;
        }
        Ok(Self { classes, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let diag: u64 = (0..self.classes.len()).map(|i| self.counts[i][i]).sum();
        diag as f64 / self.total() as f64
    }

    pub fn index_of(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == class)
    }

    /// Off-diagonal mass between two class groups, both directions.
    pub fn mass_between(&self, a: &[usize], b: &[usize]) -> u64 {
        let mut m = 0;
        for &i in a {
            for &j in b {
                if i != j {
                    m += self.counts[i][j] + self.counts[j][i];
                }
            }
        }
        m
    }

    /// Off-diagonal mass inside a class group.
    pub fn mass_within(&self, group: &[usize]) -> u64 {
        let mut m = 0;
        for &i in group {
            for &j in group {
                if i != j {
                    m += self.counts[i][j];
                }
            }
        }
        m
    }
}

/// Count predictions per (true, predicted) class.
pub fn confusion<S: AsRef<str>>(y_true: &[S], y_pred: &[S], classes: &[String]) -> Result<ConfusionMatrix, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let index = |l: &S| {
        classes
            .iter()
            .position(|c| c == l.as_ref())
            .ok_or_else(|| MetricsError::UnknownLabel(l.as_ref().to_string()))
    };
    let t = y_true.iter().map(index).collect::<Result<Vec<_>, _>>()?;
    let p = y_pred.iter().map(index).collect::<Result<Vec<_>, _>>()?;
    ConfusionMatrix::from_indices(classes.to_vec(), &t, &p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub f1_macro: f64,
    pub f1_weighted: f64,
    pub recall_macro: f64,
    pub recall_weighted: f64,
    pub per_class: Vec<ClassScores>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Macro and support-weighted averages. Undefined precision, recall or F1
/// count as 0.
pub fn scores(cm: &ConfusionMatrix) -> Result<Scores, MetricsError> {
    let k = cm.classes.len();
    let total = cm.total();
    if k == 0 || total == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    let per_class: Vec<ClassScores> = (0..k)
        .map(|i| {
            let tp = cm.counts[i][i];
            let support: u64 = cm.counts[i].iter().sum();
            let predicted: u64 = (0..k).map(|r| cm.counts[r][i]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassScores { precision, recall, f1, support }
        })
        .collect();
    let kf = k as f64;
    let weighted = |f: fn(&ClassScores) -> f64| {
        per_class.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / total as f64
    };
    Ok(Scores {
        f1_macro: per_class.iter().map(|c| c.f1).sum::<f64>() / kf,
        f1_weighted: weighted(|c| c.f1),
        recall_macro: per_class.iter().map(|c| c.recall).sum::<f64>() / kf,
        recall_weighted: weighted(|c| c.recall),
        per_class,
    })
}

/// Support-weighted F1 of index-encoded predictions.
pub fn weighted_f1(n_classes: usize, y_true: &[usize], y_pred: &[usize]) -> f64 {
    let classes = (0..n_classes).map(|i| i.to_string()).collect();
    ConfusionMatrix::from_indices(classes, y_true, y_pred)
        .and_then(|cm| scores(&cm))
        .map(|s| s.f1_weighted)
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(counts: Vec<Vec<u64>>) -> ConfusionMatrix {
        let classes = (0..counts.len()).map(|i| format!("c{i}")).collect();
        ConfusionMatrix { classes, counts }
    }

    #[test]
    fn perfect_predictions() {
        let classes = vec!["a".to_string(), "b".to_string()];
        let y = ["a", "b", "b", "a"];
        let m = confusion(&y, &y, &classes).unwrap();
        assert_eq!(m.counts, vec![vec![2, 0], vec![0, 2]]);
        let s = scores(&m).unwrap();
        assert_eq!((s.f1_macro, s.f1_weighted, s.recall_macro, s.recall_weighted), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn single_error() {
        let classes = vec!["A".to_string(), "B".to_string()];
        let m = confusion(&["A"], &["B"], &classes).unwrap();
        assert_eq!(m.counts, vec![vec![0, 1], vec![0, 0]]);
    }

    #[test]
    fn hand_computed_two_class() {
        let s = scores(&cm(vec![vec![8, 2], vec![3, 7]])).unwrap();
        assert!((s.per_class[0].recall - 0.8).abs() < 1e-12);
        assert!((s.per_class[1].recall - 0.7).abs() < 1e-12);
        assert!((s.per_class[0].precision - 8.0 / 11.0).abs() < 1e-12);
        assert!((s.per_class[1].precision - 7.0 / 9.0).abs() < 1e-12);
        assert!((s.per_class[0].f1 - 0.7619).abs() < 1e-4);
        assert!((s.per_class[1].f1 - 0.7368).abs() < 1e-4);
        assert!((s.f1_macro - 0.7493).abs() < 1e-4);
        assert!((s.f1_weighted - 0.7493).abs() < 1e-4);
    }

    #[test]
    fn zero_support_class() {
        let s = scores(&cm(vec![vec![5, 0, 0], vec![0, 5, 0], vec![0, 0, 0]])).unwrap();
        assert_eq!(s.per_class[2].f1, 0.0);
        assert!((s.f1_macro - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.f1_weighted, 1.0);
    }

    #[test]
    fn errors() {
        let classes = vec!["a".to_string()];
        assert_eq!(confusion(&["x"], &["a"], &classes), Err(MetricsError::UnknownLabel("x".into())));
        assert_eq!(scores(&cm(vec![vec![0]])), Err(MetricsError::EmptyMatrix));
    }
}
