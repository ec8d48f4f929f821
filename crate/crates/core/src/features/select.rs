//! Relevance filtering: one-vs-rest Mann-Whitney U tests with
//! Benjamini-Yekutieli false discovery rate control.

use rayon::prelude::*;
use statrs::function::erf::erfc;

use super::FeatureError;
use crate::preprocess::FeatureMatrix;

/// Average ranks (1-based) and the tie correction term `sum(t^3 - t)`.
fn rank_with_ties(values: &[f64]) -> (Vec<f64>, f64) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = avg;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    (ranks, tie_term)
}

fn mwu_from_ranks(ranks: &[f64], tie_term: f64, in_group: &[bool]) -> f64 {
    let n = ranks.len() as f64;
    let n1 = in_group.iter().filter(|g| **g).count() as f64;
    let n2 = n - n1;
    if n1 == 0.0 || n2 == 0.0 {
        return 1.0;
    }
    let r1: f64 = ranks.iter().zip(in_group).filter(|(_, g)| **g).map(|(r, _)| r).sum();
    let u1 = r1 - n1 * (n1 + 1.0) / 2.0;
    let mu = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if !(var > 0.0) {
        return 1.0;
    }
    let z = ((u1 - mu).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

/// Two-sided Mann-Whitney U p-value (normal approximation with tie and
/// continuity correction).
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> f64 {
    let values: Vec<f64> = a.iter().chain(b).copied().collect();
    let group: Vec<bool> = (0..values.len()).map(|i| i < a.len()).collect();
    let (ranks, ties) = rank_with_ties(&values);
    mwu_from_ranks(&ranks, ties, &group)
}

/// Benjamini-Yekutieli step-up procedure at level `alpha`.
pub fn benjamini_yekutieli(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    if m == 0 {
        return Vec::new();
    }
    let c_m: f64 = (1..=m).map(|i| 1.0 / i as f64).sum();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut cutoff = None;
    for (rank, &i) in order.iter().enumerate() {
        let k = (rank + 1) as f64;
        if p_values[i] <= k * alpha / (m as f64 * c_m) {
            cutoff = Some(rank);
        }
    }
    let mut selected = vec![false; m];
    if let Some(c) = cutoff {
        for &i in &order[..=c] {
            selected[i] = true;
        }
    }
    selected
}

/// Result of relevance filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceTable {
    pub features: Vec<String>,
    pub classes: Vec<String>,
    /// `per_class[f][c]`: one-vs-rest p-value of feature `f` for class `c`.
    pub per_class: Vec<Vec<f64>>,
    /// Aggregated p-value per feature.
    pub p_values: Vec<f64>,
    pub selected: Vec<bool>,
    pub fdr_level: f64,
}

impl RelevanceTable {
    pub fn selected_indices(&self) -> Vec<usize> {
        (0..self.selected.len()).filter(|&i| self.selected[i]).collect()
    }

    pub fn selected_names(&self) -> Vec<String> {
        self.selected_indices().into_iter().map(|i| self.features[i].clone()).collect()
    }
}

/// Test each feature one-vs-rest per class. A feature's p-value is the
/// smallest class p-value times the number of distinct tests (one for two
/// classes, one per class otherwise), capped at 1. Constant features are
/// never selected.
pub fn select_relevant(m: &FeatureMatrix, fdr_level: f64) -> Result<RelevanceTable, FeatureError> {
    if !(fdr_level > 0.0 && fdr_level < 1.0) {
        return Err(FeatureError::InvalidLevel(fdr_level));
    }
    let labels: Vec<&str> = m
        .labels
        .iter()
        .map(|l| l.as_deref().ok_or(FeatureError::DegenerateLabels("unlabeled row".into())))
        .collect::<Result<_, _>>()?;
    let mut classes: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(FeatureError::DegenerateLabels(format!("{} class(es)", classes.len())));
    }
    for c in &classes {
        let n = labels.iter().filter(|l| **l == c).count();
        if n < 2 {
            return Err(FeatureError::DegenerateLabels(format!("class `{c}` has {n} row(s)")));
        }
    }
    let groups: Vec<Vec<bool>> = classes
        .iter()
        .map(|c| labels.iter().map(|l| *l == c).collect())
        .collect();
    let n_tests = if classes.len() == 2 { 1 } else { classes.len() };

    let results: Vec<(Vec<f64>, f64, bool)> = (0..m.n_cols())
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = m.rows.iter().map(|r| r[j]).collect();
            let constant = col.iter().all(|v| *v == col[0]);
            if constant {
                return (vec![1.0; classes.len()], 1.0, true);
            }
            let (ranks, ties) = rank_with_ties(&col);
            let per: Vec<f64> = groups.iter().map(|g| mwu_from_ranks(&ranks, ties, g)).collect();
            let pmin = per[..n_tests].iter().copied().fold(1.0, f64::min);
            (per, (pmin * n_tests as f64).min(1.0), false)
        })
        .collect();

    let p_values: Vec<f64> = results.iter().map(|r| r.1).collect();
    let mut selected = benjamini_yekutieli(&p_values, fdr_level);
    for (s, r) in selected.iter_mut().zip(&results) {
        if r.2 {
            *s = false;
        }
    }
    Ok(RelevanceTable {
        features: m.columns.clone(),
        classes,
        per_class: results.into_iter().map(|r| r.0).collect(),
        p_values,
        selected,
        fdr_level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ranks_with_ties() {
        let (r, t) = rank_with_ties(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(r, vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(t, 6.0);
    }

    #[test]
    fn mwu_reference_value() {
        // rank sum 19, U = 4, n1 = n2 = 5; with continuity correction
        // z = (|4 - 12.5| - 0.5) / sqrt(25 * 11 / 12) = 8 / 4.787 = 1.671
        let p = mann_whitney_u(&[1.0, 2.0, 3.0, 4.0, 9.0], &[5.0, 6.0, 7.0, 8.0, 10.0]);
        let z: f64 = 8.0 / (25.0f64 * 11.0 / 12.0).sqrt();
        assert!((p - erfc(z / 2f64.sqrt())).abs() < 1e-12);
        assert!((p - 0.0947).abs() < 1e-3);
    }

    #[test]
    fn by_procedure() {
        // m = 4, c(m) = 25/12; thresholds k * 0.05 / (4 * 25/12) = 0.006 k
        let sel = benjamini_yekutieli(&[0.001, 0.5, 0.011, 0.03], 0.05);
        assert_eq!(sel, vec![true, false, true, false]);
        assert!(benjamini_yekutieli(&[], 0.05).is_empty());
    }

    fn labeled(rows: Vec<Vec<f64>>, labels: Vec<&str>) -> FeatureMatrix {
        let n = rows.len();
        FeatureMatrix {
            columns: (0..rows[0].len()).map(|i| format!("f{i}")).collect(),
            rows,
            labels: labels.into_iter().map(|l| Some(l.to_string())).collect(),
            ids: vec![String::new(); n],
            freq_grid: None,
        }
    }

    #[test]
    fn informative_selected_constant_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let classes = ["a", "b", "c"];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..300 {
            let c = i % 3;
            rows.push(vec![c as f64 + 1e-3 * rng.random::<f64>(), 7.0]);
            labels.push(classes[c]);
        }
        let t = select_relevant(&labeled(rows, labels), 0.05).unwrap();
        assert_eq!(t.selected, vec![true, false]);
    }

    #[test]
    fn degenerate_labels() {
        let m = labeled(vec![vec![1.0], vec![2.0], vec![3.0]], vec!["a", "a", "a"]);
        assert!(matches!(select_relevant(&m, 0.05), Err(FeatureError::DegenerateLabels(_))));
        let m = labeled(vec![vec![1.0], vec![2.0], vec![3.0]], vec!["a", "a", "b"]);
        assert!(matches!(select_relevant(&m, 0.05), Err(FeatureError::DegenerateLabels(_))));
    }
}
