//! Random forest of Gini-split CART trees.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, Node};
use super::{Classifier, ModelError, TrainData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Fraction of features tried per split; `None` means `round(sqrt(2 p))`
    /// features out of `p`.
    pub feature_subsample: Option<f64>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 300,
            max_depth: None,
            min_samples_leaf: 1,
            feature_subsample: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub classes: Vec<String>,
    pub features: Vec<String>,
    pub trees: Vec<DecisionTree>,
    pub config: ForestConfig,
}

impl Classifier for ForestModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn features(&self) -> &[String] {
        &self.features
    }

    fn proba_row(&self, x: &[f64]) -> Vec<f64> {
        let k = self.classes.len();
        let mut p = vec![0.0; k];
        for t in &self.trees {
            for (a, b) in p.iter_mut().zip(t.leaf(x)) {
                *a += b;
            }
        }
        let n = self.trees.len() as f64;
        p.iter_mut().for_each(|v| *v /= n);
        p
    }
}

struct Builder<'a> {
    data: &'a TrainData,
    max_depth: usize,
    min_leaf: usize,
    mtry: usize,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy)]
struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    fn better_than(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => {
                self.score > o.score
                    || (self.score == o.score
                        && (self.feature < o.feature || (self.feature == o.feature && self.threshold < o.threshold)))
            }
        }
    }
}

impl Builder<'_> {
    fn histogram(&self, rows: &[usize]) -> Vec<f64> {
        let mut h = vec![0.0; self.data.n_classes];
        for &r in rows {
            h[self.data.y[r]] += 1.0;
        }
        h
    }

    /// Best Gini split of `rows` on `feature`, maximising
    /// `sum_c l_c^2 / n_l + sum_c r_c^2 / n_r`.
    fn best_on_feature(&self, rows: &[usize], feature: usize, total: &[f64], buf: &mut Vec<(f64, usize)>) -> Option<Candidate> {
        let col = &self.data.columns[feature];
        buf.clear();
        buf.extend(rows.iter().map(|&r| (col[r], self.data.y[r])));
        buf.sort_by(|a, b| a.0.total_cmp(&b.0));
        if buf[0].0 == buf[buf.len() - 1].0 {
            return None;
        }
        let n = buf.len();
        let mut left = vec![0.0; total.len()];
        let (mut sum_l, mut sum_r) = (0.0, total.iter().map(|c| c * c).sum::<f64>());
        let mut best: Option<Candidate> = None;
        for i in 0..n - 1 {
            let c = buf[i].1;
            let right_c = total[c] - left[c];
            // move one sample of class c from right to left
            sum_r += (right_c - 1.0) * (right_c - 1.0) - right_c * right_c;
            sum_l += (left[c] + 1.0) * (left[c] + 1.0) - left[c] * left[c];
            left[c] += 1.0;
            let nl = i + 1;
            let nr = n - nl;
            if buf[i].0 == buf[i + 1].0 || nl < self.min_leaf || nr < self.min_leaf {
                continue;
            }
            let cand = Candidate {
                score: sum_l / nl as f64 + sum_r / nr as f64,
                feature,
                threshold: buf[i].0,
            };
            if cand.better_than(&best) {
                best = Some(cand);
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng, feature_order: &mut [usize]) -> usize {
        let hist = self.histogram(&rows);
        let id = self.nodes.len();
        let n = rows.len();
        let pure = hist.iter().filter(|c| **c > 0.0).count() <= 1;
        if pure || depth >= self.max_depth || n < 2 * self.min_leaf {
            self.nodes.push(Node::Leaf(normalize(hist)));
            return id;
        }
        feature_order.shuffle(rng);
        let mut best: Option<Candidate> = None;
        let mut buf = Vec::with_capacity(n);
        // constant features do not count towards mtry
        let mut evaluated = 0;
        for &f in feature_order.iter() {
            if evaluated >= self.mtry {
                break;
            }
            if let Some(c) = self.best_on_feature(&rows, f, &hist, &mut buf) {
                evaluated += 1;
                if c.better_than(&best) {
                    best = Some(c);
                }
            }
        }
        let parent_score = hist.iter().map(|c| c * c).sum::<f64>() / n as f64;
        let Some(split) = best.filter(|b| b.score > parent_score * (1.0 + 1e-12)) else {
            self.nodes.push(Node::Leaf(normalize(hist)));
            return id;
        };
        let col = &self.data.columns[split.feature];
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| col[i] <= split.threshold);
        self.nodes.push(Node::Leaf(Vec::new()));
        let left = self.build(l, depth + 1, rng, feature_order);
        let right = self.build(r, depth + 1, rng, feature_order);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

fn normalize(mut h: Vec<f64>) -> Vec<f64> {
    let s: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= s);
    h
}

fn grow_tree(data: &TrainData, cfg: &ForestConfig, mtry: usize, tree_index: usize) -> DecisionTree {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(tree_index as u64);
    let n = data.n_rows();
    let rows: Vec<usize> = if cfg.bootstrap {
        let mut r: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        r.sort_unstable();
        r
    } else {
        (0..n).collect()
    };
    let mut b = Builder {
        data,
        max_depth: cfg.max_depth.unwrap_or(usize::MAX),
        min_leaf: cfg.min_samples_leaf.max(1),
        mtry,
        nodes: Vec::new(),
    };
    let mut order: Vec<usize> = (0..data.n_features()).collect();
    b.build(rows, 0, &mut rng, &mut order);
    DecisionTree { nodes: b.nodes }
}

/// Train a random forest; deterministic under `cfg.seed` regardless of the
/// number of worker threads.
pub fn train_random_forest(data: &TrainData, cfg: &ForestConfig) -> Result<ForestModel, ModelError> {
    data.validate()?;
    if cfg.n_trees == 0 {
        return Err(ModelError::InvalidConfig("n_trees must be positive".into()));
    }
    let p = data.n_features();
    let mtry = match cfg.feature_subsample {
        Some(f) if f > 0.0 && f <= 1.0 => (f * p as f64).ceil() as usize,
        Some(f) => return Err(ModelError::InvalidConfig(format!("feature_subsample {f} not in (0, 1]"))),
        None => (2.0 * p as f64).sqrt().round() as usize,
    }
    .clamp(1, p);
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(data, cfg, mtry, t))
        .collect();
    Ok(ForestModel {
        classes: data.classes.clone(),
        features: data.features.clone(),
        trees,
        config: cfg.clone(),
    })
}
