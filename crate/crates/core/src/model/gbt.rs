//! Multiclass gradient boosting with second-order leaf weights and exact
//! greedy split search over presorted columns.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, Node};
use super::{Classifier, ModelError, TrainData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtConfig {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum loss reduction for a split.
    pub gamma: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
    pub row_subsample: f64,
    pub feature_subsample: f64,
    pub seed: u64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        Self {
            n_rounds: 200,
            max_depth: 6,
            learning_rate: 0.1,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            row_subsample: 0.8,
            feature_subsample: 1.0,
            seed: 0,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.n_rounds == 0 || self.max_depth == 0 {
            return bad("n_rounds and max_depth must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in [0, 1]");
        }
        if !(self.row_subsample > 0.0 && self.row_subsample <= 1.0)
            || !(self.feature_subsample > 0.0 && self.feature_subsample <= 1.0)
        {
            return bad("subsample rates must lie in (0, 1]");
        }
        if !(self.lambda >= 0.0 && self.gamma >= 0.0 && self.min_child_weight >= 0.0) {
            return bad("lambda, gamma and min_child_weight must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub classes: Vec<String>,
    pub features: Vec<String>,
    pub base_scores: Vec<f64>,
    /// `rounds[r][k]`: tree of round `r` for class `k`. Leaves hold the raw
    /// weight, scaled by the learning rate at prediction.
    pub rounds: Vec<Vec<DecisionTree>>,
    /// Training log-loss after each round.
    pub train_loss: Vec<f64>,
    pub config: GbtConfig,
}

impl GbtModel {
    pub fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.base_scores.clone();
        let lr = self.config.learning_rate;
        for round in &self.rounds {
            for (k, t) in round.iter().enumerate() {
                s[k] += lr * t.leaf(x)[0];
            }
        }
        s
    }
}

impl Classifier for GbtModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn features(&self) -> &[String] {
        &self.features
    }

    fn proba_row(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.raw_scores(x))
    }
}

fn softmax(s: &[f64]) -> Vec<f64> {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = s.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

struct Presorted {
    /// `(value, row)` pairs of each column in increasing value order.
    order: Vec<Vec<(f64, u32)>>,
}

impl Presorted {
    fn new(data: &TrainData) -> Self {
        let order = data
            .columns
            .iter()
            .map(|col| {
                let mut idx: Vec<(f64, u32)> = col.iter().enumerate().map(|(i, v)| (*v, i as u32)).collect();
                idx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                idx
            })
            .collect();
        Self { order }
    }
}

/// Gradient statistics and current level slot of one row.
#[derive(Clone, Copy)]
struct RowState {
    g: f64,
    h: f64,
    slot: u32,
}

#[derive(Clone, Copy)]
struct SplitChoice {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn better(a: &SplitChoice, b: &Option<SplitChoice>) -> bool {
    match b {
        None => true,
        Some(b) => {
            a.gain > b.gain
                || (a.gain == b.gain && (a.feature < b.feature || (a.feature == b.feature && a.threshold < b.threshold)))
        }
    }
}

struct TreeParams<'a> {
    data: &'a TrainData,
    sorted: &'a Presorted,
    features: &'a [usize],
    max_depth: usize,
    lambda: f64,
    gamma: f64,
    min_child_weight: f64,
}

const INACTIVE: u32 = u32::MAX;

/// Grow one regression tree level by level. `in_sample[i]` marks the rows
/// used this round.
fn grow(tp: &TreeParams<'_>, g: &[f64], h: &[f64], in_sample: &[bool]) -> DecisionTree {
    let n = g.len();
    let lambda = tp.lambda;
    let score = |gs: f64, hs: f64| gs * gs / (hs + lambda);
    // node_of[i]: slot in the current level, or INACTIVE
    let mut rows: Vec<RowState> = (0..n)
        .map(|i| RowState {
            g: g[i],
            h: h[i],
            slot: if in_sample[i] { 0 } else { INACTIVE },
        })
        .collect();
    let (g0, h0) = (0..n)
        .filter(|&i| in_sample[i])
        .fold((0.0, 0.0), |(a, b), i| (a + g[i], b + h[i]));
    let mut nodes: Vec<Node> = vec![Node::Leaf(vec![0.0])];
    // level slots: (node id, G, H)
    let mut level: Vec<(usize, f64, f64)> = vec![(0, g0, h0)];
    for depth in 0..=tp.max_depth {
        if level.is_empty() {
            break;
        }
        // nodes too light to produce two valid children stop here
        let open: Vec<bool> = level
            .iter()
            .map(|&(_, _, hs)| depth < tp.max_depth && hs >= 2.0 * tp.min_child_weight)
            .collect();
        for row in rows.iter_mut() {
            if row.slot != INACTIVE && !open[row.slot as usize] {
                row.slot = INACTIVE;
            }
        }
        let best: Vec<Option<SplitChoice>> = if !open.iter().any(|o| *o) {
            vec![None; level.len()]
        } else {
            let per_feature: Vec<Vec<Option<SplitChoice>>> = tp
                .features
                .par_iter()
                .map(|&f| {
                    let m = level.len();
                    let mut gl = vec![0.0; m];
                    let mut hl = vec![0.0; m];
                    let mut last = vec![f64::NAN; m];
                    let mut best: Vec<Option<SplitChoice>> = vec![None; m];
                    for &(v, i) in &tp.sorted.order[f] {
                        let row = rows[i as usize];
                        if row.slot == INACTIVE {
                            continue;
                        }
                        let s = row.slot as usize;
                        if !last[s].is_nan() && v > last[s] {
                            let (_, gt, ht) = level[s];
                            let (gr, hr) = (gt - gl[s], ht - hl[s]);
                            if hl[s] >= tp.min_child_weight && hr >= tp.min_child_weight {
                                let gain = 0.5 * (score(gl[s], hl[s]) + score(gr, hr) - score(gt, ht)) - tp.gamma;
                                let c = SplitChoice {
                                    gain,
                                    feature: f,
                                    threshold: last[s],
                                };
                                if gain > 0.0 && better(&c, &best[s]) {
                                    best[s] = Some(c);
                                }
                            }
                        }
                        gl[s] += row.g;
                        hl[s] += row.h;
                        last[s] = v;
                    }
                    best
                })
                .collect();
            (0..level.len())
                .map(|s| {
                    let mut b: Option<SplitChoice> = None;
                    for pf in &per_feature {
                        if let Some(c) = pf[s] {
                            if better(&c, &b) {
                                b = Some(c);
                            }
                        }
                    }
                    b
                })
                .collect()
        };

        // child slot ids for the next level
        let mut next: Vec<(usize, f64, f64)> = Vec::new();
        let mut child_slot: Vec<Option<(u32, u32)>> = vec![None; level.len()];
        for (s, &(id, gs, hs)) in level.iter().enumerate() {
            match best[s] {
                Some(c) => {
                    let left = nodes.len();
                    nodes.push(Node::Leaf(vec![0.0]));
                    nodes.push(Node::Leaf(vec![0.0]));
                    nodes[id] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right: left + 1,
                    };
                    child_slot[s] = Some((next.len() as u32, next.len() as u32 + 1));
                    next.push((left, 0.0, 0.0));
                    next.push((left + 1, 0.0, 0.0));
                }
                None => nodes[id] = Node::Leaf(vec![-gs / (hs + lambda)]),
            }
        }
        for (i, row) in rows.iter_mut().enumerate() {
            let s = row.slot;
            if s == INACTIVE {
                continue;
            }
            row.slot = match (child_slot[s as usize], best[s as usize]) {
                (Some((l, r)), Some(c)) => {
                    let to = if tp.data.columns[c.feature][i] <= c.threshold { l } else { r };
                    next[to as usize].1 += row.g;
                    next[to as usize].2 += row.h;
                    to
                }
                _ => INACTIVE,
            };
        }
        level = next;
    }
    DecisionTree { nodes }
}

fn log_loss(scores: &[Vec<f64>], y: &[usize]) -> f64 {
    let n = y.len() as f64;
    scores
        .iter()
        .zip(y)
        .map(|(s, &c)| {
            let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            lse - s[c]
        })
        .sum::<f64>()
        / n
}

/// Train a softmax gradient-boosted ensemble. Deterministic under
/// `cfg.seed`; round `r` draws its row and feature subsamples from stream
/// `r`.
pub fn train_gbt(data: &TrainData, cfg: &GbtConfig) -> Result<GbtModel, ModelError> {
    data.validate()?;
    cfg.validate()?;
    let n = data.n_rows();
    let k = data.n_classes;
    let p = data.n_features();
    let sorted = Presorted::new(data);

    let mut counts = vec![0.0f64; k];
    for &c in &data.y {
        counts[c] += 1.0;
    }
    // log priors; absent classes get a small floor so the softmax stays finite
    let base_scores: Vec<f64> = counts.iter().map(|c| (c.max(0.5) / n as f64).ln()).collect();
    let mut scores: Vec<Vec<f64>> = vec![base_scores.clone(); n];
    let mut rounds = Vec::with_capacity(cfg.n_rounds);
    let mut train_loss = Vec::with_capacity(cfg.n_rounds);
    let n_feat = ((cfg.feature_subsample * p as f64).ceil() as usize).clamp(1, p);

    for r in 0..cfg.n_rounds {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64);
        let in_sample: Vec<bool> = if cfg.row_subsample < 1.0 {
            (0..n).map(|_| rng.random::<f64>() < cfg.row_subsample).collect()
        } else {
            vec![true; n]
        };
        let feature_sets: Vec<Vec<usize>> = (0..k)
            .map(|_| {
                let mut f: Vec<usize> = (0..p).collect();
                if n_feat < p {
                    f.shuffle(&mut rng);
                    f.truncate(n_feat);
                    f.sort_unstable();
                }
                f
            })
            .collect();
        let probs: Vec<Vec<f64>> = scores.iter().map(|s| softmax(s)).collect();
        let trees: Vec<DecisionTree> = (0..k)
            .into_par_iter()
            .map(|c| {
                let g: Vec<f64> = (0..n)
                    .map(|i| probs[i][c] - if data.y[i] == c { 1.0 } else { 0.0 })
                    .collect();
                let h: Vec<f64> = (0..n).map(|i| (probs[i][c] * (1.0 - probs[i][c])).max(1e-16)).collect();
                let tp = TreeParams {
                    data,
                    sorted: &sorted,
                    features: &feature_sets[c],
                    max_depth: cfg.max_depth,
                    lambda: cfg.lambda,
                    gamma: cfg.gamma,
                    min_child_weight: cfg.min_child_weight,
                };
                grow(&tp, &g, &h, &in_sample)
            })
            .collect();
        let mut row = vec![0.0; p];
        for (i, s) in scores.iter_mut().enumerate() {
            for (f, v) in row.iter_mut().enumerate() {
                *v = data.columns[f][i];
            }
            for (c, t) in trees.iter().enumerate() {
                s[c] += cfg.learning_rate * t.leaf(&row)[0];
            }
        }
        train_loss.push(log_loss(&scores, &data.y));
        rounds.push(trees);
    }
    Ok(GbtModel {
        classes: data.classes.clone(),
        features: data.features.clone(),
        base_scores,
        rounds,
        train_loss,
        config: cfg.clone(),
    })
}
