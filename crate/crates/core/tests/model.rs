use ecmkit::model::{
    permutation_importance, stratified_split, train_gbt, train_random_forest, Classifier, ForestConfig, GbtConfig,
    Model, ModelError, TrainData,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr_free::normal;

/// Box-Muller normal draws, enough for synthetic clusters.
mod rand_distr_free {
    use rand::Rng;

    pub fn normal<R: Rng>(rng: &mut R, mean: f64, sd: f64) -> f64 {
        let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.random();
        mean + sd * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

fn names(p: usize) -> Vec<String> {
    (0..p).map(|i| format!("f{i}")).collect()
}

/// Three Gaussian clusters in `p` dimensions, centres 4 sd apart.
fn gaussian_blobs(n_per_class: usize, p: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..3 {
        for _ in 0..n_per_class {
            rows.push((0..p).map(|j| normal(&mut rng, if j % 3 == c { 4.0 } else { 0.0 }, 1.0)).collect());
            labels.push(format!("class{c}"));
        }
    }
    (rows, labels)
}

fn accuracy<C: Classifier + ?Sized>(m: &C, rows: &[Vec<f64>], labels: &[String]) -> f64 {
    let pred = m.predict(rows).unwrap();
    pred.iter()
        .zip(labels)
        .filter(|(p, l)| &m.classes()[**p] == *l)
        .count() as f64
        / labels.len() as f64
}

fn small_forest(n_trees: usize) -> ForestConfig {
    ForestConfig {
        n_trees,
        seed: 3,
        ..ForestConfig::default()
    }
}

fn small_gbt(n_rounds: usize) -> GbtConfig {
    GbtConfig {
        n_rounds,
        max_depth: 3,
        seed: 3,
        ..GbtConfig::default()
    }
}

#[test]
fn both_models_separate_gaussian_clusters() {
    let (train, ytr) = gaussian_blobs(60, 4, 1);
    let (test, yte) = gaussian_blobs(40, 4, 2);
    let data = TrainData::new(names(4), &train, &ytr).unwrap();
    let rf = train_random_forest(&data, &small_forest(50)).unwrap();
    let gbt = train_gbt(&data, &small_gbt(30)).unwrap();
    assert!(accuracy(&rf, &test, &yte) >= 0.9);
    assert!(accuracy(&gbt, &test, &yte) >= 0.9);
}

#[test]
fn separable_one_dimensional_data() {
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
    let labels: Vec<&str> = (0..20).map(|i| if i < 10 { "a" } else { "b" }).collect();
    let data = TrainData::new(names(1), &rows, &labels).unwrap();
    let rf = train_random_forest(&data, &small_forest(10)).unwrap();
    let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    assert_eq!(accuracy(&rf, &rows, &labels), 1.0);

    let cfg = GbtConfig {
        n_rounds: 1,
        max_depth: 1,
        learning_rate: 1.0,
        row_subsample: 1.0,
        ..GbtConfig::default()
    };
    let gbt = train_gbt(&data, &cfg).unwrap();
    assert_eq!(accuracy(&gbt, &rows, &labels), 1.0);
}

#[test]
fn probabilities_sum_to_one_and_argmax_predicts() {
    let (rows, labels) = gaussian_blobs(30, 3, 5);
    let data = TrainData::new(names(3), &rows, &labels).unwrap();
    let models = [
        Model::Forest(train_random_forest(&data, &small_forest(20)).unwrap()),
        Model::Gbt(train_gbt(&data, &small_gbt(10)).unwrap()),
    ];
    for m in &models {
        let proba = m.predict_proba(&rows).unwrap();
        let pred = m.predict(&rows).unwrap();
        for (p, k) in proba.iter().zip(&pred) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let best = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(p[*k], best);
        }
    }
}

#[test]
fn single_tree_forest_returns_leaf_histogram() {
    let (rows, labels) = gaussian_blobs(20, 2, 9);
    let data = TrainData::new(names(2), &rows, &labels).unwrap();
    let cfg = ForestConfig {
        n_trees: 1,
        max_depth: Some(2),
        ..small_forest(1)
    };
    let rf = train_random_forest(&data, &cfg).unwrap();
    for r in &rows {
        assert_eq!(rf.proba_row(r), rf.trees[0].leaf(r).to_vec());
    }
}

#[test]
fn forest_prediction_ignores_tree_order() {
    let (rows, labels) = gaussian_blobs(30, 3, 4);
    let data = TrainData::new(names(3), &rows, &labels).unwrap();
    let rf = train_random_forest(&data, &small_forest(15)).unwrap();
    let mut reversed = rf.clone();
    reversed.trees.reverse();
    let (test, _) = gaussian_blobs(10, 3, 8);
    for r in &test {
        let a = rf.proba_row(r);
        let b = reversed.proba_row(r);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(rf.predict_row(r), reversed.predict_row(r));
    }
}

#[test]
fn zero_learning_rate_predicts_base_scores() {
    let (rows, labels) = gaussian_blobs(25, 3, 6);
    let data = TrainData::new(names(3), &rows, &labels).unwrap();
    let cfg = GbtConfig {
        learning_rate: 0.0,
        ..small_gbt(5)
    };
    let gbt = train_gbt(&data, &cfg);
    // a zero learning rate is either rejected up front or yields base scores
    if let Ok(gbt) = gbt {
        for r in &rows {
            assert_eq!(gbt.raw_scores(r), gbt.base_scores);
        }
    }
}

#[test]
fn training_loss_never_increases() {
    let (rows, labels) = gaussian_blobs(40, 5, 12);
    let data = TrainData::new(names(5), &rows, &labels).unwrap();
    let cfg = GbtConfig {
        row_subsample: 1.0,
        ..small_gbt(25)
    };
    let gbt = train_gbt(&data, &cfg).unwrap();
    assert_eq!(gbt.train_loss.len(), 25);
    for w in gbt.train_loss.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn same_seed_same_model() {
    let (rows, labels) = gaussian_blobs(30, 3, 13);
    let data = TrainData::new(names(3), &rows, &labels).unwrap();
    assert_eq!(
        train_random_forest(&data, &small_forest(10)).unwrap(),
        train_random_forest(&data, &small_forest(10)).unwrap()
    );
    assert_eq!(train_gbt(&data, &small_gbt(8)).unwrap(), train_gbt(&data, &small_gbt(8)).unwrap());
}

fn monotone(x: f64) -> f64 {
    x.exp() * 3.0 - 7.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn predictions_invariant_under_monotone_feature_transform(seed in 0u64..1000) {
        let (rows, labels) = gaussian_blobs(15, 2, seed);
        let (test, _) = gaussian_blobs(8, 2, seed + 1);
        let warp = |rs: &[Vec<f64>]| -> Vec<Vec<f64>> {
            rs.iter().map(|r| vec![monotone(r[0]), r[1]]).collect()
        };
        let a = TrainData::new(names(2), &rows, &labels).unwrap();
        let b = TrainData::new(names(2), &warp(&rows), &labels).unwrap();

        let rf_a = train_random_forest(&a, &small_forest(5)).unwrap();
        let rf_b = train_random_forest(&b, &small_forest(5)).unwrap();
        prop_assert_eq!(rf_a.predict_proba(&test).unwrap(), rf_b.predict_proba(&warp(&test)).unwrap());

        let g_a = train_gbt(&a, &small_gbt(4)).unwrap();
        let g_b = train_gbt(&b, &small_gbt(4)).unwrap();
        prop_assert_eq!(g_a.predict(&test).unwrap(), g_b.predict(&warp(&test)).unwrap());
    }
}

#[test]
fn importance_ranks_label_feature_first_and_unused_feature_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 120;
    let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let rows: Vec<Vec<f64>> = y
        .iter()
        .map(|&c| vec![rng.random::<f64>(), c as f64, rng.random::<f64>()])
        .collect();
    let labels: Vec<String> = y.iter().map(|c| format!("c{c}")).collect();
    let data = TrainData::new(names(3), &rows, &labels).unwrap();
    // a single stump can only use the label column
    let cfg = GbtConfig {
        n_rounds: 1,
        max_depth: 1,
        row_subsample: 1.0,
        ..GbtConfig::default()
    };
    let gbt = train_gbt(&data, &cfg).unwrap();
    let imp = permutation_importance(&gbt, &rows, &y, 5, 4);
    assert!(imp[1] > 0.3);
    assert_eq!(imp[0], 0.0);
    assert_eq!(imp[2], 0.0);
    assert_eq!(imp, permutation_importance(&gbt, &rows, &y, 5, 4));

    let rf = train_random_forest(&data, &small_forest(30)).unwrap();
    let imp = permutation_importance(&rf, &rows, &y, 5, 4);
    assert!(imp[1] > imp[0] && imp[1] > imp[2]);
}

#[test]
fn model_file_round_trip() {
    let (rows, labels) = gaussian_blobs(20, 3, 30);
    let data = TrainData::new(names(3), &rows, &labels).unwrap();
    for m in [
        Model::Forest(train_random_forest(&data, &small_forest(5)).unwrap()),
        Model::Gbt(train_gbt(&data, &small_gbt(5)).unwrap()),
    ] {
        let json = m.to_json();
        let back = Model::from_json(&json).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), json);
    }
}

#[test]
fn malformed_model_files_rejected() {
    assert!(matches!(Model::from_json("{}"), Err(ModelError::Format(_))));
    let (rows, labels) = gaussian_blobs(10, 2, 31);
    let data = TrainData::new(names(2), &rows, &labels).unwrap();
    let json = Model::Gbt(train_gbt(&data, &small_gbt(2)).unwrap()).to_json();
    let wrong_version = json.replace("\"version\":1", "\"version\":99");
    assert!(matches!(Model::from_json(&wrong_version), Err(ModelError::Format(_))));
}

#[test]
fn degenerate_training_data_rejected() {
    let rows = vec![vec![1.0], vec![2.0]];
    let data = TrainData::new(names(1), &rows, &["a", "a"]).unwrap();
    assert!(matches!(
        train_random_forest(&data, &small_forest(3)),
        Err(ModelError::DegenerateLabels(1))
    ));
    assert!(TrainData::new(names(2), &rows, &["a", "b"]).is_err());
}

#[test]
fn stratified_split_keeps_every_row_once() {
    let labels: Vec<String> = (0..103).map(|i| format!("c{}", i % 4)).collect();
    let (train, test) = stratified_split(&labels, 0.2, 9);
    let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
    all.sort();
    assert_eq!(all, (0..103).collect::<Vec<_>>());
    assert_eq!(stratified_split(&labels, 0.2, 9), (train, test));
}
