use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Classifier;
use crate::metrics::weighted_f1;

/// Mean drop in weighted F1 when each feature column is shuffled, over
/// `repeats` shuffles. Feature `f` draws its permutations from stream `f`
/// of a generator seeded with `seed`.
pub fn permutation_importance<C: Classifier + ?Sized>(
    model: &C,
    rows: &[Vec<f64>],
    y: &[usize],
    repeats: usize,
    seed: u64,
) -> Vec<f64> {
    let k = model.classes().len();
    let p = model.features().len();
    let predict = |rs: &[Vec<f64>]| -> Vec<usize> { rs.iter().map(|r| model.predict_row(r)).collect() };
    let base = weighted_f1(k, y, &predict(rows));
    if repeats == 0 || rows.is_empty() {
        return vec![0.0; p];
    }
    (0..p)
        .into_par_iter()
        .map(|f| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(f as u64);
            let mut shuffled: Vec<Vec<f64>> = rows.to_vec();
            let mut col: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            let mut drop = 0.0;
            for _ in 0..repeats {
                col.shuffle(&mut rng);
                for (r, v) in shuffled.iter_mut().zip(&col) {
                    r[f] = *v;
                }
                drop += base - weighted_f1(k, y, &predict(&shuffled));
            }
            drop / repeats as f64
        })
        .collect()
}
