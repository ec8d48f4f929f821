use super::{FeatureMatrix, PreprocessError};
use crate::circuit::Spectrum;
use crate::scalar::Scalar;

/// Divide each row (real then imaginary block) by its largest real entry.
pub fn normalize_max_real(m: &FeatureMatrix) -> Result<FeatureMatrix, PreprocessError> {
    if !m.n_cols().is_multiple_of(2) {
        return Err(PreprocessError::ShapeMismatch(format!(
            "expected 2p columns, got {}",
            m.n_cols()
        )));
    }
    let p = m.n_cols() / 2;
    let rows = m
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let max_re = r[..p].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(max_re > 0.0) {
                return Err(PreprocessError::NonPositiveMaxReal { row: i });
            }
            Ok(r.iter().map(|v| v / max_re).collect())
        })
        .collect::<Result<Vec<Vec<f64>>, _>>()?;
    Ok(FeatureMatrix { rows, ..m.clone() })
}

/// Per-axis min-max scaled impedances.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxNormalized<T = f64> {
    pub re: Vec<T>,
    pub im: Vec<T>,
    /// The axis had `max == min`; its values were mapped to 0.
    pub degenerate_re: bool,
    pub degenerate_im: bool,
}

fn minmax<T: Scalar>(v: &[T]) -> (Vec<T>, bool) {
    let lo = v.iter().copied().fold(T::infinity(), T::min);
    let hi = v.iter().copied().fold(T::neg_infinity(), T::max);
    let span = hi - lo;
    if !(span > T::zero()) {
        return (vec![T::zero(); v.len()], true);
    }
    (v.iter().map(|x| ((*x - lo) / span).max(T::zero()).min(T::one())).collect(), false)
}

/// Scale real and imaginary parts independently onto `[0, 1]`.
pub fn normalize_minmax<T: Scalar>(s: &Spectrum<T>) -> MinMaxNormalized<T> {
    let (re, degenerate_re) = minmax(&s.real());
    let (im, degenerate_im) = minmax(&s.imag());
    MinMaxNormalized {
        re,
        im,
        degenerate_re,
        degenerate_im,
    }
}
