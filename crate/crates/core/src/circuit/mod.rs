//! Circuit topology and impedance evaluation.
//!
//! A circuit is a series chain of nodes; each node is a single element or a
//! parallel pair of two single elements. Labels use `-` for series
//! connections and juxtaposition for a parallel pair (`RC`, `RCPE`).

mod element;
mod parse;
mod spectrum;

pub use element::{element_impedance, ElementKind, ParamKind};
pub use parse::{parse_circuit, CircuitModel, CircuitNode, NAMED_CIRCUITS};
pub use spectrum::Spectrum;

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("empty circuit label")]
    EmptyLabel,
    #[error("unknown circuit token `{0}`")]
    UnknownToken(String),
    #[error("{kind} impedance is singular at omega = 0")]
    DomainError { kind: ElementKind },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
}

/// Impedance of the whole circuit at one angular frequency (rad/s).
pub fn impedance_at<T: Scalar>(
    model: &CircuitModel,
    params: &[T],
    omega: T,
) -> Result<Complex<T>, CircuitError> {
    if params.len() != model.param_count() {
        return Err(CircuitError::LengthMismatch {
            expected: model.param_count(),
            actual: params.len(),
        });
    }
    let mut total = Complex::new(T::zero(), T::zero());
    let mut offset = 0;
    for node in model.nodes() {
        match *node {
            CircuitNode::Single(kind) => {
                let n = kind.param_count();
                total = total + element_impedance(kind, &params[offset..offset + n], omega)?;
                offset += n;
            }
            CircuitNode::Parallel(a, b) => {
                let na = a.param_count();
                let nb = b.param_count();
                let za = element_impedance(a, &params[offset..offset + na], omega)?;
                let zb = element_impedance(b, &params[offset + na..offset + na + nb], omega)?;
                total = total + parallel(za, zb);
                offset += na + nb;
            }
        }
    }
    Ok(total)
}

#[inline]
fn parallel<T: Scalar>(za: Complex<T>, zb: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    one / (one / za + one / zb)
}

/// Evaluate a circuit over a frequency grid in Hz (`omega = 2 pi f`).
pub fn circuit_impedance<T: Scalar>(
    model: &CircuitModel,
    params: &[T],
    freq: &[T],
) -> Result<Spectrum<T>, CircuitError> {
    let z = impedance_values(model, params, freq)?;
    Spectrum::new(freq.to_vec(), z)
}

/// Same as [`circuit_impedance`] without building a [`Spectrum`].
pub fn impedance_values<T: Scalar>(
    model: &CircuitModel,
    params: &[T],
    freq: &[T],
) -> Result<Vec<Complex<T>>, CircuitError> {
    let two_pi = T::PI() + T::PI();
    freq.iter()
        .map(|&f| impedance_at(model, params, two_pi * f))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn series_resistors_add() {
        let m = parse_circuit("R-R").unwrap();
        let s = circuit_impedance(&m, &[1.0, 2.0], &[1.0, 10.0, 1e4]).unwrap();
        for z in s.z() {
            assert_eq!(*z, Complex::new(3.0, 0.0));
        }
    }

    #[test]
    fn rc_at_corner_frequency() {
        let m = parse_circuit("RC").unwrap();
        let (r, c) = (100.0, 1e-6);
        let omega = 1.0 / (r * c);
        let z = impedance_at(&m, &[r, c], omega).unwrap();
        // R (1 - j) / 2
        assert_relative_eq!(z.re, r / 2.0, max_relative = 1e-12);
        assert_relative_eq!(z.im, -r / 2.0, max_relative = 1e-12);
        assert_relative_eq!(z.norm(), r / 2f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn param_length_checked() {
        let m = parse_circuit("L-R-RCPE").unwrap();
        let err = circuit_impedance(&m, &[1.0, 2.0], &[1.0]).unwrap_err();
        assert_eq!(err, CircuitError::LengthMismatch { expected: 5, actual: 2 });
    }

    #[test]
    fn capacitor_at_dc_is_domain_error() {
        let m = parse_circuit("R-C").unwrap();
        let err = impedance_at(&m, &[1.0, 1e-3], 0.0).unwrap_err();
        assert!(matches!(err, CircuitError::DomainError { kind: ElementKind::C }));
    }

    #[test]
    fn parallel_identical_elements_halve() {
        let m = parse_circuit("RCPE").unwrap();
        let single = parse_circuit("R").unwrap();
        for &f in &[0.1, 10.0, 1e5] {
            let w = 2.0 * std::f64::consts::PI * f;
            let z = impedance_at(&m, &[10.0, 1.0, 0.1], w).unwrap();
            let zr = impedance_at(&single, &[10.0], w).unwrap();
            let zc = element_impedance(ElementKind::Cpe, &[1.0, 0.1], w).unwrap();
            let expect = zr * zc / (zr + zc);
            assert_relative_eq!(z.re, expect.re, max_relative = 1e-12);
            assert_relative_eq!(z.im, expect.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let m = parse_circuit("R-RC").unwrap();
        let s = circuit_impedance::<f32>(&m, &[5.0, 10.0, 1e-3], &[1.0, 10.0, 100.0]).unwrap();
        assert!(s.z().iter().all(|z| z.re > 5.0 && z.im < 0.0));
    }
}
