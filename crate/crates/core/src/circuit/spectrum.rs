use num_complex::Complex;

use super::CircuitError;
use crate::scalar::Scalar;

/// Impedance values over a strictly increasing frequency grid (Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T = f64> {
    freq: Vec<T>,
    z: Vec<Complex<T>>,
    pub label: Option<String>,
    pub id: String,
}

impl<T: Scalar> Spectrum<T> {
    /// Validates equal lengths, at least one point, positive and strictly
    /// increasing frequencies.
    pub fn new(freq: Vec<T>, z: Vec<Complex<T>>) -> Result<Self, CircuitError> {
        if freq.len() != z.len() {
            return Err(CircuitError::LengthMismatch {
                expected: freq.len(),
                actual: z.len(),
            });
        }
        if freq.is_empty() {
            return Err(CircuitError::InvalidSpectrum("no points".into()));
        }
        if freq.iter().any(|f| !(*f > T::zero()) || !f.is_finite()) {
            return Err(CircuitError::InvalidSpectrum(
                "frequencies must be positive and finite".into(),
            ));
        }
        if freq.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CircuitError::InvalidSpectrum(
                "frequencies must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            freq,
            z,
            label: None,
            id: String::new(),
        })
    }

    /// Keeps the points whose index satisfies `keep`; may leave zero points.
    pub(crate) fn retain_points(&self, mut keep: impl FnMut(&Complex<T>) -> bool) -> Self {
        let (freq, z) = self
            .freq
            .iter()
            .zip(&self.z)
            .filter(|(_, z)| keep(z))
            .map(|(f, z)| (*f, *z))
            .unzip();
        Self {
            freq,
            z,
            label: self.label.clone(),
            id: self.id.clone(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn freq(&self) -> &[T] {
        &self.freq
    }

    pub fn z(&self) -> &[Complex<T>] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }

    pub fn real(&self) -> Vec<T> {
        self.z.iter().map(|z| z.re).collect()
    }

    pub fn imag(&self) -> Vec<T> {
        self.z.iter().map(|z| z.im).collect()
    }

    /// Multiply every impedance by `k`.
    pub fn scaled(&self, k: T) -> Self {
        Self {
            freq: self.freq.clone(),
            z: self.z.iter().map(|z| *z * k).collect(),
            label: self.label.clone(),
            id: self.id.clone(),
        }
    }
}
