use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use super::PreprocessError;
use crate::circuit::Spectrum;
use crate::dataset::Dataset;
use crate::scalar::Scalar;

/// Log-spaced target grid shared by every interpolated spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonGrid<T = f64> {
    freq: Arc<[T]>,
}

impl<T: Scalar> CommonGrid<T> {
    pub fn new(points: usize, fmin: T, fmax: T) -> Self {
        assert!(points >= 2 && fmin > T::zero() && fmax > fmin, "invalid grid");
        let (a, b) = (fmin.log10(), fmax.log10());
        let step = (b - a) / T::from_usize_lossy(points - 1);
        let ten = T::lit(10.0);
        let freq: Vec<T> = (0..points)
            .map(|k| match k {
                0 => fmin,
                k if k == points - 1 => fmax,
                k => ten.powf(a + step * T::from_usize_lossy(k)),
            })
            .collect();
        Self { freq: freq.into() }
    }

    pub fn freq(&self) -> &[T] {
        &self.freq
    }

    pub fn len(&self) -> usize {
        self.freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }
}

impl<T: Scalar> Default for CommonGrid<T> {
    /// 30 points from 10 Hz to 100 kHz.
    fn default() -> Self {
        Self::new(30, T::lit(1e1), T::lit(1e5))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpolated<T = f64> {
    pub spectrum: Spectrum<T>,
    /// Set when the source did not span the grid and end values were held.
    pub extrapolated: bool,
}

/// Resample onto `grid`, linear in `log10(f)` for real and imaginary parts
/// separately. Outside the source range the end values are held.
pub fn interpolate<T: Scalar>(s: &Spectrum<T>, grid: &CommonGrid<T>) -> Result<Interpolated<T>, PreprocessError> {
    if s.len() < 2 {
        return Err(PreprocessError::TooFewPoints {
            id: s.id.clone(),
            n: s.len(),
        });
    }
    let src_f = s.freq();
    let src_x: Vec<T> = src_f.iter().map(|f| f.log10()).collect();
    let z = s.z();
    let n = src_f.len();
    let mut extrapolated = false;
    let out: Vec<Complex<T>> = grid
        .freq()
        .iter()
        .map(|&f| {
            if f < src_f[0] {
                extrapolated = true;
                return z[0];
            }
            if f > src_f[n - 1] {
                extrapolated = true;
                return z[n - 1];
            }
            // last source index with src_f[i] <= f
            let i = src_f.partition_point(|&x| x <= f) - 1;
            if i == n - 1 || src_f[i] == f {
                return z[i];
            }
            let x = f.log10();
            let w = (x - src_x[i]) / (src_x[i + 1] - src_x[i]);
            Complex::new(
                z[i].re + (z[i + 1].re - z[i].re) * w,
                z[i].im + (z[i + 1].im - z[i].im) * w,
            )
        })
        .collect();
    let mut spectrum = Spectrum::new(grid.freq().to_vec(), out).expect("grid is valid");
    spectrum.label = s.label.clone();
    spectrum.id = s.id.clone();
    Ok(Interpolated { spectrum, extrapolated })
}

pub fn interpolate_dataset(d: &Dataset, grid: &CommonGrid<f64>) -> Result<Vec<Interpolated<f64>>, PreprocessError> {
    d.spectra.par_iter().map(|s| interpolate(s, grid)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::log_space;

    #[test]
    fn default_grid() {
        let g = CommonGrid::<f64>::default();
        assert_eq!(g.len(), 30);
        assert_eq!(g.freq()[0], 10.0);
        assert_eq!(g.freq()[29], 1e5);
    }

    #[test]
    fn identity_on_grid() {
        let g = CommonGrid::<f64>::default();
        let z: Vec<_> = (0..30).map(|i| Complex::new(i as f64 * 1.5, -(i as f64).sqrt())).collect();
        let s = Spectrum::new(g.freq().to_vec(), z.clone()).unwrap();
        let out = interpolate(&s, &g).unwrap();
        assert!(!out.extrapolated);
        for (a, b) in out.spectrum.z().iter().zip(&z) {
            assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn linear_in_log_frequency_is_exact() {
        let g = CommonGrid::<f64>::default();
        let f = log_space(1.0, 1e6, 17);
        let z: Vec<_> = f.iter().map(|f| Complex::new(3.0 + 2.0 * f.log10(), -5.0 * f.log10())).collect();
        let out = interpolate(&Spectrum::new(f, z).unwrap(), &g).unwrap();
        for (f, z) in g.freq().iter().zip(out.spectrum.z()) {
            assert!((z.re - (3.0 + 2.0 * f.log10())).abs() < 1e-9);
            assert!((z.im + 5.0 * f.log10()).abs() < 1e-9);
        }
    }

    #[test]
    fn partial_coverage_holds_ends() {
        let g = CommonGrid::<f64>::default();
        let f = log_space(1e2, 1e4, 10);
        let z: Vec<_> = (0..10).map(|i| Complex::new(i as f64, -1.0)).collect();
        let out = interpolate(&Spectrum::new(f, z).unwrap(), &g).unwrap();
        assert!(out.extrapolated);
        assert_eq!(out.spectrum.z()[0].re, 0.0);
        assert_eq!(out.spectrum.z()[29].re, 9.0);
    }

    #[test]
    fn too_few_points() {
        let s = Spectrum::new(vec![10.0], vec![Complex::new(1.0, -1.0)]).unwrap();
        assert!(matches!(
            interpolate(&s, &CommonGrid::default()),
            Err(PreprocessError::TooFewPoints { n: 1, .. })
        ));
    }
}
