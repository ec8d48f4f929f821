//! Small dense solvers used by the autoregressive features and the fitter.

use crate::scalar::Scalar;

/// Thin SVD of a row-major `m x n` matrix by one-sided Jacobi rotations.
/// Returns `(u, sigma, v)` with `u` as `m x n`, `v` as `n x n`, both row-major.
pub fn svd<T: Scalar>(a: &[T], m: usize, n: usize) -> (Vec<T>, Vec<T>, Vec<T>) {
    assert_eq!(a.len(), m * n);
    let mut u = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..m {
                    let (up, uq) = (u[i * n + p], u[i * n + q]);
                    alpha = alpha + up * up;
                    beta = beta + uq * uq;
                    gamma = gamma + up * uq;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (up, uq) = (u[i * n + p], u[i * n + q]);
                    u[i * n + p] = c * up - s * uq;
                    u[i * n + q] = s * up + c * uq;
                }
                for i in 0..n {
                    let (vp, vq) = (v[i * n + p], v[i * n + q]);
                    v[i * n + p] = c * vp - s * vq;
                    v[i * n + q] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma = vec![T::zero(); n];
    for j in 0..n {
        let norm = (0..m).map(|i| u[i * n + j] * u[i * n + j]).sum::<T>().sqrt();
        sigma[j] = norm;
        if norm > T::zero() {
            for i in 0..m {
                u[i * n + j] = u[i * n + j] / norm;
            }
        }
    }
    (u, sigma, v)
}

/// Minimum-norm least-squares solution of `a x = b` (`a` row-major `m x n`).
/// Singular values below `max(m, n) * eps * sigma_max` are treated as zero.
pub fn lstsq_min_norm<T: Scalar>(a: &[T], m: usize, n: usize, b: &[T]) -> Vec<T> {
    assert_eq!(b.len(), m);
    let (u, sigma, v) = svd(a, m, n);
    let smax = sigma.iter().copied().fold(T::zero(), T::max);
    let tol = T::from_usize_lossy(m.max(n)) * T::epsilon() * smax;
    let mut x = vec![T::zero(); n];
    for j in 0..n {
        if !(sigma[j] > tol) {
            continue;
        }
        let coef = (0..m).map(|i| u[i * n + j] * b[i]).sum::<T>() / sigma[j];
        for k in 0..n {
            x[k] = x[k] + coef * v[k * n + j];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_reconstructs() {
        let a = [3.0, 1.0, 2.0, 0.5, -1.0, 4.0, 2.0, 2.0, 0.0, 1.0, 1.0, 1.0];
        let (m, n) = (4, 3);
        let (u, s, v) = svd(&a, m, n);
        for i in 0..m {
            for j in 0..n {
                let r: f64 = (0..n).map(|k| u[i * n + k] * s[k] * v[j * n + k]).sum();
                assert!((r - a[i * n + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn min_norm_on_rank_deficient() {
        // two identical columns: x1 + x2 = 2 -> min norm (1, 1)
        let a = [1.0f64, 1.0, 1.0, 1.0, 1.0, 1.0];
        let x = lstsq_min_norm(&a, 3, 2, &[2.0, 2.0, 2.0]);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
