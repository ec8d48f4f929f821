//! Circuit parameter estimation by Levenberg-Marquardt.
//!
//! Magnitude parameters are optimized as `ln(x)`; exponents `t`, `p` as
//! `u` with `x = 0.01 + 0.99 * sigmoid(u)`. The residual stacks the real
//! parts of `Z_model - z` followed by the imaginary parts, each optionally
//! divided by `|z|`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{impedance_values, CircuitError, CircuitModel, CircuitNode, ElementKind, ParamKind, Spectrum};
use crate::linalg::svd;
use crate::scalar::Scalar;

pub const EXPONENT_LO: f64 = 0.01;
pub const EXPONENT_HI: f64 = 1.0;
/// Range used to clip initial guesses of magnitude parameters.
pub const MAGNITUDE_CLIP: (f64, f64) = (1e-15, 1e15);
/// Steps taking a magnitude parameter outside this range are rejected.
pub const MAGNITUDE_SEARCH: (f64, f64) = (1e-30, 1e30);
/// Largest accepted change of one transformed parameter per step (one
/// decade for magnitudes). Longer steps count as failed and raise the damping.
pub const MAX_STEP: f64 = std::f64::consts::LN_10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("spectrum has no points")]
    EmptySpectrum,
    #[error("model evaluation produced a non-finite residual")]
    NonFiniteResidual,
    #[error("initial value {value} of `{name}` is outside its bounds")]
    InitOutOfBounds { name: String, value: f64 },
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    None,
    Modulus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub tolerance: f64,
    pub initial_damping: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    pub weighting: Weighting,
    /// Central-difference step in transformed coordinates.
    pub fd_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-10,
            initial_damping: 1e-3,
            damping_up: 10.0,
            damping_down: 0.1,
            weighting: Weighting::Modulus,
            fd_step: 1e-6,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        let ok = self.max_iterations > 0
            && self.tolerance > 0.0
            && self.tolerance < 1.0
            && self.initial_damping > 0.0
            && self.damping_up > 1.0
            && self.damping_down > 0.0
            && self.damping_down < 1.0
            && self.fd_step > 0.0;
        if ok {
            Ok(())
        } else {
            Err(FitError::InvalidConfig(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    CostTolerance,
    ZeroResidual,
    MaxIterations,
    DampingOverflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T = f64> {
    pub params: Vec<T>,
    /// Weighted sum of squared residuals at `params`.
    pub cost: T,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Exponent parameters that ended within `1e-6` of a bound.
    pub bounds_active: Vec<bool>,
    /// Cost at the start and after every accepted step.
    pub cost_history: Vec<T>,
}

/// Feasible interval of a parameter role.
pub fn param_bounds(kind: ParamKind) -> (f64, f64) {
    if kind.is_exponent() {
        (EXPONENT_LO, EXPONENT_HI)
    } else {
        (0.0, f64::INFINITY)
    }
}

fn in_bounds(kind: ParamKind, v: f64) -> bool {
    if kind.is_exponent() {
        v > EXPONENT_LO && v <= EXPONENT_HI
    } else {
        v > 0.0 && v.is_finite()
    }
}

/// Clip a parameter vector into the region accepted by [`fit_params`].
pub fn clip_to_bounds<T: Scalar>(model: &CircuitModel, params: &[T]) -> Vec<T> {
    model
        .param_kinds()
        .iter()
        .zip(params)
        .map(|(k, &v)| {
            if k.is_exponent() {
                v.max(T::lit(EXPONENT_LO + 1e-6)).min(T::lit(EXPONENT_HI))
            } else if v.is_nan() {
                T::one()
            } else {
                v.max(T::lit(MAGNITUDE_CLIP.0)).min(T::lit(MAGNITUDE_CLIP.1))
            }
        })
        .collect()
}

/// Heuristic starting point from the spectrum shape.
pub fn initial_guess<T: Scalar>(model: &CircuitModel, s: &Spectrum<T>) -> Result<Vec<T>, FitError> {
    if s.is_empty() {
        return Err(FitError::EmptySpectrum);
    }
    let re = s.real();
    let im = s.imag();
    let freq = s.freq();
    let re_min = re.iter().copied().fold(T::infinity(), T::min);
    let re_max = re.iter().copied().fold(T::neg_infinity(), T::max);
    let two_pi = T::PI() + T::PI();

    // capacitive peak: maximum of -Im; fall back to the geometric mid frequency
    let peak = (0..s.len())
        .filter(|&i| im[i] < T::zero())
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if -im[b] >= -im[i] => Some(b),
            _ => Some(i),
        });
    let f_peak = match peak {
        Some(i) => freq[i],
        None => (freq[0] * freq[s.len() - 1]).sqrt(),
    };
    let tau = T::one() / (two_pi * f_peak);

    // highest-frequency inductive point
    let inductance = (0..s.len())
        .rev()
        .find(|&i| im[i] > T::zero())
        .map(|i| im[i] / (two_pi * freq[i]))
        .unwrap_or(T::lit(1e-7));

    // resistive elements that share the real extent
    let shares = model
        .nodes()
        .iter()
        .map(|n| match *n {
            CircuitNode::Parallel(a, b) => usize::from(a == ElementKind::R) + usize::from(b == ElementKind::R),
            CircuitNode::Single(ElementKind::G | ElementKind::Ws) => 1,
            CircuitNode::Single(_) => 0,
        })
        .sum::<usize>()
        .max(1);
    let extent = re_max - re_min;
    let r_share = if extent > T::zero() {
        extent / T::from_usize_lossy(shares)
    } else {
        re_max.abs().max(T::one())
    };
    let n_parallel = model
        .nodes()
        .iter()
        .filter(|n| matches!(n, CircuitNode::Parallel(..)))
        .count();

    let mut out = Vec::with_capacity(model.param_count());
    let mut parallel_idx = 0usize;
    for node in model.nodes() {
        match *node {
            CircuitNode::Single(kind) => match kind {
                ElementKind::R => out.push(re_min),
                ElementKind::L => out.push(inductance),
                ElementKind::C => out.push(tau / r_share),
                ElementKind::Cpe => {
                    let t = T::lit(0.8);
                    out.extend([t, tau.powf(t) / r_share]);
                }
                ElementKind::G => out.extend([r_share, tau]),
                ElementKind::Ws => out.extend([r_share, tau, T::lit(0.5)]),
            },
            CircuitNode::Parallel(a, b) => {
                // spread the time constants of repeated arcs a decade apart so
                // identical nodes do not start symmetric
                let offset = parallel_idx as f64 - (n_parallel as f64 - 1.0) / 2.0;
                let tau_k = tau * T::lit(10f64.powf(-offset));
                parallel_idx += 1;
                for kind in [a, b] {
                    match kind {
                        ElementKind::R => out.push(r_share),
                        ElementKind::C => out.push(tau_k / r_share),
                        ElementKind::Cpe => {
                            let t = T::lit(0.8);
                            out.extend([t, tau_k.powf(t) / r_share]);
                        }
                        ElementKind::L => out.push(inductance),
                        ElementKind::G => out.extend([r_share, tau_k]),
                        ElementKind::Ws => out.extend([r_share, tau_k, T::lit(0.5)]),
                    }
                }
            }
        }
    }
    Ok(clip_to_bounds(model, &out))
}

/// Smooth map of the real line onto `[0, 1]`. Unlike a logistic map it does
/// not saturate, so an exponent can leave a bound again.
fn unit_interval<T: Scalar>(u: T) -> T {
    let s = u.sin();
    s * s
}

fn to_param<T: Scalar>(kind: ParamKind, u: T) -> T {
    if kind.is_exponent() {
        T::lit(EXPONENT_LO) + T::lit(EXPONENT_HI - EXPONENT_LO) * unit_interval(u)
    } else {
        u.exp()
    }
}

fn to_internal<T: Scalar>(kind: ParamKind, x: T) -> T {
    if kind.is_exponent() {
        let span = T::lit(EXPONENT_HI - EXPONENT_LO);
        // the map is flat at the bounds; start just inside
        let eps = T::lit(1e-3);
        let q = ((x - T::lit(EXPONENT_LO)) / span).max(eps).min(T::one() - eps);
        q.sqrt().asin()
    } else {
        x.ln()
    }
}

struct Problem<'a, T> {
    model: &'a CircuitModel,
    freq: &'a [T],
    z: &'a [Complex<T>],
    weights: Vec<T>,
}

impl<T: Scalar> Problem<'_, T> {
    fn params(&self, u: &[T]) -> Vec<T> {
        self.model
            .param_kinds()
            .iter()
            .zip(u)
            .map(|(k, &v)| to_param(*k, v))
            .collect()
    }

    /// `[Re; Im]` weighted residual, or `None` if any entry is not finite.
    fn residual(&self, u: &[T]) -> Result<Option<Vec<T>>, FitError> {
        let zm = impedance_values(self.model, &self.params(u), self.freq)?;
        let n = self.z.len();
        let mut r = vec![T::zero(); 2 * n];
        for i in 0..n {
            let d = (zm[i] - self.z[i]) * self.weights[i];
            r[i] = d.re;
            r[n + i] = d.im;
        }
        Ok(r.iter().all(|v| v.is_finite()).then_some(r))
    }

    fn jacobian(&self, u: &[T], h: T) -> Result<Option<Vec<T>>, FitError> {
        let m = 2 * self.z.len();
        let n = u.len();
        let mut jac = vec![T::zero(); m * n];
        let mut up = u.to_vec();
        for j in 0..n {
            up[j] = u[j] + h;
            let Some(rp) = self.residual(&up)? else { return Ok(None) };
            up[j] = u[j] - h;
            let Some(rm) = self.residual(&up)? else { return Ok(None) };
            up[j] = u[j];
            for i in 0..m {
                jac[i * n + j] = (rp[i] - rm[i]) / (h + h);
            }
        }
        Ok(Some(jac))
    }
}

fn sum_sq<T: Scalar>(r: &[T]) -> T {
    r.iter().map(|v| *v * *v).sum()
}

fn problem<'a, T: Scalar>(model: &'a CircuitModel, s: &'a Spectrum<T>, weighting: Weighting) -> Problem<'a, T> {
    let weights = s
        .z()
        .iter()
        .map(|z| match weighting {
            Weighting::Modulus if z.norm() > T::zero() => T::one() / z.norm(),
            _ => T::one(),
        })
        .collect();
    Problem {
        model,
        freq: s.freq(),
        z: s.z(),
        weights,
    }
}

/// Finite-difference Jacobian of the weighted residual with respect to the
/// transformed parameters, row-major `2 n_points x n_params`.
pub fn residual_jacobian<T: Scalar>(
    model: &CircuitModel,
    s: &Spectrum<T>,
    params: &[T],
    weighting: Weighting,
    step: T,
) -> Result<Vec<T>, FitError> {
    let pb = problem(model, s, weighting);
    let u: Vec<T> = model
        .param_kinds()
        .iter()
        .zip(params)
        .map(|(k, &x)| to_internal(*k, x))
        .collect();
    pb.jacobian(&u, step)?.ok_or(FitError::NonFiniteResidual)
}

/// Levenberg-Marquardt fit of `model` to `s` starting from `init`.
pub fn fit_params<T: Scalar>(
    model: &CircuitModel,
    s: &Spectrum<T>,
    init: &[T],
    cfg: &FitConfig,
) -> Result<FitResult<T>, FitError> {
    cfg.validate()?;
    if s.is_empty() {
        return Err(FitError::EmptySpectrum);
    }
    if init.len() != model.param_count() {
        return Err(CircuitError::LengthMismatch {
            expected: model.param_count(),
            actual: init.len(),
        }
        .into());
    }
    for ((name, kind), v) in model.param_names().iter().zip(model.param_kinds()).zip(init) {
        if !in_bounds(*kind, v.to_f64_lossy()) {
            return Err(FitError::InitOutOfBounds {
                name: name.clone(),
                value: v.to_f64_lossy(),
            });
        }
    }
    let pb = problem(model, s, cfg.weighting);
    let kinds = model.param_kinds();
    let n = init.len();
    let mut u: Vec<T> = kinds.iter().zip(init).map(|(k, &x)| to_internal(*k, x)).collect();
    let mut r = pb.residual(&u)?.ok_or(FitError::NonFiniteResidual)?;
    let mut cost = sum_sq(&r);
    let mut history = vec![cost];
    // f32 cannot resolve a 1e-6 central difference
    let h = T::lit(cfg.fd_step).max(T::epsilon().cbrt());
    let floor = T::lit(100.0) * T::epsilon() * T::epsilon() * T::from_usize_lossy(r.len());
    let mut mu = T::lit(cfg.initial_damping);
    let mu_max = T::lit(1e16);
    let max_step = T::lit(MAX_STEP);
    let log_lo = T::lit(MAGNITUDE_SEARCH.0.ln());
    let log_hi = T::lit(MAGNITUDE_SEARCH.1.ln());
    let up = T::lit(cfg.damping_up);
    let down = T::lit(cfg.damping_down);
    let tol = T::lit(cfg.tolerance);
    let mut iterations = 0;
    let termination = 'outer: loop {
        if cost <= floor {
            break Termination::ZeroResidual;
        }
        if iterations >= cfg.max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;
        let Some(jac) = pb.jacobian(&u, h)? else {
            return Err(FitError::NonFiniteResidual);
        };
        let m = r.len();
        // Marquardt scaling: unit-norm columns, damping relative to 1
        let col_sq: Vec<T> = (0..n).map(|a| (0..m).map(|i| jac[i * n + a] * jac[i * n + a]).sum()).collect();
        let dmax = col_sq.iter().copied().fold(T::zero(), T::max);
        let dfloor = (dmax * T::epsilon().max(T::lit(1e-15))).max(T::min_positive_value());
        let scale: Vec<T> = col_sq.iter().map(|d| T::one() / d.max(dfloor).sqrt()).collect();
        let scaled: Vec<T> = (0..m * n).map(|k| jac[k] * scale[k % n]).collect();
        // SVD of the scaled Jacobian keeps the damped solve accurate when
        // columns are nearly collinear (normal equations would square the
        // condition number)
        let (us, sigma, vs) = svd(&scaled, m, n);
        let ur: Vec<T> = (0..n).map(|j| (0..m).map(|i| us[i * n + j] * r[i]).sum()).collect();
        let damped = |mu: T| -> Vec<T> {
            let coef: Vec<T> = (0..n).map(|j| sigma[j] / (sigma[j] * sigma[j] + mu) * ur[j]).collect();
            (0..n)
                .map(|k| -scale[k] * (0..n).map(|j| vs[k * n + j] * coef[j]).sum::<T>())
                .collect()
        };
        loop {
            let delta = damped(mu);
            let ut: Vec<T> = u.iter().zip(&delta).map(|(a, b)| *a + *b).collect();
            let short = delta.iter().all(|d| d.abs() <= max_step);
            let inside = short && ut.iter().zip(kinds).all(|(v, k)| {
                v.is_finite() && (k.is_exponent() || (*v >= log_lo && *v <= log_hi))
            });
            let trial = inside.then_some(ut);
            if let Some(ut) = trial {
                if let Some(rt) = pb.residual(&ut)? {
                    let ct = sum_sq(&rt);
                    if ct < cost {
                        let rel = (cost - ct) / cost;
                        u = ut;
                        r = rt;
                        cost = ct;
                        history.push(cost);
                        mu = (mu * down).max(T::lit(1e-30));
                        if rel < tol {
                            break 'outer Termination::CostTolerance;
                        }
                        break;
                    }
                }
            }
            mu = mu * up;
            if mu > mu_max {
                break 'outer Termination::DampingOverflow;
            }
        }
    };
    let params = pb.params(&u);
    let bounds_active = kinds
        .iter()
        .zip(&params)
        .map(|(k, v)| {
            k.is_exponent() && {
                let v = v.to_f64_lossy();
                v - EXPONENT_LO < 1e-6 || EXPONENT_HI - v < 1e-6
            }
        })
        .collect();
    Ok(FitResult {
        params,
        cost,
        iterations,
        converged: matches!(termination, Termination::CostTolerance | Termination::ZeroResidual),
        termination,
        bounds_active,
        cost_history: history,
    })
}

/// Relative RMSE `sqrt(mean |Z_model - z|^2 / mean |z|^2)`.
pub fn fit_quality<T: Scalar>(model: &CircuitModel, params: &[T], s: &Spectrum<T>) -> Result<T, FitError> {
    let zm = impedance_values(model, params, s.freq())?;
    let num: T = zm.iter().zip(s.z()).map(|(a, b)| (*a - *b).norm_sqr()).sum();
    let den: T = s.z().iter().map(|z| z.norm_sqr()).sum();
    Ok(if den > T::zero() {
        (num / den).sqrt()
    } else if num > T::zero() {
        T::infinity()
    } else {
        T::zero()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{circuit_impedance, parse_circuit};
    use crate::datagen::log_space;

    fn grid() -> Vec<f64> {
        log_space(1e-2, 1e6, 60)
    }

    #[test]
    fn pure_resistor_guess_is_intercept() {
        let m = parse_circuit("R").unwrap();
        let s = circuit_impedance(&m, &[10.0], &grid()).unwrap();
        let g = initial_guess(&m, &s).unwrap();
        assert!((g[0] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn rc_capacitance_guess_within_decade() {
        let m = parse_circuit("R-RC").unwrap();
        let s = circuit_impedance(&m, &[1.0, 100.0, 1e-6], &log_space(1.0, 1e7, 200)).unwrap();
        let g = initial_guess(&m, &s).unwrap();
        assert!(g[2] > 1e-7 && g[2] < 1e-5, "{g:?}");
    }

    #[test]
    fn exact_start_stops_immediately() {
        let m = parse_circuit("R-RCPE").unwrap();
        let truth = [5.0, 200.0, 0.85, 1e-5];
        let s = circuit_impedance(&m, &truth, &grid()).unwrap();
        let r = fit_params(&m, &s, &truth, &FitConfig::default()).unwrap();
        assert!(r.iterations <= 2, "{r:?}");
        assert!(r.converged);
        assert!(fit_quality(&m, &r.params, &s).unwrap() < 1e-8);
    }

    #[test]
    fn recovers_perturbed_start() {
        let m = parse_circuit("R-RCPE").unwrap();
        let truth = [5.0, 200.0, 0.85, 1e-5];
        let s = circuit_impedance(&m, &truth, &grid()).unwrap();
        let init = [8.0, 120.0, 0.6, 3e-5];
        let r = fit_params(&m, &s, &init, &FitConfig::default()).unwrap();
        assert!(fit_quality(&m, &r.params, &s).unwrap() < 1e-8, "{r:?}");
        assert!(r.cost_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_model_quality_is_one() {
        let m = parse_circuit("R").unwrap();
        let s = circuit_impedance(&m, &[3.0], &grid()).unwrap();
        let q = fit_quality(&m, &[0.0], &s).unwrap();
        assert!((q - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_init() {
        let m = parse_circuit("R-RCPE").unwrap();
        let s = circuit_impedance(&m, &[5.0, 200.0, 0.85, 1e-5], &grid()).unwrap();
        let e = fit_params(&m, &s, &[5.0, 200.0, 1.5, 1e-5], &FitConfig::default());
        assert!(matches!(e, Err(FitError::InitOutOfBounds { .. })));
        let e = fit_params(&m, &s, &[-5.0, 200.0, 0.5, 1e-5], &FitConfig::default());
        assert!(matches!(e, Err(FitError::InitOutOfBounds { .. })));
    }
}
