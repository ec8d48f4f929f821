use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::CircuitError;
use crate::scalar::Scalar;

/// The six circuit elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ElementKind {
    /// Inductance, `j w L`.
    L,
    /// Resistance.
    R,
    /// Capacitance, `1 / (j w C)`.
    C,
    /// Constant phase element, `1 / (C (j w)^t)`; params `[t, C]`.
    Cpe,
    /// Gerischer element, `R / sqrt(1 + j w t)`; params `[R, t]`.
    G,
    /// Warburg short element, `R tanh((j w T)^p) / (j w T)^p`; params `[R, T, p]`.
    Ws,
}

/// Physical role of one circuit parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamKind {
    Inductance,
    Resistance,
    Capacitance,
    CpeExponent,
    CpeMagnitude,
    GerischerResistance,
    GerischerTime,
    WarburgResistance,
    WarburgTime,
    WarburgExponent,
}

impl ParamKind {
    /// Exponent-like parameters live in `(0, 1]`; the rest are positive magnitudes.
    pub fn is_exponent(self) -> bool {
        matches!(self, ParamKind::CpeExponent | ParamKind::WarburgExponent)
    }
}

impl ElementKind {
    pub fn param_count(self) -> usize {
        match self {
            ElementKind::L | ElementKind::R | ElementKind::C => 1,
            ElementKind::Cpe | ElementKind::G => 2,
            ElementKind::Ws => 3,
        }
    }

    pub fn param_kinds(self) -> &'static [ParamKind] {
        use ParamKind::*;
        match self {
            ElementKind::L => &[Inductance],
            ElementKind::R => &[Resistance],
            ElementKind::C => &[Capacitance],
            ElementKind::Cpe => &[CpeExponent, CpeMagnitude],
            ElementKind::G => &[GerischerResistance, GerischerTime],
            ElementKind::Ws => &[WarburgResistance, WarburgTime, WarburgExponent],
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ElementKind::L => "L",
            ElementKind::R => "R",
            ElementKind::C => "C",
            ElementKind::Cpe => "CPE",
            ElementKind::G => "G",
            ElementKind::Ws => "Ws",
        }
    }

    pub(crate) fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "L" => ElementKind::L,
            "R" => ElementKind::R,
            "C" => ElementKind::C,
            "CPE" => ElementKind::Cpe,
            "G" => ElementKind::G,
            "Ws" => ElementKind::Ws,
            _ => return None,
        })
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Impedance of a single element at angular frequency `omega` (rad/s).
///
/// Complex powers use the principal branch; for `omega > 0` the argument of
/// `j omega` is exactly `pi / 2`.
pub fn element_impedance<T: Scalar>(
    kind: ElementKind,
    params: &[T],
    omega: T,
) -> Result<Complex<T>, CircuitError> {
    if params.len() != kind.param_count() {
        return Err(CircuitError::LengthMismatch {
            expected: kind.param_count(),
            actual: params.len(),
        });
    }
    let zero = T::zero();
    let one = Complex::new(T::one(), zero);
    let z = match kind {
        ElementKind::R => Complex::new(params[0], zero),
        ElementKind::L => Complex::new(zero, omega * params[0]),
        ElementKind::C => {
            if omega == zero {
                return Err(CircuitError::DomainError { kind });
            }
            one / Complex::new(zero, omega * params[0])
        }
        ElementKind::Cpe => {
            if omega == zero {
                return Err(CircuitError::DomainError { kind });
            }
            let (t, c) = (params[0], params[1]);
            one / (j_omega_pow(omega, t) * c)
        }
        ElementKind::G => {
            let (r, t) = (params[0], params[1]);
            Complex::new(r, zero) / (one + Complex::new(zero, omega * t)).sqrt()
        }
        ElementKind::Ws => {
            let (r, tau, p) = (params[0], params[1], params[2]);
            let wt = omega * tau;
            if wt == zero {
                // tanh(x) / x -> 1
                Complex::new(r, zero)
            } else {
                let x = j_omega_pow(wt, p);
                stable_tanh(x) / x * r
            }
        }
    };
    Ok(z)
}

/// `(j w)^t = w^t exp(j t pi / 2)` for `w > 0`.
#[inline]
fn j_omega_pow<T: Scalar>(omega: T, t: T) -> Complex<T> {
    Complex::from_polar(omega.powf(t), t * T::FRAC_PI_2())
}

/// `tanh` that saturates instead of overflowing for large real parts.
fn stable_tanh<T: Scalar>(x: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    if x.re >= T::zero() {
        let e = (-x - x).exp();
        (one - e) / (one + e)
    } else {
        -stable_tanh(-x)
    }
}
