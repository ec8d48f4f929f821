//! Synthetic spectrum generation with seeded parameter priors.
//!
//! Each class draws from its own ChaCha8 stream: the generator is seeded with
//! the master seed and the stream id is the 64-bit FNV-1a hash of the class's
//! canonical circuit name. Output order is (class name, index), so results do
//! not depend on the number of worker threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{circuit_impedance, parse_circuit, CircuitError, CircuitModel, CircuitNode, ElementKind, ParamKind};
use crate::dataset::{Dataset, Provenance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatagenError {
    #[error("prior bounds must satisfy 0 < lo < hi for reciprocal and lo < hi for uniform (got lo={lo}, hi={hi})")]
    NonPositiveBound { lo: f64, hi: f64 },
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("circuit `{circuit}` needs {expected} priors, got {actual}")]
    PriorCount { circuit: String, expected: usize, actual: usize },
    #[error("no priors configured for circuit `{0}`")]
    MissingPriors(String),
    #[error("could not satisfy the time-constant constraint for `{0}`")]
    ConstraintUnsatisfiable(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Distribution of a single circuit parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "lowercase", deny_unknown_fields)]
pub enum ParamPrior {
    /// Log-uniform on `[lo, hi]`.
    Reciprocal { lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl ParamPrior {
    pub fn validate(&self) -> Result<(), DatagenError> {
        match *self {
            ParamPrior::Reciprocal { lo, hi } if lo > 0.0 && lo < hi && hi.is_finite() => Ok(()),
            ParamPrior::Uniform { lo, hi } if lo < hi && lo.is_finite() && hi.is_finite() => Ok(()),
            ParamPrior::Reciprocal { lo, hi } | ParamPrior::Uniform { lo, hi } => {
                Err(DatagenError::NonPositiveBound { lo, hi })
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match *self {
            ParamPrior::Reciprocal { lo, hi } => {
                let (a, b) = (lo.ln(), hi.ln());
                (a + (b - a) * u).exp().clamp(lo, hi)
            }
            ParamPrior::Uniform { lo, hi } => lo + (hi - lo) * u,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            ParamPrior::Reciprocal { lo, hi } | ParamPrior::Uniform { lo, hi } => (lo, hi),
        }
    }
}

/// Default prior for a parameter role. These are calibrated guesses; the
/// generating bounds of the reference dataset are not public.
pub fn default_prior(kind: ParamKind) -> ParamPrior {
    use ParamKind::*;
    match kind {
        Inductance => ParamPrior::Reciprocal { lo: 1e-8, hi: 1e-2 },
        Resistance | GerischerResistance | WarburgResistance => {
            ParamPrior::Reciprocal { lo: 1.0, hi: 1e4 }
        }
        Capacitance | CpeMagnitude => ParamPrior::Reciprocal { lo: 1e-7, hi: 1e-4 },
        CpeExponent => ParamPrior::Uniform { lo: 0.7, hi: 1.0 },
        GerischerTime | WarburgTime => ParamPrior::Reciprocal { lo: 1e-4, hi: 1e2 },
        WarburgExponent => ParamPrior::Uniform { lo: 0.2, hi: 1.0 },
    }
}

pub fn default_priors(model: &CircuitModel) -> Vec<ParamPrior> {
    model.param_kinds().iter().map(|k| default_prior(*k)).collect()
}

/// Bounds (Hz) of the per-spectrum frequency range endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreqDecades {
    pub min_lo: f64,
    pub max_lo: f64,
    pub min_hi: f64,
    pub max_hi: f64,
}

impl Default for FreqDecades {
    fn default() -> Self {
        Self {
            min_lo: 1e-2,
            max_lo: 1e1,
            min_hi: 1e5,
            max_hi: 1e7,
        }
    }
}

/// Reference unfiltered class sizes.
pub const REFERENCE_CLASS_COUNTS: [(&str, usize); 9] = [
    ("L-R-RCPE", 1084),
    ("L-R-RCPE-RCPE", 1132),
    ("L-R-RCPE-RCPE-RCPE", 1114),
    ("RC-G-G", 1099),
    ("RC-RC-RCPE-RCPE", 1152),
    ("RCPE-RCPE", 1064),
    ("RCPE-RCPE-RCPE", 1140),
    ("RCPE-RCPE-RCPE-RCPE", 1138),
    ("R-Ws", 404),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub class_counts: BTreeMap<String, usize>,
    /// Per-circuit priors aligned with the circuit's parameter names.
    pub param_priors: BTreeMap<String, Vec<ParamPrior>>,
    pub freq_decades: FreqDecades,
    pub points_range: (usize, usize),
    /// Minimum ratio between the two RC time constants where that constraint applies.
    pub tau_ratio: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let class_counts = REFERENCE_CLASS_COUNTS
            .iter()
            .map(|(n, c)| (n.to_string(), *c))
            .collect();
        let param_priors = REFERENCE_CLASS_COUNTS
            .iter()
            .map(|(n, _)| {
                let m = parse_circuit(n).expect("named circuit parses");
                (n.to_string(), default_priors(&m))
            })
            .collect();
        Self {
            class_counts,
            param_priors,
            freq_decades: FreqDecades::default(),
            points_range: (30, 100),
            tau_ratio: 10.0,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    /// Config with the given class sizes and default priors for every class.
    pub fn with_counts<'a>(counts: impl IntoIterator<Item = (&'a str, usize)>, seed: u64) -> Result<Self, DatagenError> {
        let mut cfg = Self {
            class_counts: BTreeMap::new(),
            param_priors: BTreeMap::new(),
            seed,
            ..Self::default()
        };
        for (name, n) in counts {
            let m = parse_circuit(name)?;
            cfg.param_priors.insert(m.canonical_name().to_string(), default_priors(&m));
            cfg.class_counts.insert(m.canonical_name().to_string(), n);
        }
        Ok(cfg)
    }

    /// Scale all class counts by `factor`, rounding to nearest.
    pub fn scaled(mut self, factor: f64) -> Self {
        for v in self.class_counts.values_mut() {
            *v = ((*v as f64) * factor).round() as usize;
        }
        self
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        let fd = &self.freq_decades;
        if !(fd.min_lo > 0.0 && fd.min_lo <= fd.max_lo && fd.min_hi <= fd.max_hi && fd.max_lo < fd.min_hi) {
            return Err(DatagenError::InvalidRange(format!("frequency decades {fd:?}")));
        }
        if fd.min_hi < 1e5 || fd.max_lo > 1e1 {
            return Err(DatagenError::InvalidRange(
                "every spectrum must cover 10 Hz .. 100 kHz (need max_lo <= 1e1 and min_hi >= 1e5)".into(),
            ));
        }
        let (a, b) = self.points_range;
        if a < 2 || a > b {
            return Err(DatagenError::InvalidRange(format!("points_range ({a}, {b})")));
        }
        if !(self.tau_ratio >= 1.0) {
            return Err(DatagenError::InvalidRange(format!("tau_ratio {}", self.tau_ratio)));
        }
        for name in self.class_counts.keys() {
            let m = parse_circuit(name)?;
            let priors = self
                .priors_for(&m)
                .ok_or_else(|| DatagenError::MissingPriors(name.clone()))?;
            if priors.len() != m.param_count() {
                return Err(DatagenError::PriorCount {
                    circuit: name.clone(),
                    expected: m.param_count(),
                    actual: priors.len(),
                });
            }
            priors.iter().try_for_each(ParamPrior::validate)?;
        }
        Ok(())
    }

    fn priors_for(&self, model: &CircuitModel) -> Option<&Vec<ParamPrior>> {
        self.param_priors.get(model.canonical_name()).or_else(|| {
            self.param_priors
                .iter()
                .find(|(k, _)| parse_circuit(k).map(|m| &m == model).unwrap_or(false))
                .map(|(_, v)| v)
        })
    }
}

/// Indices of `(R, C)` for each RC parallel node, in order.
fn rc_pairs(model: &CircuitModel) -> Vec<(usize, usize)> {
    model
        .nodes()
        .iter()
        .zip(model.node_param_ranges())
        .filter(|(n, _)| matches!(n, CircuitNode::Parallel(ElementKind::R, ElementKind::C)))
        .map(|(_, r)| (r.start, r.start + 1))
        .collect()
}

const MAX_REJECTIONS: usize = 100_000;

/// Draw one parameter vector. For circuits with two or more RC nodes the
/// first two time constants `R C` are resampled until their ratio exceeds
/// `tau_ratio` (in either direction).
pub fn sample_params<R: Rng + ?Sized>(
    model: &CircuitModel,
    priors: &[ParamPrior],
    tau_ratio: f64,
    rng: &mut R,
) -> Result<Vec<f64>, DatagenError> {
    if priors.len() != model.param_count() {
        return Err(DatagenError::PriorCount {
            circuit: model.canonical_name().to_string(),
            expected: model.param_count(),
            actual: priors.len(),
        });
    }
    priors.iter().try_for_each(ParamPrior::validate)?;
    let rc = rc_pairs(model);
    for _ in 0..MAX_REJECTIONS {
        let p: Vec<f64> = priors.iter().map(|pr| pr.sample(rng)).collect();
        if rc.len() < 2 {
            return Ok(p);
        }
        let t1 = p[rc[0].0] * p[rc[0].1];
        let t2 = p[rc[1].0] * p[rc[1].1];
        if (t1 / t2).max(t2 / t1) > tau_ratio {
            return Ok(p);
        }
    }
    Err(DatagenError::ConstraintUnsatisfiable(model.canonical_name().to_string()))
}

/// Random log-spaced grid: endpoints log-uniform within the configured
/// decades, point count uniform in `points_range`.
pub fn sample_frequency_grid<R: Rng + ?Sized>(
    config: &GeneratorConfig,
    rng: &mut R,
) -> Result<Vec<f64>, DatagenError> {
    let fd = &config.freq_decades;
    let (n_min, n_max) = config.points_range;
    if n_min < 2 || n_min > n_max || !(fd.min_lo > 0.0) || fd.min_lo > fd.max_lo || fd.min_hi > fd.max_hi || fd.max_lo >= fd.min_hi {
        return Err(DatagenError::InvalidRange(format!("{fd:?}, points {n_min}..{n_max}")));
    }
    let lo = ParamPrior::Reciprocal { lo: fd.min_lo, hi: fd.max_lo }.sample_or_point(rng);
    let hi = ParamPrior::Reciprocal { lo: fd.min_hi, hi: fd.max_hi }.sample_or_point(rng);
    let n = rng.random_range(n_min..=n_max);
    Ok(log_space(lo, hi, n))
}

impl ParamPrior {
    fn sample_or_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.bounds();
        if lo == hi {
            lo
        } else {
            self.sample(rng)
        }
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|k| match k {
            0 => lo,
            k if k == n - 1 => hi,
            k => 10f64.powf(a + step * k as f64),
        })
        .collect()
}

/// 64-bit FNV-1a, used to derive per-class stream ids.
pub fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub(crate) fn class_rng(seed: u64, class: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(class));
    rng
}

fn generate_class(config: &GeneratorConfig, name: &str, count: usize) -> Result<Vec<crate::Spectrum>, DatagenError> {
    let model = parse_circuit(name)?;
    let priors = config
        .priors_for(&model)
        .ok_or_else(|| DatagenError::MissingPriors(name.to_string()))?;
    let label = model.canonical_name().to_string();
    let mut rng = class_rng(config.seed, &label);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let freq = sample_frequency_grid(config, &mut rng)?;
        let mut tries = 0;
        let spectrum = loop {
            let params = sample_params(&model, priors, config.tau_ratio, &mut rng)?;
            let s = circuit_impedance(&model, &params, &freq)?;
            if s.z().iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                break s;
            }
            tries += 1;
            if tries > 1000 {
                return Err(DatagenError::InvalidRange(format!("non-finite impedances for {label}")));
            }
        };
        out.push(spectrum.with_label(label.clone()).with_id(format!("{label}#{i}")));
    }
    Ok(out)
}

/// Generate every configured class; deterministic under `config.seed`.
pub fn generate_dataset(config: &GeneratorConfig) -> Result<Dataset, DatagenError> {
    config.validate()?;
    let classes: Vec<(&String, &usize)> = config.class_counts.iter().collect();
    let parts = classes
        .par_iter()
        .map(|(name, count)| generate_class(config, name, **count))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset {
        spectra: parts.into_iter().flatten().collect(),
        provenance: Provenance::Generated(Box::new(config.clone())),
    })
}
