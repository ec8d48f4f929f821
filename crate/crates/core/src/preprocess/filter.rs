use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Spectrum;
use crate::dataset::Dataset;
use crate::scalar::Scalar;

/// Which index pairs the rising-real-part criterion compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// Every pair `i > j`.
    #[default]
    AllPairs,
    /// Only neighbouring points `i = j + 1`.
    Consecutive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_neg_imag_points: usize,
    pub range_ratio: f64,
    /// Largest tolerated rise of the max-normalized real part towards higher frequency.
    pub real_increase_tol: f64,
    pub pair_mode: PairMode,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_neg_imag_points: 10,
            range_ratio: 0.5,
            real_increase_tol: 0.03,
            pair_mode: PairMode::AllPairs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    TooFewNegImag,
    ImagRange,
    NegativeReal,
    RealIncrease,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::TooFewNegImag => "too_few_neg_imag",
            RejectReason::ImagRange => "imag_range",
            RejectReason::NegativeReal => "negative_real",
            RejectReason::RealIncrease => "real_increase",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Keep,
    Reject(RejectReason),
}

/// Remove points with positive imaginary part.
pub fn drop_positive_imag<T: Scalar>(s: &Spectrum<T>) -> Spectrum<T> {
    s.retain_points(|z| !(z.im > T::zero()))
}

/// Every rejection criterion the spectrum fails, in a fixed order.
pub fn failed_criteria<T: Scalar>(s: &Spectrum<T>, cfg: &FilterConfig) -> Vec<RejectReason> {
    let mut out = Vec::new();
    let z = s.z();

    let neg = z.iter().filter(|z| z.im < T::zero()).count();
    if neg < cfg.min_neg_imag_points {
        out.push(RejectReason::TooFewNegImag);
    }

    if !z.is_empty() {
        // u = -Im(z); positive u is the capacitive side
        let (umin, umax) = z.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), z| {
            let u = -z.im;
            (lo.min(u), hi.max(u))
        });
        if umin < T::zero() && umax < T::lit(cfg.range_ratio) * umin.abs() {
            out.push(RejectReason::ImagRange);
        }
    }

    if z.iter().any(|z| z.re < T::zero()) {
        out.push(RejectReason::NegativeReal);
    }

    let max_re = z.iter().fold(T::neg_infinity(), |m, z| m.max(z.re));
    if max_re > T::zero() {
        let tol = T::lit(cfg.real_increase_tol);
        let rises = match cfg.pair_mode {
            PairMode::AllPairs => {
                let mut running_min = T::infinity();
                z.iter().any(|z| {
                    let v = z.re / max_re;
                    let rise = v - running_min;
                    running_min = running_min.min(v);
                    rise > tol
                })
            }
            PairMode::Consecutive => z.windows(2).any(|w| (w[1].re - w[0].re) / max_re > tol),
        };
        if rises {
            out.push(RejectReason::RealIncrease);
        }
    }
    out
}

/// Keep or reject a spectrum sorted by increasing frequency.
pub fn filter_spectrum<T: Scalar>(s: &Spectrum<T>, cfg: &FilterConfig) -> FilterDecision {
    match failed_criteria(s, cfg).first() {
        Some(r) => FilterDecision::Reject(*r),
        None => FilterDecision::Keep,
    }
}

/// Outcome for one input spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRecord {
    pub id: String,
    pub class: Option<String>,
    pub reason: Option<RejectReason>,
}

impl FilterRecord {
    pub fn kept(&self) -> bool {
        self.reason.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterReport {
    /// Surviving spectra with positive-imaginary points removed.
    pub kept: Dataset,
    /// One record per input spectrum, in input order.
    pub records: Vec<FilterRecord>,
}

impl FilterReport {
    pub fn rejected(&self) -> impl Iterator<Item = &FilterRecord> {
        self.records.iter().filter(|r| !r.kept())
    }

    pub fn rejected_count(&self) -> usize {
        self.rejected().count()
    }

    pub fn removed_per_class(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for r in self.rejected() {
            *m.entry(r.class.clone().unwrap_or_default()).or_insert(0) += 1;
        }
        m
    }

    pub fn kept_per_class(&self) -> BTreeMap<String, usize> {
        self.kept.class_counts()
    }

    pub fn reason_counts(&self) -> BTreeMap<RejectReason, usize> {
        let mut m = BTreeMap::new();
        for r in self.rejected() {
            *m.entry(r.reason.expect("rejected")).or_insert(0) += 1;
        }
        m
    }
}

/// Drop positive-imaginary points, then apply the rejection criteria.
pub fn filter_dataset(d: &Dataset, cfg: &FilterConfig) -> FilterReport {
    let outcomes: Vec<(Spectrum<f64>, FilterDecision)> = d
        .spectra
        .par_iter()
        .map(|s| {
            let dropped = drop_positive_imag(s);
            let decision = filter_spectrum(&dropped, cfg);
            (dropped, decision)
        })
        .collect();
    let mut kept = Vec::new();
    let mut records = Vec::with_capacity(outcomes.len());
    for (s, decision) in outcomes {
        let reason = match decision {
            FilterDecision::Keep => None,
            FilterDecision::Reject(r) => Some(r),
        };
        records.push(FilterRecord {
            id: s.id.clone(),
            class: s.label.clone(),
            reason,
        });
        if reason.is_none() {
            kept.push(s);
        }
    }
    FilterReport {
        kept: Dataset {
            spectra: kept,
            provenance: d.provenance.clone(),
        },
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{circuit_impedance, parse_circuit};
    use crate::datagen::log_space;
    use num_complex::Complex;

    fn spectrum(z: Vec<Complex<f64>>) -> Spectrum<f64> {
        let f = log_space(1.0, 1e5, z.len());
        Spectrum::new(f, z).unwrap()
    }

    fn semicircle() -> Spectrum<f64> {
        let m = parse_circuit("RC").unwrap();
        circuit_impedance(&m, &[100.0, 1e-5], &log_space(1.0, 1e6, 40)).unwrap()
    }

    #[test]
    fn drop_keeps_order() {
        let s = spectrum(vec![
            Complex::new(1.0, -1.0),
            Complex::new(1.0, 2.0),
            Complex::new(2.0, -3.0),
            Complex::new(1.0, 0.0),
        ]);
        let d = drop_positive_imag(&s);
        assert_eq!(d.len(), 3);
        assert_eq!(d.imag(), vec![-1.0, -3.0, 0.0]);
        assert!(d.freq().windows(2).all(|w| w[1] > w[0]));
        let all_pos = spectrum(vec![Complex::new(1.0, 1.0); 3]);
        assert!(drop_positive_imag(&all_pos).is_empty());
        let all_neg = spectrum(vec![Complex::new(1.0, -1.0); 3]);
        assert_eq!(drop_positive_imag(&all_neg), all_neg);
    }

    #[test]
    fn too_few_negative_imag() {
        let mut z = vec![Complex::new(10.0, -1.0); 9];
        z.extend(vec![Complex::new(10.0, 0.0); 5]);
        let s = spectrum(z);
        assert_eq!(
            filter_spectrum(&s, &FilterConfig::default()),
            FilterDecision::Reject(RejectReason::TooFewNegImag)
        );
    }

    #[test]
    fn negative_real() {
        let mut z: Vec<_> = (0..20).map(|i| Complex::new(20.0 - i as f64, -1.0)).collect();
        z[19].re = -0.1;
        assert_eq!(
            filter_spectrum(&spectrum(z), &FilterConfig::default()),
            FilterDecision::Reject(RejectReason::NegativeReal)
        );
    }

    #[test]
    fn rising_real_part() {
        let mut z: Vec<_> = (0..20).map(|i| Complex::new(20.0 - i as f64, -1.0)).collect();
        z[15].re = z[10].re + 1.0;
        assert_eq!(
            filter_spectrum(&spectrum(z), &FilterConfig::default()),
            FilterDecision::Reject(RejectReason::RealIncrease)
        );
    }

    #[test]
    fn all_pairs_catch_slow_drift_that_consecutive_misses() {
        // rises by 0.02 per step (normalized), never 0.03 in one step
        let z: Vec<_> = (0..20).map(|i| Complex::new(50.0 + i as f64, -1.0)).collect();
        let s = spectrum(z);
        let all = FilterConfig::default();
        let cons = FilterConfig { pair_mode: PairMode::Consecutive, ..all };
        assert_eq!(filter_spectrum(&s, &all), FilterDecision::Reject(RejectReason::RealIncrease));
        assert_eq!(filter_spectrum(&s, &cons), FilterDecision::Keep);
    }

    #[test]
    fn imag_range_on_raw_spectrum() {
        let mut z: Vec<_> = (0..20).map(|i| Complex::new(20.0 - i as f64, -0.1)).collect();
        z[19].im = 10.0;
        assert!(failed_criteria(&spectrum(z), &FilterConfig::default()).contains(&RejectReason::ImagRange));
    }

    #[test]
    fn semicircle_kept() {
        assert_eq!(filter_spectrum(&semicircle(), &FilterConfig::default()), FilterDecision::Keep);
    }

    #[test]
    fn empty_dataset() {
        let r = filter_dataset(&Dataset::default(), &FilterConfig::default());
        assert!(r.records.is_empty() && r.kept.is_empty());
    }
}
