use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::series::{self, Agg};
use crate::circuit::Spectrum;
use crate::preprocess::FeatureMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Zreal,
    Zimag,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Zreal => "zreal",
            Channel::Zimag => "zimag",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrendAttr {
    Slope,
    Intercept,
    Rvalue,
}

impl TrendAttr {
    fn name(self) -> &'static str {
        match self {
            TrendAttr::Slope => "slope",
            TrendAttr::Intercept => "intercept",
            TrendAttr::Rvalue => "rvalue",
        }
    }
}

/// What a feature computes, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Mean,
    Median,
    Maximum,
    Minimum,
    Variance,
    StandardDeviation,
    Skewness,
    Kurtosis,
    AbsEnergy,
    SumValues,
    MeanAbsChange,
    MeanChange,
    AbsoluteSumOfChanges,
    CountAboveMean,
    CountBelowMean,
    FirstValue,
    LastValue,
    FirstLocationOfMaximum,
    FirstLocationOfMinimum,
    LinearTrend { attr: TrendAttr },
    AggLinearTrend { attr: TrendAttr, chunk_len: usize, agg: Agg },
    NumberPeaks { n: usize },
    EnergyRatioByChunks { num_segments: usize, focus: usize },
    ArCoefficient { coeff: usize, k: usize },
}

impl FeatureKind {
    /// Name suffix in `feature__param_value` form.
    pub fn suffix(&self) -> String {
        use FeatureKind::*;
        match *self {
            Mean => "mean".into(),
            Median => "median".into(),
            Maximum => "maximum".into(),
            Minimum => "minimum".into(),
            Variance => "variance".into(),
            StandardDeviation => "standard_deviation".into(),
            Skewness => "skewness".into(),
            Kurtosis => "kurtosis".into(),
            AbsEnergy => "abs_energy".into(),
            SumValues => "sum_values".into(),
            MeanAbsChange => "mean_abs_change".into(),
            MeanChange => "mean_change".into(),
            AbsoluteSumOfChanges => "absolute_sum_of_changes".into(),
            CountAboveMean => "count_above_mean".into(),
            CountBelowMean => "count_below_mean".into(),
            FirstValue => "first_value".into(),
            LastValue => "last_value".into(),
            FirstLocationOfMaximum => "first_location_of_maximum".into(),
            FirstLocationOfMinimum => "first_location_of_minimum".into(),
            LinearTrend { attr } => format!("linear_trend__attr_\"{}\"", attr.name()),
            AggLinearTrend { attr, chunk_len, agg } => format!(
                "agg_linear_trend__attr_\"{}\"__chunk_len_{chunk_len}__f_agg_\"{}\"",
                attr.name(),
                agg.name()
            ),
            NumberPeaks { n } => format!("number_peaks__n_{n}"),
            EnergyRatioByChunks { num_segments, focus } => {
                format!("energy_ratio_by_chunks__num_segments_{num_segments}__segment_focus_{focus}")
            }
            ArCoefficient { coeff, k } => format!("ar_coefficient__coeff_{coeff}__k_{k}"),
        }
    }

    /// Evaluate on a series; may return NaN for degenerate input.
    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        use FeatureKind::*;
        if x.is_empty() {
            return T::nan();
        }
        let count = |c: usize| T::from_usize_lossy(c);
        match *self {
            Mean => series::mean(x),
            Median => series::median(x),
            Maximum => series::maximum(x).unwrap_or(T::nan()),
            Minimum => series::minimum(x).unwrap_or(T::nan()),
            Variance => series::variance(x),
            StandardDeviation => series::variance(x).sqrt(),
            Skewness => series::skewness(x),
            Kurtosis => series::kurtosis(x),
            AbsEnergy => x.iter().map(|v| *v * *v).sum(),
            SumValues => x.iter().copied().sum(),
            MeanAbsChange => series::mean_abs_change(x),
            MeanChange => series::mean_change(x),
            AbsoluteSumOfChanges => series::absolute_sum_of_changes(x),
            CountAboveMean => count(series::count_above_mean(x)),
            CountBelowMean => count(series::count_below_mean(x)),
            FirstValue => x[0],
            LastValue => x[x.len() - 1],
            FirstLocationOfMaximum => series::first_location_of_maximum(x),
            FirstLocationOfMinimum => series::first_location_of_minimum(x),
            LinearTrend { attr } => trend_attr(series::linear_trend(x), attr),
            AggLinearTrend { attr, chunk_len, agg } => series::agg_linear_trend(x, chunk_len, agg)
                .map(|f| trend_attr(f, attr))
                .unwrap_or(T::nan()),
            NumberPeaks { n } => series::number_peaks(x, n).map(count).unwrap_or(T::nan()),
            EnergyRatioByChunks { num_segments, focus } => {
                if x.len() < num_segments {
                    return T::nan();
                }
                match series::energy_ratio_by_chunks(x, num_segments, focus) {
                    (_, true) => T::nan(),
                    (v, false) => v,
                }
            }
            ArCoefficient { coeff, k } => series::ar_coefficients(x, k)
                .ok()
                .and_then(|c| c.get(coeff).copied())
                .unwrap_or(T::nan()),
        }
    }
}

fn trend_attr<T: Scalar>(f: series::LinearFit<T>, attr: TrendAttr) -> T {
    match attr {
        TrendAttr::Slope => f.slope,
        TrendAttr::Intercept => f.intercept,
        TrendAttr::Rvalue => f.rvalue,
    }
}

/// One named feature on one channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureDef {
    pub channel: Channel,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureDef {
    pub fn new(channel: Channel, kind: FeatureKind) -> Self {
        Self { channel, kind }
    }

    /// `channel__feature__params`, e.g. `zimag__number_peaks__n_1`.
    pub fn name(&self) -> String {
        format!("{}__{}", self.channel.name(), self.kind.suffix())
    }
}

/// The features that ranked highest in the reference gradient-boosting study.
pub fn reference_features() -> Vec<FeatureDef> {
    use Channel::*;
    use FeatureKind::*;
    vec![
        FeatureDef::new(Zreal, AggLinearTrend { attr: TrendAttr::Rvalue, chunk_len: 10, agg: Agg::Max }),
        FeatureDef::new(Zimag, NumberPeaks { n: 1 }),
        FeatureDef::new(Zreal, EnergyRatioByChunks { num_segments: 10, focus: 9 }),
        FeatureDef::new(Zreal, ArCoefficient { coeff: 1, k: 10 }),
        FeatureDef::new(Zreal, ArCoefficient { coeff: 0, k: 10 }),
        FeatureDef::new(Zreal, Minimum),
        FeatureDef::new(Zreal, AggLinearTrend { attr: TrendAttr::Rvalue, chunk_len: 10, agg: Agg::Min }),
    ]
}

/// Default bank: 43 features per channel.
pub fn default_bank() -> Vec<FeatureDef> {
    use FeatureKind::*;
    let mut per_channel = vec![
        Mean,
        Median,
        Maximum,
        Minimum,
        Variance,
        StandardDeviation,
        Skewness,
        Kurtosis,
        AbsEnergy,
        SumValues,
        MeanAbsChange,
        MeanChange,
        AbsoluteSumOfChanges,
        CountAboveMean,
        CountBelowMean,
        FirstValue,
        LastValue,
        FirstLocationOfMaximum,
        FirstLocationOfMinimum,
        LinearTrend { attr: TrendAttr::Slope },
        LinearTrend { attr: TrendAttr::Intercept },
        LinearTrend { attr: TrendAttr::Rvalue },
    ];
    for agg in [Agg::Max, Agg::Min, Agg::Mean] {
        per_channel.push(AggLinearTrend { attr: TrendAttr::Rvalue, chunk_len: 10, agg });
    }
    for n in 1..=3 {
        per_channel.push(NumberPeaks { n });
    }
    for focus in 0..10 {
        per_channel.push(EnergyRatioByChunks { num_segments: 10, focus });
    }
    for coeff in 0..5 {
        per_channel.push(ArCoefficient { coeff, k: 10 });
    }
    [Channel::Zreal, Channel::Zimag]
        .into_iter()
        .flat_map(|c| per_channel.iter().map(move |k| FeatureDef::new(c, *k)))
        .collect()
}

/// Feature values for one spectrum plus which entries were degenerate
/// (NaN or infinite, replaced by 0).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T = f64> {
    pub values: Vec<T>,
    pub degenerate: Vec<bool>,
}

pub fn extract_features<T: Scalar>(s: &Spectrum<T>, bank: &[FeatureDef]) -> FeatureVector<T> {
    let re = s.real();
    let im = s.imag();
    let mut values = Vec::with_capacity(bank.len());
    let mut degenerate = Vec::with_capacity(bank.len());
    for def in bank {
        let x = match def.channel {
            Channel::Zreal => &re,
            Channel::Zimag => &im,
        };
        let v = def.kind.eval(x);
        if v.is_finite() {
            values.push(v);
            degenerate.push(false);
        } else {
            values.push(T::zero());
            degenerate.push(true);
        }
    }
    FeatureVector { values, degenerate }
}

/// Engineered-feature matrix and per-feature degenerate counts.
pub fn featurize(spectra: &[Spectrum<f64>], bank: &[FeatureDef]) -> (FeatureMatrix, Vec<usize>) {
    let vectors: Vec<FeatureVector<f64>> = spectra.par_iter().map(|s| extract_features(s, bank)).collect();
    let mut degenerate = vec![0usize; bank.len()];
    for v in &vectors {
        for (c, d) in degenerate.iter_mut().zip(&v.degenerate) {
            *c += usize::from(*d);
        }
    }
    let m = FeatureMatrix {
        columns: bank.iter().map(FeatureDef::name).collect(),
        rows: vectors.into_iter().map(|v| v.values).collect(),
        labels: spectra.iter().map(|s| s.label.clone()).collect(),
        ids: spectra.iter().map(|s| s.id.clone()).collect(),
        freq_grid: None,
    };
    (m, degenerate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn names_unique_and_reference_features_present() {
        let bank = default_bank();
        let names: HashSet<String> = bank.iter().map(FeatureDef::name).collect();
        assert_eq!(names.len(), bank.len());
        assert_eq!(bank.len(), 86);
        for f in reference_features() {
            assert!(names.contains(&f.name()), "{}", f.name());
        }
        assert!(names.contains("zimag__number_peaks__n_1"));
        assert!(names.contains("zreal__agg_linear_trend__attr_\"rvalue\"__chunk_len_10__f_agg_\"max\""));
        assert!(names.contains("zreal__energy_ratio_by_chunks__num_segments_10__segment_focus_9"));
        assert!(names.contains("zreal__ar_coefficient__coeff_1__k_10"));
    }

    #[test]
    fn single_feature_bank() {
        let s = Spectrum::new(
            vec![1.0, 2.0, 3.0],
            vec![num_complex::Complex::new(3.0, -1.0), num_complex::Complex::new(2.0, -2.0), num_complex::Complex::new(5.0, -1.0)],
        )
        .unwrap();
        let bank = [FeatureDef::new(Channel::Zreal, FeatureKind::Minimum)];
        let v = extract_features(&s, &bank);
        assert_eq!(v.values, vec![2.0]);
        // too short for AR(10): degenerate, mapped to 0
        let bank = [FeatureDef::new(Channel::Zreal, FeatureKind::ArCoefficient { coeff: 0, k: 10 })];
        let v = extract_features(&s, &bank);
        assert_eq!(v.values, vec![0.0]);
        assert_eq!(v.degenerate, vec![true]);
    }
}
