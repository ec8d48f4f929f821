use ecmkit::circuit::{circuit_impedance, parse_circuit};
use ecmkit::datagen::log_space;
use ecmkit::features::{
    benjamini_yekutieli, chunk_bounds, default_bank, energy_ratio_by_chunks, extract_features, mann_whitney_u,
    number_peaks,
};
use ecmkit::preprocess::{interpolate, CommonGrid};
use proptest::prelude::*;

#[test]
fn mann_whitney_reference_values() {
    // two-sided asymptotic p-values with continuity correction
    let p = mann_whitney_u(&[1.0, 2.0, 3.0, 4.0, 5.0], &[6.0, 7.0, 8.0, 9.0, 10.0]);
    assert!((p - 0.012185780355344813).abs() < 1e-9, "{p}");
    let p = mann_whitney_u(&[1.0, 2.0, 2.0, 3.0, 5.0, 7.0], &[2.0, 4.0, 4.0, 6.0, 8.0]);
    assert!((p - 0.3097402725973859).abs() < 1e-9, "{p}");
}

#[test]
fn benjamini_yekutieli_small_case() {
    // harmonic factor for m = 4 is 25/12, thresholds k * 0.05 / (4 * 25/12) = 0.006 k
    let sel = benjamini_yekutieli(&[0.5, 0.011, 0.001, 0.0185], 0.05);
    assert_eq!(sel, vec![false, true, true, false]);
    let sel = benjamini_yekutieli(&[0.5, 0.011, 0.001, 0.0179], 0.05);
    assert_eq!(sel, vec![false, true, true, true]);
    assert!(benjamini_yekutieli(&[], 0.05).is_empty());
}

proptest! {
    #[test]
    fn mann_whitney_symmetric_and_shift_invariant(
        a in prop::collection::vec(-100i32..100, 2..30),
        b in prop::collection::vec(-100i32..100, 2..30),
        shift in -50i32..50,
    ) {
        let fa: Vec<f64> = a.iter().map(|v| *v as f64).collect();
        let fb: Vec<f64> = b.iter().map(|v| *v as f64).collect();
        let p = mann_whitney_u(&fa, &fb);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p - mann_whitney_u(&fb, &fa)).abs() < 1e-12);
        let sa: Vec<f64> = a.iter().map(|v| (v + shift) as f64).collect();
        let sb: Vec<f64> = b.iter().map(|v| (v + shift) as f64).collect();
        prop_assert_eq!(p, mann_whitney_u(&sa, &sb));
    }

    #[test]
    fn benjamini_yekutieli_selects_smallest_prefix(
        p in prop::collection::vec(0.0f64..0.05, 1..40),
        alpha in 0.01f64..0.2,
    ) {
        let sel = benjamini_yekutieli(&p, alpha);
        let worst_kept = p.iter().zip(&sel).filter(|(_, s)| **s).map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
        for (v, s) in p.iter().zip(&sel) {
            if !s {
                prop_assert!(*v >= worst_kept);
            }
        }
        // lowering every p-value never drops a selection
        let lower: Vec<f64> = p.iter().map(|v| v / 2.0).collect();
        let sel2 = benjamini_yekutieli(&lower, alpha);
        for (a, b) in sel.iter().zip(&sel2) {
            prop_assert!(!a || *b);
        }
    }

    #[test]
    fn number_peaks_unchanged_by_increasing_affine_map(
        x in prop::collection::vec(-10.0f64..10.0, 7..60),
        n in 1usize..4,
        scale in 0.1f64..10.0,
        offset in -5.0f64..5.0,
    ) {
        let y: Vec<f64> = x.iter().map(|v| v * scale + offset).collect();
        let a = number_peaks(&x, n).unwrap();
        prop_assert_eq!(a, number_peaks(&y, n).unwrap());
        prop_assert!(a <= x.len() / (n + 1) + 1);
    }

    #[test]
    fn chunks_partition_the_series(len in 0usize..200, k in 1usize..15) {
        let b = chunk_bounds(len, k);
        prop_assert_eq!(b.len(), k);
        prop_assert_eq!(b[0].0, 0);
        prop_assert_eq!(b[k - 1].1, len);
        for w in b.windows(2) {
            prop_assert_eq!(w[0].1, w[1].0);
            prop_assert!(w[0].1 - w[0].0 >= w[1].1 - w[1].0);
        }
    }

    #[test]
    fn energy_ratios_sum_to_one(x in prop::collection::vec(-1e3f64..1e3, 10..80)) {
        prop_assume!(x.iter().any(|v| *v != 0.0));
        let total: f64 = (0..10).map(|i| energy_ratio_by_chunks(&x, 10, i).0).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn interpolation_is_exact_for_log_linear_spectra() {
    let freq = log_space(1.0, 1e6, 17);
    let z: Vec<_> = freq
        .iter()
        .map(|f: &f64| num_complex::Complex64::new(3.0 + 2.0 * f.log10(), -0.5 * f.log10()))
        .collect();
    let s = ecmkit::circuit::Spectrum::new(freq, z).unwrap();
    let grid = CommonGrid::default();
    let out = interpolate(&s, &grid).unwrap();
    assert!(!out.extrapolated);
    for (f, z) in grid.freq().iter().zip(out.spectrum.z()) {
        assert!((z.re - (3.0 + 2.0 * f.log10())).abs() < 1e-12);
        assert!((z.im + 0.5 * f.log10()).abs() < 1e-12);
    }
}

#[test]
fn single_and_double_precision_features_agree() {
    let m = parse_circuit("L-R-RCPE").unwrap();
    let p = [1e-6, 10.0, 200.0, 0.85, 1e-5];
    let freq = CommonGrid::<f64>::default().freq().to_vec();
    let s64 = circuit_impedance(&m, &p, &freq).unwrap();
    let p32: Vec<f32> = p.iter().map(|v| *v as f32).collect();
    let f32s: Vec<f32> = freq.iter().map(|v| *v as f32).collect();
    let s32 = circuit_impedance(&m, &p32, &f32s).unwrap();
    let bank = default_bank();
    let a = extract_features(&s64, &bank);
    let b = extract_features(&s32, &bank);
    assert_eq!(a.values.len(), bank.len());
    for ((x, y), d) in a.values.iter().zip(&b.values).zip(&bank) {
        // a 10-lag regression on 30 smooth points is too ill-conditioned for f32
        if d.name().contains("ar_coefficient") {
            continue;
        }
        assert!((x - *y as f64).abs() <= 1e-3 * x.abs().max(1.0), "{}: {x} vs {y}", d.name());
    }
}
