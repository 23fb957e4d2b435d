use chaoscope::spectra::{ComplexSpectrum, RealSpectrum, SpectrumMeta};
use chaoscope::stats::neighbours;
use chaoscope::unfolding::{
    branch_power, interior_mean_spacing, power_map_unfold, rescale_complex_spacings, unfold_real, Center,
};
use chaoscope::{Complex64, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn real(levels: Vec<f64>) -> RealSpectrum {
    RealSpectrum::new(levels, SpectrumMeta::default()).unwrap()
}

fn complex(points: Vec<Complex64>) -> ComplexSpectrum {
    ComplexSpectrum::new(points, SpectrumMeta::default()).unwrap()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn affine_levels_unfold_exactly() {
    let u = unfold_real(&real((1..=100).map(|k| 3.0 * k as f64 - 7.0).collect()), 1).unwrap();
    assert!(u.spacings().iter().all(|s| (s - 1.0).abs() < 1e-9));
    assert!(matches!(unfold_real(&real((1..=100).map(f64::from).collect()), 0), Err(Error::InvalidArgument(_))));
    assert!(unfold_real(&real((1..=15).map(f64::from).collect()), 10).is_err());
}

#[test]
fn quadratic_density_unfolds_to_unit_spacing() {
    // density ρ(E) ∝ E² on [1, 2]: inverse-CDF sampling E = (1 + 7U)^{1/3}
    let n = 4000;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let levels = sorted((0..n).map(|_| (1.0 + 7.0 * rng.random::<f64>()).cbrt()).collect());
    let u = unfold_real(&real(levels), 10).unwrap();
    assert!(u.values.windows(2).all(|w| w[1] > w[0]));
    let mean = interior_mean_spacing(&u.values, 0.9);
    assert!((mean - 1.0).abs() < 0.02, "{mean}");
}

#[test]
fn oscillating_fit_is_rejected() {
    // a dense cluster and a gap force a high-degree staircase fit to overshoot
    let mut levels: Vec<f64> = (0..30).map(|k| k as f64 * 1e-2).collect();
    levels.extend((0..30).map(|k| 10.0 + k as f64 * 1e-2));
    match unfold_real(&real(levels), 6) {
        Err(Error::NonMonotoneFit { degree }) => assert_eq!(degree, 6),
        other => panic!("{other:?}"),
    }
}

#[test]
fn density_rescale_examples() {
    let two = rescale_complex_spacings(&complex(vec![Complex64::new(0.0, 0.0), Complex64::new(3.0, 4.0)]), 4.5).unwrap();
    assert_eq!(two.values.len(), 2);
    assert!(two.values.iter().all(|s| (s - 1.0).abs() < 1e-12));

    // jittered square grid: density is flat in the bulk so scaled spacings track raw ones
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let side = 40;
    let pts: Vec<Complex64> = (0..side * side)
        .map(|k| Complex64::new((k % side) as f64 + 0.3 * rng.random::<f64>(), (k / side) as f64 + 0.3 * rng.random::<f64>()))
        .collect();
    let spectrum = complex(pts);
    let pts = spectrum.points().to_vec();
    let out = rescale_complex_spacings(&spectrum, 4.5).unwrap();
    let mean: f64 = out.values.iter().sum::<f64>() / out.values.len() as f64;
    assert!((mean - 1.0).abs() < 1e-12);
    let raw: Vec<f64> = neighbours(&pts).iter().map(|nb| nb.nn_dist).collect();
    let raw_mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let (lo_edge, hi_edge) = (13.0, side as f64 - 13.0);
    let interior = |k: usize| {
        let p = pts[k];
        p.re > lo_edge && p.re < hi_edge && p.im > lo_edge && p.im < hi_edge
    };
    let ratio: Vec<f64> = (0..pts.len()).filter(|&k| interior(k)).map(|k| out.values[k] / (raw[k] / raw_mean)).collect();
    let lo = ratio.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratio.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(hi / lo < 1.01, "{lo} {hi}");
}

#[test]
fn duplicate_points_are_flagged() {
    let p = vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.5)];
    let out = rescale_complex_spacings(&complex(p), 4.5).unwrap();
    assert_eq!(out.values.iter().filter(|&&s| s == 0.0).count(), 2);
    assert_eq!(out.warnings.len(), 1);
}

#[test]
fn power_map_examples() {
    let z0 = Complex64::new(0.3, -0.2);
    let s = complex(vec![z0, Complex64::new(-1.0, 0.0) + z0]);
    let out = power_map_unfold(&s, Complex64::new(0.0, -1.0), 1.0 / 3.0, Center::At(z0)).unwrap();
    // points are stored sorted by real part
    assert_eq!(out.values[1], Complex64::new(0.0, 0.0));
    let want = Complex64::from_polar(1.0, -std::f64::consts::PI / 6.0);
    assert!((out.values[0] - want).norm() < 1e-12);

    let pts: Vec<Complex64> = (0..20).map(|k| Complex64::new((k as f64).cos(), (2.0 * k as f64).sin())).collect();
    let spectrum = complex(pts);
    let pts = spectrum.points().to_vec();
    let id = power_map_unfold(&spectrum, Complex64::new(1.0, 0.0), 1.0, Center::At(Complex64::new(0.0, 0.0))).unwrap();
    for (a, b) in id.values.iter().zip(&pts) {
        assert!((a - b).norm() < 1e-12);
    }
    let d_raw: Vec<f64> = neighbours(&pts).iter().map(|n| n.nn_dist).collect();
    let d_map: Vec<f64> = neighbours(&id.values).iter().map(|n| n.nn_dist).collect();
    for (a, b) in d_raw.iter().zip(&d_map) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(power_map_unfold(&complex(pts), Complex64::new(1.0, 0.0), 0.0, Center::Auto).is_err());
}

#[test]
fn branch_cut_on_positive_axis() {
    // arg(1) is taken as 2π
    let w = branch_power(Complex64::new(1.0, 0.0), 0.5);
    assert!((w - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    let just_above = branch_power(Complex64::new(1.0, 1e-12), 0.5);
    assert!((just_above - Complex64::new(1.0, 0.0)).norm() < 1e-9);
}

#[test]
fn auto_center_finds_the_cluster() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pts: Vec<Complex64> = (0..300).map(|_| Complex64::new(rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0)).collect();
    pts.extend((0..300).map(|_| Complex64::new(7.0 + 0.3 * rng.random::<f64>(), 2.0 + 0.3 * rng.random::<f64>())));
    let out = power_map_unfold(&complex(pts), Complex64::new(1.0, 0.0), 1.0, Center::Auto).unwrap();
    match out.procedure {
        chaoscope::unfolding::Procedure::PowerMap { z0, .. } => {
            assert!((z0 - Complex64::new(7.15, 2.15)).norm() < 0.5, "{z0}")
        }
        p => panic!("{p:?}"),
    }
}

fn point_set() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 5..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rescale_is_isometry_and_scale_invariant(
        raw in point_set(),
        shift in (-10.0f64..10.0, -10.0f64..10.0),
        angle in 0.0f64..std::f64::consts::TAU,
        scale in 0.1f64..10.0,
    ) {
        let pts: Vec<Complex64> = raw.iter().map(|&(x, y)| Complex64::new(x, y)).collect();
        let base = rescale_complex_spacings(&complex(pts.clone()), 4.5).unwrap().values;
        let rot = Complex64::from_polar(scale, angle);
        let moved: Vec<Complex64> = pts.iter().map(|p| p * rot + Complex64::new(shift.0, shift.1)).collect();
        let other = rescale_complex_spacings(&complex(moved), 4.5).unwrap().values;
        for (a, b) in sorted(base).iter().zip(sorted(other)) {
            prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn unfolding_preserves_order(raw in prop::collection::vec(0.01f64..1.0, 30..80)) {
        let mut e = 0.0;
        let levels: Vec<f64> = raw.iter().map(|s| { e += s; e }).collect();
        if let Ok(u) = unfold_real(&real(levels), 3) {
            prop_assert!(u.values.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
