use chaoscope::rmt::{ensemble_complex_ratio, EnsembleSpec};
use chaoscope::stats::{
    complex_ratio_samples, complex_spacing_ratio, eta, nnsd, reference_pdf, spacing_ratio_k, spacing_ratio_samples,
    Ensemble, Histogram,
};
use chaoscope::{Complex64, Error};
use faer::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use std::f64::consts::PI;

fn exp_samples(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Exp1.sample(&mut rng)).collect()
}

fn wigner_samples(n: usize, seed: u64) -> Vec<f64> {
    // inverse CDF of (πs/2) e^{−πs²/4}
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (-4.0 / PI * (1.0 - rng.random::<f64>()).ln()).sqrt()).collect()
}

#[test]
fn equal_spacings_fill_one_bin() {
    let h = nnsd(&[1.0; 50], 40).unwrap();
    assert_eq!(h.bin_edges.last(), Some(&4.0));
    assert_eq!(h.pdf.iter().filter(|&&p| p > 0.0).count(), 1);
    assert!((h.integral() - 1.0).abs() < 1e-12);

    let two = nnsd(&[0.3, 1.7], 40).unwrap();
    assert_eq!(two.count, 2);
    assert!((two.integral() - 1.0).abs() < 1e-12);
    assert!(nnsd(&[], 40).is_err());
}

#[test]
fn exponential_histogram_within_three_standard_errors() {
    let n = 100_000;
    let h = nnsd(&exp_samples(n, 1), 40).unwrap();
    assert!((h.integral() - 1.0).abs() < 1e-9);
    for b in 0..h.bins() {
        let (lo, hi) = (h.bin_edges[b], h.bin_edges[b + 1]);
        // exact bin mass of e^{−s}, conditioned on s ≤ s_max
        let total = 1.0 - (-h.bin_edges[h.bins()]).exp();
        let p = ((-lo).exp() - (-hi).exp()) / total;
        let w = hi - lo;
        let se = (p * (1.0 - p) / h.count as f64).sqrt() / w;
        assert!((h.pdf[b] - p / w).abs() <= 3.0 * se + 1e-12, "bin {b}: {} vs {}", h.pdf[b], p / w);
    }
}

#[test]
fn reference_densities_at_origin() {
    assert_eq!(reference_pdf(Ensemble::Poisson1D, 0.0), 1.0);
    assert_eq!(reference_pdf(Ensemble::Goe, 0.0), 0.0);
    assert!((reference_pdf(Ensemble::Goe, 1.0) - PI / 2.0 * (-PI / 4.0).exp()).abs() < 1e-15);
    assert_eq!(reference_pdf(Ensemble::Ginue, 0.0), 0.0);
    // tabulated densities integrate to one
    for kind in [Ensemble::Ginue, Ensemble::Poisson2D] {
        let mass = chaoscope::stats::simpson(|s| reference_pdf(kind, s), 0.0, 8.0, 16_000);
        assert!((mass - 1.0).abs() < 0.01, "{}: {mass}", kind.name());
    }
}

#[test]
fn eta_of_poisson_and_wigner_samples() {
    let poi = eta(&nnsd(&exp_samples(1_000_000, 2), 40).unwrap(), Ensemble::Goe).unwrap();
    assert!(poi < 0.02, "{poi}");
    let goe = eta(&nnsd(&wigner_samples(1_000_000, 3), 40).unwrap(), Ensemble::Goe).unwrap();
    assert!((goe - 1.0).abs() < 0.05, "{goe}");
}

#[test]
fn eta_of_reference_mixture_matches_direct_sum() {
    let bins = 400;
    let s_max = 4.0;
    let w = s_max / bins as f64;
    let poi = |s: f64| (-s).exp();
    let wig = |s: f64| PI * s / 2.0 * (-PI * s * s / 4.0).exp();
    let centers: Vec<f64> = (0..bins).map(|b| (b as f64 + 0.5) * w).collect();
    let hist = Histogram {
        bin_edges: (0..=bins).map(|b| b as f64 * w).collect(),
        pdf: centers.iter().map(|&s| 0.5 * (poi(s) + wig(s))).collect(),
        count: 1,
        overflow: 0,
    };
    let num: f64 = centers.iter().map(|&s| (0.5 * (wig(s) - poi(s))).powi(2) * w).sum();
    // trapezoid rule with a fine step, independent of the library quadrature
    let steps = 400_000;
    let h = 40.0 / steps as f64;
    let den: f64 = (0..=steps)
        .map(|k| {
            let s = k as f64 * h;
            let f = (poi(s) - wig(s)).powi(2);
            if k == 0 || k == steps { f / 2.0 } else { f }
        })
        .sum::<f64>()
        * h;
    let got = eta(&hist, Ensemble::Goe).unwrap();
    assert!((got - num / den).abs() < 1e-8, "{got} vs {}", num / den);
    assert!(matches!(eta(&hist, Ensemble::Poisson1D), Err(Error::InvalidArgument(_))));
}

#[test]
fn spacing_ratio_examples() {
    let even: Vec<f64> = (0..40).map(f64::from).collect();
    for k in [1, 3, 7] {
        assert_eq!(spacing_ratio_k(&even, k).unwrap().r_mean, 1.0);
    }
    let r = spacing_ratio_k(&[0.0, 1.0, 3.0], 1).unwrap();
    assert_eq!((r.r_mean, r.count), (0.5, 1));
    assert!(spacing_ratio_k(&[0.0, 1.0], 1).is_err());
    assert!(spacing_ratio_k(&even, 0).is_err());

    let degenerate = spacing_ratio_k(&[1.0, 1.0, 1.0, 1.0], 1);
    assert!(matches!(degenerate, Err(Error::Degenerate(_))));
    let (samples, skipped) = spacing_ratio_samples(&[0.0, 0.0, 0.0, 1.0], 1);
    assert_eq!((samples, skipped), (vec![0.0], 1));
}

#[test]
fn poisson_spacing_ratio() {
    let mut e = 0.0;
    let levels: Vec<f64> = exp_samples(1_000_000, 4).iter().map(|s| {
        e += s;
        e
    }).collect();
    let r = spacing_ratio_k(&levels, 1).unwrap();
    assert!((r.r_mean - 0.3863).abs() < 0.002, "{}", r.r_mean);
}

#[test]
fn complex_ratio_example() {
    let z = complex_ratio_samples(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)]).unwrap();
    assert!((z[0] - Complex64::new(0.0, -0.5)).norm() < 1e-15);
    assert!((z[0].norm() - 0.5).abs() < 1e-15 && z[0].re.abs() < 1e-15);
    match complex_spacing_ratio(&[Complex64::new(1.0, 1.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0)]) {
        Err(Error::DuplicatePoints(pairs)) => assert_eq!(pairs, vec![(0, 2)]),
        other => panic!("{other:?}"),
    }
    assert!(complex_spacing_ratio(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]).is_err());
}

#[test]
fn uniform_points_complex_ratio() {
    // 10 squares of 10⁴ points each
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut r = Vec::new();
    let mut c = Vec::new();
    for _ in 0..10 {
        let pts: Vec<Complex64> = (0..10_000).map(|_| Complex64::new(rng.random(), rng.random())).collect();
        for z in complex_ratio_samples(&pts).unwrap() {
            r.push(z.norm());
            c.push(z.re / z.norm());
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!((mean(&r) - 2.0 / 3.0).abs() < 0.005, "{}", mean(&r));
    assert!(mean(&c).abs() < 0.005, "{}", mean(&c));
}

/// Ginibre ratios from an independent sampler and a brute-force neighbour search.
fn ginibre_oracle(n: usize, realizations: usize, seed: u64) -> (f64, f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut r, mut c) = (Vec::new(), Vec::new());
    for _ in 0..realizations {
        let entries: Vec<Complex64> = (0..n * n)
            .map(|_| {
                let u: f64 = rng.sample(StandardNormal);
                let v: f64 = rng.sample(StandardNormal);
                Complex64::new(u, v) / 2f64.sqrt()
            })
            .collect();
        let m = Mat::from_fn(n, n, |i, j| entries[i * n + j]);
        let ev = m.eigenvalues().unwrap();
        for (i, &p) in ev.iter().enumerate() {
            let mut d: Vec<(f64, usize)> = ev.iter().enumerate().filter(|&(j, _)| j != i).map(|(j, q)| ((q - p).norm(), j)).collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0));
            let z = (ev[d[0].1] - p) / (ev[d[1].1] - p);
            r.push(z.norm());
            c.push(z.re / z.norm());
        }
    }
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        (m, (var / v.len() as f64).sqrt())
    };
    let (rm, rs) = stats(&r);
    let (cm, cs) = stats(&c);
    (rm, rs, cm, cs)
}

#[test]
fn ginibre_complex_ratio_matches_independent_sampler() {
    let n = 2000;
    let lib = ensemble_complex_ratio(&EnsembleSpec::new(Ensemble::Ginue, n, 20, 21).unwrap()).unwrap();
    let (rm, rs, cm, cs) = ginibre_oracle(n, 8, 77);
    let tol_r = 2.0 * (lib.r_sem.powi(2) + rs * rs).sqrt();
    let tol_c = 2.0 * (lib.cos_sem.unwrap().powi(2) + cs * cs).sqrt();
    assert!((lib.r_mean - rm).abs() <= tol_r, "r {} vs {rm} ± {tol_r}", lib.r_mean);
    assert!((lib.cos_mean.unwrap() - cm).abs() <= tol_c, "cos {} vs {cm} ± {tol_c}", lib.cos_mean.unwrap());
    assert!(lib.cos_mean.unwrap() < -0.2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ratios_are_affine_invariant(
        raw in prop::collection::vec(0.001f64..2.0, 12..60),
        a in 0.01f64..100.0,
        b in -100.0f64..100.0,
        k in 1usize..4,
    ) {
        let mut e = 0.0;
        let levels: Vec<f64> = raw.iter().map(|s| { e += s; e }).collect();
        let mapped: Vec<f64> = levels.iter().map(|x| a * x + b).collect();
        let (r0, r1) = (spacing_ratio_k(&levels, k).unwrap(), spacing_ratio_k(&mapped, k).unwrap());
        prop_assert!((r0.r_mean - r1.r_mean).abs() < 1e-9);
        let (samples, _) = spacing_ratio_samples(&levels, k);
        prop_assert!(samples.iter().all(|r| (0.0..=1.0).contains(r)));
    }

    #[test]
    fn complex_ratios_are_similarity_invariant(
        raw in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 3..40),
        angle in 0.0f64..std::f64::consts::TAU,
        scale in 0.05f64..20.0,
        shift in (-5.0f64..5.0, -5.0f64..5.0),
    ) {
        let pts: Vec<Complex64> = raw.iter().map(|&(x, y)| Complex64::new(x, y)).collect();
        let rot = Complex64::from_polar(scale, angle);
        let moved: Vec<Complex64> = pts.iter().map(|p| p * rot + Complex64::new(shift.0, shift.1)).collect();
        if let (Ok(a), Ok(b)) = (complex_spacing_ratio(&pts), complex_spacing_ratio(&moved)) {
            prop_assert!((a.r_mean - b.r_mean).abs() < 1e-10);
            prop_assert!((a.cos_mean.unwrap() - b.cos_mean.unwrap()).abs() < 1e-10);
            prop_assert!(complex_ratio_samples(&pts).unwrap().iter().all(|z| z.norm() <= 1.0 + 1e-12));
        }
    }
}
