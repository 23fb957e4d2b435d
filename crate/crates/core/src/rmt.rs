//! Seeded random-matrix and Poisson ensembles, with ensemble-averaged
//! spacing statistics and form factors.

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{dsff, moving_average, sff, CurveSeries};
use crate::error::{Error, Result};
use crate::io::fmt;
use crate::rng::substream;
use crate::spectra::{central_window, eig_general_matrix, eig_symmetric_matrix, ComplexSpectrum, RealSpectrum, SpectrumMeta};
use crate::stats::{mean_sem, neighbours, Histogram, RatioSummary};
use crate::unfolding::{rescale_complex_spacings, Procedure, UnfoldedSpectrum, DEFAULT_SIGMA_FACTOR};

pub use crate::stats::Ensemble;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: Ensemble,
    pub n: usize,
    pub realizations: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(kind: Ensemble, n: usize, realizations: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("ensemble size must be at least 2, got {n}")));
        }
        if realizations < 1 {
            return Err(Error::InvalidArgument("need at least one realization".into()));
        }
        Ok(Self { kind, n, realizations, seed })
    }

    fn task(&self) -> String {
        format!("{}-{}", self.kind.name(), self.n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sample {
    Real(RealSpectrum),
    Complex(ComplexSpectrum),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Unfolded {
    Real(UnfoldedSpectrum<f64>),
    Complex(UnfoldedSpectrum<Complex64>),
}

/// One realization, deterministic in (seed, kind, n, index).
pub fn sample_spectrum(spec: &EnsembleSpec, index: u64) -> Result<Sample> {
    let n = spec.n;
    let mut rng = substream(spec.seed, &spec.task(), index);
    let meta = SpectrumMeta { sector: Some(format!("{} realization {index}", spec.kind.name())), ..Default::default() };
    Ok(match spec.kind {
        Ensemble::Goe => {
            let x: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
            let a = Mat::from_fn(n, n, |i, j| 0.5 * (x[i + j * n] + x[j + i * n]));
            let mut s = eig_symmetric_matrix(&a)?;
            s.meta = meta;
            Sample::Real(s)
        }
        Ensemble::Ginue => {
            let scale = std::f64::consts::FRAC_1_SQRT_2;
            let entries: Vec<Complex64> = (0..n * n)
                .map(|_| {
                    let (u, v): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                    Complex64::new(u * scale, v * scale)
                })
                .collect();
            let a = Mat::from_fn(n, n, |i, j| entries[i + j * n]);
            let mut s = eig_general_matrix(&a)?;
            s.meta = meta;
            Sample::Complex(s)
        }
        Ensemble::Poisson1D => {
            let mut e = 0.0;
            let levels = (0..n)
                .map(|_| {
                    let step: f64 = Exp1.sample(&mut rng);
                    e += step;
                    e
                })
                .collect();
            Sample::Real(RealSpectrum::new(levels, meta)?)
        }
        Ensemble::Poisson2D => {
            let side = (n as f64).sqrt();
            let points = (0..n)
                .map(|_| {
                    let (x, y): (f64, f64) = (rng.random(), rng.random());
                    Complex64::new(x * side, y * side)
                })
                .collect();
            Sample::Complex(ComplexSpectrum::new(points, meta)?)
        }
    })
}

/// GOE: staircase fit (degree 10) on the central 60%; GinUE: scaled by 1/√n;
/// Poisson ensembles unchanged.
pub fn unfold_reference(spec: &EnsembleSpec, sample: &Sample) -> Result<Unfolded> {
    match (spec.kind, sample) {
        (Ensemble::Goe, Sample::Real(s)) => Ok(Unfolded::Real(semicircle_unfold(&central_window(s, 0.6)?, spec.n))),
        (Ensemble::Poisson1D, Sample::Real(s)) => Ok(Unfolded::Real(UnfoldedSpectrum::identity(s))),
        (Ensemble::Ginue, Sample::Complex(s)) => {
            Ok(Unfolded::Complex(UnfoldedSpectrum::scaled(s, 1.0 / (spec.n as f64).sqrt())))
        }
        (Ensemble::Poisson2D, Sample::Complex(s)) => Ok(Unfolded::Complex(UnfoldedSpectrum::scaled(s, 1.0))),
        _ => Err(Error::InvalidArgument("sample does not belong to this ensemble".into())),
    }
}

/// N(E) = n F(E/R) with F the semicircle CDF and R = √(2n), the edge for
/// off-diagonal variance 1/2.
fn semicircle_unfold(s: &RealSpectrum, n: usize) -> UnfoldedSpectrum<f64> {
    let radius = (2.0 * n as f64).sqrt();
    let cdf = |x: f64| {
        let x = x.clamp(-1.0, 1.0);
        0.5 + (x * (1.0 - x * x).sqrt() + x.asin()) / std::f64::consts::PI
    };
    UnfoldedSpectrum {
        values: s.levels().iter().map(|&e| n as f64 * cdf(e / radius)).collect(),
        procedure: Procedure::Semicircle { n, radius },
        source: s.meta.clone(),
        warnings: vec![],
    }
}

/// Runs `f` on every realization in parallel; results come back in index order.
pub fn map_realizations<T: Send>(spec: &EnsembleSpec, f: impl Fn(Sample) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..spec.realizations as u64)
        .into_par_iter()
        .map(|i| sample_spectrum(spec, i).and_then(&f))
        .collect()
}

/// Nearest-neighbour spacings of one realization, normalised the way the
/// reference tables are: unfolded level spacings for real ensembles,
/// density-rescaled spacings for GinUE, NN distances scaled to mean 1 for
/// 2D Poisson.
pub fn realization_spacings(spec: &EnsembleSpec, sample: Sample) -> Result<Vec<f64>> {
    match (spec.kind, &sample) {
        (Ensemble::Ginue, Sample::Complex(s)) => Ok(rescale_complex_spacings(s, DEFAULT_SIGMA_FACTOR)?.values),
        (Ensemble::Poisson2D, Sample::Complex(s)) => {
            let raw: Vec<f64> = neighbours(s.points()).iter().map(|nb| nb.nn_dist).collect();
            let mean = raw.iter().sum::<f64>() / raw.len() as f64;
            Ok(raw.iter().map(|r| r / mean).collect())
        }
        _ => match unfold_reference(spec, &sample)? {
            Unfolded::Real(u) => Ok(u.spacings()),
            Unfolded::Complex(_) => unreachable!("real ensembles unfold to real levels"),
        },
    }
}

/// Pooled spacings over all realizations, concatenated in index order.
pub fn ensemble_spacings(spec: &EnsembleSpec) -> Result<Vec<f64>> {
    Ok(map_realizations(spec, |s| realization_spacings(spec, s))?.concat())
}

/// Pooled NNSD over [0, s_max].
pub fn ensemble_nnsd(spec: &EnsembleSpec, bins: usize, s_max: f64) -> Result<Histogram> {
    Histogram::new(&ensemble_spacings(spec)?, 0.0, s_max, bins)
}

/// Reference table text: `# {provenance}` then `s,pdf` rows on bin centres.
pub fn reference_table_csv(spec: &EnsembleSpec, bins: usize, s_max: f64) -> Result<String> {
    let hist = ensemble_nnsd(spec, bins, s_max)?;
    let provenance = serde_json::json!({
        "spec": spec,
        "bins": bins,
        "s_max": s_max,
        "samples": hist.count,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let mut out = format!("# {provenance}\ns,pdf\n");
    for (c, p) in hist.centers().iter().zip(&hist.pdf) {
        out.push_str(&format!("{},{}\n", fmt(*c), fmt(*p)));
    }
    Ok(out)
}

/// ⟨r_k⟩ pooled over realizations of raw (not unfolded) levels.
pub fn ensemble_ratio(spec: &EnsembleSpec, k: usize) -> Result<RatioSummary> {
    let per = map_realizations(spec, |s| match s {
        Sample::Real(s) => Ok(crate::stats::spacing_ratio_samples(s.levels(), k)),
        Sample::Complex(_) => Err(Error::InvalidArgument("r_k needs a real ensemble".into())),
    })?;
    let skipped = per.iter().map(|(_, s)| s).sum();
    let samples: Vec<f64> = per.into_iter().flat_map(|(v, _)| v).collect();
    if samples.is_empty() {
        return Err(Error::Degenerate("no ratio samples".into()));
    }
    let (r_mean, r_sem) = mean_sem(&samples);
    Ok(RatioSummary { k, r_mean, r_sem, count: samples.len(), skipped, cos_mean: None, cos_sem: None })
}

/// Complex spacing ratio pooled over realizations of a complex ensemble.
pub fn ensemble_complex_ratio(spec: &EnsembleSpec) -> Result<RatioSummary> {
    let per = map_realizations(spec, |s| match s {
        Sample::Complex(s) => crate::stats::complex_ratio_samples(s.points()),
        Sample::Real(_) => Err(Error::InvalidArgument("complex ratios need a complex ensemble".into())),
    })?;
    let z: Vec<Complex64> = per.concat();
    let r: Vec<f64> = z.iter().map(|z| z.norm()).collect();
    let c: Vec<f64> = z.iter().map(|z| z.re / z.norm()).collect();
    let (r_mean, r_sem) = mean_sem(&r);
    let (cos_mean, cos_sem) = mean_sem(&c);
    Ok(RatioSummary { k: 1, r_mean, r_sem, count: z.len(), skipped: 0, cos_mean: Some(cos_mean), cos_sem: Some(cos_sem) })
}

fn average_curves(curves: Vec<CurveSeries>, win: f64, tag: &str, spec: &EnsembleSpec, n_kept: usize) -> Result<CurveSeries> {
    let len = curves[0].raw.len();
    let per_point: Vec<Vec<f64>> = (0..len).map(|p| curves.iter().map(|c| c.raw[p]).collect()).collect();
    let (mean, sem): (Vec<f64>, Vec<f64>) = per_point.iter().map(|v| mean_sem(v)).unzip();
    let mut avg = CurveSeries::new(curves[0].abscissa.clone(), mean, tag)
        .with_meta("ensemble", spec.kind.name())
        .with_meta("n", spec.n)
        .with_meta("n_kept", n_kept)
        .with_meta("realizations", spec.realizations)
        .with_meta("seed", spec.seed);
    avg.sem = Some(sem);
    moving_average(&avg, win)
}

/// Ensemble-averaged SFF of unfolded levels (GOE or Poisson1D).
pub fn ensemble_sff(spec: &EnsembleSpec, grid: &[f64], win: f64) -> Result<CurveSeries> {
    let per = map_realizations(spec, |s| match unfold_reference(spec, &s)? {
        Unfolded::Real(u) => Ok((sff(&u.values, grid)?, u.len())),
        Unfolded::Complex(_) => Err(Error::InvalidArgument("SFF baseline needs a real ensemble".into())),
    })?;
    let n_kept = per[0].1;
    average_curves(per.into_iter().map(|(c, _)| c).collect(), win, "sff", spec, n_kept)
}

/// Ensemble-averaged DSFF of unfolded points (GinUE or Poisson2D).
pub fn ensemble_dsff(spec: &EnsembleSpec, grid: &[f64], phi: f64, dphi: f64, n_phi: usize, win: f64) -> Result<CurveSeries> {
    let per = map_realizations(spec, |s| match unfold_reference(spec, &s)? {
        Unfolded::Complex(u) => dsff(&u.values, grid, phi, dphi, n_phi),
        Unfolded::Real(_) => Err(Error::InvalidArgument("DSFF baseline needs a complex ensemble".into())),
    })?;
    average_curves(per, win, "dsff", spec, spec.n).map(|c| c.with_meta("phi", phi).with_meta("dphi", dphi).with_meta("n_phi", n_phi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_deterministic_and_distinct() {
        for kind in Ensemble::ALL {
            let spec = EnsembleSpec::new(kind, 12, 2, 5).unwrap();
            assert_eq!(sample_spectrum(&spec, 0).unwrap(), sample_spectrum(&spec, 0).unwrap());
            assert_ne!(sample_spectrum(&spec, 0).unwrap(), sample_spectrum(&spec, 1).unwrap());
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(EnsembleSpec::new(Ensemble::Goe, 1, 1, 0).is_err());
        assert!(EnsembleSpec::new(Ensemble::Goe, 10, 0, 0).is_err());
    }

    #[test]
    fn poisson1d_unfolds_to_itself() {
        let spec = EnsembleSpec::new(Ensemble::Poisson1D, 50, 1, 9).unwrap();
        let s = sample_spectrum(&spec, 0).unwrap();
        let Sample::Real(r) = &s else { panic!() };
        match unfold_reference(&spec, &s).unwrap() {
            Unfolded::Real(u) => assert_eq!(u.values, r.levels()),
            _ => panic!(),
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let spec = EnsembleSpec::new(Ensemble::Poisson2D, 200, 6, 3).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| ensemble_spacings(&spec)).unwrap();
        let b = four.install(|| ensemble_spacings(&spec)).unwrap();
        assert_eq!(a, b);
    }
}
