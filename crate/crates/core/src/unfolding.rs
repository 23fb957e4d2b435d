//! Unfolding: polynomial staircase fits for real levels, Gaussian-density
//! spacing rescale and power-map unfolding for complex spectra.

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{ComplexSpectrum, RealSpectrum, SpectrumMeta};
use crate::stats::neighbours;

pub const DEFAULT_DEGREE: usize = 10;
pub const DEFAULT_SIGMA_FACTOR: f64 = 4.5;
/// Grid resolution per axis for locating the density maximum.
pub const Z0_GRID: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Procedure {
    PolyStaircase { degree: usize },
    /// Values are scaled nearest-neighbour spacings, not eigenvalues.
    DensityRescale { sigma_factor: f64, sigma: f64 },
    PowerMap { a: Complex64, nu: f64, z0: Complex64, branch: String },
    Scale { factor: f64 },
    /// Exact semicircle staircase of radius `radius` for `n` levels.
    Semicircle { n: usize, radius: f64 },
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedSpectrum<P> {
    pub values: Vec<P>,
    pub procedure: Procedure,
    pub source: SpectrumMeta,
    pub warnings: Vec<String>,
}

impl<P> UnfoldedSpectrum<P> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl UnfoldedSpectrum<f64> {
    /// Unchanged levels, for spectra that already have unit mean spacing.
    pub fn identity(s: &RealSpectrum) -> Self {
        Self {
            values: s.levels().to_vec(),
            procedure: Procedure::Identity,
            source: s.meta.clone(),
            warnings: vec![],
        }
    }

    /// Nearest-neighbour spacings. For density-rescaled data the values
    /// already are spacings.
    pub fn spacings(&self) -> Vec<f64> {
        match self.procedure {
            Procedure::DensityRescale { .. } => self.values.clone(),
            _ => self.values.windows(2).map(|w| w[1] - w[0]).collect(),
        }
    }
}

impl UnfoldedSpectrum<Complex64> {
    pub fn scaled(s: &ComplexSpectrum, factor: f64) -> Self {
        Self {
            values: s.points().iter().map(|z| z * factor).collect(),
            procedure: Procedure::Scale { factor },
            source: s.meta.clone(),
            warnings: vec![],
        }
    }
}

/// Σ c_k T_k(x) by Clenshaw recurrence.
fn chebyshev_eval(coef: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coef.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + coef[0]
}

/// Least-squares fit of the counting staircase N(E_i) = i in a Chebyshev
/// basis over [E_min, E_max]; returns the fitted map.
fn fit_staircase(levels: &[f64], degree: usize) -> Result<impl Fn(f64) -> f64> {
    let n = levels.len();
    let (lo, hi) = (levels[0], levels[n - 1]);
    if !(hi > lo) {
        return Err(Error::Degenerate("all levels coincide".into()));
    }
    let (mid, half) = ((hi + lo) / 2.0, (hi - lo) / 2.0);
    let x = move |e: f64| (e - mid) / half;
    let mut design = Mat::<f64>::zeros(n, degree + 1);
    for (i, &e) in levels.iter().enumerate() {
        let t = x(e);
        let (mut prev, mut cur) = (1.0, t);
        design[(i, 0)] = 1.0;
        for k in 1..=degree {
            design[(i, k)] = cur;
            let next = 2.0 * t * cur - prev;
            prev = cur;
            cur = next;
        }
    }
    let rhs = Mat::from_fn(n, 1, |i, _| (i + 1) as f64);
    let sol = design.qr().solve_lstsq(&rhs);
    let coef: Vec<f64> = (0..=degree).map(|k| sol[(k, 0)]).collect();
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numerical(format!("degree {degree} staircase fit is ill-conditioned; try a lower degree")));
    }
    Ok(move |e: f64| chebyshev_eval(&coef, x(e)))
}

/// Polynomial staircase unfolding: 𝓔_i = poly(E_i).
pub fn unfold_real(s: &RealSpectrum, degree: usize) -> Result<UnfoldedSpectrum<f64>> {
    if degree == 0 {
        return Err(Error::InvalidArgument("unfolding degree must be at least 1".into()));
    }
    let levels = s.levels();
    let n = levels.len();
    if n < degree + 10 {
        return Err(Error::InvalidArgument(format!(
            "degree {degree} unfolding needs at least {} levels, got {n}",
            degree + 10
        )));
    }
    let poly = fit_staircase(levels, degree)?;

    let samples = 10 * n;
    let (lo, hi) = (levels[0], levels[n - 1]);
    let mut prev = poly(lo);
    let slack = 1e-9 * n as f64;
    for k in 1..samples {
        let e = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
        let v = poly(e);
        if v < prev - slack {
            return Err(Error::NonMonotoneFit { degree });
        }
        prev = v;
    }
    Ok(UnfoldedSpectrum {
        values: levels.iter().map(|&e| poly(e)).collect(),
        procedure: Procedure::PolyStaircase { degree },
        source: s.meta.clone(),
        warnings: vec![],
    })
}

/// Mean nearest-neighbour spacing over the central `fraction` of `values`.
pub fn interior_mean_spacing(values: &[f64], fraction: f64) -> f64 {
    let n = values.len();
    let keep = ((fraction * n as f64).ceil() as usize).clamp(2, n);
    let start = (n - keep) / 2;
    let w = &values[start..start + keep];
    (w[keep - 1] - w[0]) / (keep - 1) as f64
}

/// Gaussian kernel density (1/2πσ²𝓜) Σ exp(−|z − z_i|²/2σ²).
pub fn gaussian_density(points: &[Complex64], sigma: f64, z: Complex64) -> f64 {
    let inv = 1.0 / (2.0 * sigma * sigma);
    let sum: f64 = points.iter().map(|p| (-(p - z).norm_sqr() * inv).exp()).sum();
    sum * inv / (std::f64::consts::PI * points.len() as f64)
}

fn raw_nn_spacings(points: &[Complex64]) -> Vec<f64> {
    neighbours(points).iter().map(|nb| nb.nn_dist).collect()
}

/// Scaled spacings s′_i = s_i √ρ_avg(λ_i) / s̄ with mean exactly 1.
///
/// σ = `sigma_factor` × (mean raw spacing). Coincident points give zero
/// spacings, which are kept and reported in `warnings`.
pub fn rescale_complex_spacings(s: &ComplexSpectrum, sigma_factor: f64) -> Result<UnfoldedSpectrum<f64>> {
    let points = s.points();
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!("density rescale needs at least 2 points, got {}", points.len())));
    }
    if !(sigma_factor > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma_factor must be > 0, got {sigma_factor}")));
    }
    let raw = raw_nn_spacings(points);
    let mean_raw = raw.iter().sum::<f64>() / raw.len() as f64;
    if !(mean_raw > 0.0) {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let sigma = sigma_factor * mean_raw;
    let weighted: Vec<f64> = points
        .par_iter()
        .zip(raw.par_iter())
        .map(|(&z, &sp)| sp * gaussian_density(points, sigma, z).sqrt())
        .collect();
    let s_bar = weighted.iter().sum::<f64>() / weighted.len() as f64;
    let mut warnings = Vec::new();
    let zeros = raw.iter().filter(|&&v| v == 0.0).count();
    if zeros > 0 {
        warnings.push(format!("{zeros} coincident points kept as zero spacings"));
    }
    Ok(UnfoldedSpectrum {
        values: weighted.iter().map(|w| w / s_bar).collect(),
        procedure: Procedure::DensityRescale { sigma_factor, sigma },
        source: s.meta.clone(),
        warnings,
    })
}

/// Where the power map is centred.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Center {
    Auto,
    At(Complex64),
}

/// Maximiser of the Gaussian density over a 200×200 grid spanning the
/// bounding box of `points`; σ = 4.5 × mean NN spacing.
pub fn density_maximum(points: &[Complex64]) -> Result<Complex64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("density maximum needs at least 2 points".into()));
    }
    let raw = raw_nn_spacings(points);
    let mean_raw = raw.iter().sum::<f64>() / raw.len() as f64;
    if !(mean_raw > 0.0) {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let sigma = DEFAULT_SIGMA_FACTOR * mean_raw;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in points {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(z.im);
        y1 = y1.max(z.im);
    }
    let axis = |a: f64, b: f64, k: usize| a + (b - a) * k as f64 / (Z0_GRID - 1) as f64;
    let best = (0..Z0_GRID * Z0_GRID)
        .into_par_iter()
        .map(|k| {
            let z = Complex64::new(axis(x0, x1, k % Z0_GRID), axis(y0, y1, k / Z0_GRID));
            (gaussian_density(points, sigma, z), k, z)
        })
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .expect("non-empty grid");
    Ok(best.2)
}

/// (z − z0)^ν with arg(z − z0) ∈ (0, 2π]; the positive real axis maps to arg 2π.
pub fn branch_power(w: Complex64, nu: f64) -> Complex64 {
    if w == Complex64::new(0.0, 0.0) {
        return w;
    }
    let mut arg = w.im.atan2(w.re);
    if arg <= 0.0 {
        arg += 2.0 * std::f64::consts::PI;
    }
    Complex64::from_polar(w.norm().powf(nu), nu * arg)
}

/// z̃_n = A (z_n − z0)^ν.
pub fn power_map_unfold(s: &ComplexSpectrum, a: Complex64, nu: f64, center: Center) -> Result<UnfoldedSpectrum<Complex64>> {
    if nu == 0.0 || !nu.is_finite() {
        return Err(Error::InvalidArgument(format!("power-map exponent must be finite and non-zero, got {nu}")));
    }
    let z0 = match center {
        Center::At(z) => z,
        Center::Auto => density_maximum(s.points())?,
    };
    let values: Vec<Complex64> = s.points().iter().map(|&z| a * branch_power(z - z0, nu)).collect();
    if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Degenerate("power map produced non-finite values".into()));
    }
    Ok(UnfoldedSpectrum {
        values,
        procedure: Procedure::PowerMap { a, nu, z0, branch: "arg in (0, 2pi]".into() },
        source: s.meta.clone(),
        warnings: vec![],
    })
}
