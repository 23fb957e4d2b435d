//! Time-domain indicators: spectral form factors, moving averages, coherent
//! Gibbs states and the dissipative survival probability.

mod dspf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dspf::{dspf, default_backend, DspfBackend, DIRECT_STATE_CAP, DEFAULT_N_TRAJ};

pub const DEFAULT_WINDOW: f64 = 0.5;
pub const DEFAULT_PHI: f64 = 3.0 * std::f64::consts::FRAC_PI_4;
pub const DEFAULT_DPHI: f64 = std::f64::consts::PI / 16.0;
pub const DEFAULT_N_PHI: usize = 8;

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
        }
    }
}

/// `t = 0` followed by [`log_grid`].
pub fn log_grid_with_zero(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(log_grid(n, lo, hi));
    g
}

/// Default SFF/DSFF grid: 0 plus 2000 points over [1e−2, 1e4].
pub fn default_sff_grid() -> Vec<f64> {
    log_grid_with_zero(2000, 1e-2, 1e4)
}

/// Default DSPF grid: 0 plus 200 points over [1e−2, 1e2].
pub fn default_dspf_grid() -> Vec<f64> {
    log_grid_with_zero(200, 1e-2, 1e2)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
        return Err(Error::InvalidArgument("time grid must be non-negative and strictly increasing".into()));
    }
    Ok(())
}

/// A sampled curve with optional smoothed channel and standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub abscissa: Vec<f64>,
    pub raw: Vec<f64>,
    pub smoothed: Option<Vec<f64>>,
    pub sem: Option<Vec<f64>>,
    pub meta: serde_json::Map<String, serde_json::Value>,
}

impl CurveSeries {
    pub fn new(abscissa: Vec<f64>, raw: Vec<f64>, tag: &str) -> Self {
        let mut meta = serde_json::Map::new();
        meta.insert("definition".into(), tag.into());
        Self { abscissa, raw, smoothed: None, sem: None, meta }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    /// The smoothed channel if present, else the raw one.
    pub fn best(&self) -> &[f64] {
        self.smoothed.as_deref().unwrap_or(&self.raw)
    }

    /// Mean of `values` over abscissa in [hi/10, hi], hi the last abscissa.
    pub fn last_decade_mean(&self, values: &[f64]) -> f64 {
        let hi = *self.abscissa.last().expect("non-empty curve");
        let picked: Vec<f64> = self
            .abscissa
            .iter()
            .zip(values)
            .filter(|(t, _)| **t >= hi / 10.0)
            .map(|(_, v)| *v)
            .collect();
        picked.iter().sum::<f64>() / picked.len() as f64
    }

    /// Minimum of `values` over abscissa in [from, to].
    pub fn min_between(&self, values: &[f64], from: f64, to: f64) -> f64 {
        self.abscissa
            .iter()
            .zip(values)
            .filter(|(t, _)| **t >= from && **t <= to)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min)
    }
}

/// |Σ_n e^{i p_n t}|² / 𝒩² for each t.
fn form_factor(phases: &[f64], grid: &[f64]) -> Vec<f64> {
    let n2 = (phases.len() * phases.len()) as f64;
    grid.par_iter()
        .map(|&t| {
            let (mut c, mut s) = (0.0, 0.0);
            for &p in phases {
                let (sn, cs) = (p * t).sin_cos();
                c += cs;
                s += sn;
            }
            (c * c + s * s) / n2
        })
        .collect()
}

/// SFF(t) = |Σ e^{i𝓔_n t}|² / 𝒩².
pub fn sff(levels: &[f64], grid: &[f64]) -> Result<CurveSeries> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("SFF needs at least one level".into()));
    }
    check_grid(grid)?;
    let mut raw = form_factor(levels, grid);
    for (t, v) in grid.iter().zip(raw.iter_mut()) {
        if *t == 0.0 {
            *v = 1.0;
        }
    }
    Ok(CurveSeries::new(grid.to_vec(), raw, "sff").with_meta("n", levels.len()))
}

/// Centred moving average with window |τ − t| < win·t/2; each point always
/// includes itself. Results are clamped to the window's raw min/max.
pub fn moving_average(c: &CurveSeries, win: f64) -> Result<CurveSeries> {
    if !(win > 0.0) {
        return Err(Error::InvalidArgument(format!("window must be > 0, got {win}")));
    }
    let x = &c.abscissa;
    let smoothed = x
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let half = win * t.abs() / 2.0;
            let lo = x.partition_point(|&tau| tau <= t - half).min(i);
            let hi = x.partition_point(|&tau| tau < t + half).max(i + 1);
            let w = &c.raw[lo..hi];
            let mean = w.iter().sum::<f64>() / w.len() as f64;
            let (mn, mx) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            mean.clamp(mn, mx)
        })
        .collect();
    let mut out = c.clone();
    out.smoothed = Some(smoothed);
    out.meta.insert("window".into(), win.into());
    Ok(out)
}

/// `n` angles evenly spanning [φ − dφ/2, φ + dφ/2] (just φ when n = 1).
pub fn dsff_angles(phi: f64, dphi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![phi];
    }
    (0..n).map(|k| phi - dphi / 2.0 + dphi * k as f64 / (n - 1) as f64).collect()
}

/// DSFF(τ, φ) = |Σ e^{i(x̃ cos φ + ỹ sin φ)τ}|² / 𝒩², averaged over angles.
pub fn dsff(points: &[Complex64], grid: &[f64], phi: f64, dphi: f64, n_phi: usize) -> Result<CurveSeries> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("DSFF needs at least one point".into()));
    }
    if n_phi == 0 {
        return Err(Error::InvalidArgument("DSFF needs at least one angle".into()));
    }
    check_grid(grid)?;
    let angles = dsff_angles(phi, dphi, n_phi);
    let mut acc = vec![0.0; grid.len()];
    for &a in &angles {
        let (sn, cs) = a.sin_cos();
        let phases: Vec<f64> = points.iter().map(|z| z.re * cs + z.im * sn).collect();
        for (v, f) in acc.iter_mut().zip(form_factor(&phases, grid)) {
            *v += f;
        }
    }
    let raw = acc
        .iter()
        .zip(grid)
        .map(|(v, &t)| if t == 0.0 { 1.0 } else { v / angles.len() as f64 })
        .collect();
    Ok(CurveSeries::new(grid.to_vec(), raw, "dsff")
        .with_meta("n", points.len())
        .with_meta("phi", phi)
        .with_meta("dphi", dphi)
        .with_meta("n_phi", n_phi))
}

/// Coherent Gibbs state amplitudes over the energy eigenbasis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentGibbsState {
    pub amplitudes: Vec<f64>,
    pub beta: f64,
}

/// e^{−βE_n/2}/√Z, evaluated with E_n − E_min for stability.
pub fn cgs(levels: &[f64], beta: f64) -> Result<CoherentGibbsState> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be finite and >= 0, got {beta}")));
    }
    if levels.is_empty() {
        return Err(Error::InvalidArgument("coherent Gibbs state needs at least one level".into()));
    }
    let e_min = levels.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = levels.iter().map(|e| (-beta * (e - e_min) / 2.0).exp()).collect();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(CoherentGibbsState { amplitudes: w.iter().map(|x| x / norm).collect(), beta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sff_examples() {
        let g = [0.0, 0.5, 1.0, 7.0];
        assert!(sff(&[3.2], &g).unwrap().raw.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let two = sff(&[0.0, PI], &[0.0, 1.0]).unwrap();
        assert_eq!(two.raw[0], 1.0);
        assert!(two.raw[1].abs() < 1e-30);
    }

    #[test]
    fn default_grids() {
        let g = default_sff_grid();
        assert_eq!(g.len(), 2001);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 1e-2).abs() < 1e-15 && (g[2000] - 1e4).abs() < 1e-9);
        assert_eq!(default_dspf_grid().len(), 201);
    }

    #[test]
    fn moving_average_constant_and_identity() {
        let x = log_grid(50, 1e-2, 1e2);
        let c = CurveSeries::new(x.clone(), vec![0.3; 50], "t");
        assert!(moving_average(&c, 0.5).unwrap().smoothed.unwrap().iter().all(|&v| v == 0.3));
        let raw: Vec<f64> = (0..50).map(|k| (k as f64).sin()).collect();
        let c = CurveSeries::new(x, raw.clone(), "t");
        assert_eq!(moving_average(&c, 1e-6).unwrap().smoothed.unwrap(), raw);
        assert!(moving_average(&c, 0.0).is_err());
    }

    #[test]
    fn dsff_examples() {
        let g = [0.0, 0.3, 2.0];
        let pts = [Complex64::new(1.0, 0.0), Complex64::new(-2.0, 0.0), Complex64::new(0.3, 0.0)];
        let d = dsff(&pts, &g, PI / 2.0, 0.0, 1).unwrap();
        assert!(d.raw.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let single = dsff(&[Complex64::new(0.4, -1.0)], &g, DEFAULT_PHI, DEFAULT_DPHI, DEFAULT_N_PHI).unwrap();
        assert!(single.raw.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let a = dsff_angles(1.0, 0.2, 3);
        assert!((a[0] - 0.9).abs() < 1e-15 && (a[2] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn cgs_limits() {
        let e = [0.0, 1.0, 2.5, 4.0];
        let s = cgs(&e, 0.0).unwrap();
        assert!(s.amplitudes.iter().all(|&a| (a - 0.5).abs() < 1e-15));
        let cold = cgs(&e, 10.0).unwrap();
        assert!(cold.amplitudes[0].powi(2) >= 0.99);
        let huge = cgs(&[1e6, 1e6 + 1.0], 1e3).unwrap();
        assert!((huge.amplitudes.iter().map(|a| a * a).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(cgs(&e, -1.0).is_err());
    }
}
