//! Eigensolves, cutoff-convergence filtering and spectral windows.

use std::cmp::Ordering;
use std::path::Path;

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{write_csv, write_json};
use crate::model::{tc_sector_hamiltonian, Entries, ModelParams, OperatorMatrix};

/// Default absolute matching tolerance for closed-system spectra.
pub const DEFAULT_CLOSED_TOL: f64 = 1e-6;
/// Default matching tolerance for Liouvillian spectra, in units of γ.
pub const DEFAULT_OPEN_TOL_PER_GAMMA: f64 = 1e-4;
/// Default α in the selection window Re λ ∈ [−αγM, 0].
pub const DEFAULT_ALPHA: f64 = 0.5;
/// Default kept fraction for [`central_window`].
pub const DEFAULT_FRACTION: f64 = 0.6;
/// |λ| below this counts as the steady-state eigenvalue.
pub const ZERO_MODE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub params: Option<ModelParams>,
    pub sector: Option<String>,
    /// Photon cutoffs involved, ascending; the last one produced the values.
    pub cutoffs: Vec<u32>,
    /// Selection steps applied, in order.
    pub selection: Vec<String>,
    pub warnings: Vec<String>,
}

/// Eigenvalue point: real levels or complex Liouvillian eigenvalues.
pub trait SpectralPoint: Copy + Send + Sync + std::fmt::Debug {
    fn distance(&self, other: &Self) -> f64;
    fn order(&self, other: &Self) -> Ordering;
    fn is_finite(&self) -> bool;
    /// Coordinate used to prune candidate matches.
    fn key(&self) -> f64;
}

impl SpectralPoint for f64 {
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
    fn order(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn key(&self) -> f64 {
        *self
    }
}

impl SpectralPoint for Complex64 {
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
    fn order(&self, other: &Self) -> Ordering {
        self.re.total_cmp(&other.re).then(self.im.total_cmp(&other.im))
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn key(&self) -> f64 {
        self.re
    }
}

/// Sorted set of eigenvalues with provenance.
///
/// Real spectra are ascending; complex spectra are sorted by (Re, Im).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum<P> {
    values: Vec<P>,
    pub meta: SpectrumMeta,
}

pub type RealSpectrum = Spectrum<f64>;
pub type ComplexSpectrum = Spectrum<Complex64>;

impl<P: SpectralPoint> Spectrum<P> {
    pub fn new(mut values: Vec<P>, meta: SpectrumMeta) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::EigenSolve(format!("non-finite eigenvalue at index {i}: {:?}", values[i])));
        }
        values.sort_by(|a, b| a.order(b));
        Ok(Self { values, meta })
    }

    pub fn values(&self) -> &[P] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cutoff that produced these values, if recorded.
    pub fn cutoff(&self) -> Option<u32> {
        self.meta.cutoffs.last().copied()
    }

    fn with_values(&self, values: Vec<P>, step: String) -> Self {
        let mut meta = self.meta.clone();
        meta.selection.push(step);
        Self { values, meta }
    }
}

impl RealSpectrum {
    pub fn levels(&self) -> &[f64] {
        &self.values
    }
}

impl ComplexSpectrum {
    pub fn points(&self) -> &[Complex64] {
        &self.values
    }
}

fn solver_error(e: faer::linalg::evd::EvdError) -> Error {
    Error::EigenSolve(format!("{e:?}"))
}

fn require_symmetric(h: &OperatorMatrix) -> Result<&Mat<f64>> {
    let m = h.as_real().ok_or_else(|| {
        Error::InvalidArgument("symmetric eigensolve needs a real-valued operator".into())
    })?;
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument("matrix is not square".into()));
    }
    let asym = h.asymmetry();
    if asym > 1e-12 {
        return Err(Error::InvalidArgument(format!("matrix is not symmetric (relative asymmetry {asym:.2e})")));
    }
    Ok(m)
}

/// All eigenvalues of a real symmetric operator, ascending.
pub fn eig_symmetric(h: &OperatorMatrix) -> Result<RealSpectrum> {
    eig_symmetric_matrix(require_symmetric(h)?)
}

/// Eigenvalues of a symmetric matrix; only the lower triangle is read.
pub fn eig_symmetric_matrix(m: &Mat<f64>) -> Result<RealSpectrum> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument("matrix is not square".into()));
    }
    let values = m.self_adjoint_eigenvalues(Side::Lower).map_err(solver_error)?;
    RealSpectrum::new(values, SpectrumMeta::default())
}

/// Eigenvalues and eigenvectors (columns) of a real symmetric operator.
///
/// Five eigenpairs spread over the spectrum are checked for
/// ‖Hv − λv‖ / ‖H‖ < 1e−9.
pub fn eig_symmetric_with_vectors(h: &OperatorMatrix) -> Result<(RealSpectrum, Mat<f64>)> {
    let m = require_symmetric(h)?;
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(solver_error)?;
    let n = m.nrows();
    let values: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    let vectors = evd.U().to_owned();
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    for k in 0..5.min(n) {
        let idx = if n == 1 { 0 } else { k * (n - 1) / 4.min(n - 1) };
        let idx = idx.min(n - 1);
        let residual = (0..n)
            .map(|r| {
                let hv: f64 = (0..n).map(|c| m[(r, c)] * vectors[(c, idx)]).sum();
                (hv - values[idx] * vectors[(r, idx)]).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        if residual / scale > 1e-9 {
            return Err(Error::EigenSolve(format!(
                "eigenpair {idx} residual {:.2e} exceeds 1e-9",
                residual / scale
            )));
        }
    }
    // faer returns ascending eigenvalues; keep columns aligned with them
    let spectrum = RealSpectrum { values, meta: SpectrumMeta::default() };
    Ok((spectrum, vectors))
}

/// All eigenvalues of a general complex matrix.
pub fn eig_general_matrix(m: &Mat<Complex64>) -> Result<ComplexSpectrum> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument("matrix is not square".into()));
    }
    let values = m.eigenvalues().map_err(solver_error)?;
    ComplexSpectrum::new(values, SpectrumMeta::default())
}

pub fn eig_general(l: &OperatorMatrix) -> Result<ComplexSpectrum> {
    match l.entries() {
        Entries::Complex(m) => eig_general_matrix(m),
        Entries::Real(_) => eig_general_matrix(&l.to_complex()),
    }
}

/// Full Tavis-Cummings spectrum assembled from the excitation blocks q = 0..=q_max.
pub fn tc_spectrum(params: &ModelParams, q_max: u32) -> Result<RealSpectrum> {
    let qs: Vec<u32> = (0..=q_max).collect();
    tc_spectrum_sectors(params, &qs)
}

pub fn tc_spectrum_sectors(params: &ModelParams, sectors: &[u32]) -> Result<RealSpectrum> {
    let mut levels = Vec::new();
    for &q in sectors {
        levels.extend(eig_symmetric(&tc_sector_hamiltonian(params, q)?)?.values);
    }
    let meta = SpectrumMeta {
        params: Some(params.clone()),
        sector: Some(format!("excitations {}..={}", sectors.first().unwrap_or(&0), sectors.last().unwrap_or(&0))),
        ..Default::default()
    };
    RealSpectrum::new(levels, meta)
}

/// Keep the eigenvalues of the largest-cutoff spectrum that have a partner
/// in the second-largest-cutoff spectrum within `tol`.
///
/// Pairs are matched greedily in order of increasing distance, each
/// eigenvalue used at most once. An empty result is returned with a warning
/// in its metadata.
pub fn convergence_filter<P: SpectralPoint>(spectra: &[Spectrum<P>], tol: f64) -> Result<Spectrum<P>> {
    if spectra.len() < 2 {
        return Err(Error::InvalidArgument("convergence filter needs at least two spectra".into()));
    }
    let mut ranked: Vec<(u32, &Spectrum<P>)> = spectra
        .iter()
        .map(|s| {
            s.cutoff()
                .map(|c| (c, s))
                .ok_or_else(|| Error::InvalidArgument("spectrum without a recorded cutoff".into()))
        })
        .collect::<Result<_>>()?;
    ranked.sort_by_key(|(c, _)| *c);
    let (top_cut, top) = ranked[ranked.len() - 1];
    let (next_cut, next) = ranked[ranked.len() - 2];
    if top_cut == next_cut {
        return Err(Error::InvalidArgument(format!("two spectra share cutoff {top_cut}")));
    }

    let matched = greedy_match(top.values(), next.values(), tol);
    let values: Vec<P> = top
        .values()
        .iter()
        .zip(&matched)
        .filter(|(_, m)| **m)
        .map(|(v, _)| *v)
        .collect();
    let mut out = top.with_values(values, format!("converged M={next_cut}->{top_cut} tol={tol:e}"));
    out.meta.cutoffs = ranked.iter().map(|(c, _)| *c).collect();
    if out.values.is_empty() {
        out.meta.warnings.push("convergence filter kept no eigenvalues".into());
    }
    Ok(out)
}

/// For each point of `a`, whether it was matched to some point of `b`.
fn greedy_match<P: SpectralPoint>(a: &[P], b: &[P], tol: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by(|&x, &y| b[x].key().total_cmp(&b[y].key()));
    let keys: Vec<f64> = order.iter().map(|&i| b[i].key()).collect();

    let mut candidates = Vec::new();
    for (ia, pa) in a.iter().enumerate() {
        let lo = keys.partition_point(|k| *k < pa.key() - tol);
        for (slot, &ib) in order.iter().enumerate().skip(lo) {
            if keys[slot] > pa.key() + tol {
                break;
            }
            let d = pa.distance(&b[ib]);
            if d <= tol {
                candidates.push((d, ia, ib));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    for (_, ia, ib) in candidates {
        if !used_a[ia] && !used_b[ib] {
            used_a[ia] = true;
            used_b[ib] = true;
        }
    }
    used_a
}

/// Central ⌈fraction·count⌉ levels by index.
pub fn central_window(s: &RealSpectrum, fraction: f64) -> Result<RealSpectrum> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction must lie in (0, 1], got {fraction}")));
    }
    let count = s.len();
    let keep = ((fraction * count as f64 - 1e-9).ceil().max(0.0) as usize).min(count);
    let start = (count - keep) / 2;
    Ok(s.with_values(s.values[start..start + keep].to_vec(), format!("central fraction={fraction}")))
}

/// Points with −αγM ≤ Re λ ≤ 0 (the upper edge admits round-off of 1e−10).
pub fn liouvillian_window(s: &ComplexSpectrum, alpha: f64, gamma: f64, cutoff: u32) -> Result<ComplexSpectrum> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be > 0, got {alpha}")));
    }
    let lower = -alpha * gamma * cutoff as f64;
    let values = s.values.iter().copied().filter(|z| z.re >= lower && z.re <= 1e-10).collect();
    Ok(s.with_values(values, format!("re in [{lower}, 0] (alpha={alpha})")))
}

/// Drop the steady-state eigenvalue(s) |λ| < [`ZERO_MODE_TOL`].
pub fn exclude_zero_mode(s: &ComplexSpectrum) -> ComplexSpectrum {
    let values = s.values.iter().copied().filter(|z| z.norm() >= ZERO_MODE_TOL).collect();
    s.with_values(values, "exclude zero mode".into())
}

/// Writes `eigs_real.csv` (index, energy) and its JSON sidecar.
pub fn write_real_spectrum(dir: &Path, s: &RealSpectrum, extra: serde_json::Value) -> Result<Vec<std::path::PathBuf>> {
    let csv = dir.join("eigs_real.csv");
    write_csv(&csv, &["index", "energy"], s.levels().iter().enumerate().map(|(i, e)| vec![i.to_string(), e.to_string()]))?;
    let side = dir.join("eigs_real.json");
    write_json(&side, &serde_json::json!({ "meta": s.meta, "run": extra }))?;
    Ok(vec![csv, side])
}

/// Writes `eigs_complex.csv` (index, re, im) and its JSON sidecar.
pub fn write_complex_spectrum(dir: &Path, s: &ComplexSpectrum, extra: serde_json::Value) -> Result<Vec<std::path::PathBuf>> {
    let csv = dir.join("eigs_complex.csv");
    write_csv(
        &csv,
        &["index", "re", "im"],
        s.points().iter().enumerate().map(|(i, z)| vec![i.to_string(), z.re.to_string(), z.im.to_string()]),
    )?;
    let side = dir.join("eigs_complex.json");
    write_json(&side, &serde_json::json!({ "meta": s.meta, "run": extra }))?;
    Ok(vec![csv, side])
}
