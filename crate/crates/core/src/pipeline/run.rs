use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::{cache_key, EigenCache, Operator};
use super::config::{BackendChoice, Indicator, Point, RunConfig, Z0};
use crate::dynamics::{
    default_backend, dsff, dspf, log_grid_with_zero, moving_average, sff, CurveSeries, DspfBackend,
};
use crate::error::{Error, Result};
use crate::io::{fmt, sha256_file, write_csv, write_csv_with_comment, write_json};
use crate::model::{build_liouvillian_capped, sector_hamiltonian, ModelKind, ModelParams, Sector};
use crate::rmt::{ensemble_dsff, ensemble_sff, EnsembleSpec};
use crate::rng::task_seed;
use crate::spectra::{
    central_window, convergence_filter, eig_general, eig_symmetric, exclude_zero_mode, liouvillian_window,
    tc_spectrum_sectors, write_complex_spectrum, write_real_spectrum, ComplexSpectrum, RealSpectrum, SpectrumMeta,
    DEFAULT_CLOSED_TOL, DEFAULT_OPEN_TOL_PER_GAMMA,
};
use crate::stats::{complex_spacing_ratio, eta, nnsd, reference_pdf, spacing_ratio_k, Ensemble, RatioSummary};
use crate::unfolding::{power_map_unfold, rescale_complex_spacings, unfold_real, Center};

/// Env var capping the worker count.
pub const MAX_WORKERS_ENV: &str = "CHAOSCOPE_MAX_WORKERS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub n_selected: usize,
    pub eta: Option<f64>,
    pub bins: Option<usize>,
    pub ratios: Vec<RatioSummary>,
    pub csr: Option<RatioSummary>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub label: String,
    pub g: f64,
    pub gamma: f64,
    pub g_rel: f64,
    pub ok: bool,
    pub error: Option<String>,
    pub exit_code: i32,
    pub files: Vec<FileEntry>,
    pub wall_seconds: f64,
    pub summary: PointSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub workers: usize,
    pub points: Vec<PointResult>,
    pub files: Vec<FileEntry>,
    pub eigensolves: usize,
    pub cache_hits: usize,
    pub wall_seconds: f64,
}

impl RunManifest {
    /// Every listed file exists and matches its recorded hash.
    pub fn verify(&self, root: &Path) -> Result<()> {
        let all = self.files.iter().chain(self.points.iter().flat_map(|p| p.files.iter()));
        for f in all {
            let actual = sha256_file(&root.join(&f.path))?;
            if actual != f.sha256 {
                return Err(Error::Format { path: root.join(&f.path), message: "hash mismatch".into() });
            }
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format { path, message: e.to_string() })
    }
}

/// Writes files under `root` and records their hashes.
struct Emitter<'a> {
    root: &'a Path,
    files: Vec<FileEntry>,
}

impl<'a> Emitter<'a> {
    fn new(root: &'a Path) -> Self {
        Self { root, files: vec![] }
    }

    fn record(&mut self, path: &Path) -> Result<()> {
        let rel = path.strip_prefix(self.root).unwrap_or(path).to_string_lossy().replace('\\', "/");
        self.files.push(FileEntry { path: rel, sha256: sha256_file(path)? });
        Ok(())
    }

    fn csv<I: IntoIterator<Item = Vec<String>>>(&mut self, path: PathBuf, header: &[&str], rows: I) -> Result<()> {
        write_csv(&path, header, rows)?;
        self.record(&path)
    }

    fn json<T: Serialize>(&mut self, path: PathBuf, value: &T) -> Result<()> {
        write_json(&path, value)?;
        self.record(&path)
    }
}

/// Effective worker count: configured value capped by the env var.
pub fn effective_workers(configured: usize) -> usize {
    let cap = std::env::var(MAX_WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&c| c > 0);
    match cap {
        Some(c) => configured.min(c),
        None => configured,
    }
    .max(1)
}

fn at(point: &Point, e: Error) -> Error {
    match e {
        Error::AtPoint { .. } => e,
        other => Error::AtPoint { point: point.label.clone(), source: Box::new(other) },
    }
}

fn with_cutoff(p: &ModelParams, cutoff: u32) -> ModelParams {
    let mut q = p.clone();
    q.photon_cutoff = cutoff;
    q
}

// Only the two largest cutoffs enter the convergence filter.
fn top_two(cutoffs: &[u32]) -> &[u32] {
    &cutoffs[cutoffs.len().saturating_sub(2)..]
}

/// Converged, windowed closed spectrum of a point.
pub fn closed_spectrum(cfg: &RunConfig, params: &ModelParams, cache: &EigenCache) -> Result<RealSpectrum> {
    if let (ModelKind::TavisCummings, Sector::Excitations(qs)) = (params.model, &params.sector) {
        // excitation blocks are exact; the photon cutoff plays no role
        let key_params = with_cutoff(params, 0);
        let levels = cache.real(&cache_key(Operator::Hamiltonian, &key_params), || {
            Ok(tc_spectrum_sectors(params, qs)?.levels().to_vec())
        })?;
        let meta = SpectrumMeta { params: Some(params.clone()), sector: Some(params.sector.label()), ..Default::default() };
        return central_window(&RealSpectrum::new(levels, meta)?, cfg.selection.fraction);
    }
    let spectra = top_two(&cfg.cutoffs())
        .iter()
        .map(|&c| {
            let p = with_cutoff(params, c);
            let levels = cache.real(&cache_key(Operator::Hamiltonian, &p), || {
                Ok(eig_symmetric(&sector_hamiltonian(&p)?)?.levels().to_vec())
            })?;
            let meta = SpectrumMeta { params: Some(p.clone()), sector: Some(p.sector.label()), cutoffs: vec![c], ..Default::default() };
            RealSpectrum::new(levels, meta)
        })
        .collect::<Result<Vec<_>>>()?;
    let converged = if spectra.len() >= 2 {
        convergence_filter(&spectra, cfg.selection.tol.unwrap_or(DEFAULT_CLOSED_TOL))?
    } else {
        spectra.into_iter().next().expect("validated cutoffs")
    };
    central_window(&converged, cfg.selection.fraction)
}

/// Converged, windowed Liouvillian spectrum of a point.
pub fn open_spectrum(cfg: &RunConfig, params: &ModelParams, cache: &EigenCache) -> Result<ComplexSpectrum> {
    let full = ModelParams { sector: Sector::Full, ..params.clone() };
    let spectra = top_two(&cfg.cutoffs())
        .iter()
        .map(|&c| {
            let p = with_cutoff(&full, c);
            let points = cache.complex(&cache_key(Operator::Liouvillian, &p), || {
                Ok(eig_general(&build_liouvillian_capped(&p, cfg.run.superoperator_cap as u128)?)?.points().to_vec())
            })?;
            let meta = SpectrumMeta { params: Some(p), sector: Some("full".into()), cutoffs: vec![c], ..Default::default() };
            ComplexSpectrum::new(points, meta)
        })
        .collect::<Result<Vec<_>>>()?;
    let top = *cfg.cutoffs().last().expect("validated");
    let converged = if spectra.len() >= 2 {
        let tol = cfg.selection.tol.unwrap_or(DEFAULT_OPEN_TOL_PER_GAMMA * params.gamma);
        convergence_filter(&spectra, tol)?
    } else {
        spectra.into_iter().next().expect("validated cutoffs")
    };
    let windowed = liouvillian_window(&converged, cfg.selection.alpha, params.gamma, top)?;
    Ok(if cfg.selection.exclude_zero_mode { exclude_zero_mode(&windowed) } else { windowed })
}

fn curve_rows(c: &CurveSeries) -> Vec<Vec<String>> {
    let smoothed = c.best();
    c.abscissa.iter().zip(&c.raw).zip(smoothed).map(|((t, r), s)| vec![fmt(*t), fmt(*r), fmt(*s)]).collect()
}

fn dsff_rows(c: &CurveSeries) -> Vec<Vec<String>> {
    c.abscissa.iter().zip(c.best()).map(|(t, v)| vec![fmt(*t), fmt(*v)]).collect()
}

fn ratio_rows(rs: &[RatioSummary]) -> Vec<Vec<String>> {
    rs.iter().map(|r| vec![r.k.to_string(), fmt(r.r_mean), fmt(r.r_sem), r.count.to_string()]).collect()
}

fn dspf_backend(cfg: &RunConfig, point: &Point) -> DspfBackend {
    let p = &point.params;
    let dim = (p.two_j() as usize + 1) * (p.photon_cutoff as usize + 1);
    let seed = task_seed(cfg.run.seed, &point.label);
    match cfg.dspf.backend {
        BackendChoice::Auto => match default_backend(dim, seed) {
            DspfBackend::Trajectories { seed, .. } => DspfBackend::Trajectories { n_traj: cfg.dspf.n_traj, seed },
            b => b,
        },
        BackendChoice::Direct => DspfBackend::DirectPropagation,
        BackendChoice::Trajectories => DspfBackend::Trajectories { n_traj: cfg.dspf.n_traj, seed },
    }
}

fn sff_grid(cfg: &RunConfig) -> Vec<f64> {
    log_grid_with_zero(cfg.time.points, cfg.time.t_min, cfg.time.t_max)
}

fn run_point(cfg: &RunConfig, point: &Point, out_root: &Path, cache: &EigenCache) -> Result<(Vec<FileEntry>, PointSummary)> {
    let dir = out_root.join("points").join(&point.label);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut em = Emitter::new(out_root);
    let mut summary = PointSummary::default();
    let indicators = cfg.indicators(point.is_open());
    let bins = cfg.indicators.bins;
    let extra = serde_json::json!({ "label": point.label, "g_rel": point.g_rel, "selection": cfg.selection });

    if point.is_open() {
        let spec = open_spectrum(cfg, &point.params, cache)?;
        summary.n_selected = spec.len();
        summary.warnings.extend(spec.meta.warnings.iter().cloned());
        for p in write_complex_spectrum(&dir, &spec, extra)? {
            em.record(&p)?;
        }
        if indicators.iter().any(|i| matches!(i, Indicator::Nnsd | Indicator::Eta)) {
            let scaled = rescale_complex_spacings(&spec, cfg.unfolding.sigma_factor)?;
            summary.warnings.extend(scaled.warnings.iter().cloned());
            let hist = nnsd(&scaled.values, bins)?;
            if indicators.contains(&Indicator::Nnsd) {
                em.csv(dir.join("nnsd.csv"), &["bin_center", "pdf"], hist.centers().iter().zip(&hist.pdf).map(|(c, p)| vec![fmt(*c), fmt(*p)]))?;
            }
            if indicators.contains(&Indicator::Eta) {
                let e = eta(&hist, Ensemble::Ginue)?;
                summary.eta = Some(e);
                summary.bins = Some(bins);
                em.csv(dir.join("eta.csv"), &["g", "eta", "bins"], [vec![fmt(point.params.g), fmt(e), bins.to_string()]])?;
            }
        }
        if indicators.contains(&Indicator::Csr) {
            let r = complex_spacing_ratio(spec.points())?;
            em.csv(
                dir.join("csr.csv"),
                &["r_mean", "cos_mean", "count"],
                [vec![fmt(r.r_mean), fmt(r.cos_mean.unwrap_or(f64::NAN)), r.count.to_string()]],
            )?;
            summary.csr = Some(r);
        }
        if indicators.contains(&Indicator::Dsff) {
            let u = &cfg.unfolding;
            let center = match u.z0 {
                Z0::At([re, im]) => Center::At(Complex64::new(re, im)),
                Z0::Auto(_) => Center::Auto,
            };
            let unfolded = power_map_unfold(&spec, Complex64::new(u.power_a[0], u.power_a[1]), u.power_nu, center)?;
            let d = &cfg.dsff;
            let curve = moving_average(&dsff(&unfolded.values, &sff_grid(cfg), d.phi, d.dphi, d.n_phi)?, cfg.time.window)?;
            em.csv(dir.join("dsff.csv"), &["tau", "value"], dsff_rows(&curve))?;
        }
        if indicators.contains(&Indicator::Baseline) {
            let n = spec.len().max(2);
            let es = EnsembleSpec::new(Ensemble::Ginue, n, cfg.baseline.realizations, cfg.run.seed)?;
            let d = &cfg.dsff;
            let curve = ensemble_dsff(&es, &sff_grid(cfg), d.phi, d.dphi, d.n_phi, cfg.time.window)?;
            em.csv(dir.join("baseline_dsff.csv"), &["tau", "value"], dsff_rows(&curve))?;
        }
    } else {
        let spec = closed_spectrum(cfg, &point.params, cache)?;
        summary.n_selected = spec.len();
        summary.warnings.extend(spec.meta.warnings.iter().cloned());
        for p in write_real_spectrum(&dir, &spec, extra)? {
            em.record(&p)?;
        }
        let needs_unfold = indicators.iter().any(|i| matches!(i, Indicator::Nnsd | Indicator::Eta | Indicator::Sff));
        let unfolded = if needs_unfold { Some(unfold_real(&spec, cfg.unfolding.degree)?) } else { None };
        if let Some(u) = &unfolded {
            let hist = nnsd(&u.spacings(), bins)?;
            if indicators.contains(&Indicator::Nnsd) {
                em.csv(dir.join("nnsd.csv"), &["bin_center", "pdf"], hist.centers().iter().zip(&hist.pdf).map(|(c, p)| vec![fmt(*c), fmt(*p)]))?;
            }
            if indicators.contains(&Indicator::Eta) {
                let e = eta(&hist, Ensemble::Goe)?;
                summary.eta = Some(e);
                summary.bins = Some(bins);
                em.csv(dir.join("eta.csv"), &["g", "eta", "bins"], [vec![fmt(point.params.g), fmt(e), bins.to_string()]])?;
            }
            if indicators.contains(&Indicator::Sff) {
                let curve = moving_average(&sff(&u.values, &sff_grid(cfg))?, cfg.time.window)?;
                em.csv(dir.join("sff.csv"), &["t", "raw", "smoothed"], curve_rows(&curve))?;
            }
        }
        if indicators.contains(&Indicator::Rk) {
            let ratios = cfg.indicators.rk.iter().map(|&k| spacing_ratio_k(spec.levels(), k)).collect::<Result<Vec<_>>>()?;
            em.csv(dir.join("ratios.csv"), &["k", "r_mean", "r_sem", "count"], ratio_rows(&ratios))?;
            summary.ratios = ratios;
        }
        if indicators.contains(&Indicator::Baseline) {
            // GOE size whose central window matches the system's level count
            let n = ((spec.len() as f64 / cfg.selection.fraction).round() as usize).max(30);
            let es = EnsembleSpec::new(Ensemble::Goe, n, cfg.baseline.realizations, cfg.run.seed)?;
            let curve = ensemble_sff(&es, &sff_grid(cfg), cfg.time.window)?;
            em.csv(dir.join("baseline_sff.csv"), &["t", "raw", "smoothed"], curve_rows(&curve))?;
        }
    }

    if indicators.contains(&Indicator::Dspf) {
        let grid = log_grid_with_zero(cfg.dspf.points, cfg.dspf.t_min, cfg.dspf.t_max);
        let params = ModelParams { sector: Sector::Full, ..point.params.clone() };
        let curve = dspf(&params, cfg.dspf.beta, &grid, dspf_backend(cfg, point))?;
        let sem = curve.sem.clone().unwrap_or_else(|| vec![0.0; grid.len()]);
        em.csv(
            dir.join("dspf.csv"),
            &["t", "mean", "sem"],
            curve.abscissa.iter().zip(&curve.raw).zip(&sem).map(|((t, m), s)| vec![fmt(*t), fmt(*m), fmt(*s)]),
        )?;
        em.json(dir.join("dspf.json"), &curve.meta)?;
    }
    em.json(dir.join("point.json"), &serde_json::json!({ "point": point, "summary": summary }))?;
    Ok((em.files, summary))
}

/// Reference NNSD curves for plot overlays, tabulated on [0, 5].
fn write_reference_overlays(em: &mut Emitter, root: &Path, kinds: &[Ensemble]) -> Result<()> {
    for &kind in kinds {
        let path = root.join(format!("ref_nnsd_{}.csv", kind.name()));
        let provenance = match kind {
            Ensemble::Poisson2D | Ensemble::Ginue => crate::stats::shipped_table(kind).and_then(|t| t.provenance.clone()).unwrap_or_default(),
            _ => format!("{{\"closed_form\":\"{}\"}}", kind.name()),
        };
        write_csv_with_comment(&path, Some(&provenance), &["s", "pdf"], (0..=500).map(|k| {
            let s = k as f64 * 0.01;
            vec![fmt(s), fmt(reference_pdf(kind, s))]
        }))?;
        em.record(&path)?;
    }
    Ok(())
}

fn scan_name(base: &str, gamma: f64, many: bool) -> String {
    if many {
        format!("{base}_gamma{gamma}.csv")
    } else {
        format!("{base}.csv")
    }
}

fn write_scans(em: &mut Emitter, root: &Path, cfg: &RunConfig, points: &[Point], results: &[PointResult]) -> Result<()> {
    let gammas = cfg.gammas();
    let many = gammas.len() > 1;
    for gamma in gammas {
        let rows: Vec<(&Point, &PointResult)> = points
            .iter()
            .zip(results)
            .filter(|(p, r)| p.params.gamma == gamma && r.ok)
            .collect();
        let mut by_g = rows.clone();
        by_g.sort_by(|a, b| a.0.params.g.total_cmp(&b.0.params.g));
        if by_g.iter().any(|(_, r)| r.summary.eta.is_some()) {
            em.csv(
                root.join(scan_name("eta_scan", gamma, many)),
                &["g_over_gc", "eta"],
                by_g.iter().filter_map(|(p, r)| r.summary.eta.map(|e| vec![fmt(p.g_rel), fmt(e)])),
            )?;
        }
        if by_g.iter().any(|(_, r)| !r.summary.ratios.is_empty()) {
            em.csv(
                root.join(scan_name("rk_scan", gamma, many)),
                &["g", "k", "r_mean"],
                by_g.iter().flat_map(|(p, r)| r.summary.ratios.iter().map(|q| vec![fmt(p.params.g), q.k.to_string(), fmt(q.r_mean)])),
            )?;
        }
        if by_g.iter().any(|(_, r)| r.summary.csr.is_some()) {
            em.csv(
                root.join(scan_name("csr_scan", gamma, many)),
                &["g_over_gcgamma", "r_mean", "cos_mean"],
                by_g.iter().filter_map(|(p, r)| {
                    r.summary.csr.as_ref().map(|c| vec![fmt(p.g_rel), fmt(c.r_mean), fmt(c.cos_mean.unwrap_or(f64::NAN))])
                }),
            )?;
        }
    }
    Ok(())
}

/// Runs every point of `cfg`. With `scans`, aggregated scan files are
/// written and a failing point is recorded rather than aborting the run.
pub fn execute(cfg: &RunConfig, command: &str, scans: bool) -> Result<RunManifest> {
    let start = Instant::now();
    let root = cfg.run.output_dir.clone();
    std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    let cache = EigenCache::new(cfg.cache_dir())?;
    let points = cfg.points();
    let workers = effective_workers(cfg.run.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;

    let results: Vec<PointResult> = pool.install(|| {
        points
            .par_iter()
            .map(|point| {
                let t0 = Instant::now();
                log::info!("point {} (g/gc = {:.4})", point.label, point.g_rel);
                let outcome = run_point(cfg, point, &root, &cache).map_err(|e| at(point, e));
                let (ok, error, exit_code, files, summary) = match outcome {
                    Ok((files, summary)) => (true, None, 0, files, summary),
                    Err(e) => {
                        log::error!("{e}");
                        (false, Some(e.to_string()), e.exit_code(), vec![], PointSummary::default())
                    }
                };
                PointResult {
                    label: point.label.clone(),
                    g: point.params.g,
                    gamma: point.params.gamma,
                    g_rel: point.g_rel,
                    ok,
                    error,
                    exit_code,
                    files,
                    wall_seconds: t0.elapsed().as_secs_f64(),
                    summary,
                }
            })
            .collect()
    });

    let mut em = Emitter::new(&root);
    let mut kinds = Vec::new();
    if points.iter().any(|p| !p.is_open()) {
        kinds.extend([Ensemble::Poisson1D, Ensemble::Goe]);
    }
    if points.iter().any(|p| p.is_open()) {
        kinds.extend([Ensemble::Poisson2D, Ensemble::Ginue]);
    }
    write_reference_overlays(&mut em, &root, &kinds)?;
    if scans {
        write_scans(&mut em, &root, cfg, &points, &results)?;
    }

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: cfg.clone(),
        workers,
        points: results,
        files: em.files,
        eigensolves: cache.solves(),
        cache_hits: cache.hits(),
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&root.join("manifest.json"), &manifest)?;
    manifest.verify(&root)?;
    Ok(manifest)
}

/// Single-point run; any failure is returned as an error.
pub fn run(cfg: &RunConfig) -> Result<RunManifest> {
    if cfg.points().len() != 1 {
        return Err(Error::config("model.g", "`run` takes exactly one (g, gamma) point; use `sweep` for lists"));
    }
    let manifest = execute(cfg, "run", false)?;
    if let Some(p) = manifest.points.iter().find(|p| !p.ok) {
        return Err(recorded(p));
    }
    Ok(manifest)
}

/// Parameter sweep; fails only when no point succeeded.
pub fn sweep(cfg: &RunConfig) -> Result<RunManifest> {
    let manifest = execute(cfg, "sweep", true)?;
    if !manifest.points.is_empty() && manifest.points.iter().all(|p| !p.ok) {
        return Err(recorded(&manifest.points[0]));
    }
    Ok(manifest)
}

fn recorded(p: &PointResult) -> Error {
    Error::Recorded { code: p.exit_code, message: p.error.clone().unwrap_or_default() }
}
