//! Run configuration, read from TOML.
//!
//! ```toml
//! [model]
//! kind = "dicke"            # or "tavis_cummings"
//! omega = 1.0
//! omega0 = 1.0
//! j = 20
//! g_over_gc = [0.2, 2.5]    # or `g = [...]` in absolute units
//! gamma = [0.0]             # γ > 0 selects the open (Liouvillian) pipeline
//! sector = "even"           # full | even | odd | "q:0-300"
//! cutoffs = [120, 160, 200]
//!
//! [indicators]
//! list = ["nnsd", "eta", "rk", "sff"]
//! rk = [1, 20]
//! ```
//!
//! Every key and its default is listed in [`RunConfig`]; unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{DEFAULT_DPHI, DEFAULT_N_PHI, DEFAULT_N_TRAJ, DEFAULT_PHI, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::model::{critical_couplings, ModelKind, ModelParams, Sector, DEFAULT_SUPEROPERATOR_CAP};
use crate::spectra::{DEFAULT_ALPHA, DEFAULT_FRACTION};
use crate::stats::DEFAULT_BINS;
use crate::unfolding::{DEFAULT_DEGREE, DEFAULT_SIGMA_FACTOR};

/// Accepts a scalar or a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "dicke")]
    pub kind: ModelKind,
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default = "one")]
    pub omega0: f64,
    pub j: f64,
    /// Absolute couplings.
    pub g: Option<OneOrMany<f64>>,
    /// Couplings in units of g_c (closed) or g_cγ (open).
    pub g_over_gc: Option<OneOrMany<f64>>,
    #[serde(default = "zero_list")]
    pub gamma: OneOrMany<f64>,
    #[serde(default = "full")]
    pub sector: String,
    pub cutoffs: OneOrMany<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSection {
    /// Central fraction kept from closed spectra.
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    /// Liouvillian window Re λ ∈ [−αγM, 0].
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Convergence tolerance; default 1e−6 closed, 1e−4·γ open.
    pub tol: Option<f64>,
    #[serde(default = "yes")]
    pub exclude_zero_mode: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnfoldingSection {
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_sigma")]
    pub sigma_factor: f64,
    /// Power-map prefactor A as [re, im].
    #[serde(default = "minus_i")]
    pub power_a: [f64; 2],
    #[serde(default = "third")]
    pub power_nu: f64,
    /// "auto" or [re, im].
    #[serde(default = "auto")]
    pub z0: Z0,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Z0 {
    Auto(String),
    At([f64; 2]),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Indicator {
    Nnsd,
    Eta,
    Rk,
    Csr,
    Sff,
    Dsff,
    Dspf,
    Baseline,
}

impl Indicator {
    pub fn closed_only(self) -> bool {
        matches!(self, Indicator::Rk | Indicator::Sff)
    }

    pub fn open_only(self) -> bool {
        matches!(self, Indicator::Csr | Indicator::Dsff)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSection {
    /// Defaults: closed [nnsd, eta, rk, sff, dspf]; open [nnsd, eta, csr, dsff, dspf].
    pub list: Option<Vec<Indicator>>,
    #[serde(default = "default_rk")]
    pub rk: Vec<usize>,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// Moving-average window as a fraction of t.
    #[serde(default = "default_window")]
    pub window: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsffSection {
    #[serde(default = "default_phi")]
    pub phi: f64,
    #[serde(default = "default_dphi")]
    pub dphi: f64,
    #[serde(default = "default_n_phi")]
    pub n_phi: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Auto,
    Direct,
    Trajectories,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DspfSection {
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default = "default_backend")]
    pub backend: BackendChoice,
    #[serde(default = "default_dspf_points")]
    pub points: usize,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_dspf_t_max")]
    pub t_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    /// Realizations of the size-matched GOE/GinUE ensemble.
    #[serde(default = "default_realizations")]
    pub realizations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Defaults to `<output_dir>/cache`.
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "one_usize")]
    pub workers: usize,
    /// Cap on dense superoperator entries.
    #[serde(default = "default_cap")]
    pub superoperator_cap: u64,
}

/// Parsed configuration with all defaults filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default = "default_of")]
    pub selection: SelectionSection,
    #[serde(default = "default_of")]
    pub unfolding: UnfoldingSection,
    #[serde(default = "default_of")]
    pub indicators: IndicatorSection,
    #[serde(default = "default_of")]
    pub time: TimeSection,
    #[serde(default = "default_of")]
    pub dsff: DsffSection,
    #[serde(default = "default_of")]
    pub dspf: DspfSection,
    #[serde(default = "default_of")]
    pub baseline: BaselineSection,
    #[serde(default = "default_of")]
    pub run: RunSection,
}

fn default_of<T: for<'de> Deserialize<'de>>() -> T {
    T::deserialize(toml::Value::Table(toml::Table::new())).expect("section defaults")
}
fn dicke() -> ModelKind {
    ModelKind::Dicke
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn zero_list() -> OneOrMany<f64> {
    OneOrMany::One(0.0)
}
fn full() -> String {
    "full".into()
}
fn default_fraction() -> f64 {
    DEFAULT_FRACTION
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_degree() -> usize {
    DEFAULT_DEGREE
}
fn default_sigma() -> f64 {
    DEFAULT_SIGMA_FACTOR
}
fn minus_i() -> [f64; 2] {
    [0.0, -1.0]
}
fn third() -> f64 {
    1.0 / 3.0
}
fn auto() -> Z0 {
    Z0::Auto("auto".into())
}
fn default_rk() -> Vec<usize> {
    vec![1]
}
fn default_bins() -> usize {
    DEFAULT_BINS
}
fn default_points() -> usize {
    2000
}
fn default_t_min() -> f64 {
    1e-2
}
fn default_t_max() -> f64 {
    1e4
}
fn default_window() -> f64 {
    DEFAULT_WINDOW
}
fn default_phi() -> f64 {
    DEFAULT_PHI
}
fn default_dphi() -> f64 {
    DEFAULT_DPHI
}
fn default_n_phi() -> usize {
    DEFAULT_N_PHI
}
fn default_n_traj() -> usize {
    DEFAULT_N_TRAJ
}
fn default_backend() -> BackendChoice {
    BackendChoice::Auto
}
fn default_dspf_points() -> usize {
    200
}
fn default_dspf_t_max() -> f64 {
    1e2
}
fn default_realizations() -> usize {
    10
}
fn default_output() -> PathBuf {
    PathBuf::from("chaoscope-out")
}
fn default_cap() -> u64 {
    DEFAULT_SUPEROPERATOR_CAP as u64
}

/// One (g, γ) parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub label: String,
    pub params: ModelParams,
    /// g / g_c for closed points, g / g_cγ for open ones.
    pub g_rel: f64,
}

impl Point {
    pub fn is_open(&self) -> bool {
        self.params.gamma > 0.0
    }
}

fn parse_sector(text: &str) -> Result<Sector> {
    let bad = || Error::config("model.sector", format!("expected full, even, odd or q:<lo>-<hi>, got `{text}`"));
    Ok(match text {
        "full" => Sector::Full,
        "even" => Sector::Even,
        "odd" => Sector::Odd,
        _ => {
            let range = text.strip_prefix("q:").ok_or_else(bad)?;
            let (lo, hi) = range.split_once('-').unwrap_or((range, range));
            let (lo, hi): (u32, u32) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
            if lo > hi {
                return Err(bad());
            }
            Sector::Excitations((lo..=hi).collect())
        }
    })
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        let cfg: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(value)).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "<root>".to_string() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn cutoffs(&self) -> Vec<u32> {
        self.model.cutoffs.to_vec()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.model.gamma.to_vec()
    }

    pub fn sector(&self) -> Sector {
        parse_sector(&self.model.sector).expect("validated")
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.run.cache_dir.clone().unwrap_or_else(|| self.run.output_dir.join("cache"))
    }

    /// Indicators for a point, explicit or per-mode defaults.
    pub fn indicators(&self, open: bool) -> Vec<Indicator> {
        use Indicator::*;
        match &self.indicators.list {
            Some(list) => list.iter().copied().filter(|i| if open { !i.closed_only() } else { !i.open_only() }).collect(),
            None if open => vec![Nnsd, Eta, Csr, Dsff, Dspf],
            None => vec![Nnsd, Eta, Rk, Sff, Dspf],
        }
    }

    fn validate(&self) -> Result<()> {
        let m = &self.model;
        let sector = parse_sector(&m.sector)?;
        let cutoffs = self.cutoffs();
        if cutoffs.is_empty() {
            return Err(Error::config("model.cutoffs", "at least one cutoff is required"));
        }
        if cutoffs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("model.cutoffs", "cutoffs must be strictly ascending"));
        }
        let gs = match (&m.g, &m.g_over_gc) {
            (Some(g), None) => g.to_vec(),
            (None, Some(g)) => g.to_vec(),
            (Some(_), Some(_)) => return Err(Error::config("model.g", "give either g or g_over_gc, not both")),
            (None, None) => return Err(Error::config("model.g", "a coupling list (g or g_over_gc) is required")),
        };
        if gs.is_empty() {
            return Err(Error::config("model.g", "coupling list is empty"));
        }
        let gammas = self.gammas();
        if gammas.is_empty() {
            return Err(Error::config("model.gamma", "gamma list is empty"));
        }
        if let Some(list) = &self.indicators.list {
            if list.is_empty() {
                return Err(Error::config("indicators.list", "at least one indicator is required"));
            }
            for &ind in list {
                let open_ok = gammas.iter().any(|&g| g > 0.0);
                let closed_ok = gammas.contains(&0.0);
                if (ind.closed_only() && !closed_ok) || (ind.open_only() && !open_ok) {
                    return Err(Error::config(
                        "indicators.list",
                        format!("{ind:?} does not apply to any configured gamma"),
                    ));
                }
            }
        }
        if self.indicators.rk.is_empty() || self.indicators.rk.contains(&0) {
            return Err(Error::config("indicators.rk", "orders must be positive"));
        }
        if self.indicators.bins == 0 {
            return Err(Error::config("indicators.bins", "must be positive"));
        }
        if !(self.selection.fraction > 0.0 && self.selection.fraction <= 1.0) {
            return Err(Error::config("selection.fraction", "must lie in (0, 1]"));
        }
        if !(self.selection.alpha > 0.0) {
            return Err(Error::config("selection.alpha", "must be positive"));
        }
        if let Z0::Auto(s) = &self.unfolding.z0 {
            if s != "auto" {
                return Err(Error::config("unfolding.z0", "expected \"auto\" or [re, im]"));
            }
        }
        if self.unfolding.power_nu == 0.0 {
            return Err(Error::config("unfolding.power_nu", "must be non-zero"));
        }
        if self.unfolding.degree == 0 {
            return Err(Error::config("unfolding.degree", "must be at least 1"));
        }
        if !(self.time.t_min > 0.0 && self.time.t_max > self.time.t_min) || self.time.points < 2 {
            return Err(Error::config("time", "need 0 < t_min < t_max and at least 2 points"));
        }
        if !(self.dspf.t_min > 0.0 && self.dspf.t_max > self.dspf.t_min) || self.dspf.points < 2 {
            return Err(Error::config("dspf", "need 0 < t_min < t_max and at least 2 points"));
        }
        if self.dspf.n_traj == 0 {
            return Err(Error::config("dspf.n_traj", "must be at least 1"));
        }
        if !(self.time.window > 0.0) {
            return Err(Error::config("time.window", "must be positive"));
        }
        if self.run.workers == 0 {
            return Err(Error::config("run.workers", "must be at least 1"));
        }
        if self.baseline.realizations == 0 {
            return Err(Error::config("baseline.realizations", "must be at least 1"));
        }
        // model-level checks on a representative point
        for &gamma in &gammas {
            let p = self.params(gs[0].abs(), gamma, cutoffs[0], &sector);
            p.validate().map_err(|e| Error::config("model", e.to_string()))?;
        }
        Ok(())
    }

    fn params(&self, g: f64, gamma: f64, cutoff: u32, sector: &Sector) -> ModelParams {
        ModelParams {
            omega: self.model.omega,
            omega0: self.model.omega0,
            g,
            gamma,
            j: self.model.j,
            photon_cutoff: cutoff,
            model: self.model.kind,
            sector: sector.clone(),
        }
    }

    /// All (γ, g) points, γ-major, each in configured order. Params carry
    /// the largest cutoff.
    pub fn points(&self) -> Vec<Point> {
        let sector = self.sector();
        let top = *self.cutoffs().last().expect("validated");
        let mut out = Vec::new();
        for gamma in self.gammas() {
            let (list, relative) = match (&self.model.g, &self.model.g_over_gc) {
                (Some(g), _) => (g.to_vec(), false),
                (_, Some(g)) => (g.to_vec(), true),
                _ => unreachable!("validated"),
            };
            for x in list {
                let probe = self.params(1.0, gamma, top, &sector);
                let cc = critical_couplings(&probe);
                let gc = if gamma > 0.0 { cc.g_c_gamma.unwrap_or(cc.g_c) } else { cc.g_c };
                let (g, g_rel) = if relative { (x * gc, x) } else { (x, x / gc) };
                let params = self.params(g, gamma, top, &sector);
                out.push(Point { label: format!("g{}_gamma{}", fmt_label(g), fmt_label(gamma)), params, g_rel });
            }
        }
        out
    }
}

fn fmt_label(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = "[model]\nj = 2\ng = 0.5\ncutoffs = [10]\n[indicators]\nlist = [\"nnsd\"]\n";

    #[test]
    fn minimal_config_defaults() {
        let c = RunConfig::from_toml(MIN).unwrap();
        assert_eq!(c.selection.fraction, 0.6);
        assert_eq!(c.indicators.bins, 40);
        assert_eq!(c.time.points, 2000);
        let pts = c.points();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].label, "g0.5_gamma0");
        assert!((pts[0].g_rel - 0.5 / 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_names_the_key() {
        let err = RunConfig::from_toml(&format!("{MIN}[dsff]\nphy = 1.0\n")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("phy") && msg.contains("dsff"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn type_error_names_the_key() {
        let err = RunConfig::from_toml("[model]\nj = 2\ng = \"big\"\ncutoffs = [10]\n").unwrap_err();
        assert!(err.to_string().contains("model.g"), "{err}");
    }

    #[test]
    fn semantic_errors() {
        for (bad, key) in [
            ("[model]\nj = 2\ng = 0.5\ncutoffs = [10, 8]\n", "model.cutoffs"),
            ("[model]\nj = 2\ng = 0.5\ng_over_gc = 1\ncutoffs = [10]\n", "model.g"),
            ("[model]\nj = 2.3\ng = 0.5\ncutoffs = [10]\n", "model"),
            ("[model]\nj = 2\ng = 0.5\ncutoffs = [10]\nsector = \"weird\"\n", "model.sector"),
            ("[model]\nj = 2\ng = 0.5\ncutoffs = [10]\n[indicators]\nlist = [\"csr\"]\n", "indicators.list"),
        ] {
            match RunConfig::from_toml(bad) {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key, "{bad}"),
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    #[test]
    fn open_points_use_dissipative_critical_coupling() {
        let c = RunConfig::from_toml("[model]\nj = 2\ng_over_gc = [1.0]\ngamma = [1.1]\ncutoffs = [4, 5]\n").unwrap();
        let p = &c.points()[0];
        assert!((p.params.g - 0.7433034).abs() < 1e-6);
        assert_eq!(c.indicators(true), vec![Indicator::Nnsd, Indicator::Eta, Indicator::Csr, Indicator::Dsff, Indicator::Dspf]);
        assert_eq!(c.sector(), Sector::Full);
    }

    #[test]
    fn excitation_sector_range() {
        let c = RunConfig::from_toml("[model]\nkind = \"tavis_cummings\"\nj = 1\ng = 1\ncutoffs = [4]\nsector = \"q:0-3\"\n").unwrap();
        assert_eq!(c.sector(), Sector::Excitations(vec![0, 1, 2, 3]));
    }
}
