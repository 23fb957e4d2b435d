use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Full light-matter coupling including counter-rotating terms.
    Dicke,
    /// Rotating-wave approximation of the Dicke model.
    #[serde(alias = "tc")]
    TavisCummings,
}

/// Symmetry sector selection.
///
/// `Even`/`Odd` refer to the Dicke parity Π = exp[iπ(J_z + a†a + j)];
/// `Excitations` lists Tavis-Cummings excitation numbers q.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Full,
    Even,
    Odd,
    Excitations(Vec<u32>),
}

impl Sector {
    pub fn label(&self) -> String {
        match self {
            Sector::Full => "full".into(),
            Sector::Even => "even".into(),
            Sector::Odd => "odd".into(),
            Sector::Excitations(qs) => match (qs.first(), qs.last()) {
                (Some(a), Some(b)) => format!("q{a}-{b}"),
                _ => "q-none".into(),
            },
        }
    }
}

/// Physical parameters of a spin-boson model (ħ = 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Cavity frequency ω.
    pub omega: f64,
    /// Atomic frequency ω₀.
    pub omega0: f64,
    /// Coupling strength g.
    pub g: f64,
    /// Cavity decay rate γ.
    pub gamma: f64,
    /// Collective spin length j = N/2.
    pub j: f64,
    /// Maximum photon number M.
    pub photon_cutoff: u32,
    pub model: ModelKind,
    pub sector: Sector,
}

impl ModelParams {
    /// Resonant Dicke parameters (ω = ω₀ = 1) in the full space.
    pub fn dicke(g: f64, j: f64, photon_cutoff: u32) -> Self {
        Self {
            omega: 1.0,
            omega0: 1.0,
            g,
            gamma: 0.0,
            j,
            photon_cutoff,
            model: ModelKind::Dicke,
            sector: Sector::Full,
        }
    }

    /// Resonant Tavis-Cummings parameters in the full space.
    pub fn tavis_cummings(g: f64, j: f64, photon_cutoff: u32) -> Self {
        Self {
            model: ModelKind::TavisCummings,
            ..Self::dicke(g, j, photon_cutoff)
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_sector(mut self, sector: Sector) -> Self {
        self.sector = sector;
        self
    }

    pub fn with_frequencies(mut self, omega: f64, omega0: f64) -> Self {
        self.omega = omega;
        self.omega0 = omega0;
        self
    }

    /// 2j as an integer. Call [`ModelParams::validate`] first.
    pub fn two_j(&self) -> u32 {
        (2.0 * self.j).round() as u32
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad(format!("omega must be > 0, got {}", self.omega));
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return bad(format!("omega0 must be > 0, got {}", self.omega0));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return bad(format!("g must be >= 0, got {}", self.g));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be >= 0, got {}", self.gamma));
        }
        let two_j = 2.0 * self.j;
        if !(two_j >= 0.0 && two_j.is_finite()) || (two_j - two_j.round()).abs() > 1e-12 {
            return bad(format!("2j must be a non-negative integer, got j = {}", self.j));
        }
        if self.photon_cutoff < 1 {
            return bad("photon cutoff M must be >= 1".into());
        }
        match (&self.sector, self.model) {
            (Sector::Excitations(_), ModelKind::Dicke) => {
                bad("excitation sectors only exist for the Tavis-Cummings model".into())
            }
            (Sector::Even | Sector::Odd, ModelKind::TavisCummings) => {
                bad("parity sectors are defined for the Dicke model; use excitation sectors".into())
            }
            _ => Ok(()),
        }
    }
}

/// Closed-system critical coupling and, for the damped Dicke model, the
/// dissipative one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalCouplings {
    pub g_c: f64,
    /// `None` for the Tavis-Cummings model, which has no dissipative transition.
    pub g_c_gamma: Option<f64>,
}

pub fn critical_couplings(params: &ModelParams) -> CriticalCouplings {
    let (w, w0, gamma) = (params.omega, params.omega0, params.gamma);
    match params.model {
        ModelKind::Dicke => CriticalCouplings {
            g_c: (w * w0 / 2.0).sqrt(),
            g_c_gamma: Some(0.5 * ((w0 / w) * (gamma * gamma + w * w)).sqrt()),
        },
        ModelKind::TavisCummings => CriticalCouplings {
            g_c: (w * w0).sqrt(),
            g_c_gamma: None,
        },
    }
}
