use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::io::{parse_table, Table};

/// Reference ensembles for spacing statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    Poisson1D,
    Goe,
    Poisson2D,
    Ginue,
}

impl Ensemble {
    pub const ALL: [Ensemble; 4] = [Ensemble::Poisson1D, Ensemble::Goe, Ensemble::Poisson2D, Ensemble::Ginue];

    pub fn name(self) -> &'static str {
        match self {
            Ensemble::Poisson1D => "poisson1d",
            Ensemble::Goe => "goe",
            Ensemble::Poisson2D => "poisson2d",
            Ensemble::Ginue => "ginue",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s.to_ascii_lowercase())
    }

    /// Whether spectra of this ensemble are complex.
    pub fn is_complex(self) -> bool {
        matches!(self, Ensemble::Poisson2D | Ensemble::Ginue)
    }

    /// The Poisson counterpart with the same dimensionality.
    pub fn poisson_partner(self) -> Ensemble {
        if self.is_complex() {
            Ensemble::Poisson2D
        } else {
            Ensemble::Poisson1D
        }
    }
}

/// Tabulated density on bin centres, interpolated linearly with P(0) = 0 and
/// zero beyond the last centre.
#[derive(Clone, Debug, PartialEq)]
pub struct PdfTable {
    pub s: Vec<f64>,
    pub pdf: Vec<f64>,
    pub provenance: Option<String>,
}

impl PdfTable {
    pub fn from_table(t: &Table) -> Option<Self> {
        Some(Self { s: t.column("s")?, pdf: t.column("pdf")?, provenance: t.comment.clone() })
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 || self.s.is_empty() {
            return 0.0;
        }
        let last = self.s.len() - 1;
        if s > self.s[last] {
            return 0.0;
        }
        let i = self.s.partition_point(|&x| x < s);
        let (x0, y0) = if i == 0 { (0.0, 0.0) } else { (self.s[i - 1], self.pdf[i - 1]) };
        let (x1, y1) = (self.s[i], self.pdf[i]);
        if x1 == x0 {
            return y1;
        }
        y0 + (y1 - y0) * (s - x0) / (x1 - x0)
    }
}

const POISSON2D_TABLE: &str = include_str!("../../data/ref_nnsd_poisson2d.csv");
const GINUE_TABLE: &str = include_str!("../../data/ref_nnsd_ginue.csv");

fn shipped(text: &'static str, name: &str) -> PdfTable {
    let table = parse_table(text, Path::new(name)).unwrap_or_else(|e| panic!("shipped table {name} is corrupt: {e}"));
    PdfTable::from_table(&table).unwrap_or_else(|| panic!("shipped table {name} lacks s/pdf columns"))
}

/// The shipped sampled table for a complex ensemble.
pub fn shipped_table(kind: Ensemble) -> Option<&'static PdfTable> {
    static P2: OnceLock<PdfTable> = OnceLock::new();
    static GIN: OnceLock<PdfTable> = OnceLock::new();
    match kind {
        Ensemble::Poisson2D => Some(P2.get_or_init(|| shipped(POISSON2D_TABLE, "ref_nnsd_poisson2d.csv"))),
        Ensemble::Ginue => Some(GIN.get_or_init(|| shipped(GINUE_TABLE, "ref_nnsd_ginue.csv"))),
        _ => None,
    }
}

/// Reference NNSD: closed forms for Poisson1D (e^{−s}) and GOE
/// ((πs/2) e^{−πs²/4}); shipped sampled tables for Poisson2D and GinUE.
pub fn reference_pdf(kind: Ensemble, s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    match kind {
        Ensemble::Poisson1D => (-s).exp(),
        Ensemble::Goe => {
            let h = std::f64::consts::FRAC_PI_2;
            h * s * (-h * s * s / 2.0).exp()
        }
        _ => shipped_table(kind).expect("complex ensemble").eval(s),
    }
}
