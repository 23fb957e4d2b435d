//! Spacing statistics: NNSD histograms, reference densities, the η
//! distance and spacing ratios.

mod ratios;
mod reference;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ratios::{
    complex_ratio_samples, complex_spacing_ratio, mean_sem, neighbours, spacing_ratio_k, spacing_ratio_samples,
    Neighbours, RatioSummary,
};
pub use reference::{reference_pdf, shipped_table, Ensemble, PdfTable};

pub const DEFAULT_BINS: usize = 40;

/// Density-normalised histogram with equal-width bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub pdf: Vec<f64>,
    /// Samples that fell inside the range.
    pub count: usize,
    /// Samples above the last edge, excluded from the normalisation.
    pub overflow: usize,
}

impl Histogram {
    /// Equal-width histogram of `samples` over [lo, hi], normalised over the
    /// in-range samples. Values equal to `hi` land in the last bin.
    pub fn new(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::InvalidArgument(format!("bad histogram range [{lo}, {hi}] with {bins} bins")));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        let mut overflow = 0;
        for &x in samples {
            if x < lo || x > hi || x.is_nan() {
                overflow += 1;
                continue;
            }
            let b = (((x - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let count = samples.len() - overflow;
        let norm = if count == 0 { 0.0 } else { 1.0 / (count as f64 * width) };
        Ok(Self {
            bin_edges: (0..=bins).map(|k| lo + width * k as f64).collect(),
            pdf: counts.iter().map(|&c| c as f64 * norm).collect(),
            count,
            overflow,
        })
    }

    pub fn bins(&self) -> usize {
        self.pdf.len()
    }

    pub fn width(&self, b: usize) -> f64 {
        self.bin_edges[b + 1] - self.bin_edges[b]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Σ pdf · width.
    pub fn integral(&self) -> f64 {
        (0..self.bins()).map(|b| self.pdf[b] * self.width(b)).sum()
    }
}

/// Nearest-rank percentile of unsorted data.
pub fn percentile(data: &[f64], p: f64) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * v.len() as f64).ceil() as usize;
    v[rank.clamp(1, v.len()) - 1]
}

/// NNSD histogram over [0, max(4, p99)] with `bins` equal bins.
pub fn nnsd(spacings: &[f64], bins: usize) -> Result<Histogram> {
    if spacings.is_empty() {
        return Err(Error::InvalidArgument("NNSD needs at least one spacing".into()));
    }
    let s_max = percentile(spacings, 99.0).max(4.0);
    Histogram::new(spacings, 0.0, s_max, bins)
}

/// Composite Simpson rule on [a, b] with an even number of panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + h * k as f64) * if k % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// ∫ (P_Poi − P_RMT)² ds for the closed (GOE) or open (GinUE) pair.
pub fn eta_denominator(rmt: Ensemble) -> Result<f64> {
    let (poisson, upper, panels) = match rmt {
        Ensemble::Goe => (Ensemble::Poisson1D, 40.0, 40_000),
        // tables vanish past their last centre
        Ensemble::Ginue => (Ensemble::Poisson2D, 8.0, 16_000),
        other => return Err(Error::InvalidArgument(format!("η is defined against GOE or GinUE, not {}", other.name()))),
    };
    let d = simpson(|s| (reference_pdf(poisson, s) - reference_pdf(rmt, s)).powi(2), 0.0, upper, panels);
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Numerical(format!("η denominator is {d}; reference tables are unusable")));
    }
    Ok(d)
}

/// η = Σ_bins (P_sys − P_Poi)² · width / ∫ (P_Poi − P_RMT)² ds, references
/// evaluated at bin centres in the numerator.
pub fn eta(hist: &Histogram, rmt: Ensemble) -> Result<f64> {
    let denom = eta_denominator(rmt)?;
    let poisson = rmt.poisson_partner();
    let num: f64 = hist
        .centers()
        .iter()
        .enumerate()
        .map(|(b, &c)| (hist.pdf[b] - reference_pdf(poisson, c)).powi(2) * hist.width(b))
        .sum();
    Ok(num / denom)
}

/// Maximum-likelihood fit of p(s) ∝ s^κ to the samples inside [lo, hi].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub sem: f64,
    pub count: usize,
}

// E[ln s] under s^κ truncated to [lo, hi]
fn mean_log(kappa: f64, lo: f64, hi: f64) -> f64 {
    let u = kappa + 1.0;
    if u.abs() < 1e-9 {
        return 0.5 * (lo.ln() + hi.ln());
    }
    let r = (lo / hi).powf(u);
    hi.ln() + (hi / lo).ln() * r / (1.0 - r) - 1.0 / u
}

/// Small-s power-law exponent of a spacing sample, fitted on [lo, hi].
pub fn power_law_exponent(samples: &[f64], lo: f64, hi: f64) -> Result<PowerLawFit> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("power-law range needs 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let logs: Vec<f64> = samples.iter().filter(|&&s| s >= lo && s <= hi).map(|s| s.ln()).collect();
    if logs.len() < 10 {
        return Err(Error::Degenerate(format!("only {} samples inside [{lo}, {hi}]", logs.len())));
    }
    let target = logs.iter().sum::<f64>() / logs.len() as f64;
    let (mut a, mut b) = (-0.999, 50.0);
    if target <= mean_log(a, lo, hi) || target >= mean_log(b, lo, hi) {
        return Err(Error::Numerical("power-law exponent outside [-1, 50]".into()));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if mean_log(m, lo, hi) < target {
            a = m;
        } else {
            b = m;
        }
    }
    let kappa = 0.5 * (a + b);
    let h = 1e-4;
    let var = (mean_log(kappa + h, lo, hi) - mean_log(kappa - h, lo, hi)) / (2.0 * h);
    Ok(PowerLawFit { exponent: kappa, sem: 1.0 / (var * logs.len() as f64).sqrt(), count: logs.len() })
}
