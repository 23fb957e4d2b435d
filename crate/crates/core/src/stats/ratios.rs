use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean of a ratio statistic with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    /// Gap order; 1 for complex spacing ratios.
    pub k: usize,
    pub r_mean: f64,
    pub r_sem: f64,
    pub count: usize,
    /// Samples dropped because both gaps vanished.
    pub skipped: usize,
    /// ⟨cos θ⟩, complex ratios only.
    pub cos_mean: Option<f64>,
    pub cos_sem: Option<f64>,
}

/// (mean, standard error of the mean).
pub fn mean_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Individual r_k^i = min(a, 1/a), a = (E_{i+2k} − E_{i+k}) / (E_{i+k} − E_i).
/// Returns the samples and the number skipped.
pub fn spacing_ratio_samples(levels: &[f64], k: usize) -> (Vec<f64>, usize) {
    let mut samples = Vec::new();
    let mut skipped = 0;
    if k == 0 || levels.len() < 2 * k + 1 {
        return (samples, skipped);
    }
    for i in 0..levels.len() - 2 * k {
        let lower = levels[i + k] - levels[i];
        let upper = levels[i + 2 * k] - levels[i + k];
        if lower == 0.0 && upper == 0.0 {
            skipped += 1;
            continue;
        }
        samples.push(lower.min(upper) / lower.max(upper));
    }
    (samples, skipped)
}

/// ⟨r_k⟩ over all valid starting indices of ascending `levels`.
pub fn spacing_ratio_k(levels: &[f64], k: usize) -> Result<RatioSummary> {
    if k == 0 {
        return Err(Error::InvalidArgument("ratio order k must be at least 1".into()));
    }
    if levels.len() < 2 * k + 1 {
        return Err(Error::InvalidArgument(format!(
            "r_{k} needs at least {} levels, got {}",
            2 * k + 1,
            levels.len()
        )));
    }
    let (samples, skipped) = spacing_ratio_samples(levels, k);
    if samples.is_empty() {
        return Err(Error::Degenerate(format!("all {skipped} r_{k} samples have zero gaps")));
    }
    let (r_mean, r_sem) = mean_sem(&samples);
    Ok(RatioSummary { k, r_mean, r_sem, count: samples.len(), skipped, cos_mean: None, cos_sem: None })
}

/// Nearest and next-nearest neighbour of one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbours {
    pub nn: usize,
    pub nn_dist: f64,
    /// Absent when there are only two points.
    pub nnn: Option<usize>,
    pub nnn_dist: f64,
}

/// Exact O(n²) neighbour search, parallel over points. Ties go to the lower index.
pub fn neighbours(points: &[Complex64]) -> Vec<Neighbours> {
    if points.len() < 2 {
        return vec![];
    }
    points
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let (mut b1, mut d1) = (usize::MAX, f64::INFINITY);
            let (mut b2, mut d2) = (usize::MAX, f64::INFINITY);
            for (j, q) in points.iter().enumerate() {
                if j == i {
                    continue;
                }
                let d = (q - p).norm_sqr();
                if d < d1 {
                    (b2, d2) = (b1, d1);
                    (b1, d1) = (j, d);
                } else if d < d2 {
                    (b2, d2) = (j, d);
                }
            }
            Neighbours {
                nn: b1,
                nn_dist: d1.sqrt(),
                nnn: (b2 != usize::MAX).then_some(b2),
                nnn_dist: d2.sqrt(),
            }
        })
        .collect()
}

/// Individual z_i = (λ_NN − λ_i)/(λ_NNN − λ_i).
pub fn complex_ratio_samples(points: &[Complex64]) -> Result<Vec<Complex64>> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "complex spacing ratio needs at least 3 points, got {}",
            points.len()
        )));
    }
    let nbs = neighbours(points);
    let mut dups: Vec<(usize, usize)> = nbs
        .iter()
        .enumerate()
        .filter(|(_, nb)| nb.nn_dist == 0.0)
        .map(|(i, nb)| (i.min(nb.nn), i.max(nb.nn)))
        .collect();
    if !dups.is_empty() {
        dups.sort_unstable();
        dups.dedup();
        return Err(Error::DuplicatePoints(dups));
    }
    Ok(nbs
        .iter()
        .enumerate()
        .map(|(i, nb)| {
            let nnn = nb.nnn.expect("at least three points");
            (points[nb.nn] - points[i]) / (points[nnn] - points[i])
        })
        .collect())
}

/// ⟨r⟩ = ⟨|z|⟩ and ⟨cos θ⟩ over all points.
pub fn complex_spacing_ratio(points: &[Complex64]) -> Result<RatioSummary> {
    let z = complex_ratio_samples(points)?;
    let r: Vec<f64> = z.iter().map(|z| z.norm()).collect();
    let c: Vec<f64> = z.iter().map(|z| z.re / z.norm()).collect();
    let (r_mean, r_sem) = mean_sem(&r);
    let (cos_mean, cos_sem) = mean_sem(&c);
    Ok(RatioSummary {
        k: 1,
        r_mean,
        r_sem,
        count: z.len(),
        skipped: 0,
        cos_mean: Some(cos_mean),
        cos_sem: Some(cos_sem),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_spacings_give_one() {
        let levels: Vec<f64> = (0..30).map(f64::from).collect();
        for k in [1, 2, 5] {
            let r = spacing_ratio_k(&levels, k).unwrap();
            assert_eq!(r.r_mean, 1.0);
            assert_eq!(r.count, 30 - 2 * k);
        }
    }

    #[test]
    fn three_levels_arithmetic() {
        let r = spacing_ratio_k(&[0.0, 1.0, 3.0], 1).unwrap();
        assert_eq!((r.r_mean, r.count), (0.5, 1));
        assert!(spacing_ratio_k(&[0.0, 1.0], 1).is_err());
        assert!(spacing_ratio_k(&[0.0, 1.0, 2.0], 0).is_err());
    }

    #[test]
    fn degenerate_samples_skipped_or_rejected() {
        let r = spacing_ratio_k(&[0.0, 0.0, 0.0, 1.0, 2.0], 1).unwrap();
        assert_eq!(r.skipped, 1);
        assert_eq!(r.count, 2);
        assert!(matches!(spacing_ratio_k(&[2.0; 6], 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn complex_ratio_small_example() {
        let pts = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)];
        let z = complex_ratio_samples(&pts).unwrap();
        assert!((z[0] - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        assert!((z[0].norm() - 0.5).abs() < 1e-15);
        assert!((z[0].re / z[0].norm()).abs() < 1e-15);
    }

    #[test]
    fn duplicates_reported_with_indices() {
        let pts = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0), Complex64::new(0.0, 0.0), Complex64::new(3.0, 0.0)];
        match complex_spacing_ratio(&pts) {
            Err(Error::DuplicatePoints(p)) => assert_eq!(p, vec![(0, 2)]),
            other => panic!("expected duplicates, got {other:?}"),
        }
    }
}
