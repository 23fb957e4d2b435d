use std::path::Path;

use serde_json::{json, Value};

use super::run::RunManifest;
use crate::error::Result;
use crate::io::read_table;

/// (last-decade mean of `col`, min of `smooth_col` over the grid before that
/// decade) for a curve file.
fn curve_stats(path: &Path, x: &str, col: &str, smooth_col: &str) -> Result<Option<Value>> {
    if !path.exists() {
        return Ok(None);
    }
    let t = read_table(path)?;
    let (Some(xs), Some(raw), Some(sm)) = (t.column(x), t.column(col), t.column(smooth_col)) else {
        return Ok(None);
    };
    let hi = xs.last().copied().unwrap_or(0.0);
    let tail: Vec<f64> = xs.iter().zip(&raw).filter(|(t, _)| **t >= hi / 10.0).map(|(_, v)| *v).collect();
    let plateau = tail.iter().sum::<f64>() / tail.len().max(1) as f64;
    let min = xs.iter().zip(&sm).filter(|(t, _)| **t > 0.0).map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    Ok(Some(json!({ "plateau": plateau, "min_smoothed": min, "min_over_plateau": min / plateau })))
}

/// Headline statistics of a finished run directory.
pub fn report(dir: &Path) -> Result<Value> {
    let manifest = RunManifest::load(dir)?;
    manifest.verify(dir)?;
    let mut points = Vec::new();
    for p in &manifest.points {
        let pdir = dir.join("points").join(&p.label);
        let mut entry = json!({
            "label": p.label,
            "g": p.g,
            "gamma": p.gamma,
            "g_rel": p.g_rel,
            "ok": p.ok,
            "error": p.error,
            "n_selected": p.summary.n_selected,
            "eta": p.summary.eta,
            "ratios": p.summary.ratios,
            "csr": p.summary.csr,
        });
        if let Some(s) = curve_stats(&pdir.join("sff.csv"), "t", "raw", "smoothed")? {
            let n = p.summary.n_selected.max(1) as f64;
            entry["sff"] = s.clone();
            entry["sff"]["plateau_times_n"] = json!(s["plateau"].as_f64().unwrap_or(f64::NAN) * n);
        }
        if let Some(s) = curve_stats(&pdir.join("dsff.csv"), "tau", "value", "value")? {
            entry["dsff"] = s;
        }
        if let Some(s) = curve_stats(&pdir.join("dspf.csv"), "t", "mean", "mean")? {
            entry["dspf"] = json!({ "late_mean": s["plateau"] });
        }
        points.push(entry);
    }
    Ok(json!({
        "version": manifest.version,
        "command": manifest.command,
        "points": points,
        "eigensolves": manifest.eigensolves,
        "cache_hits": manifest.cache_hits,
        "failed": manifest.points.iter().filter(|p| !p.ok).count(),
    }))
}
