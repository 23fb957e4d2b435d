use std::path::Path;

use serde_json::{json, Value};

use super::run::{effective_workers, FileEntry};
use crate::dynamics::{default_sff_grid, DEFAULT_DPHI, DEFAULT_N_PHI, DEFAULT_PHI, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::io::{fmt, sha256_file, write_csv, write_json};
use crate::rmt::{ensemble_complex_ratio, ensemble_dsff, ensemble_ratio, ensemble_sff, reference_table_csv, EnsembleSpec};

/// Histogram layout of shipped reference tables.
pub const TABLE_BINS: usize = 200;
pub const TABLE_S_MAX: f64 = 4.0;

/// Samples an ensemble and writes `ref_nnsd_<kind>.csv`, a ratio summary
/// (`ratios.csv` or `csr.csv`), the ensemble form factor (`baseline_sff.csv`
/// or `baseline_dsff.csv`) and `baseline.json` into `out`. Realizations run
/// on `workers` threads; the output does not depend on the count.
pub fn baseline(spec: &EnsembleSpec, out: &Path, workers: usize) -> Result<Value> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(effective_workers(workers))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| baseline_inner(spec, out))
}

fn baseline_inner(spec: &EnsembleSpec, out: &Path) -> Result<Value> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let kind = spec.kind;
    let mut files = Vec::new();
    let mut record = |p: &Path| -> Result<()> {
        files.push(FileEntry { path: p.file_name().unwrap_or_default().to_string_lossy().into(), sha256: sha256_file(p)? });
        Ok(())
    };

    let table = out.join(format!("ref_nnsd_{}.csv", kind.name()));
    let text = reference_table_csv(spec, TABLE_BINS, TABLE_S_MAX)?;
    std::fs::write(&table, text).map_err(|e| Error::io(&table, e))?;
    record(&table)?;

    let grid = default_sff_grid();
    let summary = if kind.is_complex() {
        let r = ensemble_complex_ratio(spec)?;
        let p = out.join("csr.csv");
        write_csv(&p, &["r_mean", "cos_mean", "count"], [vec![fmt(r.r_mean), fmt(r.cos_mean.unwrap_or(f64::NAN)), r.count.to_string()]])?;
        record(&p)?;
        let curve = ensemble_dsff(spec, &grid, DEFAULT_PHI, DEFAULT_DPHI, DEFAULT_N_PHI, DEFAULT_WINDOW)?;
        let p = out.join("baseline_dsff.csv");
        write_csv(&p, &["tau", "value"], curve.abscissa.iter().zip(curve.best()).map(|(t, v)| vec![fmt(*t), fmt(*v)]))?;
        record(&p)?;
        json!({ "csr": r, "dsff_plateau": curve.last_decade_mean(&curve.raw) })
    } else {
        let r = ensemble_ratio(spec, 1)?;
        let p = out.join("ratios.csv");
        write_csv(&p, &["k", "r_mean", "r_sem", "count"], [vec!["1".into(), fmt(r.r_mean), fmt(r.r_sem), r.count.to_string()]])?;
        record(&p)?;
        let curve = ensemble_sff(spec, &grid, DEFAULT_WINDOW)?;
        let p = out.join("baseline_sff.csv");
        let smoothed = curve.best();
        write_csv(
            &p,
            &["t", "raw", "smoothed"],
            curve.abscissa.iter().zip(&curve.raw).zip(smoothed).map(|((t, r), s)| vec![fmt(*t), fmt(*r), fmt(*s)]),
        )?;
        record(&p)?;
        json!({ "r1": r, "sff_plateau": curve.last_decade_mean(&curve.raw), "n_kept": curve.meta.get("n_kept") })
    };
    let result = json!({
        "spec": spec,
        "summary": summary,
        "files": files,
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_json(&out.join("baseline.json"), &result)?;
    Ok(result)
}
