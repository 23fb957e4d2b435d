//! On-disk eigenvalue cache.
//!
//! Each entry is `<key>.bin`: one JSON header line, then the eigenvalues as
//! raw little-endian f64 (re, im interleaved for complex spectra). Writers
//! create a unique temporary file and rename it into place, so concurrent
//! writers of the same key are harmless.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::sha256_hex;
use crate::model::ModelParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    key: String,
    complex: bool,
    len: usize,
    version: String,
}

/// What was diagonalised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Hamiltonian,
    Liouvillian,
}

/// Cache key: sha256 of (operator, model params incl. cutoff and sector).
pub fn cache_key(op: Operator, params: &ModelParams) -> String {
    let desc = serde_json::json!({ "operator": op, "params": params, "format": 1 });
    sha256_hex(desc.to_string().as_bytes())
}

#[derive(Debug)]
pub struct EigenCache {
    dir: PathBuf,
    hits: AtomicUsize,
    solves: AtomicUsize,
}

impl EigenCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir, hits: AtomicUsize::new(0), solves: AtomicUsize::new(0) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn solves(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.bin"))
    }

    fn read(&self, key: &str, complex: bool) -> Result<Option<Vec<f64>>> {
        let path = self.path(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let corrupt = |m: &str| Error::Format { path: path.clone(), message: m.to_string() };
        let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| corrupt("missing header"))?;
        let header: Header = serde_json::from_slice(&bytes[..nl]).map_err(|e| corrupt(&e.to_string()))?;
        let body = &bytes[nl + 1..];
        let width = if header.complex { 2 } else { 1 };
        if header.key != key || header.complex != complex || body.len() != header.len * width * 8 {
            return Err(corrupt("header does not match contents"));
        }
        Ok(Some(body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect()))
    }

    fn write(&self, key: &str, complex: bool, values: &[f64]) -> Result<()> {
        let width = if complex { 2 } else { 1 };
        let header = Header { key: key.into(), complex, len: values.len() / width, version: env!("CARGO_PKG_VERSION").into() };
        let mut bytes = serde_json::to_vec(&header).expect("header serialises");
        bytes.push(b'\n');
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let tmp = self.dir.join(format!(
            "{key}.tmp.{}.{:?}",
            std::process::id(),
            std::thread::current().id()
        ));
        fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
        let dest = self.path(key);
        fs::rename(&tmp, &dest).map_err(|e| Error::io(&dest, e))
    }

    /// Cached real eigenvalues, computing and storing them on a miss.
    pub fn real(&self, key: &str, compute: impl FnOnce() -> Result<Vec<f64>>) -> Result<Vec<f64>> {
        if let Some(v) = self.read(key, false)? {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v);
        }
        let v = compute()?;
        self.solves.fetch_add(1, Ordering::Relaxed);
        self.write(key, false, &v)?;
        Ok(v)
    }

    /// Cached complex eigenvalues.
    pub fn complex(&self, key: &str, compute: impl FnOnce() -> Result<Vec<Complex64>>) -> Result<Vec<Complex64>> {
        if let Some(v) = self.read(key, true)? {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect());
        }
        let v = compute()?;
        self.solves.fetch_add(1, Ordering::Relaxed);
        let flat: Vec<f64> = v.iter().flat_map(|z| [z.re, z.im]).collect();
        self.write(key, true, &flat)?;
        Ok(v)
    }
}
