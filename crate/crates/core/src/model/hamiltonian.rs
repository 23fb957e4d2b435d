use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;

use super::basis::{BasisState, SpinBosonBasis};
use super::params::{ModelKind, ModelParams, Sector};
use crate::error::{Error, Result};

/// Absolute tolerance for symmetry-commutator checks.
pub const COMMUTATOR_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Hamiltonian,
    Superoperator,
    Projector,
    Ladder,
}

#[derive(Clone, Debug)]
pub enum Entries {
    Real(Mat<f64>),
    Complex(Mat<Complex64>),
}

/// Dense operator tied to the basis it is expressed in.
///
/// For `Superoperator` kind the matrix acts on column-stacked density
/// matrices, so its dimension is `basis.dim()²`.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    entries: Entries,
    basis: Arc<SpinBosonBasis>,
    kind: OperatorKind,
}

impl OperatorMatrix {
    pub fn new(entries: Entries, basis: Arc<SpinBosonBasis>, kind: OperatorKind) -> Self {
        Self { entries, basis, kind }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn basis(&self) -> &Arc<SpinBosonBasis> {
        &self.basis
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        match &self.entries {
            Entries::Real(m) => m.nrows(),
            Entries::Complex(m) => m.nrows(),
        }
    }

    pub fn as_real(&self) -> Option<&Mat<f64>> {
        match &self.entries {
            Entries::Real(m) => Some(m),
            Entries::Complex(_) => None,
        }
    }

    pub fn as_complex(&self) -> Option<&Mat<Complex64>> {
        match &self.entries {
            Entries::Complex(m) => Some(m),
            Entries::Real(_) => None,
        }
    }

    pub fn to_complex(&self) -> Mat<Complex64> {
        match &self.entries {
            Entries::Complex(m) => m.clone(),
            Entries::Real(m) => Mat::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::new(m[(i, j)], 0.0)),
        }
    }

    pub fn into_real(self) -> Option<Mat<f64>> {
        match self.entries {
            Entries::Real(m) => Some(m),
            Entries::Complex(_) => None,
        }
    }

    /// Largest |A_ij − A_ji| relative to the largest |A_ij|.
    pub fn asymmetry(&self) -> f64 {
        let (n, mut num, mut den) = (self.dim(), 0.0f64, 0.0f64);
        for j in 0..n {
            for i in 0..n {
                let (a, b) = match &self.entries {
                    Entries::Real(m) => (Complex64::new(m[(i, j)], 0.0), Complex64::new(m[(j, i)], 0.0)),
                    Entries::Complex(m) => (m[(i, j)], m[(j, i)]),
                };
                num = num.max((a - b).norm());
                den = den.max(a.norm());
            }
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

/// Real sparse operator as (row, col, value) triplets in some basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    pub dim: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

impl SparseOperator {
    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.triplets {
            m[(i, j)] += v;
        }
        m
    }

    /// Induced 1-norm (max absolute column sum).
    pub fn norm_l1(&self) -> f64 {
        let mut col = vec![0.0; self.dim];
        for &(_, j, v) in &self.triplets {
            col[j] += v.abs();
        }
        col.into_iter().fold(0.0, f64::max)
    }
}

fn spin_raise_factor(two_j: u32, two_m: i32) -> f64 {
    // j(j+1) − m(m+1) in units of 1/4
    let tj = two_j as i64;
    let tm = two_m as i64;
    (((tj * (tj + 2) - tm * (tm + 2)) as f64) / 4.0).max(0.0).sqrt()
}

/// Matrix elements of the model Hamiltonian restricted to `basis`.
///
/// Each column is generated from the ladder actions a|n⟩ = √n|n−1⟩,
/// a†|n⟩ = √(n+1)|n+1⟩, J±|m⟩ = √(j(j+1) − m(m±1))|m±1⟩; targets
/// outside `basis` are dropped, which yields P H P for the basis projector P.
pub fn hamiltonian_elements(params: &ModelParams, basis: &SpinBosonBasis) -> SparseOperator {
    let two_j = basis.two_j();
    let coupling = if two_j == 0 { 0.0 } else { params.g / (two_j as f64).sqrt() };
    // (photon step, spin step) pairs present in the coupling
    let moves: &[(i32, i32)] = match params.model {
        ModelKind::Dicke => &[(-1, -1), (-1, 1), (1, -1), (1, 1)],
        ModelKind::TavisCummings => &[(-1, 1), (1, -1)],
    };
    let mut triplets = Vec::with_capacity(basis.dim() * (moves.len() + 1));
    for (col, s) in basis.states().iter().enumerate() {
        triplets.push((col, col, params.omega0 * s.m() + params.omega * s.n as f64));
        if coupling == 0.0 {
            continue;
        }
        for &(dn, dm) in moves {
            let n = s.n as i64 + dn as i64;
            let two_m = s.two_m + 2 * dm;
            if n < 0 || two_m.unsigned_abs() > two_j {
                continue;
            }
            let target = BasisState { n: n as u32, two_m };
            let Some(row) = basis.index_of(&target) else { continue };
            let photon = if dn < 0 { (s.n as f64).sqrt() } else { (s.n as f64 + 1.0).sqrt() };
            let spin = if dm > 0 {
                spin_raise_factor(two_j, s.two_m)
            } else {
                spin_raise_factor(two_j, two_m)
            };
            triplets.push((row, col, coupling * photon * spin));
        }
    }
    SparseOperator { dim: basis.dim(), triplets }
}

/// Cavity annihilation operator in `basis` (states outside the basis dropped).
pub fn annihilation_elements(basis: &SpinBosonBasis) -> SparseOperator {
    let triplets = basis
        .states()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.n > 0)
        .filter_map(|(col, s)| {
            let target = BasisState { n: s.n - 1, two_m: s.two_m };
            basis.index_of(&target).map(|row| (row, col, (s.n as f64).sqrt()))
        })
        .collect();
    SparseOperator { dim: basis.dim(), triplets }
}

/// Full truncated-space Hamiltonian (sector field of `params` ignored).
pub fn build_hamiltonian(params: &ModelParams) -> Result<OperatorMatrix> {
    params.validate()?;
    let basis = Arc::new(SpinBosonBasis::full(params.two_j(), params.photon_cutoff));
    Ok(hamiltonian_in(params, basis))
}

/// Hamiltonian assembled directly in the basis selected by `params.sector`.
///
/// For `Even`/`Odd` this equals `parity_project(build_hamiltonian(..))`
/// without forming the full matrix. Excitation sectors are block-diagonal and
/// should go through [`tc_sector_hamiltonian`] one block at a time.
pub fn sector_hamiltonian(params: &ModelParams) -> Result<OperatorMatrix> {
    params.validate()?;
    let (two_j, m) = (params.two_j(), params.photon_cutoff);
    let basis = match &params.sector {
        Sector::Full => SpinBosonBasis::full(two_j, m),
        Sector::Even | Sector::Odd => {
            let want = if params.sector == Sector::Even { 1 } else { -1 };
            let full = SpinBosonBasis::full(two_j, m);
            SpinBosonBasis::filtered(two_j, m, |s| full.parity(s) == want)
        }
        Sector::Excitations(qs) => {
            let full = SpinBosonBasis::full(two_j, m);
            SpinBosonBasis::filtered(two_j, m, |s| qs.contains(&full.excitation(s)))
        }
    };
    Ok(hamiltonian_in(params, Arc::new(basis)))
}

fn hamiltonian_in(params: &ModelParams, basis: Arc<SpinBosonBasis>) -> OperatorMatrix {
    let dense = hamiltonian_elements(params, &basis).to_dense();
    OperatorMatrix::new(Entries::Real(dense), basis, OperatorKind::Hamiltonian)
}

/// Max |[H, D]_ab| for a diagonal symmetry generator D with eigenvalue
/// `label(state)` on each basis state.
pub fn diagonal_commutator_max(h: &OperatorMatrix, label: impl Fn(&BasisState) -> f64) -> f64 {
    let basis = h.basis();
    let labels: Vec<f64> = basis.states().iter().map(&label).collect();
    let n = h.dim();
    let mut worst = 0.0f64;
    for b in 0..n {
        for a in 0..n {
            let hab = match h.entries() {
                Entries::Real(m) => m[(a, b)].abs(),
                Entries::Complex(m) => m[(a, b)].norm(),
            };
            worst = worst.max(hab * (labels[b] - labels[a]).abs());
        }
    }
    worst
}

/// Max |[H, Π]| entry with Π the Dicke parity.
pub fn parity_commutator_max(h: &OperatorMatrix) -> f64 {
    let basis = h.basis().clone();
    diagonal_commutator_max(h, |s| basis.parity(s) as f64)
}

/// Max |[H, Q]| entry with Q = J_z + a†a + j.
pub fn excitation_commutator_max(h: &OperatorMatrix) -> f64 {
    let basis = h.basis().clone();
    diagonal_commutator_max(h, |s| basis.excitation(s) as f64)
}

/// Restrict `h` to one parity sector. Fails if `h` mixes parities.
pub fn parity_project(h: &OperatorMatrix, sector: &Sector) -> Result<OperatorMatrix> {
    let want = match sector {
        Sector::Even => 1,
        Sector::Odd => -1,
        other => {
            return Err(Error::InvalidArgument(format!(
                "parity_project needs Even or Odd, got {}",
                other.label()
            )))
        }
    };
    let worst = parity_commutator_max(h);
    if worst > COMMUTATOR_TOL {
        return Err(Error::NonCommuting { max_entry: worst });
    }
    let full = h.basis();
    let keep: Vec<usize> = full
        .states()
        .iter()
        .enumerate()
        .filter(|(_, s)| full.parity(s) == want)
        .map(|(i, _)| i)
        .collect();
    let sub = SpinBosonBasis::filtered(full.two_j(), full.cutoff(), |s| full.parity(s) == want);
    let entries = match h.entries() {
        Entries::Real(m) => Entries::Real(Mat::from_fn(keep.len(), keep.len(), |i, j| m[(keep[i], keep[j])])),
        Entries::Complex(m) => {
            Entries::Complex(Mat::from_fn(keep.len(), keep.len(), |i, j| m[(keep[i], keep[j])]))
        }
    };
    Ok(OperatorMatrix::new(entries, Arc::new(sub), h.kind()))
}

/// Block of the Tavis-Cummings Hamiltonian with excitation number q.
///
/// The photon cutoff of `params` is ignored; the sector fixes n ≤ q.
pub fn tc_sector_hamiltonian(params: &ModelParams, q: u32) -> Result<OperatorMatrix> {
    if params.model != ModelKind::TavisCummings {
        return Err(Error::InvalidArgument("tc_sector_hamiltonian needs a Tavis-Cummings model".into()));
    }
    params.validate()?;
    let basis = Arc::new(SpinBosonBasis::excitation_sector(params.two_j(), q));
    Ok(hamiltonian_in(params, basis))
}
