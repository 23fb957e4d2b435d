//! Lindblad superoperator for a single damped cavity mode.
//!
//! Vectorization is column stacking, vec(X)[i + j·d] = X[i, j], so that
//! vec(A X B) = (Bᵀ ⊗ A) vec(X). The identity is checked once per process
//! before the first superoperator is built.

use std::sync::{Arc, OnceLock};

use faer::Mat;
use num_complex::Complex64;

use super::basis::SpinBosonBasis;
use super::hamiltonian::{
    annihilation_elements, hamiltonian_elements, Entries, OperatorKind, OperatorMatrix, SparseOperator,
};
use super::params::ModelParams;
use crate::error::{Error, Result};

/// Default cap on dense superoperator entries (dim² × dim²).
pub const DEFAULT_SUPEROPERATOR_CAP: u128 = 40_000_000;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Column-stacking vectorization.
pub fn vec_of(x: &Mat<Complex64>) -> Vec<Complex64> {
    let (r, c) = (x.nrows(), x.ncols());
    let mut v = Vec::with_capacity(r * c);
    for j in 0..c {
        for i in 0..r {
            v.push(x[(i, j)]);
        }
    }
    v
}

/// Inverse of [`vec_of`] for a square `d × d` matrix.
pub fn unvec(v: &[Complex64], d: usize) -> Mat<Complex64> {
    Mat::from_fn(d, d, |i, j| v[i + j * d])
}

/// Kronecker product with the outer factor first: (P ⊗ Q)[j·dq + i, l·dq + k] = P[j,l]·Q[i,k].
pub fn kron(p: &Mat<Complex64>, q: &Mat<Complex64>) -> Mat<Complex64> {
    let (pr, pc, qr, qc) = (p.nrows(), p.ncols(), q.nrows(), q.ncols());
    Mat::from_fn(pr * qr, pc * qc, |r, c| p[(r / qr, c / qc)] * q[(r % qr, c % qc)])
}

fn vectorization_self_test() {
    static CHECKED: OnceLock<()> = OnceLock::new();
    CHECKED.get_or_init(|| {
        let d = 3;
        let f = |s: f64| move |i: usize, j: usize| Complex64::new((s * (i + 2 * j) as f64).sin(), (s + i as f64 - j as f64).cos());
        let (a, x, b) = (Mat::from_fn(d, d, f(0.7)), Mat::from_fn(d, d, f(1.3)), Mat::from_fn(d, d, f(2.1)));
        let lhs = vec_of(&(&a * &x * &b));
        let bt = b.transpose().to_owned();
        let vx = vec_of(&x);
        let k = kron(&bt, &a);
        for (r, l) in lhs.iter().enumerate() {
            let rhs: Complex64 = (0..d * d).map(|c| k[(r, c)] * vx[c]).sum();
            assert!((rhs - l).norm() < 1e-12, "vectorization convention self-test failed");
        }
    });
}

/// Dense Lindblad generator for H and a single jump operator `a` at rate γ:
/// dρ/dt = −i[H, ρ] + γ(2 a ρ a† − a†a ρ − ρ a†a).
pub fn lindblad_superoperator(
    h: &SparseOperator,
    jump: &SparseOperator,
    gamma: f64,
    basis: Arc<SpinBosonBasis>,
    cap: u128,
) -> Result<OperatorMatrix> {
    vectorization_self_test();
    let d = h.dim;
    let big = d * d;
    let requested = (big as u128) * (big as u128);
    if requested > cap {
        return Err(Error::ResourceCap {
            what: "Liouvillian superoperator",
            requested,
            cap,
        });
    }
    let mut l = Mat::<Complex64>::zeros(big, big);

    // −i (I ⊗ H − Hᵀ ⊗ I)
    for &(i, k, v) in &h.triplets {
        for j in 0..d {
            l[(i + j * d, k + j * d)] += -I * v;
        }
        // Hᵀ[k, i] = v, so (Hᵀ ⊗ I)[r + k·d, r + i·d] = v
        for r in 0..d {
            l[(r + k * d, r + i * d)] += I * v;
        }
    }

    if gamma != 0.0 {
        // 2γ (ā ⊗ a), a real
        for &(j, lcol, x) in &jump.triplets {
            for &(i, k, y) in &jump.triplets {
                l[(i + j * d, k + lcol * d)] += Complex64::new(2.0 * gamma * x * y, 0.0);
            }
        }
        // −γ (I ⊗ a†a + (a†a)ᵀ ⊗ I)
        let number = number_operator(jump).to_dense();
        for j in 0..d {
            for i in 0..d {
                for k in 0..d {
                    let nik = number[(i, k)];
                    if nik != 0.0 {
                        l[(i + j * d, k + j * d)] -= Complex64::new(gamma * nik, 0.0);
                    }
                    // ((a†a)ᵀ ⊗ I)[i + j·d, i + k·d] = (a†a)[k, j]
                    let nkj = number[(k, j)];
                    if nkj != 0.0 {
                        l[(i + j * d, i + k * d)] -= Complex64::new(gamma * nkj, 0.0);
                    }
                }
            }
        }
    }
    Ok(OperatorMatrix::new(Entries::Complex(l), basis, OperatorKind::Superoperator))
}

/// a†a from the triplets of a.
pub fn number_operator(a: &SparseOperator) -> SparseOperator {
    let dense = a.to_dense();
    let d = a.dim;
    let mut triplets = Vec::new();
    for k in 0..d {
        for l in 0..d {
            let v: f64 = (0..d).map(|i| dense[(i, k)] * dense[(i, l)]).sum();
            if v != 0.0 {
                triplets.push((k, l, v));
            }
        }
    }
    SparseOperator { dim: d, triplets }
}

/// Liouvillian of the cavity-damped model in the full truncated basis.
pub fn build_liouvillian(params: &ModelParams) -> Result<OperatorMatrix> {
    build_liouvillian_capped(params, DEFAULT_SUPEROPERATOR_CAP)
}

pub fn build_liouvillian_capped(params: &ModelParams, cap: u128) -> Result<OperatorMatrix> {
    params.validate()?;
    let basis = Arc::new(SpinBosonBasis::full(params.two_j(), params.photon_cutoff));
    let h = hamiltonian_elements(params, &basis);
    let a = annihilation_elements(&basis);
    lindblad_superoperator(&h, &a, params.gamma, basis, cap)
}

/// Matrix-free application of the same generator to a density matrix.
pub fn apply_lindblad(h: &SparseOperator, a: &SparseOperator, number: &SparseOperator, gamma: f64, rho: &Mat<Complex64>) -> Mat<Complex64> {
    let d = h.dim;
    let mut out = Mat::<Complex64>::zeros(d, d);
    // −i H ρ + i ρ H
    for &(i, k, v) in &h.triplets {
        let c = -I * v;
        for j in 0..d {
            out[(i, j)] += c * rho[(k, j)];
        }
        let c = I * v;
        for r in 0..d {
            out[(r, k)] += c * rho[(r, i)];
        }
    }
    if gamma != 0.0 {
        // 2γ a ρ a†: (a ρ aᵀ)[i, l] = Σ a[i,k] ρ[k,j] a[l,j]
        let mut arho = Mat::<Complex64>::zeros(d, d);
        for &(i, k, v) in &a.triplets {
            for j in 0..d {
                arho[(i, j)] += rho[(k, j)] * v;
            }
        }
        for &(l, j, v) in &a.triplets {
            let c = 2.0 * gamma * v;
            for i in 0..d {
                out[(i, l)] += arho[(i, j)] * c;
            }
        }
        for &(i, k, v) in &number.triplets {
            let c = -gamma * v;
            for j in 0..d {
                out[(i, j)] += rho[(k, j)] * c;
            }
            // ρ N: out[r, k] += ρ[r, i] N[i, k]
            for r in 0..d {
                out[(r, k)] += rho[(r, i)] * c;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator_only(cutoff: u32) -> (SparseOperator, SparseOperator, Arc<SpinBosonBasis>) {
        let basis = Arc::new(SpinBosonBasis::full(0, cutoff));
        let zero = SparseOperator { dim: basis.dim(), triplets: vec![] };
        (zero, annihilation_elements(&basis), basis)
    }

    #[test]
    fn trace_preservation_left_null_vector() {
        let p = ModelParams::dicke(0.9, 1.0, 4).with_gamma(0.6);
        let l = build_liouvillian(&p).unwrap();
        let m = l.as_complex().unwrap();
        let d = l.basis().dim();
        for col in 0..d * d {
            let s: Complex64 = (0..d).map(|i| m[(i + i * d, col)]).sum();
            assert!(s.norm() < 1e-10, "column {col} has trace leak {s}");
        }
    }

    #[test]
    fn superoperator_dimension_and_cap() {
        let p = ModelParams::dicke(0.5, 0.5, 2).with_gamma(1.0);
        let l = build_liouvillian(&p).unwrap();
        assert_eq!(l.dim(), 36);
        match build_liouvillian_capped(&p, 1000) {
            Err(Error::ResourceCap { requested, cap, .. }) => {
                assert_eq!(requested, 36 * 36);
                assert_eq!(cap, 1000);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn damped_oscillator_generator_entries() {
        // brute-force action on |i⟩⟨j| for the two-level truncated oscillator
        let (h, a, basis) = oscillator_only(1);
        let l = lindblad_superoperator(&h, &a, 1.0, basis, DEFAULT_SUPEROPERATOR_CAP).unwrap();
        let m = l.as_complex().unwrap();
        let number = number_operator(&a);
        for col in 0..4 {
            let mut e = vec![Complex64::new(0.0, 0.0); 4];
            e[col] = Complex64::new(1.0, 0.0);
            let rho = unvec(&e, 2);
            let expect = vec_of(&apply_lindblad(&h, &a, &number, 1.0, &rho));
            for row in 0..4 {
                assert!((m[(row, col)] - expect[row]).norm() < 1e-15);
            }
        }
    }
}
