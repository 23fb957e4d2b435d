//! Spin-boson model construction: bases, Hamiltonians, symmetry sectors and
//! the cavity-damped Liouvillian.

mod basis;
mod hamiltonian;
mod liouvillian;
mod params;

pub use basis::{BasisState, SpinBosonBasis};
pub use hamiltonian::{
    annihilation_elements, build_hamiltonian, diagonal_commutator_max, excitation_commutator_max,
    hamiltonian_elements, parity_commutator_max, parity_project, sector_hamiltonian, tc_sector_hamiltonian,
    Entries, OperatorKind, OperatorMatrix, SparseOperator, COMMUTATOR_TOL,
};
pub use liouvillian::{
    apply_lindblad, build_liouvillian, build_liouvillian_capped, kron, lindblad_superoperator, number_operator,
    unvec, vec_of, DEFAULT_SUPEROPERATOR_CAP,
};
pub use params::{critical_couplings, CriticalCouplings, ModelKind, ModelParams, Sector};
