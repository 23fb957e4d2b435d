//! Spectral and dynamical indicators of quantum chaos for the closed and
//! cavity-damped Dicke model and the Tavis-Cummings model, with sampled
//! random-matrix baselines (GOE, GinUE, 1D and 2D Poisson).
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: bases, Hamiltonians, parity/excitation sectors, Liouvillian.
//! - [`spectra`]: dense eigensolves, cutoff-convergence filtering, windows.
//! - [`unfolding`]: staircase polynomial, density rescale and power-map unfolding.
//! - [`stats`]: NNSD histograms, reference densities, η, spacing ratios.
//! - [`dynamics`]: SFF, DSFF, moving averages, coherent Gibbs states, DSPF.
//! - [`rmt`]: seeded ensemble samplers and ensemble-averaged baselines.
//! - [`pipeline`]: configuration, cached sweeps, CSV/manifest output.

pub mod dynamics;
pub mod error;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod rmt;
pub mod rng;
pub mod spectra;
pub mod stats;
pub mod unfolding;

pub use error::{Error, Result};
pub use num_complex::Complex64;
