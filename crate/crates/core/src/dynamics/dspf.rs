//! Dissipative survival probability ⟨ψ_β| ρ(t) |ψ_β⟩ of the coherent Gibbs state.

use std::sync::Arc;

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cgs, check_grid, CurveSeries};
use crate::error::{Error, Result};
use crate::model::{annihilation_elements, hamiltonian_elements, number_operator, Entries, ModelParams, OperatorKind, OperatorMatrix, SparseOperator, SpinBosonBasis};
use crate::rng::substream;
use crate::spectra::eig_symmetric_with_vectors;

/// Largest density matrix (entries) handled by direct propagation.
pub const DIRECT_STATE_CAP: usize = 250_000;
pub const DEFAULT_N_TRAJ: usize = 100;
/// Bound on ‖L‖₁ δt per propagation step.
const STEP_NORM: f64 = 0.1;
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum DspfBackend {
    Trajectories { n_traj: usize, seed: u64 },
    DirectPropagation,
}

impl DspfBackend {
    pub fn name(&self) -> &'static str {
        match self {
            DspfBackend::Trajectories { .. } => "trajectories",
            DspfBackend::DirectPropagation => "direct",
        }
    }
}

/// Direct propagation while dim² fits [`DIRECT_STATE_CAP`], else 100 trajectories.
pub fn default_backend(dim: usize, seed: u64) -> DspfBackend {
    if dim * dim <= DIRECT_STATE_CAP {
        DspfBackend::DirectPropagation
    } else {
        DspfBackend::Trajectories { n_traj: DEFAULT_N_TRAJ, seed }
    }
}

/// DSPF on `grid` for the model in its full truncated basis.
pub fn dspf(params: &ModelParams, beta: f64, grid: &[f64], backend: DspfBackend) -> Result<CurveSeries> {
    params.validate()?;
    check_grid(grid)?;
    let basis = Arc::new(SpinBosonBasis::full(params.two_j(), params.photon_cutoff));
    let h = hamiltonian_elements(params, &basis);
    let a = annihilation_elements(&basis);
    let d = basis.dim();
    if let DspfBackend::DirectPropagation = backend {
        if d * d > DIRECT_STATE_CAP {
            return Err(Error::ResourceCap {
                what: "direct-propagation density matrix",
                requested: (d * d) as u128,
                cap: DIRECT_STATE_CAP as u128,
            });
        }
    }
    if let DspfBackend::Trajectories { n_traj: 0, .. } = backend {
        return Err(Error::InvalidArgument("n_traj must be at least 1".into()));
    }

    let dense = OperatorMatrix::new(Entries::Real(h.to_dense()), basis.clone(), OperatorKind::Hamiltonian);
    let (levels, vectors) = eig_symmetric_with_vectors(&dense)?;
    let amps = cgs(levels.levels(), beta)?.amplitudes;
    let psi: Vec<f64> = (0..d).map(|r| (0..d).map(|k| vectors[(r, k)] * amps[k]).sum()).collect();

    let (mean, sem) = match backend {
        // no jumps and no decay: |Σ_k |c_k|² e^{−iE_k t}|² exactly
        _ if params.gamma == 0.0 => (unitary(levels.levels(), &amps, grid), None),
        DspfBackend::DirectPropagation => (direct(&h, &a, params.gamma, &psi, grid)?, None),
        DspfBackend::Trajectories { n_traj, seed } => {
            let (m, s) = trajectories(&h, &a, params.gamma, &psi, grid, n_traj, seed)?;
            (m, Some(s))
        }
    };
    let mut curve = CurveSeries::new(grid.to_vec(), mean, "dspf")
        .with_meta("beta", beta)
        .with_meta("gamma", params.gamma)
        .with_meta("backend", backend.name());
    if let DspfBackend::Trajectories { n_traj, seed } = backend {
        curve = curve.with_meta("n_traj", n_traj).with_meta("seed", seed);
    }
    curve.sem = sem;
    Ok(curve)
}

/// Column-major d×d density matrix evolved by the Lindblad generator.
struct Generator {
    d: usize,
    /// K = H − iγ a†a
    k: Vec<(usize, usize, Complex64)>,
    a: Vec<(usize, usize, f64)>,
    gamma: f64,
    norm_bound: f64,
}

impl Generator {
    fn new(h: &SparseOperator, a: &SparseOperator, gamma: f64) -> Self {
        let number = number_operator(a);
        let mut k: Vec<(usize, usize, Complex64)> = h.triplets.iter().map(|&(i, j, v)| (i, j, Complex64::new(v, 0.0))).collect();
        k.extend(number.triplets.iter().map(|&(i, j, v)| (i, j, Complex64::new(0.0, -gamma * v))));
        let norm_bound = 2.0 * h.norm_l1() + 2.0 * gamma * (a.norm_l1().powi(2) + number.norm_l1());
        Self { d: h.dim, k, a: a.triplets.clone(), gamma, norm_bound }
    }

    /// out = L(ρ) = −iKρ + iρK† + 2γ aρa†
    fn apply(&self, rho: &[Complex64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        let d = self.d;
        out.fill(ZERO);
        for &(p, q, kv) in &self.k {
            let c = -I * kv;
            for j in 0..d {
                out[p + j * d] += c * rho[q + j * d];
            }
            let c = I * kv.conj();
            let (src, dst) = (q * d, p * d);
            for r in 0..d {
                out[dst + r] += c * rho[src + r];
            }
        }
        if self.gamma != 0.0 {
            scratch.fill(ZERO);
            for &(i, k, v) in &self.a {
                for j in 0..d {
                    scratch[i + j * d] += rho[k + j * d] * v;
                }
            }
            for &(l, j, v) in &self.a {
                let c = 2.0 * self.gamma * v;
                let (src, dst) = (j * d, l * d);
                for i in 0..d {
                    out[dst + i] += scratch[src + i] * c;
                }
            }
        }
    }

    /// ρ ← exp(L h) ρ by Taylor series to machine precision.
    fn step(&self, rho: &mut [Complex64], h: f64, bufs: &mut [Vec<Complex64>; 3]) {
        let [term, next, scratch] = bufs;
        term.copy_from_slice(rho);
        let scale = rho.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for k in 1..=40 {
            self.apply(term, next, scratch);
            let f = h / k as f64;
            let mut biggest = 0.0f64;
            for (t, n) in term.iter_mut().zip(next.iter()) {
                *t = n * f;
                biggest = biggest.max(t.norm());
            }
            for (r, t) in rho.iter_mut().zip(term.iter()) {
                *r += t;
            }
            if biggest <= 1e-17 * scale {
                break;
            }
        }
    }
}

fn unitary(levels: &[f64], amps: &[f64], grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&t| {
            let z: Complex64 = levels.iter().zip(amps).map(|(&e, &c)| Complex64::from_polar(c * c, -e * t)).sum();
            z.norm_sqr()
        })
        .collect()
}

fn direct(h: &SparseOperator, a: &SparseOperator, gamma: f64, psi: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    let d = h.dim;
    let gen = Generator::new(h, a, gamma);
    let max_step = if gen.norm_bound > 0.0 { STEP_NORM / gen.norm_bound } else { f64::INFINITY };
    let mut rho: Vec<Complex64> = (0..d * d).map(|idx| Complex64::new(psi[idx % d] * psi[idx / d], 0.0)).collect();
    let mut bufs = [vec![ZERO; d * d], vec![ZERO; d * d], vec![ZERO; d * d]];
    let mut t_now = 0.0;
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        let span = t - t_now;
        if span > 0.0 {
            let steps = (span / max_step).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                gen.step(&mut rho, h, &mut bufs);
            }
            t_now = t;
        }
        let trace: Complex64 = (0..d).map(|i| rho[i + i * d]).sum();
        if (trace - 1.0).norm() > 1e-8 {
            return Err(Error::Numerical(format!("trace drifted to {trace} at t = {t}")));
        }
        let mut overlap = ZERO;
        for j in 0..d {
            for i in 0..d {
                overlap += rho[i + j * d] * (psi[i] * psi[j]);
            }
        }
        out.push(if t == 0.0 { 1.0 } else { overlap.re });
    }
    Ok(out)
}

/// Exact no-jump evolution e^{−iK t} through the eigendecomposition K = V Λ V⁻¹.
struct NoJump {
    d: usize,
    v: Mat<Complex64>,
    vinv: Mat<Complex64>,
    lambda: Vec<Complex64>,
}

impl NoJump {
    fn new(h: &SparseOperator, a: &SparseOperator, gamma: f64) -> Result<Self> {
        let d = h.dim;
        let number = number_operator(a);
        let mut k = Mat::<Complex64>::zeros(d, d);
        for &(i, j, v) in &h.triplets {
            k[(i, j)] += Complex64::new(v, 0.0);
        }
        for &(i, j, v) in &number.triplets {
            k[(i, j)] += Complex64::new(0.0, -gamma * v);
        }
        let eig = k.eigen().map_err(|e| Error::EigenSolve(format!("{e:?}")))?;
        let v = eig.U().to_owned();
        let lambda = (0..d).map(|i| eig.S()[i]).collect();
        let vinv = v.partial_piv_lu().inverse();
        Ok(Self { d, v, vinv, lambda })
    }

    fn coefficients(&self, psi: &[Complex64]) -> Vec<Complex64> {
        (0..self.d).map(|r| (0..self.d).map(|c| self.vinv[(r, c)] * psi[c]).sum()).collect()
    }

    fn evolve(&self, c: &[Complex64], tau: f64, out: &mut [Complex64]) {
        out.fill(ZERO);
        for (k, (&ck, &lk)) in c.iter().zip(&self.lambda).enumerate() {
            let w = ck * (-I * lk * tau).exp();
            for (r, o) in out.iter_mut().enumerate() {
                *o += self.v[(r, k)] * w;
            }
        }
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn trajectories(
    h: &SparseOperator,
    a: &SparseOperator,
    gamma: f64,
    psi: &[f64],
    grid: &[f64],
    n_traj: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let prop = NoJump::new(h, a, gamma)?;
    let start: Vec<Complex64> = psi.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let runs: Vec<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|traj| run_trajectory(&prop, a, psi, &start, grid, substream(seed, "dspf", traj as u64)))
        .collect::<Result<_>>()?;
    let n = n_traj as f64;
    let mut mean = vec![0.0; grid.len()];
    for run in &runs {
        for (m, v) in mean.iter_mut().zip(run) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let sem = (0..grid.len())
        .map(|p| {
            if n_traj < 2 {
                return 0.0;
            }
            let var = runs.iter().map(|r| (r[p] - mean[p]).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        })
        .collect();
    Ok((mean, sem))
}

fn run_trajectory(
    prop: &NoJump,
    a: &SparseOperator,
    target: &[f64],
    start: &[Complex64],
    grid: &[f64],
    mut rng: rand_chacha::ChaCha8Rng,
) -> Result<Vec<f64>> {
    let d = prop.d;
    let mut c = prop.coefficients(start);
    let mut t0 = 0.0;
    let mut threshold: f64 = rng.random();
    let mut state = vec![ZERO; d];
    let mut out = Vec::with_capacity(grid.len());
    let mut t_low = 0.0;
    for &t in grid {
        loop {
            prop.evolve(&c, t - t0, &mut state);
            if norm_sqr(&state) > threshold {
                break;
            }
            // ‖ψ‖² is non-increasing, so bisect for the crossing in [t_low, t]
            let (mut lo, mut hi) = (t_low, t);
            while hi - lo > 1e-13 * (1.0 + hi) {
                let mid = 0.5 * (lo + hi);
                prop.evolve(&c, mid - t0, &mut state);
                if norm_sqr(&state) > threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            prop.evolve(&c, hi - t0, &mut state);
            let mut jumped = vec![ZERO; d];
            for &(i, k, v) in &a.triplets {
                jumped[i] += state[k] * v;
            }
            let norm = norm_sqr(&jumped).sqrt();
            if !(norm > 0.0) {
                return Err(Error::Numerical(format!("quantum jump from a photon-free state at t = {hi}")));
            }
            jumped.iter_mut().for_each(|z| *z /= norm);
            c = prop.coefficients(&jumped);
            t0 = hi;
            t_low = hi;
            threshold = rng.random();
        }
        let nrm = norm_sqr(&state).sqrt();
        let overlap: Complex64 = state.iter().zip(target).map(|(z, &p)| z * p).sum::<Complex64>() / nrm;
        out.push(if t == 0.0 { 1.0 } else { overlap.norm_sqr() });
        t_low = t;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{log_grid_with_zero, sff};
    use crate::spectra::eig_symmetric;
    use crate::model::build_hamiltonian;

    #[test]
    fn unitary_infinite_temperature_matches_raw_sff() {
        let p = ModelParams::dicke(0.8, 1.0, 4);
        let grid = log_grid_with_zero(30, 1e-2, 20.0);
        let levels = eig_symmetric(&build_hamiltonian(&p).unwrap()).unwrap();
        let reference = sff(levels.levels(), &grid).unwrap();
        let direct = dspf(&p, 0.0, &grid, DspfBackend::DirectPropagation).unwrap();
        let traj = dspf(&p, 0.0, &grid, DspfBackend::Trajectories { n_traj: 2, seed: 1 }).unwrap();
        for k in 0..grid.len() {
            assert!((direct.raw[k] - reference.raw[k]).abs() < 1e-10, "t={} {} vs {}", grid[k], direct.raw[k], reference.raw[k]);
            assert!((traj.raw[k] - reference.raw[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn starts_at_one_and_rejects_bad_backends() {
        let p = ModelParams::dicke(0.5, 0.5, 3).with_gamma(0.7);
        let grid = [0.0, 0.1, 1.0];
        let c = dspf(&p, 1.0, &grid, DspfBackend::DirectPropagation).unwrap();
        assert_eq!(c.raw[0], 1.0);
        assert!(dspf(&p, 1.0, &grid, DspfBackend::Trajectories { n_traj: 0, seed: 0 }).is_err());
        let big = ModelParams::dicke(0.5, 10.0, 40);
        assert!(matches!(dspf(&big, 1.0, &grid, DspfBackend::DirectPropagation), Err(Error::ResourceCap { .. })));
    }

    #[test]
    fn default_backend_threshold() {
        assert_eq!(default_backend(500, 3), DspfBackend::DirectPropagation);
        assert_eq!(default_backend(501, 3), DspfBackend::Trajectories { n_traj: 100, seed: 3 });
    }
}
