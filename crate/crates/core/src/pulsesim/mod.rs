//! Pulse-level simulation of a driven multimode device with relaxation,
//! joint-readout tomography, maximum-likelihood reconstruction and
//! randomized benchmarking.

mod evolve;
mod experiments;
mod rb;
mod tomography;

pub use evolve::{PulseSchedule, PulseSegment, SimState, Simulator};
pub use experiments::{
    fidelity_sweep, ideal_density, prepare_state, reference_device, run_experiment, run_with, table_state,
    DecoherenceMode, ExperimentResult, ExperimentSpec, StateName, SWEEP_CSV_HEADER, TABLE_STATES,
};
pub use rb::{clifford_group, fit_decay, randomized_benchmark, RbConfig, RbResult, Rotation};
pub use tomography::{
    ideal_projections, mle_reconstruct, pre_rotation, tomography, MleOptions, PreRotation, Projection, TomographyNoise,
    TomographyOptions, TomographyPulses, ROUND_SWAPS,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::compiler::CMatrix;
use crate::error::{Error, Result};
use crate::kerr::{diagonal_energy, KerrTensor};
use crate::units;

/// Truncated Fock space of `modes` oscillators with `levels` each; index
/// digits are occupations with mode 0 most significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FockSpace {
    pub modes: usize,
    pub levels: usize,
}

impl FockSpace {
    pub fn dim(&self) -> usize {
        self.levels.pow(self.modes as u32)
    }

    pub fn occupations(&self, index: usize) -> Vec<u8> {
        let mut occ = vec![0u8; self.modes];
        let mut rest = index;
        for mu in (0..self.modes).rev() {
            occ[mu] = (rest % self.levels) as u8;
            rest /= self.levels;
        }
        occ
    }

    pub fn index(&self, occ: &[u8]) -> usize {
        occ.iter().fold(0, |acc, &n| acc * self.levels + n as usize)
    }

    /// Full-space index of a computational basis state (qubit 0 most
    /// significant).
    pub fn computational_index(&self, bits: usize) -> usize {
        let occ: Vec<u8> = (0..self.modes).map(|q| (bits >> (self.modes - 1 - q) & 1) as u8).collect();
        self.index(&occ)
    }

    pub fn computational_indices(&self) -> Vec<usize> {
        (0..1usize << self.modes).map(|b| self.computational_index(b)).collect()
    }
}

/// Density matrix over a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub space: FockSpace,
    pub matrix: CMatrix,
}

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;
const PSD_FLOOR: f64 = -1e-8;

impl DensityMatrix {
    pub fn new(space: FockSpace, matrix: CMatrix) -> Result<Self> {
        let rho = DensityMatrix { space, matrix };
        rho.check()?;
        Ok(rho)
    }

    pub fn basis(space: FockSpace, index: usize) -> Self {
        let d = space.dim();
        let mut m = CMatrix::zeros(d, d);
        m[(index, index)] = Complex64::new(1.0, 0.0);
        DensityMatrix { space, matrix: m }
    }

    pub fn pure(space: FockSpace, psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) || psi.len() != space.dim() {
            return Err(Error::Domain("state vector must be nonzero with the space dimension".into()));
        }
        let v = psi / Complex64::new(norm, 0.0);
        Ok(DensityMatrix { space, matrix: &v * v.adjoint() })
    }

    /// Computational-subspace state of `modes` qubits embedded in a space
    /// with `levels` per mode.
    pub fn from_logical(space: FockSpace, logical: &CMatrix) -> Result<Self> {
        let idx = space.computational_indices();
        if logical.nrows() != idx.len() {
            return Err(Error::config("logical matrix dimension does not match the qubit count"));
        }
        let d = space.dim();
        let mut m = CMatrix::zeros(d, d);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(i, j)] = logical[(a, b)];
            }
        }
        DensityMatrix::new(space, m)
    }

    /// Block on the computational subspace (not renormalized).
    pub fn logical_block(&self) -> CMatrix {
        let idx = self.space.computational_indices();
        CMatrix::from_fn(idx.len(), idx.len(), |a, b| self.matrix[(idx[a], idx[b])])
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }

    /// Population outside the computational subspace.
    pub fn leakage(&self) -> f64 {
        let inside: f64 = self.space.computational_indices().iter().map(|&i| self.population(i)).sum();
        self.trace() - inside
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn check(&self) -> Result<()> {
        check_density(&self.matrix)
    }
}

pub(crate) fn check_density(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Domain("density matrix must be square".into()));
    }
    let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm > HERMITIAN_TOL {
        return Err(Error::Domain(format!("density matrix is not Hermitian (error {herm:.2e})")));
    }
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::Domain(format!("density matrix trace is {tr}")));
    }
    let min = hermitian_eigen(m).0.iter().copied().fold(f64::INFINITY, f64::min);
    if min < PSD_FLOOR {
        return Err(Error::Domain(format!("density matrix has eigenvalue {min:.3e}")));
    }
    Ok(())
}

/// Eigenvalues and eigenvectors of a Hermitian matrix.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let e = nalgebra::SymmetricEigen::new(sym);
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

/// `V diag(f(lambda)) V^dagger` for Hermitian `m`.
pub(crate) fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let d =
        DMatrix::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|&l| Complex64::new(f(l), 0.0))));
    &vecs * d * vecs.adjoint()
}

/// Uhlmann fidelity `Tr sqrt(sqrt(sigma) rho sqrt(sigma))`.
pub fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::Domain("fidelity needs matrices of equal size".into()));
    }
    for m in [rho, sigma] {
        let min = hermitian_eigen(m).0.iter().copied().fold(f64::INFINITY, f64::min);
        if min < PSD_FLOOR {
            return Err(Error::Domain(format!("fidelity input has eigenvalue {min:.3e}")));
        }
    }
    let s = hermitian_function(sigma, |l| l.max(0.0).sqrt());
    let inner = &s * rho * &s;
    let f: f64 = hermitian_eigen(&inner).0.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Diagonal Hamiltonian and drive couplings of the simulated device.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceModel {
    pub space: FockSpace,
    /// Energy of each Fock state, GHz.
    pub energies_ghz: Vec<f64>,
    /// Relative drive strength per mode for a global drive.
    pub coupling_weights: Option<Vec<f64>>,
}

impl DeviceModel {
    /// Energies from the Kerr tensor without the three-body term.
    pub fn from_kerr(kerr: &KerrTensor, frequencies_ghz: &[f64], levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::config("levels_per_mode must be at least 2"));
        }
        if frequencies_ghz.len() != kerr.mode_count() {
            return Err(Error::config("one frequency per mode is required"));
        }
        let space = FockSpace { modes: kerr.mode_count(), levels };
        let energies =
            (0..space.dim()).map(|i| diagonal_energy(kerr, frequencies_ghz, &space.occupations(i), false)).collect();
        Ok(DeviceModel { space, energies_ghz: energies, coupling_weights: None })
    }

    pub fn with_coupling_weights(mut self, g_mhz: &[f64]) -> Self {
        let max = g_mhz.iter().copied().fold(0.0, f64::max);
        self.coupling_weights = if max > 0.0 { Some(g_mhz.iter().map(|g| g / max).collect()) } else { None };
        self
    }

    pub fn energy(&self, occ: &[u8]) -> f64 {
        self.energies_ghz[self.space.index(occ)]
    }

    /// Angular energies, rad/ns.
    pub(crate) fn angular_energies(&self) -> Vec<f64> {
        self.energies_ghz.iter().map(|&e| units::angular(e)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drive {
    /// Each pulse drives only the mode it addresses.
    Ideal,
    /// Global drive with per-mode weights taken from the device couplings.
    CavityWeighted,
    /// Global drive with explicit per-mode weights.
    Weights(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Exact exponential of each block of the per-segment generator.
    Exact,
    /// Fixed-step RK4 in the interaction picture of the diagonal part.
    Rk4 { step_ns: f64 },
    /// Exact for blocks up to `max_block`, RK4 with `step_ns` otherwise.
    Auto { max_block: usize, step_ns: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub levels_per_mode: usize,
    /// Relaxation time per mode in microseconds; `None` disables decay.
    pub t1_us: Vec<Option<f64>>,
    pub drive: Drive,
    pub integrator: Integrator,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            levels_per_mode: 3,
            t1_us: vec![Some(50.0), Some(40.0), Some(30.0)],
            drive: Drive::CavityWeighted,
            integrator: Integrator::Auto { max_block: 150, step_ns: 0.1 },
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn ideal() -> Self {
        SimulationConfig { drive: Drive::Ideal, ..Default::default() }
    }

    pub fn without_decay(mut self) -> Self {
        self.t1_us.iter_mut().for_each(|t| *t = None);
        self
    }

    pub(crate) fn decay_rates(&self, modes: usize) -> Result<Vec<f64>> {
        if self.t1_us.len() != modes {
            return Err(Error::config(format!("t1_us has {} entries for {modes} modes", self.t1_us.len())));
        }
        self.t1_us
            .iter()
            .map(|t| match t {
                None => Ok(0.0),
                Some(t) if *t > 0.0 => Ok(1e-3 / t),
                Some(t) => Err(Error::config(format!("T1 must be positive, got {t} us"))),
            })
            .collect()
    }
}

impl DeviceModel {
    /// Simulation model of an analyzed device, energies anchored at the
    /// qubit transitions and drive weights from the cavity couplings.
    pub fn from_report(report: &crate::design::DeviceReport, levels: usize) -> Result<Self> {
        let k = &report.kerr;
        let freqs: Vec<f64> = (0..k.mode_count()).map(|mu| k.mode_frequencies_ghz[mu] + k.beta[mu]).collect();
        let model = DeviceModel::from_kerr(k, &freqs, levels)?;
        Ok(match &report.cavity {
            Some(c) => model.with_coupling_weights(&c.g_direct_mhz),
            None => model,
        })
    }
}
