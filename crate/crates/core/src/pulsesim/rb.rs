//! Single-transition Clifford randomized benchmarking.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::goldensectionsearch::GoldenSectionSearch;
use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use super::{DeviceModel, SimState, SimulationConfig, Simulator};
use crate::compiler::{parse_transition_label, NativeGate};
use crate::error::{Error, Result};

/// Native rotation `(theta, phi)` on the benchmarked transition.
pub type Rotation = (f64, f64);

type U2 = Matrix2<Complex64>;

fn rotation_matrix((theta, phi): Rotation) -> U2 {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    Matrix2::new(
        Complex64::new(c, 0.0),
        -Complex64::from_polar(s, -phi),
        Complex64::from_polar(s, phi),
        Complex64::new(c, 0.0),
    )
}

/// Equality up to global phase.
fn same_clifford(a: &U2, b: &U2) -> bool {
    let overlap: Complex64 = (b.adjoint() * a).trace();
    (overlap.norm() - 2.0).abs() < 1e-9
}

/// The 24 single-qubit Cliffords, each as a shortest product of the
/// generators `X, Y, +-X/2, +-Y/2` (rotations listed in time order).
pub fn clifford_group() -> Vec<Vec<Rotation>> {
    let generators: [Rotation; 6] = [
        (PI, -FRAC_PI_2),
        (PI, 0.0),
        (FRAC_PI_2, -FRAC_PI_2),
        (FRAC_PI_2, FRAC_PI_2),
        (FRAC_PI_2, 0.0),
        (FRAC_PI_2, PI),
    ];
    let mut found: Vec<(U2, Vec<Rotation>)> = vec![(U2::identity(), Vec::new())];
    let mut frontier = found.clone();
    while found.len() < 24 {
        let mut next = Vec::new();
        for (u, seq) in &frontier {
            for g in generators {
                let v = rotation_matrix(g) * u;
                if !found.iter().any(|(w, _)| same_clifford(w, &v)) {
                    let mut s = seq.clone();
                    s.push(g);
                    found.push((v, s.clone()));
                    next.push((v, s));
                }
            }
        }
        frontier = next;
    }
    found.into_iter().map(|(_, s)| s).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbConfig {
    pub transition: String,
    pub sequence_lengths: Vec<usize>,
    pub trials: usize,
    pub pi_length_ns: f64,
    pub simulation: SimulationConfig,
    pub seed: u64,
}

impl Default for RbConfig {
    fn default() -> Self {
        RbConfig {
            transition: "AB0C0".into(),
            sequence_lengths: vec![1, 10, 25, 50, 100, 150, 200],
            trials: 20,
            pi_length_ns: 200.0,
            simulation: SimulationConfig::ideal(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RbResult {
    pub transition: String,
    pub sequence_lengths: Vec<usize>,
    pub survival: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub p_error: f64,
    /// Error per Clifford `(1 - p) / 2`.
    pub error_per_clifford: f64,
    pub fidelity: f64,
    pub fidelity_error: f64,
    pub mean_clifford_ns: f64,
}

/// Best `(A, B)` and squared residual for a fixed decay `p`.
fn linear_fit(m: &[f64], y: &[f64], p: f64) -> (f64, f64, f64) {
    let x: Vec<f64> = m.iter().map(|&k| p.powf(k)).collect();
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    let (a, b) =
        if det.abs() > 1e-300 { ((n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det) } else { (0.0, sy / n) };
    let ssr = x.iter().zip(y).map(|(xi, yi)| (a * xi + b - yi).powi(2)).sum();
    (a, b, ssr)
}

struct ProfileCost<'a> {
    m: &'a [f64],
    y: &'a [f64],
}

impl CostFunction for ProfileCost<'_> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, p: &f64) -> std::result::Result<f64, argmin::core::Error> {
        Ok(linear_fit(self.m, self.y, *p).2)
    }
}

/// Least-squares fit of `A p^m + B`, returning `(A, B, p, sigma_p)`.
pub fn fit_decay(lengths: &[usize], survival: &[f64]) -> Result<(f64, f64, f64, f64)> {
    if lengths.len() < 3 || lengths.len() != survival.len() {
        return Err(Error::config("the decay fit needs at least three lengths with one survival each"));
    }
    if survival.iter().all(|s| (s - 1.0).abs() < 1e-9) {
        return Ok((0.0, 1.0, 1.0, 0.0));
    }
    let m: Vec<f64> = lengths.iter().map(|&k| k as f64).collect();
    let (lo, hi) = (1e-6, 1.0 - 1e-12);
    // Coarse scan to bracket the minimum, then golden section.
    let grid: Vec<f64> = (0..=400).map(|k| lo + (hi - lo) * (1.0 - (1.0 - k as f64 / 400.0).powi(4))).collect();
    let best = (0..grid.len())
        .min_by(|&i, &j| linear_fit(&m, survival, grid[i]).2.total_cmp(&linear_fit(&m, survival, grid[j]).2))
        .expect("grid");
    let (a_bound, b_bound) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    let solver = GoldenSectionSearch::new(a_bound, b_bound)
        .and_then(|s| s.with_tolerance(1e-12))
        .map_err(|e| Error::Convergence(e.to_string()))?;
    let res = Executor::new(ProfileCost { m: &m, y: survival }, solver)
        .configure(|s| s.param(grid[best]).max_iters(200))
        .run()
        .map_err(|e| Error::Convergence(e.to_string()))?;
    let p = *res.state().get_best_param().expect("golden section keeps a best point");
    let (a, b, ssr) = linear_fit(&m, survival, p);
    if !(p > 0.0 && p < 1.0) || a <= 0.0 {
        return Err(Error::Convergence(format!("survival does not decay (p = {p:.6}, A = {a:.3e})")));
    }
    let mut jtj = Matrix3::<f64>::zeros();
    for &k in &m {
        let row = Vector3::new(p.powf(k), 1.0, a * k * p.powf(k - 1.0));
        jtj += row * row.transpose();
    }
    let dof = (m.len() as f64 - 3.0).max(1.0);
    let sigma_p = jtj.try_inverse().map(|c| (ssr / dof * c[(2, 2)]).max(0.0).sqrt()).unwrap_or(f64::INFINITY);
    Ok((a, b, p, sigma_p))
}

fn inverse_of(group: &[Vec<Rotation>], total: &U2) -> usize {
    let target = total.adjoint();
    group
        .iter()
        .position(|seq| {
            let u = seq.iter().fold(U2::identity(), |acc, &r| rotation_matrix(r) * acc);
            same_clifford(&u, &target)
        })
        .expect("the Clifford group is closed")
}

/// Clifford RB on the two levels of one transition. The lower level is
/// prepared exactly; survival is its population after the sequence and
/// its recovery Clifford.
pub fn randomized_benchmark(device: &DeviceModel, config: &RbConfig) -> Result<RbResult> {
    let n = device.space.modes;
    let (target, control) = parse_transition_label(&config.transition, n)?;
    if config.sequence_lengths.len() < 2 {
        return Err(Error::config("randomized benchmarking needs at least two sequence lengths"));
    }
    if config.trials == 0 {
        return Err(Error::config("randomized benchmarking needs at least one trial"));
    }
    let sim = Simulator::new(device.clone(), config.simulation.clone())?;
    let group = clifford_group();
    let matrices: Vec<U2> =
        group.iter().map(|seq| seq.iter().fold(U2::identity(), |acc, &r| rotation_matrix(r) * acc)).collect();
    let probe = NativeGate::new(target, control.clone(), 0.0, 0.0);
    let lower = sim.model.space.index(&probe.lower(n).occupations(n));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut survival = Vec::with_capacity(config.sequence_lengths.len());
    for &len in &config.sequence_lengths {
        let mut total = 0.0;
        for _ in 0..config.trials {
            let picks: Vec<usize> = (0..len).map(|_| rng.random_range(0..group.len())).collect();
            let product = picks.iter().fold(U2::identity(), |acc, &k| matrices[k] * acc);
            let recovery = inverse_of(&group, &product);
            let mut state = SimState::ground(sim.model.space.clone());
            state.rho = super::DensityMatrix::basis(sim.model.space.clone(), lower);
            for &k in picks.iter().chain(std::iter::once(&recovery)) {
                for &(theta, phi) in &group[k] {
                    let gate = NativeGate::new(target, control.clone(), theta, phi);
                    sim.play_gate(&mut state, &gate, config.pi_length_ns, true)?;
                }
            }
            total += state.rho.population(lower);
        }
        survival.push(total / config.trials as f64);
    }
    let (a, b, p, p_error) = fit_decay(&config.sequence_lengths, &survival)?;
    let r = (1.0 - p) / 2.0;
    let pulses_ns: f64 = group.iter().flatten().map(|(theta, _)| config.pi_length_ns * theta / PI).sum();
    Ok(RbResult {
        transition: config.transition.clone(),
        sequence_lengths: config.sequence_lengths.clone(),
        survival,
        a,
        b,
        p,
        p_error,
        error_per_clifford: r,
        fidelity: 1.0 - r,
        fidelity_error: p_error / 2.0,
        mean_clifford_ns: pulses_ns / group.len() as f64,
    })
}
