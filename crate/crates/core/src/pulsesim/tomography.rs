//! Joint-readout state tomography and least-squares maximum likelihood
//! reconstruction.
//!
//! Only `|000>` and `|111>` are read directly. Rounds 2 to 4 first swap
//! another pair of basis states into those two with CCNOT pulses.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use super::{hermitian_eigen, DensityMatrix, SimState, Simulator};
use crate::compiler::{
    ccnot_conditioned, compile_standard, parse_transition_label, sequence_unitary, BasisState, CMatrix, GateSequence,
    StandardGate,
};
use crate::cqed::{readout_histograms, ReadoutConfig};
use crate::error::{Error, Result};

/// CCNOT pairs added before rounds 2, 3 and 4; each round keeps the swaps
/// of the rounds before it.
pub const ROUND_SWAPS: [[&str; 2]; 3] = [["CA0B0", "CA1B1"], ["BC0A0", "BC1A1"], ["AB0C0", "AB1C1"]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PreRotation {
    I,
    X2,
    Y2,
}

impl PreRotation {
    pub const ALL: [PreRotation; 3] = [PreRotation::I, PreRotation::X2, PreRotation::Y2];

    fn label(self) -> &'static str {
        match self {
            PreRotation::I => "I",
            PreRotation::X2 => "X/2",
            PreRotation::Y2 => "Y/2",
        }
    }
}

/// Rotations of every qubit, each compiled as the conditional `pi/2`
/// pulses on all of that qubit's transitions.
pub fn pre_rotation(setting: &[PreRotation]) -> Result<GateSequence> {
    let n = setting.len();
    let mut seq = GateSequence::new(n);
    for (q, r) in setting.iter().enumerate() {
        let phi = match r {
            PreRotation::I => continue,
            PreRotation::X2 => -FRAC_PI_2,
            PreRotation::Y2 => 0.0,
        };
        seq.extend(compile_standard(&StandardGate::R { qubit: q, theta: FRAC_PI_2, phi }, n)?);
    }
    Ok(seq)
}

fn round_swaps(round: usize) -> Result<GateSequence> {
    let mut seq = GateSequence::new(3);
    for pair in &ROUND_SWAPS[..round] {
        for label in pair {
            let (target, control) = parse_transition_label(label, 3)?;
            seq.extend(ccnot_conditioned(3, target, control)?);
        }
    }
    Ok(seq)
}

/// One measured number with the logical observable it estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection {
    pub setting: String,
    /// Round 1 to 4.
    pub round: usize,
    pub outcome: BasisState,
    pub value: f64,
    #[serde(skip)]
    pub operator: CMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TomographyNoise {
    /// Exact diagonal elements.
    #[default]
    None,
    /// Gaussian noise of standard deviation `sigma` on each value.
    Additive { sigma: f64 },
    /// Shots assigned through demarcation lines on simulated readout
    /// histograms; states between the lines are discarded.
    Histogram { chi_mhz: BTreeMap<String, f64>, readout: ReadoutConfig },
}

/// How pre-rotations and swaps act on the prepared state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TomographyPulses {
    /// Exact logical unitaries on the computational block; leaked
    /// population is lost.
    Ideal,
    /// Pulses played through the simulator.
    #[default]
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TomographyOptions {
    pub pi_length_ns: f64,
    pub pulses: TomographyPulses,
    /// Relaxation during pre-rotations and swap pulses.
    pub decay: bool,
    pub noise: TomographyNoise,
    pub seed: u64,
}

impl Default for TomographyOptions {
    fn default() -> Self {
        TomographyOptions {
            pi_length_ns: 200.0,
            pulses: TomographyPulses::Simulated,
            decay: false,
            noise: TomographyNoise::None,
            seed: 0,
        }
    }
}

/// Probability of each logical state being assigned to `000` and to `111`.
fn assignment_fractions(chi: &BTreeMap<String, f64>, readout: &ReadoutConfig) -> Result<Vec<(f64, f64)>> {
    let report = readout_histograms(chi, readout)?;
    let ground_low = {
        let m = |s: &str| report.histograms.iter().find(|h| h.state == s).map(|h| h.label_mean);
        m("000").zip(m("111")).map(|(a, b)| a <= b).ok_or_else(|| Error::config("readout model needs 000 and 111"))?
    };
    (0..8)
        .map(|s| {
            let label = BasisState(s).label(3);
            let h = report
                .histograms
                .iter()
                .find(|h| h.state == label)
                .ok_or_else(|| Error::config(format!("readout model has no state {label}")))?;
            let total = (h.count_below + h.count_between + h.count_above).max(1) as f64;
            let (lo, hi) = (h.count_below as f64 / total, h.count_above as f64 / total);
            Ok(if ground_low { (lo, hi) } else { (hi, lo) })
        })
        .collect()
}

/// Runs the 27 pre-rotation settings times 4 rounds on a prepared state
/// and returns 216 projections onto the logical state seen through the
/// state's frame.
pub fn tomography(sim: &Simulator, prepared: &SimState, options: &TomographyOptions) -> Result<Vec<Projection>> {
    let space = &prepared.rho.space;
    if space.modes != 3 {
        return Err(Error::config("the joint-readout protocol is defined for three qubits"));
    }
    let fractions = match &options.noise {
        TomographyNoise::Histogram { chi_mhz, readout } => Some(assignment_fractions(chi_mhz, readout)?),
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let idx = space.computational_indices();
    let logical = prepared.logical_block();
    let mut out = Vec::with_capacity(216);
    for a in PreRotation::ALL {
        for b in PreRotation::ALL {
            for c in PreRotation::ALL {
                let setting = [a, b, c];
                let name = setting.map(|r| r.label()).join(",");
                for round in 0..4 {
                    let mut seq = pre_rotation(&setting)?;
                    seq.extend(round_swaps(round)?);
                    seq.initial_frame = prepared.frame.clone();
                    let u = sequence_unitary(&seq);
                    let pops: Vec<f64> = match options.pulses {
                        TomographyPulses::Ideal => {
                            let evolved = &u * &logical * u.adjoint();
                            (0..idx.len()).map(|k| evolved[(k, k)].re).collect()
                        }
                        TomographyPulses::Simulated => {
                            let mut state = prepared.clone();
                            sim.play(&mut state, &seq, options.pi_length_ns, options.decay)?;
                            idx.iter().map(|&i| state.rho.population(i)).collect()
                        }
                    };
                    for outcome in [BasisState(0), BasisState(7)] {
                        let mut value = match &fractions {
                            None => pops[outcome.0],
                            Some(f) => {
                                let kept = pops
                                    .iter()
                                    .zip(f)
                                    .map(|(p, fr)| p * if outcome.0 == 0 { fr.0 } else { fr.1 })
                                    .sum::<f64>();
                                kept.clamp(0.0, 1.0)
                            }
                        };
                        match &options.noise {
                            TomographyNoise::None => {}
                            TomographyNoise::Additive { sigma } => {
                                if *sigma > 0.0 {
                                    value += Normal::new(0.0, *sigma)
                                        .map_err(|e| Error::config(e.to_string()))?
                                        .sample(&mut rng);
                                }
                            }
                            TomographyNoise::Histogram { readout, .. } => {
                                let shots = readout.shots.max(1) as u64;
                                let k = Binomial::new(shots, value)
                                    .map_err(|e| Error::config(e.to_string()))?
                                    .sample(&mut rng);
                                value = k as f64 / shots as f64;
                            }
                        }
                        let proj = |u: &CMatrix| {
                            let row = u.row(outcome.0).adjoint();
                            &row * row.adjoint()
                        };
                        out.push(Projection {
                            setting: name.clone(),
                            round: round + 1,
                            outcome,
                            value,
                            operator: proj(&u),
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MleOptions {
    pub max_iterations: usize,
    pub relative_tolerance: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { max_iterations: 5000, relative_tolerance: 1e-10 }
    }
}

/// Real coordinates of a Hermitian matrix with `<vec(A), vec(B)> = Tr(A B)`.
fn hermitian_coordinates(m: &CMatrix) -> Vec<f64> {
    let d = m.nrows();
    let mut v = Vec::with_capacity(d * d);
    let r2 = std::f64::consts::SQRT_2;
    for i in 0..d {
        v.push(m[(i, i)].re);
        for j in i + 1..d {
            v.push(r2 * m[(i, j)].re);
            v.push(r2 * m[(i, j)].im);
        }
    }
    v
}

/// Euclidean projection of eigenvalues onto the probability simplex.
fn simplex_projection(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            shift = t;
        }
    }
    values.iter().map(|&v| (v - shift).max(0.0)).collect()
}

fn project_density(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let p = simplex_projection(&vals);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(p.len(), p.iter().map(|&l| Complex64::new(l, 0.0))));
    &vecs * d * vecs.adjoint()
}

/// Density matrix minimizing the squared residuals of the projections,
/// i.e. the Gaussian maximum likelihood estimate, by accelerated projected
/// gradient with restarts.
pub fn mle_reconstruct(projections: &[Projection], options: &MleOptions) -> Result<DensityMatrix> {
    let first = projections.first().ok_or_else(|| Error::Domain("no projections to reconstruct from".into()))?;
    let d = first.operator.nrows();
    if !d.is_power_of_two() || projections.iter().any(|p| p.operator.shape() != (d, d)) {
        return Err(Error::Domain("projection operators must share a 2^N dimension".into()));
    }
    let rows: Vec<Vec<f64>> = projections.iter().map(|p| hermitian_coordinates(&p.operator)).collect();
    let mut a = DMatrix::<f64>::zeros(rows.len() + 1, d * d);
    for (k, r) in rows.iter().enumerate() {
        a.row_mut(k).copy_from_slice(r);
    }
    a.row_mut(rows.len()).copy_from_slice(&hermitian_coordinates(&CMatrix::identity(d, d)));
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > 1e-9 * smax).count();
    if rank < d * d {
        return Err(Error::Domain(format!("projection set has rank {rank}, need {} for reconstruction", d * d)));
    }
    let a = a.rows(0, rows.len()).into_owned();
    let y = DVector::from_iterator(rows.len(), projections.iter().map(|p| p.value));
    let gram = &a * a.transpose();
    let lipschitz = 2.0 * nalgebra::SymmetricEigen::new(gram).eigenvalues.max();
    let step = 1.0 / lipschitz;

    let ops: Vec<&CMatrix> = projections.iter().map(|p| &p.operator).collect();
    let residual = |rho: &CMatrix| -> DVector<f64> {
        DVector::from_iterator(ops.len(), ops.iter().zip(y.iter()).map(|(p, yk)| (*p * rho).trace().re - yk))
    };
    let gradient = |r: &DVector<f64>| -> CMatrix {
        let mut g = CMatrix::zeros(d, d);
        for (p, &rk) in ops.iter().zip(r.iter()) {
            g += *p * Complex64::new(2.0 * rk, 0.0);
        }
        g
    };
    let cost = |r: &DVector<f64>| r.norm_squared();

    let mut x = CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0);
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut fx = cost(&residual(&x));
    for _ in 0..options.max_iterations {
        let g = gradient(&residual(&z));
        let x_next = project_density(&(&z - g * Complex64::new(step, 0.0)));
        let f_next = cost(&residual(&x_next));
        if f_next > fx {
            // Restart the momentum when the objective goes up.
            z = x.clone();
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &x_next + (&x_next - &x) * Complex64::new((t - 1.0) / t_next, 0.0);
        let change = (fx - f_next).abs() / fx.max(f64::MIN_POSITIVE);
        x = x_next;
        fx = f_next;
        t = t_next;
        if change < options.relative_tolerance || fx < 1e-28 {
            break;
        }
    }
    let x = (&x + x.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = x.trace().re;
    let space = super::FockSpace { modes: d.trailing_zeros() as usize, levels: 2 };
    DensityMatrix::new(space, x / Complex64::new(tr, 0.0))
}

/// Exact projections of a logical state under the ideal protocol.
pub fn ideal_projections(logical: &CMatrix) -> Result<Vec<Projection>> {
    let mut out = Vec::with_capacity(216);
    for a in PreRotation::ALL {
        for b in PreRotation::ALL {
            for c in PreRotation::ALL {
                let setting = [a, b, c];
                for round in 0..4 {
                    let mut seq = pre_rotation(&setting)?;
                    seq.extend(round_swaps(round)?);
                    let u = sequence_unitary(&seq);
                    let evolved = &u * logical * u.adjoint();
                    for o in [0usize, 7] {
                        let row = u.row(o).adjoint();
                        out.push(Projection {
                            setting: setting.map(|r| r.label()).join(","),
                            round: round + 1,
                            outcome: BasisState(o),
                            value: evolved[(o, o)].re,
                            operator: &row * row.adjoint(),
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}
