//! Preparation, tomography and scoring of three-qubit states.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use super::tomography::{
    mle_reconstruct, tomography, MleOptions, TomographyNoise, TomographyOptions, TomographyPulses,
};
use super::{
    fidelity, DensityMatrix, DeviceModel, Drive, FockSpace, Integrator, SimState, SimulationConfig, Simulator,
};
use crate::compiler::{
    ccnot_conditioned, compile_program, parse_transition_label, sequence_unitary, CMatrix, GateSequence, NativeGate, Op,
};
use crate::design::{analyze_device, DesignTarget};
use crate::error::{Error, Result};
use crate::kerr::KerrOptions;
use crate::presets;

/// States of the reference fidelity table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateName {
    /// (|000> + |110>)/sqrt 2
    #[serde(rename = "bell_000_110")]
    Bell000_110,
    /// (|000> + |011>)/sqrt 2
    #[serde(rename = "bell_000_011")]
    Bell000_011,
    /// (|000> + |101>)/sqrt 2
    #[serde(rename = "bell_000_101")]
    Bell000_101,
    /// (|000> + |111>)/sqrt 2
    Ghz,
    /// (|001> + |010> + |100>)/sqrt 3
    W,
    /// (|011> + |110> + |101>)/sqrt 3
    WBar,
    /// (|0> + |1>)^3 / (2 sqrt 2)
    Plus,
}

/// Each state with its reference fidelities: relaxation during
/// preparation only, and during preparation and tomography.
pub const TABLE_STATES: [(StateName, f64, f64); 7] = [
    (StateName::Bell000_110, 0.9977, 0.9798),
    (StateName::Bell000_011, 0.9962, 0.9777),
    (StateName::Bell000_101, 0.9963, 0.9754),
    (StateName::Ghz, 0.9938, 0.9695),
    (StateName::W, 0.9949, 0.9737),
    (StateName::WBar, 0.9839, 0.9653),
    (StateName::Plus, 0.9876, 0.9699),
];

impl StateName {
    pub fn key(self) -> &'static str {
        match self {
            StateName::Bell000_110 => "bell_000_110",
            StateName::Bell000_011 => "bell_000_011",
            StateName::Bell000_101 => "bell_000_101",
            StateName::Ghz => "ghz",
            StateName::W => "w",
            StateName::WBar => "w_bar",
            StateName::Plus => "plus",
        }
    }

    pub fn ket(self) -> &'static str {
        match self {
            StateName::Bell000_110 => "(|000>+|110>)/sqrt2",
            StateName::Bell000_011 => "(|000>+|011>)/sqrt2",
            StateName::Bell000_101 => "(|000>+|101>)/sqrt2",
            StateName::Ghz => "(|000>+|111>)/sqrt2",
            StateName::W => "(|001>+|010>+|100>)/sqrt3",
            StateName::WBar => "(|011>+|110>+|101>)/sqrt3",
            StateName::Plus => "(|0>+|1>)^3/(2sqrt2)",
        }
    }
}

impl fmt::Display for StateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for StateName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TABLE_STATES.iter().map(|t| t.0).find(|n| n.key() == s || n.ket() == s).ok_or_else(|| {
            let keys: Vec<&str> = TABLE_STATES.iter().map(|t| t.0.key()).collect();
            Error::config(format!("unknown state {s:?}, available: {}", keys.join(", ")))
        })
    }
}

/// Ideal state vector over the eight computational states.
pub fn table_state(name: StateName) -> DVector<Complex64> {
    let amps: Vec<(usize, f64)> = match name {
        StateName::Bell000_110 => vec![(0b000, 1.0), (0b110, 1.0)],
        StateName::Bell000_011 => vec![(0b000, 1.0), (0b011, 1.0)],
        StateName::Bell000_101 => vec![(0b000, 1.0), (0b101, 1.0)],
        StateName::Ghz => vec![(0b000, 1.0), (0b111, 1.0)],
        StateName::W => vec![(0b001, 1.0), (0b010, 1.0), (0b100, 1.0)],
        StateName::WBar => vec![(0b011, 1.0), (0b110, 1.0), (0b101, 1.0)],
        StateName::Plus => (0..8).map(|s| (s, 1.0)).collect(),
    };
    let norm = (amps.len() as f64).sqrt();
    let mut v = DVector::zeros(8);
    for (s, a) in amps {
        v[s] = Complex64::new(a / norm, 0.0);
    }
    v
}

fn rotation(label: &str, theta: f64, phi: f64) -> Result<Op> {
    let (target, control) = parse_transition_label(label, 3)?;
    Ok(Op::Pulse { gate: NativeGate::new(target, control, theta, phi) })
}

fn flip(seq: &mut GateSequence, label: &str) -> Result<()> {
    let (target, control) = parse_transition_label(label, 3)?;
    seq.extend(ccnot_conditioned(3, target, control)?);
    Ok(())
}

/// Native-pulse preparation of a table state from `|000>`.
pub fn prepare_state(name: StateName) -> Result<GateSequence> {
    let mut seq = GateSequence::new(3);
    let half = FRAC_PI_2;
    // Rotation leaving amplitude sqrt(2/3) on the lower level.
    let third = 2.0 * (2.0f64 / 3.0).sqrt().acos();
    match name {
        StateName::Bell000_110 => {
            seq.ops.push(rotation("AB0C0", half, 0.0)?);
            flip(&mut seq, "BC0A1")?;
        }
        StateName::Bell000_011 => {
            seq.ops.push(rotation("BC0A0", half, 0.0)?);
            flip(&mut seq, "CA0B1")?;
        }
        StateName::Bell000_101 => {
            seq.ops.push(rotation("CA0B0", half, 0.0)?);
            flip(&mut seq, "AB0C1")?;
        }
        StateName::Ghz => {
            seq.ops.push(rotation("AB0C0", half, 0.0)?);
            flip(&mut seq, "BC0A1")?;
            flip(&mut seq, "CA1B1")?;
        }
        StateName::W => {
            seq.ops.push(rotation("AB0C0", third, 0.0)?);
            seq.ops.push(rotation("BC0A0", half, 0.0)?);
            seq.ops.push(rotation("CA0B0", PI, 0.0)?);
        }
        StateName::WBar => {
            // Through single excitations, lowering 100 back out last.
            seq.ops.push(rotation("AB0C0", PI, 0.0)?);
            seq.ops.push(rotation("CA1B0", third, 0.0)?);
            seq.ops.push(rotation("BC0A1", half, 0.0)?);
            seq.ops.push(rotation("AB0C0", PI, PI)?);
            seq.ops.push(rotation("BC0A0", PI, 0.0)?);
            seq.ops.push(rotation("CA0B1", PI, 0.0)?);
        }
        StateName::Plus => {
            seq.ops.push(rotation("AB0C0", half, 0.0)?);
            for label in ["BC0A0", "BC0A1", "CA0B0", "CA0B1", "CA1B0", "CA1B1"] {
                seq.ops.push(rotation(label, half, 0.0)?);
            }
        }
    }
    seq.source = vec![name.key().to_string()];
    Ok(seq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DecoherenceMode {
    None,
    #[default]
    PrepOnly,
    PrepAndTomo,
}

impl DecoherenceMode {
    fn flags(self) -> (bool, bool) {
        match self {
            DecoherenceMode::None => (false, false),
            DecoherenceMode::PrepOnly => (true, false),
            DecoherenceMode::PrepAndTomo => (true, true),
        }
    }
}

impl FromStr for DecoherenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::config(format!("decoherence mode {s:?} must be none, prep_only or prep_and_tomo")))
    }
}

/// One preparation-and-tomography run. Exactly one of `state` and
/// `program` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub state: Option<StateName>,
    /// Standard-gate program applied to `|000>`.
    pub program: Option<String>,
    pub pi_length_ns: f64,
    pub t1_us: Vec<Option<f64>>,
    pub decoherence_mode: DecoherenceMode,
    pub levels_per_mode: usize,
    pub drive: Drive,
    pub integrator: Integrator,
    pub noise: TomographyNoise,
    /// Defaults to simulated pulses when relaxation acts during
    /// tomography and to ideal operations otherwise.
    pub tomography_pulses: Option<TomographyPulses>,
    pub seed: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let sim = SimulationConfig::ideal();
        ExperimentSpec {
            state: Some(StateName::Bell000_110),
            program: None,
            pi_length_ns: 200.0,
            t1_us: sim.t1_us,
            decoherence_mode: DecoherenceMode::PrepOnly,
            levels_per_mode: sim.levels_per_mode,
            drive: sim.drive,
            integrator: sim.integrator,
            noise: TomographyNoise::None,
            tomography_pulses: None,
            seed: 0,
        }
    }
}

impl ExperimentSpec {
    pub fn table(state: StateName, pi_length_ns: f64, mode: DecoherenceMode) -> Self {
        ExperimentSpec { state: Some(state), pi_length_ns, decoherence_mode: mode, ..Default::default() }
    }

    pub fn simulation_config(&self) -> SimulationConfig {
        SimulationConfig {
            levels_per_mode: self.levels_per_mode,
            t1_us: self.t1_us.clone(),
            drive: self.drive.clone(),
            integrator: self.integrator,
            seed: self.seed,
        }
    }

    fn preparation(&self) -> Result<(String, GateSequence)> {
        match (&self.state, &self.program) {
            (Some(s), None) => Ok((s.key().to_string(), prepare_state(*s)?)),
            (None, Some(p)) => Ok(("program".to_string(), compile_program(p, 3)?)),
            _ => Err(Error::config("an experiment needs exactly one of state and program")),
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.pi_length_ns > 0.0) || !self.pi_length_ns.is_finite() {
            return Err(Error::config(format!("pi_length_ns must be positive, got {}", self.pi_length_ns)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub state: String,
    pub pi_length_ns: f64,
    pub decoherence_mode: DecoherenceMode,
    /// Fidelity of the reconstructed density matrix to the ideal state.
    pub fidelity: f64,
    /// `<psi| rho |psi>` of the simulated state before tomography.
    pub prepared_overlap: f64,
    /// Population outside the computational states after preparation.
    pub leakage: f64,
    pub preparation_ns: f64,
    pub projections: usize,
    /// Real and imaginary parts of the reconstructed matrix, row major.
    pub rho_mle_re: Vec<Vec<f64>>,
    pub rho_mle_im: Vec<Vec<f64>>,
}

/// The reference asymmetric trimon, analyzed with default options.
pub fn reference_device(levels: usize) -> Result<DeviceModel> {
    let netlist = presets::preset("trimon-design-table")?;
    let report = analyze_device(&netlist, &DesignTarget::default(), KerrOptions::default())?;
    DeviceModel::from_report(&report, levels)
}

/// Runs one experiment on a prebuilt simulator.
pub fn run_with(sim: &Simulator, spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.check()?;
    let (label, prep) = spec.preparation()?;
    let (prep_decay, tomo_decay) = spec.decoherence_mode.flags();
    let psi = sequence_unitary(&prep).column(0).into_owned();
    let ideal: CMatrix = &psi * psi.adjoint();

    let mut state = SimState::ground(sim.model.space.clone());
    sim.play(&mut state, &prep, spec.pi_length_ns, prep_decay)?;
    let preparation_ns = state.time_ns;
    let logical = state.logical_block();
    let prepared_overlap = (psi.adjoint() * &logical * &psi)[(0, 0)].re;
    let leakage = state.rho.leakage();

    let pulses = spec.tomography_pulses.unwrap_or(if tomo_decay {
        TomographyPulses::Simulated
    } else {
        TomographyPulses::Ideal
    });
    let options = TomographyOptions {
        pi_length_ns: spec.pi_length_ns,
        pulses,
        decay: tomo_decay,
        noise: spec.noise.clone(),
        seed: spec.seed,
    };
    let projections = tomography(sim, &state, &options)?;
    let rho = mle_reconstruct(&projections, &MleOptions::default())?;
    let f = fidelity(&rho.matrix, &ideal)?;
    let part = |g: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..8).map(|i| (0..8).map(|j| g(&rho.matrix[(i, j)])).collect()).collect()
    };
    Ok(ExperimentResult {
        state: label,
        pi_length_ns: spec.pi_length_ns,
        decoherence_mode: spec.decoherence_mode,
        fidelity: f,
        prepared_overlap,
        leakage,
        preparation_ns,
        projections: projections.len(),
        rho_mle_re: part(|z| z.re),
        rho_mle_im: part(|z| z.im),
    })
}

pub fn run_experiment(device: &DeviceModel, spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let sim = Simulator::new(device.clone(), spec.simulation_config())?;
    run_with(&sim, spec)
}

pub const SWEEP_CSV_HEADER: &str = "pi_length_ns,fidelity";

/// Reconstructed fidelity for each pi length, one simulator shared by all
/// points.
pub fn fidelity_sweep(device: &DeviceModel, spec: &ExperimentSpec, pi_lengths_ns: &[f64]) -> Result<Vec<(f64, f64)>> {
    let sim = Simulator::new(device.clone(), spec.simulation_config())?;
    pi_lengths_ns
        .iter()
        .map(|&len| {
            let point = ExperimentSpec { pi_length_ns: len, ..spec.clone() };
            Ok((len, run_with(&sim, &point)?.fidelity))
        })
        .collect()
}

/// Ideal density matrix of a table state embedded in the full space.
pub fn ideal_density(space: FockSpace, name: StateName) -> Result<DensityMatrix> {
    let psi = table_state(name);
    DensityMatrix::from_logical(space, &(&psi * psi.adjoint()))
}
