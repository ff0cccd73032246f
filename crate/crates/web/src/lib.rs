//! Browser bindings: flux sweeps, asymmetry tuning and gate compilation.
//!
//! Each export takes plain numbers or text and returns a JSON string; the
//! `*_json` functions carry the logic and are callable natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use multimon::compiler::{
    compile_program, ideal_unitary, phase_aligned_distance, sequence_unitary, CMatrix, StandardGate,
};
use multimon::design::{analyze_device, apply_asymmetry, AsymmetrySpec, DesignTarget, Mixing};
use multimon::kerr::{flux_sweep, mode_letter, KerrOptions};
use multimon::presets::{preset, PRESETS};

#[derive(Serialize)]
struct SweepRow {
    flux_phi0: f64,
    frequencies_ghz: Vec<f64>,
    couplings_mhz: Vec<(String, f64)>,
    xi_mhz: f64,
}

#[derive(Serialize)]
struct Line {
    label: String,
    frequency_ghz: f64,
}

#[derive(Serialize)]
struct Tuning {
    frequencies_ghz: Vec<f64>,
    couplings_mhz: Vec<(String, f64)>,
    junction_ej_ghz: Vec<f64>,
    min_gap_mhz: f64,
    passes: bool,
    violations: Vec<String>,
    transitions: Vec<Line>,
}

#[derive(Serialize)]
struct Pulse {
    step: usize,
    transition: String,
    theta: f64,
    phi: f64,
}

#[derive(Serialize)]
struct Compiled {
    pulses: Vec<Pulse>,
    frame_offsets_rad: Vec<(String, f64)>,
    replay_error: f64,
}

fn to_json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Names of the built-in devices.
pub fn presets_json() -> Result<String, String> {
    to_json(&PRESETS.iter().map(|p| (p.name, p.description)).collect::<Vec<_>>())
}

/// Qubit frequencies, pairwise couplings and the three-wave coefficient
/// on `points` fluxes from 0 to `max_flux` inclusive.
pub fn sweep_json(preset_name: &str, max_flux: f64, points: usize) -> Result<String, String> {
    if points < 2 {
        return Err("a sweep needs at least two points".into());
    }
    let netlist = preset(preset_name).map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (0..points).map(|k| max_flux * k as f64 / (points - 1) as f64).collect();
    let sweep = flux_sweep(&netlist, &grid, KerrOptions::default()).map_err(|e| e.to_string())?;
    let rows: Vec<SweepRow> = sweep
        .iter()
        .map(|p| {
            let k = &p.kerr;
            let m = k.mode_count();
            let couplings = (0..m)
                .flat_map(|a| ((a + 1)..m).map(move |b| (a, b)))
                .map(|(a, b)| (format!("{}{}", mode_letter(a), mode_letter(b)), k.cross(a, b) * 1e3));
            SweepRow {
                flux_phi0: p.flux_phi0,
                frequencies_ghz: k.qubit_frequencies(),
                couplings_mhz: couplings.collect(),
                xi_mhz: if m >= 3 { k.xi([0, 1, 2]).abs() * 1e3 } else { 0.0 },
            }
        })
        .collect();
    to_json(&rows)
}

/// Analysis of the trimon with the given mean junction energy, EJ mixing
/// and capacitances.
pub fn tune_json(ej_mean_ghz: f64, eta: [f64; 3], c_mean_ff: f64, c13_ff: f64, c24_ff: f64) -> Result<String, String> {
    let spec = AsymmetrySpec {
        ej_mean_ghz,
        eta: Mixing { ab: eta[0], bc: eta[1], ca: eta[2] },
        c_mean_ff,
        eta_prime: Mixing::default(),
        diagonal_caps_ff: [c13_ff, c24_ff],
        flux_phi0: 0.0,
    };
    let netlist = apply_asymmetry(&spec).map_err(|e| e.to_string())?;
    let report =
        analyze_device(&netlist, &DesignTarget::default(), KerrOptions::default()).map_err(|e| e.to_string())?;
    to_json(&Tuning {
        frequencies_ghz: report.frequencies_ghz.clone(),
        couplings_mhz: report.couplings_mhz.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        junction_ej_ghz: spec.junction_energies().to_vec(),
        min_gap_mhz: report.spacing.min_gap_mhz,
        passes: report.spacing.passes,
        violations: report.spacing.violations.clone(),
        transitions: report
            .diagram
            .transitions
            .iter()
            .map(|t| Line { label: t.label.clone(), frequency_ghz: t.frequency_ghz })
            .collect(),
    })
}

/// Pulse schedule and frame table of a three-qubit program.
pub fn compile_json(program: &str) -> Result<String, String> {
    const N: usize = 3;
    let seq = compile_program(program, N).map_err(|e| e.to_string())?;
    let mut ideal = CMatrix::identity(1 << N, 1 << N);
    for line in program.lines().map(|l| l.split('#').next().unwrap_or("").trim()).filter(|l| !l.is_empty()) {
        let gate = StandardGate::parse(line, N).map_err(|e| e.to_string())?;
        ideal = ideal_unitary(&gate, N).map_err(|e| e.to_string())? * ideal;
    }
    let schedule = seq.schedule();
    let pulses = schedule
        .steps
        .iter()
        .enumerate()
        .flat_map(|(k, s)| {
            s.pulses.iter().map(move |p| Pulse {
                step: k + 1,
                transition: p.transition.clone(),
                theta: p.theta,
                phi: p.phi_played,
            })
        })
        .collect();
    to_json(&Compiled {
        pulses,
        frame_offsets_rad: schedule.final_offsets_rad.into_iter().filter(|(_, v)| v.abs() > 1e-12).collect(),
        replay_error: phase_aligned_distance(&sequence_unitary(&seq), &ideal),
    })
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = presets)]
pub fn presets_js() -> Result<String, JsError> {
    js(presets_json())
}

#[wasm_bindgen(js_name = fluxSweep)]
pub fn flux_sweep_js(preset_name: &str, max_flux: f64, points: usize) -> Result<String, JsError> {
    js(sweep_json(preset_name, max_flux, points))
}

#[wasm_bindgen(js_name = tuneAsymmetry)]
pub fn tune_asymmetry_js(
    ej_mean_ghz: f64,
    eta_ab: f64,
    eta_bc: f64,
    eta_ca: f64,
    c_mean_ff: f64,
    c13_ff: f64,
    c24_ff: f64,
) -> Result<String, JsError> {
    js(tune_json(ej_mean_ghz, [eta_ab, eta_bc, eta_ca], c_mean_ff, c13_ff, c24_ff))
}

#[wasm_bindgen(js_name = compileGates)]
pub fn compile_gates_js(program: &str) -> Result<String, JsError> {
    js(compile_json(program))
}
