//! Junction and capacitor asymmetry, level-spacing validation and a
//! derivative-free optimizer over device parameters.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};
use std::cell::Cell;
use std::collections::BTreeMap;

use crate::circuit::analyze_modes;
use crate::cqed::{ring_field_direction, CavityModel};
use crate::error::{Error, Result};
use crate::kerr::{kerr_for, Anchor, KerrOptions, KerrTensor, LevelDiagram};
use crate::netlist::Netlist;
use crate::presets::trimon;

/// Three mixing coefficients, one per mode pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Mixing {
    pub ab: f64,
    pub bc: f64,
    pub ca: f64,
}

impl Mixing {
    /// Relative weights of the four ring elements 12, 23, 34, 41.
    pub fn weights(&self) -> [f64; 4] {
        let Mixing { ab, bc, ca } = *self;
        [1.0 + ab + bc + ca, 1.0 - ab + bc - ca, 1.0 + ab - bc - ca, 1.0 - ab - bc + ca]
    }

    /// Mean and mixing of four ring values (inverse of [`Mixing::weights`]).
    pub fn recover(values: [f64; 4]) -> (f64, Mixing) {
        let [e12, e23, e34, e41] = values;
        let mean = (e12 + e23 + e34 + e41) / 4.0;
        let d = 4.0 * mean;
        (
            mean,
            Mixing {
                ab: (e12 - e23 + e34 - e41) / d,
                bc: (e12 + e23 - e34 - e41) / d,
                ca: (e12 - e23 - e34 + e41) / d,
            },
        )
    }

    fn max_abs(&self) -> f64 {
        self.ab.abs().max(self.bc.abs()).max(self.ca.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetrySpec {
    pub ej_mean_ghz: f64,
    pub eta: Mixing,
    pub c_mean_ff: f64,
    #[serde(default)]
    pub eta_prime: Mixing,
    /// `C13`, `C24` in fF.
    pub diagonal_caps_ff: [f64; 2],
    #[serde(default)]
    pub flux_phi0: f64,
}

impl AsymmetrySpec {
    pub fn symmetric(ej_mean_ghz: f64, c_mean_ff: f64, c13: f64, c24: f64) -> Self {
        AsymmetrySpec {
            ej_mean_ghz,
            eta: Mixing::default(),
            c_mean_ff,
            eta_prime: Mixing::default(),
            diagonal_caps_ff: [c13, c24],
            flux_phi0: 0.0,
        }
    }

    pub fn junction_energies(&self) -> [f64; 4] {
        self.eta.weights().map(|w| self.ej_mean_ghz * w)
    }

    pub fn ring_capacitances(&self) -> [f64; 4] {
        self.eta_prime.weights().map(|w| self.c_mean_ff * w)
    }

    /// Spec reproducing a four-node ring netlist with nodes 1-2-3-4.
    pub fn from_netlist(netlist: &Netlist) -> Result<Self> {
        let pair = |i: usize, j: usize| {
            netlist
                .branches
                .iter()
                .find(|b| (b.i, b.j) == (i, j) || (b.i, b.j) == (j, i))
                .ok_or_else(|| Error::Topology(format!("no branch between nodes {i} and {j}")))
        };
        if netlist.nodes != 4 {
            return Err(Error::Topology(format!(
                "asymmetry parameters describe 4-node rings, got {} nodes",
                netlist.nodes
            )));
        }
        let ring = [(1, 2), (2, 3), (3, 4), (4, 1)];
        let mut ej = [0.0; 4];
        let mut c = [0.0; 4];
        for (k, &(i, j)) in ring.iter().enumerate() {
            let b = pair(i, j)?;
            ej[k] = b.ej_ghz;
            c[k] = b.c_ff;
        }
        let (ej_mean, eta) = Mixing::recover(ej);
        let (c_mean, eta_prime) = Mixing::recover(c);
        Ok(AsymmetrySpec {
            ej_mean_ghz: ej_mean,
            eta,
            c_mean_ff: c_mean,
            eta_prime,
            diagonal_caps_ff: [pair(1, 3)?.c_ff, pair(2, 4)?.c_ff],
            flux_phi0: netlist.flux_phi0,
        })
    }
}

pub fn apply_asymmetry(spec: &AsymmetrySpec) -> Result<Netlist> {
    if spec.eta.max_abs() >= 1.0 || spec.eta_prime.max_abs() >= 1.0 {
        return Err(Error::Domain("asymmetry coefficients must satisfy |eta| < 1".into()));
    }
    let ej = spec.junction_energies();
    let c = spec.ring_capacitances();
    let [c13, c24] = spec.diagonal_caps_ff;
    if let Some(k) = ej.iter().position(|&e| !(e > 0.0)) {
        return Err(Error::Domain(format!("junction {} has non-positive EJ {:.4} GHz", k + 1, ej[k])));
    }
    if let Some(k) = c.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Domain(format!("ring capacitor {} is non-positive ({:.4} fF)", k + 1, c[k])));
    }
    if !(c13 > 0.0 && c24 > 0.0) {
        return Err(Error::Domain("diagonal capacitances must be positive".into()));
    }
    Ok(trimon(ej, c, c13, c24).with_flux(spec.flux_phi0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    pub omega_r_ghz: f64,
    pub g_ref_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesignTarget {
    pub frequency_window_ghz: [f64; 2],
    pub min_separation_mhz: f64,
    /// Desired qubit frequencies in label order.
    pub target_frequencies_ghz: Option<Vec<f64>>,
    /// Desired conditional transitions by label, e.g. `"AB0C1"`.
    pub target_transitions_ghz: Option<BTreeMap<String, f64>>,
    pub cavity: CavitySpec,
    /// Largest allowed `E(|1..1>) / (4 EJ_min)`.
    pub stability_margin: f64,
    /// Weight of separation, window and stability hinges relative to the
    /// frequency deviation terms.
    pub penalty_weight: f64,
}

impl Default for DesignTarget {
    fn default() -> Self {
        DesignTarget {
            frequency_window_ghz: [4.0, 6.5],
            min_separation_mhz: 30.0,
            target_frequencies_ghz: None,
            target_transitions_ghz: None,
            cavity: CavitySpec { omega_r_ghz: 7.3, g_ref_mhz: 70.0 },
            stability_margin: 0.6,
            penalty_weight: 10.0,
        }
    }
}

impl DesignTarget {
    fn check(&self) -> Result<()> {
        let [lo, hi] = self.frequency_window_ghz;
        if !(lo < hi) {
            return Err(Error::config("frequency window needs f_min < f_max"));
        }
        if !(self.min_separation_mhz > 0.0) {
            return Err(Error::config("min_separation_mhz must be positive"));
        }
        if !(self.stability_margin > 0.0) {
            return Err(Error::config("stability_margin must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gap {
    pub a: String,
    pub b: String,
    pub mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingReport {
    /// Every pair of lines, smallest gap first.
    pub gaps: Vec<Gap>,
    pub min_gap_mhz: f64,
    pub e_all_excited_ghz: f64,
    pub four_ej_min_ghz: f64,
    pub stability_ratio: f64,
    pub violations: Vec<String>,
    pub passes: bool,
}

/// Gaps among the computational transitions and the `1 -> 2` leakage lines,
/// plus the frequency-window and `|1..1>` stability checks.
pub fn validate_spacing(diagram: &LevelDiagram, junction_ej_ghz: &[f64], target: &DesignTarget) -> SpacingReport {
    let lines: Vec<(&str, f64)> = diagram
        .transitions
        .iter()
        .chain(&diagram.leakage_transitions)
        .map(|t| (t.label.as_str(), t.frequency_ghz))
        .collect();
    let mut gaps = Vec::with_capacity(lines.len() * lines.len() / 2);
    for (i, a) in lines.iter().enumerate() {
        for b in &lines[i + 1..] {
            gaps.push(Gap { a: a.0.to_string(), b: b.0.to_string(), mhz: (a.1 - b.1).abs() * 1e3 });
        }
    }
    gaps.sort_by(|x, y| x.mhz.total_cmp(&y.mhz));
    let mut violations: Vec<String> = gaps
        .iter()
        .filter(|g| g.mhz < target.min_separation_mhz)
        .map(|g| format!("{} and {} are {:.1} MHz apart (minimum {:.1})", g.a, g.b, g.mhz, target.min_separation_mhz))
        .collect();
    let [lo, hi] = target.frequency_window_ghz;
    for t in &diagram.transitions {
        if t.frequency_ghz < lo || t.frequency_ghz > hi {
            violations.push(format!("{} at {:.4} GHz is outside [{lo}, {hi}] GHz", t.label, t.frequency_ghz));
        }
    }
    let m = diagram.mode_labels.len();
    let ground = diagram.energy(&vec![0; m]).unwrap_or(0.0);
    let e_top = diagram.energy(&vec![1; m]).unwrap_or(f64::NAN) - ground;
    let ej_min = junction_ej_ghz.iter().copied().fold(f64::INFINITY, f64::min);
    let four_ej_min = 4.0 * ej_min;
    let ratio = e_top / four_ej_min;
    if !(ratio <= target.stability_margin) {
        violations.push(format!(
            "E(|{}>) = {:.3} GHz is {:.3} of 4 EJ_min = {:.3} GHz (allowed {:.3})",
            "1".repeat(m),
            e_top,
            ratio,
            four_ej_min,
            target.stability_margin
        ));
    }
    SpacingReport {
        min_gap_mhz: gaps.first().map(|g| g.mhz).unwrap_or(f64::INFINITY),
        gaps,
        e_all_excited_ghz: e_top,
        four_ej_min_ghz: four_ej_min,
        stability_ratio: ratio,
        passes: violations.is_empty(),
        violations,
    }
}

/// Everything the analysis pipeline reports for one device, modes in label
/// order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceReport {
    pub mode_labels: Vec<String>,
    pub frequencies_ghz: Vec<f64>,
    pub anharmonicities_ghz: Vec<f64>,
    /// `J_AB`, `J_BC`, `J_CA` style couplings keyed by label pair, MHz.
    pub couplings_mhz: BTreeMap<String, f64>,
    pub kerr: KerrTensor,
    pub diagram: LevelDiagram,
    pub cavity: Option<CavityModel>,
    pub spacing: SpacingReport,
    pub warnings: Vec<String>,
}

/// Modes, Kerr tensor, level diagram, cavity couplings and spacing checks
/// for a netlist. The cavity field is taken along the first ring mode, and
/// cavity quantities are omitted for circuits that are not rings.
pub fn analyze_device(netlist: &Netlist, target: &DesignTarget, options: KerrOptions) -> Result<DeviceReport> {
    target.check()?;
    let mut warnings: Vec<String> = netlist.validate()?.iter().map(|w| w.to_string()).collect();
    let (_, modes) = analyze_modes(netlist)?;
    let order = modes.label_order();
    let kerr = kerr_for(netlist, &modes, options)?.reordered(&order);
    let modes = modes.reordered(&order);
    warnings.extend(kerr.warnings.iter().cloned());
    let diagram = LevelDiagram::anchored(&kerr, Anchor::Qubit, 2, true)?;
    let frequencies = kerr.qubit_frequencies();
    let m = kerr.mode_count();
    let mut couplings = BTreeMap::new();
    for mu in 0..m {
        for nu in (mu + 1)..m {
            let (a, b) = if nu == mu + 1 || m < 3 { (mu, nu) } else { (nu, mu) };
            let key = format!("{}{}", diagram.mode_labels[a], diagram.mode_labels[b]);
            couplings.insert(key, kerr.cross(mu, nu) * 1e3);
        }
    }
    let cavity = match ring_field_direction(&modes, 0) {
        Ok(dir) => {
            let model =
                CavityModel::new(&modes, &kerr, &frequencies, dir, target.cavity.omega_r_ghz, target.cavity.g_ref_mhz)?;
            warnings.extend(model.warnings.iter().cloned());
            Some(model)
        }
        Err(_) => None,
    };
    let spacing = validate_spacing(&diagram, &netlist.junction_energies(), target);
    Ok(DeviceReport {
        mode_labels: diagram.mode_labels.clone(),
        anharmonicities_ghz: (0..m).map(|mu| kerr.anharmonicity(mu)).collect(),
        frequencies_ghz: frequencies,
        couplings_mhz: couplings,
        kerr,
        diagram,
        cavity,
        spacing,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knob {
    EjMean,
    EtaAb,
    EtaBc,
    EtaCa,
    CMean,
    EtaPrimeAb,
    EtaPrimeBc,
    EtaPrimeCa,
    C13,
    C24,
}

impl Knob {
    fn get(self, s: &AsymmetrySpec) -> f64 {
        match self {
            Knob::EjMean => s.ej_mean_ghz,
            Knob::EtaAb => s.eta.ab,
            Knob::EtaBc => s.eta.bc,
            Knob::EtaCa => s.eta.ca,
            Knob::CMean => s.c_mean_ff,
            Knob::EtaPrimeAb => s.eta_prime.ab,
            Knob::EtaPrimeBc => s.eta_prime.bc,
            Knob::EtaPrimeCa => s.eta_prime.ca,
            Knob::C13 => s.diagonal_caps_ff[0],
            Knob::C24 => s.diagonal_caps_ff[1],
        }
    }

    fn set(self, s: &mut AsymmetrySpec, v: f64) {
        match self {
            Knob::EjMean => s.ej_mean_ghz = v,
            Knob::EtaAb => s.eta.ab = v,
            Knob::EtaBc => s.eta.bc = v,
            Knob::EtaCa => s.eta.ca = v,
            Knob::CMean => s.c_mean_ff = v,
            Knob::EtaPrimeAb => s.eta_prime.ab = v,
            Knob::EtaPrimeBc => s.eta_prime.bc = v,
            Knob::EtaPrimeCa => s.eta_prime.ca = v,
            Knob::C13 => s.diagonal_caps_ff[0] = v,
            Knob::C24 => s.diagonal_caps_ff[1] = v,
        }
    }

    /// Initial simplex step.
    fn step(self, s: &AsymmetrySpec) -> f64 {
        match self {
            Knob::EtaAb | Knob::EtaBc | Knob::EtaCa | Knob::EtaPrimeAb | Knob::EtaPrimeBc | Knob::EtaPrimeCa => 0.03,
            _ => 0.05 * self.get(s).abs().max(1e-3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Total objective evaluations across restarts and outer rounds.
    pub budget: usize,
    /// Rounds of average-EJ adjustment.
    pub outer_rounds: usize,
    pub kerr: KerrOptions,
    /// Largest deviation from a target frequency still counted as reached.
    pub target_tolerance_mhz: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { budget: 2000, outer_rounds: 4, kerr: KerrOptions::default(), target_tolerance_mhz: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignResult {
    pub spec: AsymmetrySpec,
    pub netlist: Netlist,
    pub objective: f64,
    pub evaluations: usize,
    pub max_target_deviation_mhz: f64,
    pub report: SpacingReport,
    pub infeasible: bool,
}

#[derive(Debug, Clone)]
struct Evaluation {
    objective: f64,
    max_deviation_mhz: f64,
    report: SpacingReport,
}

const FAILED: f64 = 1e12;

fn evaluate(spec: &AsymmetrySpec, target: &DesignTarget, options: KerrOptions) -> Option<Evaluation> {
    let netlist = apply_asymmetry(spec).ok()?;
    let (_, modes) = analyze_modes(&netlist).ok()?;
    let order = modes.label_order();
    let kerr = kerr_for(&netlist, &modes, options).ok()?.reordered(&order);
    let diagram = LevelDiagram::anchored(&kerr, Anchor::Qubit, 2, true).ok()?;
    let report = validate_spacing(&diagram, &netlist.junction_energies(), target);
    let mut deviation = 0.0;
    let mut max_dev = 0.0f64;
    if let Some(f) = &target.target_frequencies_ghz {
        for (got, want) in kerr.qubit_frequencies().iter().zip(f) {
            let d = (got - want) * 1e3;
            deviation += d * d;
            max_dev = max_dev.max(d.abs());
        }
    }
    if let Some(map) = &target.target_transitions_ghz {
        for (label, want) in map {
            let got = diagram.transition(label)?.frequency_ghz;
            let d = (got - want) * 1e3;
            deviation += d * d;
            max_dev = max_dev.max(d.abs());
        }
    }
    let mut hinge = 0.0;
    for g in report.gaps.iter().take_while(|g| g.mhz < target.min_separation_mhz) {
        hinge += (target.min_separation_mhz - g.mhz).powi(2);
    }
    let [lo, hi] = target.frequency_window_ghz;
    for t in &diagram.transitions {
        let out = (lo - t.frequency_ghz).max(t.frequency_ghz - hi).max(0.0) * 1e3;
        hinge += out * out;
    }
    let over = (report.stability_ratio - target.stability_margin).max(0.0) * 1e3;
    hinge += over * over;
    Some(Evaluation { objective: deviation + target.penalty_weight * hinge, max_deviation_mhz: max_dev, report })
}

struct Problem<'a> {
    base: AsymmetrySpec,
    knobs: &'a [Knob],
    target: &'a DesignTarget,
    options: KerrOptions,
    evaluations: &'a Cell<usize>,
}

impl Problem<'_> {
    fn spec(&self, x: &[f64]) -> AsymmetrySpec {
        let mut s = self.base;
        for (k, &v) in self.knobs.iter().zip(x) {
            k.set(&mut s, v);
        }
        s
    }
}

impl CostFunction for Problem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        self.evaluations.set(self.evaluations.get() + 1);
        Ok(evaluate(&self.spec(x), self.target, self.options).map(|e| e.objective).unwrap_or(FAILED))
    }
}

/// Nelder-Mead over `knobs` with restarts from the best vertex, wrapped in
/// rounds that rescale the average EJ so the mean qubit frequency follows
/// the target mean.
pub fn optimize_design(
    target: &DesignTarget,
    seed: &AsymmetrySpec,
    knobs: &[Knob],
    config: &OptimizerConfig,
) -> Result<DesignResult> {
    target.check()?;
    if knobs.is_empty() {
        return Err(Error::config("optimize_design needs at least one knob"));
    }
    apply_asymmetry(seed)?;
    let evaluations = Cell::new(0usize);
    let mut best = *seed;
    let mut best_eval = evaluate(&best, target, config.kerr)
        .ok_or_else(|| Error::Convergence("seed device cannot be analyzed".into()))?;
    let per_round = config.budget / config.outer_rounds.max(1);
    for _round in 0..config.outer_rounds.max(1) {
        if let Some(f) = &target.target_frequencies_ghz {
            if let Some(scaled) = rescale_ej_mean(&best, f, config.kerr) {
                if let Some(e) = evaluate(&scaled, target, config.kerr) {
                    if e.objective < best_eval.objective {
                        best = scaled;
                        best_eval = e;
                    }
                }
            }
        }
        let round_end = (evaluations.get() + per_round).min(config.budget);
        while evaluations.get() + knobs.len() + 2 < round_end {
            let problem = Problem { base: best, knobs, target, options: config.kerr, evaluations: &evaluations };
            let start: Vec<f64> = knobs.iter().map(|k| k.get(&best)).collect();
            let mut simplex = vec![start.clone()];
            for (i, k) in knobs.iter().enumerate() {
                let mut v = start.clone();
                v[i] += k.step(&best);
                simplex.push(v);
            }
            let solver =
                NelderMead::new(simplex).with_sd_tolerance(1e-6).map_err(|e| Error::Convergence(e.to_string()))?;
            let iters = (round_end - evaluations.get()) as u64;
            let result = Executor::new(problem, solver)
                .configure(|s| s.max_iters(iters / 2 + 1))
                .run()
                .map_err(|e| Error::Convergence(e.to_string()))?;
            let state = result.state();
            let Some(x) = state.get_best_param() else { break };
            let mut candidate = best;
            for (k, &v) in knobs.iter().zip(x) {
                k.set(&mut candidate, v);
            }
            let improved = match evaluate(&candidate, target, config.kerr) {
                Some(e) if e.objective < best_eval.objective * (1.0 - 1e-9) => {
                    best = candidate;
                    best_eval = e;
                    true
                }
                _ => false,
            };
            if !improved || best_eval.objective < 1e-10 {
                break;
            }
        }
        if best_eval.report.passes && best_eval.objective < 1e-6 {
            break;
        }
    }
    let tolerance = config.target_tolerance_mhz.unwrap_or(target.min_separation_mhz / 2.0);
    let infeasible = !best_eval.report.passes || best_eval.max_deviation_mhz > tolerance;
    Ok(DesignResult {
        netlist: apply_asymmetry(&best)?,
        spec: best,
        objective: best_eval.objective,
        evaluations: evaluations.get(),
        max_target_deviation_mhz: best_eval.max_deviation_mhz,
        report: best_eval.report,
        infeasible,
    })
}

/// Mode frequencies scale close to `sqrt(EJ)`, so the mean frequency error
/// is removed to first order by scaling `EJ_mean` by the squared ratio.
fn rescale_ej_mean(spec: &AsymmetrySpec, targets: &[f64], options: KerrOptions) -> Option<AsymmetrySpec> {
    let netlist = apply_asymmetry(spec).ok()?;
    let (_, modes) = analyze_modes(&netlist).ok()?;
    let f = kerr_for(&netlist, &modes, options).ok()?.qubit_frequencies();
    let mean_f = f.iter().sum::<f64>() / f.len() as f64;
    let mean_t = targets.iter().sum::<f64>() / targets.len() as f64;
    let mut out = *spec;
    out.ej_mean_ghz *= (mean_t / mean_f).powi(2);
    Some(out)
}
