use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fmt::Write as _;
use std::io::Read as _;
use std::path::{Path, PathBuf};

use multimon::compiler::{
    compile_program, ideal_unitary, phase_aligned_distance, sequence_unitary, CMatrix, StandardGate,
};
use multimon::design::{
    analyze_device, optimize_design, AsymmetrySpec, DesignTarget, DeviceReport, Knob, OptimizerConfig,
};
use multimon::kerr::{flux_sweep, sweep_csv};
use multimon::netlist::Netlist;
use multimon::presets::{preset, PRESETS};
use multimon::pulsesim::{
    fidelity_sweep, randomized_benchmark, run_experiment, DeviceModel, ExperimentSpec, RbConfig, SWEEP_CSV_HEADER,
};

use crate::output::Rendered;
use crate::{AnalyzeArgs, CliError, CompileArgs, DeviceArgs, OptimizeArgs, PresetsArgs, Run, SimulateArgs, SweepArgs};

/// Largest replay error accepted for a compiled program.
const REPLAY_TOLERANCE: f64 = 1e-10;

fn read_text(path: &Path) -> Result<String, CliError> {
    let io = |source| CliError::Io { path: path.display().to_string(), source };
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(io)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(io)
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Input { path: path.display().to_string(), source: e.into() })
}

fn read_netlist(path: &Path) -> Result<Netlist, CliError> {
    Netlist::from_json(&read_text(path)?).map_err(|source| CliError::Input { path: path.display().to_string(), source })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

impl DeviceArgs {
    /// Netlist plus the name recorded in the manifest.
    fn load(&self) -> Result<(String, Netlist), CliError> {
        match (&self.netlist, &self.preset) {
            (Some(path), None) => Ok((path.display().to_string(), read_netlist(path)?)),
            (None, Some(name)) => Ok((format!("preset:{name}"), preset(name)?)),
            _ => Err(CliError::Usage("give either a netlist path or --preset".into())),
        }
    }
}

fn join(values: &[f64], scale: f64, digits: usize) -> String {
    values.iter().map(|v| format!("{:.*}", digits, v * scale)).collect::<Vec<_>>().join("  ")
}

fn report_text(report: &DeviceReport) -> String {
    let mut s = String::new();
    let labels = report.mode_labels.join("  ");
    let _ = writeln!(s, "modes              {labels}");
    let _ = writeln!(s, "frequency (GHz)    {}", join(&report.frequencies_ghz, 1.0, 4));
    let _ = writeln!(s, "anharmonicity (MHz) {}", join(&report.anharmonicities_ghz, 1e3, 1));
    for (pair, j) in &report.couplings_mhz {
        let _ = writeln!(s, "J_{pair} (MHz)        {j:.2}");
    }
    for tb in &report.kerr.three_body {
        let name: String = tb.modes.iter().map(|&m| report.mode_labels[m].as_str()).collect();
        let _ = writeln!(s, "J_{name} (MHz)       {:.3}", tb.ghz * 1e3);
    }
    if let Some(c) = &report.cavity {
        let _ = writeln!(s, "cavity             {:.3} GHz, g_ref {:.1} MHz", c.omega_r_ghz, c.g_ref_mhz);
        let _ = writeln!(s, "g' (MHz)           {}", join(&c.g_direct_mhz, 1.0, 2));
        let chi: Vec<String> = c.chi_mhz.iter().map(|(k, v)| format!("{k} {v:.4}")).collect();
        let _ = writeln!(s, "chi (MHz)          {}", chi.join("  "));
    }
    let _ = writeln!(s, "transitions (GHz)");
    for t in report.diagram.transitions.iter().chain(&report.diagram.leakage_transitions) {
        let _ = writeln!(s, "  {:<8} {:.4}", t.label, t.frequency_ghz);
    }
    let sp = &report.spacing;
    let _ = writeln!(s, "min gap (MHz)      {:.1}", sp.min_gap_mhz);
    for g in sp.gaps.iter().take(5) {
        let _ = writeln!(s, "  {:<8} {:<8} {:.1}", g.a, g.b, g.mhz);
    }
    let _ = writeln!(
        s,
        "stability          E(all excited) {:.3} GHz / 4 EJ_min {:.3} GHz = {:.3}",
        sp.e_all_excited_ghz, sp.four_ej_min_ghz, sp.stability_ratio
    );
    for v in &sp.violations {
        let _ = writeln!(s, "violation: {v}");
    }
    for w in &report.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    let _ = writeln!(s, "spacing            {}", if sp.passes { "pass" } else { "fail" });
    s
}

fn transitions_csv(report: &DeviceReport) -> String {
    let mut s = String::from("label,kind,frequency_ghz\n");
    for (kind, list) in
        [("computational", &report.diagram.transitions), ("leakage", &report.diagram.leakage_transitions)]
    {
        for t in list {
            let _ = writeln!(s, "{},{kind},{}", t.label, t.frequency_ghz);
        }
    }
    s
}

/// Computational transitions closer than the separation minimum cannot be
/// addressed individually; symmetric devices produce these in pairs.
fn degeneracy_warnings(report: &DeviceReport, min_separation_mhz: f64) -> Vec<String> {
    let t = &report.diagram.transitions;
    let mut out = Vec::new();
    for (k, a) in t.iter().enumerate() {
        for b in &t[k + 1..] {
            let gap = (a.frequency_ghz - b.frequency_ghz).abs() * 1e3;
            if gap < min_separation_mhz {
                out.push(format!("transitions {} and {} are nearly degenerate ({gap:.1} MHz apart)", a.label, b.label));
            }
        }
    }
    out
}

pub fn analyze(args: &AnalyzeArgs) -> Result<Run, CliError> {
    let (name, mut netlist) = args.device.load()?;
    let mut inputs = vec![name];
    if let Some(f) = args.flux {
        netlist = netlist.with_flux(f);
    }
    let mut target = match &args.target {
        Some(p) => {
            inputs.push(p.display().to_string());
            read_json::<DesignTarget>(p)?
        }
        None => DesignTarget::default(),
    };
    if let Some(w) = args.omega_r_ghz {
        target.cavity.omega_r_ghz = w;
    }
    if let Some(g) = args.g_ref_mhz {
        target.cavity.g_ref_mhz = g;
    }
    let options = args.kerr.options();
    let mut report = analyze_device(&netlist, &target, options)?;
    let degenerate = degeneracy_warnings(&report, target.min_separation_mhz);
    report.warnings.extend(degenerate);
    let failure = (!report.spacing.passes).then(|| format!("{} spacing violation(s)", report.spacing.violations.len()));
    let config = json!({ "target": target, "kerr": options, "flux_phi0": netlist.flux_phi0 });
    let rendered = Rendered::new(&report, report_text(&report))?.with_csv(transitions_csv(&report)).failing(failure);
    Ok(Run { inputs, config, rendered })
}

/// Inclusive grid from `start:stop:step`.
pub fn parse_flux_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let usage = || CliError::Usage(format!("--flux expects start:stop:step, got {spec:?}"));
    let parts: Vec<f64> =
        spec.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| usage())?;
    let [start, stop, step] = parts[..] else { return Err(usage()) };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(CliError::Usage(format!("flux range {spec:?} is empty")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12).collect())
}

pub fn sweep(args: &SweepArgs) -> Result<Run, CliError> {
    let (name, netlist) = args.device.load()?;
    let grid = parse_flux_range(&args.flux)?;
    let options = args.kerr.options();
    let points = flux_sweep(&netlist, &grid, options)?;
    let csv = sweep_csv(&points)?;
    let text = csv.replace(',', "  ");
    let config = json!({ "flux": grid, "kerr": options });
    let rendered = Rendered::new(&points, text)?.with_csv(csv);
    Ok(Run { inputs: vec![name], config, rendered })
}

fn default_knobs() -> Vec<Knob> {
    vec![Knob::EjMean, Knob::EtaAb, Knob::EtaBc, Knob::EtaCa]
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeFile {
    #[serde(default)]
    pub target: DesignTarget,
    pub seed: AsymmetrySpec,
    #[serde(default = "default_knobs")]
    pub knobs: Vec<Knob>,
    #[serde(default)]
    pub config: OptimizerConfig,
}

pub fn optimize(args: &OptimizeArgs) -> Result<Run, CliError> {
    let file: OptimizeFile = read_json(&args.target)?;
    let result = optimize_design(&file.target, &file.seed, &file.knobs, &file.config)?;
    if let Some(path) = &args.netlist_out {
        write_file(path, &(result.netlist.to_json() + "\n"))?;
    }
    let mut text = String::new();
    let s = &result.spec;
    let _ = writeln!(text, "EJ (GHz)           {}", join(&s.junction_energies(), 1.0, 4));
    let _ = writeln!(text, "ring C (fF)        {}", join(&s.ring_capacitances(), 1.0, 3));
    let _ = writeln!(text, "C13, C24 (fF)      {}", join(&s.diagonal_caps_ff, 1.0, 3));
    let _ = writeln!(text, "eta ab/bc/ca       {:.5}  {:.5}  {:.5}", s.eta.ab, s.eta.bc, s.eta.ca);
    let _ = writeln!(text, "objective          {:.6e}", result.objective);
    let _ = writeln!(text, "evaluations        {}", result.evaluations);
    let _ = writeln!(text, "max deviation (MHz) {:.3}", result.max_target_deviation_mhz);
    let _ = writeln!(text, "min gap (MHz)      {:.1}", result.report.min_gap_mhz);
    for v in &result.report.violations {
        let _ = writeln!(text, "violation: {v}");
    }
    let _ = writeln!(text, "feasible           {}", !result.infeasible);
    let failure = result.infeasible.then(|| {
        format!(
            "target not reached: max deviation {:.1} MHz, {} spacing violation(s)",
            result.max_target_deviation_mhz,
            result.report.violations.len()
        )
    });
    let config = serde_json::to_value(&file)?;
    let rendered = Rendered::new(&result, text)?.failing(failure);
    Ok(Run { inputs: vec![args.target.display().to_string()], config, rendered })
}

#[derive(Serialize)]
struct CompileOutput {
    source: Vec<String>,
    pulse_count: usize,
    schedule: multimon::compiler::Schedule,
    replay_error: f64,
}

pub fn compile(args: &CompileArgs) -> Result<Run, CliError> {
    let text = read_text(&args.program)?;
    let n = args.qubits;
    let seq = compile_program(&text, n)
        .map_err(|source| CliError::Input { path: args.program.display().to_string(), source })?;
    let dim = 1usize << n;
    let mut ideal = CMatrix::identity(dim, dim);
    for line in text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).filter(|l| !l.is_empty()) {
        ideal = ideal_unitary(&StandardGate::parse(line, n)?, n)? * ideal;
    }
    let replay_error = phase_aligned_distance(&sequence_unitary(&seq), &ideal);
    let schedule = seq.schedule();
    let mut text = String::new();
    let mut csv = String::from("step,transition,theta_rad,phi_rad\n");
    let _ = writeln!(text, "gates              {}", seq.source.join("; "));
    let _ = writeln!(text, "pulses             {}", seq.pulse_count());
    for (k, step) in schedule.steps.iter().enumerate() {
        for p in &step.pulses {
            let _ = writeln!(text, "  {:>3}  {:<8} theta {:.6}  phi {:.6}", k + 1, p.transition, p.theta, p.phi_played);
            let _ = writeln!(csv, "{},{},{},{}", k + 1, p.transition, p.theta, p.phi_played);
        }
    }
    let _ = writeln!(text, "frame offsets (rad)");
    for (label, phase) in &schedule.final_offsets_rad {
        if phase.abs() > 1e-12 {
            let _ = writeln!(text, "  {label:<8} {phase:+.6}");
        }
    }
    let _ = writeln!(text, "replay error       {replay_error:.3e}");
    let failure = (replay_error > REPLAY_TOLERANCE)
        .then(|| format!("replay error {replay_error:.3e} exceeds {REPLAY_TOLERANCE:e}"));
    let out = CompileOutput { source: seq.source.clone(), pulse_count: seq.pulse_count(), schedule, replay_error };
    let rendered = Rendered::new(&out, text)?.with_csv(csv).failing(failure);
    Ok(Run { inputs: vec![args.program.display().to_string()], config: json!({ "qubits": n }), rendered })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub preset: Option<String>,
    /// Relative to the experiment file.
    pub netlist: Option<PathBuf>,
    #[serde(default)]
    pub target: DesignTarget,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSweep {
    pub experiment: ExperimentSpec,
    pub pi_lengths_ns: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    pub device: DeviceSpec,
    pub experiment: Option<ExperimentSpec>,
    pub sweep: Option<PulseSweep>,
    pub rb: Option<RbConfig>,
}

fn load_model(spec: &DeviceSpec, base: &Path, levels: usize) -> Result<DeviceModel, CliError> {
    let netlist = match (&spec.preset, &spec.netlist) {
        (Some(name), None) => preset(name)?,
        (None, Some(p)) => read_netlist(&base.join(p))?,
        _ => return Err(CliError::Usage("device needs exactly one of preset and netlist".into())),
    };
    let report = analyze_device(&netlist, &spec.target, Default::default())?;
    Ok(DeviceModel::from_report(&report, levels)?)
}

pub fn simulate(args: &SimulateArgs, seed: Option<u64>) -> Result<Run, CliError> {
    let mut file: SimulateFile = read_json(&args.experiment)?;
    let base = args.experiment.parent().unwrap_or(Path::new("."));
    let inputs = vec![args.experiment.display().to_string()];
    let jobs = [file.experiment.is_some(), file.sweep.is_some(), file.rb.is_some()];
    if jobs.iter().filter(|&&j| j).count() != 1 {
        return Err(CliError::Usage("experiment file needs exactly one of experiment, sweep and rb".into()));
    }
    if let Some(seed) = seed {
        if let Some(e) = &mut file.experiment {
            e.seed = seed;
        }
        if let Some(s) = &mut file.sweep {
            s.experiment.seed = seed;
        }
        if let Some(r) = &mut file.rb {
            r.seed = seed;
        }
    }
    let config = serde_json::to_value(&file)?;
    let rendered = if let Some(spec) = &file.experiment {
        let model = load_model(&file.device, base, spec.levels_per_mode)?;
        let r = run_experiment(&model, spec)?;
        let mut text = String::new();
        let _ = writeln!(text, "state              {}", r.state);
        let _ = writeln!(text, "pi length (ns)     {}", r.pi_length_ns);
        let _ = writeln!(text, "decoherence        {:?}", r.decoherence_mode);
        let _ = writeln!(text, "fidelity           {:.5}", r.fidelity);
        let _ = writeln!(text, "prepared overlap   {:.5}", r.prepared_overlap);
        let _ = writeln!(text, "leakage            {:.3e}", r.leakage);
        let _ = writeln!(text, "preparation (ns)   {:.1}", r.preparation_ns);
        let _ = writeln!(text, "projections        {}", r.projections);
        let csv = format!(
            "state,pi_length_ns,fidelity,prepared_overlap,leakage\n{},{},{},{},{}\n",
            r.state, r.pi_length_ns, r.fidelity, r.prepared_overlap, r.leakage
        );
        Rendered::new(&r, text)?.with_csv(csv)
    } else if let Some(sw) = &file.sweep {
        let model = load_model(&file.device, base, sw.experiment.levels_per_mode)?;
        let points = fidelity_sweep(&model, &sw.experiment, &sw.pi_lengths_ns)?;
        let mut csv = format!("{SWEEP_CSV_HEADER}\n");
        for (len, f) in &points {
            let _ = writeln!(csv, "{len},{f}");
        }
        let rows: Vec<_> = points.iter().map(|(l, f)| json!({ "pi_length_ns": l, "fidelity": f })).collect();
        Rendered::new(&rows, csv.replace(',', "  "))?.with_csv(csv)
    } else {
        let rb = file.rb.as_ref().expect("one job is set");
        let model = load_model(&file.device, base, rb.simulation.levels_per_mode)?;
        let r = randomized_benchmark(&model, rb)?;
        let mut text = String::new();
        let _ = writeln!(text, "transition         {}", r.transition);
        let _ = writeln!(text, "p                  {:.6} +- {:.6}", r.p, r.p_error);
        let _ = writeln!(text, "fit A, B           {:.4}  {:.4}", r.a, r.b);
        let _ = writeln!(text, "error per Clifford {:.3e}", r.error_per_clifford);
        let _ = writeln!(text, "fidelity           {:.5} +- {:.5}", r.fidelity, r.fidelity_error);
        let _ = writeln!(text, "mean Clifford (ns) {:.1}", r.mean_clifford_ns);
        let mut csv = String::from("length,survival\n");
        for (m, s) in r.sequence_lengths.iter().zip(&r.survival) {
            let _ = writeln!(csv, "{m},{s}");
        }
        Rendered::new(&r, text)?.with_csv(csv)
    };
    Ok(Run { inputs, config, rendered })
}

pub fn presets(args: &PresetsArgs) -> Result<Run, CliError> {
    match &args.show {
        Some(name) => {
            let netlist = preset(name)?;
            let text = netlist.to_json() + "\n";
            let rendered = Rendered::new(&netlist, text)?;
            Ok(Run { inputs: vec![format!("preset:{name}")], config: json!({ "show": name }), rendered })
        }
        None => {
            let mut text = String::new();
            let mut csv = String::from("name,nodes,description\n");
            let mut list = Vec::new();
            for p in PRESETS {
                let n = p.netlist();
                let _ = writeln!(text, "{:<20} {}", p.name, p.description);
                let _ = writeln!(csv, "{},{},\"{}\"", p.name, n.nodes, p.description);
                list.push(json!({ "name": p.name, "nodes": n.nodes, "description": p.description }));
            }
            let rendered = Rendered::new(&list, text)?.with_csv(csv);
            Ok(Run { inputs: Vec::new(), config: json!({}), rendered })
        }
    }
}
