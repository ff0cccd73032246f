mod commands;
mod manifest;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use manifest::RunManifest;
use output::Format;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] multimon::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Input { path: String, source: multimon::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser)]
#[command(name = "multimon", version, about = "Analyze, compile and simulate multimode superconducting qubits")]
pub struct Cli {
    /// Write the result to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every stochastic step; overrides seeds in input files.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Omit the timestamp so identical inputs give identical bytes.
    #[arg(long, global = true)]
    reproducible: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Modes, Kerr terms, level diagram, cavity couplings and spacing report.
    Analyze(AnalyzeArgs),
    /// Kerr terms across an external-flux grid.
    Sweep(SweepArgs),
    /// Fit the asymmetry parameters of a trimon to a frequency target.
    Optimize(OptimizeArgs),
    /// Compile a standard-gate program into conditional pulses.
    Compile(CompileArgs),
    /// Run a preparation-and-tomography, pulse-length sweep or RB experiment.
    Simulate(SimulateArgs),
    /// List the built-in netlists or export one.
    Presets(PresetsArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
pub struct DeviceArgs {
    /// Netlist JSON file.
    pub netlist: Option<PathBuf>,
    /// Built-in netlist name (see `multimon presets`).
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KerrChoice {
    /// Quartic potential, first-order perturbation.
    Quartic,
    /// Sixth order, second-order perturbation.
    Sixth,
    /// Eighth order, fourth-order perturbation.
    Dressed,
}

impl KerrChoice {
    pub fn options(self) -> multimon::kerr::KerrOptions {
        use multimon::kerr::KerrOptions;
        match self {
            KerrChoice::Quartic => KerrOptions::default(),
            KerrChoice::Sixth => KerrOptions::sixth(),
            KerrChoice::Dressed => KerrOptions::dressed(),
        }
    }
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub device: DeviceArgs,
    /// Design target JSON; defaults apply to missing fields.
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long)]
    pub omega_r_ghz: Option<f64>,
    #[arg(long)]
    pub g_ref_mhz: Option<f64>,
    /// External flux in Phi0, replacing the netlist value.
    #[arg(long)]
    pub flux: Option<f64>,
    #[arg(long, value_enum, default_value_t = KerrChoice::Quartic)]
    pub kerr: KerrChoice,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub device: DeviceArgs,
    /// Inclusive grid `start:stop:step` in Phi0.
    #[arg(long, default_value = "0:0.25:0.05")]
    pub flux: String,
    #[arg(long, value_enum, default_value_t = KerrChoice::Quartic)]
    pub kerr: KerrChoice,
}

#[derive(Args)]
pub struct OptimizeArgs {
    /// JSON with `seed` (asymmetry spec) and optional `target`, `knobs`, `config`.
    pub target: PathBuf,
    /// Also write the optimized netlist here.
    #[arg(long)]
    pub netlist_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompileArgs {
    /// Program file, one gate per line; `-` reads stdin.
    pub program: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub qubits: usize,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Experiment JSON with `device` and one of `experiment`, `sweep`, `rb`.
    pub experiment: PathBuf,
}

#[derive(Args)]
pub struct PresetsArgs {
    /// Print this preset's netlist.
    #[arg(long)]
    pub show: Option<String>,
}

/// What a command produced, before rendering.
pub struct Run {
    pub inputs: Vec<String>,
    pub config: serde_json::Value,
    pub rendered: output::Rendered,
}

fn execute(cli: &Cli) -> Result<Option<String>, CliError> {
    let (name, run) = match &cli.command {
        Command::Analyze(a) => ("analyze", commands::analyze(a)?),
        Command::Sweep(a) => ("sweep", commands::sweep(a)?),
        Command::Optimize(a) => ("optimize", commands::optimize(a)?),
        Command::Compile(a) => ("compile", commands::compile(a)?),
        Command::Simulate(a) => ("simulate", commands::simulate(a, cli.seed)?),
        Command::Presets(a) => ("presets", commands::presets(a)?),
    };
    let manifest = RunManifest::new(name, run.inputs, run.config, cli.seed.unwrap_or(0), cli.reproducible);
    let text = output::render(&manifest, &run.rendered, cli.format)?;
    output::write(&text, cli.out.as_deref())?;
    Ok(run.rendered.validation_failure)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(reason)) => {
            eprintln!("validation failed: {reason}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
