//! Run configuration: CLI flags, optional TOML file, named presets, and
//! the merge/validation logic that turns them into one concrete config.
//!
//! Precedence, lowest to highest: built-in defaults, `--preset`, config
//! file, explicit flags. The `RATCHET_OUT_DIR` environment variable
//! overrides the output directory only, and beats all of the above.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use ratchet_core::dynamics::Coupling;
use ratchet_core::classical::HoldLaw;

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "RATCHET_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "ratchet",
    version,
    about = "Energy ratcheting of two coupled oscillators under repeated \
             discarding of inter-system correlations",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the available experiments.
    List,
    /// Execute an experiment and write CSV results plus a metadata sidecar.
    Run(RunArgs),
    /// Emit a gnuplot script for an existing run directory.
    Plot {
        /// Directory containing the CSV results of a previous run.
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum ExperimentKind {
    QuantumChain,
    QuantumEnsemble,
    Shorttime,
    BogoliubovValidate,
    ClassicalToggle,
    ClassicalFreq,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::QuantumChain => "quantum-chain",
            ExperimentKind::QuantumEnsemble => "quantum-ensemble",
            ExperimentKind::Shorttime => "shorttime",
            ExperimentKind::BogoliubovValidate => "bogoliubov-validate",
            ExperimentKind::ClassicalToggle => "classical-toggle",
            ExperimentKind::ClassicalFreq => "classical-freq",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingKind {
    /// Spin-boson: g(a†+a)(b†+b).
    Sb,
    /// Jaynes-Cummings: g(a†b+b†a).
    Jc,
}

impl CouplingKind {
    pub fn to_core(self) -> Coupling {
        match self {
            CouplingKind::Sb => Coupling::SpinBoson,
            CouplingKind::Jc => Coupling::JaynesCummings,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CouplingKind::Sb => "sb",
            CouplingKind::Jc => "jc",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum PresetKind {
    Fig1,
    Fig2b,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HoldLawKind {
    Exponential,
    Uniform,
    Fixed,
}

impl HoldLawKind {
    pub fn name(&self) -> &'static str {
        match self {
            HoldLawKind::Exponential => "exponential",
            HoldLawKind::Uniform => "uniform",
            HoldLawKind::Fixed => "fixed",
        }
    }
}

/// Flags of the `run` subcommand; everything optional so the merge with
/// presets and config files stays unambiguous.
#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct RunArgs {
    /// Experiment to execute.
    #[arg(long, value_enum)]
    pub experiment: ExperimentKind,
    /// Named parameter preset.
    #[arg(long, value_enum)]
    pub preset: Option<PresetKind>,
    /// TOML config file; unknown keys are rejected.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for CSVs, metadata, and plot scripts.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long)]
    pub omega_a: Option<f64>,
    #[arg(long)]
    pub omega_b: Option<f64>,
    /// Ladder-operator coupling strength g.
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long, value_enum)]
    pub coupling: Option<CouplingKind>,
    /// Contact duration of one encounter.
    #[arg(long)]
    pub contact_time: Option<f64>,
    /// Fock-space cutoff (levels) of oscillator A.
    #[arg(long)]
    pub levels_a: Option<usize>,
    /// Fock-space cutoff (levels) of oscillator B.
    #[arg(long)]
    pub levels_b: Option<usize>,
    #[arg(long)]
    pub n_encounters: Option<usize>,
    /// Initial Fock level of oscillator A.
    #[arg(long)]
    pub initial_n_a: Option<usize>,
    /// Initial Fock level of oscillator B.
    #[arg(long)]
    pub initial_n_b: Option<usize>,
    /// Pool size of the quantum-ensemble experiment.
    #[arg(long)]
    pub pool_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tail-mass level that flags a truncation warning.
    #[arg(long)]
    pub truncation_warn: Option<f64>,
    /// Tail-mass level that aborts the run.
    #[arg(long)]
    pub truncation_hard: Option<f64>,
    /// Encounters (or toggles) discarded before growth fits.
    #[arg(long)]
    pub fit_skip: Option<usize>,

    /// Classical x_a·x_b coupling strength.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub mean_hold: Option<f64>,
    #[arg(long, value_enum)]
    pub hold_law: Option<HoldLawKind>,
    /// Lower edge of the uniform hold law.
    #[arg(long)]
    pub hold_lo: Option<f64>,
    /// Upper edge of the uniform hold law.
    #[arg(long)]
    pub hold_hi: Option<f64>,
    #[arg(long)]
    pub n_toggles: Option<usize>,
    #[arg(long)]
    pub n_trajectories: Option<usize>,
    /// Second frequency of the classical-freq experiment.
    #[arg(long)]
    pub omega_prime: Option<f64>,
}

/// Structured config file; every field optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub omega_a: Option<f64>,
    pub omega_b: Option<f64>,
    pub g: Option<f64>,
    pub coupling: Option<CouplingKind>,
    pub contact_time: Option<f64>,
    pub levels_a: Option<usize>,
    pub levels_b: Option<usize>,
    pub n_encounters: Option<usize>,
    pub initial_n_a: Option<usize>,
    pub initial_n_b: Option<usize>,
    pub pool_size: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub truncation_warn: Option<f64>,
    pub truncation_hard: Option<f64>,
    pub fit_skip: Option<usize>,
    pub gamma: Option<f64>,
    pub mean_hold: Option<f64>,
    pub hold_law: Option<HoldLawKind>,
    pub hold_lo: Option<f64>,
    pub hold_hi: Option<f64>,
    pub n_toggles: Option<usize>,
    pub n_trajectories: Option<usize>,
    pub omega_prime: Option<f64>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub omega_a: f64,
    pub omega_b: f64,
    pub g: f64,
    pub coupling: CouplingKind,
    pub contact_time: f64,
    pub levels_a: usize,
    pub levels_b: usize,
    pub n_encounters: usize,
    pub initial_n_a: usize,
    pub initial_n_b: usize,
    pub pool_size: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub truncation_warn: f64,
    pub truncation_hard: f64,
    pub fit_skip: usize,
    pub gamma: f64,
    pub mean_hold: f64,
    pub hold_law: HoldLawKind,
    pub hold_lo: f64,
    pub hold_hi: f64,
    pub n_toggles: usize,
    pub n_trajectories: usize,
    pub omega_prime: f64,
}

impl RunConfig {
    fn defaults(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            omega_a: 1.0,
            omega_b: 2.0,
            g: 0.2,
            coupling: CouplingKind::Sb,
            contact_time: 4.0,
            levels_a: 21,
            levels_b: 21,
            n_encounters: 25,
            initial_n_a: 2,
            initial_n_b: 1,
            pool_size: 4,
            seed: 17,
            output_dir: PathBuf::from("ratchet-out"),
            truncation_warn: 1e-6,
            truncation_hard: 1e-3,
            // The mean excitation dips for the first ~8 encounters before
            // the ratchet growth sets in; growth fits skip that transient.
            fit_skip: 8,
            gamma: 0.3,
            mean_hold: 1.0,
            hold_law: HoldLawKind::Exponential,
            hold_lo: 0.5,
            hold_hi: 1.5,
            n_toggles: 200,
            n_trajectories: 10_000,
            omega_prime: 2.0,
        }
    }

    fn apply_preset(&mut self, preset: PresetKind) {
        match preset {
            // ω_a=1, ω_b=2, g=0.2, t=4, |2⟩⊗|1⟩, 21 levels, 25 encounters.
            PresetKind::Fig1 => {
                *self = Self {
                    output_dir: self.output_dir.clone(),
                    ..Self::defaults(self.experiment)
                };
            }
            // Same, but ω_b=3, g=0.5, t=15.
            PresetKind::Fig2b => {
                self.apply_preset(PresetKind::Fig1);
                self.omega_b = 3.0;
                self.g = 0.5;
                self.contact_time = 15.0;
            }
        }
    }

    fn apply_file(&mut self, file: &FileConfig) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = file.$field.clone() { self.$field = v; })*
            };
        }
        take!(
            omega_a, omega_b, g, coupling, contact_time, levels_a, levels_b,
            n_encounters, initial_n_a, initial_n_b, pool_size, seed,
            output_dir, truncation_warn, truncation_hard, fit_skip, gamma,
            mean_hold, hold_law, hold_lo, hold_hi, n_toggles, n_trajectories,
            omega_prime
        );
    }

    fn apply_args(&mut self, args: &RunArgs) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = args.$field { self.$field = v; })*
            };
        }
        take!(
            omega_a, omega_b, g, coupling, contact_time, levels_a, levels_b,
            n_encounters, initial_n_a, initial_n_b, pool_size, seed,
            truncation_warn, truncation_hard, fit_skip, gamma, mean_hold,
            hold_law, hold_lo, hold_hi, n_toggles, n_trajectories, omega_prime
        );
        if let Some(out) = &args.out {
            self.output_dir = out.clone();
        }
    }

    pub fn hold_law_core(&self) -> HoldLaw {
        match self.hold_law {
            HoldLawKind::Exponential => HoldLaw::Exponential,
            HoldLawKind::Uniform => HoldLaw::UniformRange {
                lo: self.hold_lo,
                hi: self.hold_hi,
            },
            HoldLawKind::Fixed => HoldLaw::Fixed,
        }
    }

    /// Cross-field checks beyond what the library modules validate.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.truncation_warn <= 0.0 || self.truncation_hard <= 0.0 {
            return Err(CliError::Validation(
                "truncation thresholds must be positive".into(),
            ));
        }
        if self.truncation_warn > self.truncation_hard {
            return Err(CliError::Validation(
                "truncation_warn must not exceed truncation_hard".into(),
            ));
        }
        if self.n_trajectories == 0 {
            return Err(CliError::Validation(
                "n_trajectories must be at least 1".into(),
            ));
        }
        if self.n_toggles == 0 {
            return Err(CliError::Validation("n_toggles must be at least 1".into()));
        }
        if self.omega_prime <= 0.0 {
            return Err(CliError::Validation("omega_prime must be positive".into()));
        }
        Ok(())
    }
}

fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
}

/// Merge defaults, preset, config file, flags, and the output-dir
/// environment override into one validated config.
pub fn resolve(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::defaults(args.experiment);
    if let Some(preset) = args.preset {
        cfg.apply_preset(preset);
    }
    if let Some(path) = &args.config {
        cfg.apply_file(&load_file(path)?);
    }
    cfg.apply_args(args);
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        if !dir.is_empty() {
            cfg.output_dir = PathBuf::from(dir);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
