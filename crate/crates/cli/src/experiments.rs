//! The experiment registry: each named experiment is a strategy behind a
//! common trait, selected by name from the resolved configuration.

use ratchet_core::bogoliubov;
use ratchet_core::classical::{
    self, ClassicalParams, ClassicalState, TrajectoryStats,
};
use ratchet_core::dynamics::{self, ModelParams, PropagatorCache, TruncationGuard};
use ratchet_core::fit;
use ratchet_core::fock::{DensityMatrix, Keep, Space, SpaceSpec, Tolerances};
use ratchet_core::ratchet::{
    self, EncounterRecord, InitialState, ProtocolMode, ProtocolSpec,
};
use ratchet_core::shorttime::{self, BipartiteFactors};
use ratchet_core::CoreError;

use crate::config::{CouplingKind, RunConfig};
use crate::error::CliError;
use crate::output::{fmt_f64, MetaValue, Table};

/// What a finished (or aborted-with-partials) experiment hands back for
/// persistence.
pub struct ExperimentOutput {
    pub tables: Vec<Table>,
    pub results: Vec<(String, MetaValue)>,
    pub truncation_warning_count: usize,
    /// Set when the run stopped early; the tables hold partial data and
    /// the process exits with the error's code after persisting them.
    pub abort: Option<CliError>,
}

impl ExperimentOutput {
    fn complete(tables: Vec<Table>, results: Vec<(String, MetaValue)>) -> Self {
        Self {
            tables,
            results,
            truncation_warning_count: 0,
            abort: None,
        }
    }
}

pub trait Experiment: Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn run(&self, cfg: &RunConfig) -> Result<ExperimentOutput, CliError>;
}

pub fn registry() -> Vec<Box<dyn Experiment>> {
    vec![
        Box::new(QuantumChain),
        Box::new(QuantumEnsemble),
        Box::new(Shorttime),
        Box::new(BogoliubovValidate),
        Box::new(ClassicalToggle),
        Box::new(ClassicalFreq),
    ]
}

pub fn find(name: &str) -> Option<Box<dyn Experiment>> {
    registry().into_iter().find(|e| e.name() == name)
}

fn model_params(cfg: &RunConfig) -> ModelParams {
    ModelParams {
        omega_a: cfg.omega_a,
        omega_b: cfg.omega_b,
        g: cfg.g,
        coupling: cfg.coupling.to_core(),
    }
}

fn protocol_spec(cfg: &RunConfig, mode: ProtocolMode) -> Result<ProtocolSpec, CliError> {
    // Surface UnstableCoupling (exit 5) before any propagator is built.
    if cfg.coupling == CouplingKind::Sb {
        bogoliubov::sb_normal_modes(&model_params(cfg))?;
    }
    Ok(ProtocolSpec {
        params: model_params(cfg),
        spec: SpaceSpec::new(cfg.levels_a, cfg.levels_b)?,
        contact_time: cfg.contact_time,
        n_encounters: cfg.n_encounters,
        mode,
        initial_a: InitialState::Fock(cfg.initial_n_a),
        initial_b: InitialState::Fock(cfg.initial_n_b),
        guard: TruncationGuard {
            warn: cfg.truncation_warn,
            hard: cfg.truncation_hard,
        },
        coherent_tail_threshold: 1e-12,
        tolerances: Tolerances::default(),
    })
}

fn growth_table(records: &[EncounterRecord]) -> Table {
    Table {
        name: "growth.csv",
        header: "encounter,mean_n_a,mean_n_b,free_energy,purity_a,purity_b,tail_mass",
        rows: records
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{}",
                    r.index,
                    fmt_f64(r.mean_n_a),
                    fmt_f64(r.mean_n_b),
                    fmt_f64(r.free_energy),
                    fmt_f64(r.purity_a),
                    fmt_f64(r.purity_b),
                    fmt_f64(r.tail_mass)
                )
            })
            .collect(),
    }
}

fn dist_table(records: &[EncounterRecord]) -> Table {
    let rows = match records.last() {
        Some(last) => {
            let levels = last.dist_a.len().max(last.dist_b.len());
            (0..levels)
                .map(|n| {
                    format!(
                        "{n},{},{}",
                        fmt_f64(last.dist_a.get(n).copied().unwrap_or(0.0)),
                        fmt_f64(last.dist_b.get(n).copied().unwrap_or(0.0))
                    )
                })
                .collect()
        }
        None => Vec::new(),
    };
    Table {
        name: "dist_final.csv",
        header: "n,p_a,p_b",
        rows,
    }
}

fn fit_row(name: &str, fit: &fit::LineFit) -> String {
    format!(
        "{name},{},{},{}",
        fmt_f64(fit.slope),
        fmt_f64(fit.intercept),
        fmt_f64(fit.r_squared)
    )
}

/// Growth and final-distribution fits; rows that cannot be computed on a
/// partial run are omitted rather than failing the persistence.
fn quantum_fits_table(records: &[EncounterRecord], cfg: &RunConfig) -> Table {
    let mut rows = Vec::new();
    let n_a: Vec<f64> = records.iter().map(|r| r.mean_n_a).collect();
    let n_b: Vec<f64> = records.iter().map(|r| r.mean_n_b).collect();
    if let Ok(f) = ratchet::fit_linear_growth(&n_a, cfg.fit_skip) {
        rows.push(fit_row("growth_n_a", &f));
    }
    if let Ok(f) = ratchet::fit_linear_growth(&n_b, cfg.fit_skip) {
        rows.push(fit_row("growth_n_b", &f));
    }
    if let Some(last) = records.last() {
        let range_a = ratchet::default_fit_range(last.dist_a.len());
        let range_b = ratchet::default_fit_range(last.dist_b.len());
        if let Ok(f) = ratchet::fit_exponential(&last.dist_a, range_a) {
            rows.push(fit_row("dist_a", &f));
        }
        if let Ok(f) = ratchet::fit_exponential(&last.dist_b, range_b) {
            rows.push(fit_row("dist_b", &f));
        }
    }
    Table {
        name: "fits.csv",
        header: "name,slope,intercept,r_squared",
        rows,
    }
}

/// Stability data plus the single-contact support audit shared by both
/// quantum protocol experiments.
fn quantum_results(
    cfg: &RunConfig,
    records: &[EncounterRecord],
) -> Result<Vec<(String, MetaValue)>, CliError> {
    let params = model_params(cfg);
    let mut results = Vec::new();
    match cfg.coupling {
        CouplingKind::Sb => {
            // Surfaces UnstableCoupling (exit 5) before any heavy work.
            let modes = bogoliubov::sb_normal_modes(&params)?;
            results.push(("stable".into(), MetaValue::Bool(true)));
            results.push((
                "omega_mode_a".into(),
                MetaValue::Float(modes.omega_mode_a),
            ));
            results.push((
                "omega_mode_b".into(),
                MetaValue::Float(modes.omega_mode_b),
            ));
        }
        CouplingKind::Jc => {
            let psi = bogoliubov::jc_rotation(&params)?;
            results.push(("stable".into(), MetaValue::Bool(true)));
            results.push(("jc_rotation".into(), MetaValue::Float(psi)));
            results.push((
                "jc_rotation_residual".into(),
                MetaValue::Float(bogoliubov::jc_rotation_residual(&params, psi)),
            ));
        }
    }

    let audit = bogoliubov::support_audit(
        &params,
        &SpaceSpec::new(cfg.levels_a, cfg.levels_b)?,
        cfg.initial_n_a,
        cfg.initial_n_b,
        cfg.contact_time,
    )?;
    results.push(("support_excess_a".into(), MetaValue::Float(audit.mass_a)));
    results.push(("support_excess_b".into(), MetaValue::Float(audit.mass_b)));

    let max_abs = |f: fn(&EncounterRecord) -> f64| {
        records.iter().map(|r| f(r).abs()).fold(0.0, f64::max)
    };
    results.push((
        "max_abs_delta_h0".into(),
        MetaValue::Float(max_abs(|r| r.delta_h0)),
    ));
    results.push((
        "max_delta_h_vs_delta_v".into(),
        MetaValue::Float(max_abs(|r| r.delta_h - r.delta_v)),
    ));
    results.push((
        "total_delta_h".into(),
        MetaValue::Float(records.iter().map(|r| r.delta_h).sum()),
    ));
    Ok(results)
}

fn quantum_output(
    cfg: &RunConfig,
    records: Vec<EncounterRecord>,
    abort: Option<CliError>,
) -> Result<ExperimentOutput, CliError> {
    let results = quantum_results(cfg, &records)?;
    Ok(ExperimentOutput {
        tables: vec![
            growth_table(&records),
            dist_table(&records),
            quantum_fits_table(&records, cfg),
        ],
        results,
        truncation_warning_count: records.iter().filter(|r| r.truncation_warning).count(),
        abort,
    })
}

/// Single-chain encounter protocol: both marginals of one encounter feed
/// the next.
struct QuantumChain;

impl Experiment for QuantumChain {
    fn name(&self) -> &'static str {
        "quantum-chain"
    }

    fn summary(&self) -> &'static str {
        "encounter protocol reusing one pair's marginals"
    }

    fn run(&self, cfg: &RunConfig) -> Result<ExperimentOutput, CliError> {
        let protocol = protocol_spec(cfg, ProtocolMode::Chain)?;
        protocol.validate()?;
        let cache = PropagatorCache::new();
        // Driven encounter by encounter (rather than through run_chain) so
        // a truncation overflow still leaves the earlier records for
        // persistence as partial results.
        let engine = ratchet::EncounterEngine::new(&protocol, &cache)?;
        let mut rho_a =
            protocol
                .initial_a
                .build(Space::A, cfg.levels_a, protocol.coherent_tail_threshold)?;
        let mut rho_b =
            protocol
                .initial_b
                .build(Space::B, cfg.levels_b, protocol.coherent_tail_threshold)?;
        let mut records = Vec::with_capacity(cfg.n_encounters);
        let mut abort = None;
        for index in 0..cfg.n_encounters {
            match engine.run_encounter(&rho_a, &rho_b, index) {
                Ok((next_a, next_b, record)) => {
                    rho_a = next_a;
                    rho_b = next_b;
                    records.push(record);
                }
                Err(e @ CoreError::TruncationOverflow { .. }) => {
                    abort = Some(CliError::Core(e));
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        quantum_output(cfg, records, abort)
    }
}

/// Pool-based encounter protocol with a random matching per round.
struct QuantumEnsemble;

impl Experiment for QuantumEnsemble {
    fn name(&self) -> &'static str {
        "quantum-ensemble"
    }

    fn summary(&self) -> &'static str {
        "encounter protocol over randomly matched pools"
    }

    fn run(&self, cfg: &RunConfig) -> Result<ExperimentOutput, CliError> {
        let protocol = protocol_spec(
            cfg,
            ProtocolMode::Ensemble {
                pool_size: cfg.pool_size,
                seed: cfg.seed,
            },
        )?;
        let cache = PropagatorCache::new();
        match ratchet::run_ensemble(&protocol, &cache) {
            Ok(records) => quantum_output(cfg, records, None),
            Err(e @ CoreError::TruncationOverflow { .. }) => {
                quantum_output(cfg, Vec::new(), Some(CliError::Core(e)))
            }
            Err(e) => Err(e.into()),
        }
    }
}

/// Short-time expansion of the per-encounter energy gain, validated
/// against exact evolution.
struct Shorttime;

const T_GRID: [f64; 6] = [1e-3, 2e-3, 3e-3, 5e-3, 7e-3, 1e-2];

impl Experiment for Shorttime {
    fn name(&self) -> &'static str {
        "shorttime"
    }

    fn summary(&self) -> &'static str {
        "quadratic short-time law of the energy gain vs exact evolution"
    }

    fn run(&self, cfg: &RunConfig) -> Result<ExperimentOutput, CliError> {
        let params = model_params(cfg);
        params.validate()?;
        let gamma = bogoliubov::position_coupling(&params);
        let factors = BipartiteFactors::coupled_oscillators(
            cfg.omega_a,
            cfg.omega_b,
            gamma,
            DensityMatrix::fock_state(Space::A, cfg.initial_n_a, cfg.levels_a)?,
            DensityMatrix::fock_state(Space::B, cfg.initial_n_b, cfg.levels_b)?,
        )?;
        let rows = shorttime::series_vs_direct(&factors, &T_GRID)?;
        let c2 = shorttime::delta_h_series(&factors)?;
        let c2_fitted = shorttime::fitted_quadratic_coefficient(&factors, &T_GRID)?;
        let series = Table {
            name: "series.csv",
            header: "t,direct,quadratic,ratio",
            rows: rows
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{}",
                        fmt_f64(r.t),
                        fmt_f64(r.direct),
                        fmt_f64(r.quadratic),
                        fmt_f64(r.ratio)
                    )
                })
                .collect(),
        };
        let fits = Table {
            name: "series_fit.csv",
            header: "name,value",
            rows: vec![
                format!("c2_series,{}", fmt_f64(c2)),
                format!("c2_fitted,{}", fmt_f64(c2_fitted)),
                format!(
                    "c2_relative_error,{}",
                    fmt_f64((c2_fitted - c2).abs() / c2.abs().max(f64::MIN_POSITIVE))
                ),
            ],
        };
        Ok(ExperimentOutput::complete(
            vec![series, fits],
            vec![("position_coupling".into(), MetaValue::Float(gamma))],
        ))
    }
}

/// Analytic diagonalization cross-checked against the truncated numerics.
struct BogoliubovValidate;

impl Experiment for BogoliubovValidate {
    fn name(&self) -> &'static str {
        "bogoliubov-validate"
    }

    fn summary(&self) -> &'static str {
        "normal-mode diagonalization vs truncated spectrum and evolution"
    }

    fn run(&self, cfg: &RunConfig) -> Result<ExperimentOutput, CliError> {
        if cfg.coupling != CouplingKind::Sb {
            return Err(CliError::Validation(
                "bogoliubov-validate applies to the sb coupling".into(),
            ));
        }
        let params = model_params(cfg);
        let modes = bogoliubov::sb_normal_modes(&params)?;
        let report = bogoliubov::validate_diagonalization(&modes, &params, cfg.levels_a)?;
        let coeffs = bogoliubov::heisenberg_coeffs(&modes, cfg.contact_time);
        let (alpha_defect, beta_defect) = coeffs.commutator_defect();
        let (n_a_analytic, n_b_analytic) =
            bogoliubov::number_via_coeffs(cfg.initial_n_a, cfg.initial_n_b, &coeffs);

        // Exact single contact in the truncated space for comparison.
        let spec = SpaceSpec::new(cfg.levels_a, cfg.levels_b)?;
        let rho0 = DensityMatrix::tensor_state(
            &DensityMatrix::fock_state(Space::A, cfg.initial_n_a, cfg.levels_a)?,
            &DensityMatrix::fock_state(Space::B, cfg.initial_n_b, cfg.levels_b)?,
        )?;
        let h = dynamics::build_hamiltonian(&params, &spec)?;
        let u = dynamics::propagator(&h, cfg.contact_time)?;
        let rho_t = dynamics::evolve(&rho0, &u)?;
        let n_a_numeric = rho_t
            .partial_trace(Keep::A, &spec)?
            .expectation(&ratchet_core::fock::Operator::number(Space::A, cfg.levels_a)?)?
            .re;
        let n_b_numeric = rho_t
            .partial_trace(Keep::B, &spec)?
            .expectation(&ratchet_core::fock::Operator::number(Space::B, cfg.levels_b)?)?
            .re;

        let audit = bogoliubov::support_audit(
            &params,
            &spec,
            cfg.initial_n_a,
            cfg.initial_n_b,
            cfg.contact_time,
        )?;

        let columns: [(&str, f64); 18] = [
            ("theta", modes.theta),
            ("omega_mode_a", modes.omega_mode_a),
            ("omega_mode_b", modes.omega_mode_b),
            ("chi", modes.chi),
            ("phi", modes.phi),
            ("phi_prime", modes.phi_prime),
            ("chi_prime", modes.chi_prime),
            ("cross_term_residual", report.cross_term_residual),
            ("gap_mismatch", report.gap_mismatch),
            ("ground_energy_error", report.ground_energy_error),
            ("alpha_defect", alpha_defect),
            ("beta_defect", beta_defect),
            ("n_a_analytic", n_a_analytic),
            ("n_a_numeric", n_a_numeric),
            ("n_b_analytic", n_b_analytic),
            ("n_b_numeric", n_b_numeric),
            ("support_excess_a", audit.mass_a),
            ("support_excess_b", audit.mass_b),
        ];
        let table = Table {
            name: "bogoliubov.csv",
            header: "theta,omega_mode_a,omega_mode_b,chi,phi,phi_prime,chi_prime,\
                     cross_term_residual,gap_mismatch,ground_energy_error,\
                     alpha_defect,beta_defect,n_a_analytic,n_a_numeric,\
                     n_b_analytic,n_b_numeric,support_excess_a,support_excess_b",
            rows: vec![columns
                .iter()
                .map(|(_, v)| fmt_f64(*v))
                .collect::<Vec<_>>()
                .join(",")],
        };
        let results = columns
            .iter()
            .map(|(k, v)| ((*k).to_string(), MetaValue::Float(*v)))
            .collect();
        Ok(ExperimentOutput::complete(vec![table], results))
    }
}

fn classical_tables(
    ensemble: &[TrajectoryStats],
    cfg: &RunConfig,
) -> Result<(Vec<Table>, Vec<(String, MetaValue)>), CliError> {
    let diag = classical::lognormal_diagnostics(ensemble)?;
    let len = diag.mean_log_energy.len();
    let main = Table {
        name: "classical.csv",
        header: "toggle,mean_log_e,var_log_e,mean_e,ratio",
        rows: (0..len)
            .map(|k| {
                format!(
                    "{k},{},{},{},{}",
                    fmt_f64(diag.mean_log_energy[k]),
                    fmt_f64(diag.var_log_energy[k]),
                    fmt_f64(diag.mean_energy[k]),
                    fmt_f64(diag.ratio[k])
                )
            })
            .collect(),
    };
    let xs: Vec<f64> = (0..len).map(|k| k as f64).collect();
    let skip = cfg.fit_skip.min(len.saturating_sub(2));
    let fit_from = |ys: &[f64]| fit::line_fit(&xs[skip..], &ys[skip..]);
    let var_fit = fit_from(&diag.var_log_energy);
    let mean_log_fit = fit_from(&diag.mean_log_energy);
    let log_mean: Vec<f64> = diag.mean_energy.iter().map(|e| e.ln()).collect();
    let log_mean_fit = fit_from(&log_mean);
    let fits = Table {
        name: "fits.csv",
        header: "name,slope,intercept,r_squared",
        rows: vec![
            fit_row("var_log_e", &var_fit),
            fit_row("mean_log_e", &mean_log_fit),
            fit_row("log_mean_e", &log_mean_fit),
        ],
    };
    // D per toggle; the continuous-time D divides by the mean hold.
    let results = vec![
        (
            "diffusion_per_toggle".into(),
            MetaValue::Float(var_fit.slope / 2.0),
        ),
        (
            "log_energy_drift_per_toggle".into(),
            MetaValue::Float(mean_log_fit.slope),
        ),
    ];
    Ok((vec![main, fits], results))
}

/// Classical pair with the bilinear coupling toggled at random times.
struct ClassicalToggle;

impl Experiment for ClassicalToggle {
    fn name(&self) -> &'static str {
        "classical-toggle"
    }

    fn summary(&self) -> &'static str {
        "randomly toggled classical coupling driving a log-energy walk"
    }

    fn run(&self, cfg: &RunConfig) -> Result<ExperimentOutput, CliError> {
        let params = ClassicalParams {
            omega_a: cfg.omega_a,
            omega_b: cfg.omega_b,
            gamma: cfg.gamma,
            mean_hold: cfg.mean_hold,
            hold_law: cfg.hold_law_core(),
            seed: cfg.seed,
        };
        params.validate()?;
        let ensemble = classical::run_toggle_ensemble(
            &params,
            cfg.n_toggles,
            &ClassicalState::default(),
            cfg.n_trajectories,
        )?;
        let (tables, results) = classical_tables(&ensemble, cfg)?;
        Ok(ExperimentOutput::complete(tables, results))
    }
}

/// Single classical oscillator hopping between two frequencies.
struct ClassicalFreq;

impl Experiment for ClassicalFreq {
    fn name(&self) -> &'static str {
        "classical-freq"
    }

    fn summary(&self) -> &'static str {
        "single oscillator switching between two frequencies"
    }

    fn run(&self, cfg: &RunConfig) -> Result<ExperimentOutput, CliError> {
        let ensemble = classical::run_freq_switch_ensemble(
            cfg.omega_a,
            cfg.omega_prime,
            cfg.n_toggles,
            cfg.mean_hold,
            cfg.hold_law_core(),
            cfg.seed,
            (1.0, 0.0),
            cfg.n_trajectories,
        )?;
        let (tables, results) = classical_tables(&ensemble, cfg)?;
        Ok(ExperimentOutput::complete(tables, results))
    }
}
