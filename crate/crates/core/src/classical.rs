//! Classical analogue: two oscillators whose bilinear coupling γ·x_a·x_b
//! is toggled at random times.
//!
//! Each segment is evolved exactly through the normal-mode decomposition
//! of the active quadratic Hamiltonian, so the map is symplectic by
//! construction and the active energy is conserved within round-off. The
//! recorded energy is the UNCOUPLED one at toggle instants (the coupled
//! and uncoupled energies differ by γx_ax_b); its logarithm performs a
//! random walk, which makes the mean energy grow exponentially.

use nalgebra::Matrix4;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::rng::derive_rng;

/// Distribution of the hold time between toggles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HoldLaw {
    /// Exponentially distributed with mean `mean_hold`.
    Exponential,
    /// Uniform on [lo, hi].
    UniformRange { lo: f64, hi: f64 },
    /// Every hold exactly `mean_hold`; reproduces the non-random caveat
    /// where the energy can oscillate instead of growing.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalParams {
    pub omega_a: f64,
    pub omega_b: f64,
    /// x_a·x_b coupling strength while the coupling is on.
    pub gamma: f64,
    pub mean_hold: f64,
    pub hold_law: HoldLaw,
    pub seed: u64,
}

impl ClassicalParams {
    pub fn validate(&self) -> Result<()> {
        if self.omega_a <= 0.0 || self.omega_b <= 0.0 {
            return Err(CoreError::InvalidParameter(
                "classical frequencies must be positive".into(),
            ));
        }
        let det = (self.omega_a * self.omega_b).powi(2) - self.gamma.powi(2);
        if det <= 0.0 {
            return Err(CoreError::UnstableCoupling { omega_sq: -det });
        }
        if self.mean_hold <= 0.0 {
            return Err(CoreError::InvalidParameter(
                "mean_hold must be positive".into(),
            ));
        }
        if let HoldLaw::UniformRange { lo, hi } = self.hold_law {
            if lo < 0.0 || hi < lo {
                return Err(CoreError::InvalidParameter(format!(
                    "invalid uniform hold range [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Phase-space point of the pair (unit masses).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    pub x_a: f64,
    pub p_a: f64,
    pub x_b: f64,
    pub p_b: f64,
}

impl ClassicalState {
    /// Uncoupled energy Σ p²/2 + ω²x²/2.
    pub fn uncoupled_energy(&self, params: &ClassicalParams) -> f64 {
        0.5 * (self.p_a * self.p_a
            + (params.omega_a * self.x_a).powi(2)
            + self.p_b * self.p_b
            + (params.omega_b * self.x_b).powi(2))
    }

    pub fn coupled_energy(&self, params: &ClassicalParams) -> f64 {
        self.uncoupled_energy(params) + params.gamma * self.x_a * self.x_b
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            x_a: self.x_a * factor,
            p_a: self.p_a * factor,
            x_b: self.x_b * factor,
            p_b: self.p_b * factor,
        }
    }
}

impl Default for ClassicalState {
    fn default() -> Self {
        // Cosmetic choice; the dynamics is scale-invariant.
        Self {
            x_a: 1.0,
            p_a: 0.0,
            x_b: 1.0,
            p_b: 0.0,
        }
    }
}

/// 2×2 phase-space rotation of one mode: exact evolution of (x, p) under
/// frequency ω for the given duration.
fn mode_rotation(omega: f64, duration: f64) -> [[f64; 2]; 2] {
    let (s, c) = (omega * duration).sin_cos();
    [[c, s / omega], [-omega * s, c]]
}

/// Exact linear map of one segment on (x_a, p_a, x_b, p_b).
pub fn segment_map(params: &ClassicalParams, coupled: bool, duration: f64) -> Result<Matrix4<f64>> {
    params.validate()?;
    let (wa2, wb2) = (params.omega_a.powi(2), params.omega_b.powi(2));
    if !coupled || params.gamma == 0.0 {
        let ra = mode_rotation(params.omega_a, duration);
        let rb = mode_rotation(params.omega_b, duration);
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0)
            .copy_from(&nalgebra::Matrix2::from_row_slice(&[
                ra[0][0], ra[0][1], ra[1][0], ra[1][1],
            ]));
        m.fixed_view_mut::<2, 2>(2, 2)
            .copy_from(&nalgebra::Matrix2::from_row_slice(&[
                rb[0][0], rb[0][1], rb[1][0], rb[1][1],
            ]));
        return Ok(m);
    }
    // Normal modes of the stiffness matrix [[ω_a², γ], [γ, ω_b²]].
    let theta = if wa2 == wb2 {
        if params.gamma >= 0.0 {
            std::f64::consts::FRAC_PI_4
        } else {
            -std::f64::consts::FRAC_PI_4
        }
    } else {
        0.5 * (2.0 * params.gamma / (wb2 - wa2)).atan()
    };
    let (c2t, s2t) = ((2.0 * theta).cos(), (2.0 * theta).sin());
    let mode_a_sq = 0.5 * (wa2 + wb2) + 0.5 * (wa2 - wb2) * c2t - params.gamma * s2t;
    let mode_b_sq = 0.5 * (wa2 + wb2) + 0.5 * (wb2 - wa2) * c2t + params.gamma * s2t;
    for omega_sq in [mode_a_sq, mode_b_sq] {
        if omega_sq <= 0.0 {
            return Err(CoreError::UnstableCoupling { omega_sq });
        }
    }
    let (c, s) = (theta.cos(), theta.sin());
    // (x_a, p_a, x_b, p_b) → (X_A, P_A, X_B, P_B); orthogonal.
    #[rustfmt::skip]
    let rotate = Matrix4::new(
        c, 0.0, -s, 0.0,
        0.0, c, 0.0, -s,
        s, 0.0, c, 0.0,
        0.0, s, 0.0, c,
    );
    let ra = mode_rotation(mode_a_sq.sqrt(), duration);
    let rb = mode_rotation(mode_b_sq.sqrt(), duration);
    #[rustfmt::skip]
    let evolve = Matrix4::new(
        ra[0][0], ra[0][1], 0.0, 0.0,
        ra[1][0], ra[1][1], 0.0, 0.0,
        0.0, 0.0, rb[0][0], rb[0][1],
        0.0, 0.0, rb[1][0], rb[1][1],
    );
    Ok(rotate.transpose() * evolve * rotate)
}

/// Evolve a phase-space point exactly under the active Hamiltonian.
pub fn evolve_segment(
    state: &ClassicalState,
    params: &ClassicalParams,
    coupled: bool,
    duration: f64,
) -> Result<ClassicalState> {
    let m = segment_map(params, coupled, duration)?;
    let v = m * nalgebra::Vector4::new(state.x_a, state.p_a, state.x_b, state.p_b);
    Ok(ClassicalState {
        x_a: v[0],
        p_a: v[1],
        x_b: v[2],
        p_b: v[3],
    })
}

/// Energy series of one toggled trajectory, sampled at toggle instants.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    /// Uncoupled energy at the start and after each segment.
    pub energies: Vec<f64>,
    pub log_energies: Vec<f64>,
    pub toggle_count: usize,
}

fn draw_hold(params: &ClassicalParams, rng: &mut impl Rng) -> f64 {
    match params.hold_law {
        HoldLaw::Exponential => {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            -params.mean_hold * u.ln()
        }
        HoldLaw::UniformRange { lo, hi } => {
            if lo == hi {
                lo
            } else {
                rng.gen_range(lo..hi)
            }
        }
        HoldLaw::Fixed => params.mean_hold,
    }
}

fn toggle_trajectory_with_stream(
    params: &ClassicalParams,
    n_toggles: usize,
    initial: &ClassicalState,
    stream: u64,
) -> Result<TrajectoryStats> {
    params.validate()?;
    let mut rng = derive_rng(params.seed, stream);
    let mut state = *initial;
    let mut energies = Vec::with_capacity(n_toggles + 1);
    energies.push(state.uncoupled_energy(params));
    // Coupled segments first, so the very first toggle already jumps the
    // uncoupled energy.
    for k in 0..n_toggles {
        let hold = draw_hold(params, &mut rng);
        state = evolve_segment(&state, params, k % 2 == 0, hold)?;
        energies.push(state.uncoupled_energy(params));
    }
    let log_energies = energies.iter().map(|e| e.ln()).collect();
    Ok(TrajectoryStats {
        energies,
        log_energies,
        toggle_count: n_toggles,
    })
}

/// Alternate coupled/uncoupled segments with random holds; reproducible
/// from `params.seed`.
pub fn run_toggle_trajectory(
    params: &ClassicalParams,
    n_toggles: usize,
    initial: &ClassicalState,
) -> Result<TrajectoryStats> {
    toggle_trajectory_with_stream(params, n_toggles, initial, 0)
}

/// Independent trajectories with per-trajectory streams derived from the
/// master seed; runs in parallel, aggregated in trajectory order.
pub fn run_toggle_ensemble(
    params: &ClassicalParams,
    n_toggles: usize,
    initial: &ClassicalState,
    n_trajectories: usize,
) -> Result<Vec<TrajectoryStats>> {
    (0..n_trajectories)
        .into_par_iter()
        .map(|i| toggle_trajectory_with_stream(params, n_toggles, initial, i as u64))
        .collect()
}

/// Single oscillator jumping between two frequencies at toggle times.
///
/// The recorded energy uses the first frequency ω as the fixed reference
/// ellipse, so ω = ω′ gives a constant series.
pub fn run_freq_switch_trajectory(
    omega: f64,
    omega_prime: f64,
    n_switches: usize,
    mean_hold: f64,
    hold_law: HoldLaw,
    seed: u64,
    initial: (f64, f64),
) -> Result<TrajectoryStats> {
    if omega <= 0.0 || omega_prime <= 0.0 {
        return Err(CoreError::InvalidParameter(
            "both frequencies must be positive".into(),
        ));
    }
    let hold_params = ClassicalParams {
        omega_a: omega,
        omega_b: omega_prime,
        gamma: 0.0,
        mean_hold,
        hold_law,
        seed,
    };
    hold_params.validate()?;
    let mut rng = derive_rng(seed, 0);
    let (mut x, mut p) = initial;
    let energy = |x: f64, p: f64| 0.5 * (p * p + (omega * x).powi(2));
    let mut energies = Vec::with_capacity(n_switches + 1);
    energies.push(energy(x, p));
    for k in 0..n_switches {
        let active = if k % 2 == 0 { omega_prime } else { omega };
        let hold = draw_hold(&hold_params, &mut rng);
        let r = mode_rotation(active, hold);
        let (nx, np) = (r[0][0] * x + r[0][1] * p, r[1][0] * x + r[1][1] * p);
        x = nx;
        p = np;
        energies.push(energy(x, p));
    }
    let log_energies = energies.iter().map(|e| e.ln()).collect();
    Ok(TrajectoryStats {
        energies,
        log_energies,
        toggle_count: n_switches,
    })
}

/// Ensemble of freq-switch trajectories with derived streams.
pub fn run_freq_switch_ensemble(
    omega: f64,
    omega_prime: f64,
    n_switches: usize,
    mean_hold: f64,
    hold_law: HoldLaw,
    seed: u64,
    initial: (f64, f64),
    n_trajectories: usize,
) -> Result<Vec<TrajectoryStats>> {
    (0..n_trajectories)
        .into_par_iter()
        .map(|i| {
            run_freq_switch_trajectory(
                omega,
                omega_prime,
                n_switches,
                mean_hold,
                hold_law,
                derive_rng(seed, i as u64).gen(),
                initial,
            )
        })
        .collect()
}

/// Per-toggle aggregates of an ensemble under the lognormal picture.
#[derive(Debug, Clone)]
pub struct LognormalDiagnostics {
    pub mean_log_energy: Vec<f64>,
    pub var_log_energy: Vec<f64>,
    pub mean_energy: Vec<f64>,
    /// ⟨E⟩ / exp⟨log E⟩ per toggle; tracks exp(var/2) under the lognormal
    /// model.
    pub ratio: Vec<f64>,
}

pub fn lognormal_diagnostics(ensemble: &[TrajectoryStats]) -> Result<LognormalDiagnostics> {
    if ensemble.is_empty() {
        return Err(CoreError::EmptyEnsemble);
    }
    let len = ensemble[0].energies.len();
    if ensemble.iter().any(|t| t.energies.len() != len) {
        return Err(CoreError::InvalidParameter(
            "trajectories have differing lengths".into(),
        ));
    }
    let n = ensemble.len() as f64;
    let mut mean_log = vec![0.0; len];
    let mut var_log = vec![0.0; len];
    let mut mean_e = vec![0.0; len];
    for k in 0..len {
        let mut sum_l = 0.0;
        let mut sum_l2 = 0.0;
        let mut sum_e = 0.0;
        for t in ensemble {
            let l = t.log_energies[k];
            sum_l += l;
            sum_l2 += l * l;
            sum_e += t.energies[k];
        }
        mean_log[k] = sum_l / n;
        var_log[k] = (sum_l2 / n - mean_log[k] * mean_log[k]).max(0.0);
        mean_e[k] = sum_e / n;
    }
    let ratio = mean_e
        .iter()
        .zip(&mean_log)
        .map(|(e, l)| e / l.exp())
        .collect();
    Ok(LognormalDiagnostics {
        mean_log_energy: mean_log,
        var_log_energy: var_log,
        mean_energy: mean_e,
        ratio,
    })
}
