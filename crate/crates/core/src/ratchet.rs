//! The encounter protocol: contact, exact evolution, marginalization, and
//! re-producting — iterated in a single chain or over a randomly paired
//! ensemble.
//!
//! The energy bookkeeping is recorded per encounter: the free energy is
//! untouched by marginalization, so every jump in ⟨H⟩ shows up exactly at
//! the re-producting step, in the interaction term.

use std::ops::Range;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use num_complex::Complex64;

use crate::dynamics::{
    self, ModelParams, Propagator, PropagatorCache, TruncationGuard,
};
use crate::error::{CoreError, Result};
use crate::fit::{line_fit, LineFit};
use crate::fock::{DensityMatrix, Keep, Operator, Space, SpaceSpec, Tolerances};
use crate::rng::derive_rng;

/// Initial state of one oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Fock(usize),
    Coherent(Complex64),
}

impl InitialState {
    pub fn build(
        &self,
        space: Space,
        levels: usize,
        coherent_tail_threshold: f64,
    ) -> Result<DensityMatrix> {
        match *self {
            InitialState::Fock(n) => DensityMatrix::fock_state(space, n, levels),
            InitialState::Coherent(z) => {
                DensityMatrix::coherent_state(space, z, levels, coherent_tail_threshold)
            }
        }
    }
}

/// Chain mode reuses one pair's marginals; ensemble mode maintains pools
/// and draws a uniform random matching each round (self-repeats allowed).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolMode {
    Chain,
    Ensemble { pool_size: usize, seed: u64 },
}

/// Full configuration of a protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolSpec {
    pub params: ModelParams,
    pub spec: SpaceSpec,
    pub contact_time: f64,
    pub n_encounters: usize,
    pub mode: ProtocolMode,
    pub initial_a: InitialState,
    pub initial_b: InitialState,
    pub guard: TruncationGuard,
    pub coherent_tail_threshold: f64,
    pub tolerances: Tolerances,
}

impl ProtocolSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_encounters < 1 {
            return Err(CoreError::InvalidParameter(
                "n_encounters must be at least 1".into(),
            ));
        }
        if let ProtocolMode::Ensemble { pool_size, .. } = self.mode {
            if pool_size < 1 {
                return Err(CoreError::InvalidParameter(
                    "pool_size must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Observables of one encounter (pool-averaged in ensemble mode).
#[derive(Debug, Clone, PartialEq)]
pub struct EncounterRecord {
    pub index: usize,
    pub mean_n_a: f64,
    pub mean_n_b: f64,
    /// ⟨ω_a a†a + ω_b b†b⟩ on the post-contact state.
    pub free_energy: f64,
    /// ⟨V⟩ on the product state at encounter start.
    pub interaction_energy: f64,
    pub purity_a: f64,
    pub purity_b: f64,
    pub dist_a: Vec<f64>,
    pub dist_b: Vec<f64>,
    /// Larger of the two top-level populations after the contact.
    pub tail_mass: f64,
    pub truncation_warning: bool,
    /// Tr[Δρ·H₀] with Δρ = ρ_a(t)⊗ρ_b(t) − ρ(t); zero up to round-off.
    pub delta_h0: f64,
    /// Tr[Δρ·H] — the energy injected by the marginalization.
    pub delta_h: f64,
    /// Tr[Δρ·V]; equals delta_h identically.
    pub delta_v: f64,
}

/// Precomputed operators and the cached contact propagator for one
/// protocol configuration.
pub struct EncounterEngine {
    params: ModelParams,
    spec: SpaceSpec,
    u: Arc<Propagator>,
    h0: Operator,
    v: Operator,
    h: Operator,
    number_a: Operator,
    number_b: Operator,
    guard: TruncationGuard,
    tolerances: Tolerances,
}

impl EncounterEngine {
    pub fn new(protocol: &ProtocolSpec, cache: &PropagatorCache) -> Result<Self> {
        protocol.validate()?;
        let params = protocol.params;
        let spec = protocol.spec;
        let u = cache.get_or_build(&params, &spec, protocol.contact_time)?;
        let h0 = dynamics::free_hamiltonian(&params, &spec)?;
        let v = dynamics::interaction(&params, &spec)?;
        let h = h0.add(&v)?;
        Ok(Self {
            params,
            spec,
            u,
            h0,
            v,
            h,
            number_a: Operator::number(Space::A, spec.levels_a())?,
            number_b: Operator::number(Space::B, spec.levels_b())?,
            guard: protocol.guard,
            tolerances: protocol.tolerances,
        })
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// One contact: form ρ_a⊗ρ_b, evolve exactly, marginalize, measure.
    pub fn run_encounter(
        &self,
        rho_a: &DensityMatrix,
        rho_b: &DensityMatrix,
        index: usize,
    ) -> Result<(DensityMatrix, DensityMatrix, EncounterRecord)> {
        let rho0 = DensityMatrix::tensor_state(rho_a, rho_b)?;
        let interaction_energy = rho0.expectation(&self.v)?.re;
        let rho_t = dynamics::evolve(&rho0, &self.u)?;

        let marg_a = rho_t.partial_trace(Keep::A, &self.spec)?.symmetrized();
        let marg_b = rho_t.partial_trace(Keep::B, &self.spec)?.symmetrized();
        marg_a.assert_positive(&self.tolerances)?;
        marg_b.assert_positive(&self.tolerances)?;

        let mean_n_a = marg_a.expectation(&self.number_a)?.re;
        let mean_n_b = marg_b.expectation(&self.number_b)?.re;
        let dist_a = marg_a.number_distribution()?;
        let dist_b = marg_b.number_distribution()?;
        let tail_mass = dist_a
            .last()
            .copied()
            .unwrap_or(0.0)
            .max(dist_b.last().copied().unwrap_or(0.0));
        if tail_mass > self.guard.hard {
            return Err(CoreError::TruncationOverflow {
                encounter: index,
                tail_mass,
                threshold: self.guard.hard,
            });
        }

        // Invariance bookkeeping on Δρ = ρ_a(t)⊗ρ_b(t) − ρ(t).
        let product = DensityMatrix::tensor_state(&marg_a, &marg_b)?;
        let delta_h0 = product.expectation(&self.h0)?.re - rho_t.expectation(&self.h0)?.re;
        let delta_v = product.expectation(&self.v)?.re - rho_t.expectation(&self.v)?.re;
        let delta_h = product.expectation(&self.h)?.re - rho_t.expectation(&self.h)?.re;

        let record = EncounterRecord {
            index,
            mean_n_a,
            mean_n_b,
            free_energy: self.params.omega_a * mean_n_a + self.params.omega_b * mean_n_b,
            interaction_energy,
            purity_a: marg_a.purity(),
            purity_b: marg_b.purity(),
            dist_a,
            dist_b,
            tail_mass,
            truncation_warning: tail_mass > self.guard.warn,
            delta_h0,
            delta_h,
            delta_v,
        };
        Ok((marg_a, marg_b, record))
    }
}

fn initial_pair(protocol: &ProtocolSpec) -> Result<(DensityMatrix, DensityMatrix)> {
    let rho_a = protocol.initial_a.build(
        Space::A,
        protocol.spec.levels_a(),
        protocol.coherent_tail_threshold,
    )?;
    let rho_b = protocol.initial_b.build(
        Space::B,
        protocol.spec.levels_b(),
        protocol.coherent_tail_threshold,
    )?;
    Ok((rho_a, rho_b))
}

/// Deterministic single-chain protocol: both marginals of one encounter
/// feed the next.
pub fn run_chain(protocol: &ProtocolSpec, cache: &PropagatorCache) -> Result<Vec<EncounterRecord>> {
    let engine = EncounterEngine::new(protocol, cache)?;
    let (mut rho_a, mut rho_b) = initial_pair(protocol)?;
    let mut records = Vec::with_capacity(protocol.n_encounters);
    for index in 0..protocol.n_encounters {
        let (next_a, next_b, record) = engine.run_encounter(&rho_a, &rho_b, index)?;
        rho_a = next_a;
        rho_b = next_b;
        records.push(record);
    }
    Ok(records)
}

/// Pool-based protocol: each round pairs the A-pool with a uniformly
/// random permutation of the B-pool and records pool-averaged observables.
/// Fully reproducible: the matching of round r is a pure function of
/// (seed, r), and pairs are merged in pair-index order.
pub fn run_ensemble(
    protocol: &ProtocolSpec,
    cache: &PropagatorCache,
) -> Result<Vec<EncounterRecord>> {
    let ProtocolMode::Ensemble { pool_size, seed } = protocol.mode else {
        return Err(CoreError::InvalidParameter(
            "run_ensemble requires Ensemble mode".into(),
        ));
    };
    let engine = EncounterEngine::new(protocol, cache)?;
    let (rho_a0, rho_b0) = initial_pair(protocol)?;
    let mut pool_a = vec![rho_a0; pool_size];
    let mut pool_b = vec![rho_b0; pool_size];

    let mut records = Vec::with_capacity(protocol.n_encounters);
    for round in 0..protocol.n_encounters {
        let mut matching: Vec<usize> = (0..pool_size).collect();
        matching.shuffle(&mut derive_rng(seed, round as u64));

        let outcomes: Vec<Result<(DensityMatrix, DensityMatrix, EncounterRecord)>> = pool_a
            .par_iter()
            .zip(matching.par_iter())
            .map(|(rho_a, &j)| engine.run_encounter(rho_a, &pool_b[j], round))
            .collect();

        let mut pair_records = Vec::with_capacity(pool_size);
        let mut next_b = pool_b.clone();
        for (i, outcome) in outcomes.into_iter().enumerate() {
            let (a, b, record) = outcome?;
            pool_a[i] = a;
            next_b[matching[i]] = b;
            pair_records.push(record);
        }
        pool_b = next_b;
        records.push(average_records(round, &pair_records));
    }
    Ok(records)
}

fn average_records(index: usize, records: &[EncounterRecord]) -> EncounterRecord {
    let n = records.len() as f64;
    let mean = |f: fn(&EncounterRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    let levels_a = records[0].dist_a.len();
    let levels_b = records[0].dist_b.len();
    let mut dist_a = vec![0.0; levels_a];
    let mut dist_b = vec![0.0; levels_b];
    for r in records {
        for (acc, v) in dist_a.iter_mut().zip(&r.dist_a) {
            *acc += v;
        }
        for (acc, v) in dist_b.iter_mut().zip(&r.dist_b) {
            *acc += v;
        }
    }
    for v in dist_a.iter_mut().chain(dist_b.iter_mut()) {
        *v /= n;
    }
    EncounterRecord {
        index,
        mean_n_a: mean(|r| r.mean_n_a),
        mean_n_b: mean(|r| r.mean_n_b),
        free_energy: mean(|r| r.free_energy),
        interaction_energy: mean(|r| r.interaction_energy),
        purity_a: mean(|r| r.purity_a),
        purity_b: mean(|r| r.purity_b),
        dist_a,
        dist_b,
        tail_mass: records.iter().map(|r| r.tail_mass).fold(0.0, f64::max),
        truncation_warning: records.iter().any(|r| r.truncation_warning),
        delta_h0: mean(|r| r.delta_h0),
        delta_h: mean(|r| r.delta_h),
        delta_v: mean(|r| r.delta_v),
    }
}

/// Least-squares line through (n, log P(n)) over `range`.
pub fn fit_exponential(dist: &[f64], range: Range<usize>) -> Result<LineFit> {
    if range.end > dist.len() || range.len() < 2 {
        return Err(CoreError::InvalidParameter(format!(
            "fit range {range:?} invalid for a distribution of {} levels",
            dist.len()
        )));
    }
    let mut xs = Vec::with_capacity(range.len());
    let mut ys = Vec::with_capacity(range.len());
    for n in range {
        if dist[n] <= 0.0 {
            return Err(CoreError::NonPositiveProbability {
                index: n,
                value: dist[n],
            });
        }
        xs.push(n as f64);
        ys.push(dist[n].ln());
    }
    Ok(line_fit(&xs, &ys))
}

/// Default exponential-fit window: drop n = 0..1 and the top 25% of
/// levels (the truncation-distorted tail).
pub fn default_fit_range(levels: usize) -> Range<usize> {
    2..(levels * 3) / 4
}

/// Least-squares line through (encounter index, value), discarding the
/// initial transient.
pub fn fit_linear_growth(series: &[f64], skip_transient: usize) -> Result<LineFit> {
    if series.len() < 5 {
        return Err(CoreError::TooFewRecords {
            required: 5,
            found: series.len(),
        });
    }
    let skip = skip_transient.min(series.len() - 2);
    let xs: Vec<f64> = (skip..series.len()).map(|i| i as f64).collect();
    let ys: Vec<f64> = series[skip..].to_vec();
    Ok(line_fit(&xs, &ys))
}
