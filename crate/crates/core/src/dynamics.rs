//! The two coupled-oscillator Hamiltonians and exact evolution over one
//! contact interval.
//!
//! The contact is modeled as a square pulse: the coupling g is constant
//! during the contact of length t and zero outside it.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::fock::{max_abs, DensityMatrix, Operator, Space, SpaceSpec};

/// Which bilinear coupling enters the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// g(a† + a)(b† + b); counter-rotating terms included, boson number not
    /// conserved.
    SpinBoson,
    /// g(a†b + b†a); conserves total boson number.
    JaynesCummings,
}

/// Model parameters in ħ = 1 units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub omega_a: f64,
    pub omega_b: f64,
    pub g: f64,
    pub coupling: Coupling,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.omega_a <= 0.0 || self.omega_b <= 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "frequencies must be positive: omega_a={}, omega_b={}",
                self.omega_a, self.omega_b
            )));
        }
        if !self.g.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "coupling must be finite, got {}",
                self.g
            )));
        }
        Ok(())
    }
}

/// H₀ = ω_a a†a ⊗ I + I ⊗ ω_b b†b (no zero-point term).
pub fn free_hamiltonian(params: &ModelParams, spec: &SpaceSpec) -> Result<Operator> {
    params.validate()?;
    let na = Operator::number(Space::A, spec.levels_a())?.embed(spec)?;
    let nb = Operator::number(Space::B, spec.levels_b())?.embed(spec)?;
    na.scale(Complex64::new(params.omega_a, 0.0))
        .add(&nb.scale(Complex64::new(params.omega_b, 0.0)))
}

/// The coupling term V on the composite space.
pub fn interaction(params: &ModelParams, spec: &SpaceSpec) -> Result<Operator> {
    params.validate()?;
    let a = Operator::annihilation(Space::A, spec.levels_a())?;
    let b = Operator::annihilation(Space::B, spec.levels_b())?;
    let g = Complex64::new(params.g, 0.0);
    match params.coupling {
        Coupling::SpinBoson => {
            let xa = a.add(&a.adjoint())?.embed(spec)?;
            let xb = b.add(&b.adjoint())?.embed(spec)?;
            Ok(xa.matmul(&xb)?.scale(g))
        }
        Coupling::JaynesCummings => {
            let adag_b = a.adjoint().embed(spec)?.matmul(&b.embed(spec)?)?;
            Ok(adag_b.add(&adag_b.adjoint())?.scale(g))
        }
    }
}

/// H = ω_a a†a + ω_b b†b + V.
pub fn build_hamiltonian(params: &ModelParams, spec: &SpaceSpec) -> Result<Operator> {
    free_hamiltonian(params, spec)?.add(&interaction(params, spec)?)
}

/// exp(−iHt) together with the contact duration it encodes.
#[derive(Debug, Clone)]
pub struct Propagator {
    matrix: DMatrix<Complex64>,
    t: f64,
}

impl Propagator {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// ‖U†U − I‖_max.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        let utu = crate::linalg::matmul(&self.matrix.adjoint(), &self.matrix);
        max_abs(&(utu - DMatrix::<Complex64>::identity(d, d)))
    }
}

/// U = exp(−iHt) via eigendecomposition of the Hermitian H.
pub fn propagator(h: &Operator, t: f64) -> Result<Propagator> {
    if !h.is_hermitian(1e-9) {
        return Err(CoreError::Eigendecomposition(
            "Hamiltonian is not Hermitian".into(),
        ));
    }
    let (values, vectors) = crate::linalg::hermitian_eigen(h.matrix())?;
    let d = h.dim();
    let mut phased = vectors.clone();
    for j in 0..d {
        let phase = Complex64::from_polar(1.0, -values[j] * t);
        for i in 0..d {
            phased[(i, j)] *= phase;
        }
    }
    let u = crate::linalg::matmul(&phased, &vectors.adjoint());
    let prop = Propagator { matrix: u, t };
    let defect = prop.unitarity_defect();
    if defect > 1e-9 {
        return Err(CoreError::Eigendecomposition(format!(
            "propagator unitarity defect {defect:.3e} exceeds 1e-9"
        )));
    }
    Ok(prop)
}

/// UρU†, re-Hermitized and trace-renormalized.
pub fn evolve(rho: &DensityMatrix, u: &Propagator) -> Result<DensityMatrix> {
    if rho.space() != Space::AB {
        return Err(CoreError::SpaceMismatch {
            expected: Space::AB,
            found: rho.space(),
        });
    }
    if rho.dim() != u.dim() {
        return Err(CoreError::DimensionMismatch {
            space: Space::AB,
            expected: u.dim(),
            found: rho.dim(),
        });
    }
    let evolved = crate::linalg::matmul(
        &crate::linalg::matmul(u.matrix(), rho.matrix()),
        &u.matrix().adjoint(),
    );
    let tr = evolved.trace();
    if (tr.re - 1.0).abs() > 1e-10 {
        return Err(CoreError::InvalidState(format!(
            "evolution drifted the trace to {tr}"
        )));
    }
    Ok(DensityMatrix::from_parts(Space::AB, evolved).symmetrized())
}

/// Truncation guard thresholds on the top Fock level population of either
/// oscillator. Energy grows without bound under the protocol, so runs must
/// detect cutoff saturation rather than produce silently wrong
/// distributions.
#[derive(Debug, Clone, Copy)]
pub struct TruncationGuard {
    pub warn: f64,
    pub hard: f64,
}

impl Default for TruncationGuard {
    fn default() -> Self {
        Self {
            warn: 1e-6,
            hard: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, Hash, PartialEq, Eq)]
struct CacheKey {
    omega_a: u64,
    omega_b: u64,
    g: u64,
    coupling_jc: bool,
    levels_a: usize,
    levels_b: usize,
    t: u64,
}

impl CacheKey {
    fn new(params: &ModelParams, spec: &SpaceSpec, t: f64) -> Self {
        Self {
            omega_a: params.omega_a.to_bits(),
            omega_b: params.omega_b.to_bits(),
            g: params.g.to_bits(),
            coupling_jc: params.coupling == Coupling::JaynesCummings,
            levels_a: spec.levels_a(),
            levels_b: spec.levels_b(),
            t: t.to_bits(),
        }
    }
}

/// Propagator cache keyed by (params, spec, t); all encounters of a run
/// reuse the same contact unitary. Concurrent reads are cheap; insertion
/// takes the write lock.
#[derive(Debug, Default)]
pub struct PropagatorCache {
    inner: RwLock<HashMap<CacheKey, Arc<Propagator>>>,
}

impl PropagatorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(
        &self,
        params: &ModelParams,
        spec: &SpaceSpec,
        t: f64,
    ) -> Result<Arc<Propagator>> {
        let key = CacheKey::new(params, spec, t);
        if let Some(hit) = self.inner.read().unwrap().get(&key) {
            return Ok(Arc::clone(hit));
        }
        let h = build_hamiltonian(params, spec)?;
        let u = Arc::new(propagator(&h, t)?);
        let mut map = self.inner.write().unwrap();
        Ok(Arc::clone(map.entry(key).or_insert(u)))
    }
}
