//! Short-time expansion of the energy gained by replacing an evolved
//! bipartite state with the product of its marginals.
//!
//! The factors need not be oscillators: H = H_A⊗I + I⊗H_B + V_A⊗V_B with
//! arbitrary Hermitian pieces. The leading behavior is
//! ΔH = c₂·t² + O(t³) with
//! c₂ = ½{ Var_A(V_A)·Tr([V_B,[H_B,V_B]]ρ_B) + Var_B(V_B)·Tr([V_A,[H_A,V_A]]ρ_A) }.

use crate::dynamics::{evolve, propagator};
use crate::error::{CoreError, Result};
use crate::fit::line_fit;
use crate::fock::{DensityMatrix, Keep, Operator, Space, SpaceSpec};

/// Hermitian factors and initial marginals of the abstract bipartite
/// problem.
#[derive(Debug, Clone)]
pub struct BipartiteFactors {
    pub h_a: Operator,
    pub v_a: Operator,
    pub h_b: Operator,
    pub v_b: Operator,
    pub rho_a: DensityMatrix,
    pub rho_b: DensityMatrix,
}

impl BipartiteFactors {
    pub fn validate(&self) -> Result<()> {
        for (op, space) in [
            (&self.h_a, Space::A),
            (&self.v_a, Space::A),
            (&self.h_b, Space::B),
            (&self.v_b, Space::B),
        ] {
            if op.space() != space {
                return Err(CoreError::SpaceMismatch {
                    expected: space,
                    found: op.space(),
                });
            }
            if !op.is_hermitian(1e-10) {
                return Err(CoreError::InvalidParameter(
                    "bipartite factors must be Hermitian".into(),
                ));
            }
        }
        if self.rho_a.dim() != self.h_a.dim() || self.rho_b.dim() != self.h_b.dim() {
            return Err(CoreError::InvalidParameter(
                "state and operator dimensions disagree".into(),
            ));
        }
        Ok(())
    }

    /// Two truncated oscillators with the bilinear position coupling
    /// γ·x_a·x_b, split as V_A = √|γ|·x_a, V_B = sign(γ)·√|γ|·x_b so a
    /// negative γ stays representable while V_A⊗V_B = γ x_a x_b.
    pub fn coupled_oscillators(
        omega_a: f64,
        omega_b: f64,
        gamma: f64,
        rho_a: DensityMatrix,
        rho_b: DensityMatrix,
    ) -> Result<Self> {
        let (da, db) = (rho_a.dim(), rho_b.dim());
        let root = gamma.abs().sqrt();
        let h_a = Operator::number(Space::A, da)?.scale(omega_a.into());
        let h_b = Operator::number(Space::B, db)?.scale(omega_b.into());
        let v_a = Operator::position(Space::A, da, omega_a)?.scale(root.into());
        let v_b =
            Operator::position(Space::B, db, omega_b)?.scale((gamma.signum() * root).into());
        Ok(Self {
            h_a,
            v_a,
            h_b,
            v_b,
            rho_a,
            rho_b,
        })
    }

    pub fn spec(&self) -> Result<SpaceSpec> {
        SpaceSpec::new(self.h_a.dim(), self.h_b.dim())
    }

    /// H = H_A⊗I + I⊗H_B + V_A⊗V_B.
    pub fn hamiltonian(&self) -> Result<Operator> {
        let spec = self.spec()?;
        self.free_hamiltonian()?
            .add(&self.v_a.embed(&spec)?.matmul(&self.v_b.embed(&spec)?)?)
    }

    pub fn free_hamiltonian(&self) -> Result<Operator> {
        let spec = self.spec()?;
        self.h_a.embed(&spec)?.add(&self.h_b.embed(&spec)?)
    }
}

/// Energy bookkeeping of one exact contact of duration t.
#[derive(Debug, Clone, Copy)]
pub struct DeltaH {
    /// Tr[Δρ(t)·H].
    pub total: f64,
    /// Tr[Δρ(t)·(V_A⊗V_B)]; equals `total` identically.
    pub interaction: f64,
    /// Tr[Δρ(t)·(H_A⊗I + I⊗H_B)]; zero up to round-off.
    pub free: f64,
}

/// Evolve ρ_A⊗ρ_B exactly for time t and measure the expectation change
/// caused by replacing the evolved state with the product of its
/// marginals.
pub fn delta_h_direct(factors: &BipartiteFactors, t: f64) -> Result<DeltaH> {
    factors.validate()?;
    let spec = factors.spec()?;
    let h = factors.hamiltonian()?;
    let h0 = factors.free_hamiltonian()?;
    let v = factors.v_a.embed(&spec)?.matmul(&factors.v_b.embed(&spec)?)?;

    let rho0 = DensityMatrix::tensor_state(&factors.rho_a, &factors.rho_b)?;
    let rho_t = evolve(&rho0, &propagator(&h, t)?)?;
    let marg_a = rho_t.partial_trace(Keep::A, &spec)?.symmetrized();
    let marg_b = rho_t.partial_trace(Keep::B, &spec)?.symmetrized();
    let product = DensityMatrix::tensor_state(&marg_a, &marg_b)?;

    let expect_delta = |op: &Operator| -> Result<f64> {
        Ok(product.expectation(op)?.re - rho_t.expectation(op)?.re)
    };
    let result = DeltaH {
        total: expect_delta(&h)?,
        interaction: expect_delta(&v)?,
        free: expect_delta(&h0)?,
    };
    if (result.total - result.interaction).abs() > 1e-10 * (1.0 + result.total.abs()) {
        return Err(CoreError::InvalidState(format!(
            "free-Hamiltonian invariance violated: total {:.3e} vs interaction {:.3e}",
            result.total, result.interaction
        )));
    }
    Ok(result)
}

/// [V, [H, V]].
pub fn double_commutator(v: &Operator, h: &Operator) -> Result<Operator> {
    v.commutator(&h.commutator(v)?)
}

fn variance(rho: &DensityMatrix, op: &Operator) -> Result<f64> {
    let mean = rho.expectation(op)?.re;
    let second = rho.expectation(&op.matmul(op)?)?.re;
    Ok(second - mean * mean)
}

/// The quadratic coefficient c₂ of ΔH = c₂·t² + O(t³).
pub fn delta_h_series(factors: &BipartiteFactors) -> Result<f64> {
    factors.validate()?;
    let var_a = variance(&factors.rho_a, &factors.v_a)?;
    let var_b = variance(&factors.rho_b, &factors.v_b)?;
    let comm_a = factors
        .rho_a
        .expectation(&double_commutator(&factors.v_a, &factors.h_a)?)?
        .re;
    let comm_b = factors
        .rho_b
        .expectation(&double_commutator(&factors.v_b, &factors.h_b)?)?
        .re;
    Ok(0.5 * (var_a * comm_b + var_b * comm_a))
}

/// One row of the validation table comparing exact ΔH(t) against c₂t².
#[derive(Debug, Clone, Copy)]
pub struct SeriesRow {
    pub t: f64,
    pub direct: f64,
    pub quadratic: f64,
    /// direct / quadratic; reported as 1 at t = 0 where both vanish.
    pub ratio: f64,
}

/// Tabulate ΔH(t) against the series prediction over `t_grid`.
pub fn series_vs_direct(factors: &BipartiteFactors, t_grid: &[f64]) -> Result<Vec<SeriesRow>> {
    let c2 = delta_h_series(factors)?;
    t_grid
        .iter()
        .map(|&t| {
            let direct = delta_h_direct(factors, t)?.total;
            let quadratic = c2 * t * t;
            let ratio = if quadratic != 0.0 {
                direct / quadratic
            } else {
                1.0
            };
            Ok(SeriesRow {
                t,
                direct,
                quadratic,
                ratio,
            })
        })
        .collect()
}

/// Fit the t² coefficient of the direct curve (through the origin) for
/// comparison against `delta_h_series`.
pub fn fitted_quadratic_coefficient(factors: &BipartiteFactors, t_grid: &[f64]) -> Result<f64> {
    // ΔH(t)/t² is flat to O(t); a line fit in t extrapolates it to t = 0.
    let mut xs = Vec::with_capacity(t_grid.len());
    let mut ys = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if t <= 0.0 {
            continue;
        }
        xs.push(t);
        ys.push(delta_h_direct(factors, t)?.total / (t * t));
    }
    if xs.len() < 2 {
        return Err(CoreError::TooFewRecords {
            required: 2,
            found: xs.len(),
        });
    }
    Ok(line_fit(&xs, &ys).intercept)
}
