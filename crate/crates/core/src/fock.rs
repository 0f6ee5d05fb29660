//! Truncated Fock-space linear algebra for one oscillator or a pair.
//!
//! Everything is dense: the composite space at the scale of interest is a
//! few hundred dimensions, so sparsity machinery would buy nothing.
//!
//! Index convention for the composite space: A-major, i.e. the basis state
//! |n_a, n_b⟩ sits at composite index `n_a * levels_b + n_b`. This matches
//! `kron(M_a, M_b)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Which Hilbert space a matrix lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    A,
    B,
    AB,
}

/// Retained levels per oscillator (cutoff + 1 each).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceSpec {
    levels_a: usize,
    levels_b: usize,
}

impl SpaceSpec {
    pub fn new(levels_a: usize, levels_b: usize) -> Result<Self> {
        if levels_a < 2 {
            return Err(CoreError::InvalidDimension(levels_a));
        }
        if levels_b < 2 {
            return Err(CoreError::InvalidDimension(levels_b));
        }
        Ok(Self { levels_a, levels_b })
    }

    pub fn levels_a(&self) -> usize {
        self.levels_a
    }

    pub fn levels_b(&self) -> usize {
        self.levels_b
    }

    pub fn levels(&self, space: Space) -> usize {
        match space {
            Space::A => self.levels_a,
            Space::B => self.levels_b,
            Space::AB => self.levels_a * self.levels_b,
        }
    }
}

/// Validation tolerances for density matrices.
///
/// `eigenvalue_floor` is an allowance for truncation and round-off; negative
/// eigenvalues are never clipped, only asserted above the floor so drift
/// stays diagnosable.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub eigenvalue_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            trace: 1e-10,
            eigenvalue_floor: -1e-8,
        }
    }
}

/// A dense operator tagged with the space it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: Space,
    matrix: DMatrix<Complex64>,
}

impl Operator {
    /// Wrap a square matrix; the caller asserts the space tag is right.
    pub fn new(space: Space, matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(CoreError::DimensionMismatch {
                space,
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Ok(Self { space, matrix })
    }

    /// Ladder operator a in the number basis: a[n-1, n] = √n.
    pub fn annihilation(space: Space, levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(CoreError::InvalidDimension(levels));
        }
        let mut m = DMatrix::zeros(levels, levels);
        for n in 1..levels {
            m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        Ok(Self { space, matrix: m })
    }

    pub fn creation(space: Space, levels: usize) -> Result<Self> {
        let a = Self::annihilation(space, levels)?;
        Ok(Self {
            space,
            matrix: a.matrix.adjoint(),
        })
    }

    /// Number operator a†a = diag(0, 1, 2, ...).
    pub fn number(space: Space, levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(CoreError::InvalidDimension(levels));
        }
        let m = DMatrix::from_fn(levels, levels, |i, j| {
            if i == j {
                Complex64::new(i as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Ok(Self { space, matrix: m })
    }

    /// Position operator x = (a + a†)/√(2ω) for an oscillator of frequency ω.
    pub fn position(space: Space, levels: usize, omega: f64) -> Result<Self> {
        if omega <= 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "oscillator frequency must be positive, got {omega}"
            )));
        }
        let a = Self::annihilation(space, levels)?;
        let m = (&a.matrix + a.matrix.adjoint()) / Complex64::new((2.0 * omega).sqrt(), 0.0);
        Ok(Self { space, matrix: m })
    }

    pub fn identity(space: Space, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(CoreError::InvalidDimension(dim));
        }
        Ok(Self {
            space,
            matrix: DMatrix::identity(dim, dim),
        })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Lift a single-factor operator to the composite space: op⊗I for A,
    /// I⊗op for B (A-major indexing).
    pub fn embed(&self, spec: &SpaceSpec) -> Result<Self> {
        let expected = spec.levels(self.space);
        if self.dim() != expected {
            return Err(CoreError::DimensionMismatch {
                space: self.space,
                expected,
                found: self.dim(),
            });
        }
        let matrix = match self.space {
            Space::A => {
                let eye = DMatrix::<Complex64>::identity(spec.levels_b, spec.levels_b);
                self.matrix.kronecker(&eye)
            }
            Space::B => {
                let eye = DMatrix::<Complex64>::identity(spec.levels_a, spec.levels_a);
                eye.kronecker(&self.matrix)
            }
            Space::AB => {
                return Err(CoreError::SpaceMismatch {
                    expected: Space::A,
                    found: Space::AB,
                })
            }
        };
        Ok(Self {
            space: Space::AB,
            matrix,
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            space: self.space,
            matrix: &self.matrix * factor,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        max_abs(&(&self.matrix - self.matrix.adjoint())) <= tol
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(CoreError::SpaceMismatch {
                expected: self.space,
                found: other.space,
            });
        }
        if self.dim() != other.dim() {
            return Err(CoreError::DimensionMismatch {
                space: self.space,
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

/// Which factor to keep in a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// A density matrix tagged with its space.
///
/// Construction checks Hermiticity and trace; the eigenvalue floor is
/// checked by [`DensityMatrix::assert_positive`] where the caller decides
/// the cost is justified (marginals every encounter, full states in tests).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: Space,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(space: Space, matrix: DMatrix<Complex64>, tol: &Tolerances) -> Result<Self> {
        if !matrix.is_square() {
            return Err(CoreError::DimensionMismatch {
                space,
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let herm_dev = max_abs(&(&matrix - matrix.adjoint()));
        if herm_dev > tol.hermiticity {
            return Err(CoreError::InvalidState(format!(
                "Hermiticity deviation {herm_dev:.3e} exceeds {:.1e}",
                tol.hermiticity
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(CoreError::InvalidState(format!(
                "trace {tr} deviates from 1 beyond {:.1e}",
                tol.trace
            )));
        }
        Ok(Self { space, matrix })
    }

    /// |n⟩⟨n| on `levels` retained levels.
    pub fn fock_state(space: Space, n: usize, levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(CoreError::InvalidDimension(levels));
        }
        if n >= levels {
            return Err(CoreError::FockOutOfRange { n, levels });
        }
        let mut m = DMatrix::zeros(levels, levels);
        m[(n, n)] = Complex64::new(1.0, 0.0);
        Ok(Self { space, matrix: m })
    }

    /// Normalized truncated coherent state |z⟩⟨z|.
    ///
    /// Errors out when the Poisson tail beyond the cutoff carries more mass
    /// than `tail_threshold`, since the truncated state would then be a poor
    /// stand-in for the real one.
    pub fn coherent_state(
        space: Space,
        z: Complex64,
        levels: usize,
        tail_threshold: f64,
    ) -> Result<Self> {
        if levels < 2 {
            return Err(CoreError::InvalidDimension(levels));
        }
        let n2 = z.norm_sqr();
        // Unnormalized amplitudes z^n/√(n!), accumulated stably.
        let mut amps = Vec::with_capacity(levels);
        let mut amp = Complex64::new(1.0, 0.0);
        amps.push(amp);
        for n in 1..levels {
            amp *= z / Complex64::new((n as f64).sqrt(), 0.0);
            amps.push(amp);
        }
        let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * (-n2).exp();
        let tail = (1.0 - kept).max(0.0);
        if tail > tail_threshold {
            return Err(CoreError::CoherentOverflow {
                amplitude: z.norm(),
                tail,
                threshold: tail_threshold,
            });
        }
        let norm = (amps.iter().map(|a| a.norm_sqr()).sum::<f64>()).sqrt();
        let psi: Vec<Complex64> = amps.iter().map(|a| a / norm).collect();
        let m = DMatrix::from_fn(levels, levels, |i, j| psi[i] * psi[j].conj());
        Ok(Self { space, matrix: m })
    }

    /// ρ_a ⊗ ρ_b under the A-major convention.
    pub fn tensor_state(rho_a: &Self, rho_b: &Self) -> Result<Self> {
        if rho_a.space != Space::A {
            return Err(CoreError::SpaceMismatch {
                expected: Space::A,
                found: rho_a.space,
            });
        }
        if rho_b.space != Space::B {
            return Err(CoreError::SpaceMismatch {
                expected: Space::B,
                found: rho_b.space,
            });
        }
        Ok(Self {
            space: Space::AB,
            matrix: rho_a.matrix.kronecker(&rho_b.matrix),
        })
    }

    /// Marginal on the kept factor; preserves trace and Hermiticity.
    pub fn partial_trace(&self, keep: Keep, spec: &SpaceSpec) -> Result<Self> {
        if self.space != Space::AB {
            return Err(CoreError::SpaceMismatch {
                expected: Space::AB,
                found: self.space,
            });
        }
        let (da, db) = (spec.levels_a, spec.levels_b);
        if self.dim() != da * db {
            return Err(CoreError::DimensionMismatch {
                space: Space::AB,
                expected: da * db,
                found: self.dim(),
            });
        }
        let (space, matrix) = match keep {
            Keep::A => {
                let mut m = DMatrix::zeros(da, da);
                for i in 0..da {
                    for j in 0..da {
                        let mut s = Complex64::new(0.0, 0.0);
                        for k in 0..db {
                            s += self.matrix[(i * db + k, j * db + k)];
                        }
                        m[(i, j)] = s;
                    }
                }
                (Space::A, m)
            }
            Keep::B => {
                let mut m = DMatrix::zeros(db, db);
                for i in 0..db {
                    for j in 0..db {
                        let mut s = Complex64::new(0.0, 0.0);
                        for k in 0..da {
                            s += self.matrix[(k * db + i, k * db + j)];
                        }
                        m[(i, j)] = s;
                    }
                }
                (Space::B, m)
            }
        };
        Ok(Self { space, matrix })
    }

    /// Tr(ρ·op).
    pub fn expectation(&self, op: &Operator) -> Result<Complex64> {
        if self.space != op.space {
            return Err(CoreError::SpaceMismatch {
                expected: self.space,
                found: op.space,
            });
        }
        if self.dim() != op.dim() {
            return Err(CoreError::DimensionMismatch {
                space: self.space,
                expected: self.dim(),
                found: op.dim(),
            });
        }
        // Tr(ρ M) = Σ_ij ρ[i,j] M[j,i]
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                s += self.matrix[(i, j)] * op.matrix[(j, i)];
            }
        }
        Ok(s)
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Diagonal of ρ in the Fock basis (single-factor spaces only).
    pub fn number_distribution(&self) -> Result<Vec<f64>> {
        if self.space == Space::AB {
            return Err(CoreError::SpaceMismatch {
                expected: Space::A,
                found: Space::AB,
            });
        }
        Ok((0..self.dim()).map(|i| self.matrix[(i, i)].re).collect())
    }

    /// Largest |off-diagonal| entry, used for the "Fock-diagonal stays
    /// diagonal" checks.
    pub fn max_offdiagonal(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if i != j {
                    m = m.max(self.matrix[(i, j)].norm());
                }
            }
        }
        m
    }

    /// Re-Hermitize ((ρ+ρ†)/2) and renormalize the trace. Applied after
    /// every round-trip through evolution + partial trace.
    pub fn symmetrized(&self) -> Self {
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = h.trace().re;
        Self {
            space: self.space,
            matrix: h / Complex64::new(tr, 0.0),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let (values, _) = crate::linalg::hermitian_eigen(&sym)
            .expect("eigensolve of a Hermitian matrix");
        values.first().copied().unwrap_or(f64::INFINITY)
    }

    /// Assert the eigenvalue floor (negative values are diagnostics of
    /// truncation drift, never clipped).
    pub fn assert_positive(&self, tol: &Tolerances) -> Result<()> {
        let min = self.min_eigenvalue();
        if min < tol.eigenvalue_floor {
            return Err(CoreError::InvalidState(format!(
                "smallest eigenvalue {min:.3e} below floor {:.1e}",
                tol.eigenvalue_floor
            )));
        }
        Ok(())
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Internal constructor for matrices produced by trusted algebra.
    pub(crate) fn from_parts(space: Space, matrix: DMatrix<Complex64>) -> Self {
        Self { space, matrix }
    }
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn annihilation_levels_3() {
        let a = Operator::annihilation(Space::A, 3).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.0),
                c(1.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(2.0f64.sqrt()),
                c(0.0),
                c(0.0),
                c(0.0),
            ],
        );
        assert_eq!(a.matrix(), &expected);
    }

    #[test]
    fn number_operator_is_adag_a() {
        let a = Operator::annihilation(Space::A, 3).unwrap();
        let n = a.adjoint().matmul(&a).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(n.matrix()[(i, i)].re, i as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn truncated_commutator_structure() {
        // aa† − a†a = diag(1,…,1, −(d−1)); the last entry is the truncation
        // artifact.
        for d in 2..=32 {
            let a = Operator::annihilation(Space::A, d).unwrap();
            let comm = a.commutator(&a.adjoint()).unwrap();
            for i in 0..d {
                let expected = if i == d - 1 { -((d - 1) as f64) } else { 1.0 };
                assert_abs_diff_eq!(comm.matrix()[(i, i)].re, expected, epsilon = 1e-12);
            }
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        assert_eq!(comm.matrix()[(i, j)], c(0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn annihilation_rejects_tiny_dimension() {
        assert!(matches!(
            Operator::annihilation(Space::A, 1),
            Err(CoreError::InvalidDimension(1))
        ));
    }

    #[test]
    fn embed_number_operator_eigenvalue() {
        let spec = SpaceSpec::new(4, 3).unwrap();
        let na = Operator::number(Space::A, 4).unwrap().embed(&spec).unwrap();
        // ⟨n_a, n_b| (a†a ⊗ I) |n_a, n_b⟩ = n_a at composite index n_a·levels_b + n_b.
        for n_a in 0..4 {
            for n_b in 0..3 {
                let idx = n_a * 3 + n_b;
                assert_abs_diff_eq!(na.matrix()[(idx, idx)].re, n_a as f64, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn embed_identity_is_identity() {
        let spec = SpaceSpec::new(3, 5).unwrap();
        let id = Operator::identity(Space::A, 3).unwrap().embed(&spec).unwrap();
        assert_eq!(id.matrix(), &DMatrix::<Complex64>::identity(15, 15));
    }

    #[test]
    fn embed_rejects_composite_input() {
        let spec = SpaceSpec::new(3, 3).unwrap();
        let id = Operator::identity(Space::AB, 9).unwrap();
        assert!(id.embed(&spec).is_err());
    }

    fn random_matrix(rng: &mut impl Rng, d: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(d, d, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn random_density(rng: &mut impl Rng, space: Space, d: usize) -> DensityMatrix {
        let m = random_matrix(rng, d);
        let p = &m * m.adjoint();
        let tr = p.trace().re;
        DensityMatrix::new(space, p / c(tr), &Tolerances::default()).unwrap()
    }

    #[test]
    fn disjoint_embeddings_commute() {
        let spec = SpaceSpec::new(3, 4).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..5 {
            let x = Operator::new(Space::A, random_matrix(&mut rng, 3)).unwrap();
            let y = Operator::new(Space::B, random_matrix(&mut rng, 4)).unwrap();
            let xe = x.embed(&spec).unwrap();
            let ye = y.embed(&spec).unwrap();
            let xy = xe.matmul(&ye).unwrap();
            let yx = ye.matmul(&xe).unwrap();
            assert!(max_abs(&(xy.matrix() - yx.matrix())) < 1e-12);
        }
    }

    #[test]
    fn tensor_state_pure_index() {
        let spec = SpaceSpec::new(4, 3).unwrap();
        let ra = DensityMatrix::fock_state(Space::A, 2, 4).unwrap();
        let rb = DensityMatrix::fock_state(Space::B, 1, 3).unwrap();
        let rho = DensityMatrix::tensor_state(&ra, &rb).unwrap();
        let idx = 2 * spec.levels_b() + 1;
        assert_abs_diff_eq!(rho.matrix()[(idx, idx)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rho.matrix().trace().re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn tensor_state_purity_multiplicative() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let ra = random_density(&mut rng, Space::A, 3);
        let rb = random_density(&mut rng, Space::B, 4);
        let rho = DensityMatrix::tensor_state(&ra, &rb).unwrap();
        assert_abs_diff_eq!(rho.purity(), ra.purity() * rb.purity(), epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_of_product_recovers_factors() {
        let spec = SpaceSpec::new(3, 4).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let ra = random_density(&mut rng, Space::A, 3);
        let rb = random_density(&mut rng, Space::B, 4);
        let rho = DensityMatrix::tensor_state(&ra, &rb).unwrap();
        let back_a = rho.partial_trace(Keep::A, &spec).unwrap();
        let back_b = rho.partial_trace(Keep::B, &spec).unwrap();
        assert!(max_abs(&(back_a.matrix() - ra.matrix())) < 1e-12);
        assert!(max_abs(&(back_b.matrix() - rb.matrix())) < 1e-12);
    }

    #[test]
    fn bell_state_marginals_are_maximally_mixed() {
        // (|0,0⟩ + |1,1⟩)/√2 on 2×2 levels.
        let spec = SpaceSpec::new(2, 2).unwrap();
        let mut psi = DMatrix::<Complex64>::zeros(4, 1);
        psi[(0, 0)] = c(1.0 / 2.0f64.sqrt());
        psi[(3, 0)] = c(1.0 / 2.0f64.sqrt());
        let rho = DensityMatrix::new(Space::AB, &psi * psi.adjoint(), &Tolerances::default())
            .unwrap();
        for keep in [Keep::A, Keep::B] {
            let marg = rho.partial_trace(keep, &spec).unwrap();
            assert_abs_diff_eq!(marg.matrix()[(0, 0)].re, 0.5, epsilon = 1e-14);
            assert_abs_diff_eq!(marg.matrix()[(1, 1)].re, 0.5, epsilon = 1e-14);
            assert!(marg.max_offdiagonal() < 1e-14);
        }
    }

    #[test]
    fn local_expectation_matches_marginal_expectation() {
        // Brute-force 3⊗3 oracle: Tr[ρ (X⊗I)] = Tr[(Tr_B ρ) X].
        let spec = SpaceSpec::new(3, 3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        for _ in 0..10 {
            let rho = random_density(&mut rng, Space::AB, 9);
            let x = Operator::new(Space::A, random_matrix(&mut rng, 3)).unwrap();
            let lhs = rho.expectation(&x.embed(&spec).unwrap()).unwrap();
            let marg = rho.partial_trace(Keep::A, &spec).unwrap();
            let rhs = marg.expectation(&x).unwrap();
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn fock_state_basics() {
        let rho = DensityMatrix::fock_state(Space::A, 0, 5).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-15);
        let n = Operator::number(Space::A, 5).unwrap();
        let rho3 = DensityMatrix::fock_state(Space::A, 3, 5).unwrap();
        assert_abs_diff_eq!(rho3.expectation(&n).unwrap().re, 3.0, epsilon = 1e-14);
        assert!(DensityMatrix::fock_state(Space::A, 5, 5).is_err());
    }

    #[test]
    fn coherent_state_properties() {
        let z = Complex64::new(0.4, -0.3);
        let rho = DensityMatrix::coherent_state(Space::A, z, 25, 1e-10).unwrap();
        let n = Operator::number(Space::A, 25).unwrap();
        assert_abs_diff_eq!(
            rho.expectation(&n).unwrap().re,
            z.norm_sqr(),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);

        // z = 0 is the vacuum.
        let vac = DensityMatrix::coherent_state(Space::A, c(0.0), 5, 1e-10).unwrap();
        assert_abs_diff_eq!(vac.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);

        // Large amplitude at a tiny cutoff must refuse.
        assert!(matches!(
            DensityMatrix::coherent_state(Space::A, c(3.0), 4, 1e-10),
            Err(CoreError::CoherentOverflow { .. })
        ));
    }

    #[test]
    fn expectation_plumbing() {
        let rho = DensityMatrix::fock_state(Space::A, 0, 4).unwrap();
        let n = Operator::number(Space::A, 4).unwrap();
        assert_abs_diff_eq!(rho.expectation(&n).unwrap().norm(), 0.0, epsilon = 1e-15);
        let id = Operator::identity(Space::A, 4).unwrap();
        assert_abs_diff_eq!(rho.expectation(&id).unwrap().re, 1.0, epsilon = 1e-15);
        let on_b = Operator::number(Space::B, 4).unwrap();
        assert!(rho.expectation(&on_b).is_err());
    }

    #[test]
    fn distributions_and_purity() {
        let maximally_mixed = DensityMatrix::new(
            Space::A,
            DMatrix::identity(6, 6) * c(1.0 / 6.0),
            &Tolerances::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(maximally_mixed.purity(), 1.0 / 6.0, epsilon = 1e-14);

        let rho = DensityMatrix::fock_state(Space::B, 2, 5).unwrap();
        let dist = rho.number_distribution().unwrap();
        assert_eq!(dist.len(), 5);
        for (i, p) in dist.iter().enumerate() {
            let expected = if i == 2 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(*p, expected, epsilon = 1e-14);
        }
        let s: f64 = dist.iter().sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn partial_trace_preserves_trace_and_hermiticity() {
        let spec = SpaceSpec::new(4, 5).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for _ in 0..10 {
            let rho = random_density(&mut rng, Space::AB, 20);
            for keep in [Keep::A, Keep::B] {
                let marg = rho.partial_trace(keep, &spec).unwrap();
                assert!((marg.matrix().trace().re - 1.0).abs() < 1e-12);
                assert!(max_abs(&(marg.matrix() - marg.matrix().adjoint())) < 1e-12);
            }
        }
    }

    #[test]
    fn density_matrix_validation_rejects_bad_inputs() {
        let tol = Tolerances::default();
        // Non-unit trace.
        let m = DMatrix::identity(3, 3) * c(0.5);
        assert!(DensityMatrix::new(Space::A, m, &tol).is_err());
        // Non-Hermitian.
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = c(1.0);
        m[(0, 1)] = Complex64::new(0.0, 0.5);
        assert!(DensityMatrix::new(Space::A, m, &tol).is_err());
    }
}
