//! Two coupled oscillators whose inter-system correlations are repeatedly
//! discarded between contacts, pumping energy into both of them.
//!
//! The library layers are:
//!
//! - [`fock`]: truncated Fock-space linear algebra (ladder operators,
//!   tensor products, partial trace, states, observables).
//! - [`dynamics`]: the spin-boson and Jaynes-Cummings Hamiltonians and
//!   exact unitary evolution over one contact interval.
//! - [`bogoliubov`]: analytic diagonalization of the spin-boson
//!   Hamiltonian and the Heisenberg-picture operator coefficients,
//!   cross-validated against the truncated numerics.
//! - [`ratchet`]: the encounter protocol (contact, evolve, marginalize,
//!   re-product) in single-chain and randomly-paired ensemble modes.
//! - [`shorttime`]: the abstract bipartite short-time expansion of the
//!   energy gained per marginalization, checked against exact evolution.
//! - [`classical`]: the classical analogue — randomly toggled bilinear
//!   coupling driving a random walk in log-energy.

pub mod bogoliubov;
pub mod classical;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod fock;
pub mod linalg;
pub mod ratchet;
pub mod rng;
pub mod shorttime;

pub use error::{CoreError, Result};
