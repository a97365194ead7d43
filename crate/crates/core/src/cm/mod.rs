//! Elliptic Calogero–Moser operators on two and three particles.
//!
//! Operators are normal ordered with coefficients polynomial in
//! `w_{ij}^{(k)} = ℘^{(k)}(x_i − x_j)` (`k ∈ {0, 1}`, `i < j`) and in `g2`,
//! `g3`, which stay symbolic so that one operator can be evaluated on any
//! lattice.  Identities coming from the addition theorem are invisible to this
//! free ring and are certified numerically.

mod bethe;
mod integral;
mod operator;

pub use bethe::{
    apply_numeric, cm_bethe_residual, cm_eigen_check, cm_pair_check, cm_rank_two_particles, cm_solve_bethe,
    local_cm_eigenfunction, origin_residue, residue_pattern, simple_root, CMBetheState, EigenCheck,
    LocalCMEigenfunction, MPoly, PairCheck,
};
pub use integral::{
    ansatz_basis, eval_coefficients, numeric_residual, random_lattices, rational_approx, sample_configurations,
    solve_higher_integral, HigherIntegral, IntegralOptions, CM_RESIDUAL_TOL,
};
pub use operator::{build_cm, cm_commutator, mono_weight, poly_derive, CMOperator, Gen, Mono, Poly};

use thiserror::Error;

use crate::elliptic::EllipticError;
use crate::lame::LameError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CMError {
    #[error("ansatz for L^{j} has no solution (misfit {misfit:.3e})")]
    AnsatzTooSmall { j: u32, misfit: f64 },
    #[error("ansatz leaves {free} coefficients undetermined")]
    Ambiguous { free: usize },
    #[error("solution does not commute with L1")]
    NotTranslationInvariant,
    #[error("invalid Bethe state: {0}")]
    InvalidState(String),
    #[error("Newton iteration did not converge for seed {seed}")]
    NoConvergence { seed: u64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    Lame(#[from] LameError),
}
