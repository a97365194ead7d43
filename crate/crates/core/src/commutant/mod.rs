//! Commutants of second-order operators over the elliptic ring.
//!
//! The search sets up the exact rational linear system for an operator
//! `Q = D^s + Σ b_j D^j` commuting with `L`; the fiber layer expands operators
//! at an ordinary point, builds echelon solution bases of `(L − λ)ψ = 0` and
//! the matrix by which a commuting `Q` acts on them; the spectral layer turns
//! those matrices into the polynomial `P` with `Q² = P(L)`.

mod fiber;
mod generic;
mod search;
mod spectral;

use thiserror::Error;

use crate::opalg::OpError;
use crate::series::SeriesError;

pub use fiber::{
    centralizer_action, find_base_point, localize, rank, solution_basis, solution_basis_local,
    BasePoint, RankReport, SolutionBasis,
};
pub use generic::{GenericLamePair, GenericPoly};
pub use search::{commutator_system, find_commuting, AnsatzTerm, CommutatorSystem};
pub use spectral::{
    algebraic_type_test, centralizer_commutativity_check, spectral_polynomial, CommutativityReport,
    SpectralCurve, Verdict,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommutantError {
    #[error("no commuting operator of order {order} within weight bound {wbound}")]
    NotFound { order: usize, wbound: u32 },
    #[error("leading coefficient vanishes at the base point")]
    SingularPoint,
    #[error("Q^2 does not act as a scalar on the fiber at lambda = {lambda}")]
    NonScalarAction { lambda: String },
    #[error("interpolated polynomial fails the operator identity Q^2 = P(L)")]
    InterpolationMismatch,
    #[error("operator has order {0}; an odd order is required")]
    EvenOrder(usize),
    #[error("operator must have order 2 and leading coefficient 1")]
    NotLameType,
    #[error("operators do not commute")]
    NotCommuting,
    #[error("base point does not lie on the curve")]
    OffCurve,
    #[error("no base point of small height found on the curve")]
    NoBasePoint,
    #[error("series truncation {0} too low for the requested operation")]
    TruncationTooLow(i64),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}
