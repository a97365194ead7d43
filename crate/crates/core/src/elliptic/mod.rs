//! The Weierstrass layer.
//!
//! [`exact`] holds the rational side: Laurent expansions of `℘`, `℘′` and the
//! differential ring `Q[p, p′]` modulo the Weierstrass relation.  [`numeric`]
//! evaluates `℘`, `℘′` and `ζ` in double precision on a period lattice.

pub mod exact;
pub mod numeric;

use thiserror::Error;

pub use exact::{
    wp_coefficients, wp_prime_series, wp_series, EllipticElement, EllipticInvariants,
};
pub use numeric::{invariants_from_periods, Lattice, WpValues};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EllipticError {
    #[error("discriminant g2^3 - 27 g3^2 vanishes; the curve is singular")]
    Degenerate,
    #[error("periods do not form an oriented basis (need Im(omega2/omega1) > 0)")]
    NotOriented,
    #[error("point {re}+{im}i lies within tolerance of a lattice point")]
    NearPole { re: f64, im: f64 },
}
