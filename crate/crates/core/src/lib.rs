//! Exact and numerical tools for quantum integrable systems built from
//! commuting ordinary differential operators.
//!
//! The crate is organised bottom-up:
//!
//! * [`scalar`] and [`series`]: exact rationals, Gaussian rationals and
//!   truncated Laurent series (the formal-disc coefficient ring).
//! * [`elliptic`]: Weierstrass `℘` both as an exact differential ring
//!   `Q[p, p′]/(p′² − 4p³ + g2·p + g3)` and as a double-precision function on a
//!   lattice.
//! * [`opalg`]: ordinary differential operators over either coefficient ring.
//! * [`commutant`]: formal solution bases, rank, commutant search and
//!   Burchnall–Chaundy spectral polynomials.
//! * [`lame`]: the Lamé operator, Hermite's ansatz and its Bethe equations.
//! * [`cm`]: the elliptic Calogero–Moser operators for two and three particles.
//! * [`monodromy`]: numerical monodromy of the Lamé eigenvalue problem on the
//!   punctured torus.
//! * [`cli`]: the operator expression language and the JSON command runner
//!   behind the `qcis` binary.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod cli;
pub mod cm;
pub mod commutant;
pub mod elliptic;
pub mod lame;
pub mod linalg;
pub mod monodromy;
pub mod opalg;
pub mod scalar;
pub mod series;

pub use elliptic::{EllipticElement, EllipticInvariants, Lattice};
pub use opalg::DiffOp;
pub use scalar::{Gauss, Scalar, Q};
pub use series::LaurentSeries;
