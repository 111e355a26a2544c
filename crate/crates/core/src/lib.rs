//! Spectral invariants of weighted transfer operators for piecewise monotone
//! interval maps: discontinuity orbits, weighted jump norms, distortion
//! coefficients, dual eigen-functionals and Ulam discretizations.

pub mod bounds;
pub mod dual;
pub mod error;
pub mod map_core;
pub mod observables;
pub mod orbits;
pub mod weight;
pub mod poly;
pub mod scalar;
pub mod suite;
pub mod transfer;
pub mod ulam;

pub use error::{Error, Result};
pub use poly::{Poly, RationalFn};
pub use scalar::{Scalar, Q};
