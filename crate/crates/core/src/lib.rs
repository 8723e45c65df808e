//! Mixed Bourgain-Morrey norms on dyadic grids.
//!
//! Functions are piecewise constant on a uniform dyadic lattice with compact
//! support ([`grid::GridFunction`]). On that class the mixed Lebesgue norm,
//! the Bourgain-Morrey norm (including both infinite tails) and the slice
//! norms of the predual block space are computed exactly. Maximal operators,
//! fractional integrals, Fourier multipliers and wavelet square functions are
//! built on top, together with a verification layer that checks the standard
//! inequalities of the theory on seeded corpora.

pub mod block;
pub mod corpus;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod json;
pub mod lebesgue;
pub mod morrey;
pub mod operators;
pub mod quad;
pub mod spectral;
pub mod sum;
pub mod wavelet;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::DyadicCube;
pub use grid::GridFunction;
pub use lebesgue::ExponentVector;
pub use morrey::{NormBreakdown, SpaceParams};
