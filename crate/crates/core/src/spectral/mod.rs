//! Divergence-free periodic fields on `[0, 2pi)^2` in a Fourier basis.
//!
//! The discretization space is the set of real, divergence-free
//! trigonometric polynomials with `max(|k1|, |k2|) <= k_max`. Projection
//! onto it is the mode-wise Leray projector followed by the band mask, and
//! quadratic products are dealiased by the 2/3 rule so that the discrete
//! transport term keeps its skew symmetry.

mod field;
mod frozen;
mod grid;
pub mod io;
mod ops;

pub use field::SpectralField;
pub use frozen::FrozenFlow;
pub use grid::{wavenumber, BandMode, Grid};
pub use ops::{antisymmetry_defect, skewness_defect};
