//! Stability laboratory for explicit time-stepping of the incompressible
//! Euler equations.
//!
//! Three independent routes to the same CFL-type condition
//! `dt <= C * dx^(2r/(2r-1))`:
//!
//! * [`coeffs`]: exact rational perturbation coefficients and the
//!   stability polynomial `S_0..S_k` of an explicit scheme,
//! * [`von_neumann`]: floating-point amplification factors of single
//!   Fourier modes under constant advection,
//! * [`experiments`]: perturbation-growth measurements on a dealiased
//!   pseudo-spectral solver ([`spectral`], [`integrate`]).
//!
//! The numerical code is generic over the floating-point scalar through
//! [`Real`]; the aliases below fix it to `f64`, which is what the
//! experiments and the command-line front end use.

pub mod coeffs;
pub mod error;
pub mod experiments;
pub mod integrate;
pub mod rational;
pub mod scalar;
pub mod scheme;
pub mod spectral;
pub mod von_neumann;

pub use error::{Error, Result};
pub use scalar::Real;

/// Exact coefficient type used by schemes and the coefficient engine.
pub type Rational = num_rational::BigRational;

pub type Grid = spectral::Grid<f64>;
pub type Field = spectral::SpectralField<f64>;
pub type FrozenFlow = spectral::FrozenFlow<f64>;
pub type FlowState = integrate::FlowState<f64>;
pub type Expansion = coeffs::AmplificationExpansion<Rational>;
pub type Profile = coeffs::StabilityProfile<Rational>;
pub type Sample = von_neumann::AmplificationSample<f64>;

/// Single-precision variants, mostly useful for quick sweeps.
pub type Grid32 = spectral::Grid<f32>;
pub type Field32 = spectral::SpectralField<f32>;
