//! Three-color stationary light in a double-Λ EIT medium.
//!
//! * [`model`]: medium parameters, control schedules, grids, derived coefficients.
//! * [`analytic`]: closed-form dispersion, design formulas and an eigenvalue oracle.
//! * [`spectral`]: exact wavenumber-space propagation of the adiabatic polariton.
//! * [`pde`]: direct integration of the light-atom equations.
//! * [`protocols`]: trapping and conversion scenarios with scorecards.

pub mod analytic;
pub mod error;
mod fft;
pub mod model;
pub mod pde;
pub mod protocols;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{
    derive_coeffs, Channel, ControlSchedule, Detunings, DerivedCoeffs, FieldState, MediumParams,
    Rabi, Segment, SimGrid, C64,
};
