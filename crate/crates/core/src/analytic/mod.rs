//! Closed-form dispersion, design formulas and envelope predictions.

mod design;
mod dispersion;
mod envelope;
pub(crate) mod quadrature;

pub use design::{
    group_velocity, optimal_detuning_p2, regime_b_amplification, stationary_backward_rabi,
    symmetric_detunings, VelocityEstimate,
};
pub use dispersion::{
    chi_factors, curvature, dispersion_sample, dispersion_slope, eigenvalue_oracle, omega, omega_k,
    omega_k_resummed, oracle_branches, phi, Curvature, DispersionModel, DispersionSample,
    BRANCH_DEGENERACY, PHI_TOLERANCE,
};
pub use envelope::{
    displacement, energy_ratio, gaussian_prediction, predicted_pulse_length, pulse_length,
    spatial_shifts, spreading_rate, stationary_lifetime, GaussianPrediction, RAMP_PANELS,
};
