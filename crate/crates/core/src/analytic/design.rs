use crate::error::{Error, Result};
use crate::model::{derive_coeffs, Detunings, MediumParams, Rabi};

/// Net group velocity with the real part of `γ̃2` in the correction factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityEstimate {
    pub v: f64,
    /// Imaginary part left over from the complex `γ̃2`.
    pub imag_residue: f64,
}

pub fn group_velocity(params: &MediumParams, det: &Detunings, amps: &Rabi) -> Result<VelocityEstimate> {
    params.validate()?;
    amps.validate()?;
    let gt = if amps.is_zero() {
        Default::default()
    } else {
        derive_coeffs(params, det, amps)?.gamma2_tilde
    };
    let scale = params.c / params.n;
    let (g1s, g2s) = (params.g1 * params.g1, params.g2 * params.g2);
    let fwd = amps.p1 * amps.p1 / g1s;
    Ok(VelocityEstimate {
        v: scale * ((1.0 - gt.re) * fwd + amps.p2 * amps.p2 / g2s - amps.m1 * amps.m1 / g1s),
        imag_residue: -scale * gt.im * fwd,
    })
}

/// Backward control amplitude that cancels the net group velocity.
pub fn stationary_backward_rabi(g1: f64, g2: f64, omega_p1: f64, omega_p2: f64) -> f64 {
    let r = g1 / g2;
    (omega_p1 * omega_p1 + r * r * omega_p2 * omega_p2).sqrt()
}

/// Detuning of the `+2` field that cancels the reactive part of the band
/// curvature of a stationary pulse.
pub fn optimal_detuning_p2(g1: f64, g2: f64, amps: &Rabi, delta_p1: f64, delta_m1: f64) -> Result<f64> {
    if amps.p2 == 0.0 {
        return Err(Error::UndefinedRatio("omega_p2 is zero"));
    }
    let r2 = (g2 / g1).powi(2);
    let ratio = (amps.p1 / amps.p2).powi(2);
    Ok(-(r2 * delta_m1 + ratio * r2 * r2 * (delta_m1 + delta_p1)))
}

/// Symmetric plan `Δ+1 = -Δ-1`: returns `(Δ+1, Δ+2)`.
pub fn symmetric_detunings(g1: f64, g2: f64, delta_m1: f64) -> (f64, f64) {
    (-delta_m1, -(g2 / g1).powi(2) * delta_m1)
}

/// Factor by which a shift of `Δ-1` is amplified into `Δ+2` when the `+1`
/// control dominates.
pub fn regime_b_amplification(g1: f64, g2: f64, amps: &Rabi) -> Result<f64> {
    if amps.p2 == 0.0 {
        return Err(Error::UndefinedRatio("omega_p2 is zero"));
    }
    Ok((amps.p1 / amps.p2).powi(2) * (g2 / g1).powi(4))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> MediumParams {
        let mut p = MediumParams::code_units(1.0);
        p.n = 1.0;
        p
    }

    #[test]
    fn velocity_direct_algebra() {
        let v = group_velocity(&unit(), &Detunings::default(), &Rabi::new(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(v.v, -4.0);
        assert_eq!(v.imag_residue, 0.0);
    }

    #[test]
    fn velocity_single_field() {
        let p = MediumParams::code_units(500.0);
        let v = group_velocity(&p, &Detunings::default(), &Rabi::new(2.0, 0.0, 0.0)).unwrap();
        assert!((v.v - 4.0 / 500.0).abs() < 1e-18);
    }

    #[test]
    fn spin_decay_slows_forward_term() {
        let mut p = MediumParams::code_units(100.0);
        p.gamma2 = 0.01;
        let v = group_velocity(&p, &Detunings::default(), &Rabi::new(1.0, 0.0, 0.0)).unwrap();
        // γ̃2 = 0.01/1.01
        assert!((v.v - (1.0 - 0.01 / 1.01) / 100.0).abs() < 1e-16);
    }

    #[test]
    fn complex_gamma_tilde_residue() {
        let mut p = MediumParams::code_units(100.0);
        p.gamma2 = 0.01;
        let det = Detunings {
            delta_p1: 1.0,
            ..Default::default()
        };
        let v = group_velocity(&p, &det, &Rabi::new(1.0, 0.0, 0.0)).unwrap();
        assert!(v.imag_residue != 0.0);
    }

    #[test]
    fn backward_rabi_cases() {
        assert_eq!(stationary_backward_rabi(1.0, 1.0, 0.7, 0.0), 0.7);
        assert!((stationary_backward_rabi(1.0, 1.0, 1.0, 1.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((stationary_backward_rabi(1.0, 2.0, 1.0, 2.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn stationary_amplitude_stops_pulse() {
        let p = MediumParams {
            g2: 1.7,
            ..MediumParams::code_units(10.0)
        };
        let m1 = stationary_backward_rabi(p.g1, p.g2, 0.8, 1.3);
        let v = group_velocity(&p, &Detunings::default(), &Rabi::new(0.8, 1.3, m1)).unwrap();
        assert!(v.v.abs() < 1e-17);
    }

    #[test]
    fn optimal_detuning_cases() {
        let amps = Rabi::new(1.0, 1.0, 0.0);
        assert_eq!(optimal_detuning_p2(1.0, 1.0, &amps, 0.0, 0.7).unwrap(), -1.4);
        let amps = Rabi::new(2f64.sqrt(), 1.0, 0.0);
        let d = optimal_detuning_p2(1.0, 1.0, &amps, 0.5, 1.0).unwrap();
        assert!((d + 4.0).abs() < 1e-14);
        assert!(optimal_detuning_p2(1.0, 1.0, &Rabi::new(1.0, 0.0, 1.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn symmetric_plan_is_optimal() {
        let (g1, g2) = (1.0, 1.3);
        let (dp1, dp2) = symmetric_detunings(g1, g2, 0.4);
        let d = optimal_detuning_p2(g1, g2, &Rabi::new(0.9, 0.5, 1.0), dp1, 0.4).unwrap();
        assert!((d - dp2).abs() < 1e-15);
    }

    #[test]
    fn amplification_factor() {
        let f = regime_b_amplification(1.0, 2.0, &Rabi::new(3.0, 1.0, 0.0)).unwrap();
        assert_eq!(f, 9.0 * 16.0);
    }
}
