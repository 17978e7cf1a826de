use crate::error::{invalid, Error, Result};
use crate::model::{
    derive_coeffs, Channel, ControlSchedule, DerivedCoeffs, Detunings, GaussianPulse, MediumParams,
    Rabi, SimGrid, C64,
};

use super::quadrature::schedule_nodes;
use super::{curvature, group_velocity, DispersionModel};

/// Quadrature panels per ramping piece of a schedule.
pub const RAMP_PANELS: usize = 16;

/// Pulse length after spreading at the tabulated rates `(t, d l²/dt)`,
/// integrated by the trapezoid rule. Negative rates count by magnitude.
pub fn pulse_length(l_o: f64, history: &[(f64, f64)]) -> Result<f64> {
    if !(l_o > 0.0 && l_o.is_finite()) {
        return Err(invalid("l_o", "must be positive"));
    }
    let growth: f64 = history
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1.abs() + w[1].1.abs()))
        .sum();
    Ok((l_o * l_o + growth.max(0.0)).sqrt())
}

/// `d l²/dt` for constant controls, from the quasi-static band curvature.
/// Zero when every control is off (a stored spin wave does not spread).
pub fn spreading_rate(params: &MediumParams, det: &Detunings, amps: &Rabi) -> Result<f64> {
    if amps.is_zero() {
        return Ok(0.0);
    }
    let c = derive_coeffs(params, det, amps)?;
    Ok(curvature(DispersionModel::Resummed, &c, params.k_o)?.spreading_rate)
}

/// Pulse length at `t1` for a pulse of length `l_o` at `t0`.
pub fn predicted_pulse_length(
    params: &MediumParams,
    det: &Detunings,
    schedule: &ControlSchedule,
    l_o: f64,
    t0: f64,
    t1: f64,
) -> Result<f64> {
    let mut growth = 0.0;
    for (t, w) in schedule_nodes(schedule, t0, t1, RAMP_PANELS) {
        growth += w * spreading_rate(params, det, &schedule.amplitudes(t))?;
    }
    pulse_length(l_o, &[(0.0, growth), (1.0, growth)])
}

/// `∫ v dt` over `[t0, t1]` with the group velocity formula.
pub fn displacement(
    params: &MediumParams,
    det: &Detunings,
    schedule: &ControlSchedule,
    t0: f64,
    t1: f64,
) -> Result<f64> {
    let mut x = 0.0;
    for (t, w) in schedule_nodes(schedule, t0, t1, RAMP_PANELS) {
        x += w * group_velocity(params, det, &schedule.amplitudes(t))?.v;
    }
    Ok(x)
}

/// Positions of the three field envelopes relative to the spin wave,
/// ordered `(+1, +2, -1)`.
pub fn spatial_shifts(c: &DerivedCoeffs) -> [C64; 3] {
    let eps = c.alpha_p1 / c.xi_p1 + c.alpha_p2 / c.xi_p2 - c.alpha_m1 / c.xi_m1;
    [1.0 / c.xi_p1 - eps, 1.0 / c.xi_p2 - eps, -1.0 / c.xi_m1 - eps]
}

fn shifts_at(params: &MediumParams, det: &Detunings, amps: &Rabi) -> Result<[C64; 3]> {
    match derive_coeffs(params, det, amps) {
        Ok(c) => Ok(spatial_shifts(&c)),
        Err(Error::DegenerateCoefficients) => Ok([C64::new(0.0, 0.0); 3]),
        Err(e) => Err(e),
    }
}

/// Predicted Gaussian envelopes of all three fields at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPrediction {
    pub t: f64,
    pub length: f64,
    /// Peak amplitudes, ordered `(+1, +2, -1)`.
    pub amplitudes: [f64; 3],
    /// Complex centers; the imaginary part encodes the phase tilt from
    /// detuned shifts.
    pub centers: [C64; 3],
}

impl GaussianPrediction {
    fn index(ch: Channel) -> usize {
        match ch {
            Channel::P1 => 0,
            Channel::P2 => 1,
            Channel::M1 => 2,
        }
    }

    pub fn amplitude(&self, ch: Channel) -> f64 {
        self.amplitudes[Self::index(ch)]
    }

    pub fn center(&self, ch: Channel) -> f64 {
        self.centers[Self::index(ch)].re
    }

    pub fn eval(&self, ch: Channel, z: f64) -> C64 {
        let i = Self::index(ch);
        let x = (z - self.centers[i]) / self.length;
        self.amplitudes[i] * (-0.5 * x * x).exp()
    }

    pub fn sample(&self, ch: Channel, grid: &SimGrid) -> Vec<C64> {
        (0..grid.n_z).map(|j| self.eval(ch, grid.z(j))).collect()
    }
}

/// Envelopes at `t` of a Gaussian `+1` probe given at `t0` with the other
/// two fields absent before `t0`.
pub fn gaussian_prediction(
    params: &MediumParams,
    det: &Detunings,
    schedule: &ControlSchedule,
    pulse: &GaussianPulse,
    t0: f64,
    t: f64,
) -> Result<GaussianPrediction> {
    pulse.validate()?;
    if params.k_o != 0.0 {
        return Err(invalid("k_o", "Gaussian prediction assumes k_o = 0"));
    }
    let a0 = schedule.amplitudes(t0);
    if a0.p1 <= 0.0 {
        return Err(Error::InvalidInitialCondition(
            "forward control must be on at the initial time".into(),
        ));
    }
    let at = schedule.amplitudes(t);
    let length = predicted_pulse_length(params, det, schedule, pulse.length, t0, t)?;
    let travel = displacement(params, det, schedule, t0, t)?;
    let s0 = shifts_at(params, det, &a0)?;
    let st = shifts_at(params, det, &at)?;
    let base = pulse.amplitude * pulse.length / (a0.p1 * length);
    let mut amplitudes = [0.0; 3];
    let mut centers = [C64::new(0.0, 0.0); 3];
    for (i, ch) in Channel::ALL.into_iter().enumerate() {
        amplitudes[i] = base * at.get(ch) * params.g1 / params.coupling(ch);
        centers[i] = pulse.center + travel + st[i] - s0[0];
    }
    Ok(GaussianPrediction {
        t,
        length,
        amplitudes,
        centers,
    })
}

/// Energy of channel `ch` after conversion relative to the initial energy.
pub fn energy_ratio(params: &MediumParams, l_o: f64, l_t1: f64, ch: Channel) -> Result<f64> {
    if !(l_o > 0.0) {
        return Err(invalid("l_o", "must be positive"));
    }
    if !(l_t1 >= l_o) {
        return Err(invalid("l_t1", "final length must not be shorter than l_o"));
    }
    if !(params.omega_p1 > 0.0) {
        return Err(invalid("omega_p1", "carrier frequency must be positive"));
    }
    Ok(params.carrier(ch) / params.omega_p1 * l_o / l_t1)
}

/// Lifetime of the `k = 1/l_o` component of a held pulse.
pub fn stationary_lifetime(params: &MediumParams, det: &Detunings, amps: &Rabi, l_o: f64) -> Result<f64> {
    let rate = spreading_rate(params, det, amps)?;
    Ok(1.0 / (params.gamma2 + rate / (2.0 * l_o * l_o)))
}
