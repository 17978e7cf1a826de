//! Medium parameters, control schedules, grids and the derived coefficients
//! shared by every other module.
//!
//! All quantities are plain numbers in whatever consistent unit system the
//! caller picks. [`MediumParams::code_units`] gives the usual preset with
//! `c = γ3 = γ4 = 1`.

mod grid;
mod schedule;

pub use grid::{Boundary, FieldState, SimGrid};
pub use schedule::{ramp_profile, ControlSchedule, Segment, RAMP_STEEPNESS};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// One of the three probe channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Forward field on the |1>-|3> transition.
    P1,
    /// Forward field on the |1>-|4> transition.
    P2,
    /// Backward field on the |1>-|3> transition.
    M1,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::P1, Channel::P2, Channel::M1];

    pub fn name(self) -> &'static str {
        match self {
            Channel::P1 => "p1",
            Channel::P2 => "p2",
            Channel::M1 => "m1",
        }
    }

    /// +1 for forward channels, -1 for the backward one.
    pub fn direction(self) -> f64 {
        match self {
            Channel::M1 => -1.0,
            _ => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumParams {
    /// Atomic density.
    pub n: f64,
    pub g1: f64,
    pub g2: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    pub c: f64,
    /// Two-photon recoil wavenumber.
    pub k_o: f64,
    /// Carrier frequencies, only used for energy bookkeeping.
    pub omega_p1: f64,
    pub omega_p2: f64,
    pub omega_m1: f64,
}

impl MediumParams {
    /// Preset with `c = γ3 = γ4 = g1 = g2 = 1` and `N = ξ13`.
    pub fn code_units(xi13: f64) -> Self {
        MediumParams {
            n: xi13,
            g1: 1.0,
            g2: 1.0,
            gamma2: 0.0,
            gamma3: 1.0,
            gamma4: 1.0,
            c: 1.0,
            k_o: 0.0,
            omega_p1: 1.0,
            omega_p2: 1.0,
            omega_m1: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n", self.n),
            ("g1", self.g1),
            ("g2", self.g2),
            ("gamma3", self.gamma3),
            ("gamma4", self.gamma4),
            ("c", self.c),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        let nonneg = [
            ("gamma2", self.gamma2),
            ("k_o", self.k_o),
            ("omega_p1", self.omega_p1),
            ("omega_p2", self.omega_p2),
            ("omega_m1", self.omega_m1),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be non-negative and finite, got {v}")));
            }
        }
        let (x13, x14) = (self.xi13(), self.xi14());
        if !(x13.is_finite() && x14.is_finite()) {
            return Err(invalid("n", "absorption coefficients overflow"));
        }
        Ok(())
    }

    /// Resonant absorption coefficient of the |1>-|3> transition.
    pub fn xi13(&self) -> f64 {
        self.n * self.g1 * self.g1 / (self.c * self.gamma3)
    }

    /// Resonant absorption coefficient of the |1>-|4> transition.
    pub fn xi14(&self) -> f64 {
        self.n * self.g2 * self.g2 / (self.c * self.gamma4)
    }

    pub fn coupling(&self, ch: Channel) -> f64 {
        match ch {
            Channel::P2 => self.g2,
            _ => self.g1,
        }
    }

    pub fn carrier(&self, ch: Channel) -> f64 {
        match ch {
            Channel::P1 => self.omega_p1,
            Channel::P2 => self.omega_p2,
            Channel::M1 => self.omega_m1,
        }
    }

    /// Bare EIT group velocity `c Ω²/(N g²)` of one channel.
    pub fn bare_velocity(&self, ch: Channel, amp: f64) -> f64 {
        let g = self.coupling(ch);
        self.c * amp * amp / (self.n * g * g)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Detunings {
    pub delta_p1: f64,
    pub delta_p2: f64,
    pub delta_m1: f64,
}

impl Detunings {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta_p1", self.delta_p1),
            ("delta_p2", self.delta_p2),
            ("delta_m1", self.delta_m1),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn get(&self, ch: Channel) -> f64 {
        match ch {
            Channel::P1 => self.delta_p1,
            Channel::P2 => self.delta_p2,
            Channel::M1 => self.delta_m1,
        }
    }
}

/// Control Rabi amplitudes `(Ω+1, Ω+2, Ω-1)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rabi {
    pub p1: f64,
    pub p2: f64,
    pub m1: f64,
}

impl Rabi {
    pub const ZERO: Rabi = Rabi {
        p1: 0.0,
        p2: 0.0,
        m1: 0.0,
    };

    pub fn new(p1: f64, p2: f64, m1: f64) -> Self {
        Rabi { p1, p2, m1 }
    }

    pub fn get(&self, ch: Channel) -> f64 {
        match ch {
            Channel::P1 => self.p1,
            Channel::P2 => self.p2,
            Channel::M1 => self.m1,
        }
    }

    pub fn scaled(&self, s: f64) -> Rabi {
        Rabi::new(self.p1 * s, self.p2 * s, self.m1 * s)
    }

    pub fn max(&self) -> f64 {
        self.p1.max(self.p2).max(self.m1)
    }

    pub fn is_zero(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.m1 == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("omega_p1", self.p1), ("omega_p2", self.p2), ("omega_m1", self.m1)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("control amplitude must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub(crate) fn lerp(&self, other: &Rabi, s: f64) -> Rabi {
        Rabi::new(
            self.p1 + (other.p1 - self.p1) * s,
            self.p2 + (other.p2 - self.p2) * s,
            self.m1 + (other.m1 - self.m1) * s,
        )
    }
}

/// Gaussian probe `A+1(z) = amplitude · exp(-(z - center)²/(2 length²))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPulse {
    pub amplitude: f64,
    pub center: f64,
    pub length: f64,
}

impl GaussianPulse {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(invalid("length", "pulse length must be positive"));
        }
        if !(self.amplitude.is_finite() && self.center.is_finite()) {
            return Err(invalid("amplitude", "pulse amplitude and center must be finite"));
        }
        Ok(())
    }

    pub fn eval(&self, z: f64) -> f64 {
        let x = (z - self.center) / self.length;
        self.amplitude * (-0.5 * x * x).exp()
    }
}

/// Coefficients derived from the medium, detunings and instantaneous controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedCoeffs {
    pub gamma_p1: C64,
    pub gamma_p2: C64,
    pub gamma_m1: C64,
    pub mu_s: C64,
    pub alpha_p1: C64,
    pub alpha_p2: C64,
    pub alpha_m1: C64,
    pub gamma2_tilde: C64,
    pub xi_p1: C64,
    pub xi_p2: C64,
    pub xi_m1: C64,
}

impl DerivedCoeffs {
    pub fn gamma(&self, ch: Channel) -> C64 {
        match ch {
            Channel::P1 => self.gamma_p1,
            Channel::P2 => self.gamma_p2,
            Channel::M1 => self.gamma_m1,
        }
    }

    pub fn alpha(&self, ch: Channel) -> C64 {
        match ch {
            Channel::P1 => self.alpha_p1,
            Channel::P2 => self.alpha_p2,
            Channel::M1 => self.alpha_m1,
        }
    }

    pub fn xi(&self, ch: Channel) -> C64 {
        match ch {
            Channel::P1 => self.xi_p1,
            Channel::P2 => self.xi_p2,
            Channel::M1 => self.xi_m1,
        }
    }

    /// Wavenumber denominator `D_σ(k)` linking each polariton component to
    /// the spin wave: `Ψ_σ = -√N P12 / D_σ`.
    pub fn denominator(&self, ch: Channel, k_o: f64, k: f64) -> C64 {
        match ch {
            Channel::P1 => 1.0 + I * (k - k_o) / self.xi_p1,
            Channel::P2 => 1.0 + I * (k - k_o) / self.xi_p2,
            Channel::M1 => 1.0 - I * (k + k_o) / self.xi_m1,
        }
    }
}

/// Optical relaxation rates `γ±1 = γ3 - iΔ±1`, `γ+2 = γ4 - iΔ+2`.
pub fn optical_rates(params: &MediumParams, det: &Detunings) -> [C64; 3] {
    [
        C64::new(params.gamma3, -det.delta_p1),
        C64::new(params.gamma4, -det.delta_p2),
        C64::new(params.gamma3, -det.delta_m1),
    ]
}

/// Complex absorption scales `(ξ+1, ξ+2, ξ-1)`; independent of the controls.
pub fn complex_xi(params: &MediumParams, det: &Detunings) -> [C64; 3] {
    let [g1, g2, gm] = optical_rates(params, det);
    let (x13, x14) = (params.xi13(), params.xi14());
    [params.gamma3 / g1 * x13, params.gamma4 / g2 * x14, params.gamma3 / gm * x13]
}

/// Denominators `(D+1, D+2, D-1)` at wavenumber `k`.
pub fn polariton_denominators(xi: &[C64; 3], k_o: f64, k: f64) -> [C64; 3] {
    [
        1.0 + I * (k - k_o) / xi[0],
        1.0 + I * (k - k_o) / xi[1],
        1.0 - I * (k + k_o) / xi[2],
    ]
}

pub fn derive_coeffs(params: &MediumParams, det: &Detunings, amps: &Rabi) -> Result<DerivedCoeffs> {
    params.validate()?;
    det.validate()?;
    amps.validate()?;
    if amps.is_zero() && params.gamma2 == 0.0 {
        return Err(Error::DegenerateCoefficients);
    }
    let [gamma_p1, gamma_p2, gamma_m1] = optical_rates(params, det);
    let (w1, w2, wm) = (
        amps.p1 * amps.p1 / gamma_p1,
        amps.p2 * amps.p2 / gamma_p2,
        amps.m1 * amps.m1 / gamma_m1,
    );
    let mu_s = params.gamma2 + w1 + w2 + wm;
    let (x13, x14) = (params.xi13(), params.xi14());
    Ok(DerivedCoeffs {
        gamma_p1,
        gamma_p2,
        gamma_m1,
        mu_s,
        alpha_p1: w1 / mu_s,
        alpha_p2: w2 / mu_s,
        alpha_m1: wm / mu_s,
        gamma2_tilde: params.gamma2 / mu_s,
        xi_p1: params.gamma3 / gamma_p1 * x13,
        xi_p2: params.gamma4 / gamma_p2 * x14,
        xi_m1: params.gamma3 / gamma_m1 * x13,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarginFlag {
    Pass,
    Warn,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Margin {
    pub name: &'static str,
    pub value: Option<f64>,
    pub flag: MarginFlag,
}

/// Dimensionless adiabaticity margins for a pulse of duration `δt`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticityReport {
    pub pulse_duration: f64,
    pub margins: Vec<Margin>,
}

pub const MARGIN_PASS: f64 = 10.0;
pub const MARGIN_FAIL: f64 = 3.0;

impl AdiabaticityReport {
    pub fn worst(&self) -> MarginFlag {
        let mut worst = MarginFlag::Pass;
        for m in &self.margins {
            match m.flag {
                MarginFlag::Fail => return MarginFlag::Fail,
                MarginFlag::Warn => worst = MarginFlag::Warn,
                _ => {}
            }
        }
        worst
    }

    /// Smallest applicable margin.
    pub fn min_margin(&self) -> f64 {
        self.margins
            .iter()
            .filter_map(|m| m.value)
            .fold(f64::INFINITY, f64::min)
    }
}

fn margin(name: &'static str, value: f64) -> Margin {
    let flag = if value >= MARGIN_PASS {
        MarginFlag::Pass
    } else if value >= MARGIN_FAIL {
        MarginFlag::Warn
    } else {
        MarginFlag::Fail
    };
    Margin {
        name,
        value: Some(value),
        flag,
    }
}

/// Samples per segment when scanning `|μ_s(t)|` over a schedule.
const MU_SCAN: usize = 64;

pub fn adiabaticity_report(
    params: &MediumParams,
    det: &Detunings,
    schedule: &ControlSchedule,
    pulse_duration: f64,
) -> Result<AdiabaticityReport> {
    if !(pulse_duration > 0.0 && pulse_duration.is_finite()) {
        return Err(invalid("pulse_duration", "must be positive"));
    }
    let dt = pulse_duration;
    let mut margins = vec![margin("gamma3*dt", params.gamma3 * dt), margin("gamma4*dt", params.gamma4 * dt)];
    for (name, d) in [
        ("|delta_p1|*dt", det.delta_p1),
        ("|delta_m1|*dt", det.delta_m1),
        ("|delta_p2|*dt", det.delta_p2),
    ] {
        if d == 0.0 {
            margins.push(Margin {
                name,
                value: None,
                flag: MarginFlag::NotApplicable,
            });
        } else {
            margins.push(margin(name, d.abs() * dt));
        }
    }
    let [g1, g2, gm] = optical_rates(params, det);
    let mut mu_min = f64::INFINITY;
    let mut probe = |t: f64| {
        let a = schedule.amplitudes(t);
        let mu = params.gamma2 + a.p1 * a.p1 / g1 + a.p2 * a.p2 / g2 + a.m1 * a.m1 / gm;
        mu_min = mu_min.min(mu.norm());
    };
    for seg in schedule.segments() {
        for j in 0..=MU_SCAN {
            probe(seg.start + (seg.end - seg.start) * j as f64 / MU_SCAN as f64);
        }
    }
    margins.push(margin("min|mu_s|*dt", mu_min * dt));
    Ok(AdiabaticityReport {
        pulse_duration,
        margins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> MediumParams {
        MediumParams::code_units(100.0)
    }

    #[test]
    fn symmetric_weights() {
        let c = derive_coeffs(&params(), &Detunings::default(), &Rabi::new(1.0, 1.0, 1.0)).unwrap();
        assert!((c.mu_s - C64::new(3.0, 0.0)).norm() < 1e-15);
        for a in [c.alpha_p1, c.alpha_p2, c.alpha_m1] {
            assert!((a - C64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn single_control_weights() {
        let c = derive_coeffs(&params(), &Detunings::default(), &Rabi::new(0.7, 0.0, 0.0)).unwrap();
        assert_eq!(c.alpha_p1, C64::new(1.0, 0.0));
        assert_eq!(c.alpha_p2, C64::new(0.0, 0.0));
        assert_eq!(c.alpha_m1, C64::new(0.0, 0.0));
    }

    #[test]
    fn detuned_coefficients_match_hand_evaluation() {
        let mut p = params();
        p.gamma2 = 0.01;
        let det = Detunings {
            delta_p1: 0.5,
            ..Default::default()
        };
        let c = derive_coeffs(&p, &det, &Rabi::new(1.0, 1.0, 1.0)).unwrap();
        // 1/(1 - 0.5i) = 0.8 + 0.4i, so mu_s = 0.01 + 0.8 + 0.4i + 2.
        let mu = C64::new(2.81, 0.4);
        assert!((c.mu_s - mu).norm() < 1e-14);
        assert!((c.alpha_p1 - C64::new(0.8, 0.4) / mu).norm() < 1e-14);
        assert!((c.alpha_p2 - 1.0 / mu).norm() < 1e-14);
        assert!((c.gamma2_tilde - 0.01 / mu).norm() < 1e-14);
        assert!((c.xi_p1 - C64::new(80.0, 40.0)).norm() < 1e-12);
        assert_eq!(c.gamma_p1, C64::new(1.0, -0.5));
    }

    #[test]
    fn all_zero_controls_rejected_without_spin_decay() {
        let r = derive_coeffs(&params(), &Detunings::default(), &Rabi::ZERO);
        assert!(matches!(r, Err(Error::DegenerateCoefficients)));
        let mut p = params();
        p.gamma2 = 0.1;
        let c = derive_coeffs(&p, &Detunings::default(), &Rabi::ZERO).unwrap();
        assert_eq!(c.gamma2_tilde, C64::new(1.0, 0.0));
    }

    #[test]
    fn invalid_params_name_the_field() {
        let mut p = params();
        p.gamma3 = -1.0;
        match p.validate() {
            Err(Error::InvalidParams { field, .. }) => assert_eq!(field, "gamma3"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn adiabaticity_margins() {
        let det = Detunings {
            delta_p1: 5.0,
            ..Default::default()
        };
        let s = ControlSchedule::constant(Rabi::new(1.0, 0.0, 0.0), 0.0, 1.0).unwrap();
        let r = adiabaticity_report(&params(), &det, &s, 10.0).unwrap();
        let find = |n: &str| r.margins.iter().find(|m| m.name == n).unwrap().clone();
        assert_eq!(find("gamma3*dt").value, Some(10.0));
        assert_eq!(find("|delta_p1|*dt").value, Some(50.0));
        assert_eq!(find("|delta_m1|*dt").flag, MarginFlag::NotApplicable);
        // |gamma_p1| dt with gamma_p1 = 1 - 5i
        let g = C64::new(1.0, -5.0).norm() * 10.0;
        assert!((g - 50.990195).abs() < 1e-6);
        let r = adiabaticity_report(&params(), &det, &s, 100.0).unwrap();
        assert_eq!(find("gamma3*dt").flag, MarginFlag::Pass);
        assert_eq!(r.worst(), MarginFlag::Pass);
        let r = adiabaticity_report(&params(), &det, &s, 2.0).unwrap();
        assert_eq!(r.worst(), MarginFlag::Fail);
    }
}
