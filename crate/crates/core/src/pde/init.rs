use serde::{Deserialize, Serialize};

use super::adiabatic::slave_spectrum;
use super::{apply_mask, phase_mask};
use crate::error::{Error, Result};
use crate::fft::Transform;
use crate::model::{complex_xi, polariton_denominators, Detunings, FieldState, GaussianPulse, MediumParams, Rabi, SimGrid, C64};

/// How the non-probe envelopes of an initial state are populated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Every envelope in the quasi-static mode of the given controls.
    #[default]
    Locked,
    /// Spin coherence and `P+` locked to the probe under `Ω+1` alone; the
    /// other two fields and their coherences start at zero.
    ProbeOnly,
}

/// All envelopes slaved quasi-statically to the spin coherence `p12`.
pub fn slaved_state(
    p12: &[C64],
    grid: &SimGrid,
    params: &MediumParams,
    det: &Detunings,
    amps: &Rabi,
    t: f64,
) -> Result<FieldState> {
    params.validate()?;
    det.validate()?;
    amps.validate()?;
    grid.validate()?;
    if p12.len() != grid.n_z {
        return Err(Error::InvalidInitialCondition("spin coherence length differs from grid".into()));
    }
    let mut tr = Transform::new(grid.n_z);
    let mut hat = p12.to_vec();
    tr.forward(&mut hat);
    let s = slave_spectrum(&hat, grid, params, det, amps, &mut tr, t);
    s.validate()?;
    Ok(s)
}

/// A Gaussian `+1` probe with the spin coherence that carries it under the
/// forward control, and the remaining envelopes set per `mode`.
pub fn initial_state(
    pulse: &GaussianPulse,
    grid: &SimGrid,
    params: &MediumParams,
    det: &Detunings,
    amps: &Rabi,
    t0: f64,
    mode: InitMode,
) -> Result<FieldState> {
    pulse.validate()?;
    params.validate()?;
    det.validate()?;
    amps.validate()?;
    grid.validate()?;
    if amps.p1 <= 0.0 {
        return Err(Error::InvalidInitialCondition(
            "forward control must be on to carry the probe".into(),
        ));
    }
    let mut a: Vec<C64> = (0..grid.n_z).map(|j| C64::new(pulse.eval(grid.z(j)), 0.0)).collect();
    apply_mask(&mut a, &phase_mask(grid, params.k_o, 1.0));
    let mut tr = Transform::new(grid.n_z);
    tr.forward(&mut a);
    let xi = complex_xi(params, det);
    let hat: Vec<C64> = grid
        .wavenumbers()
        .iter()
        .zip(&a)
        .map(|(&k, &v)| -(params.g1 / amps.p1) * polariton_denominators(&xi, params.k_o, k)[0] * v)
        .collect();
    let slaved = match mode {
        InitMode::Locked => *amps,
        InitMode::ProbeOnly => Rabi::new(amps.p1, 0.0, 0.0),
    };
    let s = slave_spectrum(&hat, grid, params, det, &slaved, &mut tr, t0);
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Boundary;

    fn setup() -> (MediumParams, SimGrid, GaussianPulse) {
        let p = MediumParams {
            k_o: 3.0,
            ..MediumParams::code_units(50.0)
        };
        let g = SimGrid::new(-1.0, 1.0, 512, Boundary::Periodic).unwrap();
        let pulse = GaussianPulse {
            amplitude: 0.7,
            center: 0.1,
            length: 0.1,
        };
        (p, g, pulse)
    }

    #[test]
    fn probe_is_reproduced() {
        let (p, g, pulse) = setup();
        let det = Detunings {
            delta_p1: 0.2,
            delta_p2: 0.0,
            delta_m1: -0.1,
        };
        for mode in [InitMode::Locked, InitMode::ProbeOnly] {
            let s = initial_state(&pulse, &g, &p, &det, &Rabi::new(1.0, 0.5, 0.8), 0.0, mode).unwrap();
            for j in 0..g.n_z {
                assert!((s.a_p1[j].re - pulse.eval(g.z(j))).abs() < 1e-12);
                assert!(s.a_p1[j].im.abs() < 1e-12);
            }
            let other = s.a_p2.iter().chain(&s.a_m1).map(|x| x.norm()).fold(0.0, f64::max);
            match mode {
                InitMode::Locked => assert!(other > 0.1),
                InitMode::ProbeOnly => assert_eq!(other, 0.0),
            }
        }
    }

    #[test]
    fn dense_limit_spin_coherence() {
        // Far inside the medium P12 ≈ -(g1/Ω) A+1.
        let (mut p, g, pulse) = setup();
        p.k_o = 0.0;
        p.n = 1e8;
        let s = initial_state(&pulse, &g, &p, &Detunings::default(), &Rabi::new(2.0, 0.0, 0.0), 0.0, InitMode::Locked)
            .unwrap();
        for j in 0..g.n_z {
            assert!((s.p12[j] + s.a_p1[j] * 0.5).norm() < 1e-6);
        }
    }

    #[test]
    fn rejects_dark_probe() {
        let (p, g, pulse) = setup();
        let r = initial_state(&pulse, &g, &p, &Detunings::default(), &Rabi::new(0.0, 1.0, 0.0), 0.0, InitMode::Locked);
        assert!(matches!(r, Err(Error::InvalidInitialCondition(_))));
    }
}
