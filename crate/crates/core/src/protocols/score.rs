use serde::Serialize;

use super::{PhaseKind, Scenario};
use crate::analytic::gaussian_prediction;
use crate::error::{Error, Result};
use crate::model::{Channel, FieldState, MediumParams, C64};
use crate::pde::{Diagnostics, Trajectory};

/// Leading fraction of a steady phase excluded from slope fits.
const SETTLE_FRACTION: f64 = 0.1;
const VELOCITY_TOL: f64 = 0.05;
const WIDTH_TOL: f64 = 0.10;
const AMPLITUDE_TOL: f64 = 0.05;
const ENERGY_TOL: f64 = 0.10;
const FIDELITY_MIN: f64 = 0.95;
/// Allowed hold-phase drift in units of the initial pulse length.
const DRIFT_FRACTION: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `|m - p| ≤ tol·|p|`.
    Relative,
    /// `|m - p| ≤ tol`.
    Absolute,
    /// `m ≥ tol`.
    AtLeast,
    /// Reported only.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Score {
    pub name: String,
    pub measured: Option<f64>,
    pub predicted: Option<f64>,
    pub check: Check,
    pub tolerance: f64,
    /// `None` when the measurement is undefined or informational.
    pub passed: Option<bool>,
}

impl Score {
    pub fn new(name: impl Into<String>, measured: Option<f64>, predicted: Option<f64>, check: Check, tolerance: f64) -> Self {
        let passed = match (check, measured, predicted) {
            (Check::Info, _, _) => None,
            (Check::AtLeast, Some(m), _) => Some(m >= tolerance),
            (Check::Relative, Some(m), Some(p)) => Some((m - p).abs() <= tolerance * p.abs()),
            (Check::Absolute, Some(m), Some(p)) => Some((m - p).abs() <= tolerance),
            _ => None,
        };
        Score {
            name: name.into(),
            measured,
            predicted,
            check,
            tolerance,
            passed,
        }
    }

    pub fn is_undefined(&self) -> bool {
        self.check != Check::Info && self.passed.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scorecard {
    pub scenario: String,
    pub scores: Vec<Score>,
}

impl Scorecard {
    pub fn get(&self, name: &str) -> Option<&Score> {
        self.scores.iter().find(|s| s.name == name)
    }

    /// True when every defined check passed and at least one was defined.
    pub fn all_passed(&self) -> bool {
        let defined: Vec<bool> = self.scores.iter().filter_map(|s| s.passed).collect();
        !defined.is_empty() && defined.iter().all(|&p| p)
    }

    pub fn undefined(&self) -> Vec<&str> {
        self.scores.iter().filter(|s| s.is_undefined()).map(|s| s.name.as_str()).collect()
    }
}

/// Least-squares slope of `y` against `x`; `None` with fewer than three
/// finite points.
pub(crate) fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<_> = pts.iter().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Photon number carried by channel `ch`: `(N g²/(c Ω²)) ∫|A|² dz`, i.e.
/// `∫|Ψ|² dz`. `None` when the control is off.
pub fn photon_number(state: &FieldState, params: &MediumParams, ch: Channel, omega: f64) -> Option<f64> {
    if omega <= 0.0 {
        return None;
    }
    let g = params.coupling(ch);
    let e: f64 = state.field(ch).iter().map(|x| x.norm_sqr()).sum::<f64>() * state.grid.dz();
    Some(params.n * g * g / (params.c * omega * omega) * e)
}

fn window<'a>(tr: &'a Trajectory, t0: f64, t1: f64) -> impl Iterator<Item = &'a Diagnostics> {
    let tol = 1e-9 * (1.0 + t1.abs());
    tr.diagnostics.iter().filter(move |d| d.t >= t0 - tol && d.t <= t1 + tol)
}

fn fidelity(a: &[C64], b: &[C64]) -> Option<f64> {
    let ab: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    (na > 0.0 && nb > 0.0).then(|| ab.norm_sqr() / (na * nb))
}

/// Compare a trajectory with the scenario's predictions.
pub fn evaluate(scenario: &Scenario, trajectory: &Trajectory) -> Result<Scorecard> {
    if trajectory.schedule != scenario.schedule {
        return Err(Error::Mismatch("trajectory was produced from a different schedule".into()));
    }
    let (Some(first), Some(last)) = (trajectory.snapshots.first(), trajectory.snapshots.last()) else {
        return Err(Error::Mismatch("trajectory has no snapshots".into()));
    };
    let tol = 1e-9 * (1.0 + scenario.end().abs());
    if (first.t - scenario.start()).abs() > tol {
        return Err(Error::Mismatch(format!(
            "trajectory starts at {} but the scenario at {}",
            first.t,
            scenario.start()
        )));
    }
    let p = &scenario.params;
    let null = trajectory.diagnostics.first().is_none_or(|d| d.total_energy == 0.0);
    let l_o = scenario.pulse.length;
    let mut scores = Vec::new();
    let scale_v: f64 = Channel::ALL
        .iter()
        .map(|&ch| p.bare_velocity(ch, scenario.schedule.max_amplitude()))
        .sum();

    for ph in &scenario.phases {
        let reached = last.t + tol >= ph.end;
        let name = ph.kind.name();
        if !ph.kind.is_steady() {
            continue;
        }
        let settle = ph.start + SETTLE_FRACTION * ph.duration();
        let pts = |f: &dyn Fn(&Diagnostics) -> Option<f64>| -> Vec<(f64, f64)> {
            window(trajectory, settle, ph.end)
                .filter_map(|d| f(d).map(|y| (d.t, y)))
                .collect()
        };
        let lead = match ph.kind {
            PhaseKind::Release => scenario.expected.release.map_or(Channel::P1, |r| r.channel),
            _ => Channel::P1,
        };
        let undefined = null || !reached;
        match ph.kind {
            PhaseKind::Hold => {
                let active: Vec<Channel> = Channel::ALL.into_iter().filter(|&ch| ph.amps.get(ch) > 0.0).collect();
                let drift = (!undefined)
                    .then(|| {
                        let d: Vec<&Diagnostics> = window(trajectory, ph.start, ph.end).collect();
                        let (a, b) = (d.first()?, d.last()?);
                        active
                            .iter()
                            .map(|&ch| Some(b.field(ch).centroid? - a.field(ch).centroid?))
                            .try_fold(0.0f64, |m, x| x.map(|x| if x.abs() > m.abs() { x } else { m }))
                    })
                    .flatten();
                scores.push(Score::new(
                    "hold_drift",
                    drift,
                    Some(ph.velocity * ph.duration()),
                    Check::Absolute,
                    DRIFT_FRACTION * l_o,
                ));
                let growth = (!undefined)
                    .then(|| fit_slope(&pts(&|d| d.fields[0].gaussian_length().map(|l| l * l))))
                    .flatten();
                scores.push(Score::new(
                    "hold_width_growth",
                    growth,
                    Some(ph.spreading_rate),
                    Check::Relative,
                    WIDTH_TOL,
                ));
                let decay = (!undefined)
                    .then(|| fit_slope(&pts(&|d| (d.total_energy > 0.0).then(|| d.total_energy.ln()))))
                    .flatten();
                scores.push(Score::new("hold_energy_decay_rate", decay.map(|s| -s), None, Check::Info, 0.0));
            }
            _ => {
                let idx = match lead {
                    Channel::P1 => 0,
                    Channel::P2 => 1,
                    Channel::M1 => 2,
                };
                let v = (!undefined).then(|| fit_slope(&pts(&|d| d.fields[idx].centroid))).flatten();
                let tol_v = VELOCITY_TOL * ph.velocity.abs().max(0.1 * scale_v);
                scores.push(Score::new(format!("{name}_velocity"), v, Some(ph.velocity), Check::Absolute, tol_v));
            }
        }
    }

    if let Some(rel) = scenario.expected.release {
        let ch = rel.channel;
        let done = !null && last.t + tol >= scenario.end();
        let peak = done.then(|| last.field(ch).iter().map(|x| x.norm()).fold(0.0, f64::max) / scenario.pulse.amplitude);
        scores.push(Score::new("amplitude_ratio", peak, Some(rel.amplitude_ratio), Check::Relative, AMPLITUDE_TOL));
        let fid = done
            .then(|| {
                let pred = gaussian_prediction(p, &scenario.det, &scenario.schedule, &scenario.pulse, scenario.start(), last.t).ok()?;
                fidelity(&pred.sample(ch, &last.grid), last.field(ch))
            })
            .flatten();
        scores.push(Score::new("overlap_fidelity", fid, None, Check::AtLeast, FIDELITY_MIN));
        let ratio = done
            .then(|| {
                let a0 = scenario.schedule.amplitudes(scenario.start());
                let a1 = scenario.schedule.amplitudes(last.t);
                let w0 = p.omega_p1 * photon_number(first, p, Channel::P1, a0.p1)?;
                let w1 = p.carrier(ch) * photon_number(last, p, ch, a1.get(ch))?;
                (w0 > 0.0).then(|| w1 / w0)
            })
            .flatten();
        scores.push(Score::new("energy_ratio", ratio, Some(rel.energy_ratio), Check::Relative, ENERGY_TOL));
    }

    Ok(Scorecard {
        scenario: scenario.name().to_string(),
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Boundary, Detunings, GaussianPulse, Rabi, SimGrid};
    use crate::pde::{initial_state, run, IntegratorConfig, InitMode, Scheme};
    use crate::protocols::{build, ScenarioKind, Timings};

    #[test]
    fn score_checks() {
        assert_eq!(Score::new("a", Some(1.04), Some(1.0), Check::Relative, 0.05).passed, Some(true));
        assert_eq!(Score::new("a", Some(1.06), Some(1.0), Check::Relative, 0.05).passed, Some(false));
        assert_eq!(Score::new("a", Some(0.2), Some(0.0), Check::Absolute, 0.1).passed, Some(false));
        assert_eq!(Score::new("a", Some(0.96), None, Check::AtLeast, 0.95).passed, Some(true));
        assert!(Score::new("a", None, Some(1.0), Check::Relative, 0.05).is_undefined());
        assert!(!Score::new("a", Some(3.0), None, Check::Info, 0.0).is_undefined());
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        assert!((fit_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert!(fit_slope(&pts[..2]).is_none());
    }

    fn scenario() -> (Scenario, SimGrid) {
        let p = MediumParams::code_units(200.0);
        let pulse = GaussianPulse {
            amplitude: 1.0,
            center: 0.0,
            length: 0.1,
        };
        let t = Timings {
            free: 20.0,
            ..Timings::default()
        };
        let s = build(ScenarioKind::SlowLight, &p, &Detunings::default(), &Rabi::new(1.0, 0.0, 0.0), &t, &pulse).unwrap();
        (s, SimGrid::new(-1.0, 1.0, 256, Boundary::Periodic).unwrap())
    }

    #[test]
    fn slow_light_scorecard() {
        let (s, g) = scenario();
        let init = initial_state(&s.pulse, &g, &s.params, &s.det, &s.schedule.initial(), 0.0, InitMode::Locked).unwrap();
        let cfg = IntegratorConfig::periodic(Scheme::Full, 0.1).with_snapshots(10);
        let tr = run(&init, &s.params, &s.det, &s.schedule, &cfg).unwrap();
        let card = evaluate(&s, &tr).unwrap();
        let v = card.get("free_velocity").unwrap();
        assert_eq!(v.passed, Some(true), "{v:?}");
        assert!(card.all_passed());
    }

    #[test]
    fn null_run_is_undefined() {
        let (s, g) = scenario();
        let cfg = IntegratorConfig::periodic(Scheme::Full, 0.2).with_snapshots(10);
        let tr = run(&FieldState::zeros(g, 0.0), &s.params, &s.det, &s.schedule, &cfg).unwrap();
        let card = evaluate(&s, &tr).unwrap();
        assert!(!card.all_passed());
        assert_eq!(card.undefined(), vec!["free_velocity"]);
        assert!(tr.diagnostics.iter().all(|d| d.total_energy == 0.0));
    }

    #[test]
    fn mismatched_schedule_is_rejected() {
        let (s, g) = scenario();
        let other = crate::model::ControlSchedule::constant(Rabi::new(0.5, 0.0, 0.0), 0.0, 20.0).unwrap();
        let cfg = IntegratorConfig::periodic(Scheme::Full, 0.2).with_snapshots(10);
        let tr = run(&FieldState::zeros(g, 0.0), &s.params, &s.det, &other, &cfg).unwrap();
        assert!(matches!(evaluate(&s, &tr), Err(Error::Mismatch(_))));
    }
}
