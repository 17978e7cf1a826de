//! Control-schedule builders for the standard experiments and their
//! scenario-level scorecards.

mod score;

pub use score::{evaluate, photon_number, Check, Score, Scorecard};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::{
    energy_ratio, group_velocity, predicted_pulse_length, regime_b_amplification, spreading_rate,
    stationary_backward_rabi, stationary_lifetime,
};
use crate::error::{Error, Result};
use crate::model::{Channel, ControlSchedule, Detunings, GaussianPulse, MediumParams, Rabi, Segment};

/// Largest switch ramp as a fraction of the predicted stationary lifetime.
pub const SWITCH_FRACTION: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Constant forward controls.
    SlowLight,
    /// Slow light, then ramp the backward control to the stationary value.
    TrapAndHold,
    /// Trap and hold, then switch to the `+2` control alone.
    ConvertForward,
    /// Trap and hold, then switch to the `-1` control alone.
    ConvertBackward,
    /// Two-color hold (no `+2` control), then switch to the `-1` control alone.
    ReleaseBackward,
    /// Trap and hold with the `+2` control off throughout.
    TwoColorBaseline,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::SlowLight,
        ScenarioKind::TrapAndHold,
        ScenarioKind::ConvertForward,
        ScenarioKind::ConvertBackward,
        ScenarioKind::ReleaseBackward,
        ScenarioKind::TwoColorBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::SlowLight => "slow_light",
            ScenarioKind::TrapAndHold => "trap_and_hold",
            ScenarioKind::ConvertForward => "convert_forward",
            ScenarioKind::ConvertBackward => "convert_backward",
            ScenarioKind::ReleaseBackward => "release_backward",
            ScenarioKind::TwoColorBaseline => "two_color_baseline",
        }
    }

    fn two_color(self) -> bool {
        matches!(self, ScenarioKind::ReleaseBackward | ScenarioKind::TwoColorBaseline)
    }

    fn holds(self) -> bool {
        self != ScenarioKind::SlowLight
    }

    fn released(self) -> Option<Channel> {
        match self {
            ScenarioKind::ConvertForward => Some(Channel::P2),
            ScenarioKind::ConvertBackward | ScenarioKind::ReleaseBackward => Some(Channel::M1),
            _ => None,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidScenario(format!("unknown scenario `{s}`")))
    }
}

/// Phase durations. Phases run in the order free, ramp, hold, switch,
/// release; unused phases are ignored by the scenarios that lack them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timings {
    #[serde(default)]
    pub start: f64,
    /// Slow-light propagation under the forward control alone.
    #[serde(default)]
    pub free: f64,
    /// Ramp into the stationary configuration (only used after a free phase).
    #[serde(default)]
    pub ramp: f64,
    #[serde(default)]
    pub hold: f64,
    /// Ramp from the stationary to the released configuration.
    #[serde(default)]
    pub switch: f64,
    #[serde(default)]
    pub release: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    Free,
    Ramp,
    Hold,
    Switch,
    Release,
}

impl PhaseKind {
    pub fn name(self) -> &'static str {
        match self {
            PhaseKind::Free => "free",
            PhaseKind::Ramp => "ramp",
            PhaseKind::Hold => "hold",
            PhaseKind::Switch => "switch",
            PhaseKind::Release => "release",
        }
    }

    /// Whether the controls are constant throughout the phase.
    pub fn is_steady(self) -> bool {
        matches!(self, PhaseKind::Free | PhaseKind::Hold | PhaseKind::Release)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Phase {
    pub kind: PhaseKind,
    pub start: f64,
    pub end: f64,
    /// Controls at the end of the phase.
    pub amps: Rabi,
    pub velocity: f64,
    /// Predicted `d l²/dt` at the end-of-phase controls.
    pub spreading_rate: f64,
}

impl Phase {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReleasePrediction {
    pub channel: Channel,
    pub velocity: f64,
    /// Final peak amplitude relative to the initial probe amplitude.
    pub amplitude_ratio: f64,
    /// Released-pulse energy relative to the initial probe energy.
    pub energy_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expectations {
    pub final_length: f64,
    /// Predicted stationary lifetime at the hold controls.
    pub lifetime: Option<f64>,
    pub release: Option<ReleasePrediction>,
    /// Regime-B amplification of backward-detuning errors at the hold controls.
    pub amplification: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub params: MediumParams,
    pub det: Detunings,
    pub pulse: GaussianPulse,
    pub timings: Timings,
    pub schedule: ControlSchedule,
    pub hold_amps: Option<Rabi>,
    pub phases: Vec<Phase>,
    pub expected: Expectations,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn phase(&self, kind: PhaseKind) -> Option<&Phase> {
        self.phases.iter().find(|p| p.kind == kind)
    }

    pub fn start(&self) -> f64 {
        self.schedule.start()
    }

    pub fn end(&self) -> f64 {
        self.schedule.end()
    }
}

fn bad<T>(m: impl Into<String>) -> Result<T> {
    Err(Error::InvalidScenario(m.into()))
}

fn check_duration(name: &str, v: f64, required: bool) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return bad(format!("{name} duration must be non-negative"));
    }
    if required && v == 0.0 {
        return bad(format!("{name} duration must be positive"));
    }
    Ok(())
}

/// Assemble the schedule and predictions of a named protocol.
///
/// `base` supplies the forward controls; the backward control during the
/// hold is always set by the stationary condition, and released pulses use
/// `base.p2` (forward conversion) or the hold value of the backward control.
pub fn build(
    kind: ScenarioKind,
    params: &MediumParams,
    det: &Detunings,
    base: &Rabi,
    timings: &Timings,
    pulse: &GaussianPulse,
) -> Result<Scenario> {
    params.validate()?;
    det.validate()?;
    base.validate()?;
    pulse.validate()?;
    let t = timings;
    if !t.start.is_finite() {
        return bad("start time must be finite");
    }
    if base.p1 <= 0.0 {
        return bad("forward control must be on to carry the probe");
    }
    let released = kind.released();
    check_duration("free", t.free, !kind.holds())?;
    check_duration("hold", t.hold, kind.holds())?;
    check_duration("ramp", t.ramp, kind.holds() && t.free > 0.0)?;
    check_duration("switch", t.switch, released.is_some())?;
    check_duration("release", t.release, released.is_some())?;
    if kind == ScenarioKind::ConvertForward && base.p2 <= 0.0 {
        return bad("forward conversion needs a nonzero +2 control");
    }

    let hold_amps = kind.holds().then(|| {
        let p2 = if kind.two_color() { 0.0 } else { base.p2 };
        Rabi::new(base.p1, p2, stationary_backward_rabi(params.g1, params.g2, base.p1, p2))
    });
    let release_amps = released.map(|ch| match ch {
        Channel::P2 => Rabi::new(0.0, base.p2, 0.0),
        _ => Rabi::new(0.0, 0.0, hold_amps.map_or(0.0, |h| h.m1)),
    });

    let probe = Rabi::new(base.p1, 0.0, 0.0);
    let mut phases: Vec<(PhaseKind, f64, Rabi)> = Vec::new();
    let mut segments = Vec::new();
    let mut clock = t.start;
    let initial = match (kind.holds(), t.free > 0.0) {
        (false, _) => *base,
        (true, true) => probe,
        (true, false) => hold_amps.expect("holding scenarios have hold controls"),
    };
    let mut push = |kind: PhaseKind, dur: f64, amps: Rabi, clock: &mut f64| {
        phases.push((kind, dur, amps));
        *clock += dur;
    };
    if kind.holds() {
        let hold = hold_amps.expect("holding scenarios have hold controls");
        if t.free > 0.0 {
            segments.push(Segment {
                start: clock,
                end: clock + t.free,
                target: probe,
                ramp: t.free,
            });
            push(PhaseKind::Free, t.free, probe, &mut clock);
            segments.push(Segment {
                start: clock,
                end: clock + t.ramp + t.hold,
                target: hold,
                ramp: t.ramp,
            });
            push(PhaseKind::Ramp, t.ramp, hold, &mut clock);
        } else {
            segments.push(Segment {
                start: clock,
                end: clock + t.hold,
                target: hold,
                ramp: t.hold,
            });
        }
        push(PhaseKind::Hold, t.hold, hold, &mut clock);
        if let Some(rel) = release_amps {
            segments.push(Segment {
                start: clock,
                end: clock + t.switch + t.release,
                target: rel,
                ramp: t.switch,
            });
            push(PhaseKind::Switch, t.switch, rel, &mut clock);
            push(PhaseKind::Release, t.release, rel, &mut clock);
        }
    } else {
        segments.push(Segment {
            start: clock,
            end: clock + t.free,
            target: *base,
            ramp: t.free,
        });
        push(PhaseKind::Free, t.free, *base, &mut clock);
    }
    let schedule = ControlSchedule::new(initial, segments)?;

    let mut start = t.start;
    let mut built = Vec::with_capacity(phases.len());
    for (pk, dur, amps) in phases {
        built.push(Phase {
            kind: pk,
            start,
            end: start + dur,
            amps,
            velocity: group_velocity(params, det, &amps)?.v,
            spreading_rate: spreading_rate(params, det, &amps)?,
        });
        start += dur;
    }

    let lifetime = match hold_amps {
        Some(h) => Some(stationary_lifetime(params, det, &h, pulse.length)?),
        None => None,
    };
    if let (Some(life), true) = (lifetime, released.is_some()) {
        if life.is_finite() && t.switch > SWITCH_FRACTION * life {
            return bad(format!(
                "switch ramp {} exceeds {SWITCH_FRACTION} of the stationary lifetime {life:.4e}",
                t.switch
            ));
        }
    }
    let t0 = schedule.start();
    let t_end = schedule.end();
    let final_length = predicted_pulse_length(params, det, &schedule, pulse.length, t0, t_end)?;
    let release = match (released, release_amps) {
        (Some(ch), Some(rel)) => Some(ReleasePrediction {
            channel: ch,
            velocity: group_velocity(params, det, &rel)?.v,
            amplitude_ratio: rel.get(ch) * params.g1 / (initial.p1 * params.coupling(ch)) * pulse.length / final_length,
            energy_ratio: energy_ratio(params, pulse.length, final_length, ch)?,
        }),
        _ => None,
    };
    let amplification = hold_amps
        .filter(|h| h.p2 > 0.0)
        .map(|h| regime_b_amplification(params.g1, params.g2, &h))
        .transpose()?;
    Ok(Scenario {
        kind,
        params: *params,
        det: *det,
        pulse: *pulse,
        timings: *timings,
        schedule,
        hold_amps,
        phases: built,
        expected: Expectations {
            final_length,
            lifetime,
            release,
            amplification,
        },
    })
}
