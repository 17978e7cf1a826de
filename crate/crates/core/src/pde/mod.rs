//! Direct time integration of the light–atom equations on a 1D grid.
//!
//! Two schemes are available. `Full` evolves all seven envelopes
//! (three fields, three optical coherences, the spin coherence). `Adiabatic`
//! evolves only the spin coherence and slaves the rest to it
//! quasi-statically. Either runs on a periodic domain with spectral
//! derivatives or on an open domain with inflow boundaries.

mod adiabatic;
mod convergence;
mod diagnostics;
mod full;
mod init;

pub use convergence::{check_convergence, refine_against, relative_l2_change, ConvergenceReport, CONVERGENCE_TOLERANCE};
pub use diagnostics::{diagnostics, weighted_norm, Diagnostics, Moments};
pub use init::{initial_state, slaved_state, InitMode};

use serde::{Deserialize, Serialize};

use crate::analytic::group_velocity;
use crate::error::{Error, Result};
use crate::model::{
    adiabaticity_report, optical_rates, Boundary, ControlSchedule, Detunings, FieldState, MarginFlag,
    MediumParams, SimGrid, C64, I,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Full,
    Adiabatic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialMethod {
    SpectralPeriodic,
    UpwindOpen,
}

impl SpatialMethod {
    pub fn boundary(self) -> Boundary {
        match self {
            SpatialMethod::SpectralPeriodic => Boundary::Periodic,
            SpatialMethod::UpwindOpen => Boundary::OpenInflow,
        }
    }
}

/// Temporal Gaussian `A+1(t, z_min) = amplitude·exp(-(t - center)²/(2 duration²))`
/// fed through the left boundary of an open domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub amplitude: f64,
    pub center_time: f64,
    pub duration: f64,
}

impl Injection {
    pub fn value(&self, t: f64) -> C64 {
        let x = (t - self.center_time) / self.duration;
        C64::new(self.amplitude * (-0.5 * x * x).exp(), 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub spatial: SpatialMethod,
    /// Peak absorption rate of the outflow sponge layers (open domains only).
    #[serde(default)]
    pub dissipation: f64,
    /// Record a snapshot every this many steps; the final state is always kept.
    pub snapshot_every: usize,
    #[serde(default)]
    pub injection: Option<Injection>,
}

/// Fraction of the domain occupied by each sponge layer.
pub const SPONGE_WIDTH: f64 = 0.05;
/// `dt·rate` bound for the full scheme.
pub const STIFF_BOUND: f64 = 0.2;
/// Courant number bound for the open-domain advection.
pub const CFL_LIMIT: f64 = 0.5;
/// Required resolution of the phase masks, `k_o·dz`.
pub const PHASE_MASK_LIMIT: f64 = std::f64::consts::PI / 8.0;

impl IntegratorConfig {
    pub fn periodic(scheme: Scheme, dt: f64) -> Self {
        IntegratorConfig {
            scheme,
            dt,
            spatial: SpatialMethod::SpectralPeriodic,
            dissipation: 0.0,
            snapshot_every: 1,
            injection: None,
        }
    }

    pub fn open(scheme: Scheme, dt: f64, dissipation: f64) -> Self {
        IntegratorConfig {
            spatial: SpatialMethod::UpwindOpen,
            dissipation,
            ..Self::periodic(scheme, dt)
        }
    }

    pub fn with_snapshots(self, every: usize) -> Self {
        IntegratorConfig {
            snapshot_every: every,
            ..self
        }
    }

    /// Largest rate that bounds `dt` for this configuration.
    pub fn stiff_rate(&self, params: &MediumParams, det: &Detunings, schedule: &ControlSchedule, grid: &SimGrid) -> f64 {
        let coupling = params.g1.max(params.g2) * params.n.sqrt() * grid.dz() / params.c;
        let mut rate = schedule.max_amplitude().max(coupling);
        if self.scheme == Scheme::Full && self.spatial == SpatialMethod::UpwindOpen {
            rate = optical_rates(params, det)
                .iter()
                .map(|g| g.norm())
                .fold(rate, f64::max);
        }
        rate
    }

    pub fn validate(&self, params: &MediumParams, det: &Detunings, schedule: &ControlSchedule, grid: &SimGrid) -> Result<()> {
        params.validate()?;
        det.validate()?;
        grid.validate()?;
        let bad = |m: String| Err(Error::InvalidIntegrator(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive".into());
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be at least 1".into());
        }
        if !(self.dissipation >= 0.0 && self.dissipation.is_finite()) {
            return bad("dissipation must be non-negative".into());
        }
        if self.spatial.boundary() != grid.boundary {
            return bad(format!("{:?} derivatives need a {:?} grid", self.spatial, self.spatial.boundary()));
        }
        if let Some(inj) = &self.injection {
            if self.spatial != SpatialMethod::UpwindOpen {
                return bad("injection needs an open domain".into());
            }
            if !(inj.duration > 0.0 && inj.amplitude.is_finite() && inj.center_time.is_finite()) {
                return bad("injection needs a positive duration".into());
            }
        }
        if params.k_o.abs() * grid.dz() > PHASE_MASK_LIMIT {
            return bad(format!(
                "k_o·dz = {:.3e} exceeds {:.3e}; refine the grid",
                params.k_o.abs() * grid.dz(),
                PHASE_MASK_LIMIT
            ));
        }
        let rate = self.stiff_rate(params, det, schedule, grid);
        if self.scheme == Scheme::Full && self.dt * rate > STIFF_BOUND {
            return bad(format!("dt = {} exceeds {STIFF_BOUND}/{rate:.4e}", self.dt));
        }
        if self.spatial == SpatialMethod::UpwindOpen {
            let courant = params.c * self.dt / grid.dz();
            if self.scheme == Scheme::Full && courant > CFL_LIMIT {
                return bad(format!("Courant number {courant:.3} exceeds {CFL_LIMIT}"));
            }
            if self.scheme == Scheme::Adiabatic {
                let r = adiabatic::relaxation_bound(params, det, schedule);
                if self.dt * r > 2.0 {
                    return bad(format!("dt = {} too large for relaxation rate {r:.4e}", self.dt));
                }
            }
        }
        if let Some(ramp) = schedule.fastest_ramp() {
            if self.dt > ramp / 4.0 {
                return bad(format!("dt = {} does not resolve a control ramp of {ramp}", self.dt));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<FieldState>,
    pub diagnostics: Vec<Diagnostics>,
    pub warnings: Vec<String>,
    pub schedule: ControlSchedule,
    pub config: IntegratorConfig,
}

impl Trajectory {
    pub fn final_state(&self) -> &FieldState {
        self.snapshots.last().expect("trajectory holds at least the initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Snapshot closest in time to `t`.
    pub fn nearest(&self, t: f64) -> &FieldState {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("trajectory holds at least the initial state")
    }
}

/// Interface shared by the four steppers.
pub(crate) trait Stepper {
    /// Advance the internal state from `t` to `t + dt`.
    fn advance(&mut self, t: f64, dt: f64) -> Result<()>;
    /// Materialize the current state as grid envelopes.
    fn state(&mut self, t: f64) -> FieldState;
    fn is_finite(&self) -> bool;
}

fn make_stepper<'a>(
    initial: &FieldState,
    params: &'a MediumParams,
    det: &'a Detunings,
    schedule: &'a ControlSchedule,
    config: &IntegratorConfig,
) -> Result<Box<dyn Stepper + 'a>> {
    Ok(match (config.scheme, config.spatial) {
        (Scheme::Full, SpatialMethod::SpectralPeriodic) => {
            Box::new(full::PeriodicFull::new(initial, params, det, schedule))
        }
        (Scheme::Full, SpatialMethod::UpwindOpen) => Box::new(full::OpenFull::new(
            initial,
            params,
            det,
            schedule,
            config.dissipation,
            config.injection,
        )),
        (Scheme::Adiabatic, SpatialMethod::SpectralPeriodic) => {
            Box::new(adiabatic::PeriodicAdiabatic::new(initial, params, det, schedule)?)
        }
        (Scheme::Adiabatic, SpatialMethod::UpwindOpen) => Box::new(adiabatic::OpenAdiabatic::new(
            initial,
            params,
            det,
            schedule,
            config.injection,
        )),
    })
}

/// Warnings for adiabaticity margins below the pass threshold.
fn adiabaticity_warnings(initial: &FieldState, params: &MediumParams, det: &Detunings, schedule: &ControlSchedule) -> Vec<String> {
    let d = diagnostics(initial);
    let Some(l) = d.spin.gaussian_length().or(d.fields[0].gaussian_length()) else {
        return Vec::new();
    };
    let span = schedule.end() - schedule.start();
    let v = schedule
        .breakpoints()
        .iter()
        .filter_map(|&t| group_velocity(params, det, &schedule.amplitudes(t)).ok())
        .map(|e| e.v.abs())
        .fold(0.0, f64::max);
    let duration = if v > 0.0 { (l / v).min(span) } else { span };
    match adiabaticity_report(params, det, schedule, duration) {
        Ok(r) => r
            .margins
            .iter()
            .filter(|m| matches!(m.flag, MarginFlag::Warn | MarginFlag::Fail))
            .map(|m| format!("adiabaticity margin {} = {:.3e} ({:?})", m.name, m.value.unwrap_or(f64::NAN), m.flag))
            .collect(),
        Err(e) => vec![format!("adiabaticity report unavailable: {e}")],
    }
}

/// Integrate from `initial.t` to the end of the schedule.
pub fn run(
    initial: &FieldState,
    params: &MediumParams,
    det: &Detunings,
    schedule: &ControlSchedule,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    run_until(initial, params, det, schedule, config, schedule.end())
}

/// Integrate from `initial.t` to `t_end` with a uniform step no larger than
/// `config.dt`.
pub fn run_until(
    initial: &FieldState,
    params: &MediumParams,
    det: &Detunings,
    schedule: &ControlSchedule,
    config: &IntegratorConfig,
    t_end: f64,
) -> Result<Trajectory> {
    initial.validate()?;
    config.validate(params, det, schedule, &initial.grid)?;
    let t0 = initial.t;
    if !(t_end > t0) {
        return Err(Error::InvalidSchedule(format!("end time {t_end} must exceed start time {t0}")));
    }
    if !schedule.covers(t0, t_end) {
        return Err(Error::InvalidSchedule(format!(
            "schedule [{}, {}] does not span [{t0}, {t_end}]",
            schedule.start(),
            schedule.end()
        )));
    }
    let mut warnings = Vec::new();
    if config.scheme == Scheme::Adiabatic {
        warnings = adiabaticity_warnings(initial, params, det, schedule);
    }
    let steps = ((t_end - t0) / config.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = (t_end - t0) / steps as f64;
    let mut stepper = make_stepper(initial, params, det, schedule, config)?;
    let mut snapshots = vec![initial.clone()];
    let mut last_good = initial.clone();
    for n in 0..steps {
        let t = t0 + n as f64 * dt;
        stepper.advance(t, dt)?;
        let t_next = if n + 1 == steps { t_end } else { t0 + (n + 1) as f64 * dt };
        if !stepper.is_finite() {
            return Err(Error::NumericalAbort {
                t: t_next,
                last_good: Box::new(last_good),
            });
        }
        if (n + 1) % config.snapshot_every == 0 || n + 1 == steps {
            let s = stepper.state(t_next);
            last_good = s.clone();
            snapshots.push(s);
        }
    }
    let diagnostics = snapshots.iter().map(diagnostics).collect();
    Ok(Trajectory {
        snapshots,
        diagnostics,
        warnings,
        schedule: schedule.clone(),
        config: *config,
    })
}

fn single_step(
    state: &FieldState,
    params: &MediumParams,
    det: &Detunings,
    schedule: &ControlSchedule,
    dt: f64,
    scheme: Scheme,
) -> Result<FieldState> {
    state.validate()?;
    let spatial = match state.grid.boundary {
        Boundary::Periodic => SpatialMethod::SpectralPeriodic,
        Boundary::OpenInflow => SpatialMethod::UpwindOpen,
    };
    let config = IntegratorConfig {
        scheme,
        dt,
        spatial,
        dissipation: 0.0,
        snapshot_every: 1,
        injection: None,
    };
    config.validate(params, det, schedule, &state.grid)?;
    let mut stepper = make_stepper(state, params, det, schedule, &config)?;
    stepper.advance(state.t, dt)?;
    if !stepper.is_finite() {
        return Err(Error::NumericalAbort {
            t: state.t + dt,
            last_good: Box::new(state.clone()),
        });
    }
    Ok(stepper.state(state.t + dt))
}

/// One step of the full seven-envelope system. The boundary type of the
/// state's grid selects spectral or upwind derivatives.
pub fn step_full(
    state: &FieldState,
    params: &MediumParams,
    det: &Detunings,
    schedule: &ControlSchedule,
    dt: f64,
) -> Result<FieldState> {
    single_step(state, params, det, schedule, dt, Scheme::Full)
}

/// One step of the quasi-static system. Only the spin coherence of `state`
/// is used; the returned fields and optical coherences are slaved to it.
pub fn step_adiabatic(
    state: &FieldState,
    params: &MediumParams,
    det: &Detunings,
    schedule: &ControlSchedule,
    dt: f64,
) -> Result<FieldState> {
    single_step(state, params, det, schedule, dt, Scheme::Adiabatic)
}

/// `e^{sign·i·k_o·z}` on the grid, or `None` when `k_o = 0`.
pub(crate) fn phase_mask(grid: &SimGrid, k_o: f64, sign: f64) -> Option<Vec<C64>> {
    (k_o != 0.0).then(|| (0..grid.n_z).map(|j| (sign * I * k_o * grid.z(j)).exp()).collect())
}

pub(crate) fn apply_mask(v: &mut [C64], mask: &Option<Vec<C64>>) {
    if let Some(m) = mask {
        for (x, p) in v.iter_mut().zip(m) {
            *x *= p;
        }
    }
}

pub(crate) fn all_finite(v: &[C64]) -> bool {
    v.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}
