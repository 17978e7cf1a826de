//! Run configuration: a TOML file with one table per concern.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tricolor::analytic::DispersionModel;
use tricolor::model::{ControlSchedule, Detunings, GaussianPulse, MediumParams, Rabi, SimGrid};
use tricolor::pde::{Injection, IntegratorConfig, Scheme, SpatialMethod};
use tricolor::protocols::{build, Scenario, ScenarioKind, Timings};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub medium: Medium,
    #[serde(default)]
    pub detunings: Detunings,
    /// Base control amplitudes; scenarios derive their phases from these.
    #[serde(default)]
    pub controls: Rabi,
    pub pulse: Pulse,
    pub grid: Grid,
    pub integrator: Integrator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSection>,
    #[serde(default)]
    pub timings: Timings,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: Output,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<DispersionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Medium parameters; omitted keys take code-unit values with `n = 1000`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Medium {
    pub n: f64,
    pub g1: f64,
    pub g2: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    pub c: f64,
    pub k_o: f64,
    pub omega_p1: f64,
    pub omega_p2: f64,
    pub omega_m1: f64,
}

impl Default for Medium {
    fn default() -> Self {
        MediumParams::code_units(1000.0).into()
    }
}

impl From<MediumParams> for Medium {
    fn from(p: MediumParams) -> Self {
        Medium {
            n: p.n,
            g1: p.g1,
            g2: p.g2,
            gamma2: p.gamma2,
            gamma3: p.gamma3,
            gamma4: p.gamma4,
            c: p.c,
            k_o: p.k_o,
            omega_p1: p.omega_p1,
            omega_p2: p.omega_p2,
            omega_m1: p.omega_m1,
        }
    }
}

impl From<Medium> for MediumParams {
    fn from(m: Medium) -> Self {
        MediumParams {
            n: m.n,
            g1: m.g1,
            g2: m.g2,
            gamma2: m.gamma2,
            gamma3: m.gamma3,
            gamma4: m.gamma4,
            c: m.c,
            k_o: m.k_o,
            omega_p1: m.omega_p1,
            omega_p2: m.omega_p2,
            omega_m1: m.omega_m1,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub center: f64,
    pub length: f64,
}

impl From<Pulse> for GaussianPulse {
    fn from(p: Pulse) -> Self {
        GaussianPulse {
            amplitude: p.amplitude,
            center: p.center,
            length: p.length,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub z_min: f64,
    pub z_max: f64,
    pub n_z: usize,
}

fn full() -> Scheme {
    Scheme::Full
}

fn spectral() -> SpatialMethod {
    SpatialMethod::SpectralPeriodic
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integrator {
    #[serde(default = "full")]
    pub scheme: Scheme,
    pub dt: f64,
    #[serde(default = "spectral")]
    pub spatial: SpatialMethod,
    #[serde(default)]
    pub dissipation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injection: Option<Injection>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: ScenarioKind,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    /// Every envelope in the quasi-static mode of the initial controls.
    #[default]
    Locked,
    /// Only the probe and the coherences it drives.
    ProbeOnly,
    /// All envelopes zero; light enters through an injection.
    Empty,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Duration of a constant-control run; ignored when a scenario is set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    pub initial: Initial,
    /// Seed for randomized sweeps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Steps between recorded snapshots.
    pub every: usize,
    /// Grid points between rows of the snapshot file.
    pub z_stride: usize,
}

impl Default for Output {
    fn default() -> Self {
        Output {
            dir: None,
            every: 10,
            z_stride: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSection {
    pub k_min: f64,
    pub k_max: f64,
    pub samples: usize,
    #[serde(default)]
    pub model: DispersionModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Dotted path of a numeric key, e.g. `detunings.delta_p2`.
    pub key: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    /// Draw `count` uniform values from `[start, stop]` with `run.seed`
    /// instead of an even spacing.
    #[serde(default)]
    pub random: bool,
}

/// Schedule and, when a scenario is selected, the scenario built on it.
pub struct Plan {
    pub schedule: ControlSchedule,
    pub scenario: Option<Scenario>,
}

/// Line of the first `key = ...` assignment in `source`, 1-based.
pub fn locate(source: &str, key: &str) -> Option<usize> {
    source.lines().position(|line| {
        let t = line.trim_start();
        t.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn located(source: &str, path: &Path, e: tricolor::Error) -> CliError {
    match &e {
        tricolor::Error::InvalidParams { field, .. } => {
            let at = locate(source, field).map(|l| format!(" (line {l})")).unwrap_or_default();
            CliError::Config {
                path: path.to_path_buf(),
                message: format!("{e}{at}"),
            }
        }
        _ => CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: format!("cannot read: {e}"),
        })?;
        RunConfig::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> CliResult<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string().trim_end().to_string(),
        })?;
        cfg.validate().map_err(|e| located(text, path, e))?;
        Ok(cfg)
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Static checks that need no simulation.
    pub fn validate(&self) -> tricolor::Result<()> {
        self.params().validate()?;
        self.detunings.validate()?;
        self.controls.validate()?;
        GaussianPulse::from(self.pulse).validate()?;
        self.grid()?;
        let invalid = |field, reason: &str| tricolor::Error::InvalidParams {
            field,
            reason: reason.into(),
        };
        if !(self.integrator.dt > 0.0 && self.integrator.dt.is_finite()) {
            return Err(invalid("dt", "must be positive and finite"));
        }
        if self.output.every == 0 {
            return Err(invalid("every", "must be at least 1"));
        }
        if self.output.z_stride == 0 {
            return Err(invalid("z_stride", "must be at least 1"));
        }
        if self.scenario.is_none() {
            if let Some(d) = self.run.duration {
                if !(d > 0.0 && d.is_finite()) {
                    return Err(invalid("duration", "must be positive and finite"));
                }
            }
        }
        if let Some(d) = &self.dispersion {
            if d.samples < 2 {
                return Err(invalid("samples", "need at least two samples"));
            }
            if !(d.k_min.is_finite() && d.k_max.is_finite() && d.k_max > d.k_min) {
                return Err(invalid("k_max", "must exceed k_min"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.count == 0 {
                return Err(invalid("count", "must be at least 1"));
            }
            if !(s.start.is_finite() && s.stop.is_finite()) {
                return Err(invalid("start", "sweep bounds must be finite"));
            }
            if s.random && self.run.seed.is_none() {
                return Err(invalid("seed", "random sweeps need run.seed"));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> MediumParams {
        self.medium.into()
    }

    pub fn pulse(&self) -> GaussianPulse {
        self.pulse.into()
    }

    pub fn grid(&self) -> tricolor::Result<SimGrid> {
        let g = self.grid;
        SimGrid::new(g.z_min, g.z_max, g.n_z, self.integrator.spatial.boundary())
    }

    pub fn integrator(&self) -> IntegratorConfig {
        let i = self.integrator;
        let base = match i.spatial {
            SpatialMethod::SpectralPeriodic => IntegratorConfig::periodic(i.scheme, i.dt),
            SpatialMethod::UpwindOpen => IntegratorConfig::open(i.scheme, i.dt, i.dissipation),
        };
        IntegratorConfig {
            injection: i.injection,
            ..base.with_snapshots(self.output.every)
        }
    }

    pub fn plan(&self) -> CliResult<Plan> {
        let p = self.params();
        match self.scenario {
            Some(s) => {
                let sc = build(s.name, &p, &self.detunings, &self.controls, &self.timings, &self.pulse())?;
                Ok(Plan {
                    schedule: sc.schedule.clone(),
                    scenario: Some(sc),
                })
            }
            None => {
                let d = self
                    .run
                    .duration
                    .ok_or_else(|| CliError::Invalid("run.duration is required without a scenario".into()))?;
                let start = self.timings.start;
                Ok(Plan {
                    schedule: ControlSchedule::constant(self.controls, start, start + d)?,
                    scenario: None,
                })
            }
        }
    }

    /// Copy with the numeric key at dotted `path` replaced by `value`.
    pub fn with_value(&self, path: &str, value: f64) -> CliResult<RunConfig> {
        let mut root = toml::Table::try_from(self).expect("configuration serializes");
        let parts: Vec<&str> = path.split('.').collect();
        let (last, head) = parts.split_last().ok_or_else(|| CliError::Invalid("empty sweep key".into()))?;
        let mut table = &mut root;
        for p in head {
            table = table
                .get_mut(*p)
                .and_then(|v| v.as_table_mut())
                .ok_or_else(|| CliError::Invalid(format!("sweep key `{path}`: no table `{p}`")))?;
        }
        let slot = table
            .get_mut(*last)
            .ok_or_else(|| CliError::Invalid(format!("sweep key `{path}` does not exist")))?;
        *slot = match slot {
            toml::Value::Float(_) => toml::Value::Float(value),
            toml::Value::Integer(_) if value.fract() == 0.0 && value.abs() < 9.0e15 => toml::Value::Integer(value as i64),
            toml::Value::Integer(_) => {
                return Err(CliError::Invalid(format!("sweep key `{path}` needs integer values, got {value}")));
            }
            _ => return Err(CliError::Invalid(format!("sweep key `{path}` is not numeric"))),
        };
        let cfg: RunConfig = root
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Invalid(format!("sweep key `{path}`: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
