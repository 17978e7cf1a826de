//! `run`: one simulation with snapshot, time-series, scorecard and meta files.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use toml::{Table, Value};
use tricolor::analytic::{group_velocity, predicted_pulse_length, spreading_rate, stationary_lifetime};
use tricolor::model::{adiabaticity_report, derive_coeffs, Channel, FieldState, MarginFlag, Rabi, SimGrid};
use tricolor::pde::{
    diagnostics, initial_state, refine_against, run, ConvergenceReport, Diagnostics, InitMode, Trajectory,
    CONVERGENCE_TOLERANCE,
};
use tricolor::protocols::{evaluate, Check, Scenario, Scorecard};

use crate::config::{Initial, Plan, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{num, opt, write_atomic, Table as Csv};

pub struct Outcome {
    pub trajectory: Trajectory,
    pub scenario: Option<Scenario>,
    pub scorecard: Option<Scorecard>,
    pub convergence: Option<ConvergenceReport>,
}

fn initial(cfg: &RunConfig, grid: &SimGrid, plan: &Plan) -> tricolor::Result<FieldState> {
    let p = cfg.params();
    let t0 = plan.schedule.start();
    let amps = plan.schedule.initial();
    let mode = match cfg.run.initial {
        Initial::Locked => InitMode::Locked,
        Initial::ProbeOnly => InitMode::ProbeOnly,
        Initial::Empty => return Ok(FieldState::zeros(*grid, t0)),
    };
    initial_state(&cfg.pulse(), grid, &p, &cfg.detunings, &amps, t0, mode)
}

/// Runs the configured simulation and, if asked, its refinement.
pub fn simulate(cfg: &RunConfig, check: bool) -> CliResult<Outcome> {
    let plan = cfg.plan()?;
    let p = cfg.params();
    let grid = cfg.grid()?;
    let integ = cfg.integrator();
    integ.validate(&p, &cfg.detunings, &plan.schedule, &grid)?;
    let init = |g: &SimGrid| initial(cfg, g, &plan);
    let trajectory = run(&init(&grid)?, &p, &cfg.detunings, &plan.schedule, &integ).map_err(CliError::from_run)?;
    let convergence = if check {
        let r = refine_against(
            trajectory.final_state(),
            init,
            &p,
            &cfg.detunings,
            &plan.schedule,
            &integ,
            CONVERGENCE_TOLERANCE,
        )
        .map_err(CliError::from_run)?;
        Some(r)
    } else {
        None
    };
    let scorecard = plan.scenario.as_ref().map(|s| evaluate(s, &trajectory)).transpose()?;
    Ok(Outcome {
        trajectory,
        scenario: plan.scenario,
        scorecard,
        convergence,
    })
}

const FIELDS: [&str; 3] = ["a_p1", "a_p2", "a_m1"];

fn snapshot_rows(csv: &mut Csv, s: &FieldState, stride: usize) {
    for j in (0..s.grid.n_z).step_by(stride) {
        let mut row = vec![num(s.t), num(s.grid.z(j))];
        for ch in Channel::ALL {
            let a = s.field(ch)[j];
            row.push(num(a.re));
            row.push(num(a.im));
        }
        row.push(num(s.p12[j].norm()));
        csv.row(row);
    }
}

pub fn snapshots_csv<'a>(states: impl IntoIterator<Item = &'a FieldState>, stride: usize) -> Vec<u8> {
    let mut header = vec!["t[t_unit]".to_string(), "z[z_unit]".to_string()];
    for f in FIELDS {
        header.push(format!("re_{f}[field_unit]"));
        header.push(format!("im_{f}[field_unit]"));
    }
    header.push("abs_p12[coherence_unit]".into());
    let mut csv = Csv::new(&header);
    for s in states {
        snapshot_rows(&mut csv, s, stride);
    }
    csv.into_bytes()
}

pub fn timeseries_csv(cfg: &RunConfig, schedule: &tricolor::model::ControlSchedule, diags: &[Diagnostics]) -> Vec<u8> {
    let p = cfg.params();
    let mut header = vec!["t[t_unit]".to_string()];
    for f in FIELDS {
        header.push(format!("centroid_{f}[z_unit]"));
        header.push(format!("length_{f}[z_unit]"));
        header.push(format!("energy_{f}[field_unit^2*z_unit]"));
    }
    header.extend([
        "total_energy[field_unit^2*z_unit]".to_string(),
        "spin_norm[coherence_unit^2*z_unit]".to_string(),
        "predicted_v[z_unit/t_unit]".to_string(),
        "predicted_l[z_unit]".to_string(),
    ]);
    let mut csv = Csv::new(&header);
    let t0 = schedule.start();
    for d in diags {
        let mut row = vec![num(d.t)];
        for m in &d.fields {
            row.push(opt(m.centroid));
            row.push(opt(m.gaussian_length()));
            row.push(num(m.energy));
        }
        row.push(num(d.total_energy));
        row.push(num(d.spin_norm));
        let amps = schedule.amplitudes(d.t);
        row.push(opt(group_velocity(&p, &cfg.detunings, &amps).ok().map(|v| v.v)));
        row.push(opt(
            predicted_pulse_length(&p, &cfg.detunings, schedule, cfg.pulse.length, t0, d.t).ok(),
        ));
        csv.row(row);
    }
    csv.into_bytes()
}

fn check_name(c: Check) -> &'static str {
    match c {
        Check::Relative => "relative",
        Check::Absolute => "absolute",
        Check::AtLeast => "at_least",
        Check::Info => "info",
    }
}

pub fn passed_text(p: Option<bool>) -> &'static str {
    match p {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "undefined",
    }
}

pub fn scorecard_csv(card: &Scorecard) -> Vec<u8> {
    let mut csv = Csv::new(&["score", "measured", "predicted", "check", "tolerance", "result"]);
    for s in &card.scores {
        csv.row([
            s.name.clone(),
            opt(s.measured),
            opt(s.predicted),
            check_name(s.check).to_string(),
            num(s.tolerance),
            passed_text(s.passed).to_string(),
        ]);
    }
    csv.into_bytes()
}

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> i64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs() as i64))
}

fn float(x: f64) -> Value {
    Value::Float(x)
}

fn table(pairs: impl IntoIterator<Item = (&'static str, Value)>) -> Value {
    Value::Table(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn derived_block(cfg: &RunConfig, amps: &Rabi) -> Value {
    let p = cfg.params();
    let det = &cfg.detunings;
    let mut t = Table::new();
    t.insert("controls".into(), table([("p1", float(amps.p1)), ("p2", float(amps.p2)), ("m1", float(amps.m1))]));
    match derive_coeffs(&p, det, amps) {
        Ok(c) => {
            let cx = |z: tricolor::C64| table([("re", float(z.re)), ("im", float(z.im))]);
            for (name, v) in [
                ("mu_s", c.mu_s),
                ("alpha_p1", c.alpha_p1),
                ("alpha_p2", c.alpha_p2),
                ("alpha_m1", c.alpha_m1),
                ("gamma2_tilde", c.gamma2_tilde),
                ("xi_p1", c.xi_p1),
                ("xi_p2", c.xi_p2),
                ("xi_m1", c.xi_m1),
            ] {
                t.insert(name.into(), cx(v));
            }
            if let Ok(v) = group_velocity(&p, det, amps) {
                t.insert("group_velocity".into(), float(v.v));
            }
            if let Ok(r) = spreading_rate(&p, det, amps) {
                t.insert("spreading_rate".into(), float(r));
            }
            if let Ok(l) = stationary_lifetime(&p, det, amps, cfg.pulse.length) {
                t.insert("lifetime_estimate".into(), float(l));
            }
        }
        Err(e) => {
            t.insert("undefined".into(), Value::String(e.to_string()));
        }
    }
    Value::Table(t)
}

fn flag_name(f: MarginFlag) -> &'static str {
    match f {
        MarginFlag::Pass => "pass",
        MarginFlag::Warn => "warn",
        MarginFlag::Fail => "fail",
        MarginFlag::NotApplicable => "not_applicable",
    }
}

pub struct MetaInput<'a> {
    pub command: &'a str,
    pub cfg: &'a RunConfig,
    pub status: &'a str,
    pub t_final: Option<f64>,
    pub warnings: &'a [String],
    pub scenario: Option<&'a Scenario>,
    pub convergence: Option<&'a ConvergenceReport>,
}

pub fn meta_toml(m: &MetaInput) -> String {
    let cfg = m.cfg;
    let mut root = Table::new();
    root.insert(
        "provenance".into(),
        table([
            ("tool", Value::String("tricolor".into())),
            ("version", Value::String(env!("CARGO_PKG_VERSION").into())),
            ("command", Value::String(m.command.into())),
            ("generated_unix", Value::Integer(timestamp())),
        ]),
    );
    let mut status = Table::new();
    status.insert("outcome".into(), Value::String(m.status.into()));
    if let Some(t) = m.t_final {
        status.insert("t_final".into(), float(t));
    }
    status.insert(
        "warnings".into(),
        Value::Array(m.warnings.iter().map(|w| Value::String(w.clone())).collect()),
    );
    root.insert("status".into(), Value::Table(status));
    root.insert(
        "units".into(),
        table([
            ("t_unit", Value::String("inverse of the rate unit of gamma3".into())),
            ("z_unit", Value::String("c * t_unit".into())),
            ("field_unit", Value::String("unit of the probe amplitude".into())),
            ("coherence_unit", Value::String("dimensionless atomic coherence".into())),
        ]),
    );
    root.insert(
        "config".into(),
        Value::Table(Table::try_from(cfg).expect("configuration serializes")),
    );

    let mut derived = Table::new();
    if let Ok(plan) = cfg.plan() {
        derived.insert("initial".into(), derived_block(cfg, &plan.schedule.initial()));
        if let Some(h) = m.scenario.and_then(|s| s.hold_amps) {
            derived.insert("hold".into(), derived_block(cfg, &h));
        }
        if let Some(s) = m.scenario {
            let mut e = Table::new();
            e.insert("final_length".into(), float(s.expected.final_length));
            if let Some(l) = s.expected.lifetime {
                e.insert("lifetime".into(), float(l));
            }
            if let Some(r) = s.expected.release {
                e.insert("release_channel".into(), Value::String(r.channel.name().into()));
                e.insert("release_velocity".into(), float(r.velocity));
                e.insert("amplitude_ratio".into(), float(r.amplitude_ratio));
                e.insert("energy_ratio".into(), float(r.energy_ratio));
            }
            if let Some(a) = s.expected.amplification {
                e.insert("regime_b_amplification".into(), float(a));
            }
            derived.insert("expected".into(), Value::Table(e));
        }
        let p = cfg.params();
        let v = p.bare_velocity(Channel::P1, plan.schedule.initial().p1.max(plan.schedule.max_amplitude()));
        if v > 0.0 {
            if let Ok(r) = adiabaticity_report(&p, &cfg.detunings, &plan.schedule, cfg.pulse.length / v) {
                let margins = r
                    .margins
                    .iter()
                    .map(|mg| {
                        let mut t = Table::new();
                        t.insert("name".into(), Value::String(mg.name.into()));
                        if let Some(x) = mg.value {
                            t.insert("value".into(), float(x));
                        }
                        t.insert("flag".into(), Value::String(flag_name(mg.flag).into()));
                        Value::Table(t)
                    })
                    .collect();
                let mut a = Table::new();
                a.insert("pulse_duration".into(), float(r.pulse_duration));
                a.insert("worst".into(), Value::String(flag_name(r.worst()).into()));
                a.insert("margins".into(), Value::Array(margins));
                root.insert("adiabaticity".into(), Value::Table(a));
            }
        }
    }
    root.insert("derived".into(), Value::Table(derived));
    if let Some(c) = m.convergence {
        root.insert(
            "convergence".into(),
            table([
                ("coarse_dt", float(c.coarse_dt)),
                ("fine_dt", float(c.fine_dt)),
                ("coarse_n", Value::Integer(c.coarse_n as i64)),
                ("fine_n", Value::Integer(c.fine_n as i64)),
                ("relative_change", float(c.relative_change)),
                ("norm_change", float(c.norm_change)),
                ("tolerance", float(c.tolerance)),
                ("passed", Value::Boolean(c.passed)),
            ]),
        );
    }
    toml::to_string(&root).expect("meta serializes")
}

/// Entry point of the `run` subcommand; returns the files written.
pub fn cmd_run(cfg: &RunConfig, out: &Path, check: bool) -> CliResult<Vec<std::path::PathBuf>> {
    crate::output::ensure_dir(out)?;
    let stride = cfg.output.z_stride;
    match simulate(cfg, check) {
        Ok(o) => {
            let tr = &o.trajectory;
            let mut written = vec![
                write_atomic(out, "snapshots.csv", &snapshots_csv(&tr.snapshots, stride))?,
                write_atomic(out, "timeseries.csv", &timeseries_csv(cfg, &tr.schedule, &tr.diagnostics))?,
            ];
            if let Some(card) = &o.scorecard {
                written.push(write_atomic(out, "scorecard.csv", &scorecard_csv(card))?);
            }
            let meta = meta_toml(&MetaInput {
                command: "run",
                cfg,
                status: "completed",
                t_final: Some(tr.final_state().t),
                warnings: &tr.warnings,
                scenario: o.scenario.as_ref(),
                convergence: o.convergence.as_ref(),
            });
            written.push(write_atomic(out, "meta.toml", meta.as_bytes())?);
            if let Some(c) = &o.convergence {
                if !c.passed {
                    eprintln!(
                        "warning: convergence check failed (relative change {:.3e}, norm change {:.3e}, tolerance {:.1e})",
                        c.relative_change, c.norm_change, c.tolerance
                    );
                }
            }
            Ok(written)
        }
        Err(CliError::Abort { t, last_good }) => {
            write_atomic(out, "snapshots.csv", &snapshots_csv([last_good.as_ref()], stride))?;
            let plan = cfg.plan()?;
            let d = diagnostics(&last_good);
            write_atomic(out, "timeseries.csv", &timeseries_csv(cfg, &plan.schedule, &[d]))?;
            let meta = meta_toml(&MetaInput {
                command: "run",
                cfg,
                status: "aborted",
                t_final: Some(last_good.t),
                warnings: &[format!("non-finite values at t = {t}")],
                scenario: plan.scenario.as_ref(),
                convergence: None,
            });
            write_atomic(out, "meta.toml", meta.as_bytes())?;
            Err(CliError::Abort { t, last_good })
        }
        Err(e) => Err(e),
    }
}
