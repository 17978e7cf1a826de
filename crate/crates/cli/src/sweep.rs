//! `sweep`: independent runs along one config axis, aggregated into a table.

use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, opt, write_atomic, Table};
use crate::run::{meta_toml, passed_text, simulate, MetaInput, Outcome};

/// Axis values: evenly spaced, or uniform draws when `random` is set.
pub fn axis(cfg: &RunConfig) -> CliResult<Vec<f64>> {
    let s = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Invalid("the sweep command needs a [sweep] table".into()))?;
    if s.random {
        let seed = cfg.run.seed.ok_or_else(|| CliError::Invalid("random sweeps need run.seed".into()))?;
        let mut rng = StdRng::seed_from_u64(seed);
        let (lo, hi) = (s.start.min(s.stop), s.start.max(s.stop));
        return Ok((0..s.count)
            .map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo })
            .collect());
    }
    Ok(match s.count {
        1 => vec![s.start],
        n => (0..n)
            .map(|i| s.start + (s.stop - s.start) * i as f64 / (n - 1) as f64)
            .collect(),
    })
}

struct Point {
    value: f64,
    result: CliResult<Outcome>,
}

pub fn sweep_csv(cfg: &RunConfig, check: bool) -> CliResult<Vec<u8>> {
    let key = cfg.sweep.as_ref().map(|s| s.key.clone()).unwrap_or_default();
    let points: Vec<Point> = axis(cfg)?
        .into_iter()
        .map(|value| Point {
            value,
            result: cfg.with_value(&key, value).and_then(|c| simulate(&c, check)),
        })
        .collect();

    let mut scores: Vec<String> = Vec::new();
    for p in &points {
        if let Ok(Outcome { scorecard: Some(card), .. }) = &p.result {
            for s in &card.scores {
                if !scores.contains(&s.name) {
                    scores.push(s.name.clone());
                }
            }
        }
    }
    let mut header = vec![
        "index".to_string(),
        key.clone(),
        "status".into(),
        "t_final[t_unit]".into(),
        "total_energy[field_unit^2*z_unit]".into(),
    ];
    if check {
        header.extend(["convergence_change".into(), "convergence_result".into()]);
    }
    for s in &scores {
        header.extend([format!("{s}_measured"), format!("{s}_predicted"), format!("{s}_result")]);
    }
    let mut t = Table::new(&header);
    for (i, p) in points.iter().enumerate() {
        let mut row = vec![i.to_string(), num(p.value)];
        match &p.result {
            Ok(o) => {
                let d = o.trajectory.diagnostics.last();
                row.push("ok".into());
                row.push(num(o.trajectory.final_state().t));
                row.push(opt(d.map(|d| d.total_energy)));
                if check {
                    let c = o.convergence.as_ref();
                    row.push(opt(c.map(|c| c.relative_change.max(c.norm_change))));
                    row.push(passed_text(c.map(|c| c.passed)).into());
                }
                for name in &scores {
                    let s = o.scorecard.as_ref().and_then(|c| c.get(name));
                    row.push(opt(s.and_then(|s| s.measured)));
                    row.push(opt(s.and_then(|s| s.predicted)));
                    row.push(passed_text(s.and_then(|s| s.passed)).into());
                }
            }
            Err(e) => {
                row.push(format!("error (exit {}): {e}", e.exit_code()));
                let blanks = 2 + if check { 2 } else { 0 } + 3 * scores.len();
                row.extend(std::iter::repeat_n(String::new(), blanks));
            }
        }
        t.row(row);
    }
    Ok(t.into_bytes())
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path, check: bool) -> CliResult<Vec<PathBuf>> {
    let bytes = sweep_csv(cfg, check)?;
    crate::output::ensure_dir(out)?;
    let plan = cfg.plan().ok();
    let meta = meta_toml(&MetaInput {
        command: "sweep",
        cfg,
        status: "completed",
        t_final: None,
        warnings: &[],
        scenario: plan.as_ref().and_then(|p| p.scenario.as_ref()),
        convergence: None,
    });
    Ok(vec![
        write_atomic(out, "sweep.csv", &bytes)?,
        write_atomic(out, "meta.toml", meta.as_bytes())?,
    ])
}
