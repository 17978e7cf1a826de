//! `design`: stationary amplitude, optimal detunings and lifetime estimates.

use std::path::Path;

use tricolor::analytic::{
    curvature, optimal_detuning_p2, regime_b_amplification, stationary_backward_rabi, stationary_lifetime,
    symmetric_detunings, DispersionModel,
};
use tricolor::model::{derive_coeffs, Detunings, MediumParams, Rabi};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::{opt, write_atomic, Table};

pub struct Row {
    pub quantity: &'static str,
    pub value: Option<f64>,
    pub note: String,
}

fn row(quantity: &'static str, value: Option<f64>, note: impl Into<String>) -> Row {
    Row {
        quantity,
        value,
        note: note.into(),
    }
}

fn band_rows(rows: &mut Vec<Row>, tag: &'static [&'static str; 4], p: &MediumParams, det: Option<&Detunings>, amps: &Rabi, model: DispersionModel, l_o: f64) {
    let Some(det) = det else {
        for q in tag {
            rows.push(row(q, None, "undefined"));
        }
        return;
    };
    let cv = derive_coeffs(p, det, amps).and_then(|c| curvature(model, &c, p.k_o));
    match cv {
        Ok(cv) => {
            rows.push(row(tag[0], Some(cv.delta.re), ""));
            rows.push(row(tag[1], Some(cv.delta.im), ""));
            rows.push(row(tag[2], Some(cv.spreading_rate), "d(l^2)/dt"));
        }
        Err(e) => {
            for q in &tag[..3] {
                rows.push(row(q, None, e.to_string()));
            }
        }
    }
    let life = stationary_lifetime(p, det, amps, l_o);
    rows.push(row(tag[3], life.as_ref().ok().copied(), life.err().map(|e| e.to_string()).unwrap_or_default()));
}

pub fn design_rows(cfg: &RunConfig) -> Vec<Row> {
    let p = cfg.params();
    let det = cfg.detunings;
    let a = cfg.controls;
    let model = cfg.dispersion.map(|d| d.model).unwrap_or_default();
    let l_o = cfg.pulse.length;
    let mut rows = Vec::new();

    let m1 = stationary_backward_rabi(p.g1, p.g2, a.p1, a.p2);
    let hold = Rabi::new(a.p1, a.p2, m1);
    if a.p2 > 0.0 {
        rows.push(row("stationary_m1", Some(m1), "three-color"));
    } else {
        rows.push(row("stationary_m1", None, "undefined: omega_p2 is zero"));
    }
    rows.push(row(
        "two_color_m1",
        Some(stationary_backward_rabi(p.g1, p.g2, a.p1, 0.0)),
        "omega_p2 = 0",
    ));

    let optimum = optimal_detuning_p2(p.g1, p.g2, &hold, det.delta_p1, det.delta_m1);
    rows.push(match &optimum {
        Ok(v) => row("optimal_delta_p2", Some(*v), "at the configured delta_p1, delta_m1"),
        Err(e) => row("optimal_delta_p2", None, format!("undefined: {e}")),
    });
    let (s1, s2) = symmetric_detunings(p.g1, p.g2, det.delta_m1);
    rows.push(row("symmetric_delta_p1", Some(s1), "delta_p1 = -delta_m1"));
    rows.push(row("symmetric_delta_p2", Some(s2), ""));

    let optimal = optimum.as_ref().ok().map(|&d2| Detunings { delta_p2: d2, ..det });
    let symmetric = Detunings {
        delta_p1: s1,
        delta_p2: s2,
        delta_m1: det.delta_m1,
    };
    band_rows(
        &mut rows,
        &["curvature_re_before", "curvature_im_before", "spreading_rate_before", "lifetime_before"],
        &p,
        Some(&det),
        &hold,
        model,
        l_o,
    );
    band_rows(
        &mut rows,
        &["curvature_re_optimal", "curvature_im_optimal", "spreading_rate_optimal", "lifetime_optimal"],
        &p,
        optimal.as_ref(),
        &hold,
        model,
        l_o,
    );
    band_rows(
        &mut rows,
        &["curvature_re_symmetric", "curvature_im_symmetric", "spreading_rate_symmetric", "lifetime_symmetric"],
        &p,
        (a.p2 > 0.0).then_some(&symmetric),
        &hold,
        model,
        l_o,
    );
    rows.push(match regime_b_amplification(p.g1, p.g2, &hold) {
        Ok(v) => row("regime_b_amplification", Some(v), "shift of delta_p2 per shift of delta_m1"),
        Err(e) => row("regime_b_amplification", None, format!("undefined: {e}")),
    });
    rows
}

pub fn cmd_design(cfg: &RunConfig, out: Option<&Path>) -> CliResult<Option<std::path::PathBuf>> {
    let rows = design_rows(cfg);
    let width = rows.iter().map(|r| r.quantity.len()).max().unwrap_or(0);
    for r in &rows {
        println!("{:<width$}  {:>16}  {}", r.quantity, opt(r.value), r.note);
    }
    match out {
        Some(dir) => {
            crate::output::ensure_dir(dir)?;
            let mut t = Table::new(&["quantity", "value", "note"]);
            for r in &rows {
                t.row([r.quantity.to_string(), opt(r.value), r.note.clone()]);
            }
            Ok(Some(write_atomic(dir, "design.csv", &t.into_bytes())?))
        }
        None => Ok(None),
    }
}
