//! `dispersion`: tabulated slow-branch dispersion with the oracle alongside.

use std::path::{Path, PathBuf};

use tricolor::analytic::{dispersion_sample, eigenvalue_oracle};
use tricolor::model::derive_coeffs;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, write_atomic, Table};

pub fn dispersion_csv(cfg: &RunConfig) -> CliResult<Vec<u8>> {
    let d = cfg
        .dispersion
        .ok_or_else(|| CliError::Invalid("the dispersion command needs a [dispersion] table".into()))?;
    let p = cfg.params();
    let c = derive_coeffs(&p, &cfg.detunings, &cfg.controls)?;
    let mut t = Table::new(&[
        "k[1/z_unit]",
        "re_omega[1/t_unit]",
        "im_omega[1/t_unit]",
        "abs_chi_minus",
        "arg_chi_minus[rad]",
        "abs_chi_plus",
        "arg_chi_plus[rad]",
        "oracle_re_omega[1/t_unit]",
        "oracle_im_omega[1/t_unit]",
        "rel_diff",
        "status",
    ]);
    let undefined = || "undefined".to_string();
    for i in 0..d.samples {
        let k = d.k_min + (d.k_max - d.k_min) * i as f64 / (d.samples - 1) as f64;
        let mut row = vec![num(k)];
        let mut status = Vec::new();
        let sample = dispersion_sample(d.model, &c, p.k_o, k);
        match &sample {
            Ok(s) => row.extend([
                num(s.omega.re),
                num(s.omega.im),
                num(s.chi_minus.norm()),
                num(s.chi_minus.arg()),
                num(s.chi_plus.norm()),
                num(s.chi_plus.arg()),
            ]),
            Err(e) => {
                row.extend(std::iter::repeat_with(undefined).take(6));
                status.push(format!("singular: {e}"));
            }
        }
        let oracle = eigenvalue_oracle(&c, p.k_o, k);
        match &oracle {
            Ok(o) => row.extend([num(o.re), num(o.im)]),
            Err(e) => {
                row.extend([undefined(), undefined()]);
                status.push(format!("oracle: {e}"));
            }
        }
        match (&sample, &oracle) {
            (Ok(s), Ok(o)) if o.norm() > 0.0 => row.push(num((s.omega - o).norm() / o.norm())),
            (Ok(s), Ok(_)) => row.push(num(s.omega.norm())),
            _ => row.push(undefined()),
        }
        row.push(if status.is_empty() { "ok".into() } else { status.join("; ") });
        t.row(row);
    }
    Ok(t.into_bytes())
}

pub fn cmd_dispersion(cfg: &RunConfig, out: &Path) -> CliResult<PathBuf> {
    let bytes = dispersion_csv(cfg)?;
    crate::output::ensure_dir(out)?;
    write_atomic(out, "dispersion.csv", &bytes)
}
