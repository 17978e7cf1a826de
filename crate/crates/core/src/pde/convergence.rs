use super::{run_until, IntegratorConfig};
use crate::error::{Error, Result};
use crate::model::{ControlSchedule, Detunings, FieldState, MediumParams, SimGrid, C64};

/// Default relative L² change accepted between a run and its refinement.
pub const CONVERGENCE_TOLERANCE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub coarse_dt: f64,
    pub fine_dt: f64,
    pub coarse_n: usize,
    pub fine_n: usize,
    /// Relative L² difference of the final field envelopes on the coarse points.
    pub relative_change: f64,
    /// Relative change of the final field norm.
    pub norm_change: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub coarse: FieldState,
    pub fine: FieldState,
}

fn stride(coarse: &FieldState, fine: &FieldState) -> Result<usize> {
    let (a, b) = (coarse.grid, fine.grid);
    let ok = a.z_min == b.z_min && a.z_max == b.z_max && b.n_z % a.n_z == 0;
    if !ok {
        return Err(Error::Mismatch("grids do not nest".into()));
    }
    Ok(b.n_z / a.n_z)
}

fn sampled<'a>(fine: &'a FieldState, step: usize) -> impl Fn(&'a [C64]) -> Vec<C64> {
    let _ = fine;
    move |v: &'a [C64]| v.iter().step_by(step).copied().collect()
}

/// Relative L² distance between the field envelopes of two states, the
/// finer one sampled at the coarse points. Falls back to the spin coherence
/// when both states carry no light.
pub fn relative_l2_change(coarse: &FieldState, fine: &FieldState) -> Result<f64> {
    let step = stride(coarse, fine)?;
    let pick = sampled(fine, step);
    let mut num = 0.0;
    let mut den = 0.0;
    for (c, f) in [
        (&coarse.a_p1, &fine.a_p1),
        (&coarse.a_p2, &fine.a_p2),
        (&coarse.a_m1, &fine.a_m1),
    ] {
        for (x, y) in c.iter().zip(pick(f)) {
            num += (x - y).norm_sqr();
            den += y.norm_sqr();
        }
    }
    if den == 0.0 {
        for (x, y) in coarse.p12.iter().zip(pick(&fine.p12)) {
            num += (x - y).norm_sqr();
            den += y.norm_sqr();
        }
    }
    Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
}

fn field_norm(s: &FieldState) -> f64 {
    let dz = s.grid.dz();
    [&s.a_p1, &s.a_p2, &s.a_m1]
        .iter()
        .flat_map(|v| v.iter())
        .map(|x| x.norm_sqr() * dz)
        .sum::<f64>()
        .sqrt()
}

/// Run once as configured and once with `dt/2` on a grid with twice the
/// points, then compare final states.
#[allow(clippy::too_many_arguments)]
pub fn check_convergence<F>(
    build: F,
    grid: &SimGrid,
    params: &MediumParams,
    det: &Detunings,
    schedule: &ControlSchedule,
    config: &IntegratorConfig,
    t_end: f64,
    tolerance: f64,
) -> Result<ConvergenceReport>
where
    F: Fn(&SimGrid) -> Result<FieldState>,
{
    let quiet = IntegratorConfig {
        snapshot_every: usize::MAX,
        ..*config
    };
    let coarse = run_until(&build(grid)?, params, det, schedule, &quiet, t_end)?;
    refine_against(coarse.final_state(), build, params, det, schedule, config, tolerance)
}

/// Compare an existing coarse result, produced with `config` on the grid of
/// `coarse`, against a rerun with `dt/2` and twice the points.
pub fn refine_against<F>(
    coarse: &FieldState,
    build: F,
    params: &MediumParams,
    det: &Detunings,
    schedule: &ControlSchedule,
    config: &IntegratorConfig,
    tolerance: f64,
) -> Result<ConvergenceReport>
where
    F: Fn(&SimGrid) -> Result<FieldState>,
{
    let grid = coarse.grid;
    let fine_grid = grid.refined();
    let fine_cfg = IntegratorConfig {
        dt: config.dt / 2.0,
        snapshot_every: usize::MAX,
        ..*config
    };
    let fine = run_until(&build(&fine_grid)?, params, det, schedule, &fine_cfg, coarse.t)?;
    let (c, f) = (coarse.clone(), fine.final_state().clone());
    let relative_change = relative_l2_change(&c, &f)?;
    let (nc, nf) = (field_norm(&c), field_norm(&f));
    let norm_change = if nf > 0.0 { (nc - nf).abs() / nf } else { nc };
    Ok(ConvergenceReport {
        coarse_dt: config.dt,
        fine_dt: fine_cfg.dt,
        coarse_n: grid.n_z,
        fine_n: fine_grid.n_z,
        relative_change,
        norm_change,
        tolerance,
        passed: relative_change <= tolerance && norm_change <= tolerance,
        coarse: c,
        fine: f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Boundary, GaussianPulse, Rabi};
    use crate::pde::{initial_state, InitMode, Scheme};

    #[test]
    fn identical_states_have_zero_change() {
        let g = SimGrid::new(0.0, 1.0, 64, Boundary::Periodic).unwrap();
        let mut s = FieldState::zeros(g, 0.0);
        s.a_p1[3] = C64::new(1.0, 0.0);
        assert_eq!(relative_l2_change(&s, &s).unwrap(), 0.0);
        let other = FieldState::zeros(SimGrid::new(0.0, 2.0, 64, Boundary::Periodic).unwrap(), 0.0);
        assert!(relative_l2_change(&s, &other).is_err());
    }

    #[test]
    fn slow_light_converges() {
        let p = MediumParams::code_units(50.0);
        let det = Detunings::default();
        let amps = Rabi::new(1.0, 0.0, 0.0);
        let schedule = ControlSchedule::constant(amps, 0.0, 2.0).unwrap();
        let grid = SimGrid::new(-1.0, 1.0, 256, Boundary::Periodic).unwrap();
        let pulse = GaussianPulse {
            amplitude: 1.0,
            center: 0.0,
            length: 0.1,
        };
        let build = |g: &SimGrid| initial_state(&pulse, g, &p, &det, &amps, 0.0, InitMode::Locked);
        let cfg = crate::pde::IntegratorConfig::periodic(Scheme::Full, 0.1);
        let r = check_convergence(build, &grid, &p, &det, &schedule, &cfg, 2.0, CONVERGENCE_TOLERANCE).unwrap();
        assert!(r.passed, "{r:?}");
    }
}
