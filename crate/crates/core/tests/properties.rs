use proptest::prelude::*;

use tricolor::analytic::{chi_factors, eigenvalue_oracle, group_velocity, omega_k, stationary_backward_rabi};
use tricolor::model::{
    derive_coeffs, Boundary, ControlSchedule, Detunings, FieldState, GaussianPulse, MediumParams, Rabi, SimGrid, C64,
};
use tricolor::pde::{diagnostics, initial_state, run, weighted_norm, InitMode, IntegratorConfig, Scheme};
use tricolor::protocols::{build, PhaseKind, ScenarioKind, Timings};

fn medium() -> impl Strategy<Value = MediumParams> {
    (100.0..5000.0f64, 0.5..2.0f64, 0.0..1e-2f64).prop_map(|(n, g2, gamma2)| MediumParams {
        g2,
        gamma2,
        ..MediumParams::code_units(n)
    })
}

fn detunings() -> impl Strategy<Value = Detunings> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b, c)| Detunings {
        delta_p1: a,
        delta_p2: b,
        delta_m1: c,
    })
}

fn amps() -> impl Strategy<Value = Rabi> {
    (0.2..2.0f64, 0.2..2.0f64, 0.2..2.0f64).prop_map(|(a, b, c)| Rabi::new(a, b, c))
}

fn pulse() -> GaussianPulse {
    GaussianPulse {
        amplitude: 1.0,
        center: 0.0,
        length: 0.05,
    }
}

proptest! {
    #[test]
    fn hold_phase_is_stationary(p in medium(), det in detunings(), base in amps(), hold in 1.0..100.0f64) {
        let t = Timings { free: 5.0, ramp: 2.0, hold, ..Timings::default() };
        let s = build(ScenarioKind::TrapAndHold, &p, &det, &base, &t, &pulse()).unwrap();
        let h = s.phase(PhaseKind::Hold).unwrap();
        let m1 = stationary_backward_rabi(p.g1, p.g2, base.p1, base.p2);
        prop_assert!((h.amps.m1 - m1).abs() <= 1e-10 * m1);
        let p0 = MediumParams { gamma2: 0.0, ..p };
        for i in 0..=8 {
            let tau = h.start + h.duration() * i as f64 / 8.0;
            let a = s.schedule.amplitudes(tau);
            prop_assert!(group_velocity(&p0, &det, &a).unwrap().v.abs() <= 1e-8);
        }
    }

    #[test]
    fn building_is_deterministic(p in medium(), det in detunings(), base in amps()) {
        let t = Timings { hold: 10.0, switch: 0.5, release: 5.0, ..Timings::default() };
        for kind in [ScenarioKind::ConvertForward, ScenarioKind::ConvertBackward, ScenarioKind::TwoColorBaseline] {
            let a = build(kind, &p, &det, &base, &t, &pulse());
            let b = build(kind, &p, &det, &base, &t, &pulse());
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a.schedule, b.schedule),
                (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
                _ => prop_assert!(false, "outcomes differ"),
            }
        }
    }

    #[test]
    fn baseline_matches_forward_coupling(p in medium(), base in amps()) {
        let t = Timings { hold: 10.0, ..Timings::default() };
        let three = build(ScenarioKind::TrapAndHold, &p, &Detunings::default(), &base, &t, &pulse()).unwrap();
        let two = build(ScenarioKind::TwoColorBaseline, &p, &Detunings::default(), &base, &t, &pulse()).unwrap();
        prop_assert_eq!(three.schedule.initial().p1, two.schedule.initial().p1);
        prop_assert_eq!(two.schedule.initial().p2, 0.0);
    }

    #[test]
    fn chi_is_independent_of_control_strength(p in medium(), det in detunings(), a in amps(), s in 0.2..5.0f64, x in -0.1..0.1f64) {
        let c1 = derive_coeffs(&p, &det, &a).unwrap();
        let c2 = derive_coeffs(&p, &det, &a.scaled(s)).unwrap();
        let k = x * p.xi13();
        let (m1, p1) = chi_factors(&c1, 0.0, k).unwrap();
        let (m2, p2) = chi_factors(&c2, 0.0, k).unwrap();
        prop_assert!((m1 - m2).norm() <= 1e-14 * m1.norm().max(1.0));
        prop_assert!((p1 - p2).norm() <= 1e-14 * p1.norm().max(1.0));
    }

    #[test]
    fn analytic_branch_matches_oracle(p in medium(), det in detunings(), a in amps(), x in 0.001..0.1f64) {
        let c = derive_coeffs(&p, &det, &a).unwrap();
        let k = x * p.xi13().min(p.xi14());
        let w = omega_k(&c, 0.0, k).unwrap();
        let o = eigenvalue_oracle(&c, 0.0, k).unwrap();
        prop_assert!((w - o).norm() <= 1e-8 * o.norm());
    }

    #[test]
    fn moments_follow_translation(shift in -20i32..20, r in 0.1..3.0f64) {
        let g = SimGrid::new(-1.0, 1.0, 256, Boundary::Periodic).unwrap();
        let dz = g.dz();
        let gauss = |c: f64| -> Vec<C64> {
            (0..g.n_z).map(|j| C64::new((-(g.z(j) - c).powi(2) / (2.0 * 0.01)).exp(), 0.0)).collect()
        };
        let mut s = FieldState::zeros(g, 0.0);
        s.a_p1 = gauss(0.0);
        s.a_p2 = s.a_p1.iter().map(|v| v * r).collect();
        let mut t = FieldState::zeros(g, 0.0);
        t.a_p1 = gauss(shift as f64 * dz);
        let (d0, d1) = (diagnostics(&s), diagnostics(&t));
        let moved = d1.fields[0].centroid.unwrap() - d0.fields[0].centroid.unwrap();
        prop_assert!((moved - shift as f64 * dz).abs() < 1e-12);
        prop_assert!((d1.fields[0].width.unwrap() - d0.fields[0].width.unwrap()).abs() < 1e-12);
        prop_assert!((d0.fields[1].energy / d0.fields[0].energy - r * r).abs() < 1e-12 * r * r);
        prop_assert!(d0.fields[2].centroid.is_none());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn weighted_norm_never_grows(gamma2 in 1e-3..5e-2f64, a in amps(), det in detunings()) {
        let p = MediumParams { gamma2, ..MediumParams::code_units(100.0) };
        let g = SimGrid::new(-1.0, 1.0, 128, Boundary::Periodic).unwrap();
        let sched = ControlSchedule::constant(a, 0.0, 5.0).unwrap();
        let init = initial_state(&pulse(), &g, &p, &det, &a, 0.0, InitMode::ProbeOnly).unwrap();
        let cfg = IntegratorConfig::periodic(Scheme::Full, 0.05).with_snapshots(1);
        let tr = run(&init, &p, &det, &sched, &cfg).unwrap();
        let norms: Vec<f64> = tr.snapshots.iter().map(|s| weighted_norm(s, &p)).collect();
        for w in norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} > {}", w[1], w[0]);
        }
    }
}
