use super::{all_finite, apply_mask, phase_mask, Injection, Stepper};
use crate::analytic::quadrature::schedule_nodes;
use crate::error::Result;
use crate::fft::Transform;
use crate::model::{
    complex_xi, optical_rates, polariton_denominators, Channel, ControlSchedule, Detunings, FieldState,
    MediumParams, Rabi, SimGrid, C64, I,
};

/// Bound on `|ω'(k)|` over all wavenumbers and the schedule's amplitudes.
pub(crate) fn relaxation_bound(params: &MediumParams, det: &Detunings, schedule: &ControlSchedule) -> f64 {
    let om = schedule.max_amplitude();
    let xi = complex_xi(params, det);
    let rates = optical_rates(params, det);
    params.gamma2
        + rates
            .iter()
            .zip(&xi)
            .map(|(g, x)| om * om / g.norm() * (1.0 + x.norm() / x.re))
            .sum::<f64>()
}

/// Quasi-static fields and optical coherences in the rotated frame for one
/// spin-wave Fourier component, laid out `[A+1, A+2, A-1, P+, P-, P14, P12]`.
fn slave_mode(params: &MediumParams, rates: &[C64; 3], xi: &[C64; 3], k: f64, amps: &Rabi, p12: C64) -> [C64; 7] {
    let d = polariton_denominators(xi, params.k_o, k);
    let mut out = [C64::new(0.0, 0.0); 7];
    for (i, ch) in Channel::ALL.into_iter().enumerate() {
        let (om, g) = (amps.get(ch), params.coupling(ch));
        let a = -(om / g) * p12 / d[i];
        out[i] = a;
        out[3 + [0, 2, 1][i]] = I / rates[i] * (g * a + om * p12);
    }
    out[6] = p12;
    out
}

/// Slave all envelopes to the spin-wave spectrum `p12_hat` and return them
/// on the grid in physical variables.
pub(crate) fn slave_spectrum(
    p12_hat: &[C64],
    grid: &SimGrid,
    params: &MediumParams,
    det: &Detunings,
    amps: &Rabi,
    tr: &mut Transform,
    t: f64,
) -> FieldState {
    let rates = optical_rates(params, det);
    let xi = complex_xi(params, det);
    let k = grid.wavenumbers();
    let modes: Vec<[C64; 7]> = k
        .iter()
        .zip(p12_hat)
        .map(|(&k, &p)| slave_mode(params, &rates, &xi, k, amps, p))
        .collect();
    let fwd = phase_mask(grid, params.k_o, 1.0);
    let bwd = phase_mask(grid, params.k_o, -1.0);
    let mut s = FieldState::zeros(*grid, t);
    for (c, arr) in s.arrays_mut().into_iter().enumerate() {
        let mut v: Vec<C64> = modes.iter().map(|m| m[c]).collect();
        tr.inverse(&mut v);
        match c {
            0 | 1 | 3 | 5 => apply_mask(&mut v, &bwd),
            2 | 4 => apply_mask(&mut v, &fwd),
            _ => {}
        }
        *arr = v;
    }
    s
}

/// Quasi-static spin-wave rate `ω'(k) = -i(γ2 + Σ (Ω²/γ)(1 - 1/D))`.
fn omega_prime(params: &MediumParams, rates: &[C64; 3], xi: &[C64; 3], k: f64, amps: &Rabi) -> C64 {
    let d = polariton_denominators(xi, params.k_o, k);
    let mut s = C64::new(params.gamma2, 0.0);
    for (i, ch) in Channel::ALL.into_iter().enumerate() {
        let om = amps.get(ch);
        if om != 0.0 {
            s += om * om / rates[i] * (1.0 - 1.0 / d[i]);
        }
    }
    -I * s
}

/// Periodic quasi-static scheme: each spin-wave Fourier mode evolves as
/// `exp(-i ∫ ω'(k) dt)`.
pub(crate) struct PeriodicAdiabatic<'a> {
    params: &'a MediumParams,
    det: &'a Detunings,
    schedule: &'a ControlSchedule,
    grid: SimGrid,
    rates: [C64; 3],
    xi: [C64; 3],
    k: Vec<f64>,
    p12_hat: Vec<C64>,
    tr: Transform,
    cache: Option<(Rabi, f64, Vec<C64>)>,
}

impl<'a> PeriodicAdiabatic<'a> {
    pub fn new(
        initial: &FieldState,
        params: &'a MediumParams,
        det: &'a Detunings,
        schedule: &'a ControlSchedule,
    ) -> Result<Self> {
        let grid = initial.grid;
        let mut tr = Transform::new(grid.n_z);
        let mut p12_hat = initial.p12.clone();
        tr.forward(&mut p12_hat);
        Ok(PeriodicAdiabatic {
            params,
            det,
            schedule,
            grid,
            rates: optical_rates(params, det),
            xi: complex_xi(params, det),
            k: grid.wavenumbers(),
            p12_hat,
            tr,
            cache: None,
        })
    }

    fn factors(&self, t: f64, dt: f64) -> Vec<C64> {
        let nodes = schedule_nodes(self.schedule, t, t + dt, 2);
        let amps: Vec<(Rabi, f64)> = nodes.iter().map(|&(s, w)| (self.schedule.amplitudes(s), w)).collect();
        self.k
            .iter()
            .map(|&k| {
                let phase: C64 = amps
                    .iter()
                    .map(|(a, w)| *w * omega_prime(self.params, &self.rates, &self.xi, k, a))
                    .sum();
                (-I * phase).exp()
            })
            .collect()
    }
}

impl Stepper for PeriodicAdiabatic<'_> {
    fn advance(&mut self, t: f64, dt: f64) -> Result<()> {
        if self.schedule.is_constant_on(t, t + dt) {
            let a = self.schedule.amplitudes(t + 0.5 * dt);
            if !matches!(&self.cache, Some((ca, cdt, _)) if *ca == a && *cdt == dt) {
                self.cache = Some((a, dt, self.factors(t, dt)));
            }
            let f = &self.cache.as_ref().expect("cache filled above").2;
            for (p, e) in self.p12_hat.iter_mut().zip(f) {
                *p *= e;
            }
        } else {
            let f = self.factors(t, dt);
            for (p, e) in self.p12_hat.iter_mut().zip(&f) {
                *p *= e;
            }
        }
        Ok(())
    }

    fn state(&mut self, t: f64) -> FieldState {
        let amps = self.schedule.amplitudes(t);
        slave_spectrum(&self.p12_hat, &self.grid, self.params, self.det, &amps, &mut self.tr, t)
    }

    fn is_finite(&self) -> bool {
        all_finite(&self.p12_hat)
    }
}

fn phi12(x: C64) -> (C64, C64) {
    if x.norm() < 1e-2 {
        let p1 = 1.0 + x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)));
        let p2 = 0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x * (1.0 / 120.0 + x / 720.0)));
        (p1, p2)
    } else {
        let e = x.exp();
        ((e - 1.0) / x, (e - 1.0 - x) / (x * x))
    }
}

/// Weights of the exponential spatial march `y' = -ξ y + f` with `f`
/// linear across a cell: `y₊ = e y + w0 f₀ + w1 f₁`.
#[derive(Clone, Copy)]
struct March {
    e: C64,
    w0: C64,
    w1: C64,
}

impl March {
    fn new(xi: C64, h: f64) -> Self {
        let a = xi * h;
        let (p1, p2) = phi12(-a);
        March {
            e: (-a).exp(),
            w0: h * (p1 - p2),
            w1: h * p2,
        }
    }
}

/// Open-domain quasi-static scheme: fields follow from the spin coherence by
/// marching the stiff spatial equations from their inflow ends; the spin
/// coherence is advanced by RK4.
pub(crate) struct OpenAdiabatic<'a> {
    params: &'a MediumParams,
    schedule: &'a ControlSchedule,
    grid: SimGrid,
    rates: [C64; 3],
    xi: [C64; 3],
    march: [March; 3],
    mp: Vec<C64>,
    mm: Vec<C64>,
    p12: Vec<C64>,
    injection: Option<Injection>,
}

impl<'a> OpenAdiabatic<'a> {
    pub fn new(
        initial: &FieldState,
        params: &'a MediumParams,
        det: &Detunings,
        schedule: &'a ControlSchedule,
        injection: Option<Injection>,
    ) -> Self {
        let grid = initial.grid;
        let xi = complex_xi(params, det);
        let one = vec![C64::new(1.0, 0.0); grid.n_z];
        OpenAdiabatic {
            params,
            schedule,
            grid,
            rates: optical_rates(params, det),
            xi,
            march: xi.map(|x| March::new(x, grid.dz())),
            mp: phase_mask(&grid, params.k_o, 1.0).unwrap_or_else(|| one.clone()),
            mm: phase_mask(&grid, params.k_o, -1.0).unwrap_or(one),
            p12: initial.p12.clone(),
            injection,
        }
    }

    /// All seven envelopes in physical variables, slaved to `p12`.
    fn slave(&self, t: f64, p12: &[C64]) -> [Vec<C64>; 7] {
        let p = self.params;
        let n = self.grid.n_z;
        let amps = self.schedule.amplitudes(t);
        let inflow = self.injection.map_or(C64::new(0.0, 0.0), |inj| inj.value(t));
        let mut out: [Vec<C64>; 7] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]);
        for (i, ch) in Channel::ALL.into_iter().enumerate() {
            let (om, g) = (amps.get(ch), p.coupling(ch));
            let src = -(self.xi[i] * om / g);
            let m = self.march[i];
            let a = &mut out[i];
            if ch.direction() > 0.0 {
                a[0] = if ch == Channel::P1 { inflow } else { C64::new(0.0, 0.0) };
                for j in 0..n - 1 {
                    let (f0, f1) = (src * self.mm[j] * p12[j], src * self.mm[j + 1] * p12[j + 1]);
                    a[j + 1] = m.e * a[j] + m.w0 * f0 + m.w1 * f1;
                }
            } else {
                for j in (1..n).rev() {
                    let (f0, f1) = (src * self.mp[j] * p12[j], src * self.mp[j - 1] * p12[j - 1]);
                    a[j - 1] = m.e * a[j] + m.w0 * f0 + m.w1 * f1;
                }
            }
        }
        for j in 0..n {
            let s = p12[j];
            out[3][j] = I / self.rates[0] * (p.g1 * out[0][j] + amps.p1 * self.mm[j] * s);
            out[4][j] = I / self.rates[2] * (p.g1 * out[2][j] + amps.m1 * self.mp[j] * s);
            out[5][j] = I / self.rates[1] * (p.g2 * out[1][j] + amps.p2 * self.mm[j] * s);
        }
        out[6] = p12.to_vec();
        out
    }

    fn rhs(&self, t: f64, p12: &[C64]) -> Vec<C64> {
        let amps = self.schedule.amplitudes(t);
        let f = self.slave(t, p12);
        (0..self.grid.n_z)
            .map(|j| {
                -self.params.gamma2 * p12[j]
                    + I * (amps.p1 * self.mp[j] * f[3][j] + amps.m1 * self.mm[j] * f[4][j] + amps.p2 * self.mp[j] * f[5][j])
            })
            .collect()
    }
}

impl Stepper for OpenAdiabatic<'_> {
    fn advance(&mut self, t: f64, dt: f64) -> Result<()> {
        let axpy = |y: &[C64], k: &[C64], h: f64| -> Vec<C64> { y.iter().zip(k).map(|(a, b)| a + b * h).collect() };
        let y = &self.p12;
        let k1 = self.rhs(t, y);
        let k2 = self.rhs(t + 0.5 * dt, &axpy(y, &k1, 0.5 * dt));
        let k3 = self.rhs(t + 0.5 * dt, &axpy(y, &k2, 0.5 * dt));
        let k4 = self.rhs(t + dt, &axpy(y, &k3, dt));
        let next = (0..y.len())
            .map(|j| y[j] + (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (dt / 6.0))
            .collect();
        self.p12 = next;
        Ok(())
    }

    fn state(&mut self, t: f64) -> FieldState {
        let mut s = FieldState::zeros(self.grid, t);
        for (dst, src) in s.arrays_mut().into_iter().zip(self.slave(t, &self.p12)) {
            *dst = src;
        }
        s
    }

    fn is_finite(&self) -> bool {
        all_finite(&self.p12)
    }
}
