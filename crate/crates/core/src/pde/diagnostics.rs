use crate::model::{Channel, FieldState, MediumParams, C64};

/// Moments of `|f|²` on the grid. Centroid and width are `None` for a
/// field that vanishes identically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub energy: f64,
    pub centroid: Option<f64>,
    pub width: Option<f64>,
}

impl Moments {
    pub fn of(f: &[C64], z_min: f64, dz: f64) -> Moments {
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for (j, v) in f.iter().enumerate() {
            let w = v.norm_sqr();
            s0 += w;
            s1 += w * (z_min + j as f64 * dz);
        }
        if s0 == 0.0 {
            return Moments {
                energy: 0.0,
                centroid: None,
                width: None,
            };
        }
        let m = s1 / s0;
        let s2: f64 = f
            .iter()
            .enumerate()
            .map(|(j, v)| v.norm_sqr() * (z_min + j as f64 * dz - m).powi(2))
            .sum();
        Moments {
            energy: s0 * dz,
            centroid: Some(m),
            width: Some((s2 / s0).sqrt()),
        }
    }

    /// Gaussian amplitude length `l` with `|f|² ∝ exp(-z²/l²)`, i.e. `√2·rms`.
    pub fn gaussian_length(&self) -> Option<f64> {
        self.width.map(|w| std::f64::consts::SQRT_2 * w)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    /// Field moments ordered `(+1, +2, -1)`.
    pub fields: [Moments; 3],
    pub spin: Moments,
    /// `Σ ∫|A_σ|² dz`.
    pub total_energy: f64,
    /// `∫|P12|² dz`.
    pub spin_norm: f64,
}

impl Diagnostics {
    pub fn field(&self, ch: Channel) -> &Moments {
        match ch {
            Channel::P1 => &self.fields[0],
            Channel::P2 => &self.fields[1],
            Channel::M1 => &self.fields[2],
        }
    }
}

pub fn diagnostics(state: &FieldState) -> Diagnostics {
    let (z0, dz) = (state.grid.z_min, state.grid.dz());
    let fields = Channel::ALL.map(|ch| Moments::of(state.field(ch), z0, dz));
    let spin = Moments::of(&state.p12, z0, dz);
    Diagnostics {
        t: state.t,
        total_energy: fields.iter().map(|m| m.energy).sum(),
        spin_norm: spin.energy,
        fields,
        spin,
    }
}

/// `∫ Σ|A|² + (N/c)(|P+|² + |P-|² + |P14|² + |P12|²) dz`, non-increasing
/// under the full equations without injection.
pub fn weighted_norm(state: &FieldState, params: &MediumParams) -> f64 {
    let sq = |v: &[C64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>();
    let fields = sq(&state.a_p1) + sq(&state.a_p2) + sq(&state.a_m1);
    let atoms = sq(&state.p_plus) + sq(&state.p_minus) + sq(&state.p14) + sq(&state.p12);
    state.grid.dz() * (fields + params.n / params.c * atoms)
}
