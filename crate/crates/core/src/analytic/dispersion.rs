use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::model::{Channel, DerivedCoeffs, C64, I};

/// Which closed-form dispersion relation to evaluate.
///
/// `FirstOrder` is the rational form `ω = -iμ_s (D+1 - φ)/φ` obtained by
/// keeping the first non-adiabatic correction to the spin coherence.
/// `Resummed` is `ω = -iμ_s (1 - Σ α_σ/D_σ)`, the quasi-static limit of the
/// full light-atom system. The two agree to first order in `k/ξ` and in `γ̃2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionModel {
    #[default]
    FirstOrder,
    Resummed,
}

/// Below this `|φ|` the first-order relation is reported singular.
pub const PHI_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionSample {
    pub k: f64,
    pub omega: C64,
    pub chi_minus: C64,
    pub chi_plus: C64,
    pub phi: C64,
}

impl DispersionSample {
    /// Amplitude decay rate `-Im ω`.
    pub fn loss(&self) -> f64 {
        -self.omega.im
    }

    /// True when `Im ω` exceeds `tol` (gain instead of loss).
    pub fn has_gain(&self, tol: f64) -> bool {
        self.omega.im > tol
    }
}

fn denominators(c: &DerivedCoeffs, k_o: f64, k: f64) -> Result<[C64; 3]> {
    let d = Channel::ALL.map(|ch| c.denominator(ch, k_o, k));
    if d.iter().any(|v| !(v.norm() > 0.0 && v.is_finite())) {
        return Err(Error::DispersionSingularity {
            k,
            t: None,
            reason: "vanishing or non-finite wavenumber denominator",
        });
    }
    Ok(d)
}

/// Field-ratio factors `(χ-, χ+)` with `Ψ-1 = χ- Ψ+1` and `Ψ+2 = χ+ Ψ+1`.
pub fn chi_factors(c: &DerivedCoeffs, k_o: f64, k: f64) -> Result<(C64, C64)> {
    let [dp1, dp2, dm1] = denominators(c, k_o, k)?;
    Ok((dp1 / dm1, dp1 / dp2))
}

/// `φ = α-1 χ- + α+1 + α+2 χ+`.
pub fn phi(c: &DerivedCoeffs, k_o: f64, k: f64) -> Result<C64> {
    let (cm, cp) = chi_factors(c, k_o, k)?;
    Ok(c.alpha_m1 * cm + c.alpha_p1 + c.alpha_p2 * cp)
}

/// First-order dispersion relation `ω_k = -iμ_s (D+1 - φ)/φ`.
pub fn omega_k(c: &DerivedCoeffs, k_o: f64, k: f64) -> Result<C64> {
    let f = phi(c, k_o, k)?;
    if f.norm() < PHI_TOLERANCE {
        return Err(Error::DispersionSingularity {
            k,
            t: None,
            reason: "phi vanishes",
        });
    }
    let dp1 = c.denominator(Channel::P1, k_o, k);
    Ok(-I * c.mu_s * (dp1 - f) / f)
}

/// Quasi-static dispersion `ω_k = -iμ_s (1 - Σ α_σ/D_σ)`; defined for any
/// controls, including all zero with `γ2 > 0`.
pub fn omega_k_resummed(c: &DerivedCoeffs, k_o: f64, k: f64) -> Result<C64> {
    let d = denominators(c, k_o, k)?;
    let r = c.alpha_p1 / d[0] + c.alpha_p2 / d[1] + c.alpha_m1 / d[2];
    Ok(-I * c.mu_s * (1.0 - r))
}

pub fn omega(model: DispersionModel, c: &DerivedCoeffs, k_o: f64, k: f64) -> Result<C64> {
    match model {
        DispersionModel::FirstOrder => omega_k(c, k_o, k),
        DispersionModel::Resummed => omega_k_resummed(c, k_o, k),
    }
}

pub fn dispersion_sample(
    model: DispersionModel,
    c: &DerivedCoeffs,
    k_o: f64,
    k: f64,
) -> Result<DispersionSample> {
    let (chi_minus, chi_plus) = chi_factors(c, k_o, k)?;
    Ok(DispersionSample {
        k,
        omega: omega(model, c, k_o, k)?,
        chi_minus,
        chi_plus,
        phi: phi(c, k_o, k)?,
    })
}

/// Finite eigenfrequencies of the linearized three-field adiabatic system
/// at wavenumber `k`, from a dense complex eigensolve.
///
/// In the ordering `(Ψ+2, Ψ+1, Ψ-1)` the coupled-wave equations read
/// `D_σ Ψ_σ = S - ∂t S / μ_s` with `S = Σ α_σ Ψ_σ`. With `∂t = λ = -iω`
/// this is the pencil `A x = λ B x`, `A = diag(D) - e aᵀ`, `B = -e aᵀ/μ_s`.
/// `B` has rank one, so the pencil is shift-inverted about `σ` and the
/// infinite branches appear as zero eigenvalues of `(A - σB)⁻¹ B`.
pub fn oracle_branches(c: &DerivedCoeffs, k_o: f64, k: f64) -> Result<Vec<C64>> {
    let [dp1, dp2, dm1] = denominators(c, k_o, k)?;
    let d = [dp2, dp1, dm1];
    let a = [c.alpha_p2, c.alpha_p1, c.alpha_m1];
    let am = Matrix3::from_fn(|i, j| if i == j { d[i] } else { C64::new(0.0, 0.0) } - a[j]);
    let bm = Matrix3::from_fn(|_, j| -a[j] / c.mu_s);
    let sigma = c.mu_s * C64::new(0.5, 0.25);
    let shifted = am - bm * sigma;
    let m = shifted
        .lu()
        .solve(&bm)
        .ok_or(Error::EigenFailure("shifted pencil is singular"))?;
    let nu = m
        .eigenvalues()
        .ok_or(Error::EigenFailure("Schur decomposition did not converge"))?;
    let scale = nu.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    Ok(nu
        .iter()
        .filter(|v| v.norm() > 1e-10 * scale)
        .map(|v| I * (sigma + 1.0 / v))
        .collect())
}

/// Relative spacing below which two finite branches count as degenerate.
pub const BRANCH_DEGENERACY: f64 = 1e-8;

/// Slow-branch eigenfrequency: the finite branch of smallest `|Im ω|`.
pub fn eigenvalue_oracle(c: &DerivedCoeffs, k_o: f64, k: f64) -> Result<C64> {
    let mut b = oracle_branches(c, k_o, k)?;
    if b.is_empty() {
        return Err(Error::EigenFailure("no finite branch"));
    }
    b.sort_by(|x, y| x.im.abs().total_cmp(&y.im.abs()));
    if b.len() > 1 {
        let gap = (b[1].im.abs() - b[0].im.abs()).abs();
        if gap <= BRANCH_DEGENERACY * b[1].norm().max(c.mu_s.norm()) {
            return Err(Error::AmbiguousBranch { branches: b });
        }
    }
    Ok(b[0])
}

/// Second derivative of `ω_k` at `k = 0` with both common normalizations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Curvature {
    /// `d²ω/dk²` at `k = 0`.
    pub omega_kk: C64,
    /// `i ω_kk / 2`: the coefficient in `ω ≈ … - i δω'' k²/2`.
    pub delta: C64,
    /// Growth rate of the squared pulse length, `|Im ω_kk|`.
    pub spreading_rate: f64,
    /// Closed-form optimum `2v+1/ξ13 + v+2 (1/ξ13 + 1/ξ14)`, valid when the
    /// optimal-detuning condition and the stationary condition hold.
    pub closed_form: f64,
}

/// Seven-point central second difference.
fn second_difference(f: impl Fn(f64) -> Result<C64>, h: f64) -> Result<C64> {
    const W: [f64; 4] = [-490.0, 270.0, -27.0, 2.0];
    let mut acc = f(0.0)? * W[0];
    for (j, w) in W.iter().enumerate().skip(1) {
        let x = j as f64 * h;
        acc += (f(x)? + f(-x)?) * *w;
    }
    Ok(acc / (180.0 * h * h))
}

fn min_xi(c: &DerivedCoeffs) -> f64 {
    [c.xi_p1, c.xi_p2, c.xi_m1]
        .iter()
        .map(|x| x.norm())
        .fold(f64::INFINITY, f64::min)
}

pub fn curvature(model: DispersionModel, c: &DerivedCoeffs, k_o: f64) -> Result<Curvature> {
    let h = 0.02 * min_xi(c);
    let omega_kk = second_difference(|k| omega(model, c, k_o, k), h)?;
    // v/ξ13 = Ω²/(γ ξ²) per channel; Ω² = μ_s α γ and ξ13 = ξ γ/Re γ.
    let per = |ch: Channel| {
        let g = c.gamma(ch);
        let w = (c.mu_s * c.alpha(ch) * g).re;
        let xi0 = (c.xi(ch) * g).re / g.re;
        (w / (g.re * xi0), xi0)
    };
    let (v1, x13) = per(Channel::P1);
    let (v2, x14) = per(Channel::P2);
    let closed_form = 2.0 * v1 / x13 + v2 * (1.0 / x13 + 1.0 / x14);
    Ok(Curvature {
        omega_kk,
        delta: I * omega_kk / 2.0,
        spreading_rate: omega_kk.im.abs(),
        closed_form,
    })
}

/// Slope `d Re ω/dk` at `k = 0` by a six-point central difference.
pub fn dispersion_slope(model: DispersionModel, c: &DerivedCoeffs, k_o: f64) -> Result<f64> {
    const W: [f64; 3] = [45.0, -9.0, 1.0];
    let h = 0.01 * min_xi(c);
    let mut acc = 0.0;
    for (j, w) in W.iter().enumerate() {
        let x = (j + 1) as f64 * h;
        acc += w * (omega(model, c, k_o, x)? - omega(model, c, k_o, -x)?).re;
    }
    Ok(acc / (60.0 * h))
}
