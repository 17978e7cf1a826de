use crate::model::ControlSchedule;

const GL_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL_W: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Four-point Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    GL_X.iter().zip(GL_W.iter()).map(move |(x, w)| (m + h * x, h * w))
}

/// Quadrature nodes over `[t0, t1]` for integrands that depend on time only
/// through the control amplitudes. Pieces are split at schedule breakpoints;
/// constant pieces get one panel, ramping pieces `substeps` panels.
pub fn schedule_nodes(schedule: &ControlSchedule, t0: f64, t1: f64, substeps: usize) -> Vec<(f64, f64)> {
    if t1 <= t0 {
        return Vec::new();
    }
    let mut cuts = vec![t0];
    cuts.extend(schedule.breakpoints().into_iter().filter(|&b| b > t0 && b < t1));
    cuts.push(t1);
    let mut nodes = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let panels = if schedule.is_constant_on(a, b) {
            1
        } else {
            substeps.max(1)
        };
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let hi = if p + 1 == panels { b } else { lo + h };
            nodes.extend(gauss_legendre(lo, hi));
        }
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Rabi, Segment};

    #[test]
    fn integrates_cubic_exactly() {
        let s: f64 = gauss_legendre(-1.0, 2.0).map(|(t, w)| w * t.powi(7)).sum();
        assert!((s - (256.0 - 1.0) / 8.0).abs() < 1e-12);
    }

    #[test]
    fn integrates_ramped_amplitude() {
        let s = ControlSchedule::new(
            Rabi::ZERO,
            vec![Segment {
                start: 0.0,
                end: 4.0,
                target: Rabi::new(1.0, 0.0, 0.0),
                ramp: 2.0,
            }],
        )
        .unwrap();
        // ∫ S dt over the ramp is ramp/2 by symmetry, then 2 more units at 1.
        let v: f64 = schedule_nodes(&s, 0.0, 4.0, 16)
            .into_iter()
            .map(|(t, w)| w * s.amplitudes(t).p1)
            .sum();
        assert!((v - 3.0).abs() < 1e-10, "{v}");
        assert!(schedule_nodes(&s, 1.0, 1.0, 8).is_empty());
    }
}
