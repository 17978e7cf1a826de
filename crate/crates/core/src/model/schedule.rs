use crate::error::{Error, Result};

use super::Rabi;

/// Steepness of the tanh ramp profile.
pub const RAMP_STEEPNESS: f64 = 3.0;

/// Smooth monotone step on `[0, 1]`, exactly 0 at `x <= 0` and 1 at `x >= 1`.
pub fn ramp_profile(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let b = RAMP_STEEPNESS;
    ((b * (2.0 * x - 1.0)).tanh() + b.tanh()) / (2.0 * b.tanh())
}

/// One schedule segment. Amplitudes ramp from the previous target to
/// `target` over `ramp` from `start`, then stay constant until `end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub target: Rabi,
    pub ramp: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlSchedule {
    initial: Rabi,
    segments: Vec<Segment>,
}

impl ControlSchedule {
    /// `initial` is the amplitude set the first segment ramps from.
    pub fn new(initial: Rabi, segments: Vec<Segment>) -> Result<Self> {
        initial.validate()?;
        if segments.is_empty() {
            return Err(Error::InvalidSchedule("no segments".into()));
        }
        for (i, s) in segments.iter().enumerate() {
            s.target.validate()?;
            if !(s.start.is_finite() && s.end.is_finite() && s.end > s.start) {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i} has empty or non-finite span [{}, {}]",
                    s.start, s.end
                )));
            }
            if !(s.ramp > 0.0 && s.ramp <= s.end - s.start) {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i}: ramp {} must lie in (0, {}]",
                    s.ramp,
                    s.end - s.start
                )));
            }
            if i > 0 {
                let prev = segments[i - 1].end;
                let tol = 1e-12 * prev.abs().max(1.0);
                if (s.start - prev).abs() > tol {
                    return Err(Error::InvalidSchedule(format!(
                        "segment {i} starts at {} but previous ends at {prev}",
                        s.start
                    )));
                }
            }
        }
        Ok(ControlSchedule { initial, segments })
    }

    /// Constant controls over `[t0, t1]`.
    pub fn constant(amps: Rabi, t0: f64, t1: f64) -> Result<Self> {
        Self::new(
            amps,
            vec![Segment {
                start: t0,
                end: t1,
                target: amps,
                ramp: t1 - t0,
            }],
        )
    }

    pub fn initial(&self) -> Rabi {
        self.initial
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn start(&self) -> f64 {
        self.segments[0].start
    }

    pub fn end(&self) -> f64 {
        self.segments[self.segments.len() - 1].end
    }

    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        let tol = 1e-9 * (self.end() - self.start()).abs().max(1.0);
        t0 >= self.start() - tol && t1 <= self.end() + tol && t0 <= t1
    }

    fn origin(&self, i: usize) -> Rabi {
        if i == 0 {
            self.initial
        } else {
            self.segments[i - 1].target
        }
    }

    /// Amplitudes at `t`, clamped to the end values outside the span.
    pub fn amplitudes(&self, t: f64) -> Rabi {
        if t <= self.start() {
            return self.amp_in(0, t);
        }
        let i = self
            .segments
            .partition_point(|s| s.end < t)
            .min(self.segments.len() - 1);
        self.amp_in(i, t)
    }

    fn amp_in(&self, i: usize, t: f64) -> Rabi {
        let s = &self.segments[i];
        let from = self.origin(i);
        from.lerp(&s.target, ramp_profile((t - s.start) / s.ramp))
    }

    /// Times where the profile is not smooth: segment starts, ramp ends and
    /// the final end, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(2 * self.segments.len() + 1);
        for s in &self.segments {
            b.push(s.start);
            b.push(s.start + s.ramp);
        }
        b.push(self.end());
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Shortest ramp among segments whose target differs from their origin.
    pub fn fastest_ramp(&self) -> Option<f64> {
        self.segments
            .iter()
            .enumerate()
            .filter(|(i, s)| s.target != self.origin(*i))
            .map(|(_, s)| s.ramp)
            .reduce(f64::min)
    }

    /// Largest amplitude reached anywhere in the schedule.
    pub fn max_amplitude(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.target.max())
            .fold(self.initial.max(), f64::max)
    }

    /// True when the amplitudes are constant over `[t0, t1]`.
    pub fn is_constant_on(&self, t0: f64, t1: f64) -> bool {
        !self
            .segments
            .iter()
            .enumerate()
            .any(|(i, s)| s.target != self.origin(i) && s.start < t1 && s.start + s.ramp > t0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_step() -> ControlSchedule {
        ControlSchedule::new(
            Rabi::new(1.0, 0.0, 0.0),
            vec![
                Segment {
                    start: 0.0,
                    end: 10.0,
                    target: Rabi::new(1.0, 0.0, 0.0),
                    ramp: 1.0,
                },
                Segment {
                    start: 10.0,
                    end: 30.0,
                    target: Rabi::new(1.0, 1.0, 2f64.sqrt()),
                    ramp: 5.0,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn profile_endpoints_and_symmetry() {
        assert_eq!(ramp_profile(0.0), 0.0);
        assert_eq!(ramp_profile(1.0), 1.0);
        assert!((ramp_profile(0.5) - 0.5).abs() < 1e-15);
        for x in [0.1, 0.27, 0.4] {
            assert!((ramp_profile(x) + ramp_profile(1.0 - x) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ramps_between_targets() {
        let s = two_step();
        assert_eq!(s.amplitudes(5.0), Rabi::new(1.0, 0.0, 0.0));
        assert_eq!(s.amplitudes(15.0), Rabi::new(1.0, 1.0, 2f64.sqrt()));
        let mid = s.amplitudes(12.5);
        assert!((mid.p2 - 0.5).abs() < 1e-14);
        assert_eq!(s.amplitudes(-3.0), Rabi::new(1.0, 0.0, 0.0));
        assert_eq!(s.amplitudes(99.0), Rabi::new(1.0, 1.0, 2f64.sqrt()));
    }

    #[test]
    fn continuity_at_boundaries() {
        let s = two_step();
        let a = s.amplitudes(10.0 - 1e-12);
        let b = s.amplitudes(10.0 + 1e-12);
        assert!((a.p2 - b.p2).abs() < 1e-9);
    }

    #[test]
    fn rejects_gaps_and_bad_ramps() {
        let seg = |start, end, ramp| Segment {
            start,
            end,
            target: Rabi::new(1.0, 0.0, 0.0),
            ramp,
        };
        assert!(ControlSchedule::new(Rabi::ZERO, vec![seg(0.0, 1.0, 0.5), seg(1.5, 2.0, 0.1)]).is_err());
        assert!(ControlSchedule::new(Rabi::ZERO, vec![seg(0.0, 1.0, 0.0)]).is_err());
        assert!(ControlSchedule::new(Rabi::ZERO, vec![seg(0.0, 1.0, 2.0)]).is_err());
        assert!(ControlSchedule::new(Rabi::ZERO, vec![]).is_err());
    }

    #[test]
    fn constant_detection() {
        let s = two_step();
        assert!(s.is_constant_on(1.0, 9.0));
        assert!(!s.is_constant_on(9.0, 11.0));
        assert!(s.is_constant_on(15.0, 30.0));
        assert_eq!(s.fastest_ramp(), Some(5.0));
    }
}
