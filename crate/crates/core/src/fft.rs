use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::model::C64;

/// Forward/inverse transform pair of fixed length; the inverse is normalized.
#[derive(Clone)]
pub(crate) struct Transform {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
}

impl Transform {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Transform {
            forward,
            inverse,
            scratch: vec![C64::new(0.0, 0.0); len],
        }
    }

    pub fn forward(&mut self, data: &mut [C64]) {
        self.forward.process_with_scratch(data, &mut self.scratch);
    }

    pub fn inverse(&mut self, data: &mut [C64]) {
        self.inverse.process_with_scratch(data, &mut self.scratch);
        let s = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut t = Transform::new(64);
        let orig: Vec<C64> = (0..64).map(|j| C64::new((j as f64).sin(), 0.1 * j as f64)).collect();
        let mut d = orig.clone();
        t.forward(&mut d);
        t.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
