use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Channel, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    OpenInflow,
}

/// Uniform 1-D grid `z_j = z_min + j dz`, `dz = (z_max - z_min)/n_z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimGrid {
    pub z_min: f64,
    pub z_max: f64,
    pub n_z: usize,
    pub boundary: Boundary,
}

impl SimGrid {
    pub fn new(z_min: f64, z_max: f64, n_z: usize, boundary: Boundary) -> Result<Self> {
        let g = SimGrid {
            z_min,
            z_max,
            n_z,
            boundary,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z_min.is_finite() && self.z_max.is_finite() && self.z_max > self.z_min) {
            return Err(Error::InvalidGrid(format!(
                "need finite z_min < z_max, got [{}, {}]",
                self.z_min, self.z_max
            )));
        }
        if self.n_z < 64 || !self.n_z.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_z must be a power of two >= 64, got {}",
                self.n_z
            )));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.z_max - self.z_min
    }

    pub fn dz(&self) -> f64 {
        self.length() / self.n_z as f64
    }

    pub fn z(&self, j: usize) -> f64 {
        self.z_min + j as f64 * self.dz()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_z).map(|j| self.z(j)).collect()
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_z;
        let dk = 2.0 * PI / self.length();
        (0..n)
            .map(|m| {
                let m = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
                m * dk
            })
            .collect()
    }

    /// Same domain with twice the points.
    pub fn refined(&self) -> SimGrid {
        SimGrid {
            n_z: 2 * self.n_z,
            ..*self
        }
    }
}

/// Field envelopes and atomic coherences on a grid at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub grid: SimGrid,
    pub a_p1: Vec<C64>,
    pub a_p2: Vec<C64>,
    pub a_m1: Vec<C64>,
    pub p_plus: Vec<C64>,
    pub p_minus: Vec<C64>,
    pub p14: Vec<C64>,
    pub p12: Vec<C64>,
}

impl FieldState {
    pub fn zeros(grid: SimGrid, t: f64) -> Self {
        let z = vec![C64::new(0.0, 0.0); grid.n_z];
        FieldState {
            t,
            grid,
            a_p1: z.clone(),
            a_p2: z.clone(),
            a_m1: z.clone(),
            p_plus: z.clone(),
            p_minus: z.clone(),
            p14: z.clone(),
            p12: z,
        }
    }

    pub fn field(&self, ch: Channel) -> &[C64] {
        match ch {
            Channel::P1 => &self.a_p1,
            Channel::P2 => &self.a_p2,
            Channel::M1 => &self.a_m1,
        }
    }

    pub fn field_mut(&mut self, ch: Channel) -> &mut Vec<C64> {
        match ch {
            Channel::P1 => &mut self.a_p1,
            Channel::P2 => &mut self.a_p2,
            Channel::M1 => &mut self.a_m1,
        }
    }

    /// Optical coherence driven by channel `ch`.
    pub fn coherence(&self, ch: Channel) -> &[C64] {
        match ch {
            Channel::P1 => &self.p_plus,
            Channel::P2 => &self.p14,
            Channel::M1 => &self.p_minus,
        }
    }

    pub fn arrays(&self) -> [&[C64]; 7] {
        [
            &self.a_p1,
            &self.a_p2,
            &self.a_m1,
            &self.p_plus,
            &self.p_minus,
            &self.p14,
            &self.p12,
        ]
    }

    pub(crate) fn arrays_mut(&mut self) -> [&mut Vec<C64>; 7] {
        [
            &mut self.a_p1,
            &mut self.a_p2,
            &mut self.a_m1,
            &mut self.p_plus,
            &mut self.p_minus,
            &mut self.p14,
            &mut self.p12,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.arrays().iter().any(|a| a.len() != self.grid.n_z) {
            return Err(Error::InvalidInitialCondition(
                "array lengths differ from grid size".into(),
            ));
        }
        if !self.is_finite() {
            return Err(Error::InvalidInitialCondition("non-finite entries".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.arrays()
            .iter()
            .all(|a| a.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }
}
