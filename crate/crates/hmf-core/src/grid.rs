//! Uniform tabulation of a distribution on the truncated phase space.
//!
//! The grid covers q ∈ (−π, π] periodically (nq nodes, no duplicate) and
//! p ∈ [−p_max, p_max] inclusively (np nodes). It is the common substrate of
//! the semi-Lagrangian solver, the norm estimators and every grid quadrature.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Grid shape: resolutions and momentum truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nq: usize,
    pub np: usize,
    pub p_max: f64,
}

impl GridSpec {
    pub fn new(nq: usize, np: usize, p_max: f64) -> Self {
        GridSpec { nq, np, p_max }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nq < 4 || self.np < 4 {
            return Err(Error::Config(format!(
                "grid must be at least 4x4, got {}x{}",
                self.nq, self.np
            )));
        }
        if !(self.p_max > 0.0) {
            return Err(Error::Config(format!(
                "p_max must be positive, got {}",
                self.p_max
            )));
        }
        Ok(())
    }
}

/// f(q_i, p_j) sampled on the truncated box, row-major in q.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    nq: usize,
    np: usize,
    p_max: f64,
    values: Vec<f64>,
}

impl PhaseGrid {
    /// Zero-filled grid.
    pub fn zeros(spec: GridSpec) -> Self {
        PhaseGrid {
            nq: spec.nq,
            np: spec.np,
            p_max: spec.p_max,
            values: vec![0.0; spec.nq * spec.np],
        }
    }

    /// Tabulate a function of (q, p) on the grid.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut grid = Self::zeros(spec);
        for i in 0..grid.nq {
            let q = grid.q(i);
            for j in 0..grid.np {
                let p = grid.p(j);
                grid.values[i * grid.np + j] = f(q, p);
            }
        }
        grid
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            nq: self.nq,
            np: self.np,
            p_max: self.p_max,
        }
    }

    pub fn nq(&self) -> usize {
        self.nq
    }

    pub fn np(&self) -> usize {
        self.np
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    /// Periodic spacing 2π/nq.
    pub fn dq(&self) -> f64 {
        2.0 * PI / self.nq as f64
    }

    /// Node spacing 2·p_max/(np − 1); both momentum endpoints are nodes.
    pub fn dp(&self) -> f64 {
        2.0 * self.p_max / (self.np - 1) as f64
    }

    /// Node angle q_i = −π + i·dq.
    pub fn q(&self, i: usize) -> f64 {
        -PI + i as f64 * self.dq()
    }

    /// Node momentum p_j = −p_max + j·dp.
    pub fn p(&self, j: usize) -> f64 {
        -self.p_max + j as f64 * self.dp()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.np + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.np + j] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Trapezoid weight of momentum node j (dp, halved at the endpoints).
    #[inline]
    pub fn p_weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.np - 1 {
            0.5 * self.dp()
        } else {
            self.dp()
        }
    }

    /// Grid quadrature ∬ w(q, p) f(q, p) dq dp.
    pub fn moment(&self, w: impl Fn(f64, f64) -> f64) -> f64 {
        let dq = self.dq();
        let mut total = 0.0;
        for i in 0..self.nq {
            let q = self.q(i);
            let mut row = 0.0;
            for j in 0..self.np {
                row += self.p_weight(j) * w(q, self.p(j)) * self.values[i * self.np + j];
            }
            total += row * dq;
        }
        total
    }

    /// Total mass ∬ f dq dp.
    pub fn mass(&self) -> f64 {
        self.moment(|_, _| 1.0)
    }

    /// Multiply every value by a constant.
    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Rescale so the grid mass is exactly 1; errors on non-positive mass.
    pub fn normalize(&mut self) -> Result<()> {
        let mass = self.mass();
        if !(mass > 0.0) {
            return Err(Error::Grid(format!(
                "cannot normalize grid with mass {mass}"
            )));
        }
        self.scale(1.0 / mass);
        Ok(())
    }

    /// Largest |f| on the two momentum-boundary rows.
    pub fn boundary_max(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.nq {
            worst = worst.max(self.get(i, 0).abs());
            worst = worst.max(self.get(i, self.np - 1).abs());
        }
        worst
    }

    /// Largest |f| anywhere.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}
