//! Grid-based L^p and W^{1,p} norms, a spectral H^s estimator, and the
//! weighted norm ‖1/u_a‖_{L^b} that controls the inhomogeneous stability
//! estimates.
//!
//! The H^s norm treats both directions as periodic on the truncated box, so
//! profiles must decay below 1e-10 of their peak at the momentum boundary;
//! the precondition is enforced. W^{s,a} for fractional s and a ≠ 2 is out
//! of scope: integer-order W^{1,p} plus spectral H^s covers every scaling
//! exercised here.

use crate::error::{Error, Result};
use crate::grid::PhaseGrid;
use crate::quad::{self, QuadSpec};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Norm families the estimator understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormFamily {
    Lp,
    W1p,
    Hs,
}

/// A norm request: family plus its exponents. H^s always uses p = 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub family: NormFamily,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub s: f64,
}

fn default_p() -> f64 {
    2.0
}

impl NormSpec {
    pub fn lp(p: f64) -> Self {
        NormSpec {
            family: NormFamily::Lp,
            p,
            s: 0.0,
        }
    }

    pub fn w1p(p: f64) -> Self {
        NormSpec {
            family: NormFamily::W1p,
            p,
            s: 1.0,
        }
    }

    pub fn hs(s: f64) -> Self {
        NormSpec {
            family: NormFamily::Hs,
            p: 2.0,
            s,
        }
    }

    pub fn eval(&self, grid: &PhaseGrid) -> Result<f64> {
        match self.family {
            NormFamily::Lp => lp_norm(grid, self.p),
            NormFamily::W1p => w1p_norm(grid, self.p),
            NormFamily::Hs => hs_norm(grid, self.s),
        }
    }
}

/// Discrete L^p norm (∬ |f|^p dq dp)^{1/p}; p = ∞ returns the grid maximum.
pub fn lp_norm(grid: &PhaseGrid, p: f64) -> Result<f64> {
    if p.is_infinite() && p > 0.0 {
        return Ok(grid.max_abs());
    }
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("L^p norm requires p >= 1, got {p}")));
    }
    let dq = grid.dq();
    let mut total = 0.0;
    for i in 0..grid.nq() {
        let mut row = 0.0;
        for j in 0..grid.np() {
            row += grid.p_weight(j) * grid.get(i, j).abs().powf(p);
        }
        total += row * dq;
    }
    Ok(total.powf(1.0 / p))
}

/// Centered-difference gradient magnitude |∇f| on the grid nodes.
///
/// Periodic differences in q; centered in the interior of p with one-sided
/// second-order stencils at the momentum boundary.
fn gradient_magnitude(grid: &PhaseGrid) -> PhaseGrid {
    let (nq, np) = (grid.nq(), grid.np());
    let (dq, dp) = (grid.dq(), grid.dp());
    let mut out = PhaseGrid::zeros(grid.spec());
    for i in 0..nq {
        let im = (i + nq - 1) % nq;
        let ip = (i + 1) % nq;
        for j in 0..np {
            let fq = (grid.get(ip, j) - grid.get(im, j)) / (2.0 * dq);
            let fp = if j == 0 {
                (-3.0 * grid.get(i, 0) + 4.0 * grid.get(i, 1) - grid.get(i, 2)) / (2.0 * dp)
            } else if j == np - 1 {
                (3.0 * grid.get(i, np - 1) - 4.0 * grid.get(i, np - 2) + grid.get(i, np - 3))
                    / (2.0 * dp)
            } else {
                (grid.get(i, j + 1) - grid.get(i, j - 1)) / (2.0 * dp)
            };
            out.set(i, j, fq.hypot(fp));
        }
    }
    out
}

/// W^{1,p} norm: ‖f‖_{L^p} + ‖∇f‖_{L^p} with a centered-difference gradient.
pub fn w1p_norm(grid: &PhaseGrid, p: f64) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::Domain("W^{1,p} norm requires finite p".into()));
    }
    Ok(lp_norm(grid, p)? + lp_norm(&gradient_magnitude(grid), p)?)
}

/// Spectral H^s norm (Σ (1 + |ξ|²)^s |f̂(ξ)|²)^{1/2} by 2D DFT.
///
/// Frequencies are ξ_q ∈ ℤ (period 2π) and ξ_p ∈ (2π/L_p)ℤ on the periodized
/// momentum box of length L_p = np·dp. Profiles must decay below 1e-10 of
/// their peak at the momentum boundary for the periodization to be harmless.
pub fn hs_norm(grid: &PhaseGrid, s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::Domain(format!("H^s norm requires s >= 0, got {s}")));
    }
    let peak = grid.max_abs();
    if peak > 0.0 && grid.boundary_max() > 1e-10 * peak {
        return Err(Error::Grid(format!(
            "momentum-boundary value {:.3e} exceeds 1e-10 of the peak {:.3e}; \
             the periodized spectral norm would alias",
            grid.boundary_max(),
            peak
        )));
    }
    let (nq, np) = (grid.nq(), grid.np());
    let mut data: Vec<Complex<f64>> = grid
        .values()
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();

    let mut planner = FftPlanner::new();
    let fft_p = planner.plan_fft_forward(np);
    for row in data.chunks_exact_mut(np) {
        fft_p.process(row);
    }
    let fft_q = planner.plan_fft_forward(nq);
    let mut col = vec![Complex::new(0.0, 0.0); nq];
    for j in 0..np {
        for i in 0..nq {
            col[i] = data[i * np + j];
        }
        fft_q.process(&mut col);
        for i in 0..nq {
            data[i * np + j] = col[i];
        }
    }

    let (dq, dp) = (grid.dq(), grid.dp());
    let l_p = np as f64 * dp;
    let cell = dq * dp; // continuum Fourier coefficient = cell · DFT
    let norm_factor = cell * cell / (2.0 * PI * l_p);
    let mut sum = 0.0;
    for i in 0..nq {
        let ki = if i <= nq / 2 {
            i as f64
        } else {
            i as f64 - nq as f64
        };
        let xi_q = ki; // 2π k / L_q with L_q = 2π
        for j in 0..np {
            let lj = if j <= np / 2 {
                j as f64
            } else {
                j as f64 - np as f64
            };
            let xi_p = 2.0 * PI * lj / l_p;
            let weight = (1.0 + xi_q * xi_q + xi_p * xi_p).powf(s);
            sum += weight * data[i * np + j].norm_sqr() * norm_factor;
        }
    }
    Ok(sum.sqrt())
}

/// The Hölder weight u_a(q, p; m) = (|p|^a + |m sin q|^a)^{1/a}.
pub fn ua_weight(q: f64, p: f64, m: f64, a: f64) -> f64 {
    (p.abs().powf(a) + (m * q.sin()).abs().powf(a)).powf(1.0 / a)
}

/// ‖1/u_a‖_{L^b} over the cylinder (−π, π] × ℝ.
///
/// Finite exactly for 1 < b < 2 (and any a > 0): the integrand has r^{1−b}
/// singularities at (0,0) and (±π,0) and decays like |p|^{−b}. The outer
/// q-integral is regularized by the substitution q = (π/2)·u^{2/(2−b)}, which
/// flattens the q^{1−b} endpoint singularity; the inner p-integral is scaled
/// by s = m|sin q| and completed with a two-term analytic tail.
pub fn inv_ua_lb_norm(a: f64, b: f64, m: f64, spec: &QuadSpec) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!(
            "weight exponent a must be positive, got {a}"
        )));
    }
    if !(m > 0.0) {
        return Err(Error::Domain(format!("m must be positive, got {m}")));
    }
    if !(b > 1.0 && b < 2.0) {
        return Err(Error::Divergent(format!(
            "‖1/u_a‖_{{L^b}} diverges for b outside (1, 2), got b = {b}"
        )));
    }

    let t_cut = 50.0_f64;
    let inner_spec = QuadSpec {
        rel_tol: 0.1 * spec.rel_tol,
        abs_tol: 0.0,
        max_segments: spec.max_segments,
    };
    // ∫_0^∞ (p^a + s^a)^{-b/a} dp = s^{1-b} [∫_0^T (1+t^a)^{-b/a} dt + tail]
    let body = quad::adaptive_split(
        &|t: f64| (1.0 + t.powf(a)).powf(-b / a),
        &[0.0, 1.0, 3.0, 10.0, t_cut],
        &inner_spec,
    )?;
    let tail = t_cut.powf(1.0 - b) / (b - 1.0) - (b / a) * t_cut.powf(1.0 - a - b) / (a + b - 1.0);
    let inner_const = body + tail;

    // Outer: 8 ∫_0^{π/2} (m sin q)^{1-b} dq with q = (π/2) u^γ, γ = 2/(2−b).
    let gamma = 2.0 / (2.0 - b);
    let outer = quad::adaptive(
        &|u: f64| {
            let q = 0.5 * PI * u.powf(gamma);
            let s = m * q.sin();
            s.powf(1.0 - b) * gamma * 0.5 * PI * u.powf(gamma - 1.0)
        },
        0.0,
        1.0,
        spec,
    )?;

    Ok((8.0 * inner_const * outer).powf(1.0 / b))
}
