//! Cubic-spline resampling of uniformly spaced rows, the kernel of the
//! semi-Lagrangian sweeps. Every sweep shifts a whole row by a constant
//! offset, so the fractional cell coordinate is shared by all targets and
//! evaluation is a gather plus one blend per node.

/// Precomputed tridiagonal factorization for spline second derivatives.
///
/// The system matrix depends only on the row length and boundary condition
/// (periodic via Sherman–Morrison, or natural), so one solver is shared by
/// every row of a sweep.
pub(crate) struct CubicSolver {
    n: usize,
    periodic: bool,
    /// Forward-elimination coefficients of the Thomas sweep.
    cp: Vec<f64>,
    /// Sherman–Morrison correction vector (periodic only).
    z: Vec<f64>,
    /// 1 + v·z denominator of the rank-one update (periodic only).
    denom: f64,
}

const GAMMA: f64 = -4.0;

impl CubicSolver {
    pub fn periodic(n: usize) -> Self {
        assert!(n >= 4, "periodic spline needs at least 4 nodes");
        // Cyclic tridiag(1, 4, 1) minus the rank-one update u⊗v with
        // u = (γ, 0, …, 0, 1), v = (1, 0, …, 0, 1/γ) leaves a plain
        // tridiagonal with end diagonals 4 − γ and 4 − 1/γ.
        let mut diag = vec![4.0; n];
        diag[0] = 4.0 - GAMMA;
        diag[n - 1] = 4.0 - 1.0 / GAMMA;
        let cp = forward_coeffs(&diag);

        let mut z = vec![0.0; n];
        z[0] = GAMMA;
        z[n - 1] = 1.0;
        thomas_unit_offdiag(&cp, &mut z);
        let denom = 1.0 + z[0] + z[n - 1] / GAMMA;

        CubicSolver {
            n,
            periodic: true,
            cp,
            z,
            denom,
        }
    }

    pub fn natural(n: usize) -> Self {
        assert!(n >= 4, "natural spline needs at least 4 nodes");
        // Unknowns are the n−2 interior second derivatives, diagonal 4.
        let cp = forward_coeffs(&vec![4.0; n - 2]);
        CubicSolver {
            n,
            periodic: false,
            cp,
            z: Vec::new(),
            denom: 1.0,
        }
    }

    /// Scaled second derivatives m = M·h²/6 of row `y`; h² cancels against
    /// the rhs, so rows never need the physical spacing.
    fn second_derivs(&self, y: &[f64], m: &mut Vec<f64>) {
        debug_assert_eq!(y.len(), self.n);
        let n = self.n;
        m.clear();
        m.resize(n, 0.0);
        if self.periodic {
            for i in 0..n {
                let prev = y[(i + n - 1) % n];
                let next = y[(i + 1) % n];
                m[i] = 6.0 * (next - 2.0 * y[i] + prev);
            }
            thomas_unit_offdiag(&self.cp, m);
            let factor = (m[0] + m[n - 1] / GAMMA) / self.denom;
            for (mi, zi) in m.iter_mut().zip(&self.z) {
                *mi -= factor * zi;
            }
        } else {
            for i in 1..n - 1 {
                m[i] = 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]);
            }
            thomas_unit_offdiag(&self.cp, &mut m[1..n - 1]);
            m[0] = 0.0;
            m[n - 1] = 0.0;
        }
        for v in m.iter_mut() {
            *v /= 6.0;
        }
    }
}

fn forward_coeffs(diag: &[f64]) -> Vec<f64> {
    let mut cp = vec![0.0; diag.len()];
    cp[0] = 1.0 / diag[0];
    for i in 1..diag.len() {
        cp[i] = 1.0 / (diag[i] - cp[i - 1]);
    }
    cp
}

/// Thomas solve in place for sub- and super-diagonals equal to 1, with the
/// diagonal already folded into the forward coefficients `cp`.
fn thomas_unit_offdiag(cp: &[f64], d: &mut [f64]) {
    let n = d.len();
    d[0] *= cp[0];
    for i in 1..n {
        d[i] = (d[i] - d[i - 1]) * cp[i];
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}

/// Per-thread scratch for row resampling; `src` keeps a copy of the input so
/// rows can be resampled in place.
#[derive(Default)]
pub(crate) struct RowScratch {
    m: Vec<f64>,
    src: Vec<f64>,
}

/// Cubic blend weights at fractional position t ∈ [0, 1).
#[inline]
fn blend(t: f64) -> (f64, f64, f64, f64) {
    let w0 = 1.0 - t;
    (w0, t, w0 * w0 * w0 - w0, t * t * t - t)
}

/// Periodic in-place resample: row[i] ← S(x_i + offset).
pub(crate) fn resample_periodic_cubic(
    solver: &CubicSolver,
    h: f64,
    offset: f64,
    scratch: &mut RowScratch,
    row: &mut [f64],
) {
    let n = row.len();
    scratch.src.clear();
    scratch.src.extend_from_slice(row);
    let src = std::mem::take(&mut scratch.src);
    solver.second_derivs(&src, &mut scratch.m);
    let m = &scratch.m;

    let shift = offset / h;
    let base = shift.floor();
    let t = shift - base;
    let base = base as i64;
    let (w0, w1, c0, c1) = blend(t);
    for (i, o) in row.iter_mut().enumerate() {
        let j = (i as i64 + base).rem_euclid(n as i64) as usize;
        let j1 = if j + 1 == n { 0 } else { j + 1 };
        *o = w0 * src[j] + w1 * src[j1] + c0 * m[j] + c1 * m[j1];
    }
    scratch.src = src;
}

/// Natural-spline in-place resample with zero inflow: row[i] ← S(x_i + offset),
/// 0 outside the node range.
pub(crate) fn resample_natural_cubic(
    solver: &CubicSolver,
    h: f64,
    offset: f64,
    scratch: &mut RowScratch,
    row: &mut [f64],
) {
    let n = row.len();
    scratch.src.clear();
    scratch.src.extend_from_slice(row);
    let src = std::mem::take(&mut scratch.src);
    solver.second_derivs(&src, &mut scratch.m);
    let m = &scratch.m;

    let shift = offset / h;
    for (i, o) in row.iter_mut().enumerate() {
        // Sub-roundoff shifts must not zero the boundary nodes.
        let s = (i as f64 + shift).clamp(-0.5, n as f64 - 0.5);
        if s < -1e-9 || s > (n - 1) as f64 + 1e-9 {
            *o = 0.0;
            continue;
        }
        let cell = (s.floor().max(0.0) as usize).min(n - 2);
        let t = (s - cell as f64).clamp(0.0, 1.0);
        let (w0, w1, c0, c1) = blend(t);
        *o = w0 * src[cell] + w1 * src[cell + 1] + c0 * m[cell] + c1 * m[cell + 1];
    }
    scratch.src = src;
}

/// Linear periodic in-place resample (cross-check path).
pub(crate) fn resample_periodic_linear(
    h: f64,
    offset: f64,
    scratch: &mut RowScratch,
    row: &mut [f64],
) {
    let n = row.len();
    scratch.src.clear();
    scratch.src.extend_from_slice(row);
    let src = &scratch.src;
    let shift = offset / h;
    let base = shift.floor();
    let t = shift - base;
    let base = base as i64;
    for (i, o) in row.iter_mut().enumerate() {
        let j = (i as i64 + base).rem_euclid(n as i64) as usize;
        let j1 = if j + 1 == n { 0 } else { j + 1 };
        *o = (1.0 - t) * src[j] + t * src[j1];
    }
}

/// Linear in-place resample with zero inflow.
pub(crate) fn resample_natural_linear(
    h: f64,
    offset: f64,
    scratch: &mut RowScratch,
    row: &mut [f64],
) {
    let n = row.len();
    scratch.src.clear();
    scratch.src.extend_from_slice(row);
    let src = &scratch.src;
    let shift = offset / h;
    for (i, o) in row.iter_mut().enumerate() {
        let s = (i as f64 + shift).clamp(-0.5, n as f64 - 0.5);
        if s < -1e-9 || s > (n - 1) as f64 + 1e-9 {
            *o = 0.0;
            continue;
        }
        let cell = (s.floor().max(0.0) as usize).min(n - 2);
        let t = (s - cell as f64).clamp(0.0, 1.0);
        *o = (1.0 - t) * src[cell] + t * src[cell + 1];
    }
}
