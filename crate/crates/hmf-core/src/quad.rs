//! Adaptive quadrature and root bracketing.
//!
//! The workhorse is a globally adaptive Gauss–Kronrod 7–15 rule: the segment
//! with the largest error estimate is bisected until the summed estimate meets
//! the tolerance. Kronrod nodes are interior, so integrable endpoint
//! singularities (the `1/√` turning-point and `q^{1-b}` weight singularities
//! that appear throughout the crate) only cost extra subdivisions near the
//! offending endpoint instead of NaNs.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;

/// Positive abscissae of the 15-point Kronrod rule on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss weights of the embedded 7-point rule (nodes XGK[1], XGK[3], ...).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Tolerances and budget for adaptive integration.
#[derive(Debug, Clone)]
pub struct QuadSpec {
    /// Relative tolerance on the accumulated integral.
    pub rel_tol: f64,
    /// Absolute tolerance floor.
    pub abs_tol: f64,
    /// Maximum number of segments before giving up.
    pub max_segments: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            rel_tol: 1e-11,
            abs_tol: 1e-14,
            max_segments: 4000,
        }
    }
}

impl QuadSpec {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadSpec {
            rel_tol,
            ..Self::default()
        }
    }
}

/// One Gauss–Kronrod 7–15 evaluation on [a, b]; returns (value, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);

    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let fsum = f(mid - dx) + f(mid + dx);
        kronrod += WGK[i] * fsum;
        if i % 2 == 1 {
            gauss += WG[i / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).abs())
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Adaptive integral of `f` over [a, b].
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, spec: &QuadSpec) -> Result<f64> {
    adaptive_split(f, &[a, b], spec)
}

/// Adaptive integral over the union of intervals delimited by sorted `points`.
///
/// Interior points pin known breakpoints (region boundaries, separatrix
/// crossings, bump widths) so the subdivision never straddles a kink.
pub fn adaptive_split<F: Fn(f64) -> f64>(f: &F, points: &[f64], spec: &QuadSpec) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Domain(
            "quadrature needs at least one interval".into(),
        ));
    }
    let mut heap: BinaryHeap<Segment> = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b >= a) {
            return Err(Error::Domain(format!(
                "quadrature breakpoints not sorted: {a} > {b}"
            )));
        }
        if b == a {
            continue;
        }
        let (v, e) = gk15(f, a, b);
        total += v;
        total_err += e;
        heap.push(Segment {
            a,
            b,
            value: v,
            error: e,
        });
    }

    while total_err > spec.abs_tol.max(spec.rel_tol * total.abs()) {
        if heap.len() >= spec.max_segments {
            return Err(Error::NonConvergence(format!(
                "quadrature error {total_err:.3e} above tolerance after {} segments",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap non-empty while error positive");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at machine resolution; accept its estimate as-is.
            total_err -= worst.error;
            let spent = Segment {
                error: 0.0,
                ..worst
            };
            heap.push(spent);
            continue;
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }

    // Re-sum in spatial order so the result does not depend on pop order.
    let mut segs: Vec<Segment> = heap.into_vec();
    segs.sort_by(|s, t| s.a.partial_cmp(&t.a).unwrap());
    Ok(segs.iter().map(|s| s.value).sum())
}

/// ∬ f dq dp over (−π, π] × [−p_max, p_max] for an integrand even in q and p.
///
/// Computes 4·∫₀^π dq ∫₀^{p_max} dp. `q_breaks` pins outer kink locations and
/// `p_breaks_at(q)` returns the inner ones for the current q (both may be
/// empty); out-of-range breakpoints are ignored.
pub fn integrate_even_box<F, B>(
    f: F,
    p_max: f64,
    q_breaks: &[f64],
    p_breaks_at: B,
    spec: &QuadSpec,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
    B: Fn(f64) -> Vec<f64>,
{
    let inner_spec = QuadSpec {
        // One decade tighter so the outer tolerance dominates the error.
        rel_tol: 0.1 * spec.rel_tol,
        abs_tol: 0.1 * spec.abs_tol,
        max_segments: spec.max_segments,
    };
    let inner_failure = std::cell::RefCell::new(None);

    let outer = |q: f64| -> f64 {
        if inner_failure.borrow().is_some() {
            return 0.0;
        }
        let pts = breakpoint_chain(0.0, p_max, &p_breaks_at(q));
        match adaptive_split(&|p| f(q, p), &pts, &inner_spec) {
            Ok(v) => v,
            Err(e) => {
                *inner_failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };

    let qpts = breakpoint_chain(0.0, std::f64::consts::PI, q_breaks);
    let result = adaptive_split(&outer, &qpts, spec);
    if let Some(e) = inner_failure.into_inner() {
        return Err(e);
    }
    result.map(|v| 4.0 * v)
}

/// Sorted chain [lo, interior breaks within (lo, hi), hi].
pub fn breakpoint_chain(lo: f64, hi: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts = vec![lo];
    let mut interior: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > lo && x < hi)
        .collect();
    interior.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for x in interior {
        if x > *pts.last().unwrap() {
            pts.push(x);
        }
    }
    pts.push(hi);
    pts
}

/// Bisection root finder on a bracketing interval [a, b] with f(a)·f(b) ≤ 0.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(Error::Domain(format!(
            "root not bracketed on [{a}, {b}]: f(a)={flo:.3e}, f(b)={fhi:.3e}"
        )));
    }
    let mut flo = flo;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 || hi - lo < tol {
            return Ok(mid);
        }
        if flo * fmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    Err(Error::NonConvergence(format!(
        "bisection did not reach tol {tol:.3e} on [{a}, {b}]"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let spec = QuadSpec::default();
        let v = adaptive(&|x| 3.0 * x * x, 0.0, 2.0, &spec).unwrap();
        assert!((v - 8.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integral() {
        let spec = QuadSpec::default();
        let v = adaptive(&|x| (10.0 * x).sin(), 0.0, PI, &spec).unwrap();
        let exact = (1.0 - (10.0 * PI).cos()) / 10.0;
        assert!((v - exact).abs() < 1e-12, "got {v}, want {exact}");
    }

    #[test]
    fn endpoint_inverse_sqrt_singularity() {
        // ∫₀¹ x^{-1/2} dx = 2, integrand unbounded at the left endpoint.
        let spec = QuadSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_segments: 20_000,
        };
        let v = adaptive(&|x| x.powf(-0.5), 0.0, 1.0, &spec).unwrap();
        assert!((v - 2.0).abs() < 1e-8, "got {v}");
    }

    #[test]
    fn split_points_handle_kink() {
        let spec = QuadSpec::default();
        let f = |x: f64| x.abs();
        let v = adaptive_split(&f, &[-1.0, 0.0, 1.0], &spec).unwrap();
        assert!((v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn even_box_recovers_gaussian_mass() {
        let spec = QuadSpec::with_rel_tol(1e-11);
        let v = integrate_even_box(
            |q, p| (-0.5 * (q * q + p * p)).exp(),
            8.0,
            &[],
            |_| vec![],
            &spec,
        )
        .unwrap();
        // ∫_{-π}^{π} e^{-q²/2} dq × ∫_{-8}^{8} e^{-p²/2} dp ≈ 2π·(erf terms)
        let one_d_q = adaptive(&|q: f64| (-0.5 * q * q).exp(), 0.0, PI, &spec).unwrap() * 2.0;
        let one_d_p = adaptive(&|p: f64| (-0.5 * p * p).exp(), 0.0, 8.0, &spec).unwrap() * 2.0;
        assert!((v - one_d_q * one_d_p).abs() < 1e-10);
    }

    #[test]
    fn bisect_finds_cosine_root() {
        let r = bisect(&|x: f64| x.cos(), 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn unsorted_points_rejected() {
        let spec = QuadSpec::default();
        assert!(adaptive_split(&|x| x, &[1.0, 0.0], &spec).is_err());
    }
}
