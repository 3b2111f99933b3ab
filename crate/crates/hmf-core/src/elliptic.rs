//! Complete elliptic integrals of the first and second kind.
//!
//! `K` and `E` are evaluated together by arithmetic–geometric mean iteration,
//! which converges quadratically and needs no tables. All moduli are passed
//! as `k` (not `k²`); the parameter convention therefore matches
//! `scipy.special.ellipk(k*k)`.

use crate::error::{Error, Result};
use std::f64::consts::FRAC_PI_2;

/// K(k) and E(k) evaluated at a common modulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticPair {
    /// Modulus, 0 ≤ k < 1.
    pub k: f64,
    /// Complete integral of the first kind, K(k) ≥ π/2.
    pub big_k: f64,
    /// Complete integral of the second kind, E(k) ≤ π/2.
    pub big_e: f64,
}

fn check_modulus(k: f64) -> Result<()> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::Domain(format!(
            "elliptic modulus must satisfy 0 <= k < 1, got {k}"
        )));
    }
    Ok(())
}

/// Evaluate K(k) and E(k) by AGM iteration.
///
/// The iteration runs on a₀ = 1, b₀ = √(1−k²) until successive means agree
/// to 1e-15; then K = π/(2a∞) and E = K·(1 − Σ 2^{n−1} cₙ²) with c₀ = k.
/// K(k) → ∞ as k → 1 is honored: moduli at or above 1 are rejected rather
/// than clamped.
pub fn complete_elliptic(k: f64) -> Result<EllipticPair> {
    check_modulus(k)?;
    let mut a = 1.0_f64;
    let mut b = ((1.0 - k) * (1.0 + k)).sqrt();
    let mut c = k;
    let mut c_sum = 0.5 * c * c;
    let mut two_pow = 0.5;
    let mut iter = 0;
    while c.abs() > 1e-15 * a && iter < 64 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = 0.5 * (a - b);
        a = an;
        b = bn;
        two_pow *= 2.0;
        c_sum += two_pow * c * c;
        iter += 1;
    }
    let big_k = FRAC_PI_2 / a;
    let big_e = big_k * (1.0 - c_sum);
    Ok(EllipticPair { k, big_k, big_e })
}

/// Analytic derivatives (dK/dk, dE/dk).
///
/// dK/dk = [E − (1−k²)K] / [k(1−k²)] and dE/dk = (E − K)/k. Both formulas are
/// singular at k = 0 and k = 1, so those endpoints are rejected.
pub fn elliptic_derivatives(k: f64) -> Result<(f64, f64)> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Domain(format!(
            "derivative formulas require 0 < k < 1, got {k}"
        )));
    }
    let pair = complete_elliptic(k)?;
    let one_m_k2 = (1.0 - k) * (1.0 + k);
    let dk = (pair.big_e - one_m_k2 * pair.big_k) / (k * one_m_k2);
    let de = (pair.big_e - pair.big_k) / k;
    Ok((dk, de))
}

/// The ratio E(k)/K(k); equals 1 − k²/2 + O(k⁴) for small k.
pub fn ek_ratio(k: f64) -> Result<f64> {
    let pair = complete_elliptic(k)?;
    Ok(pair.big_e / pair.big_k)
}
