//! The integrable one-body pendulum behind the HMF mean field.
//!
//! For a fixed magnetization M the one-body Hamiltonian h = p²/2 − M cos q is
//! a pendulum. Phase space splits into rotation above the separatrix (U1),
//! libration inside it (U2) and rotation below it (U3); every orbit is labeled
//! by the modulus k = ψ(q, p; M), with k < 1 trapped and k > 1 passing. The
//! angle-averaged observables ⟨cos Q⟩ have closed forms in complete elliptic
//! integrals; a time-reparametrized quadrature oracle of the same averages is
//! provided for cross-checking.

use crate::elliptic::complete_elliptic;
use crate::error::{Error, Result};
use crate::quad::{adaptive, QuadSpec};
use std::f64::consts::PI;

/// Orbit topology under the pendulum Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Passing orbit with p > 0 (U1).
    RotationUpper,
    /// Trapped orbit, −M < h < M (U2).
    Libration,
    /// Passing orbit with p < 0 (U3).
    RotationLower,
    /// The measure-zero level h = M.
    Separatrix,
}

impl Region {
    pub fn is_rotation(self) -> bool {
        matches!(self, Region::RotationUpper | Region::RotationLower)
    }
}

/// Classification of a phase-space point: region, modulus, energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitCoordinate {
    pub region: Region,
    /// Modulus k = ψ(q, p; M); k² = (h/M + 1)/2.
    pub k: f64,
    /// Specific energy h(q, p).
    pub energy: f64,
    /// Magnetization defining the Hamiltonian.
    pub m: f64,
}

/// Action bounds of a region at magnetization M.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionRange {
    pub region: Region,
    pub j_min: f64,
    pub j_max: f64,
}

impl ActionRange {
    /// Rotation actions exceed 4√M/π; libration actions fill (0, 8√M/π).
    pub fn for_region(region: Region, m: f64) -> Self {
        let sep = 4.0 * m.sqrt() / PI;
        match region {
            Region::Libration => ActionRange {
                region,
                j_min: 0.0,
                j_max: 2.0 * sep,
            },
            Region::RotationUpper | Region::RotationLower => ActionRange {
                region,
                j_min: sep,
                j_max: f64::INFINITY,
            },
            Region::Separatrix => ActionRange {
                region,
                j_min: sep,
                j_max: 2.0 * sep,
            },
        }
    }

    pub fn contains(&self, j: f64) -> bool {
        j > self.j_min && j < self.j_max
    }
}

/// One-body energy h(q, p) = p²/2 − M cos q.
pub fn hamiltonian(q: f64, p: f64, m: f64) -> f64 {
    0.5 * p * p - m * q.cos()
}

/// Pendulum modulus k = ψ(q, p; M) = √[(p²/2 + M(1 − cos q)) / (2M)].
///
/// Evaluated as √(p²/(4M) + sin²(q/2)), which is exact at the well bottom and
/// free of cancellation on the separatrix.
pub fn modulus(q: f64, p: f64, m: f64) -> f64 {
    let s = (0.5 * q).sin();
    (0.25 * p * p / m + s * s).sqrt()
}

/// Classify a point by its orbit region; |h − M| ≤ 1e-14·M counts as separatrix.
pub fn classify(q: f64, p: f64, m: f64) -> OrbitCoordinate {
    let energy = hamiltonian(q, p, m);
    let k = modulus(q, p, m);
    let region = if (energy - m).abs() <= 1e-14 * m {
        Region::Separatrix
    } else if energy < m {
        Region::Libration
    } else if p > 0.0 {
        Region::RotationUpper
    } else {
        Region::RotationLower
    };
    let k = if region == Region::Separatrix { 1.0 } else { k };
    OrbitCoordinate {
        region,
        k,
        energy,
        m,
    }
}

/// ⟨cos Q⟩ on a librating orbit: φ_in(k) = 2E(k)/K(k) − 1 for 0 ≤ k < 1.
pub fn avg_cos_libration(k: f64) -> Result<f64> {
    let pair = complete_elliptic(k)?;
    Ok(2.0 * pair.big_e / pair.big_k - 1.0)
}

/// ⟨cos Q⟩ on a rotating orbit: φ_out(k) = 2k²E(1/k)/K(1/k) − 2k² + 1 for k > 1.
pub fn avg_cos_rotation(k: f64) -> Result<f64> {
    if !(k > 1.0) {
        return Err(Error::Domain(format!(
            "rotation average requires k > 1, got {k}"
        )));
    }
    let pair = complete_elliptic(1.0 / k)?;
    Ok(2.0 * k * k * pair.big_e / pair.big_k - 2.0 * k * k + 1.0)
}

fn orbit_quad_spec() -> QuadSpec {
    QuadSpec {
        rel_tol: 1e-12,
        abs_tol: 1e-15,
        max_segments: 20_000,
    }
}

/// Orbit average of an observable A(q) along the level set of modulus k.
///
/// Computes (∮ A dq/|p|) / (∮ dq/|p|) by adaptive quadrature; the average
/// depends on M only through k, so the level set is taken at M = 1. Librating
/// orbits substitute q = q_turn − u² at the turning points, which removes the
/// integrable 1/√ singularity of 1/|p|.
pub fn orbit_average<F: Fn(f64) -> f64>(observable: F, k: f64, region: Region) -> Result<f64> {
    let spec = orbit_quad_spec();
    match region {
        Region::Separatrix => Err(Error::Domain(
            "orbit average undefined on the separatrix (k = 1)".into(),
        )),
        Region::Libration => {
            if !(0.0..1.0).contains(&k) {
                return Err(Error::Domain(format!(
                    "libration requires 0 <= k < 1, got {k}"
                )));
            }
            if k < 1e-9 {
                // Degenerate orbit at the well bottom.
                return Ok(observable(0.0));
            }
            let q_turn = 2.0 * k.asin();
            // sin²(q_t/2) − sin²(q/2) = sin((q_t+q)/2)·sin((q_t−q)/2); with
            // q = q_t − u² the momentum is p = 2√[sin(q_t − u²/2)·sin(u²/2)].
            let p_of_u = |u: f64| {
                let a = (q_turn - 0.5 * u * u).sin();
                let b = (0.5 * u * u).sin();
                2.0 * (a * b).max(0.0).sqrt()
            };
            let u_max = q_turn.sqrt();
            let num = adaptive(
                &|u| {
                    let q = q_turn - u * u;
                    2.0 * u * (observable(q) + observable(-q)) / p_of_u(u)
                },
                0.0,
                u_max,
                &spec,
            )?;
            let den = adaptive(&|u| 4.0 * u / p_of_u(u), 0.0, u_max, &spec)?;
            Ok(num / den)
        }
        Region::RotationUpper | Region::RotationLower => {
            if !(k > 1.0) {
                return Err(Error::Domain(format!("rotation requires k > 1, got {k}")));
            }
            let p_of_q = |q: f64| {
                let s = (0.5 * q).sin();
                2.0 * (k * k - s * s).sqrt()
            };
            let num = adaptive(&|q| observable(q) / p_of_q(q), -PI, PI, &spec)?;
            let den = adaptive(&|q| 1.0 / p_of_q(q), -PI, PI, &spec)?;
            Ok(num / den)
        }
    }
}

/// ∂⟨cos Q⟩/∂M at a point strictly inside the separatrix.
///
/// Equals (p² / 4M²) (1/k²) [(E/K − 1)² + (k²/(1−k²)) (E/K)²] with k = ψ(q,p;M),
/// continued by its limit p²/(4M²) as k → 0.
pub fn d_avg_cos_dm_libration(q: f64, p: f64, m: f64) -> Result<f64> {
    let coord = classify(q, p, m);
    if coord.region != Region::Libration {
        return Err(Error::Domain(format!(
            "point (q={q}, p={p}) is not strictly inside the separatrix"
        )));
    }
    let k = coord.k;
    let pref = 0.25 * p * p / (m * m);
    if k < 1e-8 {
        return Ok(pref);
    }
    let r = complete_elliptic(k)?;
    let x = r.big_e / r.big_k;
    let k2 = k * k;
    Ok(pref / k2 * ((x - 1.0) * (x - 1.0) + k2 / (1.0 - k2) * x * x))
}

/// ∂⟨cos Q⟩/∂M at a point strictly outside the separatrix.
///
/// Equals (p² / 4M²) [−(x − 1)² + x²/(1−k²) − 2(x − 1)] with x = E(1/k)/K(1/k).
/// The (x − 1)² term enters with a minus sign — differentiating
/// φ_out = 2k²x(1/k) − 2k² + 1 through dE/dκ = (E − K)/κ and
/// dK/dκ = [E − (1−κ²)K]/[κ(1−κ²)] gives
/// dφ_out/dk = 4k(x − 1) + 2k(x − 1)² + 2k x²/(k² − 1), and the chain rule
/// with ∂ψ/∂M = −p²/(8M²k) flips every sign. The finite-difference tests
/// below pin this down. Tends to 0 as k → ∞.
pub fn d_avg_cos_dm_rotation(q: f64, p: f64, m: f64) -> Result<f64> {
    let coord = classify(q, p, m);
    if !coord.region.is_rotation() {
        return Err(Error::Domain(format!(
            "point (q={q}, p={p}) is not strictly outside the separatrix"
        )));
    }
    let k = coord.k;
    let r = complete_elliptic(1.0 / k)?;
    let x = r.big_e / r.big_k;
    let pref = 0.25 * p * p / (m * m);
    Ok(pref * (-(x - 1.0) * (x - 1.0) + x * x / (1.0 - k * k) - 2.0 * (x - 1.0)))
}

/// Action J(k) = (1/2π) ∮ p dq by quadrature of the orbit at magnetization M.
///
/// Libration actions close onto 8√M/π and rotation actions onto 4√M/π as
/// k → 1, the endpoints of the region action ranges.
pub fn action(k: f64, m: f64, region: Region) -> Result<f64> {
    if m <= 0.0 {
        return Err(Error::Domain(format!("action requires M > 0, got {m}")));
    }
    let spec = orbit_quad_spec();
    match region {
        Region::Separatrix => Err(Error::Domain("action undefined at k = 1".into())),
        Region::Libration => {
            if !(0.0..1.0).contains(&k) {
                return Err(Error::Domain(format!(
                    "libration requires 0 <= k < 1, got {k}"
                )));
            }
            if k == 0.0 {
                return Ok(0.0);
            }
            let q_turn = 2.0 * k.asin();
            let p_of_u = |u: f64| {
                let a = (q_turn - 0.5 * u * u).sin();
                let b = (0.5 * u * u).sin();
                2.0 * m.sqrt() * (a * b).max(0.0).sqrt()
            };
            // ∮ p dq = 4 ∫_0^{q_t} p dq, rewritten with q = q_t − u².
            let quarter = adaptive(&|u| 2.0 * u * p_of_u(u), 0.0, q_turn.sqrt(), &spec)?;
            Ok(2.0 * quarter / PI)
        }
        Region::RotationUpper | Region::RotationLower => {
            if !(k > 1.0) {
                return Err(Error::Domain(format!("rotation requires k > 1, got {k}")));
            }
            let p_of_q = |q: f64| {
                let s = (0.5 * q).sin();
                2.0 * m.sqrt() * (k * k - s * s).sqrt()
            };
            let half = adaptive(&p_of_q, 0.0, PI, &spec)?;
            Ok(half / PI)
        }
    }
}
