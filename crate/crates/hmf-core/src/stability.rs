//! The formal stability functional I[f] and stationary-state construction.
//!
//! A monotonous stationary state f = F(h) is formally stable iff I[f] > 0.
//! For homogeneous states I = 1 + π ∫ (1/p) ∂f/∂p dp; for inhomogeneous ones
//! I = 1 + ∬ F'(h) [cos²q − ⟨cos Q⟩²] dq dp, where ⟨cos Q⟩ is the pendulum
//! orbit average of the point's level set. This module provides both
//! quadrature routes, the closed form for the modified thermal family, the
//! self-consistent magnetization solver, and the narrow-bump perturbation
//! constructors.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, PhaseGrid};
use crate::pendulum::{avg_cos_libration, avg_cos_rotation, modulus};
use crate::quad::{self, QuadSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Stability verdict with a marginal band around I = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        };
        f.write_str(s)
    }
}

/// Marginal band half-width; below the quadrature noise floor.
pub const VERDICT_TOL: f64 = 1e-10;

/// Value of I[f] with its additive decomposition and verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// I = term_unity + term_integral.
    pub i: f64,
    /// The constant 1.
    pub term_unity: f64,
    /// The quadrature (or closed-form) contribution.
    pub term_integral: f64,
    pub verdict: Verdict,
    /// Magnetization the functional was evaluated at.
    pub m_used: f64,
}

impl StabilityReport {
    fn from_integral(term_integral: f64, m_used: f64) -> Self {
        let i = 1.0 + term_integral;
        StabilityReport {
            i,
            term_unity: 1.0,
            term_integral,
            verdict: verdict_of(i),
            m_used,
        }
    }
}

/// Classify I against the marginal band.
pub fn verdict_of(i: f64) -> Verdict {
    if i > VERDICT_TOL {
        Verdict::Stable
    } else if i < -VERDICT_TOL {
        Verdict::Unstable
    } else {
        Verdict::Marginal
    }
}

/// Stationary families the toolkit constructs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryKind {
    /// Thermal state with the magnetization pinned to zero.
    ThermalHomogeneous,
    /// Thermal state with self-consistent M > 0 (requires T < 0.5).
    ThermalInhomogeneous,
    /// Thermal state plus the ε^δ energy bump (self-consistent M).
    ModifiedThermal,
    /// Homogeneous thermal state plus the momentum bump ε g(p/ε^α).
    HomogeneousWithBump,
}

/// Parameters generating a stationary state and its diagnostic perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarySpec {
    pub kind: StationaryKind,
    /// Temperature (energy units), T > 0.
    pub t: f64,
    /// Modification amplitude ε ≥ 0.
    #[serde(default)]
    pub eps: f64,
    /// Bump exponent δ of the ε^δ energy bump.
    #[serde(default)]
    pub delta: f64,
    /// Scaling exponent α of the momentum bump ε g(p/ε^α).
    #[serde(default)]
    pub alpha: f64,
    /// Diagnostic perturbation amplitude μ (the μ cos q seed).
    #[serde(default)]
    pub mu: f64,
}

impl StationarySpec {
    pub fn thermal_homogeneous(t: f64) -> Self {
        StationarySpec {
            kind: StationaryKind::ThermalHomogeneous,
            t,
            eps: 0.0,
            delta: 0.0,
            alpha: 0.0,
            mu: 0.0,
        }
    }

    pub fn thermal_inhomogeneous(t: f64) -> Self {
        StationarySpec {
            kind: StationaryKind::ThermalInhomogeneous,
            ..Self::thermal_homogeneous(t)
        }
    }

    pub fn modified_thermal(t: f64, eps: f64, delta: f64) -> Self {
        StationarySpec {
            kind: StationaryKind::ModifiedThermal,
            eps,
            delta,
            ..Self::thermal_homogeneous(t)
        }
    }

    pub fn homogeneous_with_bump(t: f64, eps: f64, alpha: f64) -> Self {
        StationarySpec {
            kind: StationaryKind::HomogeneousWithBump,
            eps,
            alpha,
            ..Self::thermal_homogeneous(t)
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.t
            )));
        }
        if self.eps < 0.0 {
            return Err(Error::Config(format!(
                "eps must be non-negative, got {}",
                self.eps
            )));
        }
        if self.kind == StationaryKind::ThermalInhomogeneous && self.t >= 0.5 {
            return Err(Error::Config(format!(
                "no self-consistent M in (0,1) exists at T = {} >= T_c = 0.5",
                self.t
            )));
        }
        if self.kind == StationaryKind::HomogeneousWithBump && self.eps > 0.0 && self.alpha < 0.0 {
            return Err(Error::Config(
                "bump exponent alpha must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Whether the family forces M = 0 regardless of temperature.
    pub fn pinned_homogeneous(&self) -> bool {
        matches!(
            self.kind,
            StationaryKind::ThermalHomogeneous | StationaryKind::HomogeneousWithBump
        )
    }

    /// Stationary part of the phase-space density (μ term excluded), not normalized.
    fn density_unnormalized(&self, q: f64, p: f64, m: f64) -> f64 {
        let h = 0.5 * p * p - m * q.cos();
        match self.kind {
            StationaryKind::HomogeneousWithBump => {
                let thermal =
                    (-0.5 * p * p / self.t).exp() / (2.0 * PI * (2.0 * PI * self.t).sqrt());
                if self.eps > 0.0 {
                    thermal + bump_value(p, self.eps, self.alpha)
                } else {
                    thermal
                }
            }
            _ => {
                let mut f = (-h / self.t).exp();
                if self.eps > 0.0 {
                    // bump in energy, centered at the well bottom h(0,0) = −m
                    f += self.eps.powf(self.delta)
                        * (-(h + m) / (self.t * self.eps * self.eps)).exp();
                }
                f
            }
        }
    }

    /// Perturbed initial density: the μ cos q seed multiplies the thermal
    /// factor only, not the energy bump.
    fn initial_density(&self, q: f64, p: f64, m: f64) -> f64 {
        let seed = 1.0 + self.mu * q.cos();
        match self.kind {
            StationaryKind::HomogeneousWithBump => {
                let thermal =
                    (-0.5 * p * p / self.t).exp() / (2.0 * PI * (2.0 * PI * self.t).sqrt());
                let mut f = thermal * seed;
                if self.eps > 0.0 {
                    f += bump_value(p, self.eps, self.alpha);
                }
                f
            }
            _ => {
                let h = 0.5 * p * p - m * q.cos();
                let mut f = (-h / self.t).exp() * seed;
                if self.eps > 0.0 {
                    f += self.eps.powf(self.delta)
                        * (-(h + m) / (self.t * self.eps * self.eps)).exp();
                }
                f
            }
        }
    }

    /// Momentum width hints for quadrature subdivision.
    fn p_scales(&self) -> Vec<f64> {
        let mut s = vec![self.t.sqrt()];
        if self.eps > 0.0 {
            match self.kind {
                StationaryKind::HomogeneousWithBump => s.push(self.eps.powf(self.alpha)),
                _ => s.push(self.eps * self.t.sqrt()),
            }
        }
        s
    }
}

/// Quadrature configuration for functional evaluations.
#[derive(Debug, Clone)]
pub struct PhaseQuad {
    /// Momentum truncation; the default keeps the neglected thermal tail
    /// below 1e-12 for T ≤ 0.6.
    pub p_max: f64,
    /// Half-width of the separatrix guard band, as a fraction of M.
    pub eta_frac: f64,
    /// Extra interior momentum breakpoints (profile width hints).
    pub p_hints: Vec<f64>,
    pub quad: QuadSpec,
}

impl Default for PhaseQuad {
    fn default() -> Self {
        PhaseQuad {
            p_max: 8.0,
            eta_frac: 1e-3,
            p_hints: Vec::new(),
            quad: QuadSpec::with_rel_tol(1e-11),
        }
    }
}

impl PhaseQuad {
    pub fn with_hints(hints: &[f64]) -> Self {
        PhaseQuad {
            p_hints: hints.to_vec(),
            ..Self::default()
        }
    }
}

/// I[f] for a homogeneous state from its momentum derivative.
///
/// I = 1 + π ∫ (1/p) ∂f/∂p dp, evaluated as 2π ∫₀^{p_max} by even symmetry.
/// Profiles whose derivative is not odd to 1e-10 of its scale are rejected:
/// the principal value is only taken over the symmetric pairing.
pub fn stability_homogeneous(dfdp: impl Fn(f64) -> f64, pq: &PhaseQuad) -> Result<StabilityReport> {
    let scale = [0.5, 1.0, 2.0]
        .iter()
        .map(|&p| dfdp(p).abs())
        .fold(f64::MIN_POSITIVE, f64::max);
    for &p in &[0.25, 0.7, 1.3, 2.5] {
        if (dfdp(p) + dfdp(-p)).abs() > 1e-10 * scale {
            return Err(Error::Domain(
                "momentum profile derivative is not odd; principal value undefined".into(),
            ));
        }
    }
    let pts = quad::breakpoint_chain(0.0, pq.p_max, &pq.p_hints);
    let integral = quad::adaptive_split(&|p: f64| dfdp(p) / p, &pts, &pq.quad)?;
    Ok(StabilityReport::from_integral(2.0 * PI * integral, 0.0))
}

/// ⟨cos Q⟩ of the orbit through (q, p) under the magnetization-m pendulum,
/// dispatching on the point's region and continued by −1 on the separatrix.
pub fn phi(q: f64, p: f64, m: f64) -> f64 {
    let k = modulus(q, p, m);
    if (k - 1.0).abs() < 1e-13 {
        -1.0 // common limit of both branches at the separatrix
    } else if k < 1.0 {
        avg_cos_libration(k).expect("k < 1 in range")
    } else {
        avg_cos_rotation(k).expect("k > 1 in range")
    }
}

/// The orbit-average factor w₁(q, p) = cos²q − ⟨cos Q⟩²_{j(q,p)} at magnetization m.
pub fn w1(q: f64, p: f64, m: f64) -> f64 {
    let c = q.cos();
    let avg = phi(q, p, m);
    c * c - avg * avg
}

/// I[f] for an inhomogeneous monotonous state f = F(h) at magnetization m.
///
/// I = 1 + ∬ F'(h(q,p)) w₁(q,p) dq dp. The 2D quadrature subdivides along the
/// level sets h = M ± η before refining, because ⟨cos Q⟩ has a logarithmic
/// derivative blow-up at the separatrix. The homogeneous formula is *not* the
/// M → 0 limit of this one, so M must be strictly positive here.
pub fn stability_inhomogeneous(
    fprime: impl Fn(f64) -> f64,
    m: f64,
    pq: &PhaseQuad,
) -> Result<StabilityReport> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::Domain(format!(
            "inhomogeneous stability requires 0 < M < 1, got {m} (use the homogeneous route for M = 0)"
        )));
    }
    let eta = pq.eta_frac * m;
    let cuts = [m - eta, m, m + eta];
    let integral = integrate_with_energy_cuts(
        |q, p| fprime(0.5 * p * p - m * q.cos()) * w1(q, p, m),
        m,
        &cuts,
        pq,
    )?;
    Ok(StabilityReport {
        m_used: m,
        ..StabilityReport::from_integral(integral, m)
    })
}

/// ∬ f dq dp over the truncated box for an integrand even in q and p, with
/// subdivision pinned to the level sets h = cut for every supplied cut.
pub fn integrate_with_energy_cuts(
    f: impl Fn(f64, f64) -> f64,
    m: f64,
    cuts: &[f64],
    pq: &PhaseQuad,
) -> Result<f64> {
    let q_breaks: Vec<f64> = cuts
        .iter()
        .filter(|&&c| (-c / m).abs() <= 1.0)
        .map(|&c| (-c / m).acos())
        .collect();
    let cuts = cuts.to_vec();
    let hints = pq.p_hints.clone();
    let p_breaks = move |q: f64| {
        let mut v: Vec<f64> = cuts
            .iter()
            .filter_map(|&c| {
                let p2 = 2.0 * (c + m * q.cos());
                (p2 > 0.0).then(|| p2.sqrt())
            })
            .collect();
        v.extend_from_slice(&hints);
        v
    };
    quad::integrate_even_box(f, pq.p_max, &q_breaks, p_breaks, &pq.quad)
}

/// Closed-form I for the modified thermal family at M = 0:
/// I = 1 − (1 + ε^{δ−1}) / (2T (1 + ε^{δ+1})).
pub fn stability_modified_homogeneous_closed(eps: f64, delta: f64, t: f64) -> StabilityReport {
    let term = if eps == 0.0 {
        -1.0 / (2.0 * t)
    } else {
        -(1.0 + eps.powf(delta - 1.0)) / (2.0 * t * (1.0 + eps.powf(delta + 1.0)))
    };
    StabilityReport::from_integral(term, 0.0)
}

/// The momentum bump g_{ε,α}(p) = ε g(p/ε^α) with g(u) = e^{−u²/2}/(2π)^{3/2}.
///
/// Carries the two identities the construction rests on:
/// ∬ g dq dp = ε^{1+α} and ∫ g'/p dp = −ε^{1−α}/(2π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile {
    pub eps: f64,
    pub alpha: f64,
}

fn bump_value(p: f64, eps: f64, alpha: f64) -> f64 {
    let w = eps.powf(alpha);
    let u = p / w;
    eps * (-0.5 * u * u).exp() / (2.0 * PI).powf(1.5)
}

impl BumpProfile {
    pub fn value(&self, p: f64) -> f64 {
        bump_value(p, self.eps, self.alpha)
    }

    pub fn deriv(&self, p: f64) -> f64 {
        let w = self.eps.powf(self.alpha);
        -p / (w * w) * self.value(p)
    }

    /// ∬ g_{ε,α} dq dp = ε^{1+α}.
    pub fn mass(&self) -> f64 {
        self.eps.powf(1.0 + self.alpha)
    }

    /// Closed form of ∫ g'/p dp = −ε^{1−α}/(2π).
    pub fn funcg_closed(&self) -> f64 {
        -self.eps.powf(1.0 - self.alpha) / (2.0 * PI)
    }

    /// Momentum width ε^α.
    pub fn width(&self) -> f64 {
        self.eps.powf(self.alpha)
    }
}

/// Construct the bump profile; ε must be positive and α non-negative
/// (α = 0 leaves the width at 1, with ∫g'/p = −ε/(2π)).
pub fn build_bump_g(eps: f64, alpha: f64) -> Result<BumpProfile> {
    if !(eps > 0.0) || !(alpha >= 0.0) {
        return Err(Error::Config(format!(
            "bump profile requires eps > 0 and alpha >= 0, got eps={eps}, alpha={alpha}"
        )));
    }
    Ok(BumpProfile { eps, alpha })
}

/// Unit-mass homogeneous thermal momentum profile and its derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalMomentum {
    pub t: f64,
    amp: f64,
}

impl ThermalMomentum {
    pub fn new(t: f64) -> Self {
        ThermalMomentum {
            t,
            amp: 1.0 / (2.0 * PI * (2.0 * PI * t).sqrt()),
        }
    }

    pub fn value(&self, p: f64) -> f64 {
        self.amp * (-0.5 * p * p / self.t).exp()
    }

    pub fn deriv(&self, p: f64) -> f64 {
        -p / self.t * self.value(p)
    }
}

/// f₀ + f₁ = (f₀ + g_{ε,α}) / (1 + ε^{1+α}): the destabilized homogeneous state.
///
/// For α > 1 the bump contributes −ε^{1−α}/2 · (1+ε^{1+α})^{-1} to I, which
/// grows without bound as ε → 0 and flips the verdict of any stable f₀.
#[derive(Debug, Clone, Copy)]
pub struct DestabilizedProfile {
    pub base: ThermalMomentum,
    pub bump: BumpProfile,
    norm: f64,
}

impl DestabilizedProfile {
    /// Combined profile value (f₀ + f₁)(p).
    pub fn value(&self, p: f64) -> f64 {
        (self.base.value(p) + self.bump.value(p)) / self.norm
    }

    pub fn deriv(&self, p: f64) -> f64 {
        (self.base.deriv(p) + self.bump.deriv(p)) / self.norm
    }

    /// The modification f₁ = g/(1+ε^{1+α}) − ε^{1+α} f₀/(1+ε^{1+α}).
    pub fn f1(&self, p: f64) -> f64 {
        (self.bump.value(p) - (self.norm - 1.0) * self.base.value(p)) / self.norm
    }
}

/// Attach the destabilizing bump to a homogeneous thermal state; the bump
/// overturns the stability verdict only in the α > 1 regime, which is
/// therefore required.
pub fn build_destabilizer_f1(
    base: ThermalMomentum,
    eps: f64,
    alpha: f64,
) -> Result<DestabilizedProfile> {
    if !(alpha > 1.0) {
        return Err(Error::Config(format!(
            "the destabilizing regime needs alpha > 1, got {alpha}"
        )));
    }
    let bump = build_bump_g(eps, alpha)?;
    Ok(DestabilizedProfile {
        base,
        bump,
        norm: 1.0 + bump.mass(),
    })
}

/// (∬ f, ∬ f cos q) of the unnormalized stationary profile on the truncated
/// continuum. Both the thermal factor and the energy bump are exactly
/// separable in (q, p), so four 1D quadratures suffice.
fn continuum_mass_and_cos(spec: &StationarySpec, m: f64, pq: &PhaseQuad) -> Result<(f64, f64)> {
    let t = spec.t;
    let quads = &pq.quad;
    match spec.kind {
        StationaryKind::HomogeneousWithBump => {
            let width = if spec.eps > 0.0 {
                spec.eps.powf(spec.alpha)
            } else {
                t.sqrt()
            };
            let pts = quad::breakpoint_chain(0.0, pq.p_max, &[width, 3.0 * width, 10.0 * width]);
            let ip = 2.0
                * quad::adaptive_split(
                    &|p: f64| spec.density_unnormalized(0.0, p, 0.0),
                    &pts,
                    quads,
                )?;
            Ok((2.0 * PI * ip, 0.0))
        }
        _ => {
            let ip1 =
                2.0 * quad::adaptive(&|p: f64| (-0.5 * p * p / t).exp(), 0.0, pq.p_max, quads)?;
            let x = m / t;
            let iq1 = 2.0 * quad::adaptive(&|q: f64| (x * q.cos()).exp(), 0.0, PI, quads)?;
            let iq1c =
                2.0 * quad::adaptive(&|q: f64| (x * q.cos()).exp() * q.cos(), 0.0, PI, quads)?;
            let mut mass = ip1 * iq1;
            let mut cosm = ip1 * iq1c;
            if spec.eps > 0.0 {
                let e2 = spec.eps * spec.eps;
                let sp = spec.eps * t.sqrt();
                let ppts = quad::breakpoint_chain(0.0, pq.p_max.min(14.0 * sp), &[sp, 3.0 * sp]);
                let ip2 = 2.0
                    * quad::adaptive_split(
                        &|p: f64| (-0.5 * p * p / (t * e2)).exp(),
                        &ppts,
                        quads,
                    )?;
                let sq = if m > 0.0 {
                    (spec.eps * (t / m).sqrt()).min(1.0)
                } else {
                    1.0
                };
                let qpts = quad::breakpoint_chain(0.0, PI, &[sq, 3.0 * sq, 10.0 * sq]);
                let bump_q = |q: f64| (-(m * (1.0 - q.cos())) / (t * e2)).exp();
                let iq2 = 2.0 * quad::adaptive_split(&|q| bump_q(q), &qpts, quads)?;
                let iq2c = 2.0 * quad::adaptive_split(&|q| bump_q(q) * q.cos(), &qpts, quads)?;
                let amp = spec.eps.powf(spec.delta);
                mass += amp * ip2 * iq2;
                cosm += amp * ip2 * iq2c;
            }
            Ok((mass, cosm))
        }
    }
}

/// Self-consistent magnetization of a stationary family by continuum quadrature.
///
/// Solves M = ∬ f(q, p; M) cos q dq dp / ∬ f dq dp by bracketed bisection on
/// (0, 1); returns 0 when only the trivial solution exists (thermal states at
/// T ≥ 0.5).
pub fn solve_selfconsistent_m(spec: &StationarySpec, pq: &PhaseQuad) -> Result<f64> {
    spec.validate()?;
    if spec.pinned_homogeneous() || spec.t >= 0.5 {
        // Above the thermal critical temperature the construction pins
        // M = 0: the energy bump is centered on the reference well, and with
        // M = 0 in the Hamiltonian it is exactly homogeneous. (For ε > 0 the
        // self-consistency equation also has a spurious bump-induced root of
        // order the bump mass, which is not the intended state.)
        return Ok(0.0);
    }
    let rhs = |m: f64| -> Result<f64> {
        let (mass, cosm) = continuum_mass_and_cos(spec, m, pq)?;
        Ok(cosm / mass)
    };
    solve_fixed_point(&rhs)
}

/// Same self-consistency, but with the grid quadrature that a simulation at
/// `gspec` will actually see, so the tabulated state is stationary on the grid.
pub fn solve_selfconsistent_m_on_grid(spec: &StationarySpec, gspec: GridSpec) -> Result<f64> {
    spec.validate()?;
    gspec.validate()?;
    if spec.pinned_homogeneous() || spec.t >= 0.5 {
        return Ok(0.0);
    }
    let rhs = |m: f64| -> Result<f64> {
        let grid = PhaseGrid::from_fn(gspec, |q, p| spec.density_unnormalized(q, p, m));
        Ok(grid.moment(|q, _| q.cos()) / grid.mass())
    };
    solve_fixed_point(&rhs)
}

fn solve_fixed_point(rhs: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    let g = |m: f64| -> Result<f64> { Ok(rhs(m)? - m) };
    // Bracket the nontrivial root by scanning; G(1⁻) < 0 always since the
    // cosine moment of a smooth state stays below 1.
    let mut lo = 1e-4;
    let g_lo = g(lo)?;
    if g_lo <= 0.0 {
        return Ok(0.0); // magnetized branch absent: only M = 0 remains
    }
    let mut hi = lo;
    let mut g_hi = g_lo;
    while g_hi > 0.0 {
        hi = (hi + 0.1).min(1.0 - 1e-9);
        g_hi = g(hi)?;
        if hi >= 1.0 - 1e-9 && g_hi > 0.0 {
            return Err(Error::NonConvergence(
                "self-consistency has no root below M = 1".into(),
            ));
        }
        if g_hi <= 0.0 {
            break;
        }
        lo = hi;
    }
    let cache_err = std::cell::RefCell::new(None);
    let root = quad::bisect(
        &|m| match g(m) {
            Ok(v) => v,
            Err(e) => {
                *cache_err.borrow_mut() = Some(e);
                0.0
            }
        },
        lo,
        hi,
        1e-13,
        200,
    );
    if let Some(e) = cache_err.into_inner() {
        return Err(e);
    }
    root
}

/// Tabulate the perturbed initial state
/// A [e^{−h/T}(1 + μ cos q) + ε^δ e^{−(h−h(0,0))/(T ε²)}]
/// on the grid, normalized to unit mass by grid quadrature.
pub fn build_initial_condition(
    spec: &StationarySpec,
    m: f64,
    gspec: GridSpec,
) -> Result<PhaseGrid> {
    spec.validate()?;
    gspec.validate()?;
    let mut grid = PhaseGrid::from_fn(gspec, |q, p| spec.initial_density(q, p, m));
    grid.normalize()?;
    Ok(grid)
}

/// A stationary state resolved to its self-consistent magnetization and
/// continuum normalization, ready for functional evaluation.
#[derive(Debug, Clone)]
pub struct StationaryState {
    pub spec: StationarySpec,
    /// Self-consistent magnetization (0 on the homogeneous branch).
    pub m: f64,
    /// Normalization constant A on the truncated continuum.
    pub amp: f64,
}

impl StationaryState {
    pub fn build(spec: StationarySpec, pq: &PhaseQuad) -> Result<Self> {
        let m = solve_selfconsistent_m(&spec, pq)?;
        Self::at_magnetization(spec, m, pq)
    }

    /// Resolve the normalization at an externally supplied magnetization.
    pub fn at_magnetization(spec: StationarySpec, m: f64, pq: &PhaseQuad) -> Result<Self> {
        spec.validate()?;
        let (mass, _) = continuum_mass_and_cos(&spec, m, pq)?;
        Ok(StationaryState {
            spec,
            m,
            amp: 1.0 / mass,
        })
    }

    /// F'(h): the energy derivative of the state profile.
    pub fn fprime(&self, h: f64) -> f64 {
        let t = self.spec.t;
        let mut d = -(-h / t).exp() / t;
        if self.spec.eps > 0.0 && self.spec.kind != StationaryKind::HomogeneousWithBump {
            let e2 = self.spec.eps * self.spec.eps;
            d -= self.spec.eps.powf(self.spec.delta - 2.0) / t * (-(h + self.m) / (t * e2)).exp();
        }
        self.amp * d
    }

    /// Normalized density value.
    pub fn value(&self, q: f64, p: f64) -> f64 {
        self.amp * self.spec.density_unnormalized(q, p, self.m)
    }

    /// Evaluate I[f] by the route matching the state's magnetization.
    pub fn stability(&self, pq: &PhaseQuad) -> Result<StabilityReport> {
        if self.m == 0.0 {
            let spec = self.spec;
            let amp = self.amp;
            let pq = PhaseQuad {
                p_hints: spec.p_scales(),
                ..pq.clone()
            };
            let dfdp = move |p: f64| {
                let t = spec.t;
                let d = match spec.kind {
                    StationaryKind::HomogeneousWithBump => {
                        let mut v =
                            -p / t * (-0.5 * p * p / t).exp() / (2.0 * PI * (2.0 * PI * t).sqrt());
                        if spec.eps > 0.0 {
                            let b = BumpProfile {
                                eps: spec.eps,
                                alpha: spec.alpha,
                            };
                            v += b.deriv(p);
                        }
                        v
                    }
                    _ => {
                        let mut v = -p / t * (-0.5 * p * p / t).exp();
                        if spec.eps > 0.0 {
                            let e2 = spec.eps * spec.eps;
                            v -= spec.eps.powf(spec.delta) * p / (t * e2)
                                * (-0.5 * p * p / (t * e2)).exp();
                        }
                        v
                    }
                };
                amp * d
            };
            stability_homogeneous(dfdp, &pq)
        } else {
            let this = self.clone();
            stability_inhomogeneous(move |h| this.fprime(h), self.m, pq)
        }
    }
}
