//! Numerical exercises of the neighborhood-stability machinery: the
//! ΔI = ΔI₁ − ΔI₂ decomposition across a magnetization shift, the three-band
//! partition around the separatrix with its area and modulus bounds, the
//! scaling of the bump contribution to I, and the (ε, δ) simulation sweeps.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::pendulum::modulus;
use crate::quad::{self, QuadSpec};
use crate::stability::{
    self, build_initial_condition, solve_selfconsistent_m_on_grid, PhaseQuad, StabilityReport,
    StationarySpec, StationaryState, Verdict,
};
use crate::vlasov::{self, SimConfig, TimeSeries};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;

/// Bands of the phase-space partition around the separatrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuRegion {
    /// Inside the separatrix, h < 2M₁ − M.
    Mu1,
    /// The band 2M₁ − M ≤ h ≤ 2M₂ − M that contains every separatrix of the
    /// magnetization range.
    Mu2,
    /// Outside, h > 2M₂ − M.
    Mu3,
}

/// The μ-space partition generated by M and ΔM: M₁ = M − 2ΔM, M₂ = M + 2ΔM.
#[derive(Debug, Clone, Copy)]
pub struct MuPartition {
    pub m: f64,
    pub dm: f64,
    pub m1: f64,
    pub m2: f64,
}

impl MuPartition {
    pub fn new(m: f64, dm: f64) -> Result<Self> {
        if !(dm > 0.0) {
            return Err(Error::InvalidPartition(format!(
                "magnetization shift must be positive, got {dm}"
            )));
        }
        let m1 = m - 2.0 * dm;
        let m2 = m + 2.0 * dm;
        if m1 <= 0.0 {
            return Err(Error::InvalidPartition(format!(
                "M1 = M - 2dM = {m1} must stay positive (M = {m}, dM = {dm})"
            )));
        }
        Ok(MuPartition { m, dm, m1, m2 })
    }

    /// Lower energy cut 2M₁ − M = M − 4ΔM.
    pub fn h_lower(&self) -> f64 {
        2.0 * self.m1 - self.m
    }

    /// Upper energy cut 2M₂ − M = M + 4ΔM.
    pub fn h_upper(&self) -> f64 {
        2.0 * self.m2 - self.m
    }

    pub fn region(&self, q: f64, p: f64) -> MuRegion {
        let h = 0.5 * p * p - self.m * q.cos();
        if h < self.h_lower() {
            MuRegion::Mu1
        } else if h <= self.h_upper() {
            MuRegion::Mu2
        } else {
            MuRegion::Mu3
        }
    }
}

/// Momentum of the level curve h = c of the Hamiltonian with magnetization m,
/// clamped to zero where the level does not reach.
fn p_on_level(c: f64, m_ham: f64, q: f64) -> f64 {
    (2.0 * (c + m_ham * q.cos())).max(0.0).sqrt()
}

/// The angle where the level curve h = c touches p = 0, if inside (0, π).
fn q_break_of_level(c: f64, m_ham: f64) -> Option<f64> {
    let x = -c / m_ham;
    (x.abs() < 1.0).then(|| x.acos())
}

/// Area of the μ₂ band by quadrature of its upper-half height, doubled.
///
/// The result is checked against the closed bound 16π√ΔM.
pub fn mu2_area(m: f64, dm: f64, spec: &QuadSpec) -> Result<f64> {
    let part = MuPartition::new(m, dm)?;
    let (lo, hi) = (part.h_lower(), part.h_upper());
    let mut breaks = Vec::new();
    if let Some(qb) = q_break_of_level(lo, m) {
        breaks.push(qb);
    }
    if let Some(qb) = q_break_of_level(hi, m) {
        breaks.push(qb);
    }
    let pts = quad::breakpoint_chain(0.0, PI, &breaks);
    let half = quad::adaptive_split(
        &|q: f64| p_on_level(hi, m, q) - p_on_level(lo, m, q),
        &pts,
        spec,
    )?;
    let area = 4.0 * half;
    let bound = 16.0 * PI * dm.sqrt();
    if area > bound * (1.0 + 1e-9) {
        return Err(Error::InvalidPartition(format!(
            "mu2 area {area} exceeds its bound {bound}"
        )));
    }
    Ok(area)
}

/// Extremal modulus on a μ-band boundary and the bound it must respect.
#[derive(Debug, Clone, Copy)]
pub struct KRangeReport {
    pub region: MuRegion,
    /// sup k on the μ₁ boundary, or inf k on the μ₃ boundary.
    pub extremal_k: f64,
    /// √(1 − 2ΔM/M̃) for μ₁, √(1 + ΔM/M̃) for μ₃ with M̃ = M + ΔM.
    pub bound_k: f64,
    pub satisfied: bool,
}

/// Scan the boundary curve of μ₁ (resp. μ₃) and verify that the modulus
/// ψ(q, p; M*) stays away from the separatrix value 1.
pub fn k_range_check(m: f64, dm: f64, m_star: f64, region: MuRegion) -> Result<KRangeReport> {
    let part = MuPartition::new(m, dm)?;
    let m_tilde = m + dm;
    if !(m_star >= m - 1e-14 && m_star <= m_tilde + 1e-14) {
        return Err(Error::Domain(format!(
            "M* = {m_star} must lie in [M, M + dM] = [{m}, {m_tilde}]"
        )));
    }
    let samples = 4001;
    match region {
        MuRegion::Mu1 => {
            let c = part.h_lower();
            let mut k_sup = 0.0_f64;
            for i in 0..samples {
                let q = PI * i as f64 / (samples - 1) as f64;
                let p = p_on_level(c, m, q);
                if p == 0.0 && 2.0 * (c + m * q.cos()) < 0.0 {
                    continue; // level curve absent at this angle
                }
                k_sup = k_sup.max(modulus(q, p, m_star));
            }
            let bound_k = (1.0 - 2.0 * dm / m_tilde).sqrt();
            Ok(KRangeReport {
                region,
                extremal_k: k_sup,
                bound_k,
                satisfied: k_sup <= bound_k + 1e-12,
            })
        }
        MuRegion::Mu3 => {
            let c = part.h_upper();
            let mut k_inf = f64::INFINITY;
            for i in 0..samples {
                let q = PI * i as f64 / (samples - 1) as f64;
                let p = p_on_level(c, m, q);
                k_inf = k_inf.min(modulus(q, p, m_star));
            }
            let bound_k = (1.0 + dm / m_tilde).sqrt();
            Ok(KRangeReport {
                region,
                extremal_k: k_inf,
                bound_k,
                satisfied: k_inf >= bound_k - 1e-12,
            })
        }
        MuRegion::Mu2 => Err(Error::Domain(
            "modulus bounds apply to the mu1 and mu3 boundaries only".into(),
        )),
    }
}

/// ∬ f dq dp over the set p ∈ [p_lo(q), p_hi(q)] (upper half, ×4 by the even
/// symmetry of every integrand used here).
fn integrate_band(
    f: impl Fn(f64, f64) -> f64,
    p_lo: impl Fn(f64) -> f64,
    p_hi: impl Fn(f64) -> f64,
    q_breaks: &[f64],
    inner_breaks: impl Fn(f64) -> Vec<f64>,
    spec: &QuadSpec,
) -> Result<f64> {
    let inner_spec = QuadSpec {
        rel_tol: 0.1 * spec.rel_tol,
        abs_tol: 0.1 * spec.abs_tol,
        max_segments: spec.max_segments,
    };
    let failure = std::cell::RefCell::new(None);
    let outer = |q: f64| -> f64 {
        if failure.borrow().is_some() {
            return 0.0;
        }
        let (lo, hi) = (p_lo(q), p_hi(q));
        if hi <= lo {
            return 0.0;
        }
        let mut pts = vec![lo];
        let mut mids: Vec<f64> = inner_breaks(q)
            .into_iter()
            .filter(|&x| x > lo && x < hi)
            .collect();
        mids.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for x in mids {
            if x > *pts.last().unwrap() {
                pts.push(x);
            }
        }
        pts.push(hi);
        match quad::adaptive_split(&|p| f(q, p), &pts, &inner_spec) {
            Ok(v) => v,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let qpts = quad::breakpoint_chain(0.0, PI, q_breaks);
    let result = quad::adaptive_split(&outer, &qpts, spec);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    result.map(|v| 4.0 * v)
}

/// The five-piece decomposition of ΔI = I[f̃] − I[f] across a magnetization
/// shift, with the direct difference for cross-checking.
#[derive(Debug, Clone, Copy)]
pub struct DeltaIDecomposition {
    /// ΔI₁ − (ΔI₂₁ + ΔI₂₂ + ΔI₂₃).
    pub delta_i: f64,
    pub delta_i1: f64,
    pub delta_i21: f64,
    pub delta_i22: f64,
    pub delta_i23: f64,
    /// I[f̃] − I[f] evaluated by two independent functional quadratures.
    pub delta_i_direct: f64,
    /// Magnetizations after enforcing the ΔM > 0 convention.
    pub m: f64,
    pub m_tilde: f64,
}

/// Decompose ΔI between two inhomogeneous monotonous states.
///
/// Roles are swapped if needed so that ΔM = M̃ − M ≥ 0. ΔI₁ integrates the
/// profile-derivative difference against w̃₁ over all of phase space; ΔI₂ is
/// split over the μ₁/μ₂/μ₃ bands of the partition generated by ΔM.
pub fn delta_i_decomposition(
    f_spec: &StationarySpec,
    ft_spec: &StationarySpec,
    pq: &PhaseQuad,
) -> Result<DeltaIDecomposition> {
    let a = StationaryState::build(*f_spec, pq)?;
    let b = StationaryState::build(*ft_spec, pq)?;
    let (f, ft) = if b.m >= a.m { (a, b) } else { (b, a) };
    let (m, mt) = (f.m, ft.m);
    if !(m > 0.0 && mt < 1.0) {
        return Err(Error::Domain(format!(
            "both states must be inhomogeneous with M in (0,1); got {m} and {mt}"
        )));
    }
    let dm = mt - m;

    let i_f: StabilityReport = f.stability(pq)?;
    let i_ft: StabilityReport = ft.stability(pq)?;
    let delta_i_direct = i_ft.i - i_f.i;

    // Separatrix curves of both Hamiltonians, as p(q) breakpoints.
    let sep_breaks = move |q: f64| vec![p_on_level(m, m, q), p_on_level(mt, mt, q)];

    let fprime_f = {
        let f = f.clone();
        move |h: f64| f.fprime(h)
    };
    let fprime_ft = {
        let ft = ft.clone();
        move |h: f64| ft.fprime(h)
    };

    let delta_i1 = integrate_band(
        |q, p| {
            let h = 0.5 * p * p - m * q.cos();
            let ht = 0.5 * p * p - mt * q.cos();
            let c = q.cos();
            let phi_t = stability::phi(q, p, mt);
            (fprime_ft(ht) - fprime_f(h)) * (c * c - phi_t * phi_t)
        },
        |_| 0.0,
        |_| pq.p_max,
        &[],
        sep_breaks,
        &pq.quad,
    )?;

    if dm == 0.0 {
        return Ok(DeltaIDecomposition {
            delta_i: delta_i1,
            delta_i1,
            delta_i21: 0.0,
            delta_i22: 0.0,
            delta_i23: 0.0,
            delta_i_direct,
            m,
            m_tilde: mt,
        });
    }

    let part = MuPartition::new(m, dm)?;
    let (h_lo, h_hi) = (part.h_lower(), part.h_upper());
    let phi2_diff = move |q: f64, p: f64| {
        let pt = stability::phi(q, p, mt);
        let pm = stability::phi(q, p, m);
        fprime_f(0.5 * p * p - m * q.cos()) * (pt * pt - pm * pm)
    };
    let mut q_breaks = Vec::new();
    if let Some(qb) = q_break_of_level(h_lo, m) {
        q_breaks.push(qb);
    }
    if let Some(qb) = q_break_of_level(h_hi, m) {
        q_breaks.push(qb);
    }

    let delta_i21 = integrate_band(
        &phi2_diff,
        |_| 0.0,
        |q| p_on_level(h_lo, m, q),
        &q_breaks,
        |_| vec![],
        &pq.quad,
    )?;
    let delta_i22 = integrate_band(
        &phi2_diff,
        |q| p_on_level(h_lo, m, q),
        |q| p_on_level(h_hi, m, q),
        &q_breaks,
        sep_breaks,
        &pq.quad,
    )?;
    let delta_i23 = integrate_band(
        &phi2_diff,
        |q| p_on_level(h_hi, m, q),
        |_| pq.p_max,
        &q_breaks,
        |_| vec![],
        &pq.quad,
    )?;

    Ok(DeltaIDecomposition {
        delta_i: delta_i1 - (delta_i21 + delta_i22 + delta_i23),
        delta_i1,
        delta_i21,
        delta_i22,
        delta_i23,
        delta_i_direct,
        m,
        m_tilde: mt,
    })
}

/// ‖F'∘h‖_{L¹} of a stationary state over the truncated box; finiteness is
/// one of the integrability facts the ΔI₁ estimate consumes.
pub fn fprime_l1_norm(state: &StationaryState, pq: &PhaseQuad) -> Result<f64> {
    let s = state.clone();
    stability::integrate_with_energy_cuts(
        move |q, p| s.fprime(0.5 * p * p - s.m * q.cos()).abs(),
        state.m.max(1e-6),
        &[],
        pq,
    )
}

/// Largest |F'| over the μ₂ band, by dense sampling of the energy interval.
pub fn fprime_max_on_band(state: &StationaryState, part: &MuPartition) -> f64 {
    let n = 2000;
    let (lo, hi) = (part.h_lower(), part.h_upper());
    (0..=n)
        .map(|i| {
            let h = lo + (hi - lo) * i as f64 / n as f64;
            state.fprime(h).abs()
        })
        .fold(0.0_f64, f64::max)
}

/// π ∫ (1/p) ∂_p g dp for the homogeneous bump g = ε^δ e^{−p²/(2Tε²)}:
/// the modification's contribution to the stability integral, which scales
/// like ε^{δ−1}.
pub fn bump_i_contribution_homogeneous(
    eps: f64,
    delta: f64,
    t: f64,
    spec: &QuadSpec,
) -> Result<f64> {
    let w = eps * t.sqrt();
    let dgdp_over_p =
        move |p: f64| -eps.powf(delta) / (t * eps * eps) * (-0.5 * p * p / (w * w)).exp();
    let pts = quad::breakpoint_chain(0.0, 14.0 * w, &[w, 3.0 * w]);
    let half = quad::adaptive_split(&dgdp_over_p, &pts, spec)?;
    Ok(2.0 * PI * half)
}

/// ∬ G'(h) w₁ dq dp for the inhomogeneous bump G(h) = ε^δ e^{−(h+M)/(Tε²)}:
/// scales like ε^{δ+4} because the quadratic part of w₁ averages to zero
/// along orbits.
pub fn bump_i_contribution_inhomogeneous(
    eps: f64,
    delta: f64,
    t: f64,
    m: f64,
    spec: &QuadSpec,
) -> Result<f64> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::Domain(format!("need 0 < M < 1, got {m}")));
    }
    let sq = (eps * (t / m).sqrt()).min(0.05);
    let sp = eps * t.sqrt();
    let (lq, lp) = ((14.0 * sq).min(0.9 * PI), 14.0 * sp);
    let e2 = eps * eps;
    let gprime = move |h: f64| -eps.powf(delta - 2.0) / t * (-(h + m) / (t * e2)).exp();

    let peak = eps.powf(delta - 2.0) / t;
    let failure = std::cell::RefCell::new(None);
    let outer = |q: f64| -> f64 {
        if failure.borrow().is_some() {
            return 0.0;
        }
        // The column maximum sits at p = 0; columns where the bump has
        // decayed to nothing contribute nothing, and the absolute floor of
        // the others is tied to their own peak so roundoff-level error
        // estimates terminate instead of subdividing forever.
        let column_peak = gprime(-m * q.cos()).abs();
        if column_peak < 1e-30 * peak {
            return 0.0;
        }
        let inner_spec = QuadSpec {
            rel_tol: 0.1 * spec.rel_tol,
            abs_tol: 1e-14 * column_peak * sp,
            max_segments: spec.max_segments,
        };
        match quad::adaptive(
            &|p: f64| gprime(0.5 * p * p - m * q.cos()) * stability::w1(q, p, m),
            0.0,
            lp,
            &inner_spec,
        ) {
            Ok(v) => v,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let outer_spec = QuadSpec {
        abs_tol: 1e-14 * peak * sp * sq,
        ..spec.clone()
    };
    let result = quad::adaptive(&outer, 0.0, lq, &outer_spec);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    result.map(|v| 4.0 * v)
}

/// Least-squares slope of ln y against ln x.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (a.ln(), b.abs().ln()))
        .unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

/// Protocol of the homogeneous (ε, δ) phase-diagram sweep.
#[derive(Debug, Clone)]
pub struct HomogeneousProtocol {
    pub t: f64,
    pub mu: f64,
    pub grid: GridSpec,
    pub sim: SimConfig,
    /// Final-magnetization instability threshold, M_f^th = μ/2 by default.
    pub m_f_threshold: f64,
}

impl Default for HomogeneousProtocol {
    fn default() -> Self {
        HomogeneousProtocol {
            t: 0.6,
            mu: 1e-4,
            grid: GridSpec::new(512, 512, 3.0),
            sim: SimConfig::default(),
            m_f_threshold: 5e-5,
        }
    }
}

/// One cell of a sweep.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub eps: f64,
    pub delta: f64,
    /// Final magnetization M(t_end); NaN when the run failed.
    pub m_f: f64,
    pub verdict: Verdict,
    /// Closed-form functional value I[f_{ε,δ,0}] of the cell.
    pub i_theory: f64,
    pub error: Option<String>,
}

impl SweepResult {
    pub fn verdict_label(&self) -> &str {
        if self.error.is_some() {
            return "failed";
        }
        match self.verdict {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        }
    }
}

/// Run one simulation per (ε, δ) cell and classify against M_f^th.
///
/// Cells are independent jobs on the rayon pool; results are merged in
/// lexicographic (ε, δ) order so output is reproducible regardless of the
/// worker count. A failed cell is recorded and the scan continues.
pub fn scan_phase_diagram(
    eps_list: &[f64],
    delta_list: &[f64],
    proto: &HomogeneousProtocol,
) -> Vec<SweepResult> {
    let cells: Vec<(f64, f64)> = eps_list
        .iter()
        .flat_map(|&e| delta_list.iter().map(move |&d| (e, d)))
        .collect();
    let mut results: Vec<SweepResult> = cells
        .par_iter()
        .map(|&(eps, delta)| homogeneous_cell(eps, delta, proto))
        .collect();
    results.sort_by(|a, b| {
        (a.eps, a.delta)
            .partial_cmp(&(b.eps, b.delta))
            .expect("finite cell coordinates")
    });
    results
}

fn homogeneous_cell(eps: f64, delta: f64, proto: &HomogeneousProtocol) -> SweepResult {
    let i_theory = stability::stability_modified_homogeneous_closed(eps, delta, proto.t).i;
    let outcome = (|| -> Result<f64> {
        let spec = StationarySpec::modified_thermal(proto.t, eps, delta).with_mu(proto.mu);
        let grid = build_initial_condition(&spec, 0.0, proto.grid)?;
        let (series, _) = vlasov::run(&grid, &proto.sim)?;
        Ok(series.m_final())
    })();
    match outcome {
        Ok(m_f) => SweepResult {
            eps,
            delta,
            m_f,
            verdict: if m_f > proto.m_f_threshold {
                Verdict::Unstable
            } else {
                Verdict::Stable
            },
            i_theory,
            error: None,
        },
        Err(e) => SweepResult {
            eps,
            delta,
            m_f: f64::NAN,
            verdict: Verdict::Marginal,
            i_theory,
            error: Some(e.to_string()),
        },
    }
}

/// Protocol of the inhomogeneous robustness campaign at T < T_c.
#[derive(Debug, Clone)]
pub struct InhomogeneousProtocol {
    pub t: f64,
    pub mu: f64,
    pub grid: GridSpec,
    pub sim: SimConfig,
    /// δ of the varying-ε line.
    pub line_delta: f64,
    /// ε of the varying-δ line.
    pub line_eps: f64,
    /// A run is unstable when sup_{t ≥ t_end/2} |M(t) − M_st| exceeds this
    /// multiple of μ.
    pub deviation_factor: f64,
}

impl Default for InhomogeneousProtocol {
    fn default() -> Self {
        InhomogeneousProtocol {
            t: 0.4,
            mu: 1e-4,
            grid: GridSpec::new(512, 512, 3.0),
            sim: SimConfig::default(),
            line_delta: 0.5,
            line_eps: 0.05,
            deviation_factor: 10.0,
        }
    }
}

/// One robustness run with its deviation trace.
#[derive(Debug, Clone)]
pub struct RobustnessRun {
    pub eps: f64,
    pub delta: f64,
    /// Self-consistent magnetization of the modified state on the run grid.
    pub m_st: f64,
    /// sup |M(t) − M_st| over the second half of the run.
    pub max_dev_late: f64,
    pub verdict: Verdict,
    pub series: TimeSeries,
    pub error: Option<String>,
}

impl RobustnessRun {
    pub fn to_sweep_result(&self, i_theory: f64) -> SweepResult {
        SweepResult {
            eps: self.eps,
            delta: self.delta,
            m_f: self.series.m.last().copied().unwrap_or(f64::NAN),
            verdict: self.verdict,
            i_theory,
            error: self.error.clone(),
        }
    }
}

/// The two campaign lines: (ε varying, δ = line_delta) and (ε = line_eps,
/// δ varying). Duplicated cells are run once.
pub fn inhomogeneous_robustness(
    eps_list: &[f64],
    delta_list: &[f64],
    proto: &InhomogeneousProtocol,
) -> Vec<RobustnessRun> {
    let mut cells: Vec<(f64, f64)> = eps_list.iter().map(|&e| (e, proto.line_delta)).collect();
    for &d in delta_list {
        if !cells.iter().any(|&(e, dd)| e == proto.line_eps && dd == d) {
            cells.push((proto.line_eps, d));
        }
    }
    let mut runs: Vec<RobustnessRun> = cells
        .par_iter()
        .map(|&(eps, delta)| inhomogeneous_cell(eps, delta, proto))
        .collect();
    runs.sort_by(|a, b| {
        (a.eps, a.delta)
            .partial_cmp(&(b.eps, b.delta))
            .expect("finite cell coordinates")
    });
    runs
}

fn inhomogeneous_cell(eps: f64, delta: f64, proto: &InhomogeneousProtocol) -> RobustnessRun {
    let outcome = (|| -> Result<(f64, TimeSeries)> {
        let base = StationarySpec::modified_thermal(proto.t, eps, delta);
        let m_st = solve_selfconsistent_m_on_grid(&base, proto.grid)?;
        let grid = build_initial_condition(&base.with_mu(proto.mu), m_st, proto.grid)?;
        let (series, _) = vlasov::run(&grid, &proto.sim)?;
        Ok((m_st, series))
    })();
    match outcome {
        Ok((m_st, series)) => {
            let t_half = series.t.last().copied().unwrap_or(0.0) * 0.5;
            let max_dev_late = series
                .t
                .iter()
                .zip(&series.m)
                .filter(|(&t, _)| t >= t_half)
                .map(|(_, &m)| (m - m_st).abs())
                .fold(0.0_f64, f64::max);
            let verdict = if max_dev_late > proto.deviation_factor * proto.mu {
                Verdict::Unstable
            } else {
                Verdict::Stable
            };
            RobustnessRun {
                eps,
                delta,
                m_st,
                max_dev_late,
                verdict,
                series,
                error: None,
            }
        }
        Err(e) => RobustnessRun {
            eps,
            delta,
            m_st: f64::NAN,
            max_dev_late: f64::NAN,
            verdict: Verdict::Marginal,
            series: TimeSeries::default(),
            error: Some(e.to_string()),
        },
    }
}

/// `sweep.csv`: one row per cell, columns eps,delta,M_f,verdict,I_theory.
pub fn write_sweep_csv(results: &[SweepResult], path: &std::path::Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "eps,delta,M_f,verdict,I_theory")?;
    for r in results {
        writeln!(
            out,
            "{:.15e},{:.15e},{:.15e},{},{:.15e}",
            r.eps,
            r.delta,
            r.m_f,
            r.verdict_label(),
            r.i_theory
        )?;
    }
    Ok(())
}

/// `deltaI.csv`: the five decomposition columns, one row per pair.
pub fn write_delta_i_csv(rows: &[DeltaIDecomposition], path: &std::path::Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "delta_I,delta_I1,delta_I21,delta_I22,delta_I23")?;
    for d in rows {
        writeln!(
            out,
            "{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
            d.delta_i, d.delta_i1, d.delta_i21, d.delta_i22, d.delta_i23
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_rejects_degenerate_shifts() {
        assert!(MuPartition::new(0.5, 0.0).is_err());
        assert!(MuPartition::new(0.5, 0.25).is_err()); // M1 = 0
        assert!(MuPartition::new(0.5, 0.3).is_err());
        let p = MuPartition::new(0.5, 0.02).unwrap();
        assert!((p.h_lower() - 0.42).abs() < 1e-15);
        assert!((p.h_upper() - 0.58).abs() < 1e-15);
    }

    #[test]
    fn partition_regions_cover_box() {
        let p = MuPartition::new(0.5, 0.02).unwrap();
        assert_eq!(p.region(0.0, 0.0), MuRegion::Mu1);
        assert_eq!(p.region(PI, 0.0), MuRegion::Mu2); // h = M exactly
        assert_eq!(p.region(0.0, 3.0), MuRegion::Mu3);
    }

    #[test]
    fn mu2_area_bound_and_scaling() {
        let spec = QuadSpec::with_rel_tol(1e-11);
        let area = mu2_area(0.5, 0.01, &spec).unwrap();
        assert!(area > 0.0 && area <= 16.0 * PI * 0.1);

        // The bound 16π√ΔM decays with slope 1/2; the band area itself
        // vanishes faster, like ΔM·log(1/ΔM) (empirical slope ≈ 0.9), so the
        // bound must hold across the range with the measured slope ≥ 1/2.
        let dms = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2];
        let areas: Vec<f64> = dms
            .iter()
            .map(|&dm| mu2_area(0.5, dm, &spec).unwrap())
            .collect();
        for (dm, a) in dms.iter().zip(&areas) {
            assert!(*a <= 16.0 * PI * dm.sqrt());
        }
        let slope = log_log_slope(&dms, &areas);
        assert!((0.45..=1.05).contains(&slope), "area slope {slope}");
    }

    #[test]
    fn k_range_bounds_hold_and_close_onto_separatrix() {
        let (m, dm) = (0.5, 0.02);
        for &m_star in &[m, m + 0.5 * dm, m + dm] {
            let r1 = k_range_check(m, dm, m_star, MuRegion::Mu1).unwrap();
            assert!(
                r1.satisfied,
                "mu1: k={} bound={}",
                r1.extremal_k, r1.bound_k
            );
            let r3 = k_range_check(m, dm, m_star, MuRegion::Mu3).unwrap();
            assert!(
                r3.satisfied,
                "mu3: k={} bound={}",
                r3.extremal_k, r3.bound_k
            );
        }
        // Shrinking dm closes both bounds onto k = 1.
        let r1 = k_range_check(m, 1e-6, m, MuRegion::Mu1).unwrap();
        let r3 = k_range_check(m, 1e-6, m, MuRegion::Mu3).unwrap();
        assert!((r1.bound_k - 1.0).abs() < 1e-5);
        assert!((r3.bound_k - 1.0).abs() < 1e-5);
        assert!(k_range_check(m, dm, m - 0.1, MuRegion::Mu1).is_err());
        assert!(k_range_check(m, dm, m, MuRegion::Mu2).is_err());
    }

    #[test]
    fn decomposition_identity_on_thermal_pair() {
        let pq = PhaseQuad {
            quad: QuadSpec::with_rel_tol(1e-9),
            ..PhaseQuad::default()
        };
        let f = StationarySpec::thermal_inhomogeneous(0.41);
        let ft = StationarySpec::thermal_inhomogeneous(0.40);
        let d = delta_i_decomposition(&f, &ft, &pq).unwrap();
        assert!(
            (d.delta_i - d.delta_i_direct).abs() < 1e-5,
            "decomposition {} vs direct {}",
            d.delta_i,
            d.delta_i_direct
        );
        assert!(d.m_tilde > d.m);

        // |ΔI₂₂| ≤ F'_max · area(μ₂).
        let state = StationaryState::build(f, &pq).unwrap();
        let part = MuPartition::new(d.m, d.m_tilde - d.m).unwrap();
        let fmax = fprime_max_on_band(&state, &part);
        let area = mu2_area(d.m, d.m_tilde - d.m, &pq.quad).unwrap();
        assert!(
            d.delta_i22.abs() <= fmax * area,
            "|dI22| = {} vs bound {}",
            d.delta_i22.abs(),
            fmax * area
        );
    }

    #[test]
    fn identical_states_decompose_to_zero() {
        let pq = PhaseQuad {
            quad: QuadSpec::with_rel_tol(1e-9),
            ..PhaseQuad::default()
        };
        let f = StationarySpec::thermal_inhomogeneous(0.4);
        let d = delta_i_decomposition(&f, &f, &pq).unwrap();
        assert_eq!(d.delta_i21, 0.0);
        assert_eq!(d.delta_i22, 0.0);
        assert_eq!(d.delta_i23, 0.0);
        assert!(d.delta_i.abs() < 1e-8, "delta_i = {}", d.delta_i);
        assert!(d.delta_i_direct.abs() < 1e-8);
    }

    #[test]
    fn fprime_l1_is_finite_for_thermal_state() {
        let pq = PhaseQuad::default();
        let state =
            StationaryState::build(StationarySpec::thermal_inhomogeneous(0.4), &pq).unwrap();
        let l1 = fprime_l1_norm(&state, &pq).unwrap();
        assert!(l1.is_finite() && l1 > 0.0);
    }

    #[test]
    fn bump_contribution_scalings() {
        let spec = QuadSpec::with_rel_tol(1e-10);
        let t = 0.6;
        let delta = 1.4;
        let eps: Vec<f64> = vec![1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
        let vals: Vec<f64> = eps
            .iter()
            .map(|&e| bump_i_contribution_homogeneous(e, delta, t, &spec).unwrap())
            .collect();
        // closed form −π √(2π/T) ε^{δ−1}
        let closed = -PI * (2.0 * PI / t).sqrt() * 0.01_f64.powf(delta - 1.0);
        assert!(
            (vals[2] - closed).abs() < 1e-8 * closed.abs(),
            "{} vs {closed}",
            vals[2]
        );
        let slope = log_log_slope(&eps, &vals);
        assert!((slope - (delta - 1.0)).abs() < 0.02, "slope {slope}");

        let m = 0.589707987782744;
        let delta = 0.5;
        let eps: Vec<f64> = vec![3e-3, 1e-2, 3e-2];
        let vals: Vec<f64> = eps
            .iter()
            .map(|&e| bump_i_contribution_inhomogeneous(e, delta, 0.4, m, &spec).unwrap())
            .collect();
        let slope = log_log_slope(&eps, &vals);
        assert!(
            (slope - (delta + 4.0)).abs() < 0.5,
            "inhomogeneous slope {slope}, values {vals:?}"
        );
    }

    #[test]
    fn delta_i_vanishes_linearly_in_the_parameter() {
        // Thermal-family pairs: as the temperature perturbation (and with it
        // the profile distance and |dM|) goes to zero, |dI| goes to zero at
        // an empirically linear rate.
        let pq = PhaseQuad {
            quad: QuadSpec::with_rel_tol(1e-10),
            ..PhaseQuad::default()
        };
        let i_at = |t: f64| {
            StationaryState::build(StationarySpec::thermal_inhomogeneous(t), &pq)
                .unwrap()
                .stability(&pq)
                .unwrap()
                .i
        };
        let i0 = i_at(0.4);
        let dts = [0.0025, 0.005, 0.01, 0.02];
        let dis: Vec<f64> = dts.iter().map(|&dt| (i_at(0.4 + dt) - i0).abs()).collect();
        let slope = log_log_slope(&dts, &dis);
        assert!((slope - 1.0).abs() < 0.2, "continuity rate {slope}");
        assert!(dis[0] < dis[3]);
    }

    #[test]
    fn contrast_between_families() {
        // Matched modification size eps: the homogeneous family flips the
        // sign of I even as eps -> 0 (for delta < 1), while the inhomogeneous
        // contribution decays like eps^{delta+4} and cannot.
        use crate::stability::stability_modified_homogeneous_closed;
        for &eps in &[1e-2, 1e-3, 1e-4] {
            assert!(stability_modified_homogeneous_closed(eps, 0.9, 0.6).i < 0.0);
        }
        let spec = QuadSpec::with_rel_tol(1e-10);
        let m = 0.589707987782744;
        let contrib = bump_i_contribution_inhomogeneous(1e-2, 0.9, 0.4, m, &spec).unwrap();
        assert!(contrib.abs() < 1e-8, "inhomogeneous contribution {contrib}");
    }

    #[test]
    fn sweep_smoke_and_csv() {
        let proto = HomogeneousProtocol {
            grid: GridSpec::new(64, 65, 3.0),
            sim: SimConfig {
                dt: 0.05,
                t_end: 2.0,
                diag_stride: 10,
                ..Default::default()
            },
            ..Default::default()
        };
        let results = scan_phase_diagram(&[0.05], &[1.2, 1.7], &proto);
        assert_eq!(results.len(), 2);
        assert!(results.iter().all(|r| r.error.is_none()));
        assert!(results[0].delta < results[1].delta);
        assert!(results[0].i_theory < 0.0 && results[1].i_theory > 0.0);

        let dir = std::env::temp_dir().join("hmf_sweep_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sweep.csv");
        write_sweep_csv(&results, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("eps,delta,M_f,verdict,I_theory"));
        assert_eq!(text.lines().count(), 3);
    }
}
