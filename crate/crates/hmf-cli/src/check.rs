//! The invariant battery behind `hmf check`: oracle agreements, analytic
//! bounds, perturbation identities. Every item prints one pass/fail line;
//! items that demonstrate a documented divergence report `expected-divergent`.

use hmf_core::elliptic::{complete_elliptic, ek_ratio, elliptic_derivatives};
use hmf_core::neighborhood::{
    self, delta_i_decomposition, k_range_check, log_log_slope, mu2_area, MuRegion,
};
use hmf_core::norms::inv_ua_lb_norm;
use hmf_core::pendulum::{action, avg_cos_libration, avg_cos_rotation, orbit_average, Region};
use hmf_core::quad::{self, QuadSpec};
use hmf_core::stability::{
    build_bump_g, build_destabilizer_f1, solve_selfconsistent_m, stability_homogeneous, PhaseQuad,
    StationarySpec, ThermalMomentum, Verdict,
};
use hmf_core::Error;
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    ExpectedDivergent,
}

#[derive(Debug)]
pub struct CheckItem {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

fn item(name: &'static str, ok: bool, detail: String) -> CheckItem {
    CheckItem {
        name,
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

/// Direct quadrature of the defining elliptic integrals, independent of the
/// AGM path.
fn elliptic_by_quadrature(k: f64) -> (f64, f64) {
    let spec = QuadSpec {
        rel_tol: 1e-13,
        abs_tol: 1e-15,
        max_segments: 20_000,
    };
    let m = k * k;
    let kk = quad::adaptive(
        &|theta: f64| {
            let s = theta.sin();
            1.0 / (1.0 - m * s * s).sqrt()
        },
        0.0,
        PI / 2.0,
        &spec,
    )
    .expect("elliptic quadrature oracle");
    let ee = quad::adaptive(
        &|theta: f64| {
            let s = theta.sin();
            (1.0 - m * s * s).sqrt()
        },
        0.0,
        PI / 2.0,
        &spec,
    )
    .expect("elliptic quadrature oracle");
    (kk, ee)
}

fn check_elliptic_agm_vs_quadrature() -> CheckItem {
    let mut worst = 0.0_f64;
    for i in 0..100 {
        let k = 0.99 * (i as f64 + 0.5) / 100.0;
        let pair = complete_elliptic(k).unwrap();
        let (kk, ee) = elliptic_by_quadrature(k);
        worst = worst.max(((pair.big_k - kk) / kk).abs());
        worst = worst.max(((pair.big_e - ee) / ee).abs());
    }
    item(
        "elliptic_agm_vs_quadrature",
        worst < 1e-11,
        format!("max relative error {worst:.2e} over 100 moduli (tol 1e-11)"),
    )
}

fn check_elliptic_derivatives() -> CheckItem {
    let mut worst = 0.0_f64;
    let h = 1e-6;
    for i in 1..=20 {
        let k = i as f64 / 21.0;
        let (dk, de) = elliptic_derivatives(k).unwrap();
        let up = complete_elliptic(k + h).unwrap();
        let dn = complete_elliptic(k - h).unwrap();
        let fd_k = (up.big_k - dn.big_k) / (2.0 * h);
        let fd_e = (up.big_e - dn.big_e) / (2.0 * h);
        worst = worst.max(((dk - fd_k) / fd_k).abs());
        worst = worst.max(((de - fd_e) / fd_e).abs());
    }
    item(
        "elliptic_derivative_identities",
        worst < 1e-6,
        format!("max relative deviation from finite differences {worst:.2e} (tol 1e-6)"),
    )
}

fn check_ek_expansion() -> CheckItem {
    let mut ok = true;
    let mut worst = 0.0_f64;
    for &k in &[1e-4, 3e-4, 1e-3] {
        let r = ek_ratio(k).unwrap();
        let err = (r - (1.0 - 0.5 * k * k)).abs();
        worst = worst.max(err / k.powi(4));
        ok &= err < 5.0 * k.powi(4);
    }
    item(
        "ek_ratio_small_k_expansion",
        ok,
        format!("|E/K - (1 - k^2/2)| <= {worst:.2}·k^4 (bound 5·k^4)"),
    )
}

fn check_orbit_average(region: Region) -> CheckItem {
    let (name, ks): (&'static str, Vec<f64>) = match region {
        Region::Libration => (
            "orbit_average_libration",
            (0..50).map(|i| 0.02 + 0.96 * i as f64 / 49.0).collect(),
        ),
        _ => (
            "orbit_average_rotation",
            (0..50).map(|i| 1.02 * 1.1f64.powi(i)).collect(),
        ),
    };
    let mut worst = 0.0_f64;
    for &k in &ks {
        let oracle = orbit_average(|q| q.cos(), k, region).unwrap();
        let closed = if region == Region::Libration {
            avg_cos_libration(k).unwrap()
        } else {
            avg_cos_rotation(k).unwrap()
        };
        worst = worst.max((oracle - closed).abs());
    }
    item(
        name,
        worst < 1e-8,
        format!("max |oracle - closed form| = {worst:.2e} over 50 moduli (tol 1e-8)"),
    )
}

fn check_action_endpoints() -> CheckItem {
    let m: f64 = 0.5;
    let sep = 4.0 * m.sqrt() / PI;
    let j_lib = action(1.0 - 1e-7, m, Region::Libration).unwrap();
    let j_rot = action(1.0 + 1e-7, m, Region::RotationUpper).unwrap();
    let e_lib = (j_lib / (2.0 * sep) - 1.0).abs();
    let e_rot = (j_rot / sep - 1.0).abs();
    item(
        "action_range_endpoints",
        e_lib < 1e-3 && e_rot < 1e-3,
        format!("J_lib -> 8sqrt(M)/pi within {e_lib:.1e}, J_rot -> 4sqrt(M)/pi within {e_rot:.1e}"),
    )
}

fn check_funcg_identity() -> CheckItem {
    let spec = QuadSpec::with_rel_tol(1e-12);
    let mut worst = 0.0_f64;
    for (eps, alpha) in [(0.05, 1.5), (1e-3, 1.5), (0.1, 0.5)] {
        let g = build_bump_g(eps, alpha).unwrap();
        let w = g.width();
        let pts = quad::breakpoint_chain(0.0, 14.0 * w, &[w, 3.0 * w]);
        let half = quad::adaptive_split(&|p: f64| g.deriv(p) / p, &pts, &spec).unwrap();
        let rel = ((2.0 * half - g.funcg_closed()) / g.funcg_closed()).abs();
        worst = worst.max(rel);
    }
    item(
        "funcg_identity",
        worst < 1e-10,
        format!("max relative error of the g'/p integral {worst:.2e} (tol 1e-10)"),
    )
}

fn check_bump_mass() -> CheckItem {
    let spec = QuadSpec::with_rel_tol(1e-13);
    let g = build_bump_g(0.05, 1.5).unwrap();
    let w = g.width();
    let pts = quad::breakpoint_chain(0.0, 14.0 * w, &[w, 3.0 * w]);
    let mass = 4.0 * PI * quad::adaptive_split(&|p| g.value(p), &pts, &spec).unwrap();
    let err = (mass - g.mass()).abs();
    item(
        "bump_mass_identity",
        err < 1e-12,
        format!("|mass - eps^(1+alpha)| = {err:.2e} (tol 1e-12)"),
    )
}

fn check_destabilizer() -> CheckItem {
    let base = ThermalMomentum::new(0.6);
    let d = build_destabilizer_f1(base, 1e-3, 1.5).unwrap();
    let pq = PhaseQuad::with_hints(&[d.bump.width(), 10.0 * d.bump.width()]);
    let before = stability_homogeneous(|p| base.deriv(p), &pq).unwrap();
    let after = stability_homogeneous(|p| d.deriv(p), &pq).unwrap();
    item(
        "destabilizer_sign_flip",
        before.verdict == Verdict::Stable && after.verdict == Verdict::Unstable,
        format!("I[f0] = {:.4}, I[f0+f1] = {:.4}", before.i, after.i),
    )
}

fn check_weighted_norm(b_override: Option<f64>) -> CheckItem {
    let spec = QuadSpec::with_rel_tol(1e-10);
    if let Some(b) = b_override {
        if !(1.0 < b && b < 2.0) {
            return match inv_ua_lb_norm(3.0, b, 0.5, &spec) {
                Err(Error::Divergent(msg)) => CheckItem {
                    name: "weighted_norm_integrability",
                    status: Status::ExpectedDivergent,
                    detail: format!("b = {b}: {msg}"),
                },
                other => item(
                    "weighted_norm_integrability",
                    false,
                    format!("b = {b} should diverge, got {other:?}"),
                ),
            };
        }
    }
    let b = b_override.unwrap_or(1.95);
    let finite = inv_ua_lb_norm(3.0, 1.5, 0.5, &spec);
    let ms = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
    let ns: Vec<f64> = ms
        .iter()
        .map(|&m| inv_ua_lb_norm(3.0, b, m, &spec).unwrap())
        .collect();
    let slope = log_log_slope(&ms, &ns);
    let sharp = (1.0 - b) / b;
    // The sharp small-m rate is m^{(1-b)/b}; the O(m^{-1/b}) statement is an
    // upper bound, which near b = 2 coincides with the sharp rate.
    let ok = finite.map(|v| v.is_finite()).unwrap_or(false)
        && (slope - sharp).abs() < 0.05
        && ns
            .iter()
            .zip(&ms)
            .all(|(&n, &m)| n <= 10.0 * ns[ns.len() - 1] * (0.1_f64 / m).powf(1.0 / b));
    item(
        "weighted_norm_integrability",
        ok,
        format!(
            "finite at (a,b)=(3,1.5); m-slope {slope:.3} at b={b} (sharp (1-b)/b = {sharp:.3}, bound rate -1/b = {:.3})",
            -1.0 / b
        ),
    )
}

fn check_band_area() -> CheckItem {
    let spec = QuadSpec::with_rel_tol(1e-11);
    let dms = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2];
    let mut ok = true;
    let areas: Vec<f64> = dms
        .iter()
        .map(|&dm| {
            let a = mu2_area(0.5, dm, &spec).unwrap();
            ok &= a <= 16.0 * PI * dm.sqrt();
            a
        })
        .collect();
    let slope = log_log_slope(&dms, &areas);
    ok &= slope >= 0.45;
    item(
        "separatrix_band_area",
        ok,
        format!(
            "area <= 16*pi*sqrt(dM) across dM in [1e-4, 1e-2]; measured slope {slope:.2} (sharp rate is dM·log, bound rate 0.5)"
        ),
    )
}

fn check_k_ranges() -> CheckItem {
    let (m, dm) = (0.5, 0.02);
    let mut ok = true;
    let mut detail = String::new();
    for &m_star in &[m, m + dm] {
        let r1 = k_range_check(m, dm, m_star, MuRegion::Mu1).unwrap();
        let r3 = k_range_check(m, dm, m_star, MuRegion::Mu3).unwrap();
        ok &= r1.satisfied && r3.satisfied;
        if m_star == m {
            detail = format!(
                "mu1: sup k = {:.6} <= {:.6}; mu3: inf k = {:.6} >= {:.6}",
                r1.extremal_k, r1.bound_k, r3.extremal_k, r3.bound_k
            );
        }
    }
    item("k_range_bounds", ok, detail)
}

fn check_delta_i(out_dir: &Path) -> CheckItem {
    let pq = PhaseQuad {
        quad: QuadSpec::with_rel_tol(1e-9),
        ..PhaseQuad::default()
    };
    let f = StationarySpec::thermal_inhomogeneous(0.41);
    let ft = StationarySpec::thermal_inhomogeneous(0.40);
    match delta_i_decomposition(&f, &ft, &pq) {
        Ok(d) => {
            let err = (d.delta_i - d.delta_i_direct).abs();
            let csv_ok = neighborhood::write_delta_i_csv(&[d], &out_dir.join("deltaI.csv")).is_ok();
            item(
                "delta_i_decomposition",
                err < 1e-5 && csv_ok,
                format!(
                    "|(dI1 - dI2) - direct| = {err:.2e} (tol 1e-5); pieces written to deltaI.csv"
                ),
            )
        }
        Err(e) => item("delta_i_decomposition", false, e.to_string()),
    }
}

fn check_fprime_l1() -> CheckItem {
    let pq = PhaseQuad::default();
    let state = hmf_core::stability::StationaryState::build(
        StationarySpec::thermal_inhomogeneous(0.4),
        &pq,
    )
    .unwrap();
    match neighborhood::fprime_l1_norm(&state, &pq) {
        Ok(v) => item(
            "fprime_l1_finite",
            v.is_finite() && v > 0.0,
            format!("||F'∘h||_L1 = {v:.6}"),
        ),
        Err(e) => item("fprime_l1_finite", false, e.to_string()),
    }
}

fn check_selfconsistency() -> CheckItem {
    let pq = PhaseQuad::default();
    let m = solve_selfconsistent_m(&StationarySpec::thermal_inhomogeneous(0.4), &pq).unwrap();
    let frozen = 0.589707987782744; // Bessel-ratio fixed point at T = 0.4
    let err = (m - frozen).abs();
    item(
        "selfconsistent_magnetization",
        err < 1e-8,
        format!("M_st(T=0.4) = {m:.12} vs fixed-point oracle {frozen} (|diff| = {err:.1e})"),
    )
}

/// Run the battery; prints one line per item.
pub fn run_battery(out_dir: &Path, ua_b: Option<f64>) -> Vec<CheckItem> {
    let items = vec![
        check_elliptic_agm_vs_quadrature(),
        check_elliptic_derivatives(),
        check_ek_expansion(),
        check_orbit_average(Region::Libration),
        check_orbit_average(Region::RotationUpper),
        check_action_endpoints(),
        check_funcg_identity(),
        check_bump_mass(),
        check_destabilizer(),
        check_weighted_norm(ua_b),
        check_band_area(),
        check_k_ranges(),
        check_delta_i(out_dir),
        check_fprime_l1(),
        check_selfconsistency(),
    ];
    for it in &items {
        let tag = match it.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::ExpectedDivergent => "PASS (expected-divergent)",
        };
        println!("{tag:<26} {:<32} {}", it.name, it.detail);
    }
    items
}
