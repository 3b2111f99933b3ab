//! Scaling exponents of the perturbation families in the grid norms, checked
//! against the closed-form rates.

use hmf_core::grid::{GridSpec, PhaseGrid};
use hmf_core::neighborhood::log_log_slope;
use hmf_core::norms::{hs_norm, lp_norm, w1p_norm};
use hmf_core::stability::build_bump_g;
use hmf_core::vlasov::magnetization;

/// ‖g_{ε,α}‖_{W^{1,a}} scales like ε^{1−α+α/a}: the gradient term dominates.
#[test]
fn momentum_bump_w1a_scaling() {
    // The gradient term eps^{1-alpha+alpha/a} dominates the norm only once
    // eps^{alpha} separates it from the L^a term, so the flat-alpha case is
    // fit at smaller eps (where its width eps^alpha is still well resolved).
    for (alpha, a, expect, eps) in [
        (
            1.2,
            3.0,
            1.0 - 1.2 + 1.2 / 3.0,
            vec![0.02, 0.033, 0.055, 0.09],
        ),
        (0.5, 2.0, 0.75, vec![1e-4, 2.2e-4, 4.6e-4, 1e-3]),
    ] {
        let norms: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let g = build_bump_g(e, alpha).unwrap();
                let grid = PhaseGrid::from_fn(GridSpec::new(8, 24577, 3.0), |_, p| g.value(p));
                w1p_norm(&grid, a).unwrap()
            })
            .collect();
        let slope = log_log_slope(&eps, &norms);
        assert!(
            (slope - expect).abs() < 0.1,
            "alpha={alpha}, a={a}: slope {slope} vs {expect}"
        );
    }
}

/// L^a norm of the same family scales like ε^{1+α/a}.
#[test]
fn momentum_bump_la_scaling() {
    let (alpha, a) = (1.2, 3.0);
    let eps: Vec<f64> = vec![0.02, 0.033, 0.055, 0.09];
    let norms: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let g = build_bump_g(e, alpha).unwrap();
            let grid = PhaseGrid::from_fn(GridSpec::new(8, 24577, 3.0), |_, p| g.value(p));
            lp_norm(&grid, a).unwrap()
        })
        .collect();
    let slope = log_log_slope(&eps, &norms);
    let expect = 1.0 + alpha / a;
    assert!((slope - expect).abs() < 0.05, "slope {slope} vs {expect}");
}

/// Spectral H^s slope of the energy bump at moderate ε on a 2D grid.
#[test]
fn energy_bump_hs_scaling_2d() {
    let (t, m, delta) = (0.4, 0.589707987782744_f64, 0.5);
    let eps: Vec<f64> = vec![0.03, 0.05, 0.08];
    for (s, expect) in [(1.0, 0.5), (0.0, 1.5)] {
        let norms: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let grid = PhaseGrid::from_fn(GridSpec::new(1024, 1024, 1.0), |q, p| {
                    let h = 0.5 * p * p - m * q.cos();
                    e.powf(delta) * (-(h + m) / (t * e * e)).exp()
                });
                hs_norm(&grid, s).unwrap()
            })
            .collect();
        let slope = log_log_slope(&eps, &norms);
        assert!(
            (slope - expect).abs() < 0.1,
            "s={s}: slope {slope} vs {expect}"
        );
    }
}

/// A thermal grid built at the grid-matched self-consistent magnetization
/// reproduces that magnetization through the measurement quadrature.
#[test]
fn selfconsistent_grid_magnetization_closes() {
    use hmf_core::stability::{
        build_initial_condition, solve_selfconsistent_m_on_grid, StationarySpec,
    };
    let gspec = GridSpec::new(256, 256, 3.0);
    let spec = StationarySpec::thermal_inhomogeneous(0.4);
    let m_grid = solve_selfconsistent_m_on_grid(&spec, gspec).unwrap();
    let grid = build_initial_condition(&spec, m_grid, gspec).unwrap();
    let (m_measured, _) = magnetization(&grid);
    assert!(
        (m_measured - m_grid).abs() < 1e-9,
        "{m_measured} vs {m_grid}"
    );
    // The p-truncation cancels in the thermal self-consistency ratio, so the
    // grid value also matches the continuum Bessel fixed point tightly.
    assert!((m_measured - 0.589707987782744).abs() < 1e-6);
}
