//! Job configuration: one TOML file per job, with a `job` discriminator and
//! the sections the job needs. Unused sections are allowed so a single file
//! can be shared across commands; semantic validation is field-level.

use anyhow::{anyhow, bail, Context};
use hmf_core::grid::GridSpec;
use hmf_core::stability::{StationaryKind, StationarySpec};
use hmf_core::vlasov::SimConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Stability,
    Simulate,
    Sweep,
    Check,
}

impl std::fmt::Display for JobKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            JobKind::Stability => "stability",
            JobKind::Simulate => "simulate",
            JobKind::Sweep => "sweep",
            JobKind::Check => "check",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Homogeneous (ε, δ) phase diagram at fixed T > T_c.
    HomogeneousPhaseDiagram,
    /// Inhomogeneous robustness lines at fixed T < T_c.
    InhomogeneousRobustness,
}

/// Sweep parameters; which of the optional fields matter depends on `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub kind: SweepKind,
    pub t: f64,
    pub mu: f64,
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    /// Instability threshold on M_f; defaults to μ/2.
    #[serde(default)]
    pub m_f_threshold: Option<f64>,
    /// ε of the varying-δ robustness line (default 0.05).
    #[serde(default)]
    pub line_eps: Option<f64>,
    /// δ of the varying-ε robustness line (default 0.5).
    #[serde(default)]
    pub line_delta: Option<f64>,
    /// Deviation multiple of μ that counts as instability (default 10).
    #[serde(default)]
    pub deviation_factor: Option<f64>,
}

/// Overrides for the check battery.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    /// Override the weighted-norm integrability exponent; values outside
    /// (1, 2) demonstrate the documented divergence.
    #[serde(default)]
    pub ua_b: Option<f64>,
}

/// Quadrature knobs shared by the stability evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSection {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_quad_p_max")]
    pub p_max: f64,
}

fn default_rel_tol() -> f64 {
    1e-11
}
fn default_quad_p_max() -> f64 {
    8.0
}

impl Default for QuadSection {
    fn default() -> Self {
        QuadSection {
            rel_tol: default_rel_tol(),
            p_max: default_quad_p_max(),
        }
    }
}

/// The whole job file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub job: JobKind,
    /// Output directory for CSV artifacts (CLI --out overrides).
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Worker threads; 0 picks the machine default. CLI --workers and the
    /// HMF_WORKERS environment variable override.
    #[serde(default)]
    pub workers: usize,
    /// Reserved: the toolkit is seedless, every job is deterministic for a
    /// fixed config and worker count.
    #[serde(default = "default_true")]
    pub deterministic: bool,
    #[serde(default)]
    pub state: Option<StationarySpec>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub time: Option<SimConfig>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub check: Option<CheckSection>,
    #[serde(default)]
    pub quadrature: Option<QuadSection>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Field-level validation of every downstream precondition.
    pub fn validate(&self) -> anyhow::Result<()> {
        if let Some(state) = &self.state {
            state.validate().map_err(|e| anyhow!("state: {e}"))?;
            if state.mu < 0.0 {
                bail!("state.mu: perturbation amplitude must be non-negative");
            }
        }
        if let Some(grid) = &self.grid {
            grid.validate().map_err(|e| anyhow!("grid: {e}"))?;
        }
        if let Some(time) = &self.time {
            time.validate().map_err(|e| anyhow!("time: {e}"))?;
        }
        if let Some(q) = &self.quadrature {
            if !(q.rel_tol > 0.0 && q.rel_tol < 1e-2) {
                bail!(
                    "quadrature.rel_tol: must lie in (0, 1e-2), got {}",
                    q.rel_tol
                );
            }
            if !(q.p_max > 0.0) {
                bail!("quadrature.p_max: must be positive, got {}", q.p_max);
            }
        }
        if let Some(sweep) = &self.sweep {
            if !(sweep.t > 0.0) {
                bail!("sweep.t: temperature must be positive, got {}", sweep.t);
            }
            if !(sweep.mu > 0.0) {
                bail!("sweep.mu: perturbation must be positive, got {}", sweep.mu);
            }
            if sweep.eps.is_empty() && sweep.delta.is_empty() {
                bail!("sweep.eps / sweep.delta: at least one list must be non-empty");
            }
            if sweep.eps.iter().any(|&e| e < 0.0) {
                bail!("sweep.eps: amplitudes must be non-negative");
            }
            match sweep.kind {
                SweepKind::HomogeneousPhaseDiagram => {
                    if sweep.t < 0.5 {
                        bail!(
                            "sweep.t: the homogeneous phase diagram needs T >= T_c = 0.5, got {}",
                            sweep.t
                        );
                    }
                }
                SweepKind::InhomogeneousRobustness => {
                    if sweep.t >= 0.5 {
                        bail!(
                            "sweep.t: robustness runs need a magnetized state, so T < 0.5, got {}",
                            sweep.t
                        );
                    }
                }
            }
        }
        if let Some(check) = &self.check {
            if let Some(b) = check.ua_b {
                if !(b > 0.0) {
                    bail!("check.ua_b: exponent must be positive, got {b}");
                }
            }
        }
        match self.job {
            JobKind::Stability => {
                self.state
                    .as_ref()
                    .ok_or_else(|| anyhow!("stability job needs a [state] section"))?;
            }
            JobKind::Simulate => {
                self.state
                    .as_ref()
                    .ok_or_else(|| anyhow!("simulate job needs a [state] section"))?;
                self.grid
                    .as_ref()
                    .ok_or_else(|| anyhow!("simulate job needs a [grid] section"))?;
                self.time
                    .as_ref()
                    .ok_or_else(|| anyhow!("simulate job needs a [time] section"))?;
            }
            JobKind::Sweep => {
                let sweep = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| anyhow!("sweep job needs a [sweep] section"))?;
                self.grid
                    .as_ref()
                    .ok_or_else(|| anyhow!("sweep job needs a [grid] section"))?;
                self.time
                    .as_ref()
                    .ok_or_else(|| anyhow!("sweep job needs a [time] section"))?;
                if sweep.kind == SweepKind::HomogeneousPhaseDiagram && sweep.delta.is_empty() {
                    bail!("sweep.delta: the phase diagram needs at least one delta");
                }
            }
            JobKind::Check => {}
        }
        Ok(())
    }

    /// Example thermal-stability job, used by docs and tests.
    pub fn example(job: JobKind) -> Self {
        let base = RunConfig {
            job,
            out_dir: default_out_dir(),
            workers: 0,
            deterministic: true,
            state: None,
            grid: None,
            time: None,
            sweep: None,
            check: None,
            quadrature: Some(QuadSection::default()),
        };
        match job {
            JobKind::Stability => RunConfig {
                state: Some(StationarySpec::thermal_homogeneous(0.6)),
                ..base
            },
            JobKind::Simulate => RunConfig {
                state: Some(StationarySpec::modified_thermal(0.6, 0.05, 1.4).with_mu(1e-4)),
                grid: Some(GridSpec::new(512, 512, 3.0)),
                time: Some(SimConfig::default()),
                ..base
            },
            JobKind::Sweep => RunConfig {
                grid: Some(GridSpec::new(512, 512, 3.0)),
                time: Some(SimConfig::default()),
                sweep: Some(SweepSection {
                    kind: SweepKind::HomogeneousPhaseDiagram,
                    t: 0.6,
                    mu: 1e-4,
                    eps: vec![0.005, 0.01, 0.02, 0.03, 0.04, 0.05],
                    delta: vec![1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8],
                    m_f_threshold: None,
                    line_eps: None,
                    line_delta: None,
                    deviation_factor: None,
                }),
                ..base
            },
            JobKind::Check => RunConfig {
                check: Some(CheckSection::default()),
                ..base
            },
        }
    }

    /// Stationary kind shorthand used in summaries.
    pub fn state_label(&self) -> String {
        match &self.state {
            Some(s) => match s.kind {
                StationaryKind::ThermalHomogeneous => format!("thermal (M=0), T={}", s.t),
                StationaryKind::ThermalInhomogeneous => format!("thermal (M>0), T={}", s.t),
                StationaryKind::ModifiedThermal => {
                    format!(
                        "modified thermal, T={}, eps={}, delta={}",
                        s.t, s.eps, s.delta
                    )
                }
                StationaryKind::HomogeneousWithBump => {
                    format!(
                        "thermal + momentum bump, T={}, eps={}, alpha={}",
                        s.t, s.eps, s.alpha
                    )
                }
            },
            None => "none".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_validate_and_roundtrip() {
        for job in [
            JobKind::Stability,
            JobKind::Simulate,
            JobKind::Sweep,
            JobKind::Check,
        ] {
            let cfg = RunConfig::example(job);
            cfg.validate().unwrap();
            let text = cfg.to_toml().unwrap();
            let back: RunConfig = toml::from_str(&text).unwrap();
            assert_eq!(cfg, back, "round trip changed the {job} config");
        }
    }

    #[test]
    fn rejects_field_level_violations() {
        let mut cfg = RunConfig::example(JobKind::Stability);
        cfg.state.as_mut().unwrap().t = -1.0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("state"), "{err}");

        let mut cfg = RunConfig::example(JobKind::Simulate);
        cfg.time.as_mut().unwrap().dt = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::example(JobKind::Simulate);
        cfg.grid = None;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("grid"), "{err}");

        let mut cfg = RunConfig::example(JobKind::Sweep);
        cfg.sweep.as_mut().unwrap().t = 0.4;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "job = \"check\"\nnot_a_key = 1\n";
        assert!(toml::from_str::<RunConfig>(text).is_err());
    }
}
