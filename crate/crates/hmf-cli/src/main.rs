//! `hmf` — stability evaluations, Vlasov simulations, parameter sweeps and
//! the invariant check battery, driven by TOML job files.
//!
//! Exit codes: 0 success, 1 config error, 2 conservation abort, 3 check
//! failure.

mod check;
mod config;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use config::{JobKind, RunConfig, SweepKind};
use hmf_core::grid::GridSpec;
use hmf_core::neighborhood::{self, HomogeneousProtocol, InhomogeneousProtocol, SweepResult};
use hmf_core::quad::QuadSpec;
use hmf_core::stability::{
    build_initial_condition, solve_selfconsistent_m_on_grid, PhaseQuad, StationaryState,
};
use hmf_core::vlasov;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hmf",
    version,
    about = "Kinetic stability toolkit for the Hamiltonian mean-field model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; overrides the config and HMF_WORKERS.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Grid override, e.g. 256x256.
    #[arg(long, global = true)]
    resolution: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the stability functional I[f] for a stationary state.
    Stability {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrate the Vlasov equation; writes timeseries.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a phase-diagram or robustness sweep; writes sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the invariant battery; prints pass/fail per item.
    Check {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print an example config for a job kind.
    ExampleConfig {
        /// stability | simulate | sweep | check
        job: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match &cli.command {
        Command::ExampleConfig { job } => {
            let kind = match job.as_str() {
                "stability" => JobKind::Stability,
                "simulate" => JobKind::Simulate,
                "sweep" => JobKind::Sweep,
                "check" => JobKind::Check,
                other => return Err(anyhow!("unknown job kind {other}")),
            };
            print!("{}", RunConfig::example(kind).to_toml()?);
            return Ok(ExitCode::SUCCESS);
        }
        _ => {}
    }

    let (path, expected) = match &cli.command {
        Command::Stability { config } => (Some(config.clone()), JobKind::Stability),
        Command::Simulate { config } => (Some(config.clone()), JobKind::Simulate),
        Command::Sweep { config } => (Some(config.clone()), JobKind::Sweep),
        Command::Check { config } => (config.clone(), JobKind::Check),
        Command::ExampleConfig { .. } => unreachable!(),
    };

    let mut cfg = match path {
        Some(p) => RunConfig::load(&p)?,
        None => RunConfig::example(JobKind::Check),
    };
    if cfg.job != expected {
        return Err(anyhow!(
            "config declares job = \"{}\" but the {} command was invoked",
            cfg.job,
            expected
        ));
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(res) = &cli.resolution {
        let grid = parse_resolution(res, cfg.grid.map(|g| g.p_max).unwrap_or(3.0))?;
        cfg.grid = Some(grid);
        cfg.validate()?;
    }

    let workers = cli
        .workers
        .or_else(|| {
            std::env::var("HMF_WORKERS")
                .ok()
                .and_then(|v| v.parse::<usize>().ok())
        })
        .unwrap_or(cfg.workers);
    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("cannot configure worker pool")?;
    }

    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create output directory {}", cfg.out_dir.display()))?;

    match cfg.job {
        JobKind::Stability => cmd_stability(&cfg),
        JobKind::Simulate => cmd_simulate(&cfg),
        JobKind::Sweep => cmd_sweep(&cfg),
        JobKind::Check => cmd_check(&cfg),
    }
}

fn parse_resolution(text: &str, p_max: f64) -> anyhow::Result<GridSpec> {
    let (nq, np) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| anyhow!("--resolution expects NQxNP, got {text}"))?;
    Ok(GridSpec::new(
        nq.trim().parse().context("bad nq in --resolution")?,
        np.trim().parse().context("bad np in --resolution")?,
        p_max,
    ))
}

fn phase_quad(cfg: &RunConfig) -> PhaseQuad {
    let q = cfg.quadrature.clone().unwrap_or_default();
    PhaseQuad {
        p_max: q.p_max,
        quad: QuadSpec::with_rel_tol(q.rel_tol),
        ..PhaseQuad::default()
    }
}

fn cmd_stability(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let state_spec = cfg.state.expect("validated");
    let pq = phase_quad(cfg);
    let state = StationaryState::build(state_spec, &pq)?;
    let report = state.stability(&pq)?;

    println!("state:          {}", cfg.state_label());
    println!("magnetization:  {:.12}", state.m);
    println!("I[f]          = {:.12}", report.i);
    println!("  term_unity    {:.12}", report.term_unity);
    println!("  term_integral {:+.12}", report.term_integral);
    println!("verdict:        {}", report.verdict);

    let path = cfg.out_dir.join("stability.csv");
    let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(out, "I,term_unity,term_integral,verdict,M_used")?;
    writeln!(
        out,
        "{:.15e},{:.15e},{:.15e},{},{:.15e}",
        report.i, report.term_unity, report.term_integral, report.verdict, report.m_used
    )?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let state = cfg.state.expect("validated");
    let grid_spec = cfg.grid.expect("validated");
    let time = cfg.time.clone().expect("validated");

    let m = solve_selfconsistent_m_on_grid(&state, grid_spec)?;
    let initial = build_initial_condition(&state, m, grid_spec)?;
    println!(
        "state: {} | grid {}x{} p_max {} | dt {} t_end {} | M_0 = {m:.9}",
        cfg.state_label(),
        grid_spec.nq,
        grid_spec.np,
        grid_spec.p_max,
        time.dt,
        time.t_end
    );

    match vlasov::run(&initial, &time) {
        Ok((series, _)) => {
            let path = cfg.out_dir.join("timeseries.csv");
            series.write_csv(&path)?;
            println!(
                "M_f = {:.6e} after {} samples; wrote {}",
                series.m_final(),
                series.len(),
                path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(hmf_core::Error::ConservationAbort(msg)) => {
            eprintln!("conservation abort: {msg}");
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_sweep(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let sweep = cfg.sweep.clone().expect("validated");
    let grid = cfg.grid.expect("validated");
    let sim = cfg.time.clone().expect("validated");

    let results: Vec<SweepResult> = match sweep.kind {
        SweepKind::HomogeneousPhaseDiagram => {
            let proto = HomogeneousProtocol {
                t: sweep.t,
                mu: sweep.mu,
                grid,
                sim,
                m_f_threshold: sweep.m_f_threshold.unwrap_or(sweep.mu / 2.0),
            };
            neighborhood::scan_phase_diagram(&sweep.eps, &sweep.delta, &proto)
        }
        SweepKind::InhomogeneousRobustness => {
            let proto = InhomogeneousProtocol {
                t: sweep.t,
                mu: sweep.mu,
                grid,
                sim,
                line_eps: sweep.line_eps.unwrap_or(0.05),
                line_delta: sweep.line_delta.unwrap_or(0.5),
                deviation_factor: sweep.deviation_factor.unwrap_or(10.0),
            };
            let pq = phase_quad(cfg);
            neighborhood::inhomogeneous_robustness(&sweep.eps, &sweep.delta, &proto)
                .iter()
                .map(|run| {
                    let i_theory = StationaryState::build(
                        hmf_core::stability::StationarySpec::modified_thermal(
                            proto.t, run.eps, run.delta,
                        ),
                        &pq,
                    )
                    .and_then(|s| s.stability(&pq))
                    .map(|r| r.i)
                    .unwrap_or(f64::NAN);
                    run.to_sweep_result(i_theory)
                })
                .collect()
        }
    };

    for r in &results {
        println!(
            "eps={:<8} delta={:<6} M_f={:.4e}  {}  (I_theory = {:+.4e})",
            r.eps,
            r.delta,
            r.m_f,
            r.verdict_label(),
            r.i_theory
        );
    }
    let path = cfg.out_dir.join("sweep.csv");
    neighborhood::write_sweep_csv(&results, &path)?;
    println!("wrote {}", path.display());

    let failed = results.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} cell(s) failed; see sweep.csv");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let ua_b = cfg.check.as_ref().and_then(|c| c.ua_b);
    let items = check::run_battery(&cfg.out_dir, ua_b);
    let failed = items
        .iter()
        .filter(|i| i.status == check::Status::Fail)
        .count();
    if failed > 0 {
        eprintln!("{failed} check(s) failed");
        return Ok(ExitCode::from(3));
    }
    println!("all {} checks passed", items.len());
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_parser() {
        let g = parse_resolution("256x512", 3.0).unwrap();
        assert_eq!((g.nq, g.np), (256, 512));
        assert!(parse_resolution("256", 3.0).is_err());
    }
}
