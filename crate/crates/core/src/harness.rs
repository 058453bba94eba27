//! Runs configured cases and lays out their output directories.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use crate::cases::euler::Setup;
use crate::cases::ode::{nonlinear_convection, LinearExchange, NonlinearChain};
use crate::config::CaseConfig;
use crate::integrators::{integrate, Convection, Trajectory};
use crate::limiter::PointBounds;
use crate::output::{write_convergence, write_snapshot, write_sweep, write_trajectory, Checkpoint, RunLog};
use crate::solver::Solver;
use crate::study::{self, ConvergenceTable, SweepRow};
use crate::{Error, Result};

/// `root/<case>/<timestamp>`, created with its `snapshots` directory.
pub fn output_dir(root: &Path, case: &str) -> Result<PathBuf> {
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S%.3f").to_string();
    let dir = root.join(case).join(stamp);
    fs::create_dir_all(dir.join("snapshots"))?;
    Ok(dir)
}

fn write_config(cfg: &CaseConfig, dir: &Path) -> Result<()> {
    fs::write(dir.join("config.json"), cfg.to_json()?)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub case: &'static str,
    pub steps: usize,
    pub time: f64,
    pub snapshots: usize,
    pub restarts: usize,
    /// Extremes over every step; absent for ODE runs.
    pub bounds: Option<PointBounds>,
    pub max_fraction_defect: f64,
    /// Smallest component along an ODE trajectory.
    pub min_component: Option<f64>,
}

impl CaseConfig {
    /// The flow problem of a PDE case; `None` for the ODE cases.
    pub fn flow_setup(&self) -> Option<Result<Setup>> {
        match self {
            CaseConfig::ShockTube(c) => Some(c.build()),
            CaseConfig::Blast(c) => Some(c.build()),
            CaseConfig::Diffraction(c) => Some(c.build()),
            CaseConfig::OdeLinear(_) | CaseConfig::OdeNonlinear(_) => None,
        }
    }
}

/// Runs `cfg` and writes `config.json`, `log.csv`, `snapshots/` and, for
/// flow cases, `final.chk` into `dir`. Aborts propagate after the log is
/// flushed.
pub fn run_case(cfg: &CaseConfig, dir: &Path) -> Result<RunSummary> {
    fs::create_dir_all(dir.join("snapshots"))?;
    write_config(cfg, dir)?;
    match cfg.flow_setup() {
        Some(setup) => run_flow(cfg.id(), setup?, dir),
        None => run_ode(cfg, dir),
    }
}

fn run_ode(cfg: &CaseConfig, dir: &Path) -> Result<RunSummary> {
    let traj: Trajectory = match cfg {
        CaseConfig::OdeLinear(c) => {
            integrate(&LinearExchange { a: c.a }, c.integrator, &c.c0, 0.0, c.t_final, c.dt, None, 1)?
        }
        CaseConfig::OdeNonlinear(c) => {
            let conv = nonlinear_convection as fn(&[f64]) -> Vec<f64>;
            let conv = c.convection.then_some(&conv as &dyn Convection);
            integrate(&NonlinearChain { a: c.a }, c.integrator, &c.c0, 0.0, c.t_final, c.dt, conv, 1)?
        }
        _ => unreachable!("flow cases are dispatched to run_flow"),
    };
    write_trajectory(&dir.join("snapshots").join("trajectory.csv"), &traj.times, &traj.states)?;
    let min_component = traj.states.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    if !(min_component > 0.0) {
        return Err(Error::admissibility(format!("component {min_component:e} on the trajectory")));
    }
    Ok(RunSummary {
        case: cfg.id(),
        steps: traj.states.len() - 1,
        time: traj.times.last().copied().unwrap_or(0.0),
        snapshots: 1,
        restarts: 0,
        bounds: None,
        max_fraction_defect: 0.0,
        min_component: Some(min_component),
    })
}

struct Snapshots {
    dir: PathBuf,
    index: Vec<String>,
}

impl Snapshots {
    fn write(&mut self, solver: &Solver) -> Result<()> {
        let name = format!("snap_{:04}.csv", self.index.len());
        write_snapshot(&self.dir.join(&name), &solver.problem, solver.field())?;
        self.index.push(format!("{name},{},{}", solver.steps(), solver.time()));
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        fs::write(self.dir.join("index.csv"), format!("file,step,t\n{}\n", self.index.join("\n")))?;
        Ok(())
    }
}

fn run_flow(case: &'static str, setup: Setup, dir: &Path) -> Result<RunSummary> {
    let Setup { problem, initial, scheme, t_final, snapshot_interval } = setup;
    let mut solver = Solver::new(problem, scheme, initial)?;
    let mut snaps = Snapshots { dir: dir.join("snapshots"), index: Vec::new() };
    snaps.write(&solver)?;
    let mut log = RunLog::create(&dir.join("log.csv"))?;
    let mut next = snapshot_interval;
    let mut bounds: Option<PointBounds> = None;
    let (mut defect, mut restarts) = (0.0_f64, 0);
    let result = solver.run(t_final, |s, rec| {
        log.record(rec)?;
        bounds = Some(bounds.map_or(rec.bounds, |b| b.merge(rec.bounds)));
        defect = defect.max(rec.fraction_defect);
        restarts += usize::from(rec.restarted);
        if rec.step % 100 == 0 {
            info!("step {} t = {:.6e} dt = {:.3e}", rec.step, rec.time, rec.dt);
        }
        if snapshot_interval > 0.0 && s.time() >= next * (1.0 - 1e-12) && s.time() < t_final {
            snaps.write(s)?;
            while next <= s.time() * (1.0 + 1e-12) {
                next += snapshot_interval;
            }
        }
        Ok(())
    });
    log.flush()?;
    if let Err(e) = result {
        snaps.finish()?;
        return Err(e);
    }
    if solver.steps() > 0 {
        snaps.write(&solver)?;
        Checkpoint::new(&solver.problem.space, solver.time(), solver.field()).write(&dir.join("final.chk"))?;
    }
    snaps.finish()?;
    Ok(RunSummary {
        case,
        steps: solver.steps(),
        time: solver.time(),
        snapshots: snaps.index.len(),
        restarts,
        bounds,
        max_fraction_defect: defect,
        min_component: None,
    })
}

/// Convergence tables of every scheme in the case's `schemes`, written to
/// `table.csv`. `ladder` replaces the configured step ladder.
pub fn study_case(cfg: &CaseConfig, ladder: Option<Vec<f64>>, dir: &Path) -> Result<Vec<ConvergenceTable>> {
    let tables = match cfg {
        CaseConfig::OdeLinear(c) => {
            let mut c = c.clone();
            if let Some(l) = ladder {
                c.ladder = l;
            }
            c.schemes.iter().map(|&k| study::linear_convergence(&c, k)).collect::<Result<Vec<_>>>()?
        }
        CaseConfig::OdeNonlinear(c) => {
            let mut c = c.clone();
            if let Some(l) = ladder {
                c.ladder = l;
            }
            let reference = study::nonlinear_reference(&c)?;
            c.schemes.iter().map(|&k| study::nonlinear_convergence(&c, k, &reference)).collect::<Result<Vec<_>>>()?
        }
        other => return Err(Error::Config(format!("`{}` has no convergence study; use an ODE case", other.id()))),
    };
    write_config(cfg, dir)?;
    write_convergence(&dir.join("table.csv"), &tables)?;
    Ok(tables)
}

/// Fixed-step σ-exponent sweep, written to `table.csv`.
pub fn sweep_case(cfg: &CaseConfig, values: Option<Vec<f64>>, dir: &Path) -> Result<Vec<SweepRow>> {
    let rows = match cfg {
        CaseConfig::OdeLinear(c) => {
            let mut c = c.clone();
            if let Some(v) = values {
                c.sweep_s = v;
            }
            study::linear_sigma_sweep(&c)?
        }
        CaseConfig::OdeNonlinear(c) => {
            let mut c = c.clone();
            if let Some(v) = values {
                c.sweep_s = v;
            }
            let reference = study::nonlinear_reference(&c)?;
            study::nonlinear_sigma_sweep(&c, &reference)?
        }
        other => return Err(Error::Config(format!("`{}` has no σ sweep; use an ODE case", other.id()))),
    };
    write_config(cfg, dir)?;
    write_sweep(&dir.join("table.csv"), &rows)?;
    Ok(rows)
}
