//! Convergence studies and parameter sweeps.

use rayon::prelude::*;
use serde::Serialize;

use crate::cases::euler::ContactWave;
use crate::cases::ode::{nonlinear_convection, LinearExchange, NonlinearChain};
use crate::config::{LinearOde, NonlinearOde};
use crate::dg::DgField;
use crate::integrators::{integrate, mpms2_sigma, mpms3_sigma, Convection, IntegratorKind, Trajectory};
use crate::pds::ProductionDestruction;
use crate::solver::Solver;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    /// Step size or mesh width.
    pub step: f64,
    pub error: f64,
    /// `log(e_prev/e) / log(h_prev/h)`; absent on the first row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub label: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn from_errors(label: impl Into<String>, steps: &[f64], errors: &[f64]) -> Self {
        let rows = steps
            .iter()
            .zip(errors)
            .enumerate()
            .map(|(i, (&step, &error))| ConvergenceRow {
                step,
                error,
                order: (i > 0).then(|| (errors[i - 1] / error).ln() / (steps[i - 1] / step).ln()),
            })
            .collect();
        ConvergenceTable { label: label.into(), rows }
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    /// Errors decrease strictly down the ladder.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn run_ode<S: ProductionDestruction + Sync>(
    sys: &S,
    kind: IntegratorKind,
    c0: &[f64],
    t_final: f64,
    dt: f64,
    conv: Option<&dyn Convection>,
) -> Result<Trajectory> {
    integrate(sys, kind, c0, 0.0, t_final, dt, conv, usize::MAX)
}

/// Final-time max-norm errors against the closed-form solution.
pub fn linear_convergence(cfg: &LinearOde, kind: IntegratorKind) -> Result<ConvergenceTable> {
    let sys = LinearExchange { a: cfg.a };
    let exact = sys.exact(cfg.c0, cfg.t_final);
    let errors = cfg
        .ladder
        .par_iter()
        .map(|&dt| Ok(max_abs_diff(run_ode(&sys, kind, &cfg.c0, cfg.t_final, dt, None)?.last(), &exact)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ConvergenceTable::from_errors(kind.label(), &cfg.ladder, &errors))
}

fn nonlinear_parts(cfg: &NonlinearOde) -> (NonlinearChain, Option<fn(&[f64]) -> Vec<f64>>) {
    let conv: Option<fn(&[f64]) -> Vec<f64>> = if cfg.convection { Some(nonlinear_convection) } else { None };
    (NonlinearChain { a: cfg.a }, conv)
}

/// Fine-step MPRK3 solution at `t_final`.
pub fn nonlinear_reference(cfg: &NonlinearOde) -> Result<Vec<f64>> {
    let finest = cfg.ladder.iter().copied().fold(f64::INFINITY, f64::min);
    if !finest.is_finite() || !(cfg.reference_refinement >= 1.0) {
        return Err(Error::Config("reference needs a non-empty ladder and refinement ≥ 1".into()));
    }
    let (sys, conv) = nonlinear_parts(cfg);
    let conv = conv.as_ref().map(|f| f as &dyn Convection);
    Ok(run_ode(&sys, IntegratorKind::Mprk3, &cfg.c0, cfg.t_final, finest / cfg.reference_refinement, conv)?.last().to_vec())
}

/// Final-time max-norm errors against `reference`.
pub fn nonlinear_convergence(cfg: &NonlinearOde, kind: IntegratorKind, reference: &[f64]) -> Result<ConvergenceTable> {
    let (sys, conv) = nonlinear_parts(cfg);
    let errors = cfg
        .ladder
        .par_iter()
        .map(|&dt| {
            let conv = conv.as_ref().map(|f| f as &dyn Convection);
            Ok(max_abs_diff(run_ode(&sys, kind, &cfg.c0, cfg.t_final, dt, conv)?.last(), reference))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ConvergenceTable::from_errors(kind.label(), &cfg.ladder, &errors))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scheme: &'static str,
    pub s: f64,
    pub error: f64,
    /// Smallest component seen along the trajectory.
    pub min_component: f64,
    /// `max |Σc − Σc⁰| / Σc⁰` along the trajectory.
    pub conservation_defect: f64,
}

fn with_s(kind: IntegratorKind, s: f64) -> Result<IntegratorKind> {
    match kind {
        IntegratorKind::Mpms2 { .. } => Ok(IntegratorKind::Mpms2 { s }),
        IntegratorKind::Mpms3 { .. } => Ok(IntegratorKind::Mpms3 { s }),
        other => Err(Error::Config(format!("{} has no σ exponent to sweep", other.name()))),
    }
}

fn sweep_row(kind: IntegratorKind, s: f64, traj: &Trajectory, target: &[f64], conserved: bool) -> SweepRow {
    let total0: f64 = traj.states[0].iter().sum();
    let mut min_component = f64::INFINITY;
    let mut defect: f64 = 0.0;
    for state in &traj.states {
        min_component = state.iter().copied().fold(min_component, f64::min);
        if conserved {
            defect = defect.max((state.iter().sum::<f64>() - total0).abs() / total0);
        }
    }
    SweepRow { scheme: kind.name(), s, error: max_abs_diff(traj.last(), target), min_component, conservation_defect: defect }
}

/// Fixed-step errors of every multistep scheme in `cfg.schemes` over `cfg.sweep_s`.
pub fn linear_sigma_sweep(cfg: &LinearOde) -> Result<Vec<SweepRow>> {
    let sys = LinearExchange { a: cfg.a };
    let exact = sys.exact(cfg.c0, cfg.t_final);
    let jobs = sweep_jobs(&cfg.schemes, &cfg.sweep_s)?;
    jobs.par_iter()
        .map(|&(kind, s)| {
            let traj = integrate(&sys, kind, &cfg.c0, 0.0, cfg.t_final, cfg.dt, None, 1)?;
            Ok(sweep_row(kind, s, &traj, &exact, true))
        })
        .collect()
}

/// As [`linear_sigma_sweep`], against the fine-step reference. With
/// convection the sum is not conserved and the defect column stays zero.
pub fn nonlinear_sigma_sweep(cfg: &NonlinearOde, reference: &[f64]) -> Result<Vec<SweepRow>> {
    let (sys, conv) = nonlinear_parts(cfg);
    let jobs = sweep_jobs(&cfg.schemes, &cfg.sweep_s)?;
    jobs.par_iter()
        .map(|&(kind, s)| {
            let conv_ref = conv.as_ref().map(|f| f as &dyn Convection);
            let traj = integrate(&sys, kind, &cfg.c0, 0.0, cfg.t_final, cfg.dt, conv_ref, 1)?;
            Ok(sweep_row(kind, s, &traj, reference, conv.is_none()))
        })
        .collect()
}

fn sweep_jobs(schemes: &[IntegratorKind], values: &[f64]) -> Result<Vec<(IntegratorKind, f64)>> {
    let mut jobs = Vec::new();
    for &kind in schemes {
        for &s in values {
            jobs.push((with_s(kind, s)?, s));
        }
    }
    Ok(jobs)
}

/// `max_i |σ_i − c_i(t_{n+1})|` with the history taken from the exact
/// solution, so the error is that of the σ formula alone. `t_next` is the
/// time of the new level.
pub fn sigma_consistency(cfg: &LinearOde, kind: IntegratorKind, t_next: f64) -> Result<ConvergenceTable> {
    let sys = LinearExchange { a: cfg.a };
    let exact = |t: f64| sys.exact(cfg.c0, t).to_vec();
    let errors = cfg
        .ladder
        .iter()
        .map(|&dt| {
            let h = |k: f64| exact(t_next - k * dt);
            let sigma = match kind {
                IntegratorKind::Mpms2 { s } => mpms2_sigma(&h(1.0), &h(2.0), &h(3.0), s)?,
                IntegratorKind::Mpms3 { s } => mpms3_sigma(&h(1.0), &h(2.0), &h(3.0), &h(4.0), s)?,
                other => return Err(Error::Config(format!("{} has no multistep σ", other.name()))),
            };
            Ok(max_abs_diff(&sigma, &exact(t_next)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ConvergenceTable::from_errors(format!("sigma {}", kind.label()), &cfg.ladder, &errors))
}

/// L2 density error of a DG field against `exact`, with a 6-point Gauss
/// rule per cell direction.
pub fn density_l2_error(solver: &Solver, exact: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
    let space = &solver.problem.space;
    let field: &DgField = solver.field();
    let rule = crate::dg::gauss(6);
    let basis = &space.basis;
    let n = basis.nodes();
    let nv = field.vars;
    let vals: Vec<Vec<f64>> = rule.points.iter().map(|&x| basis.eval(x)).collect();
    let mesh = &space.mesh;
    let sum: f64 = mesh
        .fluid_cells()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&c| {
            let (x0, y0) = mesh.origin(c);
            let cell = field.cell(c);
            let mut acc = 0.0;
            if mesh.dim == 1 {
                for (a, &wa) in rule.weights.iter().enumerate() {
                    let uh: f64 = (0..n).map(|l| vals[a][l] * cell[l * nv]).sum();
                    let e = uh - exact(x0 + rule.points[a] * mesh.dx, 0.0);
                    acc += wa * e * e;
                }
            } else {
                for (a, &wa) in rule.weights.iter().enumerate() {
                    for (b, &wb) in rule.weights.iter().enumerate() {
                        let mut uh = 0.0;
                        for j in 0..n {
                            for i in 0..n {
                                uh += vals[a][i] * vals[b][j] * cell[(j * n + i) * nv];
                            }
                        }
                        let e = uh - exact(x0 + rule.points[a] * mesh.dx, y0 + rule.points[b] * mesh.dy);
                        acc += wa * wb * e * e;
                    }
                }
            }
            acc * mesh.cell_measure()
        })
        .sum();
    sum.sqrt()
}

/// DG order study on the contact wave over a mesh ladder. The time
/// integrator comes from `wave.scheme`; it should be of order `k + 1`.
pub fn advection_convergence(wave: &ContactWave, cells: &[usize]) -> Result<ConvergenceTable> {
    let errors = cells
        .par_iter()
        .map(|&n| {
            let case = ContactWave { cells: n, ..wave.clone() };
            let setup = case.build()?;
            let t_final = setup.t_final;
            let mut solver = Solver::new(setup.problem, setup.scheme, setup.initial)?;
            solver.run(t_final, |_, _| Ok(()))?;
            Ok(density_l2_error(&solver, |x, y| case.density(x, y, t_final)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let steps: Vec<f64> = cells.iter().map(|&n| 1.0 / n as f64).collect();
    Ok(ConvergenceTable::from_errors(format!("dg k={} {}", wave.degree, wave.scheme.integrator.label()), &steps, &errors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_a_power_law() {
        let steps = [0.1, 0.05, 0.025];
        let errors: Vec<f64> = steps.iter().map(|h: &f64| 3.0 * h.powi(2)).collect();
        let t = ConvergenceTable::from_errors("p", &steps, &errors);
        assert!(t.orders().iter().all(|p| (p - 2.0).abs() < 1e-12));
        assert!(t.is_monotone());
        assert!(t.rows[0].order.is_none());
    }

    #[test]
    fn exact_solution_has_zero_self_error() {
        let cfg = LinearOde::default();
        let sys = LinearExchange { a: cfg.a };
        let e = sys.exact(cfg.c0, cfg.t_final);
        assert_eq!(max_abs_diff(&e, &e), 0.0);
    }

    #[test]
    fn single_value_sweep() {
        let cfg = LinearOde { schemes: vec![IntegratorKind::Mpms2 { s: 0.0 }], sweep_s: vec![1.0], ..Default::default() };
        let rows = linear_sigma_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].error.is_finite() && rows[0].min_component > 0.0);
    }
}
