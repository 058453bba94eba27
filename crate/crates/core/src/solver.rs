//! Time marching of the reactive Euler equations.
//!
//! Each stage is: explicit convex combination plus convection, limiting on
//! the Gauss nodes, a pointwise Patankar solve for the species, and limiting
//! on the full point set.

use std::collections::VecDeque;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chemistry::{Eos, Mechanism, SPECIES_ROUNDOFF};
use crate::dg::{convection_residual, Boundaries, DgField, DgSpace, PointSet};
use crate::integrators::{mp_stage_solve, mpms2_exponents, mpms3_exponents, IntegratorKind, Mprk2Params, StageWeights};
use crate::limiter::{check_field, limit_field, LimiterReport, PointBounds, DEFAULT_EPSILON};
use crate::pds::{ContextualRates, RateMatrix};
use crate::state::Layout;
use crate::{Error, Result};

/// Everything that defines the spatial problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub space: DgSpace,
    pub eos: Eos,
    pub mechanism: Mechanism,
    pub bc: Boundaries,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        self.eos.validate()?;
        let m = self.space.layout.species;
        if self.eos.species_count() != m || self.mechanism.species_count() != m {
            return Err(Error::Config(format!(
                "layout has {m} species, EOS {} and mechanism {}",
                self.eos.species_count(),
                self.mechanism.species_count()
            )));
        }
        self.bc.validate(&self.space.layout)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeConfig {
    pub integrator: IntegratorKind,
    pub cfl_safety: f64,
    pub epsilon: f64,
    /// Switching this off is only meant for negative-control experiments.
    pub limiter: bool,
    pub max_steps: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            integrator: IntegratorKind::Mprk2 { alpha: Mprk2Params::SSP.alpha, beta: Mprk2Params::SSP.beta },
            cfl_safety: 0.9,
            epsilon: DEFAULT_EPSILON,
            limiter: true,
            max_steps: 10_000_000,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        match self.integrator {
            IntegratorKind::Mpe | IntegratorKind::Mprk2 { .. } | IntegratorKind::Mpms2 { .. } | IntegratorKind::Mpms3 { .. } => {}
            other => {
                return Err(Error::Config(format!("{} is not available for flow problems", other.name())));
            }
        }
        if !(self.integrator.ssp_fraction() > 0.0) {
            return Err(Error::Config(format!(
                "{} has no positive SSP step fraction; choose α > 0",
                self.integrator.name()
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!("CFL safety must lie in (0, 1], got {}", self.cfl_safety)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("limiter floor must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// One stored time level: the state with its convection residual and
/// per-node production matrices.
#[derive(Debug, Clone)]
pub struct Level {
    pub field: DgField,
    pub convection: DgField,
    pub rates: Option<Vec<RateMatrix>>,
    pub alpha: f64,
}

/// Diagnostics of one completed step.
#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub alpha: f64,
    pub scheme: &'static str,
    pub restarted: bool,
    /// Extremes over every limiter point of the new state.
    #[serde(flatten)]
    pub bounds: PointBounds,
    /// `max |Σcᵢ − ρ| / ρ` over nodes, including the explicit combinations
    /// before the density is reset to the species sum.
    pub fraction_defect: f64,
    pub gauss_cells_limited: usize,
    pub point_cells_limited: usize,
    pub min_theta: f64,
}

#[derive(Debug, Default)]
struct StageStats {
    gauss: usize,
    points: usize,
    min_theta: f64,
    defect: f64,
}

impl StageStats {
    fn absorb(&mut self, first: &LimiterReport, second: &LimiterReport) {
        self.gauss += first.touched();
        self.points += second.touched();
        self.min_theta = self.min_theta.min(first.min_theta()).min(second.min_theta());
    }
}

/// Tolerance on the fraction identity `Σcᵢ = ρ` at every node.
pub const FRACTION_TOLERANCE: f64 = 1e-11;

pub struct Solver {
    pub problem: Problem,
    pub config: SchemeConfig,
    history: VecDeque<Level>,
    time: f64,
    step: usize,
    multistep_dt: Option<f64>,
}

impl Solver {
    /// The initial field is limited on the full point set before use.
    pub fn new(problem: Problem, config: SchemeConfig, mut initial: DgField) -> Result<Self> {
        problem.validate()?;
        config.validate()?;
        if initial.cells != problem.space.mesh.cells() || initial.vars != problem.space.layout.len() {
            return Err(Error::Config("initial field does not match the discretization".into()));
        }
        if config.limiter {
            limit_field(&problem.space, &problem.eos, &mut initial, PointSet::All, config.epsilon)
                .map_err(|e| e.at("initial data"))?;
        }
        let mut solver = Solver { problem, config, history: VecDeque::new(), time: 0.0, step: 0, multistep_dt: None };
        let level = solver.evaluate(initial).map_err(|e| e.at("initial data"))?;
        solver.history.push_front(level);
        Ok(solver)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    pub fn field(&self) -> &DgField {
        &self.history[0].field
    }

    pub fn alpha(&self) -> f64 {
        self.history[0].alpha
    }

    fn evaluate(&self, field: DgField) -> Result<Level> {
        let p = &self.problem;
        let res = convection_residual(&p.space, &p.eos, &p.bc, &field)?;
        let rates = if p.mechanism.is_inert() { None } else { Some(node_rates(p, &field)?) };
        Ok(Level { field, convection: res.increments, rates, alpha: res.alpha })
    }

    fn cfl(&self, alpha: f64) -> Result<f64> {
        self.problem.space.cfl_dt(alpha, 1.0)
    }

    /// Advances one step without passing `t_end`.
    pub fn advance(&mut self, t_end: f64) -> Result<StepRecord> {
        let (t, n) = (self.time, self.step);
        self.advance_inner(t_end).map_err(|e| e.at(format!("step {}, t = {t:e}", n + 1)))
    }

    fn advance_inner(&mut self, t_end: f64) -> Result<StepRecord> {
        let kind = self.config.integrator;
        let safety = self.config.cfl_safety;
        let alpha = self.alpha();
        let limit = self.cfl(alpha)?;
        let remaining = t_end - self.time;
        if !(remaining > 0.0) {
            return Err(Error::Precondition(format!("already at t = {}", self.time)));
        }
        let mult = kind.history_depth() > 1;
        let mut restarted = false;
        let mut dt = safety * kind.ssp_fraction() * limit;
        if mult {
            match self.multistep_dt {
                Some(h) if h <= kind.ssp_fraction() * limit => dt = h,
                Some(_) => {
                    // the stencil needs uniform steps: restart from the newest level
                    self.history.truncate(1);
                    restarted = true;
                    self.multistep_dt = Some(dt);
                    info!("wave speed grew to {alpha:.4e}; multistep history restarted with Δt = {dt:.4e}");
                }
                None => self.multistep_dt = Some(dt),
            }
        }
        let mut shortened = false;
        if dt >= remaining * (1.0 - 1e-12) {
            shortened = dt > remaining;
            dt = remaining;
        }

        let mut stats = StageStats { min_theta: 1.0, ..Default::default() };
        let use_multistep = mult && !shortened && self.history.len() >= kind.history_depth();
        let (field, scheme) = match kind {
            IntegratorKind::Mpe => (self.mpe(dt, &mut stats)?, "mpe"),
            IntegratorKind::Mprk2 { alpha, beta } => (self.mprk2(Mprk2Params { alpha, beta }, dt, &mut stats)?, "mprk2"),
            IntegratorKind::Mpms2 { s } if use_multistep => (self.mpms2(s, dt, &mut stats)?, "mpms2"),
            IntegratorKind::Mpms3 { s } if use_multistep => (self.mpms3(s, dt, &mut stats)?, "mpms3"),
            _ => (self.mprk2(Mprk2Params::SSP, dt, &mut stats)?, "mprk2-starter"),
        };
        let (bounds, fraction_defect) = self.monitor(&field, stats.defect)?;
        let level = self.evaluate(field)?;
        let new_alpha = level.alpha;
        self.history.push_front(level);
        self.history.truncate(kind.history_depth());
        if shortened {
            // a shortened step breaks the uniform stencil
            self.history.truncate(1);
        }
        self.time = if shortened || dt == remaining { t_end } else { self.time + dt };
        self.step += 1;
        debug!("step {} t={:.6e} dt={dt:.3e} α={new_alpha:.4e} {scheme}", self.step, self.time);
        Ok(StepRecord {
            step: self.step,
            time: self.time,
            dt,
            alpha: new_alpha,
            scheme,
            restarted,
            bounds,
            fraction_defect,
            gauss_cells_limited: stats.gauss,
            point_cells_limited: stats.points,
            min_theta: stats.min_theta,
        })
    }

    /// Marches to `t_end`, calling `observe` after every step.
    pub fn run(&mut self, t_end: f64, mut observe: impl FnMut(&Solver, &StepRecord) -> Result<()>) -> Result<()> {
        while self.time < t_end {
            if self.step >= self.config.max_steps {
                return Err(Error::Config(format!("step limit {} reached at t = {}", self.config.max_steps, self.time)));
            }
            let rec = self.advance(t_end)?;
            observe(self, &rec)?;
        }
        Ok(())
    }

    /// Bounds of the new state: admissible on every point, fraction sum.
    /// `carried` is the fraction defect seen inside the stages.
    fn monitor(&self, field: &DgField, carried: f64) -> Result<(PointBounds, f64)> {
        let p = &self.problem;
        let bounds = check_field(&p.space, &p.eos, field, PointSet::All)?;
        let layout = p.space.layout;
        let mut defect = carried;
        for c in p.space.mesh.fluid_cells() {
            for q in 0..field.nodes {
                let u = field.node(c, q);
                let rho = u[Layout::DENSITY];
                let sum: f64 = layout.species(u).iter().sum();
                defect = defect.max((sum - rho).abs() / rho);
            }
        }
        if defect > FRACTION_TOLERANCE {
            return Err(Error::admissibility(format!("mass fractions sum to 1 ± {defect:e}")));
        }
        Ok((bounds, defect))
    }

    /// `Σ aₖ Uₖ + Δt Σ bₖ F(Uₖ)`.
    fn explicit(&self, states: &[(f64, &Level)], increments: &[(f64, &Level)], dt: f64, stats: &mut StageStats) -> DgField {
        let mut terms: Vec<(f64, &DgField)> = states.iter().map(|(a, l)| (*a, &l.field)).collect();
        terms.extend(increments.iter().filter(|(b, _)| *b != 0.0).map(|(b, l)| (dt * b, &l.convection)));
        let mut field = DgField::combination(&terms);
        stats.defect = stats.defect.max(sync_density(&self.problem, &mut field));
        field
    }

    /// Limit, Patankar source solve at the Gauss nodes, limit again.
    fn stage(
        &self,
        mut field: DgField,
        sources: &[(f64, &Level)],
        sigma: &[(f64, &DgField)],
        dt: f64,
        stats: &mut StageStats,
    ) -> Result<DgField> {
        let p = &self.problem;
        let eps = self.config.epsilon;
        let first = if self.config.limiter {
            limit_field(&p.space, &p.eos, &mut field, PointSet::Gauss, eps)?
        } else {
            LimiterReport::default()
        };
        if !p.mechanism.is_inert() {
            source_solve(p, &mut field, sources, sigma, dt)?;
        }
        let second = if self.config.limiter {
            limit_field(&p.space, &p.eos, &mut field, PointSet::All, eps)?
        } else {
            LimiterReport::default()
        };
        stats.absorb(&first, &second);
        stats.defect = stats.defect.max(sync_density(p, &mut field));
        Ok(field)
    }

    fn mpe(&self, dt: f64, stats: &mut StageStats) -> Result<DgField> {
        let l0 = &self.history[0];
        let b = self.explicit(&[(1.0, l0)], &[(1.0, l0)], dt, stats);
        self.stage(b, &[(1.0, l0)], &[(1.0, &l0.field)], dt, stats)
    }

    fn mprk2(&self, params: Mprk2Params, dt: f64, stats: &mut StageStats) -> Result<DgField> {
        let l0 = &self.history[0];
        let b1 = self.explicit(&[(1.0, l0)], &[(params.b10(), l0)], dt, stats);
        let u1 = self.stage(b1, &[(params.b10(), l0)], &[(1.0, &l0.field)], dt, stats)?;
        let l1 = self.evaluate(u1).map_err(|e| e.at("stage 1"))?;
        let b2 = self.explicit(&[(params.a20(), l0), (params.a21(), &l1)], &[(params.b20(), l0), (params.b21(), &l1)], dt, stats);
        let s = params.sigma_exponent();
        self.stage(b2, &[(params.b20(), l0), (params.b21(), &l1)], &[(s, &l1.field), (1.0 - s, &l0.field)], dt, stats)
    }

    fn mpms2(&self, s: f64, dt: f64, stats: &mut StageStats) -> Result<DgField> {
        let h = &self.history;
        let b = self.explicit(&[(0.25, &h[2]), (0.75, &h[0])], &[(1.5, &h[0])], dt, stats);
        let e = mpms2_exponents(s);
        let sigma: Vec<(f64, &DgField)> = (0..3).map(|k| (e[k], &h[k].field)).collect();
        self.stage(b, &[(1.5, &h[0])], &sigma, dt, stats)
    }

    fn mpms3(&self, s: f64, dt: f64, stats: &mut StageStats) -> Result<DgField> {
        let h = &self.history;
        let b = self.explicit(&[(11.0 / 27.0, &h[3]), (16.0 / 27.0, &h[0])], &[(4.0 / 9.0, &h[3]), (16.0 / 9.0, &h[0])], dt, stats);
        let e = mpms3_exponents(s);
        let sigma: Vec<(f64, &DgField)> = (0..4).map(|k| (e[k], &h[k].field)).collect();
        self.stage(b, &[(4.0 / 9.0, &h[3]), (16.0 / 9.0, &h[0])], &sigma, dt, stats)
    }
}

/// The density is carried alongside the partial densities but is, by
/// definition, their sum; resetting it removes round-off drift between the
/// two. Returns `max |Σcᵢ − ρ| / ρ` found before the reset.
fn sync_density(p: &Problem, field: &mut DgField) -> f64 {
    let layout = p.space.layout;
    field
        .data
        .par_chunks_mut(field.vars)
        .map(|u| {
            let sum: f64 = layout.species(u).iter().sum();
            let rho = u[Layout::DENSITY];
            u[Layout::DENSITY] = sum;
            if rho > 0.0 { (sum - rho).abs() / rho } else { 0.0 }
        })
        .reduce(|| 0.0, f64::max)
}

fn temperature(p: &Problem, u: &[f64]) -> Result<f64> {
    Ok(p.eos.flow_state(&p.space.layout, u)?.temperature)
}

/// Production matrices at every node of every fluid cell.
fn node_rates(p: &Problem, field: &DgField) -> Result<Vec<RateMatrix>> {
    let layout = p.space.layout;
    let m = layout.species;
    (0..field.cells * field.nodes)
        .into_par_iter()
        .map(|k| {
            let (c, q) = (k / field.nodes, k % field.nodes);
            let mut out = RateMatrix::zeros(m);
            if !p.space.mesh.is_solid(c) {
                let u = field.node(c, q);
                let t = temperature(p, u).map_err(|e| e.at(format!("cell {c} node {q}")))?;
                let c: Vec<f64> = layout.species(u).iter().map(|c| c.max(0.0)).collect();
                p.mechanism.production_in(&c, &t, &mut out);
                out.check_nonnegative()?;
            }
            Ok(out)
        })
        .collect()
}

/// Guarded Patankar denominator: the weighted geometric mean of the
/// history, or the newest value where the mean is not a normal positive
/// number.
fn denominator(levels: &[(f64, &[f64])], i: usize) -> f64 {
    let log: f64 = levels.iter().map(|(e, c)| if *e == 0.0 { 0.0 } else { e * c[i].ln() }).sum();
    let sigma = log.exp();
    if sigma >= f64::MIN_POSITIVE && sigma.is_finite() {
        return sigma;
    }
    let newest = levels[0].1[i];
    if newest >= f64::MIN_POSITIVE {
        newest
    } else {
        // no production or destruction can involve an absent species
        f64::INFINITY
    }
}

/// Pointwise species update `c = b + Δt Σₖ wₖ (P c/σ − D c/σ)`.
fn source_solve(p: &Problem, field: &mut DgField, sources: &[(f64, &Level)], sigma: &[(f64, &DgField)], dt: f64) -> Result<()> {
    let layout = p.space.layout;
    let nv = field.vars;
    let nodes = field.nodes;
    let range = layout.species_range();
    let mesh = &p.space.mesh;
    field.data.par_chunks_mut(nv).enumerate().try_for_each(|(k, u)| -> Result<()> {
        let (c, q) = (k / nodes, k % nodes);
        if mesh.is_solid(c) {
            return Ok(());
        }
        let rho = u[Layout::DENSITY];
        let mut b = u[range.clone()].to_vec();
        for (i, bi) in b.iter_mut().enumerate() {
            if *bi < 0.0 {
                if *bi < -SPECIES_ROUNDOFF * rho {
                    return Err(Error::admissibility(format!("partial density {} = {bi:e} before the source step", i + 1))
                        .at(format!("cell {c} node {q}")));
                }
                *bi = 0.0;
            }
        }
        let m = b.len();
        let mut w = RateMatrix::zeros(m);
        for (weight, level) in sources {
            if *weight != 0.0 {
                if let Some(rates) = &level.rates {
                    w.axpy(*weight, &rates[k]);
                }
            }
        }
        if w.max_abs() == 0.0 {
            return Ok(());
        }
        let levels: Vec<(f64, &[f64])> = sigma.iter().map(|(e, f)| (*e, &f.node(c, q)[range.clone()])).collect();
        let den: Vec<f64> = (0..m).map(|i| denominator(&levels, i)).collect();
        let sol = mp_stage_solve(&StageWeights::conservative(b, w, den), dt).map_err(|e| match e {
            Error::Admissibility { .. } => e,
            other => Error::admissibility(other.to_string()),
        })?;
        u[range.clone()].copy_from_slice(&sol);
        Ok(())
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{Boundary, Mesh};
    use crate::state::Primitive;

    fn quiescent(kind: IntegratorKind) -> Solver {
        let layout = Layout::new(1, 2);
        let space = DgSpace::new(Mesh::interval(0.0, 1.0, 8).unwrap(), 1, layout).unwrap();
        let eos = Eos::IdealOneStep { gamma: 1.2, heat_release: 50.0 };
        // fully burnt gas has zero reaction rate
        let prim = Primitive { density: 1.0, velocity: [0.0; 2], pressure: 1.0, fractions: vec![0.0, 1.0] };
        let u = eos.conserved(&layout, &prim).unwrap();
        let field = space.project(|_, _| u.clone()).unwrap();
        let problem = Problem {
            space,
            eos,
            mechanism: Mechanism::OneStep { rate: 2566.4, activation_temperature: 50.0 },
            bc: Boundaries::uniform(Boundary::Periodic),
        };
        Solver::new(problem, SchemeConfig { integrator: kind, ..Default::default() }, field).unwrap()
    }

    #[test]
    fn quiescent_state_is_a_fixed_point() {
        for kind in [IntegratorKind::Mpe, IntegratorKind::Mpms2 { s: 0.0 }, IntegratorKind::Mpms3 { s: 2.75 }] {
            let mut solver = quiescent(kind);
            let before = solver.field().clone();
            for _ in 0..6 {
                solver.advance(1.0).unwrap();
            }
            for (a, b) in solver.field().data.iter().zip(&before.data) {
                assert!((a - b).abs() < 1e-13, "{kind:?}");
            }
        }
    }

    #[test]
    fn end_time_is_hit_exactly() {
        let cfg = SchemeConfig { integrator: IntegratorKind::mprk2(), ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut solver = quiescent(IntegratorKind::Mprk2 { alpha: 0.5, beta: 1.0 });
        solver.run(0.01, |_, _| Ok(())).unwrap();
        assert_eq!(solver.time(), 0.01);
    }

    #[test]
    fn guarded_denominator() {
        let a = [2.0];
        let z = [0.0];
        assert!((denominator(&[(2.0, &a), (-1.0, &a)], 0) - 2.0).abs() < 1e-15);
        assert_eq!(denominator(&[(1.5, &a), (-0.5, &z)], 0), 2.0);
        assert_eq!(denominator(&[(1.0, &z)], 0), f64::INFINITY);
        assert_eq!(denominator(&[(1.0, &[1e-320])], 0), f64::INFINITY);
    }
}
