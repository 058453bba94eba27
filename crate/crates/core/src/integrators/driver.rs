use super::multistep::{mpms2_step, mpms3_step, ssp_ms2_step, ssp_ms3_step, HistoryLevel, StepHistory};
use super::rk::{explicit_euler_step, mpe_step, mprk2_step, mprk3_step, Mprk2Params};
use super::{check_positive_state, Convection, IntegratorKind};
use crate::error::{Error, Result};
use crate::pds::ProductionDestruction;

/// Sampled output of [`integrate`].
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn one_step<S: ProductionDestruction + ?Sized>(
    sys: &S,
    kind: IntegratorKind,
    c: &[f64],
    dt: f64,
    conv: Option<&dyn Convection>,
) -> Result<Vec<f64>> {
    match kind {
        IntegratorKind::Mpe => mpe_step(sys, c, dt, conv),
        IntegratorKind::Mprk2 { alpha, beta } => mprk2_step(sys, Mprk2Params { alpha, beta }, c, dt, conv),
        IntegratorKind::Mprk3 => mprk3_step(sys, c, dt, conv),
        IntegratorKind::ExplicitEuler => explicit_euler_step(sys, c, dt, conv),
        other => Err(Error::Config(format!("{} is not a one-step scheme", other.name()))),
    }
}

/// Advance by one step of size `dt`, reading `history` (newest level first).
///
/// One-step schemes only read `history.latest()`.
pub fn step_with_history<S: ProductionDestruction + ?Sized>(
    sys: &S,
    kind: IntegratorKind,
    history: &StepHistory,
    dt: f64,
    conv: Option<&dyn Convection>,
) -> Result<Vec<f64>> {
    if history.is_empty() {
        return Err(Error::Bootstrap { have: 0, need: kind.history_depth() });
    }
    match kind {
        IntegratorKind::Mpms2 { s } => mpms2_step(history, s, dt),
        IntegratorKind::Mpms3 { s } => mpms3_step(history, s, dt),
        IntegratorKind::SspMs2 => ssp_ms2_step(history, dt),
        IntegratorKind::SspMs3 => ssp_ms3_step(history, dt),
        _ => one_step(sys, kind, &history.latest().state, dt, conv),
    }
}

/// Fill a history ring of `target_levels` levels starting from `c0`, using
/// the starter of `kind` with step `dt`.
pub fn bootstrap_history<S: ProductionDestruction + ?Sized>(
    sys: &S,
    kind: IntegratorKind,
    c0: &[f64],
    dt: f64,
    target_levels: usize,
    conv: Option<&dyn Convection>,
) -> Result<StepHistory> {
    if kind.is_patankar() {
        check_positive_state(c0, "c0")?;
    }
    let target = target_levels.max(1);
    let mut history = StepHistory::new(target);
    history.push(HistoryLevel::evaluate(sys, c0.to_vec(), conv)?);
    let starter = kind.starter();
    while history.len() < target {
        let next = one_step(sys, starter, &history.latest().state, dt, conv)?;
        history.push(HistoryLevel::evaluate(sys, next, conv)?);
    }
    Ok(history)
}

/// Fixed-step march from `t0` to `t_final`.
///
/// Multistep schemes start from [`bootstrap_history`]. A final step shorter
/// than `dt` is taken with the scheme's one-step starter so the multistep
/// stencils only ever see uniform spacing. `sample_every` keeps every k-th
/// state (the initial and final states are always kept).
pub fn integrate<S: ProductionDestruction + ?Sized>(
    sys: &S,
    kind: IntegratorKind,
    c0: &[f64],
    t0: f64,
    t_final: f64,
    dt: f64,
    conv: Option<&dyn Convection>,
    sample_every: usize,
) -> Result<Trajectory> {
    kind.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
    }
    if !(t_final > t0) {
        return Err(Error::Precondition(format!("t_final = {t_final} must exceed t0 = {t0}")));
    }
    let span = t_final - t0;
    let ratio = span / dt;
    // a remainder within round-off counts as a whole step
    let nearest = ratio.round();
    let full_steps = if (ratio - nearest).abs() < 1e-9 * ratio.max(1.0) { nearest } else { ratio.floor() } as usize;
    let has_tail = span - full_steps as f64 * dt > 1e-12 * span;
    let every = sample_every.max(1);

    let mut traj = Trajectory { times: vec![t0], states: vec![c0.to_vec()] };
    let record = |traj: &mut Trajectory, taken: usize, state: &[f64]| {
        let last = taken == full_steps && !has_tail;
        if taken % every == 0 || last {
            traj.times.push(if last { t_final } else { t0 + taken as f64 * dt });
            traj.states.push(state.to_vec());
        }
    };

    let start_levels = kind.history_depth().min(full_steps + 1);
    let mut history = bootstrap_history(sys, kind, c0, dt, start_levels, conv)?;
    let mut taken = 0usize;
    for k in (0..start_levels - 1).rev() {
        taken += 1;
        record(&mut traj, taken, &history.level(k).state);
    }
    while taken < full_steps {
        let next = step_with_history(sys, kind, &history, dt, conv)?;
        taken += 1;
        record(&mut traj, taken, &next);
        history.push(HistoryLevel::evaluate(sys, next, conv)?);
    }
    if has_tail {
        let h = t_final - (t0 + taken as f64 * dt);
        let last = one_step(sys, kind.starter(), &history.latest().state, h, conv)?;
        traj.times.push(t_final);
        traj.states.push(last);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pds::{FnSystem, RateMatrix};

    fn linear(a: f64) -> impl ProductionDestruction {
        FnSystem::new(2, move |c: &[f64], p: &mut RateMatrix| {
            p.set(0, 1, c[1]);
            p.set(1, 0, a * c[0]);
        })
    }

    #[test]
    fn single_level_bootstrap_is_initial_state() {
        let h = bootstrap_history(&linear(2.7), IntegratorKind::mpms2(), &[4.5, 3.2], 0.1, 1, None).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.latest().state, vec![4.5, 3.2]);
    }

    #[test]
    fn step_larger_than_interval_is_single_step() {
        let sys = linear(2.7);
        let tr = integrate(&sys, IntegratorKind::mpms3(), &[4.5, 3.2], 0.0, 0.5, 1.0, None, 1).unwrap();
        assert_eq!(tr.times, vec![0.0, 0.5]);
        let direct = mprk3_step(&sys, &[4.5, 3.2], 0.5, None).unwrap();
        assert_eq!(tr.last(), direct.as_slice());
    }

    #[test]
    fn lands_exactly_on_final_time() {
        let tr = integrate(&linear(2.7), IntegratorKind::mpms2(), &[4.5, 3.2], 0.0, 1.0, 0.3, None, 1).unwrap();
        assert_eq!(*tr.times.last().unwrap(), 1.0);
        assert_eq!(tr.times.len(), 5);
        let tr = integrate(&linear(2.7), IntegratorKind::mpms2(), &[4.5, 3.2], 0.0, 1.0, 0.1, None, 1).unwrap();
        assert_eq!(tr.times.len(), 11);
        assert_eq!(*tr.times.last().unwrap(), 1.0);
    }

    #[test]
    fn multistep_requires_bootstrap() {
        let h = StepHistory::new(3);
        let err = step_with_history(&linear(1.0), IntegratorKind::mpms2(), &h, 0.1, None);
        assert!(matches!(err, Err(Error::Bootstrap { .. })));
    }
}
