use std::collections::VecDeque;

use super::rk::{explicit_part, rates_checked};
use super::{check_positive_state, mp_stage_solve, Convection, StageWeights};
use crate::error::{Error, Result};
use crate::pds::{rhs_from_rates, ProductionDestruction, RateMatrix};

/// One stored time level: state, its production matrix and, when a
/// convection term is present, its convection increment.
#[derive(Debug, Clone)]
pub struct HistoryLevel {
    pub state: Vec<f64>,
    pub rates: RateMatrix,
    pub convection: Option<Vec<f64>>,
}

impl HistoryLevel {
    pub fn evaluate<S: ProductionDestruction + ?Sized>(
        sys: &S,
        state: Vec<f64>,
        conv: Option<&dyn Convection>,
    ) -> Result<Self> {
        let rates = rates_checked(sys, &state)?;
        let convection = conv.map(|f| f.increment(&state));
        Ok(HistoryLevel { state, rates, convection })
    }
}

/// Ring of the most recent time levels; `level(0)` is `c^n`, `level(k)` is
/// `c^{n−k}`.
#[derive(Debug, Clone)]
pub struct StepHistory {
    levels: VecDeque<HistoryLevel>,
    capacity: usize,
}

impl StepHistory {
    pub fn new(capacity: usize) -> Self {
        StepHistory { levels: VecDeque::with_capacity(capacity), capacity: capacity.max(1) }
    }

    pub fn push(&mut self, level: HistoryLevel) {
        if self.levels.len() == self.capacity {
            self.levels.pop_back();
        }
        self.levels.push_front(level);
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn level(&self, k: usize) -> &HistoryLevel {
        &self.levels[k]
    }

    pub fn latest(&self) -> &HistoryLevel {
        &self.levels[0]
    }

    pub fn clear(&mut self) {
        self.levels.clear();
    }

    fn require(&self, need: usize) -> Result<()> {
        if self.levels.len() < need {
            return Err(Error::Bootstrap { have: self.levels.len(), need });
        }
        Ok(())
    }
}

/// Exponents of `c^n, c^{n−1}, c^{n−2}` in the second order multistep
/// denominator.
pub fn mpms2_exponents(s: f64) -> [f64; 3] {
    let r = 3.0 - 2.0 * s;
    [s, r, 1.0 - r - s]
}

/// Exponents of `c^n, …, c^{n−3}` in the third order multistep denominator.
pub fn mpms3_exponents(s: f64) -> [f64; 4] {
    let r = 6.0 - 3.0 * s;
    let p = 3.0 * s - 8.0;
    [s, r, p, 1.0 - r - s - p]
}

fn weighted_geometric_mean(levels: &[&[f64]], exponents: &[f64]) -> Result<Vec<f64>> {
    for (k, c) in levels.iter().enumerate() {
        check_positive_state(c, &format!("c^(n-{k})"))?;
    }
    let m = levels[0].len();
    Ok((0..m)
        .map(|i| {
            let log: f64 = levels.iter().zip(exponents).map(|(c, e)| e * c[i].ln()).sum();
            log.exp()
        })
        .collect())
}

/// `σ = (c^n)^s (c^{n−1})^r (c^{n−2})^{1−r−s}`, `r = 3 − 2s`.
pub fn mpms2_sigma(cn: &[f64], cn1: &[f64], cn2: &[f64], s: f64) -> Result<Vec<f64>> {
    weighted_geometric_mean(&[cn, cn1, cn2], &mpms2_exponents(s))
}

/// `σ = (c^n)^s (c^{n−1})^r (c^{n−2})^p (c^{n−3})^{1−r−s−p}`,
/// `r = 6 − 3s`, `p = 3s − 8`.
pub fn mpms3_sigma(cn: &[f64], cn1: &[f64], cn2: &[f64], cn3: &[f64], s: f64) -> Result<Vec<f64>> {
    weighted_geometric_mean(&[cn, cn1, cn2, cn3], &mpms3_exponents(s))
}

/// Second order modified Patankar multistep step. Needs three history levels.
pub fn mpms2_step(history: &StepHistory, s: f64, dt: f64) -> Result<Vec<f64>> {
    history.require(3)?;
    let (l0, l1, l2) = (history.level(0), history.level(1), history.level(2));
    let sigma = mpms2_sigma(&l0.state, &l1.state, &l2.state, s)?;
    let b = explicit_part(
        &[(0.25, &l2.state), (0.75, &l0.state)],
        &[(1.5, l0.convection.as_deref())],
        dt,
    );
    let w = RateMatrix::combination(&[(1.5, &l0.rates)]);
    mp_stage_solve(&StageWeights::conservative(b, w, sigma), dt)
}

/// Third order modified Patankar multistep step. Needs four history levels.
pub fn mpms3_step(history: &StepHistory, s: f64, dt: f64) -> Result<Vec<f64>> {
    history.require(4)?;
    let l: Vec<&HistoryLevel> = (0..4).map(|k| history.level(k)).collect();
    let sigma = mpms3_sigma(&l[0].state, &l[1].state, &l[2].state, &l[3].state, s)?;
    let b = explicit_part(
        &[(11.0 / 27.0, &l[3].state), (16.0 / 27.0, &l[0].state)],
        &[(4.0 / 9.0, l[3].convection.as_deref()), (16.0 / 9.0, l[0].convection.as_deref())],
        dt,
    );
    let w = RateMatrix::combination(&[(4.0 / 9.0, &l[3].rates), (16.0 / 9.0, &l[0].rates)]);
    mp_stage_solve(&StageWeights::conservative(b, w, sigma), dt)
}

fn add_source(b: &mut [f64], weight: f64, rates: &RateMatrix, dt: f64) {
    for (bi, r) in b.iter_mut().zip(rhs_from_rates(rates)) {
        *bi += dt * weight * r;
    }
}

/// Explicit second order SSP multistep step on `F + P − D`.
pub fn ssp_ms2_step(history: &StepHistory, dt: f64) -> Result<Vec<f64>> {
    history.require(3)?;
    let (l0, l2) = (history.level(0), history.level(2));
    let mut b = explicit_part(
        &[(0.25, &l2.state), (0.75, &l0.state)],
        &[(1.5, l0.convection.as_deref())],
        dt,
    );
    add_source(&mut b, 1.5, &l0.rates, dt);
    Ok(b)
}

/// Explicit third order SSP multistep step on `F + P − D`.
pub fn ssp_ms3_step(history: &StepHistory, dt: f64) -> Result<Vec<f64>> {
    history.require(4)?;
    let (l0, l3) = (history.level(0), history.level(3));
    let mut b = explicit_part(
        &[(11.0 / 27.0, &l3.state), (16.0 / 27.0, &l0.state)],
        &[(4.0 / 9.0, l3.convection.as_deref()), (16.0 / 9.0, l0.convection.as_deref())],
        dt,
    );
    add_source(&mut b, 4.0 / 9.0, &l3.rates, dt);
    add_source(&mut b, 16.0 / 9.0, &l0.rates, dt);
    Ok(b)
}
