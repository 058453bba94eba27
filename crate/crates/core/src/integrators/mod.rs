//! Modified Patankar time integrators.
//!
//! Every scheme here reduces, stage by stage, to the same linearly implicit
//! system
//!
//! ```text
//! c_i = b_i + Δt ( Σ_j wp_ij c_j / σ_j − Σ_j wd_ij c_i / σ_i )
//! ```
//!
//! whose matrix is an M-matrix with unit column sums when `wd = wpᵀ`, so the
//! solution is positive for any `Δt > 0` and `Σ c = Σ b`.

mod driver;
mod multistep;
mod rk;

pub use driver::{bootstrap_history, integrate, step_with_history, Trajectory};
pub use multistep::{
    mpms2_exponents, mpms2_sigma, mpms2_step, mpms3_exponents, mpms3_sigma, mpms3_step,
    ssp_ms2_step, ssp_ms3_step, HistoryLevel, StepHistory,
};
pub use rk::{explicit_euler_step, mpe_step, mprk2_step, mprk3_step, Mprk2Params, MPRK3};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lu_solve_in_place, mmatrix_solve_in_place};
use crate::pds::RateMatrix;

/// History values at or below this are rejected by the multistep schemes.
pub const HISTORY_FLOOR: f64 = 1e-300;

/// Which time integrator to use, with its free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum IntegratorKind {
    Mpe,
    Mprk2 {
        #[serde(default = "default_mprk2_alpha")]
        alpha: f64,
        #[serde(default = "default_mprk2_beta")]
        beta: f64,
    },
    Mprk3,
    Mpms2 {
        #[serde(default = "default_mpms2_s")]
        s: f64,
    },
    Mpms3 {
        #[serde(default = "default_mpms3_s")]
        s: f64,
    },
    SspMs2,
    SspMs3,
    ExplicitEuler,
}

fn default_mprk2_alpha() -> f64 {
    0.0
}
fn default_mprk2_beta() -> f64 {
    1.0
}
fn default_mpms2_s() -> f64 {
    1.5
}
fn default_mpms3_s() -> f64 {
    2.0
}

impl IntegratorKind {
    pub fn mprk2() -> Self {
        IntegratorKind::Mprk2 { alpha: default_mprk2_alpha(), beta: default_mprk2_beta() }
    }
    pub fn mpms2() -> Self {
        IntegratorKind::Mpms2 { s: default_mpms2_s() }
    }
    pub fn mpms3() -> Self {
        IntegratorKind::Mpms3 { s: default_mpms3_s() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            IntegratorKind::Mpe => "mpe",
            IntegratorKind::Mprk2 { .. } => "mprk2",
            IntegratorKind::Mprk3 => "mprk3",
            IntegratorKind::Mpms2 { .. } => "mpms2",
            IntegratorKind::Mpms3 { .. } => "mpms3",
            IntegratorKind::SspMs2 => "ssp-ms2",
            IntegratorKind::SspMs3 => "ssp-ms3",
            IntegratorKind::ExplicitEuler => "explicit-euler",
        }
    }

    /// Name with the free parameters, e.g. `mpms2(s=0)`.
    pub fn label(&self) -> String {
        match self {
            IntegratorKind::Mprk2 { alpha, beta } => format!("mprk2(alpha={alpha},beta={beta})"),
            IntegratorKind::Mpms2 { s } | IntegratorKind::Mpms3 { s } => format!("{}(s={s})", self.name()),
            other => other.name().to_string(),
        }
    }

    /// Number of stored history levels the scheme reads.
    pub fn history_depth(&self) -> usize {
        match self {
            IntegratorKind::Mpms2 { .. } | IntegratorKind::SspMs2 => 3,
            IntegratorKind::Mpms3 { .. } | IntegratorKind::SspMs3 => 4,
            _ => 1,
        }
    }

    /// Design order of accuracy.
    pub fn order(&self) -> u32 {
        match self {
            IntegratorKind::Mpe | IntegratorKind::ExplicitEuler => 1,
            IntegratorKind::Mprk2 { .. } | IntegratorKind::Mpms2 { .. } | IntegratorKind::SspMs2 => 2,
            IntegratorKind::Mprk3 | IntegratorKind::Mpms3 { .. } | IntegratorKind::SspMs3 => 3,
        }
    }

    /// True for the modified Patankar schemes (unconditionally positive).
    pub fn is_patankar(&self) -> bool {
        !matches!(
            self,
            IntegratorKind::SspMs2 | IntegratorKind::SspMs3 | IntegratorKind::ExplicitEuler
        )
    }

    /// One-step scheme used to fill the history of a multistep scheme and to
    /// take a shortened final step.
    pub fn starter(&self) -> IntegratorKind {
        match self {
            IntegratorKind::Mpms2 { .. } => IntegratorKind::mprk2(),
            IntegratorKind::Mpms3 { .. } => IntegratorKind::Mprk3,
            IntegratorKind::SspMs2 | IntegratorKind::SspMs3 => IntegratorKind::ExplicitEuler,
            other => *other,
        }
    }

    /// Largest `Δt / Δt_FE` for which the explicit (convection) part is a
    /// convex combination of forward Euler steps, i.e. `min α_ij / β_ij`.
    pub fn ssp_fraction(&self) -> f64 {
        match *self {
            IntegratorKind::Mpe | IntegratorKind::ExplicitEuler => 1.0,
            IntegratorKind::Mprk2 { alpha, beta } => Mprk2Params { alpha, beta }.ssp_fraction(),
            IntegratorKind::Mprk3 => MPRK3.ssp_fraction(),
            IntegratorKind::Mpms2 { .. } | IntegratorKind::SspMs2 => 0.5,
            IntegratorKind::Mpms3 { .. } | IntegratorKind::SspMs3 => 1.0 / 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            IntegratorKind::Mprk2 { alpha, beta } => Mprk2Params { alpha, beta }.validate(),
            IntegratorKind::Mpms2 { s } | IntegratorKind::Mpms3 { s } if !s.is_finite() => {
                Err(Error::Config(format!("σ exponent s must be finite, got {s}")))
            }
            _ => Ok(()),
        }
    }
}

/// Data of one Patankar-weighted stage.
#[derive(Debug, Clone)]
pub struct StageWeights {
    /// Explicit part `b`.
    pub explicit: Vec<f64>,
    /// Production weights `wp`.
    pub production: RateMatrix,
    /// Destruction weights `wd`; the transpose of `production` for every
    /// conservative scheme.
    pub destruction: RateMatrix,
    /// Patankar denominators `σ`. `+∞` switches the corresponding terms off.
    pub denominators: Vec<f64>,
}

impl StageWeights {
    /// Conservative stage: destruction is the transpose of production.
    pub fn conservative(explicit: Vec<f64>, production: RateMatrix, denominators: Vec<f64>) -> Self {
        let destruction = production.transpose();
        StageWeights { explicit, production, destruction, denominators }
    }

    fn validate(&self) -> Result<()> {
        let m = self.explicit.len();
        if self.denominators.len() != m || self.production.size() != m || self.destruction.size() != m {
            return Err(Error::Precondition("stage weight dimensions disagree".into()));
        }
        for (i, (&b, &s)) in self.explicit.iter().zip(&self.denominators).enumerate() {
            if !b.is_finite() {
                return Err(Error::NonFinite(format!("explicit part b[{i}] = {b}")));
            }
            if b < 0.0 {
                return Err(Error::Precondition(format!(
                    "explicit part b[{i}] = {b:e} is negative (convection step too large?)"
                )));
            }
            if s.is_nan() || s <= 0.0 {
                return Err(Error::Precondition(format!("denominator σ[{i}] = {s:e} must be positive")));
            }
        }
        for w in [&self.production, &self.destruction] {
            for &x in w.as_slice() {
                if !x.is_finite() {
                    return Err(Error::NonFinite(format!("stage weight {x}")));
                }
                if x < 0.0 {
                    return Err(Error::Precondition(format!("stage weight {x:e} is negative")));
                }
            }
        }
        Ok(())
    }
}

/// Solve one Patankar-weighted stage.
///
/// The stage matrix has nonpositive off-diagonal entries and, for a
/// conservative stage, unit column sums, so it is solved without
/// subtractions. Non-conservative weights whose column sums are not all
/// positive fall back to pivoted LU.
pub fn mp_stage_solve(weights: &StageWeights, dt: f64) -> Result<Vec<f64>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Precondition(format!("time step must be positive and finite, got {dt}")));
    }
    weights.validate()?;
    let m = weights.explicit.len();
    let sigma = &weights.denominators;
    let (wp, wd) = (&weights.production, &weights.destruction);
    let mut a = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i != j {
                a[i * m + j] = -(dt * wp.get(i, j) / sigma[j]);
            }
        }
    }
    let conservative = (0..m).all(|i| (0..m).all(|j| wd.get(i, j) == wp.get(j, i)));
    let mut excess: Vec<f64> = if conservative {
        vec![1.0; m]
    } else {
        (0..m).map(|j| 1.0 + dt * (0..m).map(|k| wd.get(j, k) - wp.get(k, j)).sum::<f64>() / sigma[j]).collect()
    };
    let mut x = weights.explicit.clone();
    if excess.iter().all(|&s| s > 0.0) {
        mmatrix_solve_in_place(&mut a, &mut excess, &mut x)?;
    } else {
        for i in 0..m {
            let destroyed: f64 = (0..m).map(|k| wd.get(i, k)).sum();
            a[i * m + i] = 1.0 + dt * (destroyed - wp.get(i, i)) / sigma[i];
        }
        lu_solve_in_place(&mut a, &mut x)?;
    }
    Ok(x)
}

/// Explicit convection increment `F(c)` coupled into the MP schemes.
pub trait Convection {
    fn increment(&self, c: &[f64]) -> Vec<f64>;
}

impl<F> Convection for F
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    fn increment(&self, c: &[f64]) -> Vec<f64> {
        self(c)
    }
}

pub(crate) fn check_positive_state(c: &[f64], what: &str) -> Result<()> {
    for (i, &x) in c.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("{what}[{i}] = {x}")));
        }
        if x <= HISTORY_FLOOR {
            return Err(Error::Precondition(format!(
                "{what}[{i}] = {x:e} must be strictly positive"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_example_stage_matches_hand_solution() {
        let p = RateMatrix::from_rows(&[vec![0.0, 3.2], vec![2.7 * 4.5, 0.0]]);
        let w = StageWeights::conservative(vec![4.5, 3.2], p, vec![4.5, 3.2]);
        let c = mp_stage_solve(&w, 0.1).unwrap();
        // [[1.27, -0.1], [-0.27, 1.1]] c = (4.5, 3.2) by Cramer's rule
        let det = 1.27 * 1.1 - 0.1 * 0.27;
        assert!((c[0] - (4.5 * 1.1 + 0.1 * 3.2) / det).abs() < 1e-13);
        assert!((c[1] - (1.27 * 3.2 + 0.27 * 4.5) / det).abs() < 1e-13);
        assert!((c[0] - 3.8467153).abs() < 1e-7);
        assert!((c[1] - 3.8532847).abs() < 1e-7);
        assert!((c[0] + c[1] - 7.7).abs() < 1e-13);
    }

    #[test]
    fn zero_rates_return_explicit_part() {
        let w = StageWeights::conservative(vec![1.0, 2.0, 3.0], RateMatrix::zeros(3), vec![1.0; 3]);
        assert_eq!(mp_stage_solve(&w, 5.0).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn infinite_denominator_switches_terms_off() {
        let p = RateMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let w = StageWeights::conservative(vec![1.0, 2.0], p, vec![f64::INFINITY, f64::INFINITY]);
        assert_eq!(mp_stage_solve(&w, 1.0).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn rejects_nonpositive_denominator() {
        let w = StageWeights::conservative(vec![1.0], RateMatrix::zeros(1), vec![0.0]);
        assert!(matches!(mp_stage_solve(&w, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn rejects_non_finite_input() {
        let w = StageWeights::conservative(vec![f64::NAN], RateMatrix::zeros(1), vec![1.0]);
        assert!(matches!(mp_stage_solve(&w, 1.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn kind_round_trips_through_json() {
        let kinds = [
            IntegratorKind::Mpe,
            IntegratorKind::Mprk2 { alpha: 0.5, beta: 1.0 },
            IntegratorKind::Mprk3,
            IntegratorKind::Mpms2 { s: 0.0 },
            IntegratorKind::Mpms3 { s: 2.75 },
            IntegratorKind::SspMs3,
        ];
        for k in kinds {
            let text = serde_json::to_string(&k).unwrap();
            assert_eq!(serde_json::from_str::<IntegratorKind>(&text).unwrap(), k);
        }
        let k: IntegratorKind = serde_json::from_str(r#"{"scheme":"mpms2"}"#).unwrap();
        assert_eq!(k, IntegratorKind::Mpms2 { s: 1.5 });
    }

    #[test]
    fn ssp_fractions() {
        assert_eq!(IntegratorKind::mpms2().ssp_fraction(), 0.5);
        assert!((IntegratorKind::mpms3().ssp_fraction() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(IntegratorKind::Mprk2 { alpha: 0.5, beta: 1.0 }.ssp_fraction(), 1.0);
        assert_eq!(IntegratorKind::mprk2().ssp_fraction(), 0.0);
    }
}
