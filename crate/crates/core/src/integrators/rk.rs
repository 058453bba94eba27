use super::{check_positive_state, mp_stage_solve, Convection, StageWeights};
use crate::error::{Error, Result};
use crate::pds::{ProductionDestruction, RateMatrix};

/// Free parameters of the two-stage second order MPRK family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mprk2Params {
    pub alpha: f64,
    pub beta: f64,
}

impl Mprk2Params {
    pub const SSP: Mprk2Params = Mprk2Params { alpha: 0.5, beta: 1.0 };

    pub fn validate(&self) -> Result<()> {
        let Mprk2Params { alpha, beta } = *self;
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Config(format!("MPRK2 parameters must be finite, got α={alpha}, β={beta}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("MPRK2 requires 0 ≤ α ≤ 1, got {alpha}")));
        }
        if beta <= 0.0 {
            return Err(Error::Config(format!("MPRK2 requires β > 0, got {beta}")));
        }
        if alpha * beta + 0.5 / beta > 1.0 + 1e-14 {
            return Err(Error::Config(format!(
                "MPRK2 requires αβ + 1/(2β) ≤ 1, got {}",
                alpha * beta + 0.5 / beta
            )));
        }
        Ok(())
    }

    pub fn a20(&self) -> f64 {
        1.0 - self.alpha
    }
    pub fn a21(&self) -> f64 {
        self.alpha
    }
    pub fn b10(&self) -> f64 {
        self.beta
    }
    pub fn b20(&self) -> f64 {
        1.0 - 0.5 / self.beta - self.alpha * self.beta
    }
    pub fn b21(&self) -> f64 {
        0.5 / self.beta
    }

    /// Exponent of the first stage in the final Patankar denominator
    /// `(c⁽¹⁾)^s (c⁽⁰⁾)^(1−s)`.
    pub fn sigma_exponent(&self) -> f64 {
        let Mprk2Params { alpha, beta } = *self;
        (1.0 - alpha * beta + alpha * beta * beta) / (beta * (1.0 - alpha * beta))
    }

    pub fn ssp_fraction(&self) -> f64 {
        ssp_ratio(&[(1.0, self.b10()), (self.a20(), self.b20()), (self.a21(), self.b21())])
    }
}

impl Default for Mprk2Params {
    fn default() -> Self {
        Mprk2Params { alpha: 0.0, beta: 1.0 }
    }
}

/// Coefficients of the three-stage third order MPRK scheme.
///
/// `alpha`/`beta` are the Shu–Osher coefficients of the underlying explicit
/// method (row `i` holds stage `i + 1`). The remaining entries define the
/// Patankar denominators of the second and final stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mprk3Coefficients {
    pub alpha: [[f64; 3]; 3],
    pub beta: [[f64; 3]; 3],
    pub n1: f64,
    pub n2: f64,
    pub eta: [f64; 4],
    pub s: f64,
    pub z: f64,
}

/// Third order scheme of Huang, Zhao and Shu (J. Sci. Comput. 2019).
///
/// `α31` and `β31` are zero; the other Shu–Osher entries follow from the
/// third order conditions with nodes `c₂ = β₁₀` and `c₃ = α₂₁β₁₀ + β₂₀ + β₂₁`.
/// `η`, `s` and `z` are one member of the family that cancels the local
/// error through `Δt³` on nonlinear systems, chosen with all `η ≥ 0`.
pub const MPRK3: Mprk3Coefficients = Mprk3Coefficients {
    alpha: [
        [1.0, 0.0, 0.0],
        [0.9260031255403183, 0.07399687445968178, 0.0],
        [0.704390402788587, 0.0, 0.29560959721141306],
    ],
    beta: [
        [0.47620819268131703, 0.0, 0.0],
        [0.07754544272239691, 0.5919750014967974, 0.0],
        [0.20044747787205075, 0.0, 0.5912191865851484],
    ],
    n1: 0.25690460241300905,
    n2: 0.7430953975886814,
    eta: [0.2115565090624396, 0.1595496791325313, 0.40986638915349893, 2.224876059837237],
    s: 5.657699743459307,
    z: 0.6288938118058728,
};

impl Mprk3Coefficients {
    pub fn ssp_fraction(&self) -> f64 {
        let mut pairs = Vec::new();
        for i in 0..3 {
            for k in 0..=i {
                pairs.push((self.alpha[i][k], self.beta[i][k]));
            }
        }
        ssp_ratio(&pairs)
    }
}

/// `min α/β` over the pairs with `β ≠ 0`; zero as soon as a `β` is negative
/// or an `α` vanishes next to a positive `β`.
pub(crate) fn ssp_ratio(pairs: &[(f64, f64)]) -> f64 {
    let mut ratio = f64::INFINITY;
    for &(a, b) in pairs {
        if b < 0.0 {
            return 0.0;
        }
        if b > 0.0 {
            ratio = ratio.min(a / b);
        }
    }
    ratio
}

/// Explicit part `Σ_k α_k c⁽ᵏ⁾ + Δt Σ_k β_k F(c⁽ᵏ⁾)`.
pub(crate) fn explicit_part(
    states: &[(f64, &[f64])],
    increments: &[(f64, Option<&[f64]>)],
    dt: f64,
) -> Vec<f64> {
    let m = states[0].1.len();
    let mut b = vec![0.0; m];
    for &(a, c) in states {
        if a != 0.0 {
            for (bi, ci) in b.iter_mut().zip(c) {
                *bi += a * ci;
            }
        }
    }
    for &(w, f) in increments {
        if let (Some(f), true) = (f, w != 0.0) {
            for (bi, fi) in b.iter_mut().zip(f) {
                *bi += dt * w * fi;
            }
        }
    }
    b
}

pub(crate) fn rates_checked<S: ProductionDestruction + ?Sized>(sys: &S, c: &[f64]) -> Result<RateMatrix> {
    if c.len() != sys.species_count() {
        return Err(Error::Precondition(format!(
            "state has {} entries, system has {} species",
            c.len(),
            sys.species_count()
        )));
    }
    let r = sys.rates(c);
    r.check_nonnegative()?;
    Ok(r)
}

fn increment(conv: Option<&dyn Convection>, c: &[f64]) -> Result<Option<Vec<f64>>> {
    match conv {
        None => Ok(None),
        Some(f) => {
            let v = f.increment(c);
            if v.len() != c.len() {
                return Err(Error::Precondition("convection increment has wrong length".into()));
            }
            if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("convection increment {x}")));
            }
            Ok(Some(v))
        }
    }
}

fn stage(explicit: Vec<f64>, production: RateMatrix, sigma: Vec<f64>, dt: f64) -> Result<Vec<f64>> {
    mp_stage_solve(&StageWeights::conservative(explicit, production, sigma), dt)
}

/// Modified Patankar Euler step.
pub fn mpe_step<S: ProductionDestruction + ?Sized>(
    sys: &S,
    c: &[f64],
    dt: f64,
    conv: Option<&dyn Convection>,
) -> Result<Vec<f64>> {
    check_positive_state(c, "c")?;
    let p = rates_checked(sys, c)?;
    let f = increment(conv, c)?;
    let b = explicit_part(&[(1.0, c)], &[(1.0, f.as_deref())], dt);
    stage(b, p, c.to_vec(), dt)
}

/// Second order MPRK step.
pub fn mprk2_step<S: ProductionDestruction + ?Sized>(
    sys: &S,
    params: Mprk2Params,
    c: &[f64],
    dt: f64,
    conv: Option<&dyn Convection>,
) -> Result<Vec<f64>> {
    params.validate()?;
    check_positive_state(c, "c")?;
    let p0 = rates_checked(sys, c)?;
    let f0 = increment(conv, c)?;
    let b1 = explicit_part(&[(1.0, c)], &[(params.b10(), f0.as_deref())], dt);
    let w1 = RateMatrix::combination(&[(params.b10(), &p0)]);
    let c1 = stage(b1, w1, c.to_vec(), dt)?;
    check_positive_state(&c1, "c(1)")?;

    let p1 = rates_checked(sys, &c1)?;
    let f1 = increment(conv, &c1)?;
    let b2 = explicit_part(
        &[(params.a20(), c), (params.a21(), &c1)],
        &[(params.b20(), f0.as_deref()), (params.b21(), f1.as_deref())],
        dt,
    );
    let w2 = RateMatrix::combination(&[(params.b20(), &p0), (params.b21(), &p1)]);
    let s = params.sigma_exponent();
    let sigma: Vec<f64> = c.iter().zip(&c1).map(|(&c0, &c1)| c1.powf(s) * c0.powf(1.0 - s)).collect();
    stage(b2, w2, sigma, dt)
}

/// Third order MPRK step with the [`MPRK3`] coefficients.
pub fn mprk3_step<S: ProductionDestruction + ?Sized>(
    sys: &S,
    c: &[f64],
    dt: f64,
    conv: Option<&dyn Convection>,
) -> Result<Vec<f64>> {
    let k = &MPRK3;
    let (a, b) = (&k.alpha, &k.beta);
    check_positive_state(c, "c")?;
    let p0 = rates_checked(sys, c)?;
    let f0 = increment(conv, c)?;

    let b1 = explicit_part(&[(a[0][0], c)], &[(b[0][0], f0.as_deref())], dt);
    let c1 = stage(b1, RateMatrix::combination(&[(b[0][0], &p0)]), c.to_vec(), dt)?;
    check_positive_state(&c1, "c(1)")?;
    let p1 = rates_checked(sys, &c1)?;
    let f1 = increment(conv, &c1)?;

    let rho: Vec<f64> = c
        .iter()
        .zip(&c1)
        .map(|(&c0, &c1)| k.n1 * c1 + k.n2 * c0 * (c1 / c0).powi(2))
        .collect();
    check_positive_state(&rho, "ρ")?;
    let b2 = explicit_part(
        &[(a[1][0], c), (a[1][1], &c1)],
        &[(b[1][0], f0.as_deref()), (b[1][1], f1.as_deref())],
        dt,
    );
    let c2 = stage(b2, RateMatrix::combination(&[(b[1][0], &p0), (b[1][1], &p1)]), rho.clone(), dt)?;
    check_positive_state(&c2, "c(2)")?;
    let p2 = rates_checked(sys, &c2)?;
    let f2 = increment(conv, &c2)?;

    // the auxiliary stage approximates (1 − z) c^{n+1}, so its convection
    // weights carry that factor
    let mu: Vec<f64> = c.iter().zip(&c1).map(|(&c0, &c1)| c0 * (c1 / c0).powf(k.s)).collect();
    let fz = 1.0 - k.z;
    let ba = explicit_part(
        &[(k.eta[0], c), (k.eta[1], &c1)],
        &[(fz * k.eta[2], f0.as_deref()), (fz * k.eta[3], f1.as_deref())],
        dt,
    );
    let aux = stage(ba, RateMatrix::combination(&[(k.eta[2], &p0), (k.eta[3], &p1)]), mu, dt)?;
    let sigma: Vec<f64> = (0..c.len()).map(|i| aux[i] + k.z * c[i] * c2[i] / rho[i]).collect();
    check_positive_state(&sigma, "σ")?;

    let b3 = explicit_part(
        &[(a[2][0], c), (a[2][1], &c1), (a[2][2], &c2)],
        &[(b[2][0], f0.as_deref()), (b[2][1], f1.as_deref()), (b[2][2], f2.as_deref())],
        dt,
    );
    let w3 = RateMatrix::combination(&[(b[2][0], &p0), (b[2][1], &p1), (b[2][2], &p2)]);
    stage(b3, w3, sigma, dt)
}

/// Forward Euler on `F + P − D`; no positivity guarantee.
pub fn explicit_euler_step<S: ProductionDestruction + ?Sized>(
    sys: &S,
    c: &[f64],
    dt: f64,
    conv: Option<&dyn Convection>,
) -> Result<Vec<f64>> {
    let p = rates_checked(sys, c)?;
    let f = increment(conv, c)?;
    let rhs = crate::pds::rhs_from_rates(&p);
    let mut out = explicit_part(&[(1.0, c)], &[(1.0, f.as_deref())], dt);
    for (o, r) in out.iter_mut().zip(&rhs) {
        *o += dt * r;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pds::FnSystem;

    fn linear(a: f64) -> impl ProductionDestruction {
        FnSystem::new(2, move |c: &[f64], p: &mut RateMatrix| {
            p.set(0, 1, c[1]);
            p.set(1, 0, a * c[0]);
        })
    }

    #[test]
    fn mpe_matches_single_stage_solve() {
        let c = mpe_step(&linear(2.7), &[4.5, 3.2], 0.1, None).unwrap();
        assert!((c[0] - 3.8467153).abs() < 1e-7);
        assert!((c[1] - 3.8532847).abs() < 1e-7);
    }

    #[test]
    fn mprk2_sigma_exponents() {
        assert_eq!(Mprk2Params { alpha: 0.0, beta: 1.0 }.sigma_exponent(), 1.0);
        assert_eq!(Mprk2Params::SSP.sigma_exponent(), 2.0);
    }

    #[test]
    fn mprk2_rejects_invalid_parameters() {
        for (alpha, beta) in [(-0.1, 1.0), (1.1, 1.0), (0.0, 0.0), (0.0, 0.4), (1.0, 1.0)] {
            assert!(Mprk2Params { alpha, beta }.validate().is_err(), "α={alpha} β={beta}");
        }
        assert!(Mprk2Params { alpha: 0.0, beta: 0.5 }.validate().is_ok());
    }

    #[test]
    fn mprk3_shu_osher_coefficients_are_third_order() {
        let a = MPRK3.alpha;
        let b = MPRK3.beta;
        // convert to Butcher form
        let a21 = b[0][0];
        let a31 = b[1][0] + a[1][1] * b[0][0];
        let a32 = b[1][1];
        let w3 = b[2][2];
        let w2 = a[2][2] * a32 + b[2][1];
        let w1 = b[2][0] + a[2][1] * b[0][0] + a[2][2] * a31;
        let c2 = a21;
        let c3 = a31 + a32;
        assert!((w1 + w2 + w3 - 1.0).abs() < 1e-9);
        assert!((w2 * c2 + w3 * c3 - 0.5).abs() < 1e-9);
        assert!((w2 * c2 * c2 + w3 * c3 * c3 - 1.0 / 3.0).abs() < 1e-9);
        assert!((w3 * a32 * c2 - 1.0 / 6.0).abs() < 1e-9);
        for i in 0..3 {
            assert!((a[i].iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ssp_ratio_rules() {
        assert_eq!(ssp_ratio(&[(1.0, 0.5), (0.25, 0.0)]), 2.0);
        assert_eq!(ssp_ratio(&[(1.0, -0.5)]), 0.0);
        assert_eq!(ssp_ratio(&[(0.0, 0.5)]), 0.0);
    }

    #[test]
    fn convection_enters_explicit_part() {
        let sys = FnSystem::new(2, |_: &[f64], _: &mut RateMatrix| {});
        let shift = |c: &[f64]| vec![-c[0], c[0]];
        let c = mpe_step(&sys, &[1.0, 1.0], 0.5, Some(&shift)).unwrap();
        assert_eq!(c, vec![0.5, 1.5]);
        let too_far = mpe_step(&sys, &[1.0, 1.0], 2.0, Some(&shift));
        assert!(matches!(too_far, Err(Error::Precondition(_))));
    }

    #[test]
    fn explicit_euler_can_go_negative() {
        let c = explicit_euler_step(&linear(2.7), &[4.5, 3.2], 1.0, None).unwrap();
        assert!(c[0] < 0.0);
    }
}
