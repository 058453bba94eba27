//! Production–destruction systems.
//!
//! A system `dc_i/dt = Σ_j p_ij(c) − Σ_j d_ij(c)` is described only through
//! its production matrix; destruction is always the transpose,
//! `d_ij = p_ji`, so conservation of `Σ c_i` is structural.

use crate::error::{Error, Result};

/// Dense `M × M` matrix of nonnegative rates, row-major.
///
/// Entry `(i, j)` is the rate at which species `j` is converted into
/// species `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    size: usize,
    data: Vec<f64>,
}

impl RateMatrix {
    pub fn zeros(size: usize) -> Self {
        RateMatrix { size, data: vec![0.0; size * size] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let size = rows.len();
        let mut m = RateMatrix::zeros(size);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), size, "rate matrix must be square");
            m.data[i * size..(i + 1) * size].copy_from_slice(row);
        }
        m
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.size + j] = value;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.size + j] += value;
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> RateMatrix {
        let mut t = RateMatrix::zeros(self.size);
        for i in 0..self.size {
            for j in 0..self.size {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `self ← self + factor · other`.
    pub fn axpy(&mut self, factor: f64, other: &RateMatrix) {
        debug_assert_eq!(self.size, other.size);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    /// Linear combination `Σ_k w_k · M_k` of equally sized matrices.
    pub fn combination(terms: &[(f64, &RateMatrix)]) -> RateMatrix {
        let size = terms.first().map(|(_, m)| m.size).unwrap_or(0);
        let mut out = RateMatrix::zeros(size);
        for (w, m) in terms {
            out.axpy(*w, m);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// First negative entry, if any.
    pub fn check_nonnegative(&self) -> Result<()> {
        for i in 0..self.size {
            for j in 0..self.size {
                let v = self.get(i, j);
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("rate p[{i}][{j}] = {v}")));
                }
                if v < 0.0 {
                    return Err(Error::NegativeRate { row: i, col: j, value: v });
                }
            }
        }
        Ok(())
    }

    /// Total production `P_i = Σ_j p_ij`.
    pub fn production_sum(&self, i: usize) -> f64 {
        (0..self.size).map(|j| self.get(i, j)).sum()
    }

    /// Total destruction `D_i = Σ_j d_ij = Σ_j p_ji`.
    pub fn destruction_sum(&self, i: usize) -> f64 {
        (0..self.size).map(|j| self.get(j, i)).sum()
    }
}

/// A production–destruction system with `species_count()` components.
///
/// Implementations must return nonnegative rates and must not destroy an
/// absent species: column `j` of the production matrix vanishes whenever
/// `c_j = 0`.
pub trait ProductionDestruction {
    fn species_count(&self) -> usize;

    /// Fill `out` with `p_ij(c)`. `out` arrives zeroed.
    fn production(&self, c: &[f64], out: &mut RateMatrix);

    fn rates(&self, c: &[f64]) -> RateMatrix {
        let mut out = RateMatrix::zeros(self.species_count());
        self.production(c, &mut out);
        debug_assert_absent_species_inert(c, &out);
        out
    }
}

#[inline]
fn debug_assert_absent_species_inert(c: &[f64], rates: &RateMatrix) {
    if cfg!(debug_assertions) {
        for (j, &cj) in c.iter().enumerate() {
            if cj == 0.0 {
                for i in 0..rates.size() {
                    debug_assert!(
                        rates.get(i, j) == 0.0,
                        "species {j} is absent but p[{i}][{j}] = {}",
                        rates.get(i, j)
                    );
                }
            }
        }
    }
}

/// Production–destruction system backed by a closure.
pub struct FnSystem<F> {
    species: usize,
    rate_fn: F,
}

impl<F> FnSystem<F>
where
    F: Fn(&[f64], &mut RateMatrix),
{
    pub fn new(species: usize, rate_fn: F) -> Self {
        FnSystem { species, rate_fn }
    }
}

impl<F> ProductionDestruction for FnSystem<F>
where
    F: Fn(&[f64], &mut RateMatrix),
{
    fn species_count(&self) -> usize {
        self.species
    }

    fn production(&self, c: &[f64], out: &mut RateMatrix) {
        (self.rate_fn)(c, out)
    }
}

/// Rate evaluator that depends on an external context (temperature, …).
pub trait ContextualRates<Ctx: ?Sized> {
    fn species_count(&self) -> usize;
    fn production_in(&self, c: &[f64], ctx: &Ctx, out: &mut RateMatrix);
}

/// Freezes the context of a [`ContextualRates`] so it can be stepped as a
/// plain [`ProductionDestruction`].
pub struct WithContext<'a, R: ?Sized, Ctx: ?Sized> {
    pub rates: &'a R,
    pub context: &'a Ctx,
}

impl<R, Ctx> ProductionDestruction for WithContext<'_, R, Ctx>
where
    R: ContextualRates<Ctx> + ?Sized,
    Ctx: ?Sized,
{
    fn species_count(&self) -> usize {
        self.rates.species_count()
    }

    fn production(&self, c: &[f64], out: &mut RateMatrix) {
        self.rates.production_in(c, self.context, out)
    }
}

/// Right-hand side `P_i(c) − D_i(c)`.
pub fn net_rhs<S: ProductionDestruction + ?Sized>(system: &S, c: &[f64]) -> Result<Vec<f64>> {
    if c.len() != system.species_count() {
        return Err(Error::Precondition(format!(
            "state has {} entries, system has {} species",
            c.len(),
            system.species_count()
        )));
    }
    let rates = system.rates(c);
    rates.check_nonnegative()?;
    Ok(rhs_from_rates(&rates))
}

pub fn rhs_from_rates(rates: &RateMatrix) -> Vec<f64> {
    (0..rates.size())
        .map(|i| rates.production_sum(i) - rates.destruction_sum(i))
        .collect()
}

/// `Σ_i (P_i − D_i)` for a production matrix and an explicit destruction matrix.
///
/// Zero (to round-off) whenever `destruction` is the transpose of
/// `production`.
pub fn conservation_defect_split(production: &RateMatrix, destruction: &RateMatrix) -> f64 {
    let m = production.size();
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            total += production.get(i, j) - destruction.get(i, j);
        }
    }
    total
}

/// `Σ_i (P_i − D_i)` with destruction taken as the transpose.
pub fn conservation_defect(rates: &RateMatrix) -> f64 {
    conservation_defect_split(rates, &rates.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(a: f64) -> impl ProductionDestruction {
        FnSystem::new(2, move |c: &[f64], p: &mut RateMatrix| {
            p.set(0, 1, c[1]);
            p.set(1, 0, a * c[0]);
        })
    }

    #[test]
    fn linear_rhs_matches_hand_substitution() {
        let rhs = net_rhs(&linear(2.7), &[4.5, 3.2]).unwrap();
        assert!((rhs[0] - (3.2 - 12.15)).abs() < 1e-14);
        assert!((rhs[1] - (12.15 - 3.2)).abs() < 1e-14);
    }

    #[test]
    fn no_reactions_give_zero_rhs() {
        let sys = FnSystem::new(3, |_: &[f64], _: &mut RateMatrix| {});
        assert_eq!(net_rhs(&sys, &[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn nonlinear_three_species_rhs() {
        let a = 1.0;
        let sys = FnSystem::new(3, move |c: &[f64], p: &mut RateMatrix| {
            p.set(1, 0, c[0] * c[1] / (c[0] + 1.0));
            p.set(2, 1, a * c[1]);
        });
        let c = [9.98, 0.01, 0.01];
        let r21 = 9.98 * 0.01 / 10.98;
        let r32 = 0.01;
        let rhs = net_rhs(&sys, &c).unwrap();
        assert!((rhs[0] + r21).abs() < 1e-15);
        assert!((rhs[1] - (r21 - r32)).abs() < 1e-15);
        assert!((rhs[2] - r32).abs() < 1e-15);
    }

    #[test]
    fn negative_rate_is_structural_violation() {
        let sys = FnSystem::new(2, |_: &[f64], p: &mut RateMatrix| p.set(0, 1, -1.0));
        match net_rhs(&sys, &[1.0, 1.0]) {
            Err(Error::NegativeRate { row: 0, col: 1, .. }) => {}
            other => panic!("expected NegativeRate, got {other:?}"),
        }
    }

    #[test]
    fn defect_vanishes_for_transpose_destruction() {
        let p = RateMatrix::from_rows(&[vec![0.0, 3.2], vec![12.15, 0.0]]);
        assert_eq!(conservation_defect(&p), 0.0);
    }

    #[test]
    fn corrupted_destruction_has_defect() {
        let p = RateMatrix::from_rows(&[vec![0.0, 3.2], vec![12.15, 0.0]]);
        let mut d = p.transpose();
        d.set(0, 1, d.get(0, 1) + 0.5);
        assert!((conservation_defect_split(&p, &d) + 0.5).abs() < 1e-14);
    }
}
