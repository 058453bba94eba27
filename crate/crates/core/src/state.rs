//! Layout of the conserved variable vector.
//!
//! `[ρ, m_1..m_dim, E, c_1..c_M]` with `c_i` the partial densities. Every
//! species is evolved; `Σ c_i = ρ` is an identity of the scheme, not an
//! extra constraint.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub dim: usize,
    pub species: usize,
}

impl Layout {
    pub fn new(dim: usize, species: usize) -> Self {
        assert!(dim == 1 || dim == 2, "only 1D and 2D are supported");
        Layout { dim, species }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dim + 2 + self.species
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub const DENSITY: usize = 0;

    #[inline]
    pub fn momentum(&self, axis: usize) -> usize {
        1 + axis
    }

    #[inline]
    pub fn energy(&self) -> usize {
        self.dim + 1
    }

    #[inline]
    pub fn species_start(&self) -> usize {
        self.dim + 2
    }

    #[inline]
    pub fn species_range(&self) -> std::ops::Range<usize> {
        self.species_start()..self.len()
    }

    pub fn density(&self, u: &[f64]) -> f64 {
        u[Self::DENSITY]
    }

    pub fn species<'a>(&self, u: &'a [f64]) -> &'a [f64] {
        &u[self.species_range()]
    }

    /// `|m|²`.
    pub fn momentum_sq(&self, u: &[f64]) -> f64 {
        (0..self.dim).map(|a| u[self.momentum(a)].powi(2)).sum()
    }

    /// `½|m|²/ρ`.
    pub fn kinetic_energy(&self, u: &[f64]) -> f64 {
        0.5 * self.momentum_sq(u) / u[Self::DENSITY]
    }

    pub fn velocity(&self, u: &[f64], axis: usize) -> f64 {
        u[self.momentum(axis)] / u[Self::DENSITY]
    }

    pub fn names(&self) -> Vec<String> {
        let mut v = vec!["rho".to_string()];
        for a in ["mx", "my"].iter().take(self.dim) {
            v.push(a.to_string());
        }
        v.push("E".into());
        for i in 0..self.species {
            v.push(format!("c{}", i + 1));
        }
        v
    }
}

/// Flow-facing description of one state, used for I/O and initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub density: f64,
    pub velocity: [f64; 2],
    pub pressure: f64,
    /// Mass fractions, summing to one.
    pub fractions: Vec<f64>,
}
