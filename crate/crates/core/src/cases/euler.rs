//! Flow test problems: the oxygen dissociation shock tube, the 2D blast
//! convergence problem and detonation diffraction around a corner.

use serde::{Deserialize, Serialize};

use crate::chemistry::{DissociationRates, Eos, Mechanism, SpeciesTable};
use crate::dg::{Boundaries, Boundary, DgField, DgSpace, Mesh, Rect};
use crate::solver::{Problem, SchemeConfig};
use crate::state::{Layout, Primitive};
use crate::{Error, Result};

/// A ready-to-run flow problem.
pub struct Setup {
    pub problem: Problem,
    pub initial: DgField,
    pub scheme: SchemeConfig,
    pub t_final: f64,
    /// Time between stored snapshots; `0` keeps only the first and last.
    pub snapshot_interval: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShockTube {
    pub cells: usize,
    pub degree: usize,
    pub domain: [f64; 2],
    pub interface: f64,
    pub t_final: f64,
    /// Partial densities of O, O₂, N₂.
    pub left_densities: [f64; 3],
    pub right_densities: [f64; 3],
    pub left_pressure: f64,
    pub right_pressure: f64,
    pub boundary: Boundary,
    pub rates: DissociationRates,
    pub scheme: SchemeConfig,
    pub snapshot_interval: f64,
}

impl Default for ShockTube {
    fn default() -> Self {
        ShockTube {
            cells: 200,
            degree: 1,
            domain: [0.0, 1.0],
            interface: 0.5,
            t_final: 1e-4,
            left_densities: [5.251896311257204e-5, 3.748071704863518e-5, 2.962489471973072e-4],
            right_densities: [8.341661837019181e-8, 9.455418692098664e-11, 2.748909430004963e-7],
            left_pressure: 1000.0,
            right_pressure: 1.0,
            boundary: Boundary::Outflow,
            rates: DissociationRates::default(),
            scheme: SchemeConfig::default(),
            snapshot_interval: 2.5e-5,
        }
    }
}

fn at_rest(densities: [f64; 3], pressure: f64) -> Primitive {
    let rho: f64 = densities.iter().sum();
    Primitive { density: rho, velocity: [0.0; 2], pressure, fractions: densities.iter().map(|c| c / rho).collect() }
}

impl ShockTube {
    pub fn build(&self) -> Result<Setup> {
        let layout = Layout::new(1, 3);
        let eos = Eos::GeneralMultiSpecies(SpeciesTable::oxygen_dissociation());
        let mesh = Mesh::interval(self.domain[0], self.domain[1], self.cells)?;
        let space = DgSpace::new(mesh, self.degree, layout)?;
        let left = eos.conserved(&layout, &at_rest(self.left_densities, self.left_pressure))?;
        let right = eos.conserved(&layout, &at_rest(self.right_densities, self.right_pressure))?;
        let initial = space.project(|x, _| if x < self.interface { left.clone() } else { right.clone() })?;
        let mut bc = Boundaries::uniform(self.boundary.clone());
        bc.bottom = Boundary::Outflow;
        bc.top = Boundary::Outflow;
        let problem = Problem { space, eos, mechanism: Mechanism::Dissociation(self.rates.clone()), bc };
        Ok(Setup { problem, initial, scheme: self.scheme.clone(), t_final: self.t_final, snapshot_interval: self.snapshot_interval })
    }
}

/// Parameters of the one-step detonation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneStepModel {
    pub gamma: f64,
    pub heat_release: f64,
    pub activation_temperature: f64,
    pub rate: f64,
}

impl Default for OneStepModel {
    fn default() -> Self {
        OneStepModel { gamma: 1.2, heat_release: 50.0, activation_temperature: 50.0, rate: 2566.4 }
    }
}

impl OneStepModel {
    fn eos(&self) -> Eos {
        Eos::IdealOneStep { gamma: self.gamma, heat_release: self.heat_release }
    }

    fn mechanism(&self) -> Mechanism {
        Mechanism::OneStep { rate: self.rate, activation_temperature: self.activation_temperature }
    }
}

/// `(ρ, u, v, p, Y)` with `Y` the reactant fraction.
fn reactive(state: [f64; 5]) -> Primitive {
    let [rho, u, v, p, y] = state;
    Primitive { density: rho, velocity: [u, v], pressure: p, fractions: vec![y, 1.0 - y] }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Blast {
    pub cells_per_unit: usize,
    pub degree: usize,
    pub size: f64,
    pub radius: f64,
    /// `(ρ, u, v, p, Y)` inside and outside the circle.
    pub inside: [f64; 5],
    pub outside: [f64; 5],
    pub t_final: f64,
    pub model: OneStepModel,
    pub scheme: SchemeConfig,
    pub snapshot_interval: f64,
}

impl Default for Blast {
    fn default() -> Self {
        Blast {
            cells_per_unit: 60,
            degree: 1,
            size: 2.0,
            radius: 0.6,
            inside: [1.0, 0.0, 0.0, 80.0, 0.0],
            outside: [1.0, 0.0, 0.0, 1e-9, 1.0],
            t_final: 0.2,
            model: OneStepModel::default(),
            scheme: SchemeConfig::default(),
            snapshot_interval: 0.05,
        }
    }
}

impl Blast {
    /// Full-resolution mesh (`Δx = 1/120`).
    pub fn full_scale(&mut self) {
        self.cells_per_unit = 120;
    }

    pub fn build(&self) -> Result<Setup> {
        let layout = Layout::new(2, 2);
        let eos = self.model.eos();
        let n = cells(self.cells_per_unit, self.size)?;
        let mesh = Mesh::rectangle(Rect { x0: 0.0, x1: self.size, y0: 0.0, y1: self.size }, n, n)?;
        let space = DgSpace::new(mesh, self.degree, layout)?;
        let inside = eos.conserved(&layout, &reactive(self.inside))?;
        let outside = eos.conserved(&layout, &reactive(self.outside))?;
        let r2 = self.radius * self.radius;
        let initial = space.project(|x, y| if x * x + y * y <= r2 { inside.clone() } else { outside.clone() })?;
        let bc = Boundaries {
            left: Boundary::Reflective,
            bottom: Boundary::Reflective,
            right: Boundary::Outflow,
            top: Boundary::Outflow,
        };
        let problem = Problem { space, eos, mechanism: self.model.mechanism(), bc };
        Ok(Setup { problem, initial, scheme: self.scheme.clone(), t_final: self.t_final, snapshot_interval: self.snapshot_interval })
    }
}

fn cells(per_unit: usize, length: f64) -> Result<usize> {
    let n = per_unit as f64 * length;
    if per_unit == 0 || (n - n.round()).abs() > 1e-9 {
        return Err(Error::Config(format!("{per_unit} cells per unit do not tile a length of {length}")));
    }
    Ok(n.round() as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Diffraction {
    pub cells_per_unit: usize,
    pub degree: usize,
    pub size: f64,
    /// Solid step in the lower left corner.
    pub obstacle: Rect,
    pub interface: f64,
    /// `(ρ, u, v, E, Y)` behind the detonation, also the inflow state.
    pub left: [f64; 5],
    /// `(ρ, u, v, E, Y)` ahead of it.
    pub right: [f64; 5],
    pub t_final: f64,
    pub model: OneStepModel,
    pub scheme: SchemeConfig,
    pub snapshot_interval: f64,
}

impl Default for Diffraction {
    fn default() -> Self {
        Diffraction {
            cells_per_unit: 24,
            degree: 1,
            size: 5.0,
            obstacle: Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 2.0 },
            interface: 0.5,
            left: [11.0, 6.18, 0.0, 970.0, 1.0],
            right: [1.0, 0.0, 0.0, 55.0, 1.0],
            t_final: 0.3,
            model: OneStepModel::default(),
            scheme: SchemeConfig::default(),
            snapshot_interval: 0.075,
        }
    }
}

impl Diffraction {
    /// Full-resolution mesh (`Δx = 1/48`) and final time `0.6`.
    pub fn full_scale(&mut self) {
        self.cells_per_unit = 48;
        self.t_final = 0.6;
    }

    fn conserved(eos: &Eos, layout: &Layout, state: [f64; 5]) -> Result<Vec<f64>> {
        let [rho, u, v, e, y] = state;
        let prim = Primitive { density: rho, velocity: [u, v], pressure: f64::NAN, fractions: vec![y, 1.0 - y] };
        let w = eos.conserved_with_energy(layout, &prim, e)?;
        eos.thermo(layout, &w).map_err(|err| err.at(format!("state {state:?}")))?;
        Ok(w)
    }

    pub fn build(&self) -> Result<Setup> {
        let layout = Layout::new(2, 2);
        let eos = self.model.eos();
        let n = cells(self.cells_per_unit, self.size)?;
        let domain = Rect { x0: 0.0, x1: self.size, y0: 0.0, y1: self.size };
        let mesh = Mesh::with_obstacle(domain, n, n, self.obstacle)?;
        let space = DgSpace::new(mesh, self.degree, layout)?;
        let left = Self::conserved(&eos, &layout, self.left)?;
        let right = Self::conserved(&eos, &layout, self.right)?;
        let initial = space.project(|x, _| if x < self.interface { left.clone() } else { right.clone() })?;
        let bc = Boundaries {
            left: Boundary::Dirichlet { state: left },
            right: Boundary::Reflective,
            bottom: Boundary::Reflective,
            top: Boundary::Reflective,
        };
        let problem = Problem { space, eos, mechanism: self.model.mechanism(), bc };
        Ok(Setup { problem, initial, scheme: self.scheme.clone(), t_final: self.t_final, snapshot_interval: self.snapshot_interval })
    }
}

/// Smooth periodic contact wave: constant velocity and pressure, density
/// and reactant fraction advected unchanged. Inert, with the one-step EOS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactWave {
    pub dim: usize,
    pub cells: usize,
    pub degree: usize,
    pub velocity: [f64; 2],
    pub pressure: f64,
    pub gamma: f64,
    pub t_final: f64,
    pub scheme: SchemeConfig,
}

impl Default for ContactWave {
    fn default() -> Self {
        ContactWave {
            dim: 1,
            cells: 20,
            degree: 1,
            velocity: [1.0, 0.5],
            pressure: 1.0,
            gamma: 1.4,
            t_final: 0.5,
            scheme: SchemeConfig::default(),
        }
    }
}

impl ContactWave {
    fn phase(&self, x: f64, y: f64, t: f64) -> f64 {
        let tau = 2.0 * std::f64::consts::PI;
        let sx = x - self.velocity[0] * t;
        if self.dim == 1 {
            (tau * sx).sin()
        } else {
            (tau * sx).sin() * (tau * (y - self.velocity[1] * t)).cos()
        }
    }

    /// Exact density at `(x, y, t)` on the unit period.
    pub fn density(&self, x: f64, y: f64, t: f64) -> f64 {
        1.0 + 0.5 * self.phase(x, y, t)
    }

    pub fn primitive(&self, x: f64, y: f64, t: f64) -> Primitive {
        let z = 0.5 + 0.3 * self.phase(x + 0.25, y, t);
        let velocity = if self.dim == 1 { [self.velocity[0], 0.0] } else { self.velocity };
        Primitive { density: self.density(x, y, t), velocity, pressure: self.pressure, fractions: vec![z, 1.0 - z] }
    }

    pub fn build(&self) -> Result<Setup> {
        let layout = Layout::new(self.dim, 2);
        let eos = Eos::IdealOneStep { gamma: self.gamma, heat_release: 0.0 };
        let mesh = match self.dim {
            1 => Mesh::interval(0.0, 1.0, self.cells)?,
            2 => Mesh::rectangle(Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }, self.cells, self.cells)?,
            d => return Err(Error::Config(format!("contact wave needs dim 1 or 2, got {d}"))),
        };
        let space = DgSpace::new(mesh, self.degree, layout)?;
        let initial = space.project(|x, y| eos.conserved(&layout, &self.primitive(x, y, 0.0)).expect("admissible wave"))?;
        let problem =
            Problem { space, eos, mechanism: Mechanism::Inert { species: 2 }, bc: Boundaries::uniform(Boundary::Periodic) };
        Ok(Setup { problem, initial, scheme: self.scheme.clone(), t_final: self.t_final, snapshot_interval: 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shock_tube_states() {
        let s = ShockTube { cells: 10, ..Default::default() }.build().unwrap();
        let eos = &s.problem.eos;
        let layout = s.problem.space.layout;
        let th = eos.thermo(&layout, s.initial.node(0, 0)).unwrap();
        assert!((th.pressure - 1000.0).abs() < 1e-9);
        let th = eos.thermo(&layout, s.initial.node(9, 1)).unwrap();
        assert!((th.pressure - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diffraction_inflow_and_obstacle() {
        let s = Diffraction { cells_per_unit: 2, ..Default::default() }.build().unwrap();
        match &s.problem.bc.left {
            Boundary::Dirichlet { state } => {
                assert_eq!(state[0], 11.0);
                assert!((state[1] - 67.98).abs() < 1e-12);
                assert_eq!(state[2], 0.0);
                assert_eq!(state[3], 970.0);
                assert_eq!(state[4], 11.0);
            }
            other => panic!("{other:?}"),
        }
        let mesh = &s.problem.space.mesh;
        assert!(mesh.is_solid(0));
        assert!(!mesh.is_solid(mesh.index(0, 4)));
    }

    #[test]
    fn low_energy_reading_is_inadmissible() {
        let d = Diffraction { cells_per_unit: 2, right: [1.0, 0.0, 0.0, 5.5, 1.0], ..Default::default() };
        assert!(matches!(d.build(), Err(Error::Admissibility { .. })));
    }

    #[test]
    fn blast_tiles() {
        let s = Blast { cells_per_unit: 5, ..Default::default() }.build().unwrap();
        assert_eq!(s.problem.space.mesh.cells(), 100);
        assert!(Blast { cells_per_unit: 5, size: 2.1, ..Default::default() }.build().is_err());
    }
}
