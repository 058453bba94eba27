//! Equations of state and reaction mechanisms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pds::{ContextualRates, RateMatrix};
use crate::state::{Layout, Primitive};

/// Relative size of a negative partial density still read as round-off.
pub const SPECIES_ROUNDOFF: f64 = 1e-14;

/// Universal gas constant, J/(mol·K).
pub const GAS_CONSTANT: f64 = 8.31447215;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub name: String,
    /// kg/mol
    pub molar_mass: f64,
    /// Heat capacity coefficient `C_i`, J/(kg·K); internal energy is `C_i T`.
    pub heat_capacity: f64,
    /// Enthalpy of formation, J/kg.
    pub formation_energy: f64,
}

impl Species {
    /// Species with `C = 3R/(2M)` (monoatomic) or `C = 5R/(2M)` (diatomic).
    pub fn ideal(name: &str, molar_mass: f64, diatomic: bool, formation_energy: f64) -> Self {
        let dof = if diatomic { 5.0 } else { 3.0 };
        Species {
            name: name.to_string(),
            molar_mass,
            heat_capacity: dof * GAS_CONSTANT / (2.0 * molar_mass),
            formation_energy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesTable {
    pub species: Vec<Species>,
}

impl SpeciesTable {
    /// O, O₂, N₂.
    pub fn oxygen_dissociation() -> Self {
        SpeciesTable {
            species: vec![
                Species::ideal("O", 0.016, false, 1.558e7),
                Species::ideal("O2", 0.032, true, 0.0),
                Species::ideal("N2", 0.028, true, 0.0),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.species.is_empty() {
            return Err(Error::Config("species table is empty".into()));
        }
        for s in &self.species {
            if !(s.molar_mass > 0.0 && s.heat_capacity > 0.0) {
                return Err(Error::Config(format!("species {}: molar mass and heat capacity must be positive", s.name)));
            }
        }
        Ok(())
    }
}

/// Thermodynamic closure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Eos {
    /// `p = RT Σ c_i/M_i`, `E = Σ c_i C_i T + Σ c_i q_i + ½ρ|u|²`.
    GeneralMultiSpecies(SpeciesTable),
    /// Two species `[reactant, product]`, `p = (γ−1)(E − ½ρ|u|² − q c_reactant)`,
    /// `T = p/ρ`.
    IdealOneStep { gamma: f64, heat_release: f64 },
}

/// Derived thermodynamic quantities of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thermo {
    pub pressure: f64,
    pub temperature: f64,
    pub sound_speed: f64,
    /// `E − ½ρ|u|² − Σ c_i q_i`, per unit volume.
    pub internal_energy: f64,
}

impl Eos {
    pub fn species_count(&self) -> usize {
        match self {
            Eos::GeneralMultiSpecies(t) => t.species.len(),
            Eos::IdealOneStep { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Eos::GeneralMultiSpecies(t) => t.validate(),
            Eos::IdealOneStep { gamma, heat_release } => {
                if !(*gamma > 1.0) || !heat_release.is_finite() {
                    return Err(Error::Config(format!("one-step EOS needs γ > 1, got γ={gamma}, q={heat_release}")));
                }
                Ok(())
            }
        }
    }

    fn formation_energy(&self, species: &[f64]) -> f64 {
        match self {
            Eos::GeneralMultiSpecies(t) => {
                t.species.iter().zip(species).map(|(s, c)| s.formation_energy * c).sum()
            }
            Eos::IdealOneStep { heat_release, .. } => heat_release * species[0],
        }
    }

    /// `E − ½|m|²/ρ − Σ c_i q_i`; concave in the conserved variables and of
    /// the same sign as the pressure.
    pub fn internal_energy(&self, layout: &Layout, u: &[f64]) -> f64 {
        u[layout.energy()] - layout.kinetic_energy(u) - self.formation_energy(layout.species(u))
    }

    /// Pressure, temperature and sound speed; fails outside the admissible set.
    pub fn thermo(&self, layout: &Layout, u: &[f64]) -> Result<Thermo> {
        self.thermo_within(layout, u, 0.0)
    }

    /// As [`Eos::thermo`], with partial densities above `-SPECIES_ROUNDOFF·max(ρ, scale)`
    /// accepted as round-off. `scale` is the density magnitude of the
    /// polynomial the point was interpolated from.
    pub fn thermo_within(&self, layout: &Layout, u: &[f64], scale: f64) -> Result<Thermo> {
        let rho = u[Layout::DENSITY];
        let floor = -SPECIES_ROUNDOFF * rho.max(scale);
        if let Some(c) = layout.species(u).iter().find(|c| !(**c >= floor)) {
            return Err(Error::admissibility(format!("partial density {c:e}")));
        }
        self.flow_state(layout, u)
    }

    /// Thermodynamic state needing only `ρ > 0` and positive internal
    /// energy, which is all the flux requires.
    pub fn flow_state(&self, layout: &Layout, u: &[f64]) -> Result<Thermo> {
        let rho = u[Layout::DENSITY];
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::admissibility(format!("density {rho:e}")));
        }
        let e = self.internal_energy(layout, u);
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::admissibility(format!("internal energy {e:e}")));
        }
        Ok(self.thermo_unchecked(layout.species(u), rho, e))
    }

    fn thermo_unchecked(&self, species: &[f64], rho: f64, e: f64) -> Thermo {
        match self {
            Eos::GeneralMultiSpecies(t) => {
                let (mut heat, mut moles) = (0.0, 0.0);
                for (s, &c) in t.species.iter().zip(species) {
                    heat += c * s.heat_capacity;
                    moles += c / s.molar_mass;
                }
                let temperature = e / heat;
                let pressure = GAS_CONSTANT * temperature * moles;
                let gamma = 1.0 + pressure / (temperature * heat);
                Thermo { pressure, temperature, sound_speed: (gamma * pressure / rho).sqrt(), internal_energy: e }
            }
            Eos::IdealOneStep { gamma, .. } => {
                let pressure = (gamma - 1.0) * e;
                Thermo {
                    pressure,
                    temperature: pressure / rho,
                    sound_speed: (gamma * pressure / rho).sqrt(),
                    internal_energy: e,
                }
            }
        }
    }

    /// Conserved vector from density, velocity, pressure and mass fractions.
    pub fn conserved(&self, layout: &Layout, prim: &Primitive) -> Result<Vec<f64>> {
        let species: Vec<f64> = prim.fractions.iter().map(|z| prim.density * z).collect();
        let e = match self {
            Eos::GeneralMultiSpecies(t) => {
                let (mut heat, mut moles) = (0.0, 0.0);
                for (s, &c) in t.species.iter().zip(&species) {
                    heat += c * s.heat_capacity;
                    moles += c / s.molar_mass;
                }
                heat * prim.pressure / (GAS_CONSTANT * moles)
            }
            Eos::IdealOneStep { gamma, .. } => prim.pressure / (gamma - 1.0),
        };
        let total = e + self.formation_energy(&species) + 0.5 * prim.density * kinetic(prim, layout.dim);
        self.assemble(layout, prim, &species, total)
    }

    /// Conserved vector when the total energy is given directly.
    pub fn conserved_with_energy(&self, layout: &Layout, prim: &Primitive, energy: f64) -> Result<Vec<f64>> {
        let species: Vec<f64> = prim.fractions.iter().map(|z| prim.density * z).collect();
        self.assemble(layout, prim, &species, energy)
    }

    fn assemble(&self, layout: &Layout, prim: &Primitive, species: &[f64], energy: f64) -> Result<Vec<f64>> {
        if species.len() != layout.species || species.len() != self.species_count() {
            return Err(Error::Config(format!(
                "{} mass fractions given, model has {} species",
                species.len(),
                self.species_count()
            )));
        }
        let mut u = vec![0.0; layout.len()];
        u[Layout::DENSITY] = prim.density;
        for a in 0..layout.dim {
            u[layout.momentum(a)] = prim.density * prim.velocity[a];
        }
        u[layout.energy()] = energy;
        u[layout.species_range()].copy_from_slice(species);
        Ok(u)
    }
}

fn kinetic(prim: &Primitive, dim: usize) -> f64 {
    prim.velocity.iter().take(dim).map(|v| v * v).sum()
}

/// Source-term chemistry, expressed as a production matrix on the partial
/// densities given the temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mechanism {
    /// No reactions.
    Inert { species: usize },
    /// `O₂ + M ⇌ 2O + M` with an Arrhenius forward rate and a fitted
    /// equilibrium constant.
    Dissociation(DissociationRates),
    /// Irreversible `reactant → product` at `K ρY exp(−T_act/T)`.
    OneStep { rate: f64, activation_temperature: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissociationRates {
    pub prefactor: f64,
    pub activation_temperature: f64,
    pub equilibrium: [f64; 5],
    pub molar_masses: [f64; 3],
}

impl Default for DissociationRates {
    fn default() -> Self {
        DissociationRates {
            prefactor: 2.9e17,
            activation_temperature: 59750.0,
            equilibrium: [2.855, 0.988, -6.181, -0.023, -0.001],
            molar_masses: [0.016, 0.032, 0.028],
        }
    }
}

impl DissociationRates {
    /// `k_f = C T⁻² exp(−E/T)`.
    pub fn forward(&self, temperature: f64) -> f64 {
        self.prefactor * temperature.powi(-2) * (-self.activation_temperature / temperature).exp()
    }

    /// Equilibrium constant `exp(b₁ + b₂ ln z + b₃ z + b₄ z² + b₅ z³)`, `z = 10⁴/T`.
    pub fn equilibrium_constant(&self, temperature: f64) -> f64 {
        let z = 1.0e4 / temperature;
        let b = &self.equilibrium;
        (b[0] + b[1] * z.ln() + b[2] * z + b[3] * z * z + b[4] * z * z * z).exp()
    }

    pub fn backward(&self, temperature: f64) -> f64 {
        self.forward(temperature) / self.equilibrium_constant(temperature)
    }

    /// `(ω₊, ω₋)`: mass rate of O produced by dissociation and consumed by
    /// recombination.
    pub fn split(&self, c: &[f64], temperature: f64) -> (f64, f64) {
        let m = &self.molar_masses;
        let third_body: f64 = c.iter().zip(m).map(|(c, m)| c / m).sum();
        let scale = 2.0 * m[0] * third_body;
        let plus = scale * self.forward(temperature) * c[1] / m[1];
        let minus = scale * self.backward(temperature) * (c[0] / m[0]).powi(2);
        (plus, minus)
    }
}

impl Mechanism {
    pub fn species_count(&self) -> usize {
        match self {
            Mechanism::Inert { species } => *species,
            Mechanism::Dissociation(_) => 3,
            Mechanism::OneStep { .. } => 2,
        }
    }

    pub fn is_inert(&self) -> bool {
        matches!(self, Mechanism::Inert { .. })
    }
}

impl ContextualRates<f64> for Mechanism {
    fn species_count(&self) -> usize {
        Mechanism::species_count(self)
    }

    /// `ctx` is the temperature.
    fn production_in(&self, c: &[f64], temperature: &f64, out: &mut RateMatrix) {
        let t = *temperature;
        if !(t > 0.0) {
            return;
        }
        match self {
            Mechanism::Inert { .. } => {}
            Mechanism::Dissociation(r) => {
                let (plus, minus) = r.split(c, t);
                // O from O₂ and O₂ from O
                if c[1] > 0.0 {
                    out.set(0, 1, plus);
                }
                if c[0] > 0.0 {
                    out.set(1, 0, minus);
                }
            }
            Mechanism::OneStep { rate, activation_temperature } => {
                if c[0] > 0.0 {
                    // exp underflows to exactly zero in cold regions
                    out.set(1, 0, rate * c[0] * (-activation_temperature / t).exp());
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pds::{conservation_defect, ProductionDestruction, WithContext};

    const LEFT: [f64; 3] = [5.251896311257204e-5, 3.748071704863518e-5, 2.962489471973072e-4];
    const RIGHT: [f64; 3] = [8.341661837019181e-8, 9.455418692098664e-11, 2.748909430004963e-7];

    fn air_state(c: [f64; 3], p: f64) -> (Eos, Layout, Vec<f64>) {
        let eos = Eos::GeneralMultiSpecies(SpeciesTable::oxygen_dissociation());
        let layout = Layout::new(1, 3);
        let rho: f64 = c.iter().sum();
        let prim = Primitive {
            density: rho,
            velocity: [0.0; 2],
            pressure: p,
            fractions: c.iter().map(|x| x / rho).collect(),
        };
        let u = eos.conserved(&layout, &prim).unwrap();
        (eos, layout, u)
    }

    #[test]
    fn single_species_temperature_is_definition() {
        let table = SpeciesTable {
            species: vec![Species { name: "X".into(), molar_mass: 1.0, heat_capacity: 1.0, formation_energy: 0.0 }],
        };
        let eos = Eos::GeneralMultiSpecies(table);
        let layout = Layout::new(1, 1);
        let u = vec![1.0, 0.0, 300.0, 1.0];
        assert!((eos.thermo(&layout, &u).unwrap().temperature - 300.0).abs() < 1e-12);
    }

    #[test]
    fn diatomic_gamma_is_seven_fifths() {
        let eos = Eos::GeneralMultiSpecies(SpeciesTable { species: vec![Species::ideal("N2", 0.028, true, 0.0)] });
        let layout = Layout::new(1, 1);
        let prim = Primitive { density: 1.0, velocity: [0.0; 2], pressure: 1.0e5, fractions: vec![1.0] };
        let u = eos.conserved(&layout, &prim).unwrap();
        let th = eos.thermo(&layout, &u).unwrap();
        let gamma = th.sound_speed.powi(2) * 1.0 / th.pressure;
        assert!((gamma - 1.4).abs() < 1e-12);
    }

    #[test]
    fn one_step_pressure_and_sound_speed() {
        let eos = Eos::IdealOneStep { gamma: 1.2, heat_release: 50.0 };
        let layout = Layout::new(2, 2);
        let u = vec![1.0, 0.0, 0.0, 25.0, 0.0, 1.0];
        let th = eos.thermo(&layout, &u).unwrap();
        assert!((th.pressure - 5.0).abs() < 1e-13);
        assert!((th.sound_speed - 6.0f64.sqrt()).abs() < 1e-13);
        assert!((th.temperature - 5.0).abs() < 1e-13);
    }

    #[test]
    fn cold_one_step_state_is_inert() {
        let eos = Eos::IdealOneStep { gamma: 1.2, heat_release: 50.0 };
        let layout = Layout::new(2, 2);
        let prim = Primitive { density: 1.0, velocity: [0.0; 2], pressure: 1e-9, fractions: vec![1.0, 0.0] };
        let u = eos.conserved(&layout, &prim).unwrap();
        let th = eos.thermo(&layout, &u).unwrap();
        // E − qρY cancels about seven digits
        assert!((th.temperature - 1e-9).abs() < 1e-14);
        let mech = Mechanism::OneStep { rate: 2566.4, activation_temperature: 50.0 };
        let sys = WithContext { rates: &mech, context: &th.temperature };
        let r = sys.rates(layout.species(&u));
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn pressure_round_trips_for_air_states() {
        for (c, p) in [(LEFT, 1000.0), (RIGHT, 1.0)] {
            let (eos, layout, u) = air_state(c, p);
            let th = eos.thermo(&layout, &u).unwrap();
            assert!((th.pressure - p).abs() / p < 1e-10);
        }
    }

    #[test]
    fn air_states_are_hot_and_near_equilibrium() {
        let rates = DissociationRates::default();
        for (c, p) in [(LEFT, 1000.0), (RIGHT, 1.0)] {
            let (eos, layout, u) = air_state(c, p);
            let t = eos.thermo(&layout, &u).unwrap().temperature;
            assert!((t - 8000.0).abs() < 1.0, "T = {t}");
            let (plus, minus) = rates.split(&c, t);
            assert!(((plus - minus) / plus).abs() < 1e-2);
        }
    }

    #[test]
    fn dissociation_matches_scalar_formula() {
        let r = DissociationRates::default();
        let t = 8000.0_f64;
        let kf = 2.9e17 / (t * t) * (-59750.0 / t).exp();
        let z = 1.0e4 / t;
        let keq = (2.855 + 0.988 * z.ln() - 6.181 * z - 0.023 * z * z - 0.001 * z.powi(3)).exp();
        let c = LEFT;
        let sum = c[0] / 0.016 + c[1] / 0.032 + c[2] / 0.028;
        let plus = 2.0 * 0.016 * kf * c[1] / 0.032 * sum;
        let minus = 2.0 * 0.016 * kf / keq * (c[0] / 0.016).powi(2) * sum;
        let (p, m) = r.split(&c, t);
        assert!(((p - plus) / plus).abs() < 1e-13);
        assert!(((m - minus) / minus).abs() < 1e-13);
    }

    #[test]
    fn absent_species_are_not_destroyed() {
        let mech = Mechanism::Dissociation(DissociationRates::default());
        let t = 8000.0;
        let sys = WithContext { rates: &mech, context: &t };
        let r = sys.rates(&[0.0, 1e-4, 1e-4]);
        assert_eq!(r.get(1, 0), 0.0);
        assert!(r.get(0, 1) > 0.0);
        assert_eq!(conservation_defect(&r), 0.0);
        let one = Mechanism::OneStep { rate: 2566.4, activation_temperature: 50.0 };
        let sys = WithContext { rates: &one, context: &t };
        assert_eq!(sys.rates(&[0.0, 1.0]).max_abs(), 0.0);
    }

    #[test]
    fn negative_internal_energy_is_inadmissible() {
        let eos = Eos::IdealOneStep { gamma: 1.2, heat_release: 50.0 };
        let layout = Layout::new(2, 2);
        // E = 5.5 with the reactant fully unburnt
        let u = vec![1.0, 0.0, 0.0, 5.5, 1.0, 0.0];
        assert!(matches!(eos.thermo(&layout, &u), Err(Error::Admissibility { .. })));
    }
}
