use crate::chemistry::{Eos, Thermo};
use crate::state::Layout;
use crate::Result;

/// Euler flux along `axis`, written into `out`; returns the state's thermo.
pub fn physical_flux(eos: &Eos, layout: &Layout, u: &[f64], axis: usize, out: &mut [f64]) -> Result<Thermo> {
    let th = eos.flow_state(layout, u)?;
    let rho = u[Layout::DENSITY];
    let vel = u[layout.momentum(axis)] / rho;
    out[Layout::DENSITY] = u[layout.momentum(axis)];
    for b in 0..layout.dim {
        out[layout.momentum(b)] = u[layout.momentum(b)] * vel;
    }
    out[layout.momentum(axis)] += th.pressure;
    out[layout.energy()] = (u[layout.energy()] + th.pressure) * vel;
    for i in layout.species_range() {
        out[i] = u[i] * vel;
    }
    Ok(th)
}

/// `|u| + c`.
pub fn wave_speed(eos: &Eos, layout: &Layout, u: &[f64]) -> Result<f64> {
    let th = eos.flow_state(layout, u)?;
    Ok((layout.momentum_sq(u)).sqrt() / u[Layout::DENSITY] + th.sound_speed)
}

/// Flux through a face with normal `+axis`, `left` on the minus side.
pub(crate) fn lax_friedrichs_axis(
    eos: &Eos,
    layout: &Layout,
    left: &[f64],
    right: &[f64],
    axis: usize,
    alpha: f64,
    scratch: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    physical_flux(eos, layout, left, axis, out)?;
    physical_flux(eos, layout, right, axis, scratch)?;
    for v in 0..layout.len() {
        out[v] = 0.5 * (out[v] + scratch[v]) - 0.5 * alpha * (right[v] - left[v]);
    }
    Ok(())
}

/// `½[f(U₁)·ν + f(U₂)·ν − α(U₂ − U₁)]` for a unit normal `ν` pointing from
/// `U₁` to `U₂`.
pub fn lax_friedrichs_flux(
    eos: &Eos,
    layout: &Layout,
    u1: &[f64],
    u2: &[f64],
    normal: [f64; 2],
    alpha: f64,
) -> Result<Vec<f64>> {
    let n = layout.len();
    let mut out = vec![0.0; n];
    let mut f = vec![0.0; n];
    for axis in 0..layout.dim {
        if normal[axis] == 0.0 {
            continue;
        }
        for u in [u1, u2] {
            physical_flux(eos, layout, u, axis, &mut f)?;
            for v in 0..n {
                out[v] += 0.5 * normal[axis] * f[v];
            }
        }
    }
    for v in 0..n {
        out[v] -= 0.5 * alpha * (u2[v] - u1[v]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemistry::SpeciesTable;
    use crate::state::Primitive;

    fn one_step() -> (Eos, Layout) {
        (Eos::IdealOneStep { gamma: 1.4, heat_release: 0.0 }, Layout::new(1, 2))
    }

    #[test]
    fn consistency() {
        let (eos, layout) = one_step();
        let prim = Primitive { density: 1.3, velocity: [0.4, 0.0], pressure: 2.0, fractions: vec![0.3, 0.7] };
        let u = eos.conserved(&layout, &prim).unwrap();
        let h = lax_friedrichs_flux(&eos, &layout, &u, &u, [1.0, 0.0], 5.0).unwrap();
        let mut f = vec![0.0; layout.len()];
        physical_flux(&eos, &layout, &u, 0, &mut f).unwrap();
        assert_eq!(h, f);
    }

    #[test]
    fn pure_species_flux_equals_density_flux() {
        let eos = Eos::GeneralMultiSpecies(SpeciesTable::oxygen_dissociation());
        let layout = Layout::new(2, 3);
        let left = Primitive { density: 0.7, velocity: [1.0, -2.0], pressure: 5e4, fractions: vec![0.0, 1.0, 0.0] };
        let right = Primitive { density: 0.2, velocity: [-3.0, 0.5], pressure: 1e3, fractions: vec![0.0, 1.0, 0.0] };
        let u1 = eos.conserved(&layout, &left).unwrap();
        let u2 = eos.conserved(&layout, &right).unwrap();
        let h = lax_friedrichs_flux(&eos, &layout, &u1, &u2, [0.6, 0.8], 900.0).unwrap();
        assert!((h[layout.species_start() + 1] - h[0]).abs() <= 1e-15 * h[0].abs().max(1.0));
    }

    #[test]
    fn axis_flux_is_antisymmetric_under_swap() {
        let (eos, layout) = one_step();
        let a = eos.conserved(&layout, &Primitive { density: 1.0, velocity: [1.0, 0.0], pressure: 1.0, fractions: vec![1.0, 0.0] }).unwrap();
        let b = eos.conserved(&layout, &Primitive { density: 0.5, velocity: [-1.0, 0.0], pressure: 0.2, fractions: vec![0.4, 0.6] }).unwrap();
        let mut s = vec![0.0; 5];
        let mut h1 = vec![0.0; 5];
        lax_friedrichs_axis(&eos, &layout, &a, &b, 0, 3.0, &mut s, &mut h1).unwrap();
        let h2 = lax_friedrichs_flux(&eos, &layout, &b, &a, [-1.0, 0.0], 3.0).unwrap();
        for v in 0..5 {
            assert!((h1[v] + h2[v]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_negative_pressure() {
        let (eos, layout) = one_step();
        let u = [1.0, 0.0, -1.0, 1.0, 0.0];
        assert!(lax_friedrichs_flux(&eos, &layout, &u, &u, [1.0, 0.0], 1.0).is_err());
    }
}
