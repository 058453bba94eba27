use rayon::prelude::*;

use super::boundary::{Boundaries, Boundary};
use super::flux::{lax_friedrichs_axis, physical_flux, wave_speed};
use super::mesh::{Face, Neighbor};
use super::{DgField, DgSpace};
use crate::chemistry::Eos;
use crate::Result;

/// Semi-discrete convection right-hand side at every node.
#[derive(Debug, Clone)]
pub struct Residual {
    pub increments: DgField,
    /// Global Lax–Friedrichs dissipation speed used for the fluxes.
    pub alpha: f64,
}

fn face_index(face: Face) -> usize {
    match face {
        Face::Left => 0,
        Face::Right => 1,
        Face::Bottom => 2,
        Face::Top => 3,
    }
}

fn opposite(face: Face) -> Face {
    match face {
        Face::Left => Face::Right,
        Face::Right => Face::Left,
        Face::Bottom => Face::Top,
        Face::Top => Face::Bottom,
    }
}

struct Geometry {
    dim: usize,
    n: usize,
    faces: usize,
    face_points: usize,
}

impl Geometry {
    fn of(space: &DgSpace) -> Self {
        let n = space.basis.nodes();
        if space.mesh.dim == 1 {
            Geometry { dim: 1, n, faces: 2, face_points: 1 }
        } else {
            Geometry { dim: 2, n, faces: 4, face_points: n }
        }
    }

    /// Node of the line through face point `q` with normal-direction index `l`.
    #[inline]
    fn node(&self, face: Face, q: usize, l: usize) -> usize {
        match (self.dim, face.axis()) {
            (1, _) => l,
            (_, 0) => q * self.n + l,
            _ => l * self.n + q,
        }
    }

    fn face_list(&self) -> &'static [Face] {
        if self.dim == 1 {
            &Face::ALL[..2]
        } else {
            &Face::ALL
        }
    }
}

/// Traces on every face of every cell: `[(cell·F + face)·P + q]·V + var`.
fn traces(space: &DgSpace, geo: &Geometry, field: &DgField) -> Vec<f64> {
    let nv = field.vars;
    let per_cell = geo.faces * geo.face_points * nv;
    let mut out = vec![0.0; field.cells * per_cell];
    out.par_chunks_mut(per_cell).enumerate().for_each(|(c, chunk)| {
        if space.mesh.is_solid(c) {
            return;
        }
        let cell = field.cell(c);
        for &face in geo.face_list() {
            let weights = match face {
                Face::Left | Face::Bottom => &space.basis.left,
                Face::Right | Face::Top => &space.basis.right,
            };
            for q in 0..geo.face_points {
                let base = (face_index(face) * geo.face_points + q) * nv;
                for (l, &w) in weights.iter().enumerate() {
                    let node = geo.node(face, q, l);
                    for v in 0..nv {
                        chunk[base + v] += w * cell[node * nv + v];
                    }
                }
            }
        }
    });
    out
}

/// `max(|u| + c)` over nodes, face traces and fixed boundary states.
fn global_alpha(space: &DgSpace, eos: &Eos, bc: &Boundaries, field: &DgField, tr: &[f64], per_cell: usize) -> Result<f64> {
    let layout = &space.layout;
    let nv = field.vars;
    let local = (0..field.cells)
        .into_par_iter()
        .filter(|&c| !space.mesh.is_solid(c))
        .map(|c| -> Result<f64> {
            let mut a: f64 = 0.0;
            for q in 0..field.nodes {
                a = a.max(wave_speed(eos, layout, field.node(c, q)).map_err(|e| e.at(format!("cell {c} node {q}")))?);
            }
            for t in tr[c * per_cell..(c + 1) * per_cell].chunks(nv) {
                a = a.max(wave_speed(eos, layout, t).map_err(|e| e.at(format!("cell {c} face trace")))?);
            }
            Ok(a)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    let mut alpha = local;
    for s in bc.fixed_states() {
        alpha = alpha.max(wave_speed(eos, layout, s).map_err(|e| e.at("boundary state"))?);
    }
    Ok(alpha)
}

/// Weak-form DG convection operator with Lax–Friedrichs fluxes and the
/// diagonal Gauss mass matrix.
pub fn convection_residual(space: &DgSpace, eos: &Eos, bc: &Boundaries, field: &DgField) -> Result<Residual> {
    let geo = Geometry::of(space);
    let layout = &space.layout;
    let nv = field.vars;
    let n = geo.n;
    let per_cell = geo.faces * geo.face_points * nv;
    let tr = traces(space, &geo, field);
    let alpha = global_alpha(space, eos, bc, field, &tr, per_cell)?;
    let periodic = bc.periodic();
    let basis = &space.basis;
    let w = &basis.gauss.weights;
    let spacing = [space.mesh.dx, space.mesh.dy];

    let mut increments = space.zeros();
    increments.data.par_chunks_mut(field.cell_len()).enumerate().try_for_each(|(c, inc)| -> Result<()> {
        if space.mesh.is_solid(c) {
            return Ok(());
        }
        let cell = field.cell(c);
        let mut flux = vec![0.0; field.cell_len()];
        // volume terms
        for axis in 0..geo.dim {
            for q in 0..field.nodes {
                physical_flux(eos, layout, &cell[q * nv..(q + 1) * nv], axis, &mut flux[q * nv..(q + 1) * nv])
                    .map_err(|e| e.at(format!("cell {c} node {q}")))?;
            }
            let scale = 1.0 / spacing[axis];
            for line in 0..field.nodes / n {
                for i in 0..n {
                    let target = line_node(geo.dim, axis, n, line, i);
                    let mass = w[i];
                    for m in 0..n {
                        let src = line_node(geo.dim, axis, n, line, m);
                        let coef = scale * w[m] * basis.deriv[m * n + i] / mass;
                        for v in 0..nv {
                            inc[target * nv + v] += coef * flux[src * nv + v];
                        }
                    }
                }
            }
        }
        // surface terms
        let mut other = vec![0.0; nv];
        let mut h = vec![0.0; nv];
        let mut scratch = vec![0.0; nv];
        for &face in geo.face_list() {
            let axis = face.axis();
            let fi = face_index(face);
            for q in 0..geo.face_points {
                let own = &tr[c * per_cell + (fi * geo.face_points + q) * nv..][..nv];
                match space.mesh.neighbor(c, face, periodic) {
                    Neighbor::Cell(nb) => {
                        let oi = face_index(opposite(face));
                        other.copy_from_slice(&tr[nb * per_cell + (oi * geo.face_points + q) * nv..][..nv]);
                    }
                    Neighbor::Boundary(f) => bc.get(f).ghost(layout, own, axis, &mut other),
                    Neighbor::Wall => Boundary::Reflective.ghost(layout, own, axis, &mut other),
                }
                let outward = matches!(face, Face::Right | Face::Top);
                let (l, r) = if outward { (own, &other[..]) } else { (&other[..], own) };
                lax_friedrichs_axis(eos, layout, l, r, axis, alpha, &mut scratch, &mut h)
                    .map_err(|e| e.at(format!("cell {c} {face:?} face")))?;
                let (trace_w, sign) = if outward { (&basis.right, -1.0) } else { (&basis.left, 1.0) };
                for i in 0..n {
                    let node = geo.node(face, q, i);
                    let coef = sign * trace_w[i] / (w[i] * spacing[axis]);
                    for v in 0..nv {
                        inc[node * nv + v] += coef * h[v];
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok(Residual { increments, alpha })
}

/// Node `i` along grid line `line` in direction `axis`.
#[inline]
fn line_node(dim: usize, axis: usize, n: usize, line: usize, i: usize) -> usize {
    match (dim, axis) {
        (1, _) => i,
        (_, 0) => line * n + i,
        _ => i * n + line,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{Mesh, Rect};
    use crate::state::{Layout, Primitive};

    fn eos() -> Eos {
        Eos::IdealOneStep { gamma: 1.4, heat_release: 0.0 }
    }

    #[test]
    fn constant_state_has_zero_residual() {
        let layout = Layout::new(2, 2);
        let mesh = Mesh::rectangle(Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }, 4, 3).unwrap();
        let space = DgSpace::new(mesh, 2, layout).unwrap();
        let prim = Primitive { density: 1.2, velocity: [0.3, -0.7], pressure: 2.0, fractions: vec![0.25, 0.75] };
        let u = eos().conserved(&layout, &prim).unwrap();
        let field = space.project(|_, _| u.clone()).unwrap();
        let res = convection_residual(&space, &eos(), &Boundaries::uniform(Boundary::Periodic), &field).unwrap();
        assert!(res.increments.data.iter().all(|v| v.abs() < 1e-12));
        let c = (1.4_f64 * 2.0 / 1.2).sqrt();
        assert!((res.alpha - ((0.09_f64 + 0.49).sqrt() + c)).abs() < 1e-14);
    }

    #[test]
    fn species_residuals_sum_to_density_residual() {
        let layout = Layout::new(2, 2);
        let mesh = Mesh::rectangle(Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }, 5, 5).unwrap();
        let space = DgSpace::new(mesh, 1, layout).unwrap();
        let e = eos();
        let field = space
            .project(|x, y| {
                let z = 0.5 + 0.4 * (6.0 * x).sin() * (4.0 * y).cos();
                let p = Primitive { density: 1.0 + 0.3 * x * y, velocity: [0.5, -0.2 + x], pressure: 1.0 + y, fractions: vec![z, 1.0 - z] };
                e.conserved(&layout, &p).unwrap()
            })
            .unwrap();
        let res = convection_residual(&space, &e, &Boundaries::uniform(Boundary::Outflow), &field).unwrap();
        for node in res.increments.data.chunks(layout.len()) {
            let sum: f64 = node[layout.species_range()].iter().sum();
            assert!((sum - node[0]).abs() <= 1e-12 * (1.0 + node[0].abs()));
        }
    }

    #[test]
    fn periodic_residual_conserves_totals() {
        let layout = Layout::new(1, 2);
        let space = DgSpace::new(Mesh::interval(0.0, 1.0, 16).unwrap(), 2, layout).unwrap();
        let e = eos();
        let field = space
            .project(|x, _| {
                let p = Primitive { density: 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).sin(), velocity: [1.0, 0.0], pressure: 1.0, fractions: vec![0.3, 0.7] };
                e.conserved(&layout, &p).unwrap()
            })
            .unwrap();
        let res = convection_residual(&space, &e, &Boundaries::uniform(Boundary::Periodic), &field).unwrap();
        for t in space.totals(&res.increments) {
            assert!(t.abs() < 1e-13);
        }
    }

    #[test]
    fn reflective_walls_conserve_mass() {
        let layout = Layout::new(2, 2);
        let ob = Rect { x0: 0.0, x1: 0.5, y0: 0.0, y1: 0.5 };
        let mesh = Mesh::with_obstacle(Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }, 4, 4, ob).unwrap();
        let space = DgSpace::new(mesh, 1, layout).unwrap();
        let e = eos();
        let field = space
            .project(|x, y| {
                let p = Primitive { density: 1.0 + x, velocity: [y - 0.5, 0.3], pressure: 1.0 + x * y, fractions: vec![0.2 + 0.5 * x, 0.8 - 0.5 * x] };
                e.conserved(&layout, &p).unwrap()
            })
            .unwrap();
        let res = convection_residual(&space, &e, &Boundaries::uniform(Boundary::Reflective), &field).unwrap();
        let totals = space.totals(&res.increments);
        assert!(totals[0].abs() < 1e-13);
        assert!(totals[layout.energy()].abs() < 1e-12);
    }
}
