//! Nodal discontinuous Galerkin discretization on uniform Cartesian meshes.

pub mod boundary;
pub mod flux;
pub mod mesh;
pub mod quadrature;
pub mod residual;

pub use boundary::{Boundaries, Boundary};
pub use flux::{lax_friedrichs_flux, physical_flux, wave_speed};
pub use mesh::{Face, Mesh, Neighbor, Rect};
pub use quadrature::{gauss, gauss_lobatto, Basis, Rule};
pub use residual::{convection_residual, Residual};

use rayon::prelude::*;

use crate::state::Layout;
use crate::{Error, Result};

/// Point sets on which admissibility is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointSet {
    /// Tensor Gauss nodes.
    Gauss,
    /// Lobatto ⊗ Gauss ∪ Gauss ⊗ Lobatto (Lobatto points in 1D).
    Interface,
    /// Union of the two.
    All,
}

/// Evaluation operator from nodal values to the points of a [`PointSet`].
#[derive(Debug, Clone)]
pub struct PointOperator {
    /// Reference coordinates of each point (`y = 0` in 1D).
    pub points: Vec<[f64; 2]>,
    /// Row-major `points × nodes` interpolation matrix.
    pub matrix: Vec<f64>,
    pub nodes: usize,
}

impl PointOperator {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn row(&self, p: usize) -> &[f64] {
        &self.matrix[p * self.nodes..(p + 1) * self.nodes]
    }

    fn push(&mut self, point: [f64; 2], row: Vec<f64>) {
        let dup = self.points.iter().any(|q| (q[0] - point[0]).abs() < 1e-14 && (q[1] - point[1]).abs() < 1e-14);
        if !dup {
            self.points.push(point);
            self.matrix.extend(row);
        }
    }

    fn extend(&mut self, other: &PointOperator) {
        for p in 0..other.len() {
            self.push(other.points[p], other.row(p).to_vec());
        }
    }

    /// Value of variable `var` at every point of the set.
    pub fn apply(&self, cell: &[f64], vars: usize, var: usize, out: &mut Vec<f64>) {
        out.clear();
        for p in 0..self.len() {
            let row = self.row(p);
            out.push(row.iter().enumerate().map(|(l, w)| w * cell[l * vars + var]).sum());
        }
    }
}

/// Nodal values of all conserved variables; `data[(cell·N + node)·V + var]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DgField {
    pub cells: usize,
    pub nodes: usize,
    pub vars: usize,
    pub data: Vec<f64>,
}

impl DgField {
    pub fn zeros(cells: usize, nodes: usize, vars: usize) -> Self {
        DgField { cells, nodes, vars, data: vec![0.0; cells * nodes * vars] }
    }

    #[inline]
    pub fn cell_len(&self) -> usize {
        self.nodes * self.vars
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        let n = self.cell_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn cell_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.cell_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn node(&self, c: usize, q: usize) -> &[f64] {
        let start = (c * self.nodes + q) * self.vars;
        &self.data[start..start + self.vars]
    }

    pub fn node_mut(&mut self, c: usize, q: usize) -> &mut [f64] {
        let start = (c * self.nodes + q) * self.vars;
        &mut self.data[start..start + self.vars]
    }

    /// `self ← Σ w_k f_k`.
    pub fn combination(terms: &[(f64, &DgField)]) -> DgField {
        let first = terms[0].1;
        let mut out = DgField::zeros(first.cells, first.nodes, first.vars);
        out.data.par_iter_mut().enumerate().for_each(|(i, v)| {
            *v = terms.iter().map(|(w, f)| w * f.data[i]).sum();
        });
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Mesh, basis and variable layout of one discretization.
#[derive(Debug, Clone)]
pub struct DgSpace {
    pub mesh: Mesh,
    pub basis: Basis,
    pub layout: Layout,
    /// Tensor Gauss weight of each node, summing to one.
    pub node_weights: Vec<f64>,
    gauss_set: PointOperator,
    interface_set: PointOperator,
    all_set: PointOperator,
}

impl DgSpace {
    pub fn new(mesh: Mesh, degree: usize, layout: Layout) -> Result<Self> {
        if mesh.dim != layout.dim {
            return Err(Error::Config(format!("mesh is {}D, layout is {}D", mesh.dim, layout.dim)));
        }
        if degree > 8 {
            return Err(Error::Config(format!("polynomial degree {degree} is not supported")));
        }
        let basis = Basis::new(degree);
        let n = basis.nodes();
        let w = &basis.gauss.weights;
        let (node_weights, gauss_set, interface_set) = if mesh.dim == 1 {
            let mut gs = PointOperator { points: vec![], matrix: vec![], nodes: n };
            for (q, &x) in basis.gauss.points.iter().enumerate() {
                gs.push([x, 0.0], unit(n, q));
            }
            let mut is = PointOperator { points: vec![], matrix: vec![], nodes: n };
            for (p, &x) in basis.lobatto.points.iter().enumerate() {
                is.push([x, 0.0], basis.to_lobatto[p * n..(p + 1) * n].to_vec());
            }
            (w.clone(), gs, is)
        } else {
            let nn = n * n;
            let mut weights = vec![0.0; nn];
            let mut gs = PointOperator { points: vec![], matrix: vec![], nodes: nn };
            for j in 0..n {
                for i in 0..n {
                    weights[j * n + i] = w[i] * w[j];
                    gs.push([basis.gauss.points[i], basis.gauss.points[j]], unit(nn, j * n + i));
                }
            }
            let mut is = PointOperator { points: vec![], matrix: vec![], nodes: nn };
            let lob = &basis.lobatto.points;
            for j in 0..n {
                for (p, &x) in lob.iter().enumerate() {
                    let mut row = vec![0.0; nn];
                    for l in 0..n {
                        row[j * n + l] = basis.to_lobatto[p * n + l];
                    }
                    is.push([x, basis.gauss.points[j]], row);
                }
            }
            for i in 0..n {
                for (p, &y) in lob.iter().enumerate() {
                    let mut row = vec![0.0; nn];
                    for l in 0..n {
                        row[l * n + i] = basis.to_lobatto[p * n + l];
                    }
                    is.push([basis.gauss.points[i], y], row);
                }
            }
            (weights, gs, is)
        };
        let mut all_set = gauss_set.clone();
        all_set.extend(&interface_set);
        Ok(DgSpace { mesh, basis, layout, node_weights, gauss_set, interface_set, all_set })
    }

    #[inline]
    pub fn nodes_per_cell(&self) -> usize {
        self.node_weights.len()
    }

    pub fn zeros(&self) -> DgField {
        DgField::zeros(self.mesh.cells(), self.nodes_per_cell(), self.layout.len())
    }

    pub fn point_set(&self, set: PointSet) -> &PointOperator {
        match set {
            PointSet::Gauss => &self.gauss_set,
            PointSet::Interface => &self.interface_set,
            PointSet::All => &self.all_set,
        }
    }

    /// Physical position of node `q` of `cell`.
    pub fn node_position(&self, cell: usize, q: usize) -> (f64, f64) {
        let (x0, y0) = self.mesh.origin(cell);
        let g = &self.basis.gauss.points;
        if self.mesh.dim == 1 {
            (x0 + g[q] * self.mesh.dx, 0.0)
        } else {
            let n = self.basis.nodes();
            (x0 + g[q % n] * self.mesh.dx, y0 + g[q / n] * self.mesh.dy)
        }
    }

    /// Nodal interpolation of `f(x, y)`; solid cells receive `f` at their
    /// nodes as well, and are ignored by every operator.
    pub fn project(&self, f: impl Fn(f64, f64) -> Vec<f64> + Sync) -> Result<DgField> {
        let mut field = self.zeros();
        let vars = field.vars;
        field
            .data
            .par_chunks_mut(self.nodes_per_cell() * vars)
            .enumerate()
            .try_for_each(|(c, chunk)| {
                for q in 0..self.nodes_per_cell() {
                    let (x, y) = self.node_position(c, q);
                    let u = f(x, y);
                    if u.len() != vars {
                        return Err(Error::Config(format!("initial state has {} entries, expected {vars}", u.len())));
                    }
                    chunk[q * vars..(q + 1) * vars].copy_from_slice(&u);
                }
                Ok(())
            })?;
        Ok(field)
    }

    /// Gauss-weighted average of one cell.
    pub fn cell_average(&self, cell: &[f64], vars: usize) -> Vec<f64> {
        let mut avg = vec![0.0; vars];
        for (q, &w) in self.node_weights.iter().enumerate() {
            for (v, a) in avg.iter_mut().enumerate() {
                *a += w * cell[q * vars + v];
            }
        }
        avg
    }

    pub fn cell_averages(&self, field: &DgField) -> Vec<Vec<f64>> {
        (0..field.cells).into_par_iter().map(|c| self.cell_average(field.cell(c), field.vars)).collect()
    }

    /// `Σ_K |K| Ū_K` over fluid cells.
    pub fn totals(&self, field: &DgField) -> Vec<f64> {
        let measure = self.mesh.cell_measure();
        let mut total = vec![0.0; field.vars];
        for c in self.mesh.fluid_cells() {
            for (t, a) in total.iter_mut().zip(self.cell_average(field.cell(c), field.vars)) {
                *t += measure * a;
            }
        }
        total
    }

    /// Largest step with `α(Δt/Δx + Δt/Δy) ≤ safety·ŵ₁`.
    /// Positivity step `ŵ₁`, capped by the linear stability bound
    /// `1/(2k+1)` that is the tighter of the two for `k = 1`.
    pub fn cfl_dt(&self, alpha: f64, safety: f64) -> Result<f64> {
        let bound = self.basis.first_lobatto_weight().min(1.0 / (2 * self.basis.degree + 1) as f64);
        cfl_dt(alpha, &self.mesh, bound, safety)
    }
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

pub fn cfl_dt(alpha: f64, mesh: &Mesh, first_weight: f64, safety: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Config(format!("CFL step needs a positive wave speed, got α={alpha}")));
    }
    let inv = if mesh.dim == 1 { 1.0 / mesh.dx } else { 1.0 / mesh.dx + 1.0 / mesh.dy };
    Ok(safety * first_weight / (alpha * inv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space2(k: usize) -> DgSpace {
        let mesh = Mesh::rectangle(Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }, 10, 10).unwrap();
        DgSpace::new(mesh, k, Layout::new(2, 2)).unwrap()
    }

    #[test]
    fn cfl_examples() {
        let s = space2(2);
        assert!((s.cfl_dt(2.0, 1.0).unwrap() - 1.0 / 240.0).abs() < 1e-16);
        assert!((s.cfl_dt(4.0, 1.0).unwrap() - 1.0 / 480.0).abs() < 1e-16);
        let m = Mesh::interval(0.0, 1.0, 1).unwrap();
        assert_eq!(cfl_dt(1.0, &m, 0.5, 1.0).unwrap(), 0.5);
        assert!(matches!(s.cfl_dt(0.0, 1.0), Err(Error::Config(_))));
        let p1 = DgSpace::new(Mesh::interval(0.0, 1.0, 10).unwrap(), 1, Layout::new(1, 2)).unwrap();
        assert!((p1.cfl_dt(1.0, 1.0).unwrap() - 1.0 / 30.0).abs() < 1e-16);
    }

    #[test]
    fn point_set_sizes() {
        let s = space2(1);
        assert_eq!(s.point_set(PointSet::Gauss).len(), 4);
        assert_eq!(s.point_set(PointSet::Interface).len(), 8);
        assert_eq!(s.point_set(PointSet::All).len(), 12);
        // k = 2 shares the centre point between all three families
        let s = space2(2);
        assert_eq!(s.point_set(PointSet::Interface).len(), 17);
        assert_eq!(s.point_set(PointSet::All).len(), 21);
    }

    #[test]
    fn linear_field_average_is_midpoint() {
        let s = space2(1);
        let f = s.project(|x, y| vec![1.0 + x, y, 3.0, 2.0 * x, 1.0 - x, 0.0]).unwrap();
        let avg = s.cell_average(f.cell(0), f.vars);
        assert!((avg[0] - 1.05).abs() < 1e-15);
        assert!((avg[1] - 0.05).abs() < 1e-15);
        assert!((avg[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn interface_values_interpolate_polynomials() {
        let s = space2(2);
        let f = |x: f64, y: f64| x * x * y - 2.0 * y * y + x;
        let field = s.project(|x, y| vec![f(x, y), 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let op = s.point_set(PointSet::All);
        let mut vals = Vec::new();
        op.apply(field.cell(0), field.vars, 0, &mut vals);
        for (p, v) in op.points.iter().zip(&vals) {
            let (x, y) = (p[0] * 0.1, p[1] * 0.1);
            assert!((v - f(x, y)).abs() < 1e-14);
        }
    }
}
