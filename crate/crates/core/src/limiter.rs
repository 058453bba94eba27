//! Average-preserving bound limiter.
//!
//! Each cell polynomial is pulled toward its cell average until density,
//! partial densities and internal energy are admissible on a point set.
//! Nodal values are scaled directly: the point values are linear in them.

use rayon::prelude::*;
use serde::Serialize;

use crate::chemistry::Eos;
use crate::dg::{DgField, DgSpace, PointOperator, PointSet};
use crate::state::Layout;
use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-13;

/// Scalings below this distance from one are treated as no-ops, so an
/// already limited cell is left bit-for-bit unchanged.
const NO_OP: f64 = 1e-12;

/// Partial-density and internal-energy floors in units of their rounding
/// error; later rescalings re-interpolate the nodes and may lose that much.
const ROUNDOFF_FLOOR: f64 = 64.0;

/// Scaling factors applied to one cell; `1` means untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellReport {
    pub theta_density: f64,
    pub theta_fraction: f64,
    pub theta_pressure: f64,
    pub pressure_passes: u8,
    pub collapsed: bool,
}

impl Default for CellReport {
    fn default() -> Self {
        CellReport { theta_density: 1.0, theta_fraction: 1.0, theta_pressure: 1.0, pressure_passes: 0, collapsed: false }
    }
}

impl CellReport {
    pub fn touched(&self) -> bool {
        self.collapsed || self.theta_density < 1.0 || self.theta_fraction < 1.0 || self.theta_pressure < 1.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LimiterReport {
    pub cells: Vec<CellReport>,
}

impl LimiterReport {
    pub fn touched(&self) -> usize {
        self.cells.iter().filter(|c| c.touched()).count()
    }

    pub fn density_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.theta_density < 1.0).count()
    }

    pub fn fraction_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.theta_fraction < 1.0).count()
    }

    pub fn pressure_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.theta_pressure < 1.0).count()
    }

    pub fn collapsed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.collapsed).count()
    }

    pub fn min_theta(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.theta_density.min(c.theta_fraction).min(c.theta_pressure))
            .fold(1.0, f64::min)
    }
}

/// Checks that a cell average lies in the admissible set.
pub fn check_average(eos: &Eos, layout: &Layout, avg: &[f64]) -> Result<()> {
    let rho = avg[Layout::DENSITY];
    if !(rho > 0.0) || !avg.iter().all(|v| v.is_finite()) {
        return Err(Error::admissibility(format!("cell-average density {rho:e}")));
    }
    for (i, &c) in layout.species(avg).iter().enumerate() {
        if c < -1e-12 * rho {
            return Err(Error::admissibility(format!("cell-average partial density {} = {c:e}", i + 1)));
        }
    }
    let e = eos.internal_energy(layout, avg);
    if !(e > 0.0) {
        return Err(Error::admissibility(format!("cell-average internal energy {e:e}")));
    }
    Ok(())
}

fn scale_about(cell: &mut [f64], avg: &[f64], vars: &[usize], nv: usize, theta: f64) {
    for node in cell.chunks_mut(nv) {
        for &v in vars {
            node[v] = theta * (node[v] - avg[v]) + avg[v];
        }
    }
}

/// All variables at point `p` of `op`.
fn eval_point(op: &PointOperator, p: usize, cell: &[f64], out: &mut [f64]) {
    let nv = out.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for (l, &w) in op.row(p).iter().enumerate() {
        if w != 0.0 {
            for (v, o) in out.iter_mut().enumerate() {
                *o += w * cell[l * nv + v];
            }
        }
    }
}

fn collapse(cell: &mut [f64], avg: &[f64]) {
    for node in cell.chunks_mut(avg.len()) {
        node.copy_from_slice(avg);
    }
}

/// Resolution of the internal energy of the nodes: it is a difference of
/// the total, kinetic and formation energies, so its rounding error scales
/// with their magnitudes rather than with its own.
fn energy_roundoff(eos: &Eos, layout: &Layout, cell: &[f64]) -> f64 {
    let magnitude = cell
        .chunks(layout.len())
        .map(|u| {
            let (total, kinetic) = (u[layout.energy()], layout.kinetic_energy(u).abs());
            let formation = total - kinetic - eos.internal_energy(layout, u);
            total.abs() + kinetic + formation.abs()
        })
        .fold(0.0, f64::max);
    ROUNDOFF_FLOOR * f64::EPSILON * magnitude
}

/// Limits one cell in place.
pub fn limit_cell(space: &DgSpace, eos: &Eos, cell: &mut [f64], set: PointSet, epsilon: f64) -> Result<CellReport> {
    let layout = &space.layout;
    let nv = layout.len();
    let op = space.point_set(set);
    let mut avg = space.cell_average(cell, nv);
    check_average(eos, layout, &avg)?;
    // averages that round below zero are absent species
    for i in layout.species_range() {
        if avg[i] < 0.0 {
            cell.chunks_mut(nv).for_each(|node| node[i] = 0.0);
            avg[i] = 0.0;
        }
    }
    let mut report = CellReport::default();
    let rho_bar = avg[Layout::DENSITY];
    if rho_bar <= epsilon {
        collapse(cell, &avg);
        report.collapsed = true;
        return Ok(report);
    }

    // density, with every partial density scaled alike
    let mut rho = Vec::with_capacity(op.len());
    op.apply(cell, nv, Layout::DENSITY, &mut rho);
    let rho_min = rho.iter().copied().fold(f64::INFINITY, f64::min);
    if rho_min < epsilon {
        let theta = ((rho_bar - epsilon) / (rho_bar - rho_min)).clamp(0.0, 1.0);
        if theta < 1.0 - NO_OP {
            let vars: Vec<usize> = std::iter::once(Layout::DENSITY).chain(layout.species_range()).collect();
            scale_about(cell, &avg, &vars, nv, theta);
            report.theta_density = theta;
            op.apply(cell, nv, Layout::DENSITY, &mut rho);
        }
    }

    // partial densities, pushed toward the average-fraction profile c̄ᵢρ/ρ̄
    let (mut theta, mut negative) = (1.0_f64, false);
    let mut c = Vec::with_capacity(op.len());
    let resolution = ROUNDOFF_FLOOR * f64::EPSILON * cell.chunks(nv).map(|u| u[Layout::DENSITY].abs()).fold(0.0, f64::max);
    for i in layout.species_range() {
        op.apply(cell, nv, i, &mut c);
        let ratio = avg[i].max(0.0) / rho_bar;
        for (&cp, &rp) in c.iter().zip(&rho) {
            let target = ratio * rp;
            let floor = resolution.min(0.5 * target);
            if cp < floor {
                theta = theta.min((target - floor) / (target - cp));
                negative |= cp < 0.0;
            }
        }
    }
    if theta < 1.0 - NO_OP || negative {
        let theta = theta.max(0.0);
        for node in cell.chunks_mut(nv) {
            let r = node[Layout::DENSITY];
            for i in layout.species_range() {
                let target = avg[i] / rho_bar * r;
                node[i] = theta * (node[i] - target) + target;
            }
        }
        report.theta_fraction = theta;
    }

    // internal energy, which has the sign of the pressure and is concave
    let e_bar = eos.internal_energy(layout, &avg);
    let floor = epsilon.max(energy_roundoff(eos, layout, cell)).min(0.5 * e_bar);
    let all: Vec<usize> = (0..nv).collect();
    let mut point = vec![0.0; nv];
    for pass in 0..3u8 {
        let mut theta = 1.0_f64;
        for p in 0..op.len() {
            eval_point(op, p, cell, &mut point);
            let e = eos.internal_energy(layout, &point);
            if !(e >= floor) {
                let t = if e.is_finite() { (e_bar - floor) / (e_bar - e) } else { 0.0 };
                theta = theta.min(t.clamp(0.0, 1.0));
            }
        }
        if theta >= 1.0 - NO_OP {
            return Ok(report);
        }
        scale_about(cell, &avg, &all, nv, theta);
        report.theta_pressure *= theta;
        report.pressure_passes = pass + 1;
    }
    // one more check; concavity makes this unreachable in exact arithmetic
    let bad = (0..op.len()).any(|p| {
        eval_point(op, p, cell, &mut point);
        !(eos.internal_energy(layout, &point) > 0.0)
    });
    if bad {
        collapse(cell, &avg);
        report.collapsed = true;
    }
    Ok(report)
}

/// Limits every fluid cell of `field` on `set`.
pub fn limit_field(space: &DgSpace, eos: &Eos, field: &mut DgField, set: PointSet, epsilon: f64) -> Result<LimiterReport> {
    let len = field.cell_len();
    let cells = field
        .data
        .par_chunks_mut(len)
        .enumerate()
        .map(|(c, cell)| {
            if space.mesh.is_solid(c) {
                Ok(CellReport::default())
            } else {
                limit_cell(space, eos, cell, set, epsilon).map_err(|e| e.at(format!("cell {c}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimiterReport { cells })
}

/// Extremes over the checked points of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointBounds {
    pub min_density: f64,
    pub min_pressure: f64,
    pub min_partial_density: f64,
    pub min_fraction: f64,
    pub max_fraction: f64,
}

impl PointBounds {
    pub const EMPTY: PointBounds = PointBounds {
        min_density: f64::INFINITY,
        min_pressure: f64::INFINITY,
        min_partial_density: f64::INFINITY,
        min_fraction: f64::INFINITY,
        max_fraction: f64::NEG_INFINITY,
    };

    pub fn merge(self, o: PointBounds) -> PointBounds {
        PointBounds {
            min_density: self.min_density.min(o.min_density),
            min_pressure: self.min_pressure.min(o.min_pressure),
            min_partial_density: self.min_partial_density.min(o.min_partial_density),
            min_fraction: self.min_fraction.min(o.min_fraction),
            max_fraction: self.max_fraction.max(o.max_fraction),
        }
    }
}

/// Admissibility of every point of `set` in every fluid cell: `ρ > 0`,
/// `cᵢ ≥ 0` up to round-off, positive internal energy.
pub fn check_field(space: &DgSpace, eos: &Eos, field: &DgField, set: PointSet) -> Result<PointBounds> {
    let layout = &space.layout;
    let nv = layout.len();
    let op = space.point_set(set);
    (0..field.cells)
        .into_par_iter()
        .filter(|&c| !space.mesh.is_solid(c))
        .map(|c| -> Result<PointBounds> {
            let cell = field.cell(c);
            let mut b = PointBounds::EMPTY;
            let mut u = vec![0.0; nv];
            let scale = space.cell_average(cell, nv)[Layout::DENSITY];
            for p in 0..op.len() {
                eval_point(op, p, cell, &mut u);
                let th = eos.thermo_within(layout, &u, scale).map_err(|e| e.at(format!("cell {c} point {p}")))?;
                let rho = u[Layout::DENSITY];
                b.min_density = b.min_density.min(rho);
                b.min_pressure = b.min_pressure.min(th.pressure);
                for &ci in layout.species(&u) {
                    b.min_partial_density = b.min_partial_density.min(ci);
                    b.min_fraction = b.min_fraction.min(ci / rho);
                    b.max_fraction = b.max_fraction.max(ci / rho);
                }
            }
            Ok(b)
        })
        .try_reduce(|| PointBounds::EMPTY, |a, b| Ok(a.merge(b)))
}
