use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Uniform Cartesian mesh; `ny = 1` in 1D. Cells whose centre lies inside
/// `obstacle` are solid and bounded by reflective walls.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub dim: usize,
    pub domain: Rect,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    solid: Vec<bool>,
}

/// Neighbour across a cell face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Cell(usize),
    /// Domain boundary; the index is the [`Face`].
    Boundary(Face),
    /// Face shared with a solid cell.
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    Left,
    Right,
    Bottom,
    Top,
}

impl Face {
    pub const ALL: [Face; 4] = [Face::Left, Face::Right, Face::Bottom, Face::Top];

    pub fn axis(self) -> usize {
        match self {
            Face::Left | Face::Right => 0,
            Face::Bottom | Face::Top => 1,
        }
    }
}

impl Mesh {
    pub fn interval(a: f64, b: f64, cells: usize) -> Result<Self> {
        Self::build(1, Rect { x0: a, x1: b, y0: 0.0, y1: 1.0 }, cells, 1, None)
    }

    pub fn rectangle(domain: Rect, nx: usize, ny: usize) -> Result<Self> {
        Self::build(2, domain, nx, ny, None)
    }

    pub fn with_obstacle(domain: Rect, nx: usize, ny: usize, obstacle: Rect) -> Result<Self> {
        Self::build(2, domain, nx, ny, Some(obstacle))
    }

    fn build(dim: usize, domain: Rect, nx: usize, ny: usize, obstacle: Option<Rect>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config(format!("mesh needs at least one cell, got {nx}×{ny}")));
        }
        if !(domain.x1 > domain.x0) || !(domain.y1 > domain.y0) {
            return Err(Error::Config(format!("degenerate domain {domain:?}")));
        }
        let dx = (domain.x1 - domain.x0) / nx as f64;
        let dy = (domain.y1 - domain.y0) / ny as f64;
        let mut mesh = Mesh { dim, domain, nx, ny, dx, dy, solid: vec![false; nx * ny] };
        if let Some(ob) = obstacle {
            for c in 0..mesh.cells() {
                let (x, y) = mesh.center(c);
                mesh.solid[c] = ob.contains(x, y);
            }
            if mesh.solid.iter().all(|&s| s) {
                return Err(Error::Config("obstacle covers the whole domain".into()));
            }
        }
        Ok(mesh)
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    #[inline]
    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    pub fn is_solid(&self, cell: usize) -> bool {
        self.solid[cell]
    }

    pub fn fluid_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.cells()).filter(|&c| !self.solid[c])
    }

    /// Lower-left corner.
    pub fn origin(&self, cell: usize) -> (f64, f64) {
        let (ix, iy) = self.coords(cell);
        (self.domain.x0 + ix as f64 * self.dx, self.domain.y0 + iy as f64 * self.dy)
    }

    pub fn center(&self, cell: usize) -> (f64, f64) {
        let (x, y) = self.origin(cell);
        (x + 0.5 * self.dx, y + 0.5 * self.dy)
    }

    /// `|K|`; in 1D the cell length.
    pub fn cell_measure(&self) -> f64 {
        if self.dim == 1 {
            self.dx
        } else {
            self.dx * self.dy
        }
    }

    pub fn neighbor(&self, cell: usize, face: Face, periodic: [bool; 2]) -> Neighbor {
        let (ix, iy) = self.coords(cell);
        let target = match face {
            Face::Left if ix > 0 => Some(self.index(ix - 1, iy)),
            Face::Left if periodic[0] => Some(self.index(self.nx - 1, iy)),
            Face::Right if ix + 1 < self.nx => Some(self.index(ix + 1, iy)),
            Face::Right if periodic[0] => Some(self.index(0, iy)),
            Face::Bottom if iy > 0 => Some(self.index(ix, iy - 1)),
            Face::Bottom if periodic[1] => Some(self.index(ix, self.ny - 1)),
            Face::Top if iy + 1 < self.ny => Some(self.index(ix, iy + 1)),
            Face::Top if periodic[1] => Some(self.index(ix, 0)),
            _ => None,
        };
        match target {
            Some(n) if self.solid[n] => Neighbor::Wall,
            Some(n) => Neighbor::Cell(n),
            None => Neighbor::Boundary(face),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_tile_the_domain() {
        let m = Mesh::rectangle(Rect { x0: 0.0, x1: 2.0, y0: -1.0, y1: 1.0 }, 4, 8).unwrap();
        assert_eq!(m.cells(), 32);
        assert_eq!(m.dx, 0.5);
        assert_eq!(m.dy, 0.25);
        let (x, y) = m.origin(m.index(3, 7));
        assert_eq!((x + m.dx, y + m.dy), (2.0, 1.0));
    }

    #[test]
    fn neighbors_and_walls() {
        let ob = Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
        let m = Mesh::with_obstacle(Rect { x0: 0.0, x1: 2.0, y0: 0.0, y1: 2.0 }, 2, 2, ob).unwrap();
        assert!(m.is_solid(0));
        assert_eq!(m.neighbor(1, Face::Left, [false; 2]), Neighbor::Wall);
        assert_eq!(m.neighbor(1, Face::Top, [false; 2]), Neighbor::Cell(3));
        assert_eq!(m.neighbor(1, Face::Right, [false; 2]), Neighbor::Boundary(Face::Right));
        assert_eq!(m.neighbor(1, Face::Right, [true, false]), Neighbor::Wall);
        assert_eq!(m.neighbor(3, Face::Right, [true, false]), Neighbor::Cell(2));
    }

    #[test]
    fn rejects_empty_mesh() {
        assert!(Mesh::interval(0.0, 1.0, 0).is_err());
        assert!(Mesh::interval(1.0, 1.0, 3).is_err());
    }
}
