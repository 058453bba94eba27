use serde::{Deserialize, Serialize};

use super::mesh::Face;
use crate::state::Layout;
use crate::{Error, Result};

/// Ghost-state rule on one domain edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Boundary {
    /// Mirror the normal momentum.
    Reflective,
    /// Copy the interior trace.
    Outflow,
    /// Fixed conserved state.
    Dirichlet { state: Vec<f64> },
    /// Wrap to the opposite edge; must be set on both edges of an axis.
    Periodic,
}

impl Boundary {
    pub fn ghost(&self, layout: &Layout, interior: &[f64], axis: usize, out: &mut [f64]) {
        match self {
            Boundary::Reflective => {
                out.copy_from_slice(interior);
                out[layout.momentum(axis)] = -interior[layout.momentum(axis)];
            }
            Boundary::Outflow | Boundary::Periodic => out.copy_from_slice(interior),
            Boundary::Dirichlet { state } => out.copy_from_slice(state),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundaries {
    pub left: Boundary,
    pub right: Boundary,
    #[serde(default = "outflow")]
    pub bottom: Boundary,
    #[serde(default = "outflow")]
    pub top: Boundary,
}

fn outflow() -> Boundary {
    Boundary::Outflow
}

impl Boundaries {
    pub fn uniform(b: Boundary) -> Self {
        Boundaries { left: b.clone(), right: b.clone(), bottom: b.clone(), top: b }
    }

    pub fn get(&self, face: Face) -> &Boundary {
        match face {
            Face::Left => &self.left,
            Face::Right => &self.right,
            Face::Bottom => &self.bottom,
            Face::Top => &self.top,
        }
    }

    pub fn periodic(&self) -> [bool; 2] {
        [self.left == Boundary::Periodic, self.bottom == Boundary::Periodic]
    }

    pub fn validate(&self, layout: &Layout) -> Result<()> {
        let pairs: &[(&Boundary, &Boundary, &str)] = if layout.dim == 1 {
            &[(&self.left, &self.right, "x")]
        } else {
            &[(&self.left, &self.right, "x"), (&self.bottom, &self.top, "y")]
        };
        for (a, b, axis) in pairs {
            if (**a == Boundary::Periodic) != (**b == Boundary::Periodic) {
                return Err(Error::Config(format!("periodic boundary on only one {axis} edge")));
            }
        }
        for face in Face::ALL {
            if let Boundary::Dirichlet { state } = self.get(face) {
                if state.len() != layout.len() {
                    return Err(Error::Config(format!(
                        "Dirichlet state on {face:?} has {} entries, expected {}",
                        state.len(),
                        layout.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Dirichlet states, which enter the global wave speed.
    pub fn fixed_states(&self) -> impl Iterator<Item = &[f64]> {
        Face::ALL.into_iter().filter_map(|f| match self.get(f) {
            Boundary::Dirichlet { state } => Some(state.as_slice()),
            _ => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghost_rules() {
        let layout = Layout::new(2, 1);
        let u = [1.0, 2.0, 3.0, 4.0, 1.0];
        let mut g = [0.0; 5];
        Boundary::Reflective.ghost(&layout, &u, 0, &mut g);
        assert_eq!(g, [1.0, -2.0, 3.0, 4.0, 1.0]);
        Boundary::Reflective.ghost(&layout, &u, 1, &mut g);
        assert_eq!(g, [1.0, 2.0, -3.0, 4.0, 1.0]);
        Boundary::Outflow.ghost(&layout, &u, 0, &mut g);
        assert_eq!(g, u);
        let fixed = vec![11.0, 67.98, 0.0, 970.0, 11.0];
        Boundary::Dirichlet { state: fixed.clone() }.ghost(&layout, &u, 0, &mut g);
        assert_eq!(g.to_vec(), fixed);
    }

    #[test]
    fn one_sided_periodic_is_rejected() {
        let mut b = Boundaries::uniform(Boundary::Periodic);
        b.right = Boundary::Outflow;
        assert!(b.validate(&Layout::new(1, 1)).is_err());
        assert!(Boundaries::uniform(Boundary::Periodic).validate(&Layout::new(2, 1)).is_ok());
    }
}
