//! The two ODE test problems.

use crate::pds::{ProductionDestruction, RateMatrix};

/// `c₁' = c₂ − a c₁`, `c₂' = a c₁ − c₂`.
#[derive(Debug, Clone, Copy)]
pub struct LinearExchange {
    pub a: f64,
}

impl ProductionDestruction for LinearExchange {
    fn species_count(&self) -> usize {
        2
    }

    fn production(&self, c: &[f64], out: &mut RateMatrix) {
        out.set(0, 1, c[1]);
        out.set(1, 0, self.a * c[0]);
    }
}

impl LinearExchange {
    /// Closed-form solution from `c0` at time `t`.
    pub fn exact(&self, c0: [f64; 2], t: f64) -> [f64; 2] {
        let total = c0[0] + c0[1];
        let c1_inf = total / (self.a + 1.0);
        let b = c0[0] / c1_inf - 1.0;
        let c1 = (1.0 + b * (-(self.a + 1.0) * t).exp()) * c1_inf;
        [c1, total - c1]
    }
}

/// Three species chain `c₁ → c₂ → c₃` with a Michaelis–Menten first step.
#[derive(Debug, Clone, Copy)]
pub struct NonlinearChain {
    pub a: f64,
}

impl ProductionDestruction for NonlinearChain {
    fn species_count(&self) -> usize {
        3
    }

    fn production(&self, c: &[f64], out: &mut RateMatrix) {
        out.set(1, 0, c[0] * c[1] / (c[0] + 1.0));
        out.set(2, 1, self.a * c[1]);
    }
}

/// Convection increment `(c₁c₂c₃, c₃/c₂, c₂²c₃²)` of the nonlinear problem.
pub fn nonlinear_convection(c: &[f64]) -> Vec<f64> {
    vec![c[0] * c[1] * c[2], c[2] / c[1], c[1] * c[1] * c[2] * c[2]]
}

pub const LINEAR_C0: [f64; 2] = [4.5, 3.2];
pub const LINEAR_A: f64 = 2.7;
pub const NONLINEAR_C0: [f64; 3] = [9.98, 0.01, 0.01];
pub const NONLINEAR_A: f64 = 1.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_solution_at_final_time() {
        let sys = LinearExchange { a: LINEAR_A };
        let c1_inf: f64 = 7.7 / 3.7;
        let b = 4.5 / c1_inf - 1.0;
        assert!((b - 1.16233766).abs() < 1e-8);
        let e = sys.exact(LINEAR_C0, 1.0);
        assert!((e[0] - (1.0 + b * (-3.7f64).exp()) * c1_inf).abs() < 1e-15);
        assert!((e[0] + e[1] - 7.7).abs() < 1e-14);
        assert_eq!(sys.exact(LINEAR_C0, 0.0), LINEAR_C0);
    }
}
