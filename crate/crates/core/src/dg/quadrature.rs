//! Gauss and Gauss–Lobatto rules on the unit interval and the nodal
//! Lagrange basis built on the Gauss points.

/// Points in `[0, 1]` (ascending) with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre polynomial `P_n(x)` and its derivative on `[-1, 1]`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = if (x * x - 1.0).abs() < 1e-300 {
        0.5 * (n * (n + 1)) as f64 * x.powi(n as i32 + 1)
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

fn to_unit(mut nodes: Vec<(f64, f64)>) -> Rule {
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        points: nodes.iter().map(|(x, _)| 0.5 * (x + 1.0)).collect(),
        weights: nodes.iter().map(|(_, w)| 0.5 * w).collect(),
    }
}

/// `n`-point Gauss–Legendre rule, exact for degree `2n − 1`.
pub fn gauss(n: usize) -> Rule {
    assert!(n >= 1, "Gauss rule needs at least one point");
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    to_unit(nodes)
}

/// `n`-point Gauss–Lobatto rule (endpoints included), exact for degree
/// `2n − 3`.
pub fn gauss_lobatto(n: usize) -> Rule {
    assert!(n >= 2, "Gauss–Lobatto rule needs at least two points");
    let m = n - 1;
    let w_end = 2.0 / (n * m) as f64;
    let mut nodes = vec![(-1.0, w_end), (1.0, w_end)];
    // interior nodes are the roots of P'_{n-1}
    for i in 1..m {
        let mut x = -(std::f64::consts::PI * i as f64 / m as f64).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(m, x);
            // second derivative from the Legendre equation
            let d2p = (2.0 * x * dp - (m * (m + 1)) as f64 * p) / (1.0 - x * x);
            let dx = dp / d2p;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (p, _) = legendre(m, x);
        nodes.push((x, w_end / (p * p)));
    }
    to_unit(nodes)
}

/// Number of Lobatto points for degree `k`: the smallest `n` with both
/// `2n − 1 ≥ k` and `2n − 3 ≥ k`.
pub fn lobatto_count(degree: usize) -> usize {
    let a = (degree + 1).div_ceil(2);
    let b = (degree + 3).div_ceil(2);
    a.max(b).max(2)
}

/// Lagrange basis on the Gauss points of degree `k`.
#[derive(Debug, Clone)]
pub struct Basis {
    pub degree: usize,
    pub gauss: Rule,
    pub lobatto: Rule,
    /// `deriv[q * n + l] = φ_l'(x_q)`.
    pub deriv: Vec<f64>,
    /// `φ_l(0)` and `φ_l(1)`.
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// `to_lobatto[p * n + l] = φ_l(x̂_p)`.
    pub to_lobatto: Vec<f64>,
}

impl Basis {
    pub fn new(degree: usize) -> Self {
        let gauss = gauss(degree + 1);
        let lobatto = gauss_lobatto(lobatto_count(degree));
        let n = degree + 1;
        let mut deriv = vec![0.0; n * n];
        for q in 0..n {
            for l in 0..n {
                deriv[q * n + l] = lagrange_derivative(&gauss.points, l, gauss.points[q]);
            }
        }
        let left = (0..n).map(|l| lagrange(&gauss.points, l, 0.0)).collect();
        let right = (0..n).map(|l| lagrange(&gauss.points, l, 1.0)).collect();
        let mut to_lobatto = vec![0.0; lobatto.points.len() * n];
        for (p, &x) in lobatto.points.iter().enumerate() {
            for l in 0..n {
                to_lobatto[p * n + l] = lagrange(&gauss.points, l, x);
            }
        }
        Basis { degree, gauss, lobatto, deriv, left, right, to_lobatto }
    }

    #[inline]
    pub fn nodes(&self) -> usize {
        self.degree + 1
    }

    /// First normalized Lobatto weight, the CFL factor.
    pub fn first_lobatto_weight(&self) -> f64 {
        self.lobatto.weights[0]
    }

    /// Values `φ_l(x)` for all `l`.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        (0..self.nodes()).map(|l| lagrange(&self.gauss.points, l, x)).collect()
    }
}

pub fn lagrange(nodes: &[f64], l: usize, x: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != l)
        .map(|(_, &xm)| (x - xm) / (nodes[l] - xm))
        .product()
}

pub fn lagrange_derivative(nodes: &[f64], l: usize, x: f64) -> f64 {
    let mut total = 0.0;
    for (j, &xj) in nodes.iter().enumerate() {
        if j == l {
            continue;
        }
        let mut term = 1.0 / (nodes[l] - xj);
        for (m, &xm) in nodes.iter().enumerate() {
            if m != l && m != j {
                term *= (x - xm) / (nodes[l] - xm);
            }
        }
        total += term;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(rule: &Rule, f: impl Fn(f64) -> f64) -> f64 {
        rule.points.iter().zip(&rule.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    #[test]
    fn two_point_lobatto() {
        let r = gauss_lobatto(2);
        assert_eq!(r.points, vec![0.0, 1.0]);
        assert_eq!(r.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn three_point_lobatto() {
        let r = gauss_lobatto(3);
        for (a, b) in r.points.iter().zip([0.0, 0.5, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in r.weights.iter().zip([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn two_point_gauss_integrates_cubic() {
        assert!((integrate(&gauss(2), |x| x.powi(3)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exactness_degrees() {
        for n in 1..=6 {
            let g = gauss(n);
            let deg = 2 * n - 1;
            assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!((integrate(&g, |x| x.powi(deg as i32)) - 1.0 / (deg + 1) as f64).abs() < 1e-14);
            if n >= 2 {
                let l = gauss_lobatto(n);
                let deg = 2 * n - 3;
                assert!((l.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                assert!((integrate(&l, |x| x.powi(deg as i32)) - 1.0 / (deg + 1) as f64).abs() < 1e-14);
                assert!(l.weights.iter().all(|&w| w > 0.0));
            }
        }
    }

    #[test]
    fn lobatto_counts() {
        assert_eq!(lobatto_count(1), 2);
        assert_eq!(lobatto_count(2), 3);
        assert_eq!(lobatto_count(3), 3);
        assert_eq!(lobatto_count(4), 4);
        assert_eq!(Basis::new(1).first_lobatto_weight(), 0.5);
        assert!((Basis::new(2).first_lobatto_weight() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn basis_is_cardinal_and_reproduces_polynomials() {
        let b = Basis::new(2);
        for (q, &x) in b.gauss.points.iter().enumerate() {
            let v = b.eval(x);
            for (l, &vl) in v.iter().enumerate() {
                assert!((vl - if l == q { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let f = |x: f64| 3.0 * x * x - x + 2.0;
        let df = |x: f64| 6.0 * x - 1.0;
        let vals: Vec<f64> = b.gauss.points.iter().map(|&x| f(x)).collect();
        let n = b.nodes();
        for q in 0..n {
            let d: f64 = (0..n).map(|l| b.deriv[q * n + l] * vals[l]).sum();
            assert!((d - df(b.gauss.points[q])).abs() < 1e-12);
        }
        let right: f64 = (0..n).map(|l| b.right[l] * vals[l]).sum();
        assert!((right - f(1.0)).abs() < 1e-13);
    }
}
