//! Small dense linear solves for the per-species Patankar systems.

use crate::error::{Error, Result};

/// Solve `A x = b` in place by LU factorisation with partial pivoting.
///
/// `a` is row-major `n × n` and is overwritten by its factors; `b` is
/// overwritten by the solution.
pub fn lu_solve_in_place(a: &mut [f64], b: &mut [f64]) -> Result<()> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let (piv_row, piv_abs) = (k..n)
            .map(|r| (r, a[r * n + k].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(piv_abs > 0.0) || !piv_abs.is_finite() {
            return Err(Error::Singular { column: k, pivot: a[piv_row * n + k] });
        }
        if piv_row != k {
            for j in 0..n {
                a.swap(k * n + j, piv_row * n + j);
            }
            perm.swap(k, piv_row);
            b.swap(k, piv_row);
        }
        let pivot = a[k * n + k];
        for r in (k + 1)..n {
            let factor = a[r * n + k] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[r * n + k] = factor;
            for j in (k + 1)..n {
                a[r * n + j] -= factor * a[k * n + j];
            }
            b[r] -= factor * b[k];
        }
    }

    for k in (0..n).rev() {
        let mut acc = b[k];
        for j in (k + 1)..n {
            acc -= a[k * n + j] * b[j];
        }
        b[k] = acc / a[k * n + k];
    }
    Ok(())
}

/// Solve `A x = b` in place for a matrix with nonpositive off-diagonal
/// entries and positive column sums `excess_j = Σ_i A_ij`.
///
/// The diagonal of `a` is never read. Every pivot is rebuilt as the column
/// sum of the remaining block plus the magnitudes of its off-diagonal
/// entries, so elimination and both substitutions only add terms of one
/// sign: each component has a small relative error and stays positive for
/// positive `b`.
pub fn mmatrix_solve_in_place(a: &mut [f64], excess: &mut [f64], b: &mut [f64]) -> Result<()> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(excess.len(), n);
    for i in 0..n {
        if !(excess[i] > 0.0) || !excess[i].is_finite() {
            return Err(Error::Precondition(format!("column sum {i} is {:e}, not positive", excess[i])));
        }
        for j in 0..n {
            let v = a[i * n + j];
            if i != j && !(v <= 0.0) {
                return Err(Error::Precondition(format!("off-diagonal entry ({i}, {j}) is {v:e}, not ≤ 0")));
            }
        }
    }
    for k in 0..n {
        let pivot = excess[k] - (k + 1..n).map(|i| a[i * n + k]).sum::<f64>();
        if !pivot.is_finite() {
            return Err(Error::Singular { column: k, pivot });
        }
        a[k * n + k] = pivot;
        for j in k + 1..n {
            excess[j] -= a[k * n + j] * (excess[k] / pivot);
        }
        for i in k + 1..n {
            let factor = a[i * n + k] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in k + 1..n {
                if j != i {
                    a[i * n + j] -= factor * a[k * n + j];
                }
            }
            b[i] -= factor * b[k];
        }
    }
    for k in (0..n).rev() {
        let mut acc = b[k];
        for j in k + 1..n {
            acc -= a[k * n + j] * b[j];
        }
        b[k] = acc / a[k * n + k];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_two_by_two() {
        let mut a = vec![1.27, -0.1, -0.27, 1.1];
        let mut b = vec![4.5, 3.2];
        lu_solve_in_place(&mut a, &mut b).unwrap();
        // Cramer's rule
        let det = 1.27 * 1.1 - 0.1 * 0.27;
        let x0 = (4.5 * 1.1 + 0.1 * 3.2) / det;
        let x1 = (1.27 * 3.2 + 0.27 * 4.5) / det;
        assert!((b[0] - x0).abs() < 1e-14);
        assert!((b[1] - x1).abs() < 1e-14);
    }

    #[test]
    fn pivots_on_zero_diagonal() {
        let mut a = vec![0.0, 1.0, 1.0, 0.0];
        let mut b = vec![2.0, 3.0];
        lu_solve_in_place(&mut a, &mut b).unwrap();
        assert_eq!(b, vec![3.0, 2.0]);
    }

    #[test]
    fn subtraction_free_solve_matches_lu() {
        // column sums 1
        let a = vec![1.5, -0.25, -0.2, -0.3, 1.25, -0.3, -0.2, 0.0, 1.5];
        let b = vec![1.0, 2.0, 0.5];
        let (mut a1, mut x1) = (a.clone(), b.clone());
        lu_solve_in_place(&mut a1, &mut x1).unwrap();
        let (mut a2, mut x2, mut s) = (a.clone(), b.clone(), vec![1.0; 3]);
        mmatrix_solve_in_place(&mut a2, &mut s, &mut x2).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-15 * q.abs());
        }
        assert!((x2.iter().sum::<f64>() - 3.5).abs() < 1e-15);
    }

    #[test]
    fn subtraction_free_solve_rejects_positive_off_diagonal() {
        let mut a = vec![1.0, 0.5, 0.0, 1.0];
        let mut b = vec![1.0, 1.0];
        assert!(mmatrix_solve_in_place(&mut a, &mut vec![1.0, 1.0], &mut b).is_err());
    }

    #[test]
    fn reports_singular_matrix() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        let mut b = vec![1.0, 1.0];
        assert!(matches!(lu_solve_in_place(&mut a, &mut b), Err(Error::Singular { .. })));
    }
}
