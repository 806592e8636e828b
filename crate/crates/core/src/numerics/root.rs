use super::{DenseMatrix, NumericsError, Result};

/// Result of a Newton iteration.
#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub root: Vec<f64>,
    pub iterations: usize,
    /// Infinity norm of f at the returned root.
    pub residual: f64,
}

const MAX_NEWTON_ITERATIONS: usize = 50;

/// Multivariate Newton iteration: drives `||f(x)||_inf` below `tol`.
///
/// `f` evaluates the residual, `jac` its Jacobian. Fails on a singular
/// Jacobian or if 50 iterations do not converge.
pub fn newton_root<F, J>(f: F, jac: J, x0: &[f64], tol: f64) -> Result<NewtonResult>
where
    F: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> DenseMatrix,
{
    if x0.is_empty() {
        return Err(NumericsError::EmptyInput("newton_root"));
    }
    let mut x = x0.to_vec();
    let mut residual = inf_norm(&f(&x));
    for iter in 1..=MAX_NEWTON_ITERATIONS {
        let fx = f(&x);
        residual = inf_norm(&fx);
        if !residual.is_finite() {
            return Err(NumericsError::NonFinite("newton_root residual"));
        }
        if residual < tol {
            return Ok(NewtonResult {
                root: x,
                iterations: iter - 1,
                residual,
            });
        }
        let j = jac(&x);
        let delta = solve_linear(&j, &fx)?;
        for (xi, di) in x.iter_mut().zip(&delta) {
            *xi -= di;
        }
    }
    // One final residual check after the last update.
    residual = inf_norm(&f(&x));
    if residual < tol {
        return Ok(NewtonResult {
            root: x,
            iterations: MAX_NEWTON_ITERATIONS,
            residual,
        });
    }
    Err(NumericsError::NewtonNoConvergence {
        iterations: MAX_NEWTON_ITERATIONS,
        residual,
    })
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.dim();
    if b.len() != n {
        return Err(NumericsError::BadDimension {
            dim: b.len(),
            what: "solve_linear (rhs length)",
        });
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.max_abs().max(1.0);
    for col in 0..n {
        // Partial pivot.
        let mut pivot_row = col;
        let mut pivot_val = m.get(col, col).abs();
        for r in (col + 1)..n {
            let v = m.get(r, col).abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = r;
            }
        }
        if pivot_val <= f64::EPSILON * scale {
            return Err(NumericsError::SingularMatrix(pivot_val));
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = m.get(col, j);
                m.set(col, j, m.get(pivot_row, j));
                m.set(pivot_row, j, tmp);
            }
            x.swap(col, pivot_row);
        }
        let inv = 1.0 / m.get(col, col);
        for r in (col + 1)..n {
            let factor = m.get(r, col) * inv;
            if factor != 0.0 {
                for j in col..n {
                    let v = m.get(r, j) - factor * m.get(col, j);
                    m.set(r, j, v);
                }
                x[r] -= factor * x[col];
            }
        }
    }
    // Back substitution.
    for row in (0..n).rev() {
        let mut acc = x[row];
        for j in (row + 1)..n {
            acc -= m.get(row, j) * x[j];
        }
        x[row] = acc / m.get(row, row);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_quadratic() {
        let r = newton_root(
            |x| vec![x[0] * x[0] - 4.0],
            |x| DenseMatrix::from_rows(&[vec![2.0 * x[0]]]).unwrap(),
            &[3.0],
            1e-12,
        )
        .unwrap();
        assert!((r.root[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn linear_map_converges_in_one_step() {
        // f(x) = A (x - b) with constant A: Newton lands on b in one update.
        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![0.5, 3.0]]).unwrap();
        let b = [1.5, -0.5];
        let r = newton_root(
            |x| {
                let shifted = [x[0] - b[0], x[1] - b[1]];
                a.mul_vec(&shifted)
            },
            |_| a.clone(),
            &[10.0, -7.0],
            1e-10,
        )
        .unwrap();
        assert_eq!(r.iterations, 1);
        assert!((r.root[0] - b[0]).abs() < 1e-12);
        assert!((r.root[1] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn singular_jacobian_rejected() {
        let r = newton_root(
            |x| vec![x[0] * x[0]],
            |_| DenseMatrix::from_rows(&[vec![0.0]]).unwrap(),
            &[1.0],
            1e-12,
        );
        assert!(matches!(r, Err(NumericsError::SingularMatrix(_))));
    }

    #[test]
    fn two_dimensional_system() {
        // x^2 + y^2 = 5, x y = 2 has the root (2, 1).
        let r = newton_root(
            |v| vec![v[0] * v[0] + v[1] * v[1] - 5.0, v[0] * v[1] - 2.0],
            |v| {
                DenseMatrix::from_rows(&[vec![2.0 * v[0], 2.0 * v[1]], vec![v[1], v[0]]]).unwrap()
            },
            &[2.2, 0.8],
            1e-13,
        )
        .unwrap();
        assert!((r.root[0] - 2.0).abs() < 1e-12);
        assert!((r.root[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solve_linear_roundtrip() {
        let a = DenseMatrix::from_rows(&[
            vec![4.0, -2.0, 1.0],
            vec![1.0, 5.0, -1.0],
            vec![2.0, 1.0, 6.0],
        ])
        .unwrap();
        let x_true = [1.0, -2.0, 3.0];
        let b = a.mul_vec(&x_true);
        let x = solve_linear(&a, &b).unwrap();
        for (got, want) in x.iter().zip(&x_true) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}
