use super::{NumericsError, RealMatrix};

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// A pivot smaller than `1e-12` times the largest initial row norm is
/// treated as singular.
pub fn solve_linear(a: &RealMatrix, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(NumericsError::DimensionMismatch {
            expected: (n, n),
            found: (a.cols(), b.len()),
        });
    }
    let row_scale = (0..n)
        .map(|r| a.row(r).iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let tol = 1e-12 * row_scale;

    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .expect("non-empty range");
        let pivot = m[(pivot_row, col)];
        if !(pivot.abs() > tol) {
            return Err(NumericsError::Singular {
                column: col,
                pivot: pivot.abs(),
            });
        }
        if pivot_row != col {
            for c in 0..n {
                let tmp = m[(col, c)];
                m[(col, c)] = m[(pivot_row, c)];
                m[(pivot_row, c)] = tmp;
            }
            rhs.swap(col, pivot_row);
        }
        for r in col + 1..n {
            let factor = m[(r, col)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                m[(r, c)] -= factor * m[(col, c)];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[(r, c)] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[(r, r)];
    }
    Ok(x)
}
