use num_complex::Complex64;

use super::{ComplexMatrix, NumericsError};

const MAX_SWEEPS: usize = 64;

/// Eigenvalues sorted non-increasing with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigResult {
    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        self.vectors.column(i)
    }
}

/// Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Eigenvectors are orthonormal; values sorted non-increasing,
/// ties kept in diagonal order.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<EigResult, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::DimensionMismatch {
            expected: (a.rows(), a.rows()),
            found: a.shape(),
        });
    }
    if !a.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let n = a.rows();
    let mut w = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = w.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| w[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-17 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut w, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag = w.diag_re();
    // stable: equal values keep their index order
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(EigResult { values, vectors })
}

/// One Jacobi rotation zeroing `w[p][q]`; accumulates the rotation into `v`.
fn rotate(w: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let g = w[(p, q)];
    let mag = g.norm();
    if mag == 0.0 {
        return;
    }
    let app = w[(p, p)].re;
    let aqq = w[(q, q)].re;
    if mag <= 1e-300 || (app - aqq).abs() > mag * 1e300 {
        return;
    }
    // phase e^{-i phi} turns the pivot real; then a real rotation zeroes it
    let phase = (g / mag).conj();
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = w.rows();

    // J = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on the (p, q) plane.
    let jqp = -phase * s;
    let jqq = phase * c;
    for r in 0..n {
        let xp = w[(r, p)];
        let xq = w[(r, q)];
        w[(r, p)] = xp * c + xq * jqp;
        w[(r, q)] = xp * s + xq * jqq;
    }
    for col in 0..n {
        let xp = w[(p, col)];
        let xq = w[(q, col)];
        w[(p, col)] = xp * c + xq * jqp.conj();
        w[(q, col)] = xp * s + xq * jqq.conj();
    }
    w[(p, q)] = Complex64::new(0.0, 0.0);
    w[(q, p)] = Complex64::new(0.0, 0.0);
    w[(p, p)].im = 0.0;
    w[(q, q)].im = 0.0;
    for r in 0..n {
        let xp = v[(r, p)];
        let xq = v[(r, q)];
        v[(r, p)] = xp * c + xq * jqp;
        v[(r, q)] = xp * s + xq * jqq;
    }
}

/// Lower-triangular Cholesky factor `B = L Lᴴ`.
///
/// A pivot at or below `1e-12 * trace(B) / n` is reported as
/// `NotPositiveDefinite`.
pub(crate) fn cholesky(b: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    let n = b.rows();
    let floor = 1e-12 * b.trace().re / n as f64;
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = b[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > floor) || !(floor > 0.0) {
            return Err(NumericsError::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = b[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L X = rhs` for lower-triangular `L`.
fn forward_substitute(l: &ComplexMatrix, rhs: &ComplexMatrix) -> ComplexMatrix {
    let n = l.rows();
    let mut x = rhs.clone();
    for c in 0..rhs.cols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Solves `Lᴴ X = rhs` for lower-triangular `L`.
fn backward_substitute_adjoint(l: &ComplexMatrix, rhs: &ComplexMatrix) -> ComplexMatrix {
    let n = l.rows();
    let mut x = rhs.clone();
    for c in 0..rhs.cols() {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)].conj();
        }
    }
    x
}

/// The `m` largest eigenpairs of the Hermitian pencil `(A, B)` with `B`
/// positive definite.
///
/// Reduces to the standard problem `L⁻¹ A L⁻ᴴ` through the Cholesky factor of
/// `B`, so the returned vectors are `B`-orthonormal.
pub fn hermitian_generalized_eig(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    m: usize,
) -> Result<EigResult, NumericsError> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(NumericsError::DimensionMismatch {
            expected: a.shape(),
            found: b.shape(),
        });
    }
    let n = a.rows();
    if m == 0 || m > n {
        return Err(NumericsError::InvalidCount {
            requested: m,
            dim: n,
        });
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let l = cholesky(&b.hermitian_part())?;
    let x = forward_substitute(&l, &a.hermitian_part());
    let reduced = forward_substitute(&l, &x.adjoint()).adjoint();
    let standard = hermitian_eig(&reduced)?;
    let top = standard.vectors.columns(0, m);
    let vectors = backward_substitute_adjoint(&l, &top);
    Ok(EigResult {
        values: standard.values[..m].to_vec(),
        vectors,
    })
}
