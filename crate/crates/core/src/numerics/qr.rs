use num_complex::Complex64;

use super::{hermitian_eig, ComplexMatrix, NumericsError};

/// Householder QR with column pivoting, `X P = Q R`, with `Q` kept in full
/// (`rows x rows`).
#[derive(Debug, Clone)]
pub struct PivotedQr {
    pub q: ComplexMatrix,
    pub r: ComplexMatrix,
    pub permutation: Vec<usize>,
}

impl PivotedQr {
    pub fn new(x: &ComplexMatrix) -> Self {
        let (m, n) = x.shape();
        let mut r = x.clone();
        let mut q = ComplexMatrix::identity(m);
        let mut permutation: Vec<usize> = (0..n).collect();

        for j in 0..m.min(n) {
            let col_norm =
                |r: &ComplexMatrix, c: usize| -> f64 { (j..m).map(|i| r[(i, c)].norm_sqr()).sum() };
            let best = (j..n)
                .max_by(|&a, &b| col_norm(&r, a).total_cmp(&col_norm(&r, b)))
                .expect("non-empty");
            if best != j {
                for i in 0..m {
                    let tmp = r[(i, j)];
                    r[(i, j)] = r[(i, best)];
                    r[(i, best)] = tmp;
                }
                permutation.swap(j, best);
            }

            let norm = col_norm(&r, j).sqrt();
            if norm == 0.0 {
                continue;
            }
            let x0 = r[(j, j)];
            let phase = if x0.norm() > 0.0 {
                x0 / x0.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            let alpha = -phase * norm;
            let mut v: Vec<Complex64> = (j..m).map(|i| r[(i, j)]).collect();
            v[0] -= alpha;
            let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if vv == 0.0 {
                continue;
            }
            // R <- (I - 2 v vᴴ / vᴴv) R on rows j..m
            for c in j..n {
                let s: Complex64 = v
                    .iter()
                    .enumerate()
                    .map(|(k, vk)| vk.conj() * r[(j + k, c)])
                    .sum();
                let f = s * (2.0 / vv);
                for (k, vk) in v.iter().enumerate() {
                    r[(j + k, c)] -= vk * f;
                }
            }
            // Q <- Q (I - 2 v vᴴ / vᴴv)
            for row in 0..m {
                let s: Complex64 = v
                    .iter()
                    .enumerate()
                    .map(|(k, vk)| q[(row, j + k)] * vk)
                    .sum();
                let f = s * (2.0 / vv);
                for (k, vk) in v.iter().enumerate() {
                    q[(row, j + k)] -= f * vk.conj();
                }
            }
            for i in j + 1..m {
                r[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        Self { q, r, permutation }
    }

    /// Number of diagonal entries of `R` whose magnitude exceeds `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        let k = self.r.rows().min(self.r.cols());
        (0..k).take_while(|&i| self.r[(i, i)].norm() > tol).count()
    }
}

/// Orthonormal basis (as columns) of the null space of `g`, i.e. all `z`
/// with `g z = 0`.
///
/// Rank is decided against `rel_tol` times the largest singular value of `g`.
pub fn null_space(g: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix, NumericsError> {
    let m = g.cols();
    if g.rows() == 0 {
        return Ok(ComplexMatrix::identity(m));
    }
    let gram = g.matmul(&g.adjoint())?;
    let sigma_max = hermitian_eig(&gram)?.values[0].max(0.0).sqrt();
    let qr = PivotedQr::new(&g.adjoint());
    let rank = qr.rank(rel_tol * sigma_max);
    Ok(qr.q.columns(rank, m - rank))
}
