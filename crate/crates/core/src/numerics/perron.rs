use super::{norm_inf, solve_linear, NumericsError, RealMatrix};

const MAX_ITERS: usize = 10_000;
/// Guaranteed bound on `‖Mv - λv‖∞ / ‖v‖∞`.
const RESIDUAL_TOL: f64 = 1e-10;
/// Working target relative to `‖M‖∞`, so the reported value is accurate to
/// near rounding level.
const TARGET_TOL: f64 = 1e-14;
/// Power steps tried before switching to shifted inverse iteration.
const POWER_STEPS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct PerronPair {
    /// Spectral radius.
    pub value: f64,
    /// Nonnegative eigenvector with last entry 1.
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Spectral radius and nonnegative eigenvector of a nonnegative matrix.
///
/// Starts with power iteration from the all-ones vector on `M + sI`
/// (`s` = largest row sum), which leaves the eigenvectors unchanged and
/// separates the spectral radius from eigenvalues of equal modulus on the
/// spectral circle. Nearly reducible inputs converge slowly that way; after
/// `POWER_STEPS` steps the iteration continues with Noda's shifted inverse
/// iteration, whose shift is the Collatz–Wielandt upper bound.
pub fn dominant_nonneg_eigpair(m: &RealMatrix) -> Result<PerronPair, NumericsError> {
    let n = m.rows();
    if m.cols() != n || n == 0 {
        return Err(NumericsError::DimensionMismatch {
            expected: (n, n),
            found: m.shape(),
        });
    }
    if (0..n).flat_map(|r| m.row(r)).any(|x| !x.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    let shift = m.norm_inf();
    let target = RESIDUAL_TOL.min(TARGET_TOL * shift);
    let mut v = vec![1.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERS {
        let mv = m.mul_vec(&v);
        let scale = norm_inf(&v);
        let lambda = upper_ratio(&mv, &v);
        if lambda == 0.0 {
            return finish(mv, 0.0, it);
        }
        residual = mv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).abs())
            .fold(0.0, f64::max);
        if residual <= target * scale {
            return finish(v, lambda, it);
        }
        if it == MAX_ITERS && residual <= RESIDUAL_TOL * scale {
            return finish(v, lambda, it);
        }
        let next = if it <= POWER_STEPS {
            mv.iter().zip(&v).map(|(a, b)| a + shift * b).collect()
        } else {
            // (μI - M) y = v with μ ≥ ρ; y stays nonnegative
            let a = RealMatrix::from_fn(n, n, |r, c| f64::from(r == c) * lambda - m[(r, c)]);
            match solve_linear(&a, &v) {
                Ok(y) => y,
                Err(NumericsError::Singular { .. }) => return finish(v, lambda, it),
                Err(e) => return Err(e),
            }
        };
        let norm = norm_inf(&next);
        if !(norm > 0.0 && norm.is_finite()) {
            break;
        }
        v = next.iter().map(|x| (x / norm).max(0.0)).collect();
    }
    Err(NumericsError::NonConvergence {
        iterations: MAX_ITERS,
        residual,
    })
}

/// `max_i (Mv)_i / v_i` over the support of `v`; infinite when `Mv` leaves
/// the support.
fn upper_ratio(mv: &[f64], v: &[f64]) -> f64 {
    let mut hi = 0.0f64;
    for (a, b) in mv.iter().zip(v) {
        if *b > 0.0 {
            hi = hi.max(a / b);
        } else if *a > 0.0 {
            return norm_inf(mv) / norm_inf(v);
        }
    }
    hi
}

fn finish(v: Vec<f64>, value: f64, iterations: usize) -> Result<PerronPair, NumericsError> {
    let last = *v.last().expect("non-empty");
    if !(last > 1e-12 * norm_inf(&v)) {
        return Err(NumericsError::DegenerateVector);
    }
    Ok(PerronPair {
        value,
        vector: v.iter().map(|x| x / last).collect(),
        iterations,
    })
}
