use super::{solve_linear, NumericsError, RealMatrix};

const MAX_PIVOTS: usize = 10_000;

/// Minimises `1ᵀp` subject to `A p = b`, `p >= 0`.
///
/// Two-phase dense tableau simplex with Bland's rule: the entering column is
/// the lowest-index one with negative reduced cost, and ratio-test ties
/// leave by lowest basic index. The basic solution is re-solved from the
/// original columns at the end to keep the equality residual tight.
pub fn lp_min_sum(a: &RealMatrix, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let (k, l) = a.shape();
    if b.len() != k {
        return Err(NumericsError::DimensionMismatch {
            expected: (k, 1),
            found: (b.len(), 1),
        });
    }
    if b.iter().any(|&x| !(x > 0.0)) {
        return Err(NumericsError::NonPositiveRhs);
    }
    let scale = (0..k)
        .flat_map(|r| a.row(r).iter().map(|x| x.abs()))
        .fold(0.0, f64::max)
        .max(1.0);
    let b_scale = b.iter().fold(0.0f64, |m, &x| m.max(x));
    let mut tab = Tableau::new(a, b, 1e-11 * scale);

    // phase one: minimise the artificial sum
    let phase_one: Vec<f64> = (0..l + k).map(|j| if j < l { 0.0 } else { 1.0 }).collect();
    tab.optimize(&phase_one, l + k)?;
    let infeasibility: f64 = tab
        .basis
        .iter()
        .zip(&tab.rhs)
        .filter(|(&j, _)| j >= l)
        .map(|(_, &v)| v)
        .sum();
    if infeasibility > 1e-9 * b_scale {
        return Err(NumericsError::Infeasible {
            residual: infeasibility,
        });
    }
    tab.evict_artificials(l);

    let phase_two: Vec<f64> = (0..l + k).map(|j| if j < l { 1.0 } else { 0.0 }).collect();
    tab.optimize(&phase_two, l)?;

    Ok(tab.refined_solution(a, b))
}

struct Tableau {
    /// `B⁻¹ [A | I]`, row-major `k x (l + k)`.
    body: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    tol: f64,
}

impl Tableau {
    fn new(a: &RealMatrix, b: &[f64], tol: f64) -> Self {
        let (k, l) = a.shape();
        let body = (0..k)
            .map(|r| {
                let mut row = a.row(r).to_vec();
                row.extend((0..k).map(|i| if i == r { 1.0 } else { 0.0 }));
                row
            })
            .collect();
        Self {
            body,
            rhs: b.to_vec(),
            basis: (l..l + k).collect(),
            tol,
        }
    }

    /// Runs simplex pivots for `cost`, letting only columns `< allowed` enter.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<(), NumericsError> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .basis
                        .iter()
                        .zip(&self.body)
                        .map(|(&bj, row)| cost[bj] * row[j])
                        .sum::<f64>();
                reduced < -1e-12 * cost[j].abs().max(1.0)
            });
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.body.iter().enumerate() {
                if row[col] > self.tol {
                    let ratio = self.rhs[i] / row[col];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            let tie = (ratio - lr).abs() <= 1e-12 * lr.abs().max(1e-300);
                            if ratio < lr && !tie || tie && self.basis[i] < self.basis[li] {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Err(NumericsError::Unbounded);
            };
            self.pivot(row, col);
        }
        Err(NumericsError::NonConvergence {
            iterations: MAX_PIVOTS,
            residual: f64::NAN,
        })
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.body[row][col];
        for x in self.body[row].iter_mut() {
            *x /= p;
        }
        self.rhs[row] /= p;
        let pivot_row = self.body[row].clone();
        let pivot_rhs = self.rhs[row];
        for (i, r) in self.body.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f == 0.0 {
                continue;
            }
            for (x, y) in r.iter_mut().zip(&pivot_row) {
                *x -= f * y;
            }
            self.rhs[i] -= f * pivot_rhs;
        }
        self.basis[row] = col;
    }

    /// Pivots zero-level artificial variables out of the basis where an
    /// original column can replace them; rows with no such column are
    /// redundant and keep their artificial at zero.
    fn evict_artificials(&mut self, l: usize) {
        for row in 0..self.basis.len() {
            if self.basis[row] < l {
                continue;
            }
            let candidate = (0..l)
                .filter(|j| !self.basis.contains(j))
                .max_by(|&x, &y| self.body[row][x].abs().total_cmp(&self.body[row][y].abs()));
            if let Some(col) = candidate {
                if self.body[row][col].abs() > self.tol {
                    self.pivot(row, col);
                }
            }
        }
    }

    fn refined_solution(&self, a: &RealMatrix, b: &[f64]) -> Vec<f64> {
        let (k, l) = a.shape();
        let mut x = vec![0.0; l];
        let basis_matrix = RealMatrix::from_fn(k, k, |r, c| {
            let j = self.basis[c];
            if j < l {
                a[(r, j)]
            } else if j - l == r {
                1.0
            } else {
                0.0
            }
        });
        let xb = solve_linear(&basis_matrix, b).unwrap_or_else(|_| self.rhs.clone());
        for (&j, &v) in self.basis.iter().zip(&xb) {
            if j < l {
                x[j] = v.max(0.0);
            }
        }
        x
    }
}
