//! Dense tableau simplex for small, always-feasible maximization problems
//! in standard form. Bland's rule picks both the entering and the leaving
//! variable, so cycling is impossible and the pivot sequence is a pure
//! function of the variable ordering.
//!
//! The caller supplies `max c'z  s.t.  Az = b, z >= 0` with `b >= 0` and an
//! initial basis whose columns are unit vectors (slacks or definitional
//! variables), which is exactly what the reservation LP provides.

use crate::error::{LockerError, Result};

const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct StandardLp {
    /// Objective coefficients, length n.
    pub objective: Vec<f64>,
    /// Constraint matrix, m rows of length n.
    pub rows: Vec<Vec<f64>>,
    /// Right-hand side, length m, all non-negative.
    pub rhs: Vec<f64>,
    /// Initial basic variable per row; each column must be a unit vector
    /// with its 1 in that row.
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub max_primal_residual: f64,
    pub max_dual_residual: f64,
}

pub fn solve(lp: &StandardLp) -> Result<LpSolution> {
    let m = lp.rows.len();
    let n = lp.objective.len();
    if lp.rhs.len() != m || lp.basis.len() != m || lp.rows.iter().any(|r| r.len() != n) {
        return Err(LockerError::Dimension(
            "inconsistent LP dimensions".to_string(),
        ));
    }
    if lp.rhs.iter().any(|&b| b < -PIVOT_TOL) {
        return Err(LockerError::Solver {
            message: "initial rhs must be non-negative".to_string(),
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
        });
    }

    let mut tableau: Vec<Vec<f64>> = lp
        .rows
        .iter()
        .zip(&lp.rhs)
        .map(|(row, &b)| {
            let mut r = row.clone();
            r.push(b.max(0.0));
            r
        })
        .collect();
    let mut basis = lp.basis.clone();

    // Reduced-cost row, reduced against any nonzero-objective basics.
    let mut obj: Vec<f64> = lp.objective.clone();
    obj.push(0.0);
    for (i, &bv) in basis.iter().enumerate() {
        let c = lp.objective[bv];
        if c != 0.0 {
            for j in 0..=n {
                obj[j] -= c * tableau[i][j];
            }
        }
    }

    let max_iterations = 200 * (m + n).max(50);
    let mut iterations = 0;
    loop {
        // Bland: smallest-index variable with positive reduced cost enters.
        let entering = (0..n).find(|&j| obj[j] > PIVOT_TOL);
        let Some(entering) = entering else {
            break;
        };

        // Ratio test; ties broken by smallest basic variable index.
        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = tableau[i][entering];
            if a > PIVOT_TOL {
                let ratio = tableau[i][n] / a;
                match leaving {
                    None => leaving = Some((i, ratio)),
                    Some((best_i, best_ratio)) => {
                        if ratio < best_ratio - PIVOT_TOL
                            || ((ratio - best_ratio).abs() <= PIVOT_TOL
                                && basis[i] < basis[best_i])
                        {
                            leaving = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((pivot_row, _)) = leaving else {
            return Err(LockerError::Solver {
                message: format!("unbounded direction entering variable {entering}"),
                primal_residual: f64::NAN,
                dual_residual: f64::NAN,
            });
        };

        let pivot = tableau[pivot_row][entering];
        for value in &mut tableau[pivot_row] {
            *value /= pivot;
        }
        let pivot_values = tableau[pivot_row].clone();
        for (i, row) in tableau.iter_mut().enumerate() {
            if i != pivot_row {
                let factor = row[entering];
                if factor != 0.0 {
                    for (value, p) in row.iter_mut().zip(&pivot_values) {
                        *value -= factor * p;
                    }
                }
            }
        }
        let factor = obj[entering];
        if factor != 0.0 {
            for (value, p) in obj.iter_mut().zip(&pivot_values) {
                *value -= factor * p;
            }
        }
        basis[pivot_row] = entering;

        iterations += 1;
        if iterations > max_iterations {
            return Err(LockerError::Solver {
                message: format!("no convergence after {iterations} pivots"),
                primal_residual: f64::NAN,
                dual_residual: f64::NAN,
            });
        }
    }

    let mut values = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        values[bv] = tableau[i][n].max(0.0);
    }

    // Residuals against the original data.
    let mut max_primal_residual: f64 = 0.0;
    for (row, &b) in lp.rows.iter().zip(&lp.rhs) {
        let lhs: f64 = row.iter().zip(&values).map(|(a, z)| a * z).sum();
        max_primal_residual = max_primal_residual.max((lhs - b).abs());
    }
    let max_dual_residual = obj[..n].iter().copied().fold(0.0f64, f64::max).max(0.0);
    let objective: f64 = lp
        .objective
        .iter()
        .zip(&values)
        .map(|(c, z)| c * z)
        .sum();

    Ok(LpSolution {
        values,
        objective,
        iterations,
        max_primal_residual,
        max_dual_residual,
    })
}
