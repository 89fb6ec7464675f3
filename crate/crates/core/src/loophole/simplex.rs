//! Dense primal simplex over exact rationals.
//!
//! Solves `max c·x  s.t.  A x ≤ b, x ≥ 0` with `b ≥ 0`, so the slack basis
//! at the origin is feasible and no phase one is needed. Bland's rule keeps
//! degenerate pivots from cycling.

use num_traits::{Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("constraint {0} has a negative right-hand side")]
    InfeasibleOrigin(usize),
    #[error("row {row} has {found} coefficients, expected {expected}")]
    Shape { row: usize, found: usize, expected: usize },
    #[error("objective is unbounded")]
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub rows: Vec<Vec<Rational>>,
    pub bounds: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub value: Rational,
    pub x: Vec<Rational>,
}

impl LinearProgram {
    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let n = self.objective.len();
        let m = self.rows.len();
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(LpError::Shape { row: i, found: row.len(), expected: n });
            }
        }
        if let Some(i) = self.bounds.iter().position(|b| b.is_negative()) {
            return Err(LpError::InfeasibleOrigin(i));
        }
        // Columns: n structural, m slack, then the rhs.
        let width = n + m + 1;
        let mut tableau: Vec<Vec<Rational>> = self
            .rows
            .iter()
            .zip(&self.bounds)
            .enumerate()
            .map(|(i, (row, b))| {
                let mut t = vec![Rational::zero(); width];
                t[..n].clone_from_slice(row);
                t[n + i] = Rational::from_integer(1.into());
                t[width - 1] = b.clone();
                t
            })
            .collect();
        // Reduced costs of the maximization, stored as −c.
        let mut cost: Vec<Rational> = vec![Rational::zero(); width];
        for (j, c) in self.objective.iter().enumerate() {
            cost[j] = -c.clone();
        }
        let mut basis: Vec<usize> = (n..n + m).collect();

        while let Some(enter) = (0..width - 1).find(|&j| cost[j].is_negative()) {
            let mut leave: Option<(usize, Rational)> = None;
            for (i, row) in tableau.iter().enumerate() {
                if !row[enter].is_positive() {
                    continue;
                }
                let ratio = &row[width - 1] / &row[enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((pivot_row, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            let pivot = tableau[pivot_row][enter].clone();
            for v in tableau[pivot_row].iter_mut() {
                *v /= &pivot;
            }
            let pivot_values = tableau[pivot_row].clone();
            for (i, row) in tableau.iter_mut().enumerate() {
                if i == pivot_row || row[enter].is_zero() {
                    continue;
                }
                let factor = row[enter].clone();
                for (v, p) in row.iter_mut().zip(&pivot_values) {
                    *v -= &factor * p;
                }
            }
            let factor = cost[enter].clone();
            for (v, p) in cost.iter_mut().zip(&pivot_values) {
                *v -= &factor * p;
            }
            basis[pivot_row] = enter;
        }

        let mut x = vec![Rational::zero(); n];
        for (i, &var) in basis.iter().enumerate() {
            if var < n {
                x[var] = tableau[i][width - 1].clone();
            }
        }
        Ok(LpSolution { value: cost[width - 1].clone(), x })
    }
}
