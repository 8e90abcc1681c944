//! Dense primal simplex on a condensed (Tucker) tableau.
//!
//! Solves `max c·x  s.t.  A x <= b, x >= 0` for `b >= 0`, so the slack basis
//! is feasible from the start and no phase one is needed. Bland's rule picks
//! both the entering and the leaving variable, which rules out cycling on the
//! degenerate vertices that rank constraints produce.

use crate::error::{ProbingError, Result};

const PIVOT_EPS: f64 = 1e-11;
const RATIO_TIE: f64 = 1e-12;
const MAX_PIVOTS: usize = 200_000;

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct LpOptimum {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One dual value per constraint, in input order.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `(rows + 1) x (cols + 1)`; the last row is the objective, the last column the rhs.
    cells: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[i * (self.cols + 1) + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.cells[i * (self.cols + 1) + j] = v;
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let width = self.cols + 1;
        let p = self.at(r, s);
        let pivot_row: Vec<f64> = self.cells[r * width..(r + 1) * width].to_vec();
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let factor = self.at(i, s);
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.cells[i * width..(i + 1) * width];
            for j in 0..width {
                if j != s {
                    row[j] -= factor * pivot_row[j] / p;
                }
            }
            row[s] = -factor / p;
        }
        let target = &mut self.cells[r * width..(r + 1) * width];
        for (j, (cell, &v)) in target.iter_mut().zip(&pivot_row).enumerate() {
            if j != s {
                *cell = v / p;
            }
        }
        self.set(r, s, 1.0 / p);
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[s]);
    }
}

/// Maximizes `objective · x` subject to `constraints` and `x >= 0`.
pub fn maximize(objective: &[f64], constraints: &[Constraint]) -> Result<LpOptimum> {
    let n = objective.len();
    let m = constraints.len();
    for (i, c) in constraints.iter().enumerate() {
        if c.coefficients.len() != n {
            return Err(ProbingError::contract(format!(
                "constraint {i} has {} coefficients, expected {n}",
                c.coefficients.len()
            )));
        }
        if c.rhs < 0.0 {
            return Err(ProbingError::contract(format!(
                "constraint {i} has negative right-hand side {}",
                c.rhs
            )));
        }
    }
    let mut t = Tableau {
        rows: m,
        cols: n,
        cells: vec![0.0; (m + 1) * (n + 1)],
        basic: (n..n + m).collect(),
        nonbasic: (0..n).collect(),
    };
    for (i, c) in constraints.iter().enumerate() {
        for (j, &a) in c.coefficients.iter().enumerate() {
            t.set(i, j, a);
        }
        t.set(i, n, c.rhs);
    }
    for (j, &c) in objective.iter().enumerate() {
        t.set(m, j, -c);
    }

    let mut pivots = 0;
    loop {
        // Bland: lowest-labelled improving column
        let entering = (0..n)
            .filter(|&j| t.at(m, j) < -PIVOT_EPS)
            .min_by_key(|&j| t.nonbasic[j]);
        let Some(s) = entering else { break };

        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t.at(i, s);
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = t.at(i, n).max(0.0) / a;
            leaving = match leaving {
                None => Some((i, ratio)),
                Some((r, best)) => {
                    if ratio < best - RATIO_TIE
                        || (ratio <= best + RATIO_TIE && t.basic[i] < t.basic[r])
                    {
                        Some((i, ratio))
                    } else {
                        Some((r, best))
                    }
                }
            };
        }
        let Some((r, _)) = leaving else {
            return Err(ProbingError::domain("linear program is unbounded"));
        };
        t.pivot(r, s);
        pivots += 1;
        if pivots > MAX_PIVOTS {
            return Err(ProbingError::capability(format!(
                "simplex exceeded {MAX_PIVOTS} pivots"
            )));
        }
    }

    let mut x = vec![0.0; n];
    for i in 0..m {
        if t.basic[i] < n {
            x[t.basic[i]] = t.at(i, n).max(0.0);
        }
    }
    let mut duals = vec![0.0; m];
    for j in 0..n {
        if t.nonbasic[j] >= n {
            duals[t.nonbasic[j] - n] = t.at(m, j);
        }
    }
    let objective_value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpOptimum {
        x,
        objective: objective_value,
        duals,
        pivots,
    })
}
