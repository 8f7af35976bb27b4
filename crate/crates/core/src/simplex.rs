//! Dense primal simplex for `max c·x  s.t.  A x <= b, x >= 0` with `b >= 0`.
//!
//! The origin is feasible, so no phase one is needed. The tableau keeps only the
//! nonbasic columns (exchange form), so a pivot costs `O(m·n)` rather than
//! `O(m·(n+m))`. Degenerate vertices are broken by running the ratio test on a
//! slightly perturbed right-hand side; the unperturbed right-hand side is pivoted
//! alongside and is what the solution is read from. Entering columns are chosen by largest reduced cost; after a run of
//! degenerate pivots the solver switches to Bland's smallest-index rule for the rest
//! of the solve, which rules out cycling.

use crate::error::{Error, Result};

/// Dense row-major constraint matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-13;
const DEGENERATE_RUN: usize = 50;
const DEGENERATE_STEP: f64 = 1e-12;
const PERTURB: f64 = 1e-9;

/// Maximizes `c·x` subject to `a x <= b`, `x >= 0`. Requires `b >= 0`.
pub fn maximize(c: &[f64], a: &DenseMatrix, b: &[f64]) -> Result<LpSolution> {
    let (m, n) = (a.rows, a.cols);
    if c.len() != n || b.len() != m {
        return Err(Error::Lp("dimension mismatch".into()));
    }
    if b.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::Lp("right-hand side must be non-negative".into()));
    }
    let mut t = a.clone();
    let mut rhs = b.to_vec();
    // ratio-test copy: b_i + PERTURB·(1 + frac(i·golden))·max(1, |b|_inf)
    let scale = b.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let mut rhs_p: Vec<f64> = b
        .iter()
        .enumerate()
        .map(|(i, &v)| v + PERTURB * scale * (1.0 + (i as f64 * 0.618_033_988_749_894_9).fract()))
        .collect();
    let mut cost = c.to_vec();
    // labels: 0..n are structural variables, n..n+m slacks
    let mut col_var: Vec<usize> = (0..n).collect();
    let mut row_var: Vec<usize> = (n..n + m).collect();
    let mut pivot_row = vec![0.0; n];
    let mut degenerate = 0usize;
    let mut bland = false;
    let max_pivots = 50 * (m + n) + 1000;

    for pivots in 0.. {
        if pivots > max_pivots {
            return Err(Error::Lp(format!("no convergence after {max_pivots} pivots")));
        }
        bland |= degenerate >= DEGENERATE_RUN;
        // entering column
        let mut enter: Option<usize> = None;
        for j in 0..n {
            if cost[j] > COST_EPS {
                enter = match enter {
                    None => Some(j),
                    Some(e) if bland && col_var[j] < col_var[e] => Some(j),
                    Some(e) if !bland && cost[j] > cost[e] => Some(j),
                    keep => keep,
                };
            }
        }
        let Some(e) = enter else {
            let mut x = vec![0.0; n];
            for (i, &var) in row_var.iter().enumerate() {
                if var < n {
                    x[var] = rhs[i].max(0.0);
                }
            }
            let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
            return Ok(LpSolution {
                x,
                objective,
                pivots,
            });
        };
        // ratio test, ties broken by smallest basic label
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let aie = t.get(i, e);
            if aie > PIVOT_EPS {
                let ratio = rhs_p[i] / aie;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best || (ratio == best && row_var[i] < row_var[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((r, ratio)) = leave else {
            return Err(Error::Lp("objective is unbounded".into()));
        };
        if ratio <= DEGENERATE_STEP {
            degenerate += 1;
        } else {
            degenerate = 0;
        }

        // pivot on (r, e)
        let p = t.get(r, e);
        pivot_row.copy_from_slice(t.row(r));
        for v in pivot_row.iter_mut() {
            *v /= p;
        }
        pivot_row[e] = 1.0 / p;
        let rhs_r = rhs[r] / p;
        let rhs_pr = rhs_p[r] / p;
        for i in 0..m {
            if i == r {
                continue;
            }
            let aie = t.get(i, e);
            if aie == 0.0 {
                continue;
            }
            let row = &mut t.data[i * n..(i + 1) * n];
            for (v, &pr) in row.iter_mut().zip(&pivot_row) {
                *v -= aie * pr;
            }
            row[e] = -aie / p;
            rhs[i] -= aie * rhs_r;
            rhs_p[i] -= aie * rhs_pr;
        }
        t.data[r * n..(r + 1) * n].copy_from_slice(&pivot_row);
        rhs[r] = rhs_r;
        rhs_p[r] = rhs_pr;
        let ce = cost[e];
        for (cj, &pr) in cost.iter_mut().zip(&pivot_row) {
            *cj -= ce * pr;
        }
        cost[e] = -ce / p;
        std::mem::swap(&mut col_var[e], &mut row_var[r]);
    }
    unreachable!()
}
