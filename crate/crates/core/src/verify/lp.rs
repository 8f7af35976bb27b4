use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanism::{solve, ThresholdMechanism};
use crate::model::ProblemInstance;
use crate::numeric::linspace;
use crate::simplex::{maximize, DenseMatrix};

/// The instance restricted to cell midpoints of an `nt x nq` grid. Cell masses are
/// `density(midpoint)·width`, renormalized to sum to one.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteProgram {
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// `v[i][j] = v(t_i, q_j)`.
    pub v: Vec<Vec<f64>>,
    pub r: Vec<f64>,
}

fn cells(dist: &crate::model::Distribution, n: usize) -> (Vec<f64>, Vec<f64>) {
    let s = dist.support();
    let edges = linspace(s.lo, s.hi, n + 1);
    let mids: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let width = (s.hi - s.lo) / n as f64;
    let raw: Vec<f64> = mids.iter().map(|&x| dist.density(x) * width).collect();
    let total: f64 = raw.iter().sum();
    let mass = raw.iter().map(|m| m / total).collect();
    (mids, mass)
}

impl DiscreteProgram {
    pub fn new(inst: &ProblemInstance, nt: usize, nq: usize) -> Self {
        let (t, f) = cells(&inst.buyer, nt);
        let (q, g) = cells(&inst.seller, nq);
        let val = &inst.valuation;
        let v = t.iter().map(|&ti| q.iter().map(|&qj| val.value(ti, qj)).collect()).collect();
        let r = q.iter().map(|&qj| val.reserve(qj)).collect();
        Self { t, q, f, g, v, r }
    }

    pub fn nt(&self) -> usize {
        self.t.len()
    }

    pub fn nq(&self) -> usize {
        self.q.len()
    }

    /// Smallest rents that make the allocation incentive compatible:
    /// `u_1 = 0` going up for buyers, `s_nq = 0` going down for sellers.
    pub fn minimal_rents(&self, pi: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let (nt, nq) = (self.nt(), self.nq());
        let mut u = vec![0.0; nt];
        for i in 0..nt - 1 {
            let step: f64 = (0..nq)
                .map(|j| pi[i][j] * (self.v[i + 1][j] - self.v[i][j]) * self.g[j])
                .sum();
            u[i + 1] = u[i] + step;
        }
        let mut s = vec![0.0; nq];
        for j in (0..nq - 1).rev() {
            let mass: f64 = (0..nt).map(|i| pi[i][j + 1] * self.f[i]).sum();
            s[j] = s[j + 1] + (self.r[j + 1] - self.r[j]) * mass;
        }
        (u, s)
    }

    /// Expected revenue of `(pi, u, s)`.
    pub fn objective(&self, pi: &[Vec<f64>], u: &[f64], s: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.nt() {
            for j in 0..self.nq() {
                total += pi[i][j] * self.f[i] * self.g[j] * (self.v[i][j] - self.r[j]);
            }
        }
        total - dot(&self.f, u) - dot(&self.g, s)
    }

    /// Largest violation of any constraint of the program.
    pub fn max_violation(&self, pi: &[Vec<f64>], u: &[f64], s: &[f64]) -> f64 {
        let (nt, nq) = (self.nt(), self.nq());
        let mut worst: f64 = 0.0;
        for row in pi {
            for &p in row {
                worst = worst.max(-p).max(p - 1.0);
            }
        }
        for &x in u.iter().chain(s) {
            worst = worst.max(-x);
        }
        for i in 0..nt {
            for ip in 0..nt {
                let gain: f64 = (0..nq).map(|j| pi[ip][j] * (self.v[i][j] - self.v[ip][j]) * self.g[j]).sum();
                worst = worst.max(u[ip] - u[i] + gain);
            }
        }
        for j in 0..nq {
            for jp in 0..nq {
                let mass: f64 = (0..nt).map(|i| pi[i][jp] * self.f[i]).sum();
                worst = worst.max(s[jp] - s[j] + (self.r[jp] - self.r[j]) * mass);
            }
        }
        worst
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Optimal discretized mechanism from the linear program, next to the closed-form
/// rule evaluated on the same grid.
#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub grid: (usize, usize),
    pub t_nodes: Vec<f64>,
    pub q_nodes: Vec<f64>,
    pub lp_revenue: f64,
    pub closed_form_on_grid_revenue: f64,
    /// `lp_revenue − closed_form_on_grid_revenue`.
    pub gap: f64,
    /// Largest constraint violation of the closed-form rule on the grid.
    pub closed_form_violation: f64,
    pub lp_allocation: Vec<Vec<f64>>,
    pub closed_form_allocation: Vec<Vec<f64>>,
    /// Recovered per-trade payments, buyer then seller (`NaN` where the type never trades).
    pub lp_payments: (Vec<f64>, Vec<f64>),
    pub pivots: usize,
}

/// Solves the discretized design program on an `nt x nq` grid.
///
/// The variables are the allocation and the rents `u_i = Σ_j pi_ij v_ij g_j − p_b,i`
/// and `s_j = p_s,j − r_j Σ_i pi_ij f_i`, an affine change from expected transfers
/// that turns IR into `u, s >= 0` and leaves every right-hand side non-negative.
///
/// Fails with [`Error::GridCap`] when `nt·nq` exceeds the instance's `lp_cap`.
pub fn lp_oracle(inst: &ProblemInstance, nt: usize, nq: usize) -> Result<OracleResult> {
    let mech = solve(inst)?;
    lp_oracle_with(&mech, nt, nq)
}

pub fn lp_oracle_with(mech: &ThresholdMechanism, nt: usize, nq: usize) -> Result<OracleResult> {
    use crate::mechanism::DirectMechanism;
    let inst = mech.instance();
    let cap = inst.numerics.lp_cap;
    if nt < 2 || nq < 2 {
        return Err(Error::InvalidArgument("LP grid needs at least 2 x 2 cells".into()));
    }
    if nt * nq > cap {
        return Err(Error::GridCap { nt, nq, cap });
    }
    let dp = DiscreteProgram::new(inst, nt, nq);
    let npi = nt * nq;
    let (u0, s0) = (npi, npi + nt);
    let nvars = npi + nt + nq;
    let rows = npi + nt * (nt - 1) + nq * (nq - 1);

    let mut c = vec![0.0; nvars];
    for i in 0..nt {
        for j in 0..nq {
            c[i * nq + j] = dp.f[i] * dp.g[j] * (dp.v[i][j] - dp.r[j]);
        }
        c[u0 + i] = -dp.f[i];
    }
    for j in 0..nq {
        c[s0 + j] = -dp.g[j];
    }

    let mut a = DenseMatrix::zeros(rows, nvars);
    let mut b = vec![0.0; rows];
    let mut row = 0;
    for k in 0..npi {
        a.set(row, k, 1.0);
        b[row] = 1.0;
        row += 1;
    }
    // buyer t_i must not gain by reporting t_i'
    for i in 0..nt {
        for ip in 0..nt {
            if ip == i {
                continue;
            }
            a.add(row, u0 + ip, 1.0);
            a.add(row, u0 + i, -1.0);
            for j in 0..nq {
                a.set(row, ip * nq + j, (dp.v[i][j] - dp.v[ip][j]) * dp.g[j]);
            }
            row += 1;
        }
    }
    // seller q_j must not gain by reporting q_j'
    for j in 0..nq {
        for jp in 0..nq {
            if jp == j {
                continue;
            }
            a.add(row, s0 + jp, 1.0);
            a.add(row, s0 + j, -1.0);
            for i in 0..nt {
                a.set(row, i * nq + jp, (dp.r[jp] - dp.r[j]) * dp.f[i]);
            }
            row += 1;
        }
    }
    debug_assert_eq!(row, rows);

    let sol = maximize(&c, &a, &b)?;
    let pi: Vec<Vec<f64>> = (0..nt)
        .map(|i| (0..nq).map(|j| sol.x[i * nq + j].clamp(0.0, 1.0)).collect())
        .collect();
    let u = &sol.x[u0..u0 + nt];
    let s = &sol.x[s0..s0 + nq];
    let lp_buyer_payments: Vec<f64> = (0..nt)
        .map(|i| {
            let mass: f64 = (0..nq).map(|j| pi[i][j] * dp.g[j]).sum();
            let gross: f64 = (0..nq).map(|j| pi[i][j] * dp.v[i][j] * dp.g[j]).sum();
            if mass > 1e-14 { (gross - u[i]) / mass } else { f64::NAN }
        })
        .collect();
    let lp_seller_payments: Vec<f64> = (0..nq)
        .map(|j| {
            let mass: f64 = (0..nt).map(|i| pi[i][j] * dp.f[i]).sum();
            if mass > 1e-14 { (s[j] + dp.r[j] * mass) / mass } else { f64::NAN }
        })
        .collect();

    let cf: Vec<Vec<f64>> = dp
        .t
        .iter()
        .map(|&t| dp.q.iter().map(|&q| if mech.trades(t, q) { 1.0 } else { 0.0 }).collect())
        .collect();
    let (cu, cs) = dp.minimal_rents(&cf);
    let closed = dp.objective(&cf, &cu, &cs);
    let closed_form_violation = dp.max_violation(&cf, &cu, &cs);

    Ok(OracleResult {
        grid: (nt, nq),
        lp_revenue: sol.objective,
        closed_form_on_grid_revenue: closed,
        gap: sol.objective - closed,
        closed_form_violation,
        lp_allocation: pi,
        closed_form_allocation: cf,
        lp_payments: (lp_buyer_payments, lp_seller_payments),
        pivots: sol.pivots,
        t_nodes: dp.t,
        q_nodes: dp.q,
    })
}
