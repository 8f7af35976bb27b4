//! Virtual value and virtual cost functions, the two threshold ingredients
//! `psi(t)` (buyer) and `varphi(q)` (seller), and the regularity test.

use serde::Serialize;

use crate::error::Result;
use crate::model::{Distribution, ProblemInstance, Side};
use crate::numeric::{linspace, Tabulated};

/// `t − (1 − F(t)) / f(t)`.
pub fn virtual_value(dist: &Distribution, t: f64) -> Result<f64> {
    dist.virtual_value(t)
}

/// `q + G(q) / g(q)`.
pub fn virtual_cost(dist: &Distribution, q: f64) -> Result<f64> {
    dist.virtual_cost(q)
}

/// Buyer ingredient `psi(t)`: the buyer's virtual value.
#[inline]
pub fn psi(inst: &ProblemInstance, t: f64) -> f64 {
    inst.buyer.virtual_value_at(t)
}

/// Seller ingredient `varphi(q) = (k·virtual_cost(q) − alpha2(q)) / alpha1(q)`.
#[inline]
pub fn varphi(inst: &ProblemInstance, q: f64) -> f64 {
    let v = &inst.valuation;
    (v.k * inst.seller.virtual_cost_at(q) - v.alpha2(q)) / v.alpha1(q)
}

/// Tabulations of `psi` on the buyer support and `varphi` on the seller support.
#[derive(Debug, Clone, Serialize)]
pub struct VirtualProfile {
    pub psi: Tabulated,
    pub varphi: Tabulated,
    pub grid_n: usize,
}

pub fn compute_profile(inst: &ProblemInstance) -> Result<VirtualProfile> {
    compute_profile_with(inst, inst.numerics.grid_n)
}

/// Same as [`compute_profile`] with an explicit grid size.
pub fn compute_profile_with(inst: &ProblemInstance, grid_n: usize) -> Result<VirtualProfile> {
    let grid_n = grid_n.max(2);
    let ts = inst.buyer.support();
    let qs = inst.seller.support();
    let t_grid = linspace(ts.lo, ts.hi, grid_n);
    let q_grid = linspace(qs.lo, qs.hi, grid_n);
    let psi_vals = t_grid
        .iter()
        .map(|&t| inst.buyer.virtual_value(t))
        .collect::<Result<Vec<_>>>()?;
    let v = &inst.valuation;
    let mut varphi_vals = Vec::with_capacity(grid_n);
    for &q in &q_grid {
        let a1 = v.alpha1.eval(q)?;
        let a2 = v.alpha2.eval(q)?;
        varphi_vals.push((v.k * inst.seller.virtual_cost(q)? - a2) / a1);
    }
    Ok(VirtualProfile {
        psi: Tabulated::new(t_grid, psi_vals),
        varphi: Tabulated::new(q_grid, varphi_vals),
        grid_n,
    })
}

/// A maximal run of grid cells on which a tabulated function strictly decreases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityViolation {
    pub side: Side,
    pub lo: f64,
    pub hi: f64,
    /// Largest single-cell drop inside the run.
    pub max_drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub buyer_regular: bool,
    pub seller_regular: bool,
    pub violations: Vec<MonotonicityViolation>,
}

impl RegularityReport {
    pub fn is_regular(&self) -> bool {
        self.buyer_regular && self.seller_regular
    }
}

/// Runs of consecutive cells where `ys[i+1] < ys[i] − tol`.
pub fn decreasing_runs(f: &Tabulated, tol: f64, side: Side) -> Vec<MonotonicityViolation> {
    let mut out: Vec<MonotonicityViolation> = Vec::new();
    let mut open: Option<MonotonicityViolation> = None;
    for i in 0..f.len() - 1 {
        let drop = f.ys[i] - f.ys[i + 1];
        if drop > tol || drop.is_nan() {
            let drop = if drop.is_nan() { f64::INFINITY } else { drop };
            match open.as_mut() {
                Some(run) => {
                    run.hi = f.xs[i + 1];
                    run.max_drop = run.max_drop.max(drop);
                }
                None => {
                    open = Some(MonotonicityViolation {
                        side,
                        lo: f.xs[i],
                        hi: f.xs[i + 1],
                        max_drop: drop,
                    })
                }
            }
        } else if let Some(run) = open.take() {
            out.push(run);
        }
    }
    out.extend(open);
    out
}

/// Checks weak monotonicity of both tabulated ingredients (tolerance 1e-9 absolute).
pub fn regularity_check(profile: &VirtualProfile) -> RegularityReport {
    regularity_check_with(profile, 1e-9)
}

pub fn regularity_check_with(profile: &VirtualProfile, tol: f64) -> RegularityReport {
    let mut violations = decreasing_runs(&profile.psi, tol, Side::Buyer);
    let buyer_regular = violations.is_empty();
    let seller = decreasing_runs(&profile.varphi, tol, Side::Seller);
    let seller_regular = seller.is_empty();
    violations.extend(seller);
    RegularityReport {
        buyer_regular,
        seller_regular,
        violations,
    }
}
