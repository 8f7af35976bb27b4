//! Independent checks on mechanisms: lattice audit of feasibility and incentives,
//! the discretized linear-program oracle, the ex-post loss scan and the ironing
//! correction terms.

mod audit;
mod lp;
mod region;

pub use audit::{audit, obedience_check, obedience_check_on, AuditReport, AuditTolerances, IcWitness};
pub use lp::{lp_oracle, lp_oracle_with, DiscreteProgram, OracleResult};
pub use region::{classify_point, loss_region, prefix_violation, RegionCell, RegionStatus};

use serde::Serialize;

use crate::ironing::IronedFunction;
use crate::mechanism::{DirectMechanism, ThresholdMechanism};
use crate::model::Side;

/// Correction terms left over when the virtual surplus is replaced by its ironed
/// version: `∫ (H − L) dR_b` for the buyer and `∫ (L − H) dR_s` for the seller.
/// Both vanish for an optimal threshold rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IroningCorrections {
    pub buyer: f64,
    pub seller: f64,
}

/// Sum over interior nodes of the gap times the change of `rent` across the node,
/// with `rent` read at cell midpoints so that it is constant on each cell.
fn correction(iron: &IronedFunction, rent: impl Fn(f64) -> f64, sign: f64) -> f64 {
    let w = &iron.w_grid;
    let mids: Vec<f64> = w.windows(2).map(|c| rent(iron.x_of(0.5 * (c[0] + c[1])))).collect();
    (1..w.len() - 1)
        .map(|i| sign * (iron.cum_h[i] - iron.envelope[i]) * (mids[i] - mids[i - 1]))
        .sum()
}

pub fn ironing_corrections(m: &ThresholdMechanism) -> Option<IroningCorrections> {
    let ib = m.ironing(Side::Buyer)?;
    let is = m.ironing(Side::Seller)?;
    Some(IroningCorrections {
        buyer: correction(ib, |t| m.rb(t), 1.0),
        seller: correction(is, |q| m.rs(q), -1.0),
    })
}
