use serde::Serialize;

use crate::mechanism::{DirectMechanism, ThresholdMechanism};
use crate::numeric::linspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionStatus {
    NoTrade,
    TradeProfit,
    TradeLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionCell {
    pub t: f64,
    pub q: f64,
    pub status: RegionStatus,
    /// `P_b(t) − P_s(q)`; zero off the trade set.
    pub margin: f64,
}

/// Status of one profile: ex-post profit or loss for the mediator when trade happens.
pub fn classify_point(m: &ThresholdMechanism, t: f64, q: f64) -> RegionCell {
    if !m.trades(t, q) {
        return RegionCell {
            t,
            q,
            status: RegionStatus::NoTrade,
            margin: 0.0,
        };
    }
    let margin = m.buyer_payment(t) - m.seller_payment(q);
    let status = if margin >= 0.0 {
        RegionStatus::TradeProfit
    } else {
        RegionStatus::TradeLoss
    };
    RegionCell { t, q, status, margin }
}

/// Scans an `nt x nq` lattice spanning both supports, row-major in `t`.
pub fn loss_region(m: &ThresholdMechanism, nt: usize, nq: usize) -> Vec<RegionCell> {
    let inst = m.instance();
    let ts = inst.buyer.support();
    let qs = inst.seller.support();
    let t_lat = linspace(ts.lo, ts.hi, nt.max(2));
    let q_lat = linspace(qs.lo, qs.hi, nq.max(2));
    // payments once per lattice line
    let pb: Vec<f64> = t_lat.iter().map(|&t| m.buyer_payment(t)).collect();
    let ps: Vec<f64> = q_lat.iter().map(|&q| m.seller_payment(q)).collect();
    let mut out = Vec::with_capacity(t_lat.len() * q_lat.len());
    for (i, &t) in t_lat.iter().enumerate() {
        for (j, &q) in q_lat.iter().enumerate() {
            let cell = if m.trades(t, q) {
                let margin = pb[i] - ps[j];
                let status = if margin >= 0.0 {
                    RegionStatus::TradeProfit
                } else {
                    RegionStatus::TradeLoss
                };
                RegionCell { t, q, status, margin }
            } else {
                RegionCell {
                    t,
                    q,
                    status: RegionStatus::NoTrade,
                    margin: 0.0,
                }
            };
            out.push(cell);
        }
    }
    out
}

/// For every buyer type on an `n`-point lattice, checks that the sellers it trades
/// with form an initial segment of the seller lattice. Returns the first offending `t`.
pub fn prefix_violation(m: &ThresholdMechanism, n: usize) -> Option<f64> {
    let inst = m.instance();
    let ts = inst.buyer.support();
    let qs = inst.seller.support();
    let q_lat = linspace(qs.lo, qs.hi, n.max(2));
    linspace(ts.lo, ts.hi, n.max(2)).into_iter().find(|&t| {
        let mut seen_gap = false;
        q_lat.iter().any(|&q| {
            let trade = m.trades(t, q);
            let bad = trade && seen_gap;
            seen_gap |= !trade;
            bad
        })
    })
}
