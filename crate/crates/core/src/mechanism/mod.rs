//! Direct mechanisms `(pi, P_b, P_s)` and everything computed from them: interim
//! trade rates, utilities, misreport utilities, revenue and posterior beliefs.

mod tabulated;
mod threshold;

pub use tabulated::TabulatedMechanism;
pub use threshold::{solve, Threshold, ThresholdMechanism};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::numeric::{linspace, simpson, simpson_split};

/// A direct mechanism: trade probability `pi(t, q)` plus type-dependent payments.
///
/// Implementors supply the primitives; the interim quantities are provided on top
/// of [`integrate_q`](Self::integrate_q) and [`integrate_t`](Self::integrate_t).
/// The default integrators apply composite Simpson to `pi · h · density` over the
/// whole support, which is only first-order accurate across jumps of `pi`;
/// mechanisms that know their trade region should override them.
pub trait DirectMechanism {
    fn instance(&self) -> &ProblemInstance;

    /// Probability of recommending trade for the reported profile `(t, q)`.
    fn trade_prob(&self, t: f64, q: f64) -> f64;

    /// Payment charged to a buyer reporting `t` when trade happens.
    fn buyer_payment(&self, t: f64) -> f64;

    /// Payment made to a seller reporting `q` when trade happens.
    fn seller_payment(&self, q: f64) -> f64;

    /// Buyer types where the interim quantities may jump; outer integrals over `t`
    /// are split there.
    fn t_breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Seller types where the interim quantities may jump.
    fn q_breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `∫_Q pi(t, q) h(q) g(q) dq`.
    fn integrate_q(&self, t: f64, h: &dyn Fn(f64) -> f64) -> f64 {
        let inst = self.instance();
        let s = inst.seller.support();
        simpson(
            |q| {
                let p = self.trade_prob(t, q);
                if p == 0.0 {
                    0.0
                } else {
                    p * h(q) * inst.seller.density(q)
                }
            },
            s.lo,
            s.hi,
            inst.numerics.quad_nodes,
        )
    }

    /// `∫_T pi(t, q) h(t) f(t) dt`.
    fn integrate_t(&self, q: f64, h: &dyn Fn(f64) -> f64) -> f64 {
        let inst = self.instance();
        let s = inst.buyer.support();
        simpson(
            |t| {
                let p = self.trade_prob(t, q);
                if p == 0.0 {
                    0.0
                } else {
                    p * h(t) * inst.buyer.density(t)
                }
            },
            s.lo,
            s.hi,
            inst.numerics.quad_nodes,
        )
    }

    /// Interim probability of a trade recommendation for a buyer reporting `t`.
    fn trade_mass_q(&self, t: f64) -> f64 {
        self.integrate_q(t, &|_| 1.0)
    }

    /// Interim probability of a trade recommendation for a seller reporting `q`.
    fn trade_mass_t(&self, q: f64) -> f64 {
        self.integrate_t(q, &|_| 1.0)
    }

    /// `R_b(t) = ∫ alpha1(q) pi(t, q) g(q) dq`.
    fn rb(&self, t: f64) -> f64 {
        let v = &self.instance().valuation;
        self.integrate_q(t, &|q| v.alpha1(q))
    }

    /// `R_s(q) = ∫ pi(t, q) f(t) dt`.
    fn rs(&self, q: f64) -> f64 {
        self.trade_mass_t(q)
    }

    /// `U_b(t)`: expected utility of a truthful, obedient buyer.
    fn buyer_utility(&self, t: f64) -> f64 {
        self.misreport_utility_buyer(t, t)
    }

    /// `U_b(t'; t)`: a buyer of type `t` reporting `t'` and trading on signal 1.
    fn misreport_utility_buyer(&self, reported: f64, t: f64) -> f64 {
        let v = &self.instance().valuation;
        let mass = self.trade_mass_q(reported);
        if mass == 0.0 {
            return 0.0;
        }
        self.integrate_q(reported, &|q| v.value(t, q)) - self.buyer_payment(reported) * mass
    }

    /// `SU(q)`: seller surplus over the reserve value.
    fn seller_surplus(&self, q: f64) -> f64 {
        self.misreport_surplus_seller(q, q)
    }

    /// `SU(q'; q)`: surplus of a seller of type `q` reporting `q'`.
    fn misreport_surplus_seller(&self, reported: f64, q: f64) -> f64 {
        let mass = self.trade_mass_t(reported);
        if mass == 0.0 {
            return 0.0;
        }
        (self.seller_payment(reported) - self.instance().valuation.reserve(q)) * mass
    }

    /// Buyer obedience slack computed through the posterior over seller types:
    /// `Pr(1 | t) · (E[v(t, q) | 1, t] − P_b(t))`.
    fn buyer_obedience(&self, t: f64) -> f64 {
        let v = &self.instance().valuation;
        let mass = self.trade_mass_q(t);
        if mass == 0.0 {
            return 0.0;
        }
        let posterior_value = self.integrate_q(t, &|q| v.value(t, q)) / mass;
        mass * (posterior_value - self.buyer_payment(t))
    }

    /// Seller obedience slack `Pr(1 | q) · (P_s(q) − r(q))`.
    fn seller_obedience(&self, q: f64) -> f64 {
        let mass = self.trade_mass_t(q);
        if mass == 0.0 {
            return 0.0;
        }
        let r = self.instance().valuation.reserve(q);
        mass * (self.seller_payment(q) - r)
    }

    /// `∬ pi(t, q) [P_b(t) − P_s(q)] f(t) g(q) dt dq`, integrated as iterated 1-D
    /// integrals of the expected transfers.
    fn revenue_direct(&self) -> f64 {
        let inst = self.instance();
        let ts = inst.buyer.support();
        let qs = inst.seller.support();
        let n = inst.numerics.quad_nodes;
        let (tb, qb) = (self.t_breakpoints(), self.q_breakpoints());
        let collected = simpson_split(
            |t| {
                let m = self.trade_mass_q(t);
                if m == 0.0 {
                    0.0
                } else {
                    inst.buyer.density(t) * self.buyer_payment(t) * m
                }
            },
            ts.lo,
            ts.hi,
            &tb,
            n,
        );
        let paid = simpson_split(
            |q| {
                let m = self.trade_mass_t(q);
                if m == 0.0 {
                    0.0
                } else {
                    inst.seller.density(q) * self.seller_payment(q) * m
                }
            },
            qs.lo,
            qs.hi,
            &qb,
            n,
        );
        collected - paid
    }

    /// Revenue through virtual surplus:
    /// `∬ pi [alpha1 psi(t) + alpha2 − k·virtual_cost(q)] f g − U_b(t1) − SU(q2)`.
    /// Equal to [`revenue_direct`](Self::revenue_direct) for feasible mechanisms.
    fn revenue_virtual(&self) -> f64 {
        let inst = self.instance();
        let ts = inst.buyer.support();
        let qs = inst.seller.support();
        let v = &inst.valuation;
        let surplus = simpson_split(
            |t| {
                let vv = inst.buyer.virtual_value_at(t);
                let inner = self.integrate_q(t, &|q| {
                    v.alpha1(q) * vv + v.alpha2(q) - v.k * inst.seller.virtual_cost_at(q)
                });
                inst.buyer.density(t) * inner
            },
            ts.lo,
            ts.hi,
            &self.t_breakpoints(),
            inst.numerics.quad_nodes,
        );
        surplus - self.buyer_utility(ts.lo) - self.seller_surplus(qs.hi)
    }
}

/// Posterior density over seller types after a signal, tabulated on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct Posterior {
    pub q: Vec<f64>,
    pub density: Vec<f64>,
    /// Probability of the conditioning signal.
    pub signal_prob: f64,
}

/// `g(q | signal, t) = pi(signal | t, q) g(q) / ∫ pi(signal | t, q') g(q') dq'`.
pub fn posterior_quality(m: &dyn DirectMechanism, t: f64, signal: u8) -> Result<Posterior> {
    let inst = m.instance();
    if !inst.buyer.support().contains(t) {
        return Err(Error::Domain(format!("{t} lies outside the buyer support")));
    }
    if signal > 1 {
        return Err(Error::InvalidArgument(format!("signal must be 0 or 1, got {signal}")));
    }
    let trade = m.trade_mass_q(t);
    let prob = if signal == 1 { trade } else { 1.0 - trade };
    if !(prob > 1e-14) {
        return Err(Error::UndefinedBelief { t, signal });
    }
    let s = inst.seller.support();
    let q = linspace(s.lo, s.hi, inst.numerics.grid_n);
    let density = q
        .iter()
        .map(|&x| {
            let p = m.trade_prob(t, x);
            let p = if signal == 1 { p } else { 1.0 - p };
            p * inst.seller.density(x) / prob
        })
        .collect();
    Ok(Posterior {
        q,
        density,
        signal_prob: prob,
    })
}
