use std::sync::Arc;

use super::DirectMechanism;
use crate::error::{Error, Result};
use crate::ironing::{iron_buyer, iron_seller, IronedFunction};
use crate::model::{ProblemInstance, Side};
use crate::numeric::{bisect_first_true, bisect_last_true, linspace, merge_nodes, simpson, Cumulative, Tabulated};
use crate::virtual_fn::{compute_profile, psi, regularity_check_with, varphi, RegularityReport, VirtualProfile};

/// One side's threshold function.
#[derive(Clone)]
pub enum Threshold {
    /// The side's own virtual ingredient (`psi` for the buyer, `varphi` for the seller),
    /// evaluated directly from the instance.
    Virtual,
    /// Slope of the lower convex envelope read through the ironing coordinate.
    Ironed(Arc<IronedFunction>),
    /// An arbitrary non-decreasing tabulated function.
    Tabulated(Tabulated),
}

impl std::fmt::Debug for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Threshold::Virtual => write!(f, "Virtual"),
            Threshold::Ironed(i) => write!(f, "Ironed({} intervals)", i.ironed_intervals.len()),
            Threshold::Tabulated(t) => write!(f, "Tabulated({} points)", t.len()),
        }
    }
}

/// Threshold mechanism: trade iff `lambda(t) >= eta(q)`, with the envelope payments
/// that pin the lowest buyer's utility and the highest seller's surplus at zero.
#[derive(Debug, Clone)]
pub struct ThresholdMechanism {
    instance: ProblemInstance,
    lambda: Threshold,
    eta: Threshold,
    /// `∫_{t1}^{t} R_b`.
    buyer_rent: Cumulative,
    /// `∫_{q1}^{q} R_s`, read from the top as `∫_{q}^{q2} R_s`.
    seller_rent: Cumulative,
    /// Types where the interim rates jump (see [`jump_points`]).
    t_breaks: Vec<f64>,
    q_breaks: Vec<f64>,
    regularity: Option<RegularityReport>,
    profile: Option<VirtualProfile>,
    buyer_ironing: Option<Arc<IronedFunction>>,
    seller_ironing: Option<Arc<IronedFunction>>,
}

/// Optimal mechanism for `inst`: virtual thresholds on regular sides, ironed
/// thresholds on irregular ones (each side decided on its own).
pub fn solve(inst: &ProblemInstance) -> Result<ThresholdMechanism> {
    let report = inst.validate();
    if !report.is_valid() {
        return Err(Error::InvalidInstance(report.to_string()));
    }
    let profile = compute_profile(inst)?;
    let regularity = regularity_check_with(&profile, inst.numerics.tol);
    let ib = Arc::new(iron_buyer(inst, &profile));
    let is = Arc::new(iron_seller(inst, &profile));
    let lambda = if regularity.buyer_regular {
        Threshold::Virtual
    } else {
        Threshold::Ironed(ib.clone())
    };
    let eta = if regularity.seller_regular {
        Threshold::Virtual
    } else {
        Threshold::Ironed(is.clone())
    };
    let mut mech = ThresholdMechanism::from_thresholds(inst.clone(), lambda, eta);
    mech.regularity = Some(regularity);
    mech.profile = Some(profile);
    mech.buyer_ironing = Some(ib);
    mech.seller_ironing = Some(is);
    Ok(mech)
}

impl ThresholdMechanism {
    /// Builds the threshold mechanism for arbitrary non-decreasing thresholds,
    /// with payments given by the envelope formulas.
    pub fn from_thresholds(instance: ProblemInstance, lambda: Threshold, eta: Threshold) -> Self {
        let ts = instance.buyer.support();
        let qs = instance.seller.support();
        let n = instance.numerics.grid_n.max(2);
        let placeholder = Cumulative::build(vec![0.0, 1.0], |_| 0.0);
        let mut mech = Self {
            instance,
            lambda,
            eta,
            buyer_rent: placeholder.clone(),
            seller_rent: placeholder,
            t_breaks: Vec::new(),
            q_breaks: Vec::new(),
            regularity: None,
            profile: None,
            buyer_ironing: None,
            seller_ironing: None,
        };
        let (t_breaks, q_breaks) = mech.jump_points();
        mech.t_breaks = t_breaks;
        mech.q_breaks = q_breaks;
        let t_nodes = merge_nodes(&linspace(ts.lo, ts.hi, n), &mech.t_breakpoints());
        let q_nodes = merge_nodes(&linspace(qs.lo, qs.hi, n), &mech.q_breakpoints());
        mech.buyer_rent = Cumulative::build(t_nodes, |t| mech.rb(t));
        mech.seller_rent = Cumulative::build(q_nodes, |q| mech.rs(q));
        mech
    }

    /// Where one threshold crosses the level of a flat stretch of the other, the
    /// trade boundary jumps across the whole stretch and the interim rate on that
    /// side jumps with it. Ends of the trading range are added as kinks. (The
    /// per-cell steps of an ironed threshold are small and left to the quadrature.)
    fn jump_points(&self) -> (Vec<f64>, Vec<f64>) {
        let ts = self.instance.buyer.support();
        let qs = self.instance.seller.support();
        let mut tb: Vec<f64> = [qs.lo, qs.hi].iter().filter_map(|&q| self.t_boundary(q)).collect();
        let mut qb: Vec<f64> = [ts.lo, ts.hi].iter().filter_map(|&t| self.q_boundary(t)).collect();
        if let Threshold::Ironed(f) = &self.lambda {
            for (a, b) in f.ironed_type_intervals() {
                qb.extend(self.q_boundary(0.5 * (a + b)));
            }
        }
        if let Threshold::Ironed(f) = &self.eta {
            for (a, b) in f.ironed_type_intervals() {
                tb.extend(self.t_boundary(0.5 * (a + b)));
            }
        }
        for v in [&mut tb, &mut qb] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        (tb, qb)
    }

    pub fn lambda(&self, t: f64) -> f64 {
        match &self.lambda {
            Threshold::Virtual => psi(&self.instance, t),
            Threshold::Ironed(f) => f.eval_at(t),
            Threshold::Tabulated(f) => f.eval(t),
        }
    }

    pub fn eta(&self, q: f64) -> f64 {
        match &self.eta {
            Threshold::Virtual => varphi(&self.instance, q),
            Threshold::Ironed(f) => f.eval_at(q),
            Threshold::Tabulated(f) => f.eval(q),
        }
    }

    pub fn lambda_threshold(&self) -> &Threshold {
        &self.lambda
    }

    pub fn eta_threshold(&self) -> &Threshold {
        &self.eta
    }

    pub fn is_ironed(&self) -> bool {
        matches!(self.lambda, Threshold::Ironed(_)) || matches!(self.eta, Threshold::Ironed(_))
    }

    pub fn side_ironed(&self, side: Side) -> bool {
        match side {
            Side::Buyer => matches!(self.lambda, Threshold::Ironed(_)),
            Side::Seller => matches!(self.eta, Threshold::Ironed(_)),
        }
    }

    pub fn regularity(&self) -> Option<&RegularityReport> {
        self.regularity.as_ref()
    }

    pub fn profile(&self) -> Option<&VirtualProfile> {
        self.profile.as_ref()
    }

    /// Ironing result for a side; present for mechanisms built by [`solve`] even
    /// when that side is regular and its threshold is not ironed.
    pub fn ironing(&self, side: Side) -> Option<&IronedFunction> {
        match side {
            Side::Buyer => self.buyer_ironing.as_deref(),
            Side::Seller => self.seller_ironing.as_deref(),
        }
    }

    /// Trade recommendation (0 or 1); ties trade.
    pub fn allocation(&self, t: f64, q: f64) -> Result<u8> {
        let ts = self.instance.buyer.support();
        let qs = self.instance.seller.support();
        if !ts.contains(t) {
            return Err(Error::Domain(format!("t = {t} outside [{}, {}]", ts.lo, ts.hi)));
        }
        if !qs.contains(q) {
            return Err(Error::Domain(format!("q = {q} outside [{}, {}]", qs.lo, qs.hi)));
        }
        Ok(self.trades(ts.clamp(t), qs.clamp(q)) as u8)
    }

    #[inline]
    pub fn trades(&self, t: f64, q: f64) -> bool {
        self.lambda(t) >= self.eta(q)
    }

    /// Largest seller type trading with buyer `t` (`None` if no seller type trades).
    /// The trade set for `t` is `[q1, q_boundary(t)]` because `eta` is non-decreasing.
    pub fn q_boundary(&self, t: f64) -> Option<f64> {
        let qs = self.instance.seller.support();
        let lt = self.lambda(t);
        if !(self.eta(qs.lo) <= lt) {
            return None;
        }
        Some(bisect_last_true(|q| self.eta(q) <= lt, qs.lo, qs.hi))
    }

    /// Smallest buyer type trading with seller `q`; the trade set is `[t_boundary(q), t2]`.
    pub fn t_boundary(&self, q: f64) -> Option<f64> {
        let ts = self.instance.buyer.support();
        let eq = self.eta(q);
        if !(self.lambda(ts.hi) >= eq) {
            return None;
        }
        Some(bisect_first_true(|t| self.lambda(t) >= eq, ts.lo, ts.hi))
    }

    /// Tabulates `lambda` on the buyer grid.
    pub fn lambda_table(&self) -> Tabulated {
        let s = self.instance.buyer.support();
        Tabulated::from_fn(linspace(s.lo, s.hi, self.instance.numerics.grid_n), |t| self.lambda(t))
    }

    /// Tabulates `eta` on the seller grid.
    pub fn eta_table(&self) -> Tabulated {
        let s = self.instance.seller.support();
        Tabulated::from_fn(linspace(s.lo, s.hi, self.instance.numerics.grid_n), |q| self.eta(q))
    }

    /// Buyer payment; at a report whose trade set is a single point the
    /// one-sided limit `v(t, q1)` is returned.
    pub fn buyer_payment_at(&self, t: f64) -> f64 {
        let Some(b) = self.q_boundary(t) else {
            return 0.0;
        };
        let inst = &self.instance;
        let mass = inst.seller.cdf(b);
        if mass <= 0.0 {
            return inst.valuation.value(t, inst.seller.support().lo);
        }
        let gross = self.integrate_q(t, &|q| inst.valuation.value(t, q));
        let rent = self.buyer_rent.integral_to(t, |x| self.rb(x));
        (gross - rent) / mass
    }

    /// Seller payment; at a report whose trade set is a single point the
    /// one-sided limit `r(q)` is returned.
    pub fn seller_payment_at(&self, q: f64) -> f64 {
        let Some(b) = self.t_boundary(q) else {
            return 0.0;
        };
        let inst = &self.instance;
        let k = inst.valuation.k;
        let mass = 1.0 - inst.buyer.cdf(b);
        if mass <= 0.0 {
            return inst.valuation.reserve(q);
        }
        let rent = self.seller_rent.integral_from(q, |x| self.rs(x));
        inst.valuation.reserve(q) + k * rent / mass
    }
}

impl DirectMechanism for ThresholdMechanism {
    fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    fn trade_prob(&self, t: f64, q: f64) -> f64 {
        if self.trades(t, q) {
            1.0
        } else {
            0.0
        }
    }

    fn buyer_payment(&self, t: f64) -> f64 {
        self.buyer_payment_at(t)
    }

    fn seller_payment(&self, q: f64) -> f64 {
        self.seller_payment_at(q)
    }

    fn integrate_q(&self, t: f64, h: &dyn Fn(f64) -> f64) -> f64 {
        let Some(b) = self.q_boundary(t) else {
            return 0.0;
        };
        let inst = &self.instance;
        let lo = inst.seller.support().lo;
        simpson(|q| h(q) * inst.seller.density(q), lo, b, inst.numerics.quad_nodes)
    }

    fn integrate_t(&self, q: f64, h: &dyn Fn(f64) -> f64) -> f64 {
        let Some(b) = self.t_boundary(q) else {
            return 0.0;
        };
        let inst = &self.instance;
        let hi = inst.buyer.support().hi;
        simpson(|t| h(t) * inst.buyer.density(t), b, hi, inst.numerics.quad_nodes)
    }

    fn t_breakpoints(&self) -> Vec<f64> {
        self.t_breaks.clone()
    }

    fn q_breakpoints(&self) -> Vec<f64> {
        self.q_breaks.clone()
    }

    fn trade_mass_q(&self, t: f64) -> f64 {
        self.q_boundary(t).map_or(0.0, |b| self.instance.seller.cdf(b))
    }

    fn trade_mass_t(&self, q: f64) -> f64 {
        self.t_boundary(q).map_or(0.0, |b| 1.0 - self.instance.buyer.cdf(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Distribution, ValuationModel};

    fn ex1() -> ThresholdMechanism {
        solve(&ProblemInstance::example1()).unwrap()
    }

    // closed forms for the uniform [1,2] example
    fn pb_closed(t: f64) -> f64 {
        if t < 1.75 {
            0.0
        } else {
            0.5 + 0.9375 / (2.5 - t)
        }
    }

    fn ps_closed(q: f64) -> f64 {
        if q > 1.5 {
            0.0
        } else if q == 1.5 {
            2.25
        } else {
            9.0 * q / (6.0 - 4.0 * q) * (1.5 / q).ln()
        }
    }

    #[test]
    fn example1_thresholds() {
        let m = ex1();
        assert!(!m.is_ironed());
        for t in linspace(1.0, 2.0, 21) {
            assert!((m.lambda(t) - (2.0 * t - 2.0)).abs() < 1e-12);
        }
        for q in linspace(1.0, 2.0, 21) {
            assert!((m.eta(q) - (3.0 - 1.5 / q)).abs() < 1e-12);
        }
    }

    #[test]
    fn example1_allocation() {
        let m = ex1();
        assert_eq!(m.allocation(1.6, 1.2).unwrap(), 0);
        assert_eq!(m.allocation(2.0, 1.5).unwrap(), 1);
        assert_eq!(m.allocation(1.9, 1.1).unwrap(), 1);
        assert!(m.allocation(2.1, 1.5).is_err());
        assert!(m.allocation(1.5, 0.9).is_err());
    }

    #[test]
    fn example1_payments() {
        let m = ex1();
        assert!((m.buyer_payment(2.0) - 2.375).abs() < 1e-6);
        assert_eq!(m.buyer_payment(1.6), 0.0);
        assert!((m.buyer_payment(1.875) - 2.0).abs() < 1e-4);
        assert!((m.buyer_payment(1.75) - 1.75).abs() < 1e-9);
        assert!((m.seller_payment(1.0) - 4.5 * 1.5f64.ln()).abs() < 1e-6);
        assert!((m.seller_payment(1.5) - 2.25).abs() < 1e-9);
        assert_eq!(m.seller_payment(1.8), 0.0);
        for t in linspace(1.0, 2.0, 41) {
            assert!((m.buyer_payment(t) - pb_closed(t)).abs() < 1e-5, "t={t}");
        }
        for q in linspace(1.0, 2.0, 41) {
            assert!((m.seller_payment(q) - ps_closed(q)).abs() < 1e-5, "q={q}");
        }
    }

    #[test]
    fn example1_interim_rates_and_utilities() {
        let m = ex1();
        assert!((m.rb(2.0) - 0.625).abs() < 1e-10);
        assert!((m.rs(1.0) - 0.25).abs() < 1e-10);
        assert_eq!(m.rs(1.8), 0.0);
        assert!((m.buyer_utility(2.0) - 0.0625).abs() < 1e-6);
        assert_eq!(m.buyer_utility(1.0), 0.0);
        assert!(m.seller_surplus(1.5).abs() < 1e-9);
        assert_eq!(m.seller_surplus(1.8), 0.0);
    }

    #[test]
    fn example1_misreports() {
        let m = ex1();
        assert!((m.misreport_utility_buyer(2.0, 2.0) - m.buyer_utility(2.0)).abs() < 1e-15);
        // reporting 1.875 trades for q <= 1.2 at price 2.0: ∫_1^1.2 (2q − 2) dq = 0.04
        assert!((m.misreport_utility_buyer(1.875, 2.0) - 0.04).abs() < 1e-5);
        assert!(m.misreport_utility_buyer(1.875, 2.0) <= m.buyer_utility(2.0));
        assert_eq!(m.misreport_surplus_seller(1.8, 1.2), 0.0);
    }

    #[test]
    fn example1_revenue_two_routes() {
        let m = ex1();
        let exact = 0.5625 * 1.5f64.ln() - 0.21875;
        let rd = m.revenue_direct();
        let rv = m.revenue_virtual();
        assert!((rd - exact).abs() < 1e-5, "direct {rd}");
        assert!((rv - exact).abs() < 1e-5, "virtual {rv}");
        assert!((rd - rv).abs() < 1e-5);
    }

    #[test]
    fn no_trade_when_reserve_dominates() {
        let mut inst = ProblemInstance::example1();
        inst.valuation.k = 100.0;
        let m = solve(&inst).unwrap();
        for t in linspace(1.0, 2.0, 11) {
            assert_eq!(m.q_boundary(t), None);
            assert_eq!(m.buyer_payment(t), 0.0);
        }
        for q in linspace(1.0, 2.0, 11) {
            assert_eq!(m.seller_payment(q), 0.0);
        }
        assert_eq!(m.revenue_direct(), 0.0);
        assert_eq!(m.revenue_virtual(), 0.0);
    }

    #[test]
    fn invalid_instance_is_rejected() {
        let mut inst = ProblemInstance::example1();
        inst.valuation.k = -1.0;
        assert!(matches!(solve(&inst), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn trade_set_is_prefix_in_q() {
        let inst = ProblemInstance::new(
            Distribution::truncated_normal(1.5, 0.4, 1.0, 2.0).unwrap(),
            Distribution::uniform(0.5, 1.5).unwrap(),
            ValuationModel::parse("1 + 0.5*q", "0.2*q", 1.0).unwrap(),
        );
        let m = solve(&inst).unwrap();
        for t in linspace(1.0, 2.0, 15) {
            let row: Vec<bool> = linspace(0.5, 1.5, 101).iter().map(|&q| m.trades(t, q)).collect();
            let first_gap = row.iter().position(|&x| !x).unwrap_or(row.len());
            assert!(row[first_gap..].iter().all(|&x| !x), "t={t}");
        }
    }
}
