use serde::Serialize;

use crate::mechanism::DirectMechanism;
use crate::numeric::linspace;

/// A worst incentive-compatibility violation: the type, its best misreport and the gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IcWitness {
    pub truth: f64,
    pub report: f64,
    pub gain: f64,
}

/// Outcome of [`audit`]. Worst-case values are exact maxima over the audit lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub grid_n: usize,
    pub monotone_rb_ok: bool,
    /// Largest decrease of `R_b` between neighbouring lattice points, with its location.
    pub rb_max_backslide: f64,
    pub rb_backslide_at: Option<f64>,
    pub monotone_rs_ok: bool,
    /// Largest increase of `R_s` between neighbouring lattice points, with its location.
    pub rs_max_backslide: f64,
    pub rs_backslide_at: Option<f64>,
    pub envelope_buyer_maxerr: f64,
    pub envelope_seller_maxerr: f64,
    pub ir_buyer_min: f64,
    pub ir_seller_min: f64,
    /// `U_b(t1)`.
    pub buyer_utility_low: f64,
    /// `SU(q2)`.
    pub seller_surplus_high: f64,
    pub ic_buyer_worst: IcWitness,
    pub ic_seller_worst: IcWitness,
    pub obedience_equals_ir: bool,
}

/// Thresholds used to turn an [`AuditReport`] into pass/fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditTolerances {
    pub monotone: f64,
    pub envelope: f64,
    pub ir: f64,
    pub ic: f64,
}

impl Default for AuditTolerances {
    fn default() -> Self {
        Self {
            monotone: 1e-9,
            envelope: 1e-3,
            ir: 1e-6,
            ic: 1e-5,
        }
    }
}

impl AuditReport {
    /// Human-readable list of every check that fails under `tol`.
    pub fn violations(&self, tol: &AuditTolerances) -> Vec<String> {
        let mut out = Vec::new();
        if self.rb_max_backslide > tol.monotone {
            out.push(format!(
                "R_b decreases by {:.3e} near t = {:?}",
                self.rb_max_backslide, self.rb_backslide_at
            ));
        }
        if self.rs_max_backslide > tol.monotone {
            out.push(format!(
                "R_s increases by {:.3e} near q = {:?}",
                self.rs_max_backslide, self.rs_backslide_at
            ));
        }
        if self.envelope_buyer_maxerr > tol.envelope {
            out.push(format!("buyer envelope identity off by {:.3e}", self.envelope_buyer_maxerr));
        }
        if self.envelope_seller_maxerr > tol.envelope {
            out.push(format!("seller envelope identity off by {:.3e}", self.envelope_seller_maxerr));
        }
        if self.ir_buyer_min < -tol.ir {
            out.push(format!("buyer IR violated: min U_b = {:.3e}", self.ir_buyer_min));
        }
        if self.ir_seller_min < -tol.ir {
            out.push(format!("seller IR violated: min SU = {:.3e}", self.ir_seller_min));
        }
        if self.ic_buyer_worst.gain > tol.ic {
            let w = self.ic_buyer_worst;
            out.push(format!("buyer t={} gains {:.3e} by reporting {}", w.truth, w.gain, w.report));
        }
        if self.ic_seller_worst.gain > tol.ic {
            let w = self.ic_seller_worst;
            out.push(format!("seller q={} gains {:.3e} by reporting {}", w.truth, w.gain, w.report));
        }
        if !self.obedience_equals_ir {
            out.push("obedience slack differs from IR slack".into());
        }
        out
    }

    pub fn passes(&self, tol: &AuditTolerances) -> bool {
        self.violations(tol).is_empty()
    }
}

/// Sub-intervals per lattice cell used for the envelope integrals (even, for Simpson).
const ENVELOPE_REFINE: usize = 8;

fn cumulative_simpson<F: Fn(f64) -> f64>(lattice: &[f64], breaks: &[f64], f: F) -> Vec<f64> {
    let mut out = Vec::with_capacity(lattice.len());
    out.push(0.0);
    for w in lattice.windows(2) {
        let v = crate::numeric::simpson_split(&f, w[0], w[1], breaks, ENVELOPE_REFINE + 1);
        out.push(out[out.len() - 1] + v);
    }
    out
}

fn obedience_matches(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Feasibility and incentive audit on an `n x n` lattice of reports and misreports.
///
/// Buyer misreports that end in refusing trade are covered by the IR check
/// (`U_b(t) >= 0`), so only trade-following misreports are compared.
pub fn audit(m: &dyn DirectMechanism, grid_n: usize) -> AuditReport {
    let n = grid_n.max(2);
    let inst = m.instance();
    let v = &inst.valuation;
    let ts = inst.buyer.support();
    let qs = inst.seller.support();
    let t_lat = linspace(ts.lo, ts.hi, n);
    let q_lat = linspace(qs.lo, qs.hi, n);

    // per-report buyer quantities: U_b(t'; t) = t·R_b(t') + A2(t') − P_b(t')·mass(t')
    let mass_b: Vec<f64> = t_lat.iter().map(|&t| m.trade_mass_q(t)).collect();
    let rb: Vec<f64> = t_lat.iter().map(|&t| m.rb(t)).collect();
    let a2: Vec<f64> = t_lat.iter().map(|&t| m.integrate_q(t, &|q| v.alpha2(q))).collect();
    let pb: Vec<f64> = t_lat.iter().map(|&t| m.buyer_payment(t)).collect();
    let misreport_b = |report: usize, truth: usize| -> f64 {
        if mass_b[report] == 0.0 {
            0.0
        } else {
            t_lat[truth] * rb[report] + a2[report] - pb[report] * mass_b[report]
        }
    };
    let ub: Vec<f64> = (0..n).map(|i| misreport_b(i, i)).collect();

    // per-report seller quantities: SU(q'; q) = (P_s(q') − k q)·mass(q')
    let mass_s: Vec<f64> = q_lat.iter().map(|&q| m.trade_mass_t(q)).collect();
    let ps: Vec<f64> = q_lat.iter().map(|&q| m.seller_payment(q)).collect();
    let misreport_s = |report: usize, truth: usize| -> f64 {
        if mass_s[report] == 0.0 {
            0.0
        } else {
            (ps[report] - v.reserve(q_lat[truth])) * mass_s[report]
        }
    };
    let su: Vec<f64> = (0..n).map(|j| misreport_s(j, j)).collect();

    let (mut rb_back, mut rb_at) = (0.0, None);
    for i in 0..n - 1 {
        let d = rb[i] - rb[i + 1];
        if d > rb_back {
            rb_back = d;
            rb_at = Some(t_lat[i]);
        }
    }
    let rs: &Vec<f64> = &mass_s;
    let (mut rs_back, mut rs_at) = (0.0, None);
    for j in 0..n - 1 {
        let d = rs[j + 1] - rs[j];
        if d > rs_back {
            rs_back = d;
            rs_at = Some(q_lat[j]);
        }
    }

    let int_rb = cumulative_simpson(&t_lat, &m.t_breakpoints(), |t| m.rb(t));
    let int_rs = cumulative_simpson(&q_lat, &m.q_breakpoints(), |q| m.rs(q));
    let envelope_buyer_maxerr = (0..n)
        .map(|i| (ub[i] - ub[0] - int_rb[i]).abs())
        .fold(0.0, f64::max);
    let envelope_seller_maxerr = (0..n)
        .map(|j| (su[j] - su[0] + v.k * int_rs[j]).abs())
        .fold(0.0, f64::max);

    let mut ic_b = IcWitness {
        truth: t_lat[0],
        report: t_lat[0],
        gain: f64::NEG_INFINITY,
    };
    for truth in 0..n {
        for report in 0..n {
            let gain = misreport_b(report, truth) - ub[truth];
            if gain > ic_b.gain {
                ic_b = IcWitness {
                    truth: t_lat[truth],
                    report: t_lat[report],
                    gain,
                };
            }
        }
    }
    let mut ic_s = IcWitness {
        truth: q_lat[0],
        report: q_lat[0],
        gain: f64::NEG_INFINITY,
    };
    for truth in 0..n {
        for report in 0..n {
            let gain = misreport_s(report, truth) - su[truth];
            if gain > ic_s.gain {
                ic_s = IcWitness {
                    truth: q_lat[truth],
                    report: q_lat[report],
                    gain,
                };
            }
        }
    }

    let obedience_equals_ir = t_lat
        .iter()
        .all(|&t| obedience_matches(m.buyer_obedience(t), m.buyer_utility(t)))
        && q_lat
            .iter()
            .all(|&q| obedience_matches(m.seller_obedience(q), m.seller_surplus(q)));

    AuditReport {
        grid_n: n,
        monotone_rb_ok: rb_back <= 1e-9,
        rb_max_backslide: rb_back,
        rb_backslide_at: rb_at,
        monotone_rs_ok: rs_back <= 1e-9,
        rs_max_backslide: rs_back,
        rs_backslide_at: rs_at,
        envelope_buyer_maxerr,
        envelope_seller_maxerr,
        ir_buyer_min: ub.iter().copied().fold(f64::INFINITY, f64::min),
        ir_seller_min: su.iter().copied().fold(f64::INFINITY, f64::min),
        buyer_utility_low: ub[0],
        seller_surplus_high: su[n - 1],
        ic_buyer_worst: ic_b,
        ic_seller_worst: ic_s,
        obedience_equals_ir,
    }
}

/// Obedience equals IR at the formula level (to 1e-12) and both are non-negative
/// (to −1e-9) on the lattice used by [`audit`] with its default size.
pub fn obedience_check(m: &dyn DirectMechanism) -> bool {
    obedience_check_on(m, 101)
}

pub fn obedience_check_on(m: &dyn DirectMechanism, grid_n: usize) -> bool {
    let inst = m.instance();
    let ts = inst.buyer.support();
    let qs = inst.seller.support();
    let buyer_ok = linspace(ts.lo, ts.hi, grid_n).into_iter().all(|t| {
        let (ob, ir) = (m.buyer_obedience(t), m.buyer_utility(t));
        obedience_matches(ob, ir) && ob >= -1e-9 && ir >= -1e-9
    });
    let seller_ok = linspace(qs.lo, qs.hi, grid_n).into_iter().all(|q| {
        let (ob, ir) = (m.seller_obedience(q), m.seller_surplus(q));
        obedience_matches(ob, ir) && ob >= -1e-9 && ir >= -1e-9
    });
    buyer_ok && seller_ok
}
