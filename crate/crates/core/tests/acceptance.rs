//! Acceptance suite. Runs without the libtest harness so every criterion prints a
//! PASS/FAIL line in plain `cargo test` output; exits non-zero if any fails.

mod common;

use std::time::Instant;

use mediator_core::cli::example1_checks;
use mediator_core::mechanism::{solve, DirectMechanism, Threshold, ThresholdMechanism};
use mediator_core::numeric::{linspace, Tabulated};
use mediator_core::verify::{
    audit, classify_point, ironing_corrections, loss_region, lp_oracle_with, prefix_violation, RegionStatus,
};
use mediator_core::{ProblemInstance, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn example1_revenue() -> f64 {
    0.5625 * 1.5f64.ln() - 0.21875
}

fn golden_example1() -> Outcome {
    let start = Instant::now();
    let m = solve(&ProblemInstance::example1()).map_err(|e| e.to_string())?;
    let checks = example1_checks(&m);
    let secs = start.elapsed().as_secs_f64();
    for c in &checks {
        ensure(c.pass, format!("{}: got {} expected {} (tol {:e})", c.name, c.got, c.expected, c.tol))?;
    }
    ensure(secs < 10.0, format!("took {secs:.2}s"))?;
    Ok(format!("{} closed-form checks in {secs:.3}s", checks.len()))
}

/// A strictly increasing random table on `[1, 2]` starting near `base`.
fn random_table(rng: &mut ChaCha8Rng, base: f64, span: f64) -> Tabulated {
    let n = rng.gen_range(4..12);
    let xs = linspace(1.0, 2.0, n);
    let mut y = base + rng.gen_range(-0.25..0.25);
    let steps: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = steps.iter().sum();
    let mut ys = vec![y];
    for s in steps {
        y += span * s / total;
        ys.push(y);
    }
    Tabulated::new(xs, ys)
}

fn revenue_routes_agree() -> Outcome {
    let m = solve(&ProblemInstance::example1()).map_err(|e| e.to_string())?;
    let (d, v) = (m.revenue_direct(), m.revenue_virtual());
    ensure((d - v).abs() <= 1e-4, format!("example 1: direct {d} virtual {v}"))?;
    ensure((d - example1_revenue()).abs() <= 1e-4, format!("example 1 revenue {d}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(20261015);
    let mut worst: f64 = 0.0;
    let mut trading = 0;
    for i in 0..20 {
        let (span_b, span_s) = (rng.gen_range(0.5..2.5), rng.gen_range(0.5..2.5));
        let lambda = random_table(&mut rng, 0.2, span_b);
        let eta = random_table(&mut rng, 0.6, span_s);
        let m = ThresholdMechanism::from_thresholds(
            ProblemInstance::example1(),
            Threshold::Tabulated(lambda),
            Threshold::Tabulated(eta),
        );
        let (d, v) = (m.revenue_direct(), m.revenue_virtual());
        ensure((d - v).abs() <= 1e-4, format!("random mechanism {i}: direct {d} virtual {v}"))?;
        worst = worst.max((d - v).abs());
        if m.trades(2.0, 1.0) {
            trading += 1;
        }
    }
    ensure(trading >= 10, format!("only {trading} of 20 random mechanisms trade"))?;
    Ok(format!("example 1 plus 20 random threshold mechanisms, worst gap {worst:.2e}"))
}

fn corpus_feasibility() -> Outcome {
    let corpus = common::corpus();
    for c in &corpus {
        let m = solve(&c.inst).map_err(|e| format!("{}: {e}", c.name))?;
        let a = audit(&m, 101);
        let name = c.name;
        ensure(a.rb_max_backslide <= 1e-9, format!("{name}: R_b backslide {}", a.rb_max_backslide))?;
        ensure(a.rs_max_backslide <= 1e-9, format!("{name}: R_s backslide {}", a.rs_max_backslide))?;
        ensure(a.buyer_utility_low.abs() <= 1e-6, format!("{name}: U_b(t1) = {}", a.buyer_utility_low))?;
        ensure(a.seller_surplus_high.abs() <= 1e-6, format!("{name}: SU(q2) = {}", a.seller_surplus_high))?;
        ensure(a.ir_buyer_min >= -1e-6 && a.ir_seller_min >= -1e-6, format!("{name}: IR fails"))?;
        ensure(
            a.envelope_buyer_maxerr <= 1e-3 && a.envelope_seller_maxerr <= 1e-3,
            format!("{name}: envelope errors {} {}", a.envelope_buyer_maxerr, a.envelope_seller_maxerr),
        )?;
        ensure(
            a.ic_buyer_worst.gain <= 1e-5 && a.ic_seller_worst.gain <= 1e-5,
            format!("{name}: IC gains {:?} {:?}", a.ic_buyer_worst, a.ic_seller_worst),
        )?;
    }
    Ok(format!("{} instances audited on a 101x101 lattice", corpus.len()))
}

fn lp_oracle_convergence() -> Outcome {
    let start = Instant::now();
    let m = solve(&ProblemInstance::example1()).map_err(|e| e.to_string())?;
    let target = example1_revenue();
    let mut errs = Vec::new();
    for n in [8, 16, 24] {
        let r = lp_oracle_with(&m, n, n).map_err(|e| e.to_string())?;
        ensure(
            r.lp_revenue >= r.closed_form_on_grid_revenue - 1e-7,
            format!("{n}x{n}: lp {} below closed form {}", r.lp_revenue, r.closed_form_on_grid_revenue),
        )?;
        errs.push((r.lp_revenue - target).abs());
    }
    ensure(errs.windows(2).all(|w| w[1] < w[0]), format!("errors not decreasing: {errs:?}"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, format!("took {secs:.1}s"))?;
    Ok(format!(
        "errors {:.2e} > {:.2e} > {:.2e} in {secs:.2}s",
        errs[0], errs[1], errs[2]
    ))
}

fn ironing_suite() -> Outcome {
    let corpus = common::corpus();
    let mut irregular = 0;
    for c in &corpus {
        let m = solve(&c.inst).map_err(|e| format!("{}: {e}", c.name))?;
        for (side, regular) in [(Side::Buyer, c.buyer_regular), (Side::Seller, c.seller_regular)] {
            let iron = m.ironing(side).ok_or(format!("{}: no ironing", c.name))?;
            let tag = format!("{} {side:?}", c.name);
            if regular {
                ensure(!m.side_ironed(side), format!("{tag}: regular side was ironed"))?;
                ensure(iron.is_trivial(), format!("{tag}: spurious ironed intervals {:?}", iron.ironed_intervals))?;
                continue;
            }
            ensure(!iron.is_trivial(), format!("{tag}: expected an ironed interval"))?;
            ensure(iron.slopes.windows(2).all(|w| w[1] >= w[0]), format!("{tag}: slopes decrease"))?;
            ensure(
                iron.envelope.iter().zip(&iron.cum_h).all(|(l, h)| *l <= h + 1e-12),
                format!("{tag}: L exceeds H"),
            )?;
            let last = iron.cum_h.len() - 1;
            ensure(
                (iron.envelope[0] - iron.cum_h[0]).abs() <= 1e-9
                    && (iron.envelope[last] - iron.cum_h[last]).abs() <= 1e-9,
                format!("{tag}: envelope does not touch at the endpoints"),
            )?;
        }
        if !(c.buyer_regular && c.seller_regular) {
            irregular += 1;
            let k = ironing_corrections(&m).ok_or(format!("{}: no corrections", c.name))?;
            ensure(
                k.buyer.abs() <= 1e-6 && k.seller.abs() <= 1e-6,
                format!("{}: corrections {k:?}", c.name),
            )?;
        }
    }
    ensure(irregular >= 3, format!("only {irregular} irregular instances"))?;
    Ok(format!("{irregular} irregular instances, regular sides left untouched"))
}

fn region_scan() -> Outcome {
    let m = solve(&ProblemInstance::example1()).map_err(|e| e.to_string())?;
    let (nt, nq) = (200, 200);
    let cells = loss_region(&m, nt, nq);
    for s in [RegionStatus::NoTrade, RegionStatus::TradeProfit, RegionStatus::TradeLoss] {
        ensure(cells.iter().any(|c| c.status == s), format!("no {s:?} cell"))?;
    }
    // cells are row-major in t; the first trading t in each q column should sit on t = 2.5 - 0.75/q
    let dt = 1.0 / (nt - 1) as f64;
    let q_lat = linspace(1.0, 2.0, nq);
    for (j, &q) in q_lat.iter().enumerate() {
        let boundary = 2.5 - 0.75 / q;
        let first = (0..nt).map(|i| &cells[i * nq + j]).find(|c| c.status != RegionStatus::NoTrade);
        match first {
            Some(c) => ensure(
                (c.t - boundary).abs() <= dt + 1e-12,
                format!("q = {q}: first trade at t = {} vs {boundary}", c.t),
            )?,
            None => ensure(boundary > 2.0 - dt, format!("q = {q}: no trade but boundary {boundary}"))?,
        }
    }
    let p = classify_point(&m, 1.875, 1.2);
    ensure(p.status == RegionStatus::TradeLoss, format!("(1.875, 1.2) is {:?}", p.status))?;
    let loss = cells.iter().filter(|c| c.status == RegionStatus::TradeLoss).count();
    Ok(format!("{nt}x{nq} scan, {loss} loss cells, boundary within one cell"))
}

fn prefix_and_seller_rates() -> Outcome {
    let corpus = common::corpus();
    for c in &corpus {
        let m = solve(&c.inst).map_err(|e| format!("{}: {e}", c.name))?;
        if let Some(t) = prefix_violation(&m, 101) {
            return Err(format!("{}: trade set at t = {t} is not a prefix", c.name));
        }
        let qs = c.inst.seller.support();
        let rs: Vec<f64> = linspace(qs.lo, qs.hi, 401).into_iter().map(|q| m.rs(q)).collect();
        ensure(rs.windows(2).all(|w| w[1] <= w[0] + 1e-12), format!("{}: R_s increases", c.name))?;
    }
    Ok(format!("{} instances scanned", corpus.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("example 1 golden values", golden_example1),
        ("revenue by both routes", revenue_routes_agree),
        ("corpus feasibility audit", corpus_feasibility),
        ("LP oracle dominance and convergence", lp_oracle_convergence),
        ("ironing invariants", ironing_suite),
        ("loss region scan", region_scan),
        ("prefix trade sets and seller rates", prefix_and_seller_rates),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} ({name}): PASS: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
