//! Command-line front end: `mediator <command> [config] [options]`.
//!
//! Exit codes: 0 success, 1 a check failed (`verify`, `example1`), 2 bad input
//! (arguments, config, expressions), 3 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::mechanism::{solve, DirectMechanism, ThresholdMechanism};
use crate::model::{ProblemInstance, Side};
use crate::numeric::linspace;
use crate::verify::{audit, ironing_corrections, loss_region, lp_oracle_with, AuditTolerances};
use crate::IronedFunction;

#[derive(Debug, Parser)]
#[command(name = "mediator", version, about = "Optimal mediated bilateral trade")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance; writes summary.json and curve CSVs.
    Solve(Common),
    /// Audit the solved mechanism; exits 1 on any violation.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Lattice size for the pairwise incentive checks.
        #[arg(long, default_value_t = 101)]
        audit_grid: usize,
        /// Worst acceptable misreport gain.
        #[arg(long, default_value_t = 1e-5)]
        ic_tol: f64,
        /// Worst acceptable envelope-identity error.
        #[arg(long, default_value_t = 1e-3)]
        envelope_tol: f64,
    },
    /// Solve the discretized program at several grid sizes.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Comma-separated square grid sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [8usize, 16, 24])]
        grids: Vec<usize>,
    },
    /// Classify a lattice of type profiles as no trade, profitable or loss-making trade.
    Region {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        nt: usize,
        #[arg(long, default_value_t = 200)]
        nq: usize,
    },
    /// Export the ironing tables (w, h, H, L, l) and ironed intervals.
    Iron(Common),
    /// Run the built-in uniform example and compare with its closed forms.
    Example1 {
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Instance config (JSON).
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Override the tabulation grid size.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Override the quadrature node count.
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    /// Override the ironing grid size.
    #[arg(long)]
    pub iron_grid_n: Option<usize>,
    /// Override the monotonicity tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Exit status of a command that ran to completion.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return e.exit_code();
        }
    };
    match execute(cli, stdout) {
        Ok(o) => o.code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_input_error() {
                2
            } else {
                3
            }
        }
    }
}

fn load(common: &Common) -> Result<ProblemInstance> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut inst = ProblemInstance::from_json(&text)?;
    let n = &mut inst.numerics;
    if let Some(v) = common.grid_n {
        n.grid_n = v;
    }
    if let Some(v) = common.quad_nodes {
        n.quad_nodes = v;
    }
    if let Some(v) = common.iron_grid_n {
        n.iron_grid_n = v;
    }
    if let Some(v) = common.tol {
        n.tol = v;
    }
    if n.grid_n < 2 || n.quad_nodes < 3 || n.iron_grid_n < 3 || !(n.tol >= 0.0) {
        return Err(Error::Config("grid sizes must be >= 3 and tol >= 0".into()));
    }
    Ok(inst)
}

fn prepare(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        let line: Vec<String> = row.into_iter().map(num).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<Outcome> {
    match cli.command {
        Command::Solve(c) => {
            let inst = load(&c)?;
            prepare(&c.out)?;
            let m = solve(&inst)?;
            let summary = write_solution(&m, &c.out)?;
            writeln!(
                stdout,
                "revenue {:.6} (virtual {:.6}); regular buyer={} seller={}",
                summary.revenue_direct, summary.revenue_virtual, summary.buyer_regular, summary.seller_regular
            )?;
            Ok(Outcome { code: 0 })
        }
        Command::Verify {
            common,
            audit_grid,
            ic_tol,
            envelope_tol,
        } => {
            let inst = load(&common)?;
            prepare(&common.out)?;
            let m = solve(&inst)?;
            let report = audit(&m, audit_grid.max(2));
            let tol = AuditTolerances {
                ic: ic_tol,
                envelope: envelope_tol,
                ..AuditTolerances::default()
            };
            let violations = report.violations(&tol);
            write_json(
                &common.out.join("audit.json"),
                &json!({ "report": report, "tolerances": tol, "violations": violations }),
            )?;
            if violations.is_empty() {
                writeln!(stdout, "audit passed on a {audit_grid}x{audit_grid} lattice")?;
                Ok(Outcome { code: 0 })
            } else {
                for v in &violations {
                    writeln!(stdout, "violation: {v}")?;
                }
                Ok(Outcome { code: 1 })
            }
        }
        Command::Oracle { common, grids } => {
            let inst = load(&common)?;
            prepare(&common.out)?;
            let m = solve(&inst)?;
            let continuous = m.revenue_direct();
            let mut results = Vec::new();
            let mut table = String::from("nt,nq,lp_revenue,closed_form_on_grid_revenue,gap,abs_error,pivots\n");
            for &n in &grids {
                let r = lp_oracle_with(&m, n, n)?;
                let err = (r.lp_revenue - continuous).abs();
                let _ = writeln!(
                    table,
                    "{n},{n},{},{},{},{},{}",
                    num(r.lp_revenue),
                    num(r.closed_form_on_grid_revenue),
                    num(r.gap),
                    num(err),
                    r.pivots
                );
                writeln!(stdout, "{n}x{n}: lp {:.6} closed form {:.6} |lp - continuous| {:.3e}", r.lp_revenue, r.closed_form_on_grid_revenue, err)?;
                results.push(r);
            }
            fs::write(common.out.join("oracle.csv"), table)?;
            write_json(
                &common.out.join("oracle.json"),
                &json!({ "continuous_revenue": continuous, "results": results }),
            )?;
            Ok(Outcome { code: 0 })
        }
        Command::Region { common, nt, nq } => {
            let inst = load(&common)?;
            prepare(&common.out)?;
            if nt < 2 || nq < 2 {
                return Err(Error::InvalidArgument("region lattice needs at least 2 x 2 points".into()));
            }
            let m = solve(&inst)?;
            let cells = loss_region(&m, nt, nq);
            let mut s = String::from("t,q,status\n");
            let mut counts = [0usize; 3];
            for c in &cells {
                let status = match c.status {
                    crate::verify::RegionStatus::NoTrade => 0,
                    crate::verify::RegionStatus::TradeProfit => 1,
                    crate::verify::RegionStatus::TradeLoss => 2,
                };
                counts[status] += 1;
                let name = ["no_trade", "trade_profit", "trade_loss"][status];
                let _ = writeln!(s, "{},{},{name}", num(c.t), num(c.q));
            }
            fs::write(common.out.join("region.csv"), s)?;
            writeln!(
                stdout,
                "no_trade {} trade_profit {} trade_loss {}",
                counts[0], counts[1], counts[2]
            )?;
            Ok(Outcome { code: 0 })
        }
        Command::Iron(c) => {
            let inst = load(&c)?;
            prepare(&c.out)?;
            let m = solve(&inst)?;
            let mut intervals = String::from("side,w_lo,w_hi,x_lo,x_hi\n");
            for side in [Side::Buyer, Side::Seller] {
                let iron = m.ironing(side).expect("solve irons both sides");
                let name = side_name(side);
                write_ironing(iron, &c.out.join(format!("iron_{name}.csv")))?;
                for (&(a, b), (x, y)) in iron.ironed_intervals.iter().zip(iron.ironed_type_intervals()) {
                    let _ = writeln!(intervals, "{name},{},{},{},{}", num(a), num(b), num(x), num(y));
                }
                writeln!(stdout, "{name}: {} ironed interval(s)", iron.ironed_intervals.len())?;
            }
            fs::write(c.out.join("ironed_intervals.csv"), intervals)?;
            Ok(Outcome { code: 0 })
        }
        Command::Example1 { out } => {
            prepare(&out)?;
            let m = solve(&ProblemInstance::example1())?;
            let checks = example1_checks(&m);
            write_json(&out.join("example1.json"), &checks)?;
            let mut ok = true;
            for c in &checks {
                ok &= c.pass;
                writeln!(
                    stdout,
                    "{} {}: got {:.9} expected {:.9} (tol {:.0e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.got,
                    c.expected,
                    c.tol
                )?;
            }
            Ok(Outcome { code: if ok { 0 } else { 1 } })
        }
    }
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Buyer => "buyer",
        Side::Seller => "seller",
    }
}

#[derive(Debug, Serialize)]
struct Summary {
    revenue_direct: f64,
    revenue_virtual: f64,
    regular: bool,
    buyer_regular: bool,
    seller_regular: bool,
    buyer_ironed_intervals: Vec<(f64, f64)>,
    seller_ironed_intervals: Vec<(f64, f64)>,
    buyer_utility_low: f64,
    seller_surplus_high: f64,
    trade_probability: f64,
    ironing_corrections: Option<crate::verify::IroningCorrections>,
    instance: crate::model::InstanceConfig,
}

fn write_solution(m: &ThresholdMechanism, dir: &Path) -> Result<Summary> {
    let inst = m.instance();
    let n = inst.numerics.grid_n;
    let ts = inst.buyer.support();
    let qs = inst.seller.support();
    let t_grid = linspace(ts.lo, ts.hi, n);
    let q_grid = linspace(qs.lo, qs.hi, n);
    let reg = m.regularity().expect("solved mechanism");
    let profile = m.profile().expect("solved mechanism");

    write_csv(
        &dir.join("buyer.csv"),
        "t,lambda,Pb,Rb,Ub",
        t_grid
            .iter()
            .map(|&t| vec![t, m.lambda(t), m.buyer_payment(t), m.rb(t), m.buyer_utility(t)]),
    )?;
    write_csv(
        &dir.join("seller.csv"),
        "q,eta,Ps,Rs,SU",
        q_grid
            .iter()
            .map(|&q| vec![q, m.eta(q), m.seller_payment(q), m.rs(q), m.seller_surplus(q)]),
    )?;
    write_csv(
        &dir.join("psi.csv"),
        "t,psi",
        profile.psi.xs.iter().zip(&profile.psi.ys).map(|(&x, &y)| vec![x, y]),
    )?;
    write_csv(
        &dir.join("varphi.csv"),
        "q,varphi",
        profile.varphi.xs.iter().zip(&profile.varphi.ys).map(|(&x, &y)| vec![x, y]),
    )?;

    let intervals = |side| {
        if m.side_ironed(side) {
            m.ironing(side).map(|i| i.ironed_type_intervals()).unwrap_or_default()
        } else {
            Vec::new()
        }
    };
    let trade_probability = crate::numeric::simpson_split(
        |t| inst.buyer.density(t) * m.trade_mass_q(t),
        ts.lo,
        ts.hi,
        &m.t_breakpoints(),
        inst.numerics.quad_nodes,
    );
    let summary = Summary {
        revenue_direct: m.revenue_direct(),
        revenue_virtual: m.revenue_virtual(),
        regular: reg.buyer_regular && reg.seller_regular,
        buyer_regular: reg.buyer_regular,
        seller_regular: reg.seller_regular,
        buyer_ironed_intervals: intervals(Side::Buyer),
        seller_ironed_intervals: intervals(Side::Seller),
        buyer_utility_low: m.buyer_utility(ts.lo),
        seller_surplus_high: m.seller_surplus(qs.hi),
        trade_probability,
        ironing_corrections: ironing_corrections(m),
        instance: inst.to_config(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn write_ironing(iron: &IronedFunction, path: &Path) -> Result<()> {
    write_csv(
        path,
        "w,h,H,L,l",
        (0..iron.w_grid.len()).map(|i| {
            let w = iron.w_grid[i];
            vec![w, iron.h[i], iron.cum_h[i], iron.envelope[i], iron.slope_at_w(w)]
        }),
    )
}

/// One comparison against a closed-form value.
#[derive(Debug, Clone, Serialize)]
pub struct GoldenCheck {
    pub name: String,
    pub got: f64,
    pub expected: f64,
    pub tol: f64,
    pub pass: bool,
}

fn check(name: impl Into<String>, got: f64, expected: f64, tol: f64) -> GoldenCheck {
    GoldenCheck {
        name: name.into(),
        got,
        expected,
        tol,
        pass: (got - expected).abs() <= tol,
    }
}

/// Comparisons of the solved uniform example against its closed forms: thresholds
/// at 21 points, payments at the quoted types and the expected revenue.
pub fn example1_checks(m: &ThresholdMechanism) -> Vec<GoldenCheck> {
    let mut out = Vec::new();
    let pts = linspace(1.0, 2.0, 21);
    let lam_err = pts.iter().map(|&t| (m.lambda(t) - (2.0 * t - 2.0)).abs()).fold(0.0, f64::max);
    let eta_err = pts.iter().map(|&q| (m.eta(q) - (3.0 - 1.5 / q)).abs()).fold(0.0, f64::max);
    out.push(check("max |lambda - (2t - 2)| at 21 points", lam_err, 0.0, 1e-9));
    out.push(check("max |eta - (3 - 1.5/q)| at 21 points", eta_err, 0.0, 1e-9));
    out.push(check("Pb(2)", m.buyer_payment(2.0), 2.375, 1e-3));
    out.push(check("Pb(1.75)", m.buyer_payment(1.75), 1.75, 1e-3));
    out.push(check("Pb(1.5)", m.buyer_payment(1.5), 0.0, 1e-3));
    out.push(check("Ps(1)", m.seller_payment(1.0), 4.5 * 1.5f64.ln(), 1e-3));
    out.push(check("Ps(1.5)", m.seller_payment(1.5), 2.25, 1e-3));
    out.push(check("Ps(1.8)", m.seller_payment(1.8), 0.0, 1e-3));
    out.push(check("revenue", m.revenue_direct(), 0.5625 * 1.5f64.ln() - 0.21875, 1e-4));
    out
}
