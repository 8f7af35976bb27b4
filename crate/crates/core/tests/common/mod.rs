#![allow(dead_code)]

use mediator_core::model::{Distribution, ValuationModel};
use mediator_core::numeric::linspace;
use mediator_core::ProblemInstance;

pub struct Case {
    pub name: &'static str,
    pub inst: ProblemInstance,
    pub buyer_regular: bool,
    pub seller_regular: bool,
}

fn mixture(lo: f64, hi: f64, modes: &[f64], width: f64, floor: f64) -> Distribution {
    let pts: Vec<(f64, f64)> = linspace(lo, hi, 401)
        .into_iter()
        .map(|x| {
            let bumps: f64 = modes
                .iter()
                .map(|m| (-0.5 * ((x - m) / width).powi(2)).exp())
                .sum();
            (x, bumps + floor)
        })
        .collect();
    Distribution::tabulated(&pts).unwrap()
}

/// Two well-separated normal bumps on `[0, 1]` over a small floor.
pub fn bimodal() -> Distribution {
    mixture(0.0, 1.0, &[0.3, 0.75], 0.05, 1e-3)
}

fn tent() -> Distribution {
    let pts: Vec<(f64, f64)> = linspace(0.0, 2.0, 81)
        .into_iter()
        .map(|x| (x, 1.0 - (x - 1.0).abs() * 0.8))
        .collect();
    Distribution::tabulated(&pts).unwrap()
}

fn val(a1: &str, a2: &str, k: f64) -> ValuationModel {
    ValuationModel::parse(a1, a2, k).unwrap()
}

fn case(name: &'static str, inst: ProblemInstance, b: bool, s: bool) -> Case {
    Case {
        name,
        inst,
        buyer_regular: b,
        seller_regular: s,
    }
}

/// Seller transform `2q − alpha2(q)` with a bump in `alpha2` steep enough to bend it down.
pub const SELLER_BUMP: &str = "40*q^2*(1-q)^2";

pub fn corpus() -> Vec<Case> {
    let u01 = || Distribution::uniform(0.0, 1.0).unwrap();
    vec![
        case("example1", ProblemInstance::example1(), true, true),
        case("uniform-unit", ProblemInstance::new(u01(), u01(), val("1", "0", 1.0)), true, true),
        case(
            "truncnormal-buyer",
            ProblemInstance::new(
                Distribution::truncated_normal(0.6, 0.2, 0.0, 1.0).unwrap(),
                u01(),
                val("1 + 0.5*q", "0.1*q", 1.2),
            ),
            true,
            true,
        ),
        case(
            "beta-both",
            ProblemInstance::new(
                Distribution::beta_rescaled(2.0, 3.0, 0.0, 1.0, Some((-0.25, 1.25))).unwrap(),
                Distribution::beta_rescaled(2.0, 2.0, 0.0, 1.0, Some((-0.2, 1.2))).unwrap(),
                val("1", "0.2", 1.0),
            ),
            true,
            true,
        ),
        case(
            "beta-shifted",
            ProblemInstance::new(
                Distribution::beta_rescaled(3.0, 1.5, 1.0, 3.0, Some((0.8, 3.2))).unwrap(),
                Distribution::uniform(1.0, 2.0).unwrap(),
                val("q", "0", 1.3),
            ),
            true,
            true,
        ),
        case(
            "tabulated-tent",
            ProblemInstance::new(
                tent(),
                Distribution::truncated_normal(0.8, 0.3, 0.0, 2.0).unwrap(),
                val("1", "0", 1.0),
            ),
            true,
            true,
        ),
        case(
            "truncnormal-both",
            ProblemInstance::new(
                Distribution::truncated_normal(0.5, 0.25, 0.0, 1.0).unwrap(),
                Distribution::truncated_normal(0.4, 0.3, 0.0, 1.0).unwrap(),
                val("2 - q", "0.3", 1.1),
            ),
            true,
            true,
        ),
        case("bimodal-buyer", ProblemInstance::new(bimodal(), u01(), val("1", "0", 1.0)), false, true),
        case("seller-bump", ProblemInstance::new(u01(), u01(), val("1", SELLER_BUMP, 1.0)), true, false),
        case("bimodal-seller", ProblemInstance::new(u01(), bimodal(), val("1", "0", 1.0)), true, false),
        case(
            "both-irregular",
            ProblemInstance::new(bimodal(), u01(), val("1", SELLER_BUMP, 1.0)),
            false,
            false,
        ),
    ]
}
