use serde::{Deserialize, Serialize};

use super::distribution::Distribution;
use super::expr::{parse_expression, Expr};
use crate::error::{Error, Result};
use crate::numeric::linspace;

/// Buyer valuation `v(t, q) = alpha1(q)·t + alpha2(q)` and seller reserve `r(q) = k·q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationModel {
    pub alpha1: Expr,
    pub alpha2: Expr,
    pub k: f64,
}

impl ValuationModel {
    pub fn new(alpha1: Expr, alpha2: Expr, k: f64) -> Self {
        Self { alpha1, alpha2, k }
    }

    pub fn parse(alpha1: &str, alpha2: &str, k: f64) -> Result<Self> {
        Ok(Self::new(parse_expression(alpha1)?, parse_expression(alpha2)?, k))
    }

    #[inline]
    pub fn alpha1(&self, q: f64) -> f64 {
        self.alpha1.eval_or_nan(q)
    }

    #[inline]
    pub fn alpha2(&self, q: f64) -> f64 {
        self.alpha2.eval_or_nan(q)
    }

    #[inline]
    pub fn value(&self, t: f64, q: f64) -> f64 {
        self.alpha1(q) * t + self.alpha2(q)
    }

    #[inline]
    pub fn reserve(&self, q: f64) -> f64 {
        self.k * q
    }
}

/// Grid sizes and tolerances used by the numerical routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericConfig {
    /// Composite Simpson nodes per axis.
    pub quad_nodes: usize,
    /// Tabulation grid for virtual functions, payments and interim curves.
    pub grid_n: usize,
    /// Monotonicity tolerance for tabulated functions.
    pub tol: f64,
    /// Grid used by the ironing envelope.
    pub iron_grid_n: usize,
    /// Grid used for "for all x" assumption checks.
    pub validation_grid_n: usize,
    /// Cap on `nt * nq` allocation variables in the LP oracle.
    pub lp_cap: usize,
}

impl Default for NumericConfig {
    fn default() -> Self {
        Self {
            quad_nodes: 2001,
            grid_n: 2001,
            tol: 1e-9,
            iron_grid_n: 4001,
            validation_grid_n: 1001,
            lp_cap: 900,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub buyer: Distribution,
    pub seller: Distribution,
    pub valuation: ValuationModel,
    pub numerics: NumericConfig,
}

/// A violated modelling assumption together with the grid point that witnesses it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonPositiveAlpha1 { q: f64, value: f64 },
    NonPositiveDensity { side: Side, x: f64, value: f64 },
    NegativeK { k: f64 },
    ExpressionError { which: String, q: f64, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Buyer,
    Seller,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            match v {
                Violation::NonPositiveAlpha1 { q, value } => {
                    write!(f, "alpha1({q}) = {value} is not positive")?
                }
                Violation::NonPositiveDensity { side, x, value } => {
                    write!(f, "{side:?} density at {x} is {value}, not positive")?
                }
                Violation::NegativeK { k } => write!(f, "k negative ({k})")?,
                Violation::ExpressionError { which, q, message } => {
                    write!(f, "{which}({q}) failed: {message}")?
                }
            }
        }
        Ok(())
    }
}

impl ProblemInstance {
    pub fn new(buyer: Distribution, seller: Distribution, valuation: ValuationModel) -> Self {
        Self {
            buyer,
            seller,
            valuation,
            numerics: NumericConfig::default(),
        }
    }

    pub fn with_numerics(mut self, numerics: NumericConfig) -> Self {
        self.numerics = numerics;
        self
    }

    /// Both types uniform on `[1, 2]`, `alpha1(q) = q`, `alpha2 = 0`, `k = 1.5`.
    pub fn example1() -> Self {
        Self::new(
            Distribution::uniform(1.0, 2.0).expect("static support"),
            Distribution::uniform(1.0, 2.0).expect("static support"),
            ValuationModel::parse("q", "0", 1.5).expect("static expressions"),
        )
    }

    /// Checks the modelling assumptions on a uniform validation grid. This is a
    /// sampling check: a violation strictly between grid points goes unnoticed.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.numerics.validation_grid_n.max(2);
        let qs = self.seller.support();
        for q in linspace(qs.lo, qs.hi, n) {
            match self.valuation.alpha1.eval(q) {
                Ok(a) if a > 0.0 => {}
                Ok(a) => violations.push(Violation::NonPositiveAlpha1 { q, value: a }),
                Err(e) => violations.push(Violation::ExpressionError {
                    which: "alpha1".into(),
                    q,
                    message: e.to_string(),
                }),
            }
            if let Err(e) = self.valuation.alpha2.eval(q) {
                violations.push(Violation::ExpressionError {
                    which: "alpha2".into(),
                    q,
                    message: e.to_string(),
                });
            }
        }
        for (side, dist) in [(Side::Buyer, &self.buyer), (Side::Seller, &self.seller)] {
            let s = dist.support();
            for x in linspace(s.lo, s.hi, n) {
                let d = dist.density(x);
                if !(d > 0.0) || !d.is_finite() {
                    violations.push(Violation::NonPositiveDensity { side, x, value: d });
                }
            }
        }
        if !(self.valuation.k >= 0.0) {
            violations.push(Violation::NegativeK { k: self.valuation.k });
        }
        ValidationReport { violations }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: InstanceConfig = serde_json::from_str(text)?;
        cfg.build()
    }

    pub fn to_config(&self) -> InstanceConfig {
        InstanceConfig {
            buyer_dist: DistConfig::from_distribution(&self.buyer),
            seller_dist: DistConfig::from_distribution(&self.seller),
            valuation: ValuationConfig {
                alpha1: self.valuation.alpha1.to_string(),
                alpha2: self.valuation.alpha2.to_string(),
                k: self.valuation.k,
            },
            numerics: self.numerics,
        }
    }
}

/// JSON form of a problem instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub buyer_dist: DistConfig,
    pub seller_dist: DistConfig,
    pub valuation: ValuationConfig,
    #[serde(default)]
    pub numerics: NumericConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistConfig {
    pub family: String,
    #[serde(default)]
    pub params: serde_json::Value,
    pub support: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValuationConfig {
    pub alpha1: String,
    pub alpha2: String,
    pub k: f64,
}

fn param(params: &serde_json::Value, family: &str, name: &str) -> Result<f64> {
    params
        .get(name)
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| Error::Config(format!("{family}: missing numeric parameter `{name}`")))
}

impl DistConfig {
    pub fn build(&self) -> Result<Distribution> {
        let [lo, hi] = self.support;
        let p = &self.params;
        match self.family.as_str() {
            "uniform" => Distribution::uniform(lo, hi),
            "truncated-normal" => Distribution::truncated_normal(
                param(p, "truncated-normal", "mu")?,
                param(p, "truncated-normal", "sigma")?,
                lo,
                hi,
            ),
            "beta-rescaled" => {
                let frame = match p.get("frame") {
                    None | Some(serde_json::Value::Null) => None,
                    Some(v) => {
                        let pair: [f64; 2] = serde_json::from_value(v.clone()).map_err(|_| {
                            Error::Config("beta-rescaled: `frame` must be [lo, hi]".into())
                        })?;
                        Some((pair[0], pair[1]))
                    }
                };
                Distribution::beta_rescaled(
                    param(p, "beta-rescaled", "a")?,
                    param(p, "beta-rescaled", "b")?,
                    lo,
                    hi,
                    frame,
                )
            }
            "tabulated" => {
                let pts: Vec<[f64; 2]> = p
                    .get("points")
                    .cloned()
                    .map(serde_json::from_value)
                    .transpose()
                    .map_err(|_| Error::Config("tabulated: `points` must be [[x, pdf], ...]".into()))?
                    .ok_or_else(|| Error::Config("tabulated: missing `points`".into()))?;
                let pts: Vec<(f64, f64)> = pts.into_iter().map(|[x, y]| (x, y)).collect();
                let d = Distribution::tabulated(&pts)?;
                let s = d.support();
                let tol = 1e-12 * s.width();
                if (s.lo - lo).abs() > tol || (s.hi - hi).abs() > tol {
                    return Err(Error::Config(format!(
                        "tabulated: points span [{}, {}] but support is [{lo}, {hi}]",
                        s.lo, s.hi
                    )));
                }
                Ok(d)
            }
            other => Err(Error::Config(format!("unknown distribution family `{other}`"))),
        }
    }

    pub fn from_distribution(d: &Distribution) -> Self {
        use super::distribution::Family;
        let s = d.support();
        let params = match d.family() {
            Family::Uniform => serde_json::Value::Null,
            Family::TruncatedNormal { mu, sigma, .. } => serde_json::json!({"mu": mu, "sigma": sigma}),
            Family::BetaRescaled { a, b, frame, .. } => {
                serde_json::json!({"a": a, "b": b, "frame": [frame.lo, frame.hi]})
            }
            Family::Tabulated { xs, ps, .. } => {
                let pts: Vec<[f64; 2]> = xs.iter().zip(ps).map(|(&x, &p)| [x, p]).collect();
                serde_json::json!({ "points": pts })
            }
        };
        Self {
            family: d.family_name().to_string(),
            params,
            support: [s.lo, s.hi],
        }
    }
}

impl InstanceConfig {
    pub fn build(&self) -> Result<ProblemInstance> {
        let n = &self.numerics;
        if n.quad_nodes < 3 || n.grid_n < 2 || n.iron_grid_n < 3 || n.validation_grid_n < 2 {
            return Err(Error::Config("numerics: grid sizes too small".into()));
        }
        if !(n.tol >= 0.0) {
            return Err(Error::Config("numerics: tol must be non-negative".into()));
        }
        Ok(ProblemInstance {
            buyer: self.buyer_dist.build()?,
            seller: self.seller_dist.build()?,
            valuation: ValuationModel::parse(
                &self.valuation.alpha1,
                &self.valuation.alpha2,
                self.valuation.k,
            )?,
            numerics: self.numerics,
        })
    }
}
