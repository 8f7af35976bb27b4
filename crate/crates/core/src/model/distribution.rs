//! Type distributions on a bounded support.

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::numeric::bisect_first_true;

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidDistribution(format!(
                "support [{lo}, {hi}] must be finite with lo < hi"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Membership with a relative slack of 1e-12 of the width for round-off.
    pub fn contains(&self, x: f64) -> bool {
        let eps = 1e-12 * self.width();
        x >= self.lo - eps && x <= self.hi + eps
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Uniform,
    TruncatedNormal {
        mu: f64,
        sigma: f64,
        /// Φ at the standardized lower bound.
        base: f64,
        /// Φ(b) − Φ(a): probability mass kept by the truncation.
        mass: f64,
    },
    /// A Beta(a, b) law rescaled onto `frame` and truncated to the support.
    BetaRescaled {
        a: f64,
        b: f64,
        frame: Interval,
        ln_norm: f64,
        base: f64,
        mass: f64,
    },
    /// Piecewise-linear density through `(xs[i], ps[i])`, already renormalized.
    Tabulated {
        xs: Vec<f64>,
        ps: Vec<f64>,
        cum: Vec<f64>,
        /// Factor the raw ordinates were multiplied by to integrate to one.
        normalization: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    family: Family,
    support: Interval,
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

impl Distribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Ok(Self {
            family: Family::Uniform,
            support: Interval::new(lo, hi)?,
        })
    }

    pub fn truncated_normal(mu: f64, sigma: f64, lo: f64, hi: f64) -> Result<Self> {
        let support = Interval::new(lo, hi)?;
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "truncated-normal needs finite mu and sigma > 0 (got mu={mu}, sigma={sigma})"
            )));
        }
        let base = std_normal_cdf((lo - mu) / sigma);
        let mass = std_normal_cdf((hi - mu) / sigma) - base;
        if !(mass > 1e-300) {
            return Err(Error::InvalidDistribution(
                "truncated-normal support carries no probability mass".into(),
            ));
        }
        Ok(Self {
            family: Family::TruncatedNormal {
                mu,
                sigma,
                base,
                mass,
            },
            support,
        })
    }

    /// Beta(a, b) rescaled to `frame` (defaults to the support) and truncated to the support.
    pub fn beta_rescaled(a: f64, b: f64, lo: f64, hi: f64, frame: Option<(f64, f64)>) -> Result<Self> {
        let support = Interval::new(lo, hi)?;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "beta-rescaled needs a, b > 0 (got a={a}, b={b})"
            )));
        }
        let frame = match frame {
            Some((flo, fhi)) => Interval::new(flo, fhi)?,
            None => support,
        };
        if support.lo < frame.lo || support.hi > frame.hi {
            return Err(Error::InvalidDistribution(
                "beta-rescaled support must lie inside its frame".into(),
            ));
        }
        let u = |x: f64| ((x - frame.lo) / frame.width()).clamp(0.0, 1.0);
        let base = beta_reg(a, b, u(lo));
        let mass = beta_reg(a, b, u(hi)) - base;
        if !(mass > 1e-300) {
            return Err(Error::InvalidDistribution(
                "beta-rescaled support carries no probability mass".into(),
            ));
        }
        Ok(Self {
            family: Family::BetaRescaled {
                a,
                b,
                frame,
                ln_norm: ln_beta(a, b),
                base,
                mass,
            },
            support,
        })
    }

    /// Piecewise-linear density through `points`; ordinates are rescaled to integrate to one.
    /// The first and last abscissae define the support.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidDistribution(
                "tabulated density needs at least two points".into(),
            ));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidDistribution(
                    "tabulated abscissae must be strictly increasing".into(),
                ));
            }
        }
        if points.iter().any(|p| !(p.1 >= 0.0) || !p.1.is_finite() || !p.0.is_finite()) {
            return Err(Error::InvalidDistribution(
                "tabulated density values must be finite and non-negative".into(),
            ));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let raw: f64 = points
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum();
        if !(raw > 0.0) {
            return Err(Error::InvalidDistribution(
                "tabulated density integrates to zero".into(),
            ));
        }
        let normalization = 1.0 / raw;
        let ps: Vec<f64> = points.iter().map(|p| p.1 * normalization).collect();
        let mut cum = vec![0.0];
        for i in 0..xs.len() - 1 {
            cum.push(cum[i] + 0.5 * (ps[i] + ps[i + 1]) * (xs[i + 1] - xs[i]));
        }
        let support = Interval::new(xs[0], xs[xs.len() - 1])?;
        Ok(Self {
            family: Family::Tabulated {
                xs,
                ps,
                cum,
                normalization,
            },
            support,
        })
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Uniform => "uniform",
            Family::TruncatedNormal { .. } => "truncated-normal",
            Family::BetaRescaled { .. } => "beta-rescaled",
            Family::Tabulated { .. } => "tabulated",
        }
    }

    /// Renormalization factor applied to a tabulated density (1 for other families).
    pub fn normalization(&self) -> f64 {
        match &self.family {
            Family::Tabulated { normalization, .. } => *normalization,
            _ => 1.0,
        }
    }

    fn check(&self, x: f64) -> Result<f64> {
        if x.is_nan() || !self.support.contains(x) {
            return Err(Error::Domain(format!(
                "{x} lies outside the support [{}, {}]",
                self.support.lo, self.support.hi
            )));
        }
        Ok(self.support.clamp(x))
    }

    /// Density at `x`; errors outside the support.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        let x = self.check(x)?;
        Ok(self.density(x))
    }

    /// Density without the support check; `x` is clamped into the support.
    pub fn density(&self, x: f64) -> f64 {
        let x = self.support.clamp(x);
        match &self.family {
            Family::Uniform => 1.0 / self.support.width(),
            Family::TruncatedNormal {
                mu, sigma, mass, ..
            } => {
                let z = (x - mu) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt() * mass)
            }
            Family::BetaRescaled {
                a,
                b,
                frame,
                ln_norm,
                mass,
                ..
            } => {
                let u = ((x - frame.lo) / frame.width()).clamp(0.0, 1.0);
                let ln = (a - 1.0) * u.ln() + (b - 1.0) * (1.0 - u).ln() - ln_norm;
                ln.exp() / (frame.width() * mass)
            }
            Family::Tabulated { xs, ps, .. } => {
                let i = crate::numeric::cell_index(xs, x);
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                ps[i] + (ps[i + 1] - ps[i]) * t
            }
        }
    }

    /// Distribution function, clamped to 0 below and 1 above the support.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.support.lo {
            return 0.0;
        }
        if x >= self.support.hi {
            return 1.0;
        }
        let v = match &self.family {
            Family::Uniform => (x - self.support.lo) / self.support.width(),
            Family::TruncatedNormal {
                mu,
                sigma,
                base,
                mass,
            } => (std_normal_cdf((x - mu) / sigma) - base) / mass,
            Family::BetaRescaled {
                a,
                b,
                frame,
                base,
                mass,
                ..
            } => {
                let u = ((x - frame.lo) / frame.width()).clamp(0.0, 1.0);
                (beta_reg(*a, *b, u) - base) / mass
            }
            Family::Tabulated { xs, ps, cum, .. } => {
                let i = crate::numeric::cell_index(xs, x);
                let d = x - xs[i];
                let slope = (ps[i + 1] - ps[i]) / (xs[i + 1] - xs[i]);
                cum[i] + ps[i] * d + 0.5 * slope * d * d
            }
        };
        v.clamp(0.0, 1.0)
    }

    /// Inverse distribution function by bisection on the support.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
        }
        if p == 0.0 {
            return Ok(self.support.lo);
        }
        if p == 1.0 {
            return Ok(self.support.hi);
        }
        Ok(bisect_first_true(
            |x| self.cdf(x) >= p,
            self.support.lo,
            self.support.hi,
        ))
    }

    /// Myerson virtual value `t − (1 − F(t)) / f(t)`.
    pub fn virtual_value(&self, t: f64) -> Result<f64> {
        let t = self.check(t)?;
        Ok(self.virtual_value_at(t))
    }

    /// Virtual cost `q + G(q) / g(q)`.
    pub fn virtual_cost(&self, q: f64) -> Result<f64> {
        let q = self.check(q)?;
        Ok(self.virtual_cost_at(q))
    }

    #[inline]
    pub(crate) fn virtual_value_at(&self, t: f64) -> f64 {
        let tail = 1.0 - self.cdf(t);
        if tail == 0.0 {
            return t;
        }
        t - tail / self.density(t)
    }

    #[inline]
    pub(crate) fn virtual_cost_at(&self, q: f64) -> f64 {
        let head = self.cdf(q);
        if head == 0.0 {
            return q;
        }
        q + head / self.density(q)
    }
}
