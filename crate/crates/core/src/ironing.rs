//! Ironing of non-monotone threshold ingredients.
//!
//! A function `x -> phi(x)` is moved to a coordinate `w(x)`: the buyer uses the
//! distribution function `w = F(t)`, the seller the weighted mass
//! `w(q) = ∫_{q1}^{q} alpha1(r) g(r) dr`. With `h(w) = phi(x(w))` and `H` its running
//! integral, the ironed function is the slope `l` of the lower convex envelope `L`
//! of `H`, read back through the same coordinate.


use crate::error::{Error, Result};
use crate::model::{Distribution, ProblemInstance, Side};
use crate::numeric::{cell_index, linspace};
use crate::virtual_fn::{psi, varphi, VirtualProfile};

/// Lower convex envelope of sampled points: envelope value at every sample and the
/// slope of the envelope on every cell between consecutive samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerEnvelope {
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    /// Indices of the samples that are hull vertices.
    pub vertices: Vec<usize>,
}

/// Greatest convex minorant of `points` (monotone-chain lower hull).
pub fn lower_convex_envelope(points: &[(f64, f64)]) -> Result<LowerEnvelope> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "lower convex envelope needs at least two points".into(),
        ));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidArgument(
            "envelope abscissae must be strictly increasing".into(),
        ));
    }
    let mut hull: Vec<usize> = Vec::with_capacity(points.len());
    for (i, &(x, y)) in points.iter().enumerate() {
        while hull.len() >= 2 {
            let (ox, oy) = points[hull[hull.len() - 2]];
            let (ax, ay) = points[hull[hull.len() - 1]];
            // pop unless o -> a -> p turns strictly counter-clockwise
            let cross = (ax - ox) * (y - oy) - (ay - oy) * (x - ox);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut values = vec![0.0; points.len()];
    let mut slopes = vec![0.0; points.len() - 1];
    for seg in hull.windows(2) {
        let (i, j) = (seg[0], seg[1]);
        let (x0, y0) = points[i];
        let (x1, y1) = points[j];
        let slope = (y1 - y0) / (x1 - x0);
        for k in i..j {
            slopes[k] = slope;
        }
        for (k, v) in values.iter_mut().enumerate().take(j + 1).skip(i) {
            *v = if k == i {
                y0
            } else if k == j {
                y1
            } else {
                y0 + slope * (points[k].0 - x0)
            };
        }
    }
    Ok(LowerEnvelope {
        values,
        slopes,
        vertices: hull,
    })
}

/// Maps a type `x` to the ironing coordinate `w` and back.
#[derive(Debug, Clone)]
enum Coordinate {
    /// `w = F(x)`.
    Cdf(Distribution),
    /// `w` tabulated at nodes `xs`; linear interpolation in between.
    Table { xs: Vec<f64>, ws: Vec<f64> },
}

impl Coordinate {
    fn w_of(&self, x: f64) -> f64 {
        match self {
            Coordinate::Cdf(d) => d.cdf(x),
            Coordinate::Table { xs, ws } => interp(xs, ws, x),
        }
    }

    fn x_of(&self, w: f64) -> f64 {
        match self {
            Coordinate::Cdf(d) => d.quantile(w.clamp(0.0, 1.0)).expect("clamped probability"),
            Coordinate::Table { xs, ws } => interp(ws, xs, w),
        }
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = cell_index(xs, x);
    let (x0, x1) = (xs[i], xs[i + 1]);
    let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
    ys[i] + (ys[i + 1] - ys[i]) * t
}

/// Result of ironing one side.
#[derive(Debug, Clone)]
pub struct IronedFunction {
    pub side: Side,
    /// Uniform grid on `[0, w_max]`.
    pub w_grid: Vec<f64>,
    /// The reparameterized function `h(w)`.
    pub h: Vec<f64>,
    /// Running trapezoid integral of `h`.
    pub cum_h: Vec<f64>,
    /// Lower convex envelope of `cum_h`.
    pub envelope: Vec<f64>,
    /// Envelope slope on each cell `[w_i, w_{i+1}]`.
    pub slopes: Vec<f64>,
    /// Maximal `w`-intervals on which the envelope lies strictly below `cum_h`.
    pub ironed_intervals: Vec<(f64, f64)>,
    pub w_max: f64,
    support: (f64, f64),
    coordinate: Coordinate,
}

/// Threshold separating float noise from genuine ironing: `H − L > 1e-9·max(1, |H|)`.
fn is_ironed_gap(cum: f64, env: f64) -> bool {
    cum - env > 1e-9 * cum.abs().max(1.0)
}

impl IronedFunction {
    fn build(
        side: Side,
        coordinate: Coordinate,
        support: (f64, f64),
        w_max: f64,
        n: usize,
        phi: impl Fn(f64) -> f64,
    ) -> Self {
        let n = n.max(3);
        let w_grid = linspace(0.0, w_max, n);
        let h: Vec<f64> = w_grid.iter().map(|&w| phi(coordinate.x_of(w))).collect();
        let mut cum_h = Vec::with_capacity(n);
        cum_h.push(0.0);
        for i in 0..n - 1 {
            cum_h.push(cum_h[i] + 0.5 * (h[i] + h[i + 1]) * (w_grid[i + 1] - w_grid[i]));
        }
        let pts: Vec<(f64, f64)> = w_grid.iter().copied().zip(cum_h.iter().copied()).collect();
        let env = lower_convex_envelope(&pts).expect("uniform grid with n >= 3");

        let mut ironed_intervals = Vec::new();
        let mut start: Option<usize> = None;
        for i in 0..n {
            let gap = is_ironed_gap(cum_h[i], env.values[i]);
            match (gap, start) {
                (true, None) => start = Some(i.saturating_sub(1)),
                (false, Some(s)) => {
                    ironed_intervals.push((w_grid[s], w_grid[i]));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            ironed_intervals.push((w_grid[s], w_grid[n - 1]));
        }

        Self {
            side,
            w_grid,
            h,
            cum_h,
            envelope: env.values,
            slopes: env.slopes,
            ironed_intervals,
            w_max,
            support,
            coordinate,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.ironed_intervals.is_empty()
    }

    /// Coordinate `w(x)` of a type.
    pub fn w_of(&self, x: f64) -> f64 {
        self.coordinate.w_of(x)
    }

    /// Type `x(w)` at a coordinate value.
    pub fn x_of(&self, w: f64) -> f64 {
        self.coordinate.x_of(w)
    }

    /// Envelope slope at coordinate `w`, left-continuous at cell boundaries.
    pub fn slope_at_w(&self, w: f64) -> f64 {
        let n = self.w_grid.len();
        let dw = self.w_max / (n - 1) as f64;
        // cell i covers (w_i, w_{i+1}]; w at or below w_0 uses cell 0
        let i = if w <= 0.0 {
            0
        } else {
            ((w / dw).ceil() as usize).saturating_sub(1)
        };
        self.slopes[i.min(n - 2)]
    }

    /// Ironed value at a type `x` (buyer `t` or seller `q`).
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.support;
        let eps = 1e-12 * (hi - lo);
        if !(x >= lo - eps && x <= hi + eps) {
            return Err(Error::Domain(format!(
                "{x} lies outside the support [{lo}, {hi}]"
            )));
        }
        Ok(self.eval_at(x.clamp(lo, hi)))
    }

    #[inline]
    pub(crate) fn eval_at(&self, x: f64) -> f64 {
        self.slope_at_w(self.coordinate.w_of(x))
    }

    /// Whether coordinate `w` lies strictly inside an ironed interval.
    pub fn in_ironed_interval(&self, w: f64) -> bool {
        self.ironed_intervals.iter().any(|&(a, b)| w > a && w < b)
    }

    /// Ironed intervals mapped back to type space.
    pub fn ironed_type_intervals(&self) -> Vec<(f64, f64)> {
        self.ironed_intervals
            .iter()
            .map(|&(a, b)| (self.x_of(a), self.x_of(b)))
            .collect()
    }
}

/// Standard ironing of `psi` in the coordinate `w = F(t)`.
pub fn iron_buyer(inst: &ProblemInstance, _profile: &VirtualProfile) -> IronedFunction {
    iron_buyer_with(inst, inst.numerics.iron_grid_n)
}

pub fn iron_buyer_with(inst: &ProblemInstance, n: usize) -> IronedFunction {
    let s = inst.buyer.support();
    IronedFunction::build(
        Side::Buyer,
        Coordinate::Cdf(inst.buyer.clone()),
        (s.lo, s.hi),
        1.0,
        n,
        |t| psi(inst, t),
    )
}

/// Weighted ironing of `varphi` in the coordinate `w(q) = ∫_{q1}^{q} alpha1 g`.
pub fn iron_seller(inst: &ProblemInstance, _profile: &VirtualProfile) -> IronedFunction {
    iron_seller_with(inst, inst.numerics.iron_grid_n)
}

pub fn iron_seller_with(inst: &ProblemInstance, n: usize) -> IronedFunction {
    let s = inst.seller.support();
    let weight = |q: f64| inst.valuation.alpha1(q) * inst.seller.density(q);
    let xs = linspace(s.lo, s.hi, n.max(3));
    let mut ws = Vec::with_capacity(xs.len());
    ws.push(0.0);
    for i in 0..xs.len() - 1 {
        let (a, b) = (xs[i], xs[i + 1]);
        let cell = (b - a) / 6.0 * (weight(a) + 4.0 * weight(0.5 * (a + b)) + weight(b));
        ws.push(ws[i] + cell);
    }
    let w_max = ws[ws.len() - 1];
    IronedFunction::build(
        Side::Seller,
        Coordinate::Table { xs, ws },
        (s.lo, s.hi),
        w_max,
        n,
        |q| varphi(inst, q),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ValuationModel;
    use crate::virtual_fn::compute_profile;

    #[test]
    fn convex_input_is_its_own_envelope() {
        let pts: Vec<(f64, f64)> = linspace(-1.0, 2.0, 31).into_iter().map(|w| (w, w * w)).collect();
        let env = lower_convex_envelope(&pts).unwrap();
        for (v, p) in env.values.iter().zip(&pts) {
            assert!((v - p.1).abs() < 1e-14);
        }
        assert!(env.slopes.windows(2).all(|s| s[1] >= s[0]));
    }

    #[test]
    fn concave_kink_is_chorded() {
        let env = lower_convex_envelope(&[(0.0, 0.0), (0.5, 1.0), (1.0, 1.0)]).unwrap();
        assert_eq!(env.values, vec![0.0, 0.5, 1.0]);
        assert_eq!(env.slopes, vec![1.0, 1.0]);
        assert_eq!(env.vertices, vec![0, 2]);
    }

    #[test]
    fn envelope_input_errors() {
        assert!(lower_convex_envelope(&[(0.0, 1.0)]).is_err());
        assert!(lower_convex_envelope(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(lower_convex_envelope(&[(1.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn example1_buyer_is_unchanged() {
        let inst = ProblemInstance::example1();
        let p = compute_profile(&inst).unwrap();
        let ib = iron_buyer(&inst, &p);
        assert!(ib.is_trivial());
        let dw = 1.0 / 4000.0;
        // psi = 2t − 2 has slope 2 in w = t − 1; per-cell slopes lag by at most one cell
        assert!((ib.eval(1.5).unwrap() - 1.0).abs() <= 2.0 * dw);
        assert!((ib.eval(1.75).unwrap() - 1.5).abs() <= 2.0 * dw);
        // boundary convention: the low end reads the first cell
        assert_eq!(ib.eval(1.0).unwrap(), ib.slopes[0]);
        assert!(ib.eval(2.5).is_err());
    }

    #[test]
    fn example1_seller_coordinate() {
        let inst = ProblemInstance::example1();
        let p = compute_profile(&inst).unwrap();
        let is = iron_seller(&inst, &p);
        assert!((is.w_max - 1.5).abs() < 1e-12);
        for &q in &[1.0, 1.2, 1.5, 1.9, 2.0] {
            assert!((is.w_of(q) - (q * q - 1.0) / 2.0).abs() < 1e-9, "q={q}");
        }
        assert!(is.is_trivial());
        // varphi = 3 − 1.5/q
        for &q in &[1.1, 1.5, 1.9] {
            assert!((is.eval(q).unwrap() - (3.0 - 1.5 / q)).abs() < 1e-3);
        }
    }

    #[test]
    fn unit_weight_reduces_to_standard_ironing() {
        let inst = ProblemInstance::new(
            Distribution::uniform(0.0, 1.0).unwrap(),
            Distribution::uniform(0.0, 1.0).unwrap(),
            ValuationModel::parse("1", "0", 1.0).unwrap(),
        );
        let is = iron_seller_with(&inst, 1001);
        for &q in &[0.0, 0.25, 0.5, 1.0] {
            assert!((is.w_of(q) - q).abs() < 1e-12);
        }
        assert!((is.w_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn envelope_endpoints_touch() {
        let inst = ProblemInstance::example1();
        let ib = iron_buyer_with(&inst, 101);
        let n = ib.w_grid.len();
        assert_eq!(ib.envelope[0], ib.cum_h[0]);
        assert!((ib.envelope[n - 1] - ib.cum_h[n - 1]).abs() < 1e-12);
    }
}
