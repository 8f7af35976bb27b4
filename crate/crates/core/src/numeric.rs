//! Small numerical building blocks shared by every module: uniform grids,
//! composite Simpson quadrature, bisection and piecewise-linear tables.

use serde::Serialize;

/// `n` evenly spaced points from `lo` to `hi` inclusive. The last point is exactly `hi`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            let mut xs: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
            xs[n - 1] = hi;
            xs
        }
    }
}

/// Smallest odd node count that is at least `n` and at least 3.
pub fn odd_nodes(n: usize) -> usize {
    let n = n.max(3);
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

/// Composite Simpson rule for `f` on `[a, b]` with `nodes` points (rounded up to odd).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, nodes: usize) -> f64 {
    if b == a {
        return 0.0;
    }
    let n = odd_nodes(nodes) - 1;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        sum += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    sum * h / 3.0
}

/// Composite Simpson on `[a, b]` split at the interior points of `breaks`, with the
/// node budget shared out by sub-interval length. Keeps the rule accurate for
/// integrands that jump at known points.
pub fn simpson_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], nodes: usize) -> f64 {
    let cuts = merge_nodes(&[a, b], breaks);
    if cuts.len() == 2 {
        return simpson(&f, a, b, nodes);
    }
    let width = b - a;
    // pull interior cuts in slightly so each piece sees one-sided limits
    let delta = 1e-13 * width.abs();
    let last = cuts.len() - 2;
    cuts.windows(2)
        .enumerate()
        .map(|(i, w)| {
            let share = ((w[1] - w[0]) / width * nodes as f64).ceil() as usize;
            let lo = if i == 0 { w[0] } else { w[0] + delta };
            let hi = if i == last { w[1] } else { w[1] - delta };
            simpson(&f, lo, hi, share.max(5))
        })
        .sum()
}

/// Sorted union of `grid` and the points of `extra` strictly inside its range,
/// dropping points closer than `1e-12` of the range to an existing node.
pub fn merge_nodes(grid: &[f64], extra: &[f64]) -> Vec<f64> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let eps = 1e-12 * (hi - lo).abs().max(1.0);
    let mut out: Vec<f64> = grid.to_vec();
    out.extend(extra.iter().copied().filter(|&x| x > lo + eps && x < hi - eps));
    out.sort_by(f64::total_cmp);
    out.dedup_by(|b, a| (*b - *a).abs() <= eps);
    out
}

/// Largest `x` in `[lo, hi]` with `pred(x)` true, assuming `pred` holds on a prefix
/// of the interval and `pred(lo)` is true. Returns `hi` when `pred(hi)` holds.
pub fn bisect_last_true<P: Fn(f64) -> bool>(pred: P, lo: f64, hi: f64) -> f64 {
    if pred(hi) {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if pred(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    a
}

/// Smallest `x` in `[lo, hi]` with `pred(x)` true, assuming `pred` holds on a suffix
/// of the interval and `pred(hi)` is true. Returns `lo` when `pred(lo)` holds.
pub fn bisect_first_true<P: Fn(f64) -> bool>(pred: P, lo: f64, hi: f64) -> f64 {
    if pred(lo) {
        return lo;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if pred(mid) {
            b = mid;
        } else {
            a = mid;
        }
    }
    b
}

/// Index `i` of the cell `[xs[i], xs[i+1]]` containing `x`, clamped to the table.
pub fn cell_index(xs: &[f64], x: f64) -> usize {
    debug_assert!(xs.len() >= 2);
    let last = xs.len() - 2;
    if x <= xs[0] {
        return 0;
    }
    if x >= xs[last + 1] {
        return last;
    }
    // partition_point gives the first node strictly greater than x
    xs.partition_point(|&v| v <= x).saturating_sub(1).min(last)
}

/// A function tabulated on a strictly increasing grid, evaluated by linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tabulated {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Tabulated {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len(), "tabulation needs matching lengths");
        assert!(xs.len() >= 2, "tabulation needs at least two points");
        Self { xs, ys }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(xs: Vec<f64>, f: F) -> Self {
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.xs[0]
    }

    pub fn hi(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    /// Linear interpolation, clamped to the end values outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let i = cell_index(&self.xs, x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        if x <= x0 {
            return y0;
        }
        if x >= x1 {
            return y1;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Largest drop `ys[i] - ys[i+1]` over consecutive nodes (0 when non-decreasing).
    pub fn max_backslide(&self) -> f64 {
        self.ys
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }
}

/// Running integral `x -> ∫_{xs[0]}^{x} f`, each cell integrated with the three-point
/// Simpson rule. Cell ends are sampled a hair inside the cell, so a jump of `f` at a
/// node is integrated with the correct one-sided limits.
#[derive(Debug, Clone)]
pub struct Cumulative {
    xs: Vec<f64>,
    /// `f` just right of each node (one per cell).
    starts: Vec<f64>,
    cum: Vec<f64>,
}

impl Cumulative {
    pub fn build<F: Fn(f64) -> f64>(xs: Vec<f64>, f: F) -> Self {
        let cells = xs.len() - 1;
        let delta = 1e-12 * (xs[cells] - xs[0]).abs();
        let starts: Vec<f64> = xs[..cells].iter().map(|&x| f(x + delta)).collect();
        let mut cum = Vec::with_capacity(xs.len());
        cum.push(0.0);
        for i in 0..cells {
            let (a, b) = (xs[i], xs[i + 1]);
            let mid = f(0.5 * (a + b));
            let end = f(b - delta);
            cum.push(cum[i] + (b - a) / 6.0 * (starts[i] + 4.0 * mid + end));
        }
        Self { xs, starts, cum }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn total(&self) -> f64 {
        self.cum[self.cum.len() - 1]
    }

    /// `∫_{xs[0]}^{x} f`, re-evaluating `f` on the partial cell.
    pub fn integral_to<F: Fn(f64) -> f64>(&self, x: f64, f: F) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[self.xs.len() - 1] {
            return self.total();
        }
        let i = cell_index(&self.xs, x);
        let a = self.xs[i];
        if x == a {
            return self.cum[i];
        }
        let partial = (x - a) / 6.0 * (self.starts[i] + 4.0 * f(0.5 * (a + x)) + f(x));
        self.cum[i] + partial
    }

    /// `∫_{x}^{xs[last]} f`.
    pub fn integral_from<F: Fn(f64) -> f64>(&self, x: f64, f: F) -> f64 {
        self.total() - self.integral_to(x, f)
    }
}
