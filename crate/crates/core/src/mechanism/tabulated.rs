use serde::Serialize;

use super::DirectMechanism;
use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::numeric::{cell_index, linspace, simpson};

/// A general direct mechanism that is piecewise constant on a rectangular grid:
/// `pi[i][j]` applies on `[t_edges[i], t_edges[i+1]] x [q_edges[j], q_edges[j+1]]`,
/// `pb[i]` on buyer cell `i` and `ps[j]` on seller cell `j`.
#[derive(Debug, Clone, Serialize)]
pub struct TabulatedMechanism {
    #[serde(skip)]
    instance: ProblemInstance,
    pub t_edges: Vec<f64>,
    pub q_edges: Vec<f64>,
    pub pi: Vec<Vec<f64>>,
    pub pb: Vec<f64>,
    pub ps: Vec<f64>,
}

fn check_edges(edges: &[f64], lo: f64, hi: f64, name: &str) -> Result<()> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(format!(
            "{name} edges must be strictly increasing with at least two entries"
        )));
    }
    let tol = 1e-12 * (hi - lo);
    if (edges[0] - lo).abs() > tol || (edges[edges.len() - 1] - hi).abs() > tol {
        return Err(Error::InvalidArgument(format!("{name} edges must span the support")));
    }
    Ok(())
}

impl TabulatedMechanism {
    pub fn new(
        instance: ProblemInstance,
        t_edges: Vec<f64>,
        q_edges: Vec<f64>,
        pi: Vec<Vec<f64>>,
        pb: Vec<f64>,
        ps: Vec<f64>,
    ) -> Result<Self> {
        let ts = instance.buyer.support();
        let qs = instance.seller.support();
        check_edges(&t_edges, ts.lo, ts.hi, "t")?;
        check_edges(&q_edges, qs.lo, qs.hi, "q")?;
        let (nt, nq) = (t_edges.len() - 1, q_edges.len() - 1);
        if pi.len() != nt || pi.iter().any(|row| row.len() != nq) {
            return Err(Error::InvalidArgument(format!("pi must be {nt} x {nq}")));
        }
        if pb.len() != nt || ps.len() != nq {
            return Err(Error::InvalidArgument("payment vectors must match the grid".into()));
        }
        if pi.iter().flatten().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidArgument("trade probabilities must lie in [0, 1]".into()));
        }
        Ok(Self {
            instance,
            t_edges,
            q_edges,
            pi,
            pb,
            ps,
        })
    }

    /// Uniform `nt x nq` cells with every entry of `pi` equal to `p` and constant payments.
    pub fn constant(instance: ProblemInstance, nt: usize, nq: usize, p: f64, pb: f64, ps: f64) -> Result<Self> {
        let ts = instance.buyer.support();
        let qs = instance.seller.support();
        Self::new(
            instance,
            linspace(ts.lo, ts.hi, nt + 1),
            linspace(qs.lo, qs.hi, nq + 1),
            vec![vec![p; nq]; nt],
            vec![pb; nt],
            vec![ps; nq],
        )
    }

    /// Samples another mechanism at cell midpoints.
    pub fn sample(m: &dyn DirectMechanism, nt: usize, nq: usize) -> Result<Self> {
        let instance = m.instance().clone();
        let ts = instance.buyer.support();
        let qs = instance.seller.support();
        let t_edges = linspace(ts.lo, ts.hi, nt + 1);
        let q_edges = linspace(qs.lo, qs.hi, nq + 1);
        let tm: Vec<f64> = t_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let qm: Vec<f64> = q_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let pi = tm
            .iter()
            .map(|&t| qm.iter().map(|&q| m.trade_prob(t, q)).collect())
            .collect();
        let pb = tm.iter().map(|&t| m.buyer_payment(t)).collect();
        let ps = qm.iter().map(|&q| m.seller_payment(q)).collect();
        Self::new(instance, t_edges, q_edges, pi, pb, ps)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.pb.len(), self.ps.len())
    }

    fn t_cell(&self, t: f64) -> usize {
        cell_index(&self.t_edges, t)
    }

    fn q_cell(&self, q: f64) -> usize {
        cell_index(&self.q_edges, q)
    }

    fn nodes_per_cell(&self, cells: usize) -> usize {
        (self.instance.numerics.quad_nodes / cells.max(1)).max(3)
    }
}

impl DirectMechanism for TabulatedMechanism {
    fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    fn trade_prob(&self, t: f64, q: f64) -> f64 {
        self.pi[self.t_cell(t)][self.q_cell(q)]
    }

    fn buyer_payment(&self, t: f64) -> f64 {
        self.pb[self.t_cell(t)]
    }

    fn seller_payment(&self, q: f64) -> f64 {
        self.ps[self.q_cell(q)]
    }

    fn integrate_q(&self, t: f64, h: &dyn Fn(f64) -> f64) -> f64 {
        let row = &self.pi[self.t_cell(t)];
        let g = &self.instance.seller;
        let nodes = self.nodes_per_cell(row.len());
        row.iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(j, &p)| {
                let (a, b) = (self.q_edges[j], self.q_edges[j + 1]);
                p * simpson(|q| h(q) * g.density(q), a, b, nodes)
            })
            .sum()
    }

    fn integrate_t(&self, q: f64, h: &dyn Fn(f64) -> f64) -> f64 {
        let j = self.q_cell(q);
        let f = &self.instance.buyer;
        let nodes = self.nodes_per_cell(self.pi.len());
        self.pi
            .iter()
            .enumerate()
            .filter(|(_, row)| row[j] != 0.0)
            .map(|(i, row)| {
                let (a, b) = (self.t_edges[i], self.t_edges[i + 1]);
                row[j] * simpson(|t| h(t) * f.density(t), a, b, nodes)
            })
            .sum()
    }

    fn trade_mass_q(&self, t: f64) -> f64 {
        let row = &self.pi[self.t_cell(t)];
        let g = &self.instance.seller;
        row.iter()
            .enumerate()
            .map(|(j, &p)| p * (g.cdf(self.q_edges[j + 1]) - g.cdf(self.q_edges[j])))
            .sum()
    }

    fn trade_mass_t(&self, q: f64) -> f64 {
        let j = self.q_cell(q);
        let f = &self.instance.buyer;
        self.pi
            .iter()
            .enumerate()
            .map(|(i, row)| row[j] * (f.cdf(self.t_edges[i + 1]) - f.cdf(self.t_edges[i])))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_transfers_cancel() {
        let m = TabulatedMechanism::constant(ProblemInstance::example1(), 4, 5, 1.0, 1.7, 1.7).unwrap();
        assert!(m.revenue_direct().abs() < 1e-12);
        assert!((m.trade_mass_q(1.3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_allocation_gives_zero_revenue() {
        let m = TabulatedMechanism::constant(ProblemInstance::example1(), 3, 3, 0.0, 5.0, 1.0).unwrap();
        assert_eq!(m.revenue_direct(), 0.0);
        assert_eq!(m.revenue_virtual(), 0.0);
        assert_eq!(m.buyer_utility(1.5), 0.0);
    }

    #[test]
    fn obedience_matches_ir_identically() {
        let inst = ProblemInstance::example1();
        let pi = vec![vec![1.0, 0.5, 0.0], vec![1.0, 1.0, 0.2]];
        let m = TabulatedMechanism::new(
            inst,
            vec![1.0, 1.5, 2.0],
            vec![1.0, 1.2, 1.7, 2.0],
            pi,
            vec![1.2, 1.9],
            vec![1.6, 1.8, 2.5],
        )
        .unwrap();
        for &t in &[1.1, 1.6, 2.0] {
            let a = m.buyer_obedience(t);
            let b = m.buyer_utility(t);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "t={t}");
        }
        for &q in &[1.0, 1.3, 1.9] {
            assert!((m.seller_obedience(q) - m.seller_surplus(q)).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_malformed_tables() {
        let inst = ProblemInstance::example1();
        assert!(TabulatedMechanism::new(inst.clone(), vec![1.0, 2.0], vec![1.0, 2.0], vec![vec![1.5]], vec![0.0], vec![0.0]).is_err());
        assert!(TabulatedMechanism::new(inst.clone(), vec![1.0, 1.9], vec![1.0, 2.0], vec![vec![1.0]], vec![0.0], vec![0.0]).is_err());
        assert!(TabulatedMechanism::new(inst, vec![1.0, 2.0], vec![1.0, 2.0], vec![vec![1.0, 1.0]], vec![0.0], vec![0.0]).is_err());
    }
}
