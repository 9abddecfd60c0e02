use super::Graph;
use crate::error::{Error, Result};
use crate::matrix::{CsrMatrix, DenseMatrix};

/// `D̂^(r−1) Â D̂^(−r)` with `Â = A + I` and `D̂` the degree matrix of `Â`.
///
/// `r = 1/2` is the symmetric GCN operator, `r = 0` the row-stochastic
/// reverse transition and `r = 1` the column-stochastic random walk.
pub fn normalized_adjacency(g: &Graph, r: f64) -> Result<CsrMatrix> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!(
            "normalization exponent {r} outside [0, 1]"
        )));
    }
    let n = g.num_nodes();
    let deg: Vec<f64> = (0..n).map(|u| g.degree(u) as f64 + 1.0).collect();
    let left: Vec<f64> = deg.iter().map(|d| d.powf(r - 1.0)).collect();
    let right: Vec<f64> = deg.iter().map(|d| d.powf(-r)).collect();
    let rows = (0..n)
        .map(|u| {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(g.degree(u) + 1);
            let mut self_done = false;
            for &v in g.neighbors(u) {
                if !self_done && v > u {
                    row.push((u, left[u] * right[u]));
                    self_done = true;
                }
                row.push((v, left[u] * right[v]));
            }
            if !self_done {
                row.push((u, left[u] * right[u]));
            }
            row
        })
        .collect();
    Ok(CsrMatrix::from_rows(n, rows))
}

pub fn normalized_adjacency_dense(g: &Graph, r: f64) -> Result<DenseMatrix> {
    normalized_adjacency(g, r).map(|m| m.to_dense())
}
