use super::Graph;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

const ROW_SUM_TOL: f64 = 1e-9;

/// An `n × |Y|` matrix of non-negative rows summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelDistribution(DenseMatrix);

impl LabelDistribution {
    pub fn new(m: DenseMatrix) -> Result<Self> {
        for i in 0..m.rows() {
            let row = m.row(i);
            if row.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "label distribution row {i} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidArgument(format!(
                    "label distribution row {i} sums to {s}"
                )));
            }
        }
        Ok(Self(m))
    }

    pub fn uniform(n: usize, classes: usize) -> Self {
        Self(DenseMatrix::filled(n, classes, 1.0 / classes as f64))
    }

    /// One-hot rows for nodes with `known[u]`, uniform rows elsewhere.
    pub fn seeded(labels: &[usize], known: &[bool], classes: usize) -> Self {
        assert_eq!(labels.len(), known.len());
        let mut m = DenseMatrix::filled(labels.len(), classes, 1.0 / classes as f64);
        for (u, (&y, &k)) in labels.iter().zip(known).enumerate() {
            if k {
                let row = m.row_mut(u);
                row.fill(0.0);
                row[y] = 1.0;
            }
        }
        Self(m)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.0
    }

    pub fn predictions(&self) -> Vec<usize> {
        self.0.argmax_rows()
    }
}

/// Non-parametric K-step label propagation:
///
/// `Ŷᵏ_u = κ·Ŷ⁰_u + (1−κ)·Σ_{v∈N(u)} (d̃_u d̃_v)^(−1/2) Ŷᵏ⁻¹_v`
///
/// with self-looped degrees `d̃ = d + 1`. Each row is rescaled to sum to one
/// after every step; a row that collapses to zero becomes uniform.
pub fn label_propagation(g: &Graph, init: &LabelDistribution, kappa: f64, steps: usize) -> Result<LabelDistribution> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::InvalidArgument(format!("kappa {kappa} outside [0, 1]")));
    }
    let y0 = init.matrix();
    if y0.rows() != g.num_nodes() {
        return Err(Error::shape("label_propagation", g.num_nodes(), y0.rows()));
    }
    let n = g.num_nodes();
    let c = y0.cols();
    let inv_sqrt: Vec<f64> = (0..n).map(|u| 1.0 / (g.degree(u) as f64 + 1.0).sqrt()).collect();
    let mut current = y0.clone();
    for _ in 0..steps {
        let mut next = y0.scale(kappa);
        for u in 0..n {
            let mut acc = vec![0.0; c];
            for &v in g.neighbors(u) {
                let w = inv_sqrt[u] * inv_sqrt[v];
                for (a, &p) in acc.iter_mut().zip(current.row(v)) {
                    *a += w * p;
                }
            }
            let row = next.row_mut(u);
            for (r, a) in row.iter_mut().zip(&acc) {
                *r += (1.0 - kappa) * a;
            }
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|v| *v /= total);
            } else {
                row.fill(1.0 / c as f64);
            }
        }
        current = next;
    }
    Ok(LabelDistribution(current))
}
