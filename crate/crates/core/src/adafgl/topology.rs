use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, Graph};
use crate::learn::{gcn_forward, ModelState};
use crate::matrix::DenseMatrix;

/// Largest client handled with dense `n × n` matrices unless raised.
pub const DEFAULT_DENSE_CAP: usize = 8000;

/// Symmetric, non-negative, zero-diagonal, degree-normalized weights.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationMatrix(DenseMatrix);

impl PropagationMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.0
    }
}

/// `D^(-1/2) M D^(-1/2)` with `D` the row sums of `m`; rows summing to zero stay zero.
pub fn symmetric_normalize(m: &DenseMatrix) -> DenseMatrix {
    let inv: Vec<f64> = m
        .row_sums()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| inv[i] * m.get(i, j) * inv[j])
}

/// Output of the topology step: the blended propagation matrix and the
/// extractor's class probabilities it was built from.
#[derive(Clone, Debug)]
pub struct Topology {
    pub propagation: PropagationMatrix,
    pub extractor_probs: DenseMatrix,
}

/// Blends the observed adjacency with prediction similarity,
/// `P = α·A + (1 − α)·P̂P̂ᵀ`, clears the diagonal and normalizes by degree.
pub fn optimize_topology(g: &Graph, extractor: &ModelState, alpha: f64, dense_cap: usize) -> Result<Topology> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
    }
    let n = g.num_nodes();
    if n > dense_cap {
        return Err(Error::DenseCapExceeded {
            nodes: n,
            cap: dense_cap,
        });
    }
    let adj = normalized_adjacency(g, extractor.meta.norm_exponent)?;
    let probs = gcn_forward(&adj, g.features(), extractor)?.0.softmax_rows();
    let mut p = probs.matmul_t(&probs);
    p.scale_in_place(1.0 - alpha);
    for u in 0..n {
        for &v in g.neighbors(u) {
            let x = p.get(u, v) + alpha;
            p.set(u, v, x);
        }
        p.set(u, u, 0.0);
    }
    Ok(Topology {
        propagation: PropagationMatrix(symmetric_normalize(&p)),
        extractor_probs: probs,
    })
}
