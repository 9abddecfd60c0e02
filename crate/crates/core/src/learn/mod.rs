//! Small differentiable building blocks: parameters, two fixed model
//! families (MLP and GCN), losses, and Adam.
//!
//! Gradients are written by hand; `gradcheck` holds the central-difference
//! helpers the tests use to verify them.

mod adam;
pub mod gradcheck;
mod init;
mod loss;
mod models;
mod serialize;

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use init::glorot_uniform;
pub use loss::{frobenius_loss, softmax_cross_entropy, CeInput};
pub use models::{gcn_backward, gcn_forward, mlp_backward, mlp_forward, ForwardCache};
pub use serialize::{decode_model, encode_model};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{argmax, DenseMatrix};

/// Share of `rows` whose highest score (ties to the lowest class) matches
/// the label; `None` for an empty row set.
pub fn accuracy(scores: &DenseMatrix, labels: &[usize], rows: &[usize]) -> Option<f64> {
    if rows.is_empty() {
        return None;
    }
    let correct = rows.iter().filter(|&&i| argmax(scores.row(i)) == labels[i]).count();
    Some(correct as f64 / rows.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: DenseMatrix,
    pub grad: DenseMatrix,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: DenseMatrix) -> Self {
        let grad = DenseMatrix::zeros(value.rows(), value.cols());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// Dense layers only.
    Mlp,
    /// Every layer propagates over a normalized adjacency before the bias.
    Gcn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// Architecture description shared by every copy of a model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelMeta {
    pub kind: ModelKind,
    /// Layer widths including input and output, e.g. `[f, 64, |Y|]`.
    pub dims: Vec<usize>,
    /// Applied between layers; never after the last one.
    pub activation: Activation,
    /// Normalization exponent `r` of the adjacency a GCN expects.
    pub norm_exponent: f64,
}

/// Ordered parameters plus the architecture they belong to. Layer `i` owns
/// `layer{i}.weight` (`dims[i] × dims[i+1]`) and `layer{i}.bias` (`1 × dims[i+1]`).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub meta: ModelMeta,
    pub params: Vec<Parameter>,
}

impl ModelState {
    /// Glorot-uniform weights and zero biases from a seeded stream.
    pub fn init(meta: ModelMeta, seed: u64) -> Result<Self> {
        if meta.dims.len() < 2 {
            return Err(Error::InvalidArgument("a model needs at least one layer".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(2 * (meta.dims.len() - 1));
        for (i, w) in meta.dims.windows(2).enumerate() {
            params.push(Parameter::new(
                format!("layer{i}.weight"),
                glorot_uniform(w[0], w[1], &mut rng),
            ));
            params.push(Parameter::new(format!("layer{i}.bias"), DenseMatrix::zeros(1, w[1])));
        }
        Ok(Self { meta, params })
    }

    pub fn mlp(dims: &[usize], seed: u64) -> Result<Self> {
        Self::init(
            ModelMeta {
                kind: ModelKind::Mlp,
                dims: dims.to_vec(),
                activation: Activation::Relu,
                norm_exponent: 0.5,
            },
            seed,
        )
    }

    pub fn gcn(dims: &[usize], norm_exponent: f64, seed: u64) -> Result<Self> {
        Self::init(
            ModelMeta {
                kind: ModelKind::Gcn,
                dims: dims.to_vec(),
                activation: Activation::Relu,
                norm_exponent,
            },
            seed,
        )
    }

    pub fn num_layers(&self) -> usize {
        self.meta.dims.len() - 1
    }

    pub fn weight(&self, layer: usize) -> &DenseMatrix {
        &self.params[2 * layer].value
    }

    pub fn bias(&self, layer: usize) -> &DenseMatrix {
        &self.params[2 * layer + 1].value
    }

    pub fn zero_grad(&mut self) {
        self.params.iter_mut().for_each(Parameter::zero_grad);
    }

    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.value.data().len()).sum()
    }

    /// Whether `other` can be averaged with `self`.
    pub fn check_compatible(&self, other: &ModelState) -> Result<()> {
        if self.meta != other.meta {
            return Err(Error::IncompatibleModels(format!(
                "metadata differs: {:?} vs {:?}",
                self.meta, other.meta
            )));
        }
        if self.params.len() != other.params.len() {
            return Err(Error::IncompatibleModels("parameter counts differ".into()));
        }
        for (a, b) in self.params.iter().zip(&other.params) {
            if a.name != b.name || a.value.shape() != b.value.shape() {
                return Err(Error::IncompatibleModels(format!(
                    "parameter {} {:?} vs {} {:?}",
                    a.name,
                    a.value.shape(),
                    b.name,
                    b.value.shape()
                )));
            }
        }
        Ok(())
    }

    /// Values with the same shapes as `self`, gradients cleared.
    pub fn with_values_of(&self, other: &ModelState) -> Result<ModelState> {
        self.check_compatible(other)?;
        let mut out = other.clone();
        out.zero_grad();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seeded_and_shaped() {
        let a = ModelState::gcn(&[5, 4, 3], 0.5, 1).unwrap();
        let b = ModelState::gcn(&[5, 4, 3], 0.5, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.weight(0).shape(), (5, 4));
        assert_eq!(a.bias(1).shape(), (1, 3));
        assert_eq!(a.num_values(), 5 * 4 + 4 + 4 * 3 + 3);
        let c = ModelState::gcn(&[5, 4, 3], 0.5, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn compatibility_checks_metadata() {
        let a = ModelState::gcn(&[5, 4, 3], 0.5, 1).unwrap();
        let b = ModelState::mlp(&[5, 4, 3], 1).unwrap();
        assert!(a.check_compatible(&b).is_err());
        let c = ModelState::gcn(&[5, 6, 3], 0.5, 1).unwrap();
        assert!(a.check_compatible(&c).is_err());
    }
}
