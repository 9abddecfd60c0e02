use super::{Activation, ModelKind, ModelState};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, Propagator};

/// Intermediates kept by a forward pass for the matching backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// Input of each layer (post-activation of the previous one).
    inputs: Vec<DenseMatrix>,
    /// Pre-activation output of each hidden layer.
    pre_activations: Vec<DenseMatrix>,
}

fn check_input(x: &DenseMatrix, params: &ModelState, op: &'static str) -> Result<()> {
    let expected = params.meta.dims[0];
    if x.cols() != expected {
        return Err(Error::shape(op, format!("{expected} input columns"), x.cols()));
    }
    for (i, w) in params.meta.dims.windows(2).enumerate() {
        if params.weight(i).shape() != (w[0], w[1]) || params.bias(i).shape() != (1, w[1]) {
            return Err(Error::shape(
                op,
                format!("layer {i} {}x{}", w[0], w[1]),
                format!("{:?}", params.weight(i).shape()),
            ));
        }
    }
    Ok(())
}

fn activate(z: &DenseMatrix, act: Activation) -> DenseMatrix {
    match act {
        Activation::Relu => z.map(|v| v.max(0.0)),
        Activation::Identity => z.clone(),
    }
}

fn activate_backward(dout: &DenseMatrix, z: &DenseMatrix, act: Activation) -> DenseMatrix {
    match act {
        Activation::Relu => dout.zip_map(z, |g, v| if v > 0.0 { g } else { 0.0 }),
        Activation::Identity => dout.clone(),
    }
}

fn layered_forward(prop: Option<&dyn Propagator>, x: &DenseMatrix, params: &ModelState) -> (DenseMatrix, ForwardCache) {
    let layers = params.num_layers();
    let mut cache = ForwardCache {
        inputs: Vec::with_capacity(layers),
        pre_activations: Vec::with_capacity(layers.saturating_sub(1)),
    };
    let mut h = x.clone();
    for l in 0..layers {
        let t = h.matmul(params.weight(l));
        let mut z = match prop {
            Some(p) => p.propagate(&t),
            None => t,
        };
        z.add_row_vector(params.bias(l).data());
        cache.inputs.push(h);
        if l + 1 == layers {
            h = z;
        } else {
            h = activate(&z, params.meta.activation);
            cache.pre_activations.push(z);
        }
    }
    (h, cache)
}

fn layered_backward(
    prop: Option<&dyn Propagator>,
    params: &mut ModelState,
    cache: &ForwardCache,
    dout: &DenseMatrix,
    need_input_grad: bool,
) -> Option<DenseMatrix> {
    let layers = params.num_layers();
    let act = params.meta.activation;
    let mut dz = dout.clone();
    let mut dx = None;
    for l in (0..layers).rev() {
        let mut db = vec![0.0; dz.cols()];
        for i in 0..dz.rows() {
            for (b, g) in db.iter_mut().zip(dz.row(i)) {
                *b += g;
            }
        }
        let dt = match prop {
            Some(p) => p.propagate_transposed(&dz),
            None => dz,
        };
        let dw = cache.inputs[l].t_matmul(&dt);
        params.params[2 * l].grad.axpy(1.0, &dw);
        for (g, b) in params.params[2 * l + 1].grad.data_mut().iter_mut().zip(&db) {
            *g += b;
        }
        if l == 0 && !need_input_grad {
            break;
        }
        let dh = dt.matmul_t(params.weight(l));
        if l == 0 {
            dx = Some(dh);
            break;
        }
        dz = activate_backward(&dh, &cache.pre_activations[l - 1], act);
    }
    dx
}

/// Multi-layer perceptron: dense layers with the configured activation
/// between them and raw outputs (logits) at the end.
pub fn mlp_forward(x: &DenseMatrix, params: &ModelState) -> Result<(DenseMatrix, ForwardCache)> {
    if params.meta.kind != ModelKind::Mlp {
        return Err(Error::InvalidArgument("mlp_forward called with a non-MLP model".into()));
    }
    check_input(x, params, "mlp_forward")?;
    Ok(layered_forward(None, x, params))
}

/// Accumulates parameter gradients for `dout = ∂L/∂output` and returns
/// `∂L/∂x` when `need_input_grad` is set.
pub fn mlp_backward(
    params: &mut ModelState,
    cache: &ForwardCache,
    dout: &DenseMatrix,
    need_input_grad: bool,
) -> Option<DenseMatrix> {
    layered_backward(None, params, cache, dout, need_input_grad)
}

/// Graph convolution stack: each layer computes `Ã · H · W + b`, with the
/// activation between layers and logits out.
pub fn gcn_forward(adj: &dyn Propagator, x: &DenseMatrix, params: &ModelState) -> Result<(DenseMatrix, ForwardCache)> {
    if params.meta.kind != ModelKind::Gcn {
        return Err(Error::InvalidArgument("gcn_forward called with a non-GCN model".into()));
    }
    if adj.dim() != x.rows() {
        return Err(Error::shape(
            "gcn_forward",
            format!("{} adjacency rows", x.rows()),
            adj.dim(),
        ));
    }
    check_input(x, params, "gcn_forward")?;
    Ok(layered_forward(Some(adj), x, params))
}

pub fn gcn_backward(adj: &dyn Propagator, params: &mut ModelState, cache: &ForwardCache, dout: &DenseMatrix) {
    layered_backward(Some(adj), params, cache, dout, false);
}
