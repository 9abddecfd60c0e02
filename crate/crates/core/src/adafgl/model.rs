use super::topology::symmetric_normalize;
use crate::error::{Error, Result};
use crate::learn::{
    frobenius_loss, mlp_backward, mlp_forward, softmax_cross_entropy, CeInput, ForwardCache, ModelState,
};
use crate::matrix::DenseMatrix;

/// Backward of a row-wise softmax: `dz = s ⊙ (ds − rowsum(ds ⊙ s))`.
pub fn softmax_backward(s: &DenseMatrix, ds: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(s.rows(), s.cols());
    for i in 0..s.rows() {
        let dot: f64 = s.row(i).iter().zip(ds.row(i)).map(|(a, b)| a * b).sum();
        for ((o, &p), &g) in out.row_mut(i).iter_mut().zip(s.row(i)).zip(ds.row(i)) {
            *o = p * (g - dot);
        }
    }
    out
}

/// Rows scaled to unit L2 norm; zero rows stay zero.
pub fn row_l2_normalize(z: &DenseMatrix) -> DenseMatrix {
    let mut out = z.clone();
    for i in 0..z.rows() {
        let norm = z.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.row_mut(i).iter_mut().for_each(|v| *v /= norm);
        }
    }
    out
}

fn row_l2_backward(z: &DenseMatrix, n: &DenseMatrix, dn: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(z.rows(), z.cols());
    for i in 0..z.rows() {
        let norm = z.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let dot: f64 = n.row(i).iter().zip(dn.row(i)).map(|(a, b)| a * b).sum();
        for ((o, &a), &g) in out.row_mut(i).iter_mut().zip(n.row(i)).zip(dn.row(i)) {
            *o = (g - a * dot) / norm;
        }
    }
    out
}

/// `[SX ‖ S²X ‖ … ‖ SᵏX]` with `S` the symmetric normalization of `P̃ + I`.
pub fn propagated_stack(p_tilde: &DenseMatrix, x: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    if k == 0 {
        return Err(Error::InvalidArgument("smoothing needs k ≥ 1".into()));
    }
    if p_tilde.rows() != x.rows() || p_tilde.cols() != x.rows() {
        return Err(Error::shape(
            "propagated_stack",
            format!("{0}x{0}", x.rows()),
            format!("{:?}", p_tilde.shape()),
        ));
    }
    let mut with_loops = p_tilde.clone();
    for i in 0..x.rows() {
        let v = with_loops.get(i, i) + 1.0;
        with_loops.set(i, i, v);
    }
    let s = symmetric_normalize(&with_loops);
    let mut parts = Vec::with_capacity(k);
    let mut cur = x.clone();
    for _ in 0..k {
        cur = s.matmul(&cur);
        parts.push(cur.clone());
    }
    let refs: Vec<&DenseMatrix> = parts.iter().collect();
    DenseMatrix::hcat(&refs)
}

/// Output of the knowledge branch MLP over the propagated stack.
#[derive(Clone, Debug)]
pub struct KnowledgeEmbedding {
    /// `n × |Y|` logits `H̃`.
    pub h_tilde: DenseMatrix,
    cache: ForwardCache,
}

pub fn knowledge_smoothing(stack: &DenseMatrix, theta: &ModelState) -> Result<KnowledgeEmbedding> {
    let (h_tilde, cache) = mlp_forward(stack, theta)?;
    Ok(KnowledgeEmbedding { h_tilde, cache })
}

/// `(softmax(H̃) + P̂) / 2`.
pub fn homo_forward(h_tilde: &DenseMatrix, p_hat: &DenseMatrix) -> DenseMatrix {
    h_tilde.softmax_rows().zip_map(p_hat, |a, b| 0.5 * (a + b))
}

/// `‖softmax(H̃) − P̂‖_F` and its gradient with respect to `H̃`.
pub fn knowledge_preserving_loss(h_tilde: &DenseMatrix, p_hat: &DenseMatrix) -> Result<(f64, DenseMatrix)> {
    let s = h_tilde.softmax_rows();
    let (loss, ds) = frobenius_loss(&s, p_hat)?;
    Ok((loss, softmax_backward(&s, &ds)))
}

/// `hcs · Ŷ_ho + (1 − hcs) · Ŷ_he`.
pub fn adaptive_combine(y_ho: &DenseMatrix, y_he: &DenseMatrix, hcs: f64) -> DenseMatrix {
    y_ho.zip_map(y_he, |a, b| hcs * a + (1.0 - hcs) * b)
}

/// Trainable parts of the heterophilous branch.
#[derive(Clone, Debug, PartialEq)]
pub struct HeteroState {
    pub beta: f64,
    /// MLP from raw features to class logits.
    pub feature: ModelState,
    /// One `|Y| → |Y|` linear map per message-passing layer.
    pub message: Vec<ModelState>,
}

#[derive(Clone, Debug)]
struct MessageLayer {
    cache: ForwardCache,
    z: DenseMatrix,
    n: DenseMatrix,
    p: DenseMatrix,
}

#[derive(Clone, Debug)]
pub struct HeteroForward {
    pub y_he: DenseMatrix,
    pub h_f: DenseMatrix,
    /// Output of the last message layer (`H̃` when there are none).
    pub m_final: DenseMatrix,
    feature_cache: ForwardCache,
    layers: Vec<MessageLayer>,
}

/// Feature MLP plus signed message passing started from `H̃` and `P̃`.
///
/// Each layer maps `Z = Linear(M)`, updates `P ← β·P + (1 − β)·N·Nᵀ` with
/// `N` the row-normalized `Z`, and sets `M = Z + relu(P)·Z − relu(−P)·Z`,
/// which equals `Z + P·Z`.
pub fn hetero_forward(
    x: &DenseMatrix,
    h_tilde: &DenseMatrix,
    p_tilde: &DenseMatrix,
    state: &HeteroState,
) -> Result<HeteroForward> {
    if !(0.0..=1.0).contains(&state.beta) {
        return Err(Error::InvalidArgument(format!("beta {} outside [0, 1]", state.beta)));
    }
    let (h_f, feature_cache) = mlp_forward(x, &state.feature)?;
    let mut m = h_tilde.clone();
    let mut p = p_tilde.clone();
    let mut layers = Vec::with_capacity(state.message.len());
    for (l, theta) in state.message.iter().enumerate() {
        let (z, cache) = mlp_forward(&m, theta)?;
        let n = row_l2_normalize(&z);
        let mut next_p = n.matmul_t(&n);
        next_p.scale_in_place(1.0 - state.beta);
        next_p.axpy(state.beta, &p);
        let mut next_m = next_p.matmul(&z);
        next_m.axpy(1.0, &z);
        if !next_m.is_finite() || !next_p.is_finite() {
            return Err(Error::NonFinite(format!("message layer {}", l + 1)));
        }
        layers.push(MessageLayer {
            cache,
            z,
            n,
            p: next_p.clone(),
        });
        p = next_p;
        m = next_m;
    }
    let s_f = h_f.softmax_rows();
    let s_k = h_tilde.softmax_rows();
    let s_m = m.softmax_rows();
    let mut y_he = s_f.add(&s_k);
    y_he.axpy(1.0, &s_m);
    y_he.scale_in_place(1.0 / 3.0);
    Ok(HeteroForward {
        y_he,
        h_f,
        m_final: m,
        feature_cache,
        layers,
    })
}

/// Backward of the message layers for `dm = ∂L/∂M_L`; accumulates gradients
/// into the message parameters and returns `∂L/∂H̃`.
fn message_backward(state: &mut HeteroState, fwd: &HeteroForward, dm: DenseMatrix) -> DenseMatrix {
    let beta = state.beta;
    let mut dm = dm;
    let mut dp_carry: Option<DenseMatrix> = None;
    for (l, layer) in fwd.layers.iter().enumerate().rev() {
        // M = Z + P·Z with P symmetric
        let mut dz = layer.p.matmul(&dm);
        dz.axpy(1.0, &dm);
        let mut dp = dm.matmul_t(&layer.z);
        if let Some(c) = &dp_carry {
            dp.axpy(1.0, c);
        }
        let sym = dp.add(&dp.transpose());
        let mut dn = sym.matmul(&layer.n);
        dn.scale_in_place(1.0 - beta);
        dz.axpy(1.0, &row_l2_backward(&layer.z, &layer.n, &dn));
        dp.scale_in_place(beta);
        dp_carry = Some(dp);
        dm = mlp_backward(&mut state.message[l], &layer.cache, &dz, true).expect("input gradient requested");
    }
    dm
}

/// Full Step-2 parameter set for one client.
#[derive(Clone, Debug, PartialEq)]
pub struct Step2Model {
    pub knowledge: ModelState,
    pub hetero: HeteroState,
}

/// Per-client quantities fixed before Step-2 training starts.
#[derive(Clone, Debug)]
pub struct Step2Inputs {
    pub x: DenseMatrix,
    /// Propagated feature stack fed to the knowledge MLP.
    pub stack: DenseMatrix,
    pub p_tilde: DenseMatrix,
    /// Frozen extractor probabilities `P̂`.
    pub p_hat: DenseMatrix,
    pub labels: Vec<usize>,
    pub train: Vec<usize>,
    pub hcs: f64,
    /// Multiplier of the knowledge-preserving term.
    pub knowledge_weight: f64,
}

#[derive(Clone, Debug)]
pub struct Step2Forward {
    pub y: DenseMatrix,
    pub y_ho: DenseMatrix,
    pub knowledge: KnowledgeEmbedding,
    pub hetero: HeteroForward,
}

pub fn step2_forward(inp: &Step2Inputs, model: &Step2Model) -> Result<Step2Forward> {
    let knowledge = knowledge_smoothing(&inp.stack, &model.knowledge)?;
    let y_ho = homo_forward(&knowledge.h_tilde, &inp.p_hat);
    let hetero = hetero_forward(&inp.x, &knowledge.h_tilde, &inp.p_tilde, &model.hetero)?;
    let y = adaptive_combine(&y_ho, &hetero.y_he, inp.hcs);
    Ok(Step2Forward {
        y,
        y_ho,
        knowledge,
        hetero,
    })
}

/// Cross-entropy of the combined prediction on train nodes plus the
/// weighted knowledge-preserving term.
pub fn step2_loss(inp: &Step2Inputs, fwd: &Step2Forward) -> Result<f64> {
    let (ce, _) = softmax_cross_entropy(&fwd.y, CeInput::Probabilities, &inp.labels, &inp.train)?;
    let (kp, _) = knowledge_preserving_loss(&fwd.knowledge.h_tilde, &inp.p_hat)?;
    Ok(ce + inp.knowledge_weight * kp)
}

/// Accumulates gradients of [`step2_loss`] into every trainable parameter
/// and returns the loss.
pub fn step2_backward(inp: &Step2Inputs, model: &mut Step2Model, fwd: &Step2Forward) -> Result<f64> {
    let (ce, dy) = softmax_cross_entropy(&fwd.y, CeInput::Probabilities, &inp.labels, &inp.train)?;
    let s_k = fwd.knowledge.h_tilde.softmax_rows();
    let (kp, d_sk_kp) = frobenius_loss(&s_k, &inp.p_hat)?;
    let hcs = inp.hcs;
    let third = (1.0 - hcs) / 3.0;

    // dŶ splits into the softmax outputs of each branch
    let mut d_sk = dy.scale(0.5 * hcs + third);
    d_sk.axpy(inp.knowledge_weight, &d_sk_kp);
    let d_sf = dy.scale(third);
    let d_sm = dy.scale(third);

    let s_f = fwd.hetero.h_f.softmax_rows();
    let d_hf = softmax_backward(&s_f, &d_sf);
    mlp_backward(&mut model.hetero.feature, &fwd.hetero.feature_cache, &d_hf, false);

    let s_m = fwd.hetero.m_final.softmax_rows();
    let d_m = softmax_backward(&s_m, &d_sm);
    let mut d_h = message_backward(&mut model.hetero, &fwd.hetero, d_m);
    d_h.axpy(1.0, &softmax_backward(&s_k, &d_sk));
    mlp_backward(&mut model.knowledge, &fwd.knowledge.cache, &d_h, false);
    Ok(ce + inp.knowledge_weight * kp)
}
