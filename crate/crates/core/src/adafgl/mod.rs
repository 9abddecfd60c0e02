//! Personalized per-client training on top of a federated GCN extractor.
//!
//! The extractor's predictions reshape each client's topology into a dense
//! propagation matrix. Two branches are then trained locally: a homophilous
//! one smoothing features over that matrix and staying close to the
//! extractor, and a heterophilous one using signed message passing. A
//! label-propagation probe (HCS) decides how much each branch counts.

mod hcs;
mod model;
mod topology;

pub use hcs::{compute_hcs, HcsParams, HcsReport};
pub use model::{
    adaptive_combine, hetero_forward, homo_forward, knowledge_preserving_loss, knowledge_smoothing, propagated_stack,
    row_l2_normalize, softmax_backward, step2_backward, step2_forward, step2_loss, HeteroForward, HeteroState,
    KnowledgeEmbedding, Step2Forward, Step2Inputs, Step2Model,
};
pub use topology::{optimize_topology, symmetric_normalize, PropagationMatrix, Topology, DEFAULT_DENSE_CAP};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{edge_homophily, Graph, Split};
use crate::learn::{accuracy, adam_step, AdamConfig, ModelState, OptimizerState};

/// How the knowledge-preserving term is weighted in the Step-2 loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnowledgeScale {
    /// Weight 1.
    #[default]
    One,
    /// Weight equal to the client's HCS.
    Hcs,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step2Hyper {
    /// Weight of the observed adjacency against prediction similarity.
    pub alpha: f64,
    /// Memory of the previous propagation matrix in message layers.
    pub beta: f64,
    /// Smoothing steps of the knowledge branch.
    pub k: usize,
    /// Message-passing layers of the heterophilous branch.
    pub layers: usize,
    pub epochs: usize,
    pub hidden: usize,
    pub adam: AdamConfig,
    pub knowledge_scale: KnowledgeScale,
    pub hcs: HcsParams,
    pub dense_cap: usize,
}

impl Default for Step2Hyper {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            k: 3,
            layers: 2,
            epochs: 200,
            hidden: 64,
            adam: AdamConfig::default(),
            knowledge_scale: KnowledgeScale::One,
            hcs: HcsParams::default(),
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

impl Step2Hyper {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} {v} outside [0, 1]")));
            }
        }
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidArgument("hidden width must be positive".into()));
        }
        let h = self.hcs;
        if !(0.0..=1.0).contains(&h.kappa) || !(0.0..=1.0).contains(&h.mask_prob) {
            return Err(Error::InvalidArgument("kappa and mask_prob must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch: usize,
    pub loss: f64,
    pub val_acc: Option<f64>,
    pub test_acc: Option<f64>,
}

/// Per-client Step-2 outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientResult {
    pub client_id: usize,
    pub hcs: f64,
    /// Absent for a client without edges.
    pub edge_homophily: Option<f64>,
    pub extractor_acc: Option<f64>,
    /// Test accuracy at the epoch with the best validation accuracy.
    pub adafgl_acc: Option<f64>,
    pub best_epoch: usize,
    pub test_count: usize,
    pub epochs_trace: Vec<EpochTrace>,
}

/// Builds the frozen inputs: topology, extractor probabilities, propagated
/// features and HCS.
pub fn prepare_inputs(
    g: &Graph,
    extractor: &ModelState,
    hyper: &Step2Hyper,
    seed: u64,
) -> Result<(Step2Inputs, HcsReport)> {
    hyper.validate()?;
    let topo = optimize_topology(g, extractor, hyper.alpha, hyper.dense_cap)?;
    let p_tilde = topo.propagation.into_matrix();
    let stack = propagated_stack(&p_tilde, g.features(), hyper.k)?;
    let report = compute_hcs(g, hyper.hcs, seed)?;
    let knowledge_weight = match hyper.knowledge_scale {
        KnowledgeScale::One => 1.0,
        KnowledgeScale::Hcs => report.hcs,
    };
    Ok((
        Step2Inputs {
            x: g.features().clone(),
            stack,
            p_tilde,
            p_hat: topo.extractor_probs,
            labels: g.labels().to_vec(),
            train: g.nodes_in(Split::Train),
            hcs: report.hcs,
            knowledge_weight,
        },
        report,
    ))
}

/// Freshly initialized Step-2 parameters.
pub fn init_model(inp: &Step2Inputs, hyper: &Step2Hyper, seed: u64) -> Result<Step2Model> {
    let c = inp.p_hat.cols();
    let f = inp.x.cols();
    let knowledge = ModelState::mlp(&[inp.stack.cols(), hyper.hidden, c], seed.wrapping_add(1))?;
    let feature = ModelState::mlp(&[f, hyper.hidden, c], seed.wrapping_add(2))?;
    let message = (0..hyper.layers)
        .map(|l| ModelState::mlp(&[c, c], seed.wrapping_add(3 + l as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Step2Model {
        knowledge,
        hetero: HeteroState {
            beta: hyper.beta,
            feature,
            message,
        },
    })
}

fn models_mut(m: &mut Step2Model) -> Vec<&mut ModelState> {
    let mut v = vec![&mut m.knowledge, &mut m.hetero.feature];
    v.extend(m.hetero.message.iter_mut());
    v
}

/// A trained client: its result, the parameters of the best validation
/// epoch and the frozen inputs they were trained on.
#[derive(Clone, Debug)]
pub struct Step2Fit {
    pub result: ClientResult,
    pub best_model: Step2Model,
    pub inputs: Step2Inputs,
}

/// Trains the Step-2 model of one client with the extractor frozen and
/// reports the test accuracy at the best validation epoch. Epoch 0 is the
/// untrained model.
pub fn step2_train(
    client_id: usize,
    g: &Graph,
    extractor: &ModelState,
    hyper: &Step2Hyper,
    seed: u64,
) -> Result<ClientResult> {
    step2_fit(client_id, g, extractor, hyper, seed).map(|f| f.result)
}

/// [`step2_train`] keeping the best model and the inputs.
pub fn step2_fit(
    client_id: usize,
    g: &Graph,
    extractor: &ModelState,
    hyper: &Step2Hyper,
    seed: u64,
) -> Result<Step2Fit> {
    let (inp, report) = prepare_inputs(g, extractor, hyper, seed)?;
    let val = g.nodes_in(Split::Val);
    let test = g.nodes_in(Split::Test);
    let labels = g.labels();
    let extractor_acc = accuracy(&inp.p_hat, labels, &test);

    let mut model = init_model(&inp, hyper, seed)?;
    let mut opts: Vec<OptimizerState> = models_mut(&mut model)
        .into_iter()
        .map(|m| OptimizerState::new(m, hyper.adam))
        .collect();
    let mut trace = Vec::with_capacity(hyper.epochs + 1);
    let mut best: Option<(f64, usize)> = None;
    let mut best_model = model.clone();

    for epoch in 0..=hyper.epochs {
        let fwd = step2_forward(&inp, &model)?;
        let val_acc = accuracy(&fwd.y, labels, &val);
        let test_acc = accuracy(&fwd.y, labels, &test);
        let score = val_acc.unwrap_or(0.0);
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, epoch));
            best_model = model.clone();
        }
        let loss = if epoch < hyper.epochs && !inp.train.is_empty() {
            let loss = step2_backward(&inp, &mut model, &fwd)?;
            for (m, o) in models_mut(&mut model).into_iter().zip(opts.iter_mut()) {
                adam_step(o, m)?;
            }
            loss
        } else if inp.train.is_empty() {
            f64::NAN
        } else {
            step2_loss(&inp, &fwd)?
        };
        if !loss.is_nan() && !loss.is_finite() {
            return Err(Error::NonFinite(format!("client {client_id} loss at epoch {epoch}")));
        }
        trace.push(EpochTrace {
            epoch,
            loss,
            val_acc,
            test_acc,
        });
        if inp.train.is_empty() {
            break;
        }
    }
    let best_epoch = if val.is_empty() {
        best_model = model;
        trace.len() - 1
    } else {
        best.map_or(0, |(_, e)| e)
    };
    let result = ClientResult {
        client_id,
        hcs: report.hcs,
        edge_homophily: edge_homophily(g).ok(),
        extractor_acc,
        adafgl_acc: trace[best_epoch].test_acc,
        best_epoch,
        test_count: test.len(),
        epochs_trace: trace,
    };
    Ok(Step2Fit {
        result,
        best_model,
        inputs: inp,
    })
}

/// Test accuracy weighted by each client's test node count.
pub fn weighted_adafgl_accuracy(results: &[ClientResult]) -> Option<f64> {
    let (mut correct, mut total) = (0.0, 0usize);
    for r in results {
        if let Some(a) = r.adafgl_acc {
            correct += a * r.test_count as f64;
            total += r.test_count;
        }
    }
    (total > 0).then(|| correct / total as f64)
}
