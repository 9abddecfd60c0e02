//! In-process federated simulation: full-batch local GCN training, weighted
//! parameter averaging, and optional client sampling.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, Graph, Split};
use crate::learn::{
    accuracy, adam_step, gcn_backward, gcn_forward, softmax_cross_entropy, AdamConfig, CeInput, ModelState,
    OptimizerState,
};
use crate::matrix::{CsrMatrix, DenseMatrix};
use crate::partition::FederatedTask;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FederationConfig {
    pub rounds: usize,
    pub local_epochs: usize,
    /// Fraction of clients sampled each round, in `(0, 1]`.
    pub participation: f64,
    pub hidden: usize,
    pub adam: AdamConfig,
    /// Adjacency normalization exponent for the GCN.
    pub norm_exponent: f64,
    pub seed: u64,
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            rounds: 100,
            local_epochs: 5,
            participation: 1.0,
            hidden: 64,
            adam: AdamConfig::default(),
            norm_exponent: 0.5,
            seed: 0,
        }
    }
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidArgument("rounds must be at least 1".into()));
        }
        if !(self.participation > 0.0 && self.participation <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "participation {} outside (0, 1]",
                self.participation
            )));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidArgument("hidden width must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.norm_exponent) {
            return Err(Error::InvalidArgument("norm exponent outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// One client's local state. The optimizer moments survive broadcasts, so a
/// lone client trains exactly as it would on its own.
#[derive(Clone, Debug)]
pub struct ClientWorker {
    pub client_id: usize,
    pub graph: Graph,
    pub adj: CsrMatrix,
    pub model: ModelState,
    pub optimizer: OptimizerState,
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

impl ClientWorker {
    pub fn new(client_id: usize, graph: Graph, model: ModelState, adam: AdamConfig) -> Result<Self> {
        if graph.num_features() != model.meta.dims[0] {
            return Err(Error::shape(
                "ClientWorker::new",
                model.meta.dims[0],
                graph.num_features(),
            ));
        }
        let adj = normalized_adjacency(&graph, model.meta.norm_exponent)?;
        let optimizer = OptimizerState::new(&model, adam);
        Ok(Self {
            client_id,
            train: graph.nodes_in(Split::Train),
            val: graph.nodes_in(Split::Val),
            test: graph.nodes_in(Split::Test),
            graph,
            adj,
            model,
            optimizer,
        })
    }

    /// Number of train-labeled nodes, the aggregation weight.
    pub fn data_size(&self) -> usize {
        self.train.len()
    }

    pub fn logits(&self, model: &ModelState) -> Result<DenseMatrix> {
        Ok(gcn_forward(&self.adj, self.graph.features(), model)?.0)
    }

    /// Validation and test accuracy of `model` on this client.
    pub fn evaluate(&self, model: &ModelState) -> Result<ClientEval> {
        let logits = self.logits(model)?;
        let labels = self.graph.labels();
        Ok(ClientEval {
            client_id: self.client_id,
            val_acc: accuracy(&logits, labels, &self.val),
            test_acc: accuracy(&logits, labels, &self.test),
            val_count: self.val.len(),
            test_count: self.test.len(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientEval {
    pub client_id: usize,
    pub val_acc: Option<f64>,
    pub test_acc: Option<f64>,
    pub val_count: usize,
    pub test_count: usize,
}

/// Node-weighted accuracy over clients: total correct over total evaluated.
pub fn weighted_accuracy(evals: &[ClientEval], split: Split) -> Option<f64> {
    let (mut correct, mut total) = (0.0, 0usize);
    for e in evals {
        let (acc, count) = match split {
            Split::Val => (e.val_acc, e.val_count),
            Split::Test => (e.test_acc, e.test_count),
            _ => (None, 0),
        };
        if let Some(a) = acc {
            correct += a * count as f64;
            total += count;
        }
    }
    (total > 0).then(|| correct / total as f64)
}

/// `epochs` full-batch Adam steps of cross-entropy on the train nodes.
/// Returns the loss of the last step, or `None` when the client has no
/// train nodes (nothing is changed then).
pub fn local_train(worker: &mut ClientWorker, epochs: usize) -> Result<Option<f64>> {
    if worker.train.is_empty() {
        log::warn!(
            "client {} has no train nodes; skipping local training",
            worker.client_id
        );
        return Ok(None);
    }
    let mut last = None;
    for _ in 0..epochs {
        let (logits, cache) = gcn_forward(&worker.adj, worker.graph.features(), &worker.model)?;
        let (loss, grad) = softmax_cross_entropy(&logits, CeInput::Logits, worker.graph.labels(), &worker.train)?;
        gcn_backward(&worker.adj, &mut worker.model, &cache, &grad);
        adam_step(&mut worker.optimizer, &mut worker.model)?;
        last = Some(loss);
    }
    Ok(last)
}

/// `n_i / Σ n`, or uniform weights (with a warning) when every size is zero.
pub fn fedavg_weights(sizes: &[usize]) -> Vec<f64> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        log::warn!("all participating clients have zero train nodes; using uniform weights");
        return vec![1.0 / sizes.len() as f64; sizes.len()];
    }
    sizes.iter().map(|&n| n as f64 / total as f64).collect()
}

/// Parameter-wise weighted mean, anchored on the first model: each entry is
/// `x_0 + w_0·(x_0 − x_0) + w_1·(x_1 − x_0) + …` accumulated in order, so
/// identical inputs come back unchanged.
pub fn fedavg_aggregate(models: &[(&ModelState, usize)]) -> Result<ModelState> {
    let (first, _) = models
        .first()
        .ok_or_else(|| Error::InvalidArgument("nothing to aggregate".into()))?;
    for (m, _) in &models[1..] {
        first.check_compatible(m)?;
    }
    let sizes: Vec<usize> = models.iter().map(|(_, n)| *n).collect();
    let weights = fedavg_weights(&sizes);
    let mut out = (*first).clone();
    for (k, p) in out.params.iter_mut().enumerate() {
        p.zero_grad();
        let anchor = first.params[k].value.data();
        let acc = p.value.data_mut();
        for ((m, _), &w) in models.iter().zip(&weights) {
            for ((a, x), x0) in acc.iter_mut().zip(m.params[k].value.data()).zip(anchor) {
                *a += w * (x - x0);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientRound {
    pub client_id: usize,
    pub participated: bool,
    /// Loss of the last local step; absent when the client did not train.
    pub train_loss: Option<f64>,
    pub val_acc: Option<f64>,
    pub test_acc: Option<f64>,
}

/// Per-round summary; accuracies are of the aggregated global model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub participants: Vec<usize>,
    pub weights: Vec<f64>,
    pub clients: Vec<ClientRound>,
    pub val_acc: Option<f64>,
    pub test_acc: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct FederationOutcome {
    /// Final aggregate, broadcast to every client.
    pub extractor: ModelState,
    pub reports: Vec<RoundReport>,
    /// The extractor evaluated on each client.
    pub extractor_eval: Vec<ClientEval>,
    pub workers: Vec<ClientWorker>,
}

impl FederationOutcome {
    pub fn test_accuracy(&self) -> Option<f64> {
        weighted_accuracy(&self.extractor_eval, Split::Test)
    }
}

/// Builds one worker per client, all starting from the same seeded model.
pub fn make_workers(task: &FederatedTask, cfg: &FederationConfig) -> Result<Vec<ClientWorker>> {
    let first = task
        .clients
        .first()
        .ok_or_else(|| Error::InvalidArgument("task has no clients".into()))?;
    let dims = [first.graph.num_features(), cfg.hidden, first.graph.num_classes()];
    let init = ModelState::gcn(&dims, cfg.norm_exponent, cfg.seed)?;
    task.clients
        .iter()
        .map(|c| ClientWorker::new(c.client_id, c.graph.clone(), init.clone(), cfg.adam))
        .collect()
}

/// FedAvg over the task's clients. Each round samples `⌈c·N⌉` clients
/// without replacement, broadcasts the global model to them, trains them
/// locally in parallel, and averages the participants weighted by train
/// node count.
pub fn run_federation(task: &FederatedTask, cfg: &FederationConfig) -> Result<FederationOutcome> {
    cfg.validate()?;
    let mut workers = make_workers(task, cfg)?;
    let n = workers.len();
    let k = ((cfg.participation * n as f64).ceil() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xfed_a55);
    let mut global = workers[0].model.clone();
    let mut reports = Vec::with_capacity(cfg.rounds);

    for round in 0..cfg.rounds {
        let mut participants = if k == n {
            (0..n).collect::<Vec<_>>()
        } else {
            index::sample(&mut rng, n, k).into_vec()
        };
        participants.sort_unstable();
        let mut chosen = vec![false; n];
        for &p in &participants {
            chosen[p] = true;
        }
        let losses: Vec<Option<f64>> = workers
            .par_iter_mut()
            .zip(chosen.par_iter())
            .map(|(w, &take)| {
                if !take {
                    return Ok(None);
                }
                w.model = global.clone();
                local_train(w, cfg.local_epochs)
            })
            .collect::<Result<_>>()?;

        let sizes: Vec<usize> = participants.iter().map(|&p| workers[p].data_size()).collect();
        let pairs: Vec<(&ModelState, usize)> = participants
            .iter()
            .zip(&sizes)
            .map(|(&p, &s)| (&workers[p].model, s))
            .collect();
        global = fedavg_aggregate(&pairs)?;
        let weights = fedavg_weights(&sizes);

        let evals: Vec<ClientEval> = workers.par_iter().map(|w| w.evaluate(&global)).collect::<Result<_>>()?;
        reports.push(RoundReport {
            round,
            clients: evals
                .iter()
                .zip(&losses)
                .map(|(e, l)| ClientRound {
                    client_id: e.client_id,
                    participated: chosen[e.client_id],
                    train_loss: *l,
                    val_acc: e.val_acc,
                    test_acc: e.test_acc,
                })
                .collect(),
            val_acc: weighted_accuracy(&evals, Split::Val),
            test_acc: weighted_accuracy(&evals, Split::Test),
            participants,
            weights,
        });
    }
    for w in workers.iter_mut() {
        w.model = global.clone();
    }
    let extractor_eval = workers
        .iter()
        .map(|w| w.evaluate(&global))
        .collect::<Result<Vec<_>>>()?;
    Ok(FederationOutcome {
        extractor: global,
        reports,
        extractor_eval,
        workers,
    })
}
