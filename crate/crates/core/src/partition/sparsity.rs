use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClientSubgraph, FederatedTask};
use crate::error::{Error, Result};
use crate::graph::{Graph, Split};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparsityConfig {
    /// Fraction of non-train nodes whose feature rows are zeroed.
    #[serde(default)]
    pub feature_missing: f64,
    /// Fraction of edges removed.
    #[serde(default)]
    pub edge_drop: f64,
    /// When set, each client keeps `round(rate · n_i)` train nodes.
    #[serde(default)]
    pub label_rate: Option<f64>,
}

impl SparsityConfig {
    pub fn is_noop(&self) -> bool {
        self.feature_missing == 0.0 && self.edge_drop == 0.0 && self.label_rate.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("feature_missing", self.feature_missing), ("edge_drop", self.edge_drop)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} {v} outside [0, 1]")));
            }
        }
        if let Some(r) = self.label_rate {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidArgument(format!("label rate {r} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

fn subsample_train(g: Graph, rate: f64, rng: &mut ChaCha8Rng, client: usize) -> Result<Graph> {
    let mut train = g.nodes_in(Split::Train);
    let target = (rate * g.num_nodes() as f64).round() as usize;
    if target >= train.len() {
        return Ok(g);
    }
    train.shuffle(rng);
    let mut keep = vec![false; g.num_nodes()];
    let mut covered = vec![false; g.num_classes()];
    let mut kept = 0;
    // one per class first, in shuffled order
    for &u in &train {
        let y = g.labels()[u];
        if !covered[y] {
            covered[y] = true;
            keep[u] = true;
            kept += 1;
        }
    }
    if kept > target {
        log::warn!("client {client}: label rate {rate} would leave a class without train nodes; keeping {kept}");
    }
    for &u in &train {
        if kept >= target {
            break;
        }
        if !keep[u] {
            keep[u] = true;
            kept += 1;
        }
    }
    let split = g
        .split()
        .iter()
        .enumerate()
        .map(|(u, &s)| if s == Split::Train && !keep[u] { Split::None } else { s })
        .collect();
    g.with_split(split)
}

fn drop_features(g: Graph, frac: f64, rng: &mut ChaCha8Rng) -> Result<Graph> {
    let unlabeled: Vec<usize> = (0..g.num_nodes()).filter(|&u| g.split()[u] != Split::Train).collect();
    let count = (frac * unlabeled.len() as f64).round() as usize;
    if count == 0 {
        return Ok(g);
    }
    let mut x = g.features().clone();
    for i in index::sample(rng, unlabeled.len(), count) {
        x.row_mut(unlabeled[i]).fill(0.0);
    }
    g.with_features(x)
}

fn drop_edges(g: Graph, frac: f64, rng: &mut ChaCha8Rng) -> Result<Graph> {
    let edges = g.edge_list();
    let remove = (frac * edges.len() as f64).round() as usize;
    if remove == 0 {
        return Ok(g);
    }
    let mut keep: Vec<usize> = index::sample(rng, edges.len(), edges.len() - remove).into_vec();
    keep.sort_unstable();
    let kept: Vec<_> = keep.into_iter().map(|i| edges[i]).collect();
    g.with_edges(&kept)
}

/// Label subsampling, then feature removal on non-train rows, then edge
/// removal; each client draws from its own seeded stream.
pub fn apply_sparsity(task: &FederatedTask, cfg: &SparsityConfig, seed: u64) -> Result<FederatedTask> {
    cfg.validate()?;
    if cfg.is_noop() {
        return Ok(task.clone());
    }
    let clients = task
        .clients
        .iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ c.client_id as u64);
            let mut g = c.graph.clone();
            if let Some(rate) = cfg.label_rate {
                g = subsample_train(g, rate, &mut rng, c.client_id)?;
            }
            g = drop_features(g, cfg.feature_missing, &mut rng)?;
            g = drop_edges(g, cfg.edge_drop, &mut rng)?;
            Ok(ClientSubgraph {
                client_id: c.client_id,
                graph: g,
                global_ids: c.global_ids.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FederatedTask {
        clients,
        ..task.clone()
    })
}
