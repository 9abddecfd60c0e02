use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{label_propagation, Graph, LabelDistribution, Split};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HcsParams {
    pub kappa: f64,
    pub steps: usize,
    pub mask_prob: f64,
}

impl Default for HcsParams {
    fn default() -> Self {
        Self {
            kappa: 0.5,
            steps: 5,
            mask_prob: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HcsReport {
    pub hcs: f64,
    pub masked: usize,
    pub correct: usize,
}

/// Homophily confidence score: hide `⌊mask_prob · |train|⌋` (at least one)
/// train labels, propagate the rest without parameters, and report the
/// share of hidden labels recovered. Fewer than two train nodes give 0.5.
pub fn compute_hcs(g: &Graph, params: HcsParams, seed: u64) -> Result<HcsReport> {
    let train = g.nodes_in(Split::Train);
    if train.len() < 2 {
        log::warn!("only {} train node(s); HCS defaults to 0.5", train.len());
        return Ok(HcsReport {
            hcs: 0.5,
            masked: 0,
            correct: 0,
        });
    }
    let count = ((params.mask_prob * train.len() as f64).floor() as usize).clamp(1, train.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut masked: Vec<usize> = index::sample(&mut rng, train.len(), count)
        .into_iter()
        .map(|i| train[i])
        .collect();
    masked.sort_unstable();

    let mut known = vec![false; g.num_nodes()];
    for &u in &train {
        known[u] = true;
    }
    for &u in &masked {
        known[u] = false;
    }
    let prior = LabelDistribution::seeded(g.labels(), &known, g.num_classes());
    let out = label_propagation(g, &prior, params.kappa, params.steps)?;
    let pred = out.predictions();
    let correct = masked.iter().filter(|&&u| pred[u] == g.labels()[u]).count();
    Ok(HcsReport {
        hcs: correct as f64 / masked.len() as f64,
        masked: masked.len(),
        correct,
    })
}
