//! Brute-force counterparts of homophily, label propagation and FedAvg.

#![allow(dead_code)]

use std::collections::BTreeSet;

use fedgraph_core::fed::{
    fedavg_aggregate, fedavg_weights, local_train, run_federation, ClientWorker, FederationConfig,
};
use fedgraph_core::graph::{
    edge_homophily, label_propagation, make_masks, node_homophily, sbm_generate, Graph, LabelDistribution, MaskRatios,
    SbmParams,
};
use fedgraph_core::learn::{AdamConfig, ModelState};
use fedgraph_core::matrix::DenseMatrix;
use fedgraph_core::partition::{ClientSubgraph, FederatedTask, InjectionRecord, Strategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random simple graph kept alongside its plain edge set.
pub fn random_graph(rng: &mut ChaCha8Rng, max_n: usize) -> (Graph, BTreeSet<(usize, usize)>) {
    let n = rng.random_range(2..=max_n);
    let c = rng.random_range(1..=4);
    let p = rng.random_range(0.05..0.5);
    let mut set = BTreeSet::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_bool(p) {
                set.insert((u, v));
            }
        }
    }
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
    let edges: Vec<(usize, usize)> = set.iter().copied().collect();
    let g = Graph::from_edges(&edges, DenseMatrix::zeros(n, 1), labels, c).unwrap();
    (g, set)
}

/// Edge and node homophily by direct counting over the edge set.
pub fn counted_homophily(g: &Graph, set: &BTreeSet<(usize, usize)>) -> (f64, f64) {
    let y = g.labels();
    let same = set.iter().filter(|&&(u, v)| y[u] == y[v]).count();
    let edge = same as f64 / set.len() as f64;
    let n = g.num_nodes();
    let (mut total, mut counted) = (0.0, 0usize);
    for u in 0..n {
        let nbrs: Vec<usize> = (0..n).filter(|&v| set.contains(&(u.min(v), u.max(v)))).collect();
        if nbrs.is_empty() {
            continue;
        }
        let s = nbrs.iter().filter(|&&v| y[v] == y[u]).count();
        total += s as f64 / nbrs.len() as f64;
        counted += 1;
    }
    (edge, total / counted as f64)
}

/// Number of graphs, out of `count` random graphs with edges, where either
/// homophily differs from counting in any bit.
pub fn homophily_mismatches(count: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut checked, mut bad) = (0, 0);
    while checked < count {
        let (g, set) = random_graph(&mut rng, 40);
        if set.is_empty() {
            continue;
        }
        let (edge, node) = counted_homophily(&g, &set);
        if edge_homophily(&g).unwrap() != edge || node_homophily(&g).value != node {
            bad += 1;
        }
        checked += 1;
    }
    bad
}

/// `Y ← rownorm(κ·Y0 + (1−κ)·T·Y)` with `T = D̃^(−1/2) A D̃^(−1/2)`, dense.
pub fn dense_lp(g: &Graph, y0: &DenseMatrix, kappa: f64, steps: usize) -> DenseMatrix {
    let n = g.num_nodes();
    let t = DenseMatrix::from_fn(n, n, |i, j| {
        if g.has_edge(i, j) {
            1.0 / ((g.degree(i) as f64 + 1.0) * (g.degree(j) as f64 + 1.0)).sqrt()
        } else {
            0.0
        }
    });
    let mut y = y0.clone();
    for _ in 0..steps {
        let mut next = y0.scale(kappa);
        next.axpy(1.0 - kappa, &t.matmul(&y));
        let c = next.cols() as f64;
        for i in 0..n {
            let s: f64 = next.row(i).iter().sum();
            for v in next.row_mut(i) {
                *v = if s > 0.0 { *v / s } else { 1.0 / c };
            }
        }
        y = next;
    }
    y
}

/// Largest entry gap between label propagation and the dense oracle over
/// `count` random graphs of at most 50 nodes.
pub fn lp_max_gap(count: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let (g, _) = random_graph(&mut rng, 50);
        let known: Vec<bool> = (0..g.num_nodes()).map(|_| rng.random_bool(0.5)).collect();
        let init = LabelDistribution::seeded(g.labels(), &known, g.num_classes());
        let kappa = rng.random_range(0.0..=1.0);
        let steps = rng.random_range(0..8);
        let ours = label_propagation(&g, &init, kappa, steps).unwrap();
        worst = worst.max(ours.matrix().max_abs_diff(&dense_lp(&g, init.matrix(), kappa, steps)));
    }
    worst
}

pub fn random_models(rng: &mut ChaCha8Rng, count: usize) -> Vec<ModelState> {
    let dims = [rng.random_range(1..6), rng.random_range(1..6), rng.random_range(2..4)];
    (0..count)
        .map(|i| {
            let mut m = ModelState::gcn(&dims, 0.5, i as u64).unwrap();
            for p in m.params.iter_mut() {
                for v in p.value.data_mut() {
                    *v = rng.random_range(-3.0..3.0);
                }
            }
            m
        })
        .collect()
}

/// Outcome of comparing aggregation with the per-entry loop.
pub struct FedAvgCheck {
    pub sets: usize,
    /// Entries differing from the loop in any bit.
    pub mismatches: usize,
    /// Largest gap to the textbook `Σ wᵢ xᵢ`, which rounds differently.
    pub max_plain_gap: f64,
}

/// Aggregates `sets` random model sets and recomputes every entry with an
/// entry-outer loop: the mean written relative to the first model,
/// `x₀ + Σ wᵢ (xᵢ − x₀)`, summed in client order.
pub fn fedavg_check(sets: usize, seed: u64) -> FedAvgCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = FedAvgCheck {
        sets,
        mismatches: 0,
        max_plain_gap: 0.0,
    };
    for _ in 0..sets {
        let count = rng.random_range(2..7);
        let models = random_models(&mut rng, count);
        let sizes: Vec<usize> = (0..count).map(|_| rng.random_range(0..50)).collect();
        let pairs: Vec<(&ModelState, usize)> = models.iter().zip(sizes.iter().copied()).collect();
        let agg = fedavg_aggregate(&pairs).unwrap();

        let total: usize = sizes.iter().sum();
        let w: Vec<f64> = sizes
            .iter()
            .map(|&n| {
                if total == 0 {
                    1.0 / count as f64
                } else {
                    n as f64 / total as f64
                }
            })
            .collect();
        if w != fedavg_weights(&sizes) {
            out.mismatches += 1;
        }
        for k in 0..agg.params.len() {
            let value = &agg.params[k].value;
            for i in 0..value.rows() {
                for j in 0..value.cols() {
                    let x0 = models[0].params[k].value.get(i, j);
                    let mut expected = x0;
                    for (m, wi) in models.iter().zip(&w) {
                        expected += wi * (m.params[k].value.get(i, j) - x0);
                    }
                    if value.get(i, j) != expected {
                        out.mismatches += 1;
                    }
                    let plain: f64 = models
                        .iter()
                        .zip(&w)
                        .map(|(m, wi)| wi * m.params[k].value.get(i, j))
                        .sum();
                    out.max_plain_gap = out.max_plain_gap.max((value.get(i, j) - plain).abs());
                }
            }
        }
    }
    out
}

/// Whether a one-client federation of `rounds × epochs` ends bit-identical
/// to training the same client alone for as many steps.
pub fn single_client_matches_standalone(rounds: usize, epochs: usize) -> bool {
    let g = sbm_generate(&SbmParams::new(60, 3, 0.3, 0.03, 5), 2).unwrap();
    let g = make_masks(&g, MaskRatios::HOMOPHILOUS, 2).unwrap();
    let n = g.num_nodes();
    let task = FederatedTask {
        strategy: Strategy::Community,
        seed: 0,
        num_global_nodes: n,
        p_s: None,
        ratio: None,
        clients: vec![ClientSubgraph {
            client_id: 0,
            graph: g.clone(),
            global_ids: (0..n).collect(),
        }],
        injection_log: vec![InjectionRecord::none()],
    };
    let cfg = FederationConfig {
        rounds,
        local_epochs: epochs,
        hidden: 8,
        seed: 5,
        ..Default::default()
    };
    let fed = run_federation(&task, &cfg).unwrap();

    let init = ModelState::gcn(&[g.num_features(), 8, 3], cfg.norm_exponent, cfg.seed).unwrap();
    let mut solo = ClientWorker::new(0, g, init, AdamConfig::default()).unwrap();
    local_train(&mut solo, rounds * epochs).unwrap();
    fed.extractor
        .params
        .iter()
        .zip(&solo.model.params)
        .all(|(a, b)| a.value == b.value)
}
