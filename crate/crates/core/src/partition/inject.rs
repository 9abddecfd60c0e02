use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClientSubgraph;
use crate::error::{Error, Result};

/// Above this many nodes candidate pairs are drawn by rejection instead of
/// being enumerated.
const ENUMERATE_LIMIT: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionMode {
    /// Same-label pairs.
    Homo,
    /// Different-label pairs.
    Hetero,
    None,
}

impl InjectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InjectionMode::Homo => "homo",
            InjectionMode::Hetero => "hetero",
            InjectionMode::None => "none",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub mode: InjectionMode,
    pub edges_added: usize,
    /// Requested edges that could not be placed.
    #[serde(default)]
    pub shortfall: usize,
}

impl InjectionRecord {
    pub fn none() -> Self {
        Self {
            mode: InjectionMode::None,
            edges_added: 0,
            shortfall: 0,
        }
    }
}

/// Adds `round(ratio · m)` new edges between non-adjacent pairs drawn
/// uniformly without replacement from the same-label (homo) or
/// different-label (hetero) candidates. Labels of every node are used.
pub fn inject_edges(
    sub: &ClientSubgraph,
    mode: InjectionMode,
    ratio: f64,
    seed: u64,
) -> Result<(ClientSubgraph, InjectionRecord)> {
    if ratio < 0.0 || !ratio.is_finite() {
        return Err(Error::InvalidArgument(format!("injection ratio {ratio} is negative")));
    }
    let g = &sub.graph;
    let target = (ratio * g.num_edges() as f64).round() as usize;
    if mode == InjectionMode::None || target == 0 {
        return Ok((
            sub.clone(),
            InjectionRecord {
                mode,
                edges_added: 0,
                shortfall: 0,
            },
        ));
    }
    let labels = g.labels();
    let n = g.num_nodes();
    let wanted = |u: usize, v: usize| match mode {
        InjectionMode::Homo => labels[u] == labels[v],
        _ => labels[u] != labels[v],
    };
    let eligible = |u: usize, v: usize| u != v && wanted(u, v) && !g.has_edge(u, v);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let added: Vec<(usize, usize)> = if n <= ENUMERATE_LIMIT {
        let mut pool = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if eligible(u, v) {
                    pool.push((u, v));
                }
            }
        }
        if pool.len() <= target {
            pool
        } else {
            let mut picked = index::sample(&mut rng, pool.len(), target).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| pool[i]).collect()
        }
    } else {
        // pool size by counting, then rejection sampling
        let mut per_class = vec![0usize; g.num_classes()];
        for &y in labels {
            per_class[y] += 1;
        }
        let same_pairs: usize = per_class.iter().map(|&c| c * c.saturating_sub(1) / 2).sum();
        let same_edges = g.edges().filter(|&(u, v)| labels[u] == labels[v]).count();
        let pool = match mode {
            InjectionMode::Homo => same_pairs - same_edges,
            _ => n * (n - 1) / 2 - same_pairs - (g.num_edges() - same_edges),
        };
        let take = pool.min(target);
        let mut chosen = HashSet::with_capacity(take);
        let mut out = Vec::with_capacity(take);
        while out.len() < take {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            let pair = (u.min(v), u.max(v));
            if eligible(u, v) && chosen.insert(pair) {
                out.push(pair);
            }
        }
        out
    };

    let shortfall = target - added.len();
    if shortfall > 0 {
        log::warn!(
            "client {}: {} injection placed {} of {} edges (candidate pool exhausted)",
            sub.client_id,
            mode.as_str(),
            added.len(),
            target
        );
    }
    let mut edges = g.edge_list();
    edges.extend_from_slice(&added);
    let graph = g.with_edges(&edges)?;
    Ok((
        ClientSubgraph {
            client_id: sub.client_id,
            graph,
            global_ids: sub.global_ids.clone(),
        },
        InjectionRecord {
            mode,
            edges_added: added.len(),
            shortfall,
        },
    ))
}
