//! Turning one global graph into a federated task: Louvain community splits,
//! balanced partitions with homophilous or heterophilous edge injection, and
//! sparsity perturbations.

mod balanced;
mod inject;
mod louvain;
mod sparsity;

pub use balanced::balanced_partition;
pub use inject::{inject_edges, InjectionMode, InjectionRecord};
pub use louvain::{louvain, modularity, LouvainResult};
pub use sparsity::{apply_sparsity, SparsityConfig};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Split};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Community,
    StructureNoniid,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Community => "community",
            Strategy::StructureNoniid => "structure-noniid",
        }
    }
}

/// One client's private subgraph, re-indexed locally.
#[derive(Clone, Debug, PartialEq)]
pub struct ClientSubgraph {
    pub client_id: usize,
    pub graph: Graph,
    /// `global_ids[local] = global`.
    pub global_ids: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FederatedTask {
    pub strategy: Strategy,
    pub seed: u64,
    pub num_global_nodes: usize,
    /// Bernoulli probability of homophilous injection, structure splits only.
    pub p_s: Option<f64>,
    /// Injection ratio, structure splits only.
    pub ratio: Option<f64>,
    pub clients: Vec<ClientSubgraph>,
    /// One record per client.
    pub injection_log: Vec<InjectionRecord>,
}

impl FederatedTask {
    pub fn num_clients(&self) -> usize {
        self.clients.len()
    }

    /// Checks disjointness, coverage bounds and log length.
    pub fn validate(&self) -> Result<()> {
        if self.injection_log.len() != self.clients.len() {
            return Err(Error::InvalidArgument("injection log length mismatch".into()));
        }
        let mut seen = vec![false; self.num_global_nodes];
        for (i, c) in self.clients.iter().enumerate() {
            if c.client_id != i {
                return Err(Error::InvalidArgument(format!("client {i} has id {}", c.client_id)));
            }
            if c.global_ids.len() != c.graph.num_nodes() {
                return Err(Error::InvalidArgument(format!("client {i} id map length mismatch")));
            }
            for &g in &c.global_ids {
                if g >= seen.len() || seen[g] {
                    return Err(Error::InvalidArgument(format!(
                        "global node {g} missing from range or assigned twice"
                    )));
                }
                seen[g] = true;
            }
        }
        Ok(())
    }
}

/// Converts the lowest-id validation node (else test node) of every class
/// that is present but has no train node. Returns how many nodes changed.
pub fn ensure_train_coverage(g: Graph) -> Result<(Graph, usize)> {
    let c = g.num_classes();
    let mut has_train = vec![false; c];
    let mut first_val = vec![None; c];
    let mut first_test = vec![None; c];
    for (u, (&y, &s)) in g.labels().iter().zip(g.split()).enumerate() {
        match s {
            Split::Train => has_train[y] = true,
            Split::Val => {
                first_val[y].get_or_insert(u);
            }
            Split::Test => {
                first_test[y].get_or_insert(u);
            }
            Split::None => {}
        }
    }
    let mut split = g.split().to_vec();
    let mut changed = 0;
    for y in 0..c {
        if has_train[y] {
            continue;
        }
        if let Some(u) = first_val[y].or(first_test[y]) {
            split[u] = Split::Train;
            changed += 1;
        }
    }
    if changed == 0 {
        return Ok((g, 0));
    }
    Ok((g.with_split(split)?, changed))
}

fn build_clients(g: &Graph, part: &[usize], num_clients: usize) -> Result<Vec<ClientSubgraph>> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_clients];
    for (u, &p) in part.iter().enumerate() {
        members[p].push(u);
    }
    members
        .into_iter()
        .enumerate()
        .map(|(client_id, global_ids)| {
            let sub = g.induced_subgraph(&global_ids)?;
            let (graph, repaired) = ensure_train_coverage(sub)?;
            if repaired > 0 {
                log::info!("client {client_id}: promoted {repaired} node(s) to train for class coverage");
            }
            Ok(ClientSubgraph {
                client_id,
                graph,
                global_ids,
            })
        })
        .collect()
}

/// Greedy assignment of communities (largest first) to the client holding
/// the fewest nodes so far, ties to the lowest client id.
pub fn assign_communities(sizes: &[usize], num_clients: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(sizes[c]), c));
    let mut load = vec![0usize; num_clients];
    let mut owner = vec![0; sizes.len()];
    for c in order {
        let client = (0..num_clients).min_by_key(|&k| (load[k], k)).expect("clients");
        owner[c] = client;
        load[client] += sizes[c];
    }
    owner
}

/// Louvain communities distributed over clients; cross-client edges are dropped.
pub fn community_split(g: &Graph, num_clients: usize, seed: u64) -> Result<FederatedTask> {
    if num_clients < 2 {
        return Err(Error::InvalidArgument("a split needs at least 2 clients".into()));
    }
    let communities = louvain(g, seed);
    if communities.count < num_clients {
        return Err(Error::TooFewCommunities {
            count: num_clients,
            communities: communities.count,
        });
    }
    let mut sizes = vec![0; communities.count];
    for &c in &communities.assignment {
        sizes[c] += 1;
    }
    let owner = assign_communities(&sizes, num_clients);
    let part: Vec<usize> = communities.assignment.iter().map(|&c| owner[c]).collect();
    let clients = build_clients(g, &part, num_clients)?;
    Ok(FederatedTask {
        strategy: Strategy::Community,
        seed,
        num_global_nodes: g.num_nodes(),
        p_s: None,
        ratio: None,
        injection_log: vec![InjectionRecord::none(); num_clients],
        clients,
    })
}

/// Balanced partition, then per client a `p_s`-biased coin picks homophilous
/// or heterophilous injection of `round(ratio · m_i)` edges.
pub fn structure_noniid_split(g: &Graph, num_clients: usize, p_s: f64, ratio: f64, seed: u64) -> Result<FederatedTask> {
    if num_clients < 2 {
        return Err(Error::InvalidArgument("a split needs at least 2 clients".into()));
    }
    if !(0.0..=1.0).contains(&p_s) || ratio < 0.0 || !ratio.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "p_s {p_s} must be in [0, 1] and ratio {ratio} non-negative"
        )));
    }
    let part = balanced_partition(g, num_clients, seed)?;
    let base = build_clients(g, &part, num_clients)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a7e);
    let mut clients = Vec::with_capacity(num_clients);
    let mut log = Vec::with_capacity(num_clients);
    for sub in base {
        let mode = if rng.random::<f64>() < p_s {
            InjectionMode::Homo
        } else {
            InjectionMode::Hetero
        };
        let inject_seed: u64 = rng.random();
        let (sub, record) = inject_edges(&sub, mode, ratio, inject_seed)?;
        clients.push(sub);
        log.push(record);
    }
    Ok(FederatedTask {
        strategy: Strategy::StructureNoniid,
        seed,
        num_global_nodes: g.num_nodes(),
        p_s: Some(p_s),
        ratio: Some(ratio),
        clients,
        injection_log: log,
    })
}
