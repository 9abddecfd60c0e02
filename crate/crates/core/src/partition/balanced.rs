use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

fn bfs_distances(g: &Graph, source: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.num_nodes()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in g.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Seed nodes: the highest-degree node, then repeatedly the node farthest
/// (in hops, unreachable counting as infinite) from all chosen seeds. Ties go
/// to higher degree, then to a seeded random rank.
fn pick_seeds(g: &Graph, k: usize, rank: &[usize]) -> Vec<usize> {
    let n = g.num_nodes();
    let better =
        |a: usize, b: usize| (g.degree(a), std::cmp::Reverse(rank[a])) > (g.degree(b), std::cmp::Reverse(rank[b]));
    let mut first = 0;
    for u in 1..n {
        if better(u, first) {
            first = u;
        }
    }
    let mut seeds = vec![first];
    let mut nearest = bfs_distances(g, first);
    let mut chosen = vec![false; n];
    chosen[first] = true;
    while seeds.len() < k {
        let mut pick = usize::MAX;
        for u in (0..n).filter(|&u| !chosen[u]) {
            if pick == usize::MAX || nearest[u] > nearest[pick] || (nearest[u] == nearest[pick] && better(u, pick)) {
                pick = u;
            }
        }
        chosen[pick] = true;
        seeds.push(pick);
        for (d, e) in nearest.iter_mut().zip(bfs_distances(g, pick)) {
            *d = (*d).min(e);
        }
    }
    seeds
}

/// Splits nodes into `num_clients` near-equal parts by region growing.
///
/// Each region starts at a seed and the smallest region repeatedly claims the
/// next unassigned node from its FIFO frontier. A region whose frontier is
/// exhausted restarts from the lowest-id unassigned node, so disconnected
/// pieces are absorbed too. Part sizes differ by at most one.
pub fn balanced_partition(g: &Graph, num_clients: usize, seed: u64) -> Result<Vec<usize>> {
    let n = g.num_nodes();
    if num_clients == 0 || num_clients > n {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} nodes into {num_clients} parts"
        )));
    }
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let seeds = pick_seeds(g, num_clients, &rank);

    const UNASSIGNED: usize = usize::MAX;
    let mut part = vec![UNASSIGNED; n];
    let mut sizes = vec![0usize; num_clients];
    let mut frontier: Vec<VecDeque<usize>> = vec![VecDeque::new(); num_clients];
    let mut cursor = 0;
    let mut remaining = n;

    let claim = |r: usize, u: usize, part: &mut [usize], frontier: &mut [VecDeque<usize>]| {
        part[u] = r;
        frontier[r].extend(g.neighbors(u).iter().copied().filter(|&v| part[v] == UNASSIGNED));
    };
    for (r, &s) in seeds.iter().enumerate() {
        claim(r, s, &mut part, &mut frontier);
        sizes[r] += 1;
        remaining -= 1;
    }
    while remaining > 0 {
        let r = (0..num_clients)
            .min_by_key(|&r| (sizes[r], r))
            .expect("at least one part");
        let mut next = None;
        while let Some(u) = frontier[r].pop_front() {
            if part[u] == UNASSIGNED {
                next = Some(u);
                break;
            }
        }
        let u = match next {
            Some(u) => u,
            None => {
                while part[cursor] != UNASSIGNED {
                    cursor += 1;
                }
                cursor
            }
        };
        claim(r, u, &mut part, &mut frontier);
        sizes[r] += 1;
        remaining -= 1;
    }
    Ok(part)
}
