use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;

/// Gains below this end the outer loop.
const MIN_GAIN: f64 = 1e-7;

/// Community labels plus the modularity reached after each outer pass.
#[derive(Clone, Debug, PartialEq)]
pub struct LouvainResult {
    /// Community of each node, numbered `0..count` in order of first appearance.
    pub assignment: Vec<usize>,
    pub count: usize,
    pub modularity_trace: Vec<f64>,
}

/// Weighted symmetric graph used between coarsening levels. `adj[i]` holds
/// `(j, w)` pairs; a self-loop of weight `w` contributes `w` to the degree.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
    total: f64,
}

impl Level {
    fn from_graph(g: &Graph) -> Self {
        let adj: Vec<Vec<(usize, f64)>> = (0..g.num_nodes())
            .map(|u| g.neighbors(u).iter().map(|&v| (v, 1.0)).collect())
            .collect();
        Self::new(adj)
    }

    fn new(adj: Vec<Vec<(usize, f64)>>) -> Self {
        let degree: Vec<f64> = adj.iter().map(|r| r.iter().map(|e| e.1).sum()).collect();
        let total = degree.iter().sum();
        Self { adj, degree, total }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn modularity(&self, comm: &[usize]) -> f64 {
        if self.total == 0.0 {
            return 0.0;
        }
        let k = comm.iter().max().map_or(0, |m| m + 1);
        let mut inside = vec![0.0; k];
        let mut tot = vec![0.0; k];
        for (i, row) in self.adj.iter().enumerate() {
            tot[comm[i]] += self.degree[i];
            for &(j, w) in row {
                if comm[j] == comm[i] {
                    inside[comm[i]] += w;
                }
            }
        }
        let m2 = self.total;
        inside.iter().zip(&tot).map(|(a, t)| a / m2 - (t / m2).powi(2)).sum()
    }

    /// Greedy local moves until no node changes community. Returns whether
    /// anything moved.
    fn local_moves(&self, comm: &mut [usize], rng: &mut ChaCha8Rng) -> bool {
        let n = self.len();
        let m2 = self.total;
        let mut tot = vec![0.0; n];
        for i in 0..n {
            tot[comm[i]] += self.degree[i];
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut weight_to = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut moved_any = false;
        loop {
            let mut moved = false;
            for &i in &order {
                let ki = self.degree[i];
                let own = comm[i];
                for &(j, w) in &self.adj[i] {
                    if j == i {
                        continue;
                    }
                    let c = comm[j];
                    if weight_to[c] == 0.0 {
                        touched.push(c);
                    }
                    weight_to[c] += w;
                }
                tot[own] -= ki;
                let gain = |c: usize, w_in: f64| w_in - tot[c] * ki / m2;
                let mut best = own;
                let mut best_gain = gain(own, weight_to[own]);
                for &c in &touched {
                    let g = gain(c, weight_to[c]);
                    if g > best_gain + 1e-12 {
                        best = c;
                        best_gain = g;
                    }
                }
                tot[best] += ki;
                if best != own {
                    comm[i] = best;
                    moved = true;
                }
                for &c in &touched {
                    weight_to[c] = 0.0;
                }
                weight_to[own] = 0.0;
                touched.clear();
            }
            if !moved {
                break;
            }
            moved_any = true;
        }
        moved_any
    }

    fn coarsen(&self, comm: &[usize], k: usize) -> Level {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
        let mut acc = vec![0.0; k];
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &c) in comm.iter().enumerate() {
            members[c].push(i);
        }
        for (c, nodes) in members.iter().enumerate() {
            let mut touched = Vec::new();
            for &i in nodes {
                for &(j, w) in &self.adj[i] {
                    let d = comm[j];
                    if acc[d] == 0.0 {
                        touched.push(d);
                    }
                    acc[d] += w;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            rows[c] = touched.iter().map(|&d| (d, acc[d])).collect();
            for &d in &touched {
                acc[d] = 0.0;
            }
        }
        Level::new(rows)
    }
}

/// Renumbers labels to `0..k` by first appearance.
fn compact(labels: &mut [usize]) -> usize {
    let mut map = vec![usize::MAX; labels.len().max(1)];
    let mut next = 0;
    for l in labels.iter_mut() {
        if map[*l] == usize::MAX {
            map[*l] = next;
            next += 1;
        }
        *l = map[*l];
    }
    next
}

/// Modularity of a node assignment on an unweighted graph; 0 without edges.
pub fn modularity(g: &Graph, assignment: &[usize]) -> f64 {
    Level::from_graph(g).modularity(assignment)
}

/// Multi-level Louvain: local moves in a seeded random order, then
/// coarsening, until a level improves modularity by less than `1e-7`.
pub fn louvain(g: &Graph, seed: u64) -> LouvainResult {
    let n = g.num_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment: Vec<usize> = (0..n).collect();
    let mut level = Level::from_graph(g);
    let mut trace = vec![level.modularity(&assignment)];
    if level.total == 0.0 {
        return LouvainResult {
            count: n,
            assignment,
            modularity_trace: trace,
        };
    }
    loop {
        let mut comm: Vec<usize> = (0..level.len()).collect();
        if !level.local_moves(&mut comm, &mut rng) {
            break;
        }
        let k = compact(&mut comm);
        for a in assignment.iter_mut() {
            *a = comm[*a];
        }
        let q = level.modularity(&comm);
        let gain = q - trace.last().copied().unwrap_or(0.0);
        trace.push(q);
        if gain < MIN_GAIN {
            break;
        }
        level = level.coarsen(&comm, k);
    }
    let count = compact(&mut assignment);
    LouvainResult {
        assignment,
        count,
        modularity_trace: trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::plain;

    fn two_cliques() -> Graph {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    edges.push((base + i, base + j));
                }
            }
        }
        edges.push((3, 4));
        plain(8, &edges, &[0; 8])
    }

    /// Best modularity over every partition of 8 nodes into at most 3 blocks.
    fn brute_force_best(g: &Graph) -> f64 {
        let mut best = f64::MIN;
        let mut labels = vec![0usize; 8];
        let total = 3usize.pow(8);
        for code in 0..total {
            let mut c = code;
            for l in labels.iter_mut() {
                *l = c % 3;
                c /= 3;
            }
            best = best.max(modularity(g, &labels));
        }
        best
    }

    #[test]
    fn two_cliques_split_in_two() {
        let g = two_cliques();
        let r = louvain(&g, 0);
        assert_eq!(r.count, 2);
        assert!(r.assignment[..4].iter().all(|&c| c == r.assignment[0]));
        assert!(r.assignment[4..].iter().all(|&c| c == r.assignment[4]));
        let q = modularity(&g, &r.assignment);
        assert!((q - brute_force_best(&g)).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_is_one_community() {
        let mut edges = Vec::new();
        for i in 0..6 {
            for j in (i + 1)..6 {
                edges.push((i, j));
            }
        }
        let r = louvain(&plain(6, &edges, &[0; 6]), 3);
        assert_eq!(r.count, 1);
    }

    #[test]
    fn edgeless_graph_is_all_singletons() {
        let r = louvain(&plain(5, &[], &[0; 5]), 1);
        assert_eq!(r.count, 5);
        assert_eq!(r.assignment, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn modularity_of_known_partition() {
        // two triangles joined by one edge: m = 7
        let g = plain(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)], &[0; 6]);
        let q = modularity(&g, &[0, 0, 0, 1, 1, 1]);
        // each side: 3 internal edges, degree sum 7
        let expected = 2.0 * (3.0 / 7.0 - (7.0f64 / 14.0).powi(2));
        assert!((q - expected).abs() < 1e-12);
    }
}
