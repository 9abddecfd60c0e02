use super::Graph;
use crate::error::{Error, Result};

/// Node homophily together with a flag for the degenerate edgeless case.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeHomophily {
    pub value: f64,
    /// Set when the graph has no edges; `value` is then 0.
    pub no_edges: bool,
}

/// Mean over non-isolated nodes of the fraction of neighbors sharing the
/// node's label. Isolated nodes are left out of the mean.
pub fn node_homophily(g: &Graph) -> NodeHomophily {
    let labels = g.labels();
    let mut total = 0.0;
    let mut counted = 0usize;
    for u in 0..g.num_nodes() {
        let nbrs = g.neighbors(u);
        if nbrs.is_empty() {
            continue;
        }
        let same = nbrs.iter().filter(|&&v| labels[v] == labels[u]).count();
        total += same as f64 / nbrs.len() as f64;
        counted += 1;
    }
    if counted == 0 {
        log::warn!("node homophily requested on a graph without edges; reporting 0");
        return NodeHomophily {
            value: 0.0,
            no_edges: true,
        };
    }
    NodeHomophily {
        value: total / counted as f64,
        no_edges: false,
    }
}

/// Fraction of undirected edges whose endpoints share a label.
pub fn edge_homophily(g: &Graph) -> Result<f64> {
    let m = g.num_edges();
    if m == 0 {
        return Err(Error::NoEdges);
    }
    let labels = g.labels();
    let same = g.edges().filter(|&(u, v)| labels[u] == labels[v]).count();
    Ok(same as f64 / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::plain;

    #[test]
    fn triangle_one_class() {
        let g = plain(3, &[(0, 1), (1, 2), (0, 2)], &[0, 0, 0]);
        assert_eq!(node_homophily(&g).value, 1.0);
        assert_eq!(edge_homophily(&g).unwrap(), 1.0);
    }

    #[test]
    fn single_mixed_edge() {
        let g = plain(2, &[(0, 1)], &[0, 1]);
        assert_eq!(node_homophily(&g).value, 0.0);
        assert_eq!(edge_homophily(&g).unwrap(), 0.0);
    }

    #[test]
    fn star_hand_count() {
        // center 0 (label 0), leaves labelled 0, 0, 1
        let g = plain(4, &[(0, 1), (0, 2), (0, 3)], &[0, 0, 0, 1]);
        let expected = (2.0 / 3.0 + 1.0 + 1.0 + 0.0) / 4.0;
        assert!((node_homophily(&g).value - expected).abs() < 1e-12);
        assert!((node_homophily(&g).value - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn isolated_nodes_are_excluded() {
        let g = plain(4, &[(0, 1)], &[0, 0, 1, 1]);
        assert_eq!(node_homophily(&g).value, 1.0);
    }

    #[test]
    fn bipartite_two_classes() {
        let g = plain(4, &[(0, 2), (0, 3), (1, 2), (1, 3)], &[0, 0, 1, 1]);
        assert_eq!(edge_homophily(&g).unwrap(), 0.0);
    }

    #[test]
    fn edgeless_graph() {
        let g = plain(3, &[], &[0, 1, 0]);
        let h = node_homophily(&g);
        assert!(h.no_edges);
        assert_eq!(h.value, 0.0);
        assert!(matches!(edge_homophily(&g), Err(Error::NoEdges)));
    }
}
