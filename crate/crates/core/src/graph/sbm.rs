use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Graph;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Parameters of a planted-partition stochastic block model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SbmParams {
    pub nodes: usize,
    pub classes: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Standard deviation of the per-class feature means.
    pub feature_signal: f64,
    /// Standard deviation of the per-node noise around the class mean.
    pub feature_noise: f64,
}

impl SbmParams {
    pub fn new(nodes: usize, classes: usize, p_in: f64, p_out: f64, feature_dim: usize) -> Self {
        Self {
            nodes,
            classes,
            p_in,
            p_out,
            feature_dim,
            feature_signal: 1.0,
            feature_noise: 1.0,
        }
    }

    /// Edge probabilities giving an expected edge homophily of `h` and an
    /// expected `avg_degree`, for balanced blocks.
    pub fn for_homophily(nodes: usize, classes: usize, h: f64, avg_degree: f64, feature_dim: usize) -> Self {
        let per_class = nodes as f64 / classes as f64;
        let intra_pairs = classes as f64 * per_class * (per_class - 1.0) / 2.0;
        let total_pairs = nodes as f64 * (nodes as f64 - 1.0) / 2.0;
        let inter_pairs = total_pairs - intra_pairs;
        let edges = avg_degree * nodes as f64 / 2.0;
        let p_in = (h * edges / intra_pairs).min(1.0);
        let p_out = ((1.0 - h) * edges / inter_pairs).min(1.0);
        Self::new(nodes, classes, p_in, p_out, feature_dim)
    }
}

/// Samples a graph with contiguous balanced class blocks. Intra-class pairs
/// connect with `p_in`, inter-class pairs with `p_out`; features are
/// Gaussian around a random per-class mean. Masks are left unset.
pub fn sbm_generate(params: &SbmParams, seed: u64) -> Result<Graph> {
    let SbmParams {
        nodes: n,
        classes,
        p_in,
        p_out,
        feature_dim,
        feature_signal,
        feature_noise,
    } = *params;
    if classes == 0 || n < classes {
        return Err(Error::InvalidArgument(format!(
            "sbm needs at least one node per class ({n} nodes, {classes} classes)"
        )));
    }
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|u| u * classes / n).collect();

    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if p > 0.0 && rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }

    let means = DenseMatrix::from_fn(classes, feature_dim, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        feature_signal * z
    });
    let features = DenseMatrix::from_fn(n, feature_dim, |u, j| {
        let noise: f64 = StandardNormal.sample(&mut rng);
        means.get(labels[u], j) + feature_noise * noise
    });
    Graph::from_edges(&edges, features, labels, classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::edge_homophily;

    #[test]
    fn pure_intra_is_fully_homophilous() {
        let g = sbm_generate(&SbmParams::new(40, 2, 1.0, 0.0, 3), 1).unwrap();
        assert_eq!(edge_homophily(&g).unwrap(), 1.0);
        assert_eq!(g.num_edges(), 2 * 20 * 19 / 2);
    }

    #[test]
    fn pure_inter_is_fully_heterophilous() {
        let g = sbm_generate(&SbmParams::new(40, 2, 0.0, 1.0, 3), 1).unwrap();
        assert_eq!(edge_homophily(&g).unwrap(), 0.0);
        assert_eq!(g.num_edges(), 20 * 20);
    }

    #[test]
    fn realised_homophily_matches_counting_oracle() {
        let params = SbmParams::new(400, 2, 0.1, 0.01, 4);
        let g = sbm_generate(&params, 7).unwrap();
        let labels = g.labels();
        let mut same = 0usize;
        let mut total = 0usize;
        for u in 0..g.num_nodes() {
            for &v in g.neighbors(u) {
                if u < v {
                    total += 1;
                    same += usize::from(labels[u] == labels[v]);
                }
            }
        }
        let counted = same as f64 / total as f64;
        assert_eq!(edge_homophily(&g).unwrap(), counted);
        // Expectation: 0.1·2·C(200,2) / (0.1·2·C(200,2) + 0.01·200²)
        let intra = 0.1 * 2.0 * 19900.0;
        let inter = 0.01 * 40000.0;
        assert!((counted - intra / (intra + inter)).abs() < 0.05);
    }

    #[test]
    fn reproducible_for_a_seed() {
        let p = SbmParams::new(50, 3, 0.2, 0.05, 5);
        assert_eq!(sbm_generate(&p, 11).unwrap(), sbm_generate(&p, 11).unwrap());
        assert_ne!(sbm_generate(&p, 11).unwrap(), sbm_generate(&p, 12).unwrap());
    }

    #[test]
    fn rejects_more_classes_than_nodes() {
        assert!(sbm_generate(&SbmParams::new(2, 3, 0.5, 0.5, 1), 0).is_err());
    }

    #[test]
    fn homophily_targeting_is_close() {
        let g = sbm_generate(&SbmParams::for_homophily(400, 2, 0.3, 10.0, 2), 5).unwrap();
        assert!((edge_homophily(&g).unwrap() - 0.3).abs() < 0.05);
    }
}
