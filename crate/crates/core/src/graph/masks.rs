use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, Split};
use crate::error::{Error, Result};

/// Train/validation/test proportions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl MaskRatios {
    /// 20% / 40% / 40%, used for homophilous citation graphs.
    pub const HOMOPHILOUS: Self = Self {
        train: 0.2,
        val: 0.4,
        test: 0.4,
    };
    /// 60% / 20% / 20%, used for heterophilous graphs.
    pub const HETEROPHILOUS: Self = Self {
        train: 0.6,
        val: 0.2,
        test: 0.2,
    };

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument(format!("mask ratios {self:?} outside [0, 1]")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("mask ratios {self:?} do not sum to 1")));
        }
        if self.train <= 0.0 {
            return Err(Error::InvalidArgument("train ratio must be positive".into()));
        }
        Ok(())
    }
}

impl Default for MaskRatios {
    fn default() -> Self {
        Self::HOMOPHILOUS
    }
}

/// Per-class stratified random split. Every class gets at least one train
/// node; classes with fewer than three nodes fall back to one train node and
/// the remainder in test.
pub fn make_masks(g: &Graph, ratios: MaskRatios, seed: u64) -> Result<Graph> {
    ratios.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); g.num_classes()];
    for (u, &y) in g.labels().iter().enumerate() {
        by_class[y].push(u);
    }
    let mut split = vec![Split::None; g.num_nodes()];
    for (class, mut nodes) in by_class.into_iter().enumerate() {
        if nodes.is_empty() {
            continue;
        }
        nodes.shuffle(&mut rng);
        let c = nodes.len();
        let (n_train, n_val) = if c < 3 {
            log::warn!("class {class} has only {c} node(s); using a 1-train fallback split");
            (1, 0)
        } else {
            let n_train = ((c as f64 * ratios.train).round() as usize).clamp(1, c);
            let n_val = ((c as f64 * ratios.val).round() as usize).min(c - n_train);
            (n_train, n_val)
        };
        for (i, &u) in nodes.iter().enumerate() {
            split[u] = if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
        }
    }
    g.clone().with_split(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::plain;

    fn balanced(n: usize) -> Graph {
        let labels: Vec<usize> = (0..n).map(|u| u % 2).collect();
        plain(n, &[], &labels)
    }

    #[test]
    fn stratified_twenty_forty_forty() {
        let g = make_masks(&balanced(100), MaskRatios::HOMOPHILOUS, 3).unwrap();
        assert_eq!(g.count_in(Split::Train), 20);
        assert_eq!(g.count_in(Split::Val), 40);
        assert_eq!(g.count_in(Split::Test), 40);
        for class in 0..2 {
            let train = g
                .nodes_in(Split::Train)
                .into_iter()
                .filter(|&u| g.labels()[u] == class)
                .count();
            assert_eq!(train, 10);
        }
    }

    #[test]
    fn covers_every_node_once() {
        let g = make_masks(&balanced(37), MaskRatios::HETEROPHILOUS, 1).unwrap();
        let total: usize = [Split::Train, Split::Val, Split::Test]
            .iter()
            .map(|&s| g.count_in(s))
            .sum();
        assert_eq!(total, 37);
        assert_eq!(g.count_in(Split::None), 0);
    }

    #[test]
    fn same_seed_same_masks() {
        let a = make_masks(&balanced(60), MaskRatios::HOMOPHILOUS, 9).unwrap();
        let b = make_masks(&balanced(60), MaskRatios::HOMOPHILOUS, 9).unwrap();
        let c = make_masks(&balanced(60), MaskRatios::HOMOPHILOUS, 10).unwrap();
        assert_eq!(a.split(), b.split());
        assert_ne!(a.split(), c.split());
    }

    #[test]
    fn tiny_class_still_gets_a_train_node() {
        let g = plain(5, &[], &[0, 0, 0, 0, 1]);
        let g = make_masks(&g, MaskRatios::HOMOPHILOUS, 0).unwrap();
        assert_eq!(g.split()[4], Split::Train);
    }

    #[test]
    fn rejects_ratios_not_summing_to_one() {
        let r = MaskRatios {
            train: 0.5,
            val: 0.5,
            test: 0.5,
        };
        assert!(make_masks(&balanced(10), r, 0).is_err());
    }
}
