//! Invariants checked over generated inputs.

use std::collections::BTreeSet;

use fedgraph_core::adafgl::{
    compute_hcs, init_model, optimize_topology, prepare_inputs, step2_forward, HcsParams, Step2Hyper,
};
use fedgraph_core::fed::fedavg_weights;
use fedgraph_core::graph::{make_masks, sbm_generate, Graph, MaskRatios, SbmParams, Split};
use fedgraph_core::learn::ModelState;
use fedgraph_core::matrix::DenseMatrix;
use fedgraph_core::partition::{
    apply_sparsity, balanced_partition, community_split, inject_edges, louvain, structure_noniid_split, ClientSubgraph,
    FederatedTask, InjectionMode, SparsityConfig,
};
use proptest::prelude::*;

fn sbm(n: usize, classes: usize, p_in: f64, p_out: f64, seed: u64) -> Graph {
    let g = sbm_generate(&SbmParams::new(n, classes, p_in, p_out, 4), seed).unwrap();
    make_masks(&g, MaskRatios::HOMOPHILOUS, seed).unwrap()
}

fn assert_rows_stochastic(m: &DenseMatrix) {
    for i in 0..m.rows() {
        let s: f64 = m.row(i).iter().sum();
        assert!((s - 1.0).abs() <= 1e-9, "row {i} sums to {s}");
        assert!(m.row(i).iter().all(|&v| v >= 0.0));
    }
}

/// Clients partition a subset of the global nodes, and every client edge
/// that was not injected is an edge of the global graph.
fn check_task(g: &Graph, task: &FederatedTask) {
    task.validate().unwrap();
    let mut seen = BTreeSet::new();
    for (c, inj) in task.clients.iter().zip(&task.injection_log) {
        for &id in &c.global_ids {
            assert!(seen.insert(id));
        }
        let mut original = 0;
        for (u, v) in c.graph.edges() {
            assert_ne!(u, v);
            if g.has_edge(c.global_ids[u], c.global_ids[v]) {
                original += 1;
            }
        }
        assert_eq!(c.graph.num_edges(), original + inj.edges_added);
        for (u, &gid) in c.global_ids.iter().enumerate() {
            assert_eq!(c.graph.labels()[u], g.labels()[gid]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn balanced_parts_cover_and_balance(n in 4usize..80, k in 2usize..6, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let g = sbm(n, 2, 0.2, 0.05, seed);
        let parts = balanced_partition(&g, k, seed).unwrap();
        prop_assert_eq!(parts.len(), n);
        let mut sizes = vec![0usize; k];
        for &p in &parts {
            prop_assert!(p < k);
            sizes[p] += 1;
        }
        let (lo, hi) = (*sizes.iter().min().unwrap(), *sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
    }

    #[test]
    fn splits_are_disjoint_and_deterministic(seed in any::<u64>(), p_s in 0.0f64..=1.0, ratio in 0.0f64..1.0) {
        let g = sbm(90, 3, 0.25, 0.02, seed);
        let a = structure_noniid_split(&g, 3, p_s, ratio, seed).unwrap();
        check_task(&g, &a);
        prop_assert_eq!(a.clients.iter().map(|c| c.graph.num_nodes()).sum::<usize>(), 90);
        prop_assert_eq!(&a, &structure_noniid_split(&g, 3, p_s, ratio, seed).unwrap());
        if let Ok(b) = community_split(&g, 2, seed) {
            check_task(&g, &b);
            for c in &b.clients {
                prop_assert_eq!(c.graph.num_edges(), g.induced_subgraph(&c.global_ids).unwrap().num_edges());
            }
            prop_assert_eq!(&b, &community_split(&g, 2, seed).unwrap());
        }
    }

    #[test]
    fn injection_adds_simple_edges(seed in any::<u64>(), ratio in 0.0f64..2.0, homo in any::<bool>()) {
        let g = sbm(40, 2, 0.15, 0.05, seed);
        let sub = ClientSubgraph { client_id: 0, graph: g.clone(), global_ids: (0..40).collect() };
        let mode = if homo { InjectionMode::Homo } else { InjectionMode::Hetero };
        let (out, rec) = inject_edges(&sub, mode, ratio, seed).unwrap();
        let target = (ratio * g.num_edges() as f64).round() as usize;
        prop_assert_eq!(rec.edges_added + rec.shortfall, target);
        prop_assert_eq!(out.graph.num_edges(), g.num_edges() + rec.edges_added);
        let mut set = BTreeSet::new();
        for (u, v) in out.graph.edges() {
            prop_assert!(u < v);
            prop_assert!(set.insert((u, v)));
            if !g.has_edge(u, v) {
                let same = g.labels()[u] == g.labels()[v];
                prop_assert_eq!(same, homo);
            }
        }
    }

    #[test]
    fn louvain_modularity_never_decreases(seed in any::<u64>()) {
        let g = sbm(60, 3, 0.3, 0.03, seed);
        let r = louvain(&g, seed);
        for w in r.modularity_trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        prop_assert_eq!(r.assignment.iter().copied().collect::<BTreeSet<_>>().len(), r.count);
    }

    #[test]
    fn fedavg_weights_sum_to_one(sizes in proptest::collection::vec(0usize..1000, 1..20)) {
        let w = fedavg_weights(&sizes);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(w.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn hcs_is_a_probability(seed in any::<u64>(), p_out in 0.0f64..0.4, kappa in 0.0f64..=1.0) {
        let g = sbm(50, 3, 0.2, p_out, seed);
        let params = HcsParams { kappa, ..HcsParams::default() };
        let h = compute_hcs(&g, params, seed).unwrap().hcs;
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert_eq!(h, compute_hcs(&g, params, seed).unwrap().hcs);
    }

    #[test]
    fn step2_predictions_are_distributions(seed in any::<u64>(), alpha in 0.0f64..=1.0, beta in 0.0f64..=1.0) {
        let g = sbm(30, 3, 0.3, 0.1, seed);
        let extractor = ModelState::gcn(&[4, 8, 3], 0.5, seed).unwrap();
        let hyper = Step2Hyper { alpha, beta, hidden: 8, ..Step2Hyper::default() };

        let topo = optimize_topology(&g, &extractor, alpha, 100).unwrap();
        let p = topo.propagation.matrix();
        for i in 0..p.rows() {
            prop_assert_eq!(p.get(i, i), 0.0);
            for j in 0..p.cols() {
                prop_assert!(p.get(i, j) >= 0.0);
                prop_assert!((p.get(i, j) - p.get(j, i)).abs() <= 1e-9);
            }
        }
        assert_rows_stochastic(&topo.extractor_probs);

        let (inp, _) = prepare_inputs(&g, &extractor, &hyper, seed).unwrap();
        let model = init_model(&inp, &hyper, seed).unwrap();
        let f = step2_forward(&inp, &model).unwrap();
        assert_rows_stochastic(&f.y);
        assert_rows_stochastic(&f.y_ho);
        assert_rows_stochastic(&f.hetero.y_he);
    }

    #[test]
    fn sparsity_keeps_structure_valid(seed in any::<u64>(), fm in 0.0f64..=1.0, ed in 0.0f64..=1.0) {
        let g = sbm(60, 2, 0.2, 0.02, seed);
        let task = community_split(&g, 2, seed).unwrap_or_else(|_| structure_noniid_split(&g, 2, 0.5, 0.5, seed).unwrap());
        let cfg = SparsityConfig { feature_missing: fm, edge_drop: ed, label_rate: None };
        let out = apply_sparsity(&task, &cfg, seed).unwrap();
        out.validate().unwrap();
        for (a, b) in task.clients.iter().zip(&out.clients) {
            prop_assert_eq!(a.graph.num_nodes(), b.graph.num_nodes());
            prop_assert!(b.graph.num_edges() <= a.graph.num_edges());
            prop_assert_eq!(b.graph.count_in(Split::Train), a.graph.count_in(Split::Train));
            for (u, v) in b.graph.edges() {
                prop_assert!(a.graph.has_edge(u, v));
            }
        }
    }
}
