//! Small end-to-end runs on synthetic and vendored data.

use std::path::Path;

use fedgraph_core::adafgl::{step2_train, Step2Hyper};
use fedgraph_core::fed::{run_federation, FederationConfig};
use fedgraph_core::graph::{edge_homophily, make_masks, sbm_generate, Graph, MaskRatios, SbmParams, Split};
use fedgraph_core::io::load_dataset;
use fedgraph_core::learn::{accuracy, ModelState};
use fedgraph_core::partition::{
    community_split, structure_noniid_split, ClientSubgraph, FederatedTask, InjectionRecord, Strategy,
};

fn two_client_task(p_in: f64, p_out: f64) -> FederatedTask {
    let clients: Vec<ClientSubgraph> = (0..2)
        .map(|i| {
            let mut params = SbmParams::new(80, 2, p_in, p_out, 6);
            params.feature_noise = 0.5;
            let g = sbm_generate(&params, 40 + i as u64).unwrap();
            let g = make_masks(&g, MaskRatios::HOMOPHILOUS, i as u64).unwrap();
            ClientSubgraph {
                client_id: i,
                graph: g,
                global_ids: (i * 80..(i + 1) * 80).collect(),
            }
        })
        .collect();
    FederatedTask {
        strategy: Strategy::Community,
        seed: 0,
        num_global_nodes: 160,
        p_s: None,
        ratio: None,
        clients,
        injection_log: vec![InjectionRecord::none(); 2],
    }
}

#[test]
fn separable_sbm_reaches_high_train_accuracy() {
    let task = two_client_task(0.2, 0.01);
    let cfg = FederationConfig {
        rounds: 20,
        local_epochs: 5,
        hidden: 16,
        seed: 1,
        ..Default::default()
    };
    let out = run_federation(&task, &cfg).unwrap();
    for w in &out.workers {
        let train = w.graph.nodes_in(Split::Train);
        let acc = accuracy(&w.logits(&out.extractor).unwrap(), w.graph.labels(), &train).unwrap();
        assert!(acc >= 0.95, "client {} train accuracy {acc}", w.client_id);
    }
    assert_eq!(out.reports.len(), 20);
    let again = run_federation(&task, &cfg).unwrap();
    assert_eq!(again.reports, out.reports);
}

#[test]
fn zero_epochs_return_the_initial_model() {
    let task = two_client_task(0.2, 0.01);
    let cfg = FederationConfig {
        rounds: 1,
        local_epochs: 0,
        hidden: 16,
        seed: 3,
        ..Default::default()
    };
    let out = run_federation(&task, &cfg).unwrap();
    let init = ModelState::gcn(&[6, 16, 2], cfg.norm_exponent, 3).unwrap();
    assert_eq!(out.extractor, init);
}

#[test]
fn degenerate_step2_config_runs() {
    let task = two_client_task(0.1, 0.05);
    let cfg = FederationConfig {
        rounds: 3,
        hidden: 8,
        ..Default::default()
    };
    let out = run_federation(&task, &cfg).unwrap();
    let hyper = Step2Hyper {
        alpha: 1.0,
        beta: 1.0,
        layers: 0,
        epochs: 5,
        hidden: 8,
        ..Step2Hyper::default()
    };
    for c in &task.clients {
        let r = step2_train(c.client_id, &c.graph, &out.extractor, &hyper, 0).unwrap();
        assert_eq!(r.epochs_trace.len(), 6);
        assert!(r.adafgl_acc.is_some());
    }
}

fn cora() -> Graph {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/cora");
    load_dataset(&dir, "cora", MaskRatios::HOMOPHILOUS, true, 0).unwrap()
}

#[test]
fn cora_community_split_concentrates_labels() {
    let g = cora();
    let task = community_split(&g, 10, 0).unwrap();
    assert_eq!(task.num_clients(), 10);
    let concentrated = task.clients.iter().any(|c| {
        let h = c.graph.label_histogram();
        *h.iter().max().unwrap() as f64 >= 0.6 * c.graph.num_nodes() as f64
    });
    assert!(concentrated);
}

#[test]
fn cora_structure_split_spreads_homophily() {
    let g = cora();
    let task = structure_noniid_split(&g, 10, 0.5, 0.5, 0).unwrap();
    let hs: Vec<f64> = task.clients.iter().map(|c| edge_homophily(&c.graph).unwrap()).collect();
    let spread = hs.iter().cloned().fold(0.0, f64::max) - hs.iter().cloned().fold(1.0, f64::min);
    assert!(spread >= 0.3, "spread {spread}");
}
