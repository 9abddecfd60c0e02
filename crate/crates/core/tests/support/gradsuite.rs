//! Analytic gradients against central differences (h = 1e-5, f64). Each
//! check returns the worst relative error it saw for one seed.

#![allow(dead_code)]

use fedgraph_core::adafgl::{
    init_model, knowledge_preserving_loss, prepare_inputs, step2_backward, step2_forward, step2_loss, Step2Hyper,
    Step2Model,
};
use fedgraph_core::graph::{make_masks, normalized_adjacency, sbm_generate, MaskRatios, SbmParams};
use fedgraph_core::learn::gradcheck::{central_difference, relative_error};
use fedgraph_core::learn::{
    frobenius_loss, gcn_backward, gcn_forward, mlp_backward, mlp_forward, softmax_cross_entropy, CeInput, ModelState,
};
use fedgraph_core::matrix::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-5;
pub const LAYER_TOL: f64 = 1e-4;
pub const COMPOSITE_TOL: f64 = 1e-3;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize, c: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..c)).collect()
}

/// Every MLP parameter and the input, random shapes.
pub fn mlp(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..9);
    let f = rng.random_range(2..6);
    let h = rng.random_range(2..6);
    let c = rng.random_range(2..5);
    let x = random_matrix(&mut rng, n, f);
    let labels = random_labels(&mut rng, n, c);
    let rows: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.7)).chain([0]).collect();
    let mut model = ModelState::mlp(&[f, h, c], seed).unwrap();
    for p in model.params.iter_mut() {
        p.value = random_matrix(&mut rng, p.value.rows(), p.value.cols());
    }
    let loss_of = |m: &ModelState, x: &DenseMatrix| {
        let (z, _) = mlp_forward(x, m).unwrap();
        softmax_cross_entropy(&z, CeInput::Logits, &labels, &rows).unwrap().0
    };
    let (z, cache) = mlp_forward(&x, &model).unwrap();
    let (_, dz) = softmax_cross_entropy(&z, CeInput::Logits, &labels, &rows).unwrap();
    let dx = mlp_backward(&mut model, &cache, &dz, true).unwrap();

    let mut worst = relative_error(&dx, &central_difference(&x, H, |xp| loss_of(&model, xp)));
    for k in 0..model.params.len() {
        let numeric = central_difference(&model.params[k].value, H, |w| {
            let mut m = model.clone();
            m.params[k].value = w.clone();
            loss_of(&m, &x)
        });
        worst = worst.max(relative_error(&model.params[k].grad, &numeric));
    }
    worst
}

/// Every GCN parameter, cycling the normalization exponent over 0, 1/2, 1.
pub fn gcn(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
    let n = rng.random_range(4..10);
    let params = SbmParams::new(n, 2, 0.6, 0.3, rng.random_range(2..5));
    let g = sbm_generate(&params, seed).unwrap();
    let r = [0.0, 0.5, 1.0][seed as usize % 3];
    let adj = normalized_adjacency(&g, r).unwrap();
    let c = 3;
    let labels = random_labels(&mut rng, n, c);
    let rows: Vec<usize> = (0..n).step_by(2).collect();
    let mut model = ModelState::gcn(&[g.num_features(), 4, c], r, seed).unwrap();
    let (z, cache) = gcn_forward(&adj, g.features(), &model).unwrap();
    let (_, dz) = softmax_cross_entropy(&z, CeInput::Logits, &labels, &rows).unwrap();
    gcn_backward(&adj, &mut model, &cache, &dz);
    let mut worst: f64 = 0.0;
    for k in 0..model.params.len() {
        let numeric = central_difference(&model.params[k].value, H, |w| {
            let mut m = model.clone();
            m.params[k].value = w.clone();
            let (z, _) = gcn_forward(&adj, g.features(), &m).unwrap();
            softmax_cross_entropy(&z, CeInput::Logits, &labels, &rows).unwrap().0
        });
        worst = worst.max(relative_error(&model.params[k].grad, &numeric));
    }
    worst
}

/// Cross-entropy on probabilities, Frobenius distance and the
/// knowledge-preserving loss.
pub fn losses(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
    let n = rng.random_range(2..8);
    let c = rng.random_range(2..6);
    let labels = random_labels(&mut rng, n, c);
    let rows: Vec<usize> = (0..n).collect();
    let z = random_matrix(&mut rng, n, c);
    let p = random_matrix(&mut rng, n, c).softmax_rows();

    let (_, g) = softmax_cross_entropy(&p, CeInput::Probabilities, &labels, &rows).unwrap();
    let num = central_difference(&p, H, |m| {
        softmax_cross_entropy(m, CeInput::Probabilities, &labels, &rows)
            .unwrap()
            .0
    });
    let mut worst = relative_error(&g, &num);

    let target = random_matrix(&mut rng, n, c);
    let (_, g) = frobenius_loss(&z, &target).unwrap();
    let num = central_difference(&z, H, |m| frobenius_loss(m, &target).unwrap().0);
    worst = worst.max(relative_error(&g, &num));

    let (_, g) = knowledge_preserving_loss(&z, &p).unwrap();
    let num = central_difference(&z, H, |m| knowledge_preserving_loss(m, &p).unwrap().0);
    worst.max(relative_error(&g, &num))
}

fn param_slots(m: &mut Step2Model) -> Vec<&mut ModelState> {
    let mut v = vec![&mut m.knowledge, &mut m.hetero.feature];
    v.extend(m.hetero.message.iter_mut());
    v
}

/// Full personalized-model backward on a 5 to 8 node client, compared as one
/// concatenated vector: single blocks can sit at the finite-difference noise
/// floor.
pub fn composite(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
    let n = rng.random_range(5..=8);
    let g = sbm_generate(&SbmParams::new(n, 2, 0.7, 0.4, 3), seed).unwrap();
    let g = make_masks(&g, MaskRatios::HETEROPHILOUS, seed).unwrap();
    let extractor = ModelState::gcn(&[3, 4, 2], 0.5, seed).unwrap();
    let hyper = Step2Hyper {
        alpha: rng.random_range(0.0..1.0),
        beta: rng.random_range(0.0..1.0),
        k: 2,
        layers: 2,
        hidden: 5,
        ..Default::default()
    };
    let (mut inp, _) = prepare_inputs(&g, &extractor, &hyper, seed).unwrap();
    // exercise both branches whatever the probe said
    inp.hcs = rng.random_range(0.2..0.8);
    let mut model = init_model(&inp, &hyper, seed).unwrap();
    for m in param_slots(&mut model) {
        for p in m.params.iter_mut() {
            p.value = random_matrix(&mut rng, p.value.rows(), p.value.cols());
        }
    }
    let fwd = step2_forward(&inp, &model).unwrap();
    step2_backward(&inp, &mut model, &fwd).unwrap();

    let base = model.clone();
    let slots = 2 + base.hetero.message.len();
    let (mut analytic, mut numeric) = (Vec::new(), Vec::new());
    for s in 0..slots {
        let count = param_slots(&mut base.clone())[s].params.len();
        for k in 0..count {
            let (value, grad) = {
                let mut b = base.clone();
                let p = &param_slots(&mut b)[s].params[k];
                (p.value.clone(), p.grad.clone())
            };
            let num = central_difference(&value, H, |w| {
                let mut m = base.clone();
                param_slots(&mut m)[s].params[k].value = w.clone();
                step2_loss(&inp, &step2_forward(&inp, &m).unwrap()).unwrap()
            });
            analytic.extend_from_slice(grad.data());
            numeric.extend_from_slice(num.data());
        }
    }
    let len = analytic.len();
    let a = DenseMatrix::from_vec(1, len, analytic).unwrap();
    let b = DenseMatrix::from_vec(1, len, numeric).unwrap();
    relative_error(&a, &b)
}
