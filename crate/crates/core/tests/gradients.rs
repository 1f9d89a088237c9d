mod common;

use dmgd::autoencoder::{
    init_model, loss_and_gradient, DualWeights, EmbeddingModel, Layer, LossWeights, NodeFeatures, Subsampling,
};
use dmgd::graph::Graph;
use dmgd::synth::{generate_planted_partition, SynthConfig};
use dmgd::trainer::pretrain;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn layer_mut(model: &mut EmbeddingModel, l: usize) -> &mut Layer {
    let n_enc = model.encoder.len();
    if l < n_enc {
        &mut model.encoder[l]
    } else {
        &mut model.decoder[l - n_enc]
    }
}

fn two_triangles() -> Graph {
    Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap()
}

/// A model whose pre-activations all sit at least `margin` away from the kinks.
fn smooth_model(a: &[Vec<f64>], emb: usize, margin: f64) -> EmbeddingModel {
    for seed in 0..1000 {
        let mut model = init_model(a.len(), 3, emb, seed, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in 0..4 {
            for b in layer_mut(&mut model, l).bias.iter_mut() {
                *b = rng.gen_range(-0.5..0.5);
            }
        }
        if common::min_abs_preactivation(&model, a) > margin {
            return model;
        }
    }
    panic!("no seed gave a kink-free model");
}

#[test]
fn gradient_matches_central_differences() {
    let g = two_triangles();
    let a = common::dense_adjacency(&g);
    let feats = NodeFeatures::from_graph(&g, false);
    let model = smooth_model(&a, 2, 1e-3);
    let lambdas = [0.5, 0.3, 0.2, 0.0, 0.5, 0.5];
    let assignment = [0, 0, 0, 1, 1, 1];
    let dual = DualWeights {
        lambdas: &lambdas,
        assignment: &assignment,
        n_communities: 2,
    };
    let weights = LossWeights { beta: 0.7, gamma: 1.3 };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (_, grads) =
        loss_and_gradient(&model, &g, &feats, Some(&dual), weights, Subsampling::default(), &mut rng).unwrap();

    let h = 1e-5;
    let f = |m: &EmbeddingModel| common::objective(m, &a, &lambdas, &assignment, weights.beta, weights.gamma);
    let mut worst = 0.0f64;
    let mut nonzero = 0;
    for l in 0..4 {
        let (gw, gb) = &grads.layers[l];
        let shape = gw.dim();
        let mut check = |analytic: f64, perturb: &dyn Fn(&mut EmbeddingModel, f64)| {
            let mut plus = model.clone();
            perturb(&mut plus, h);
            let mut minus = model.clone();
            perturb(&mut minus, -h);
            let numeric = (f(&plus) - f(&minus)) / (2.0 * h);
            let scale = analytic.abs().max(numeric.abs());
            if scale > 1e-6 {
                nonzero += 1;
                worst = worst.max((analytic - numeric).abs() / scale);
            } else {
                worst = worst.max((analytic - numeric).abs());
            }
        };
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                check(gw[[i, j]], &|m, d| layer_mut(m, l).weights[[i, j]] += d);
            }
        }
        for j in 0..gb.len() {
            check(gb[j], &|m, d| layer_mut(m, l).bias[j] += d);
        }
    }
    assert!(nonzero > 20, "too few informative coordinates: {nonzero}");
    assert!(worst < 1e-4, "max relative error {worst}");
}

#[test]
fn full_loss_matches_double_loop() {
    let (g, truth) = generate_planted_partition(&SynthConfig::uniform(2, 6, 0.7, 0.1, 9)).unwrap();
    let a = common::dense_adjacency(&g);
    let feats = NodeFeatures::from_graph(&g, false);
    let model = init_model(12, 5, 3, 4, 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut lambdas = vec![0.0; 12];
    for k in 0..2 {
        let members: Vec<usize> = (0..12).filter(|&i| truth.labels[i] == k).collect();
        let raw: Vec<f64> = members.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        for (&i, r) in members.iter().zip(&raw) {
            lambdas[i] = r / total;
        }
    }
    let dual = DualWeights {
        lambdas: &lambdas,
        assignment: &truth.labels,
        n_communities: 2,
    };
    for (beta, gamma) in [(1.0, 1.0), (0.0, 2.5), (3.0, 0.0)] {
        let weights = LossWeights { beta, gamma };
        let (loss, _) =
            loss_and_gradient(&model, &g, &feats, Some(&dual), weights, Subsampling::default(), &mut rng).unwrap();
        let expected = common::objective(&model, &a, &lambdas, &truth.labels, beta, gamma);
        assert!(
            (loss.total - expected).abs() <= 1e-10 * (1.0 + expected.abs()),
            "beta {beta} gamma {gamma}: {} vs {expected}",
            loss.total
        );
    }
}

#[test]
fn pretraining_mostly_decreases() {
    let (g, _) = generate_planted_partition(&SynthConfig::uniform(3, 10, 0.5, 0.05, 5)).unwrap();
    let feats = NodeFeatures::from_graph(&g, false);
    let mut model = init_model(30, 22, 16, 0, 0.01).unwrap();
    let trace = pretrain(&mut model, &g, &feats, 50, 1e-3).unwrap();
    assert_eq!(trace.len(), 50);
    let decreases = trace.windows(2).filter(|w| w[1] <= w[0]).count();
    assert!(decreases * 10 >= 9 * (trace.len() - 1), "only {decreases} of 49 epochs decreased");
}
