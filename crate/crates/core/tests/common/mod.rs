//! Plain-loop reference implementations shared by the integration tests.
#![allow(dead_code)]

use dmgd::autoencoder::EmbeddingModel;
use dmgd::graph::Graph;

pub fn dense_adjacency(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.n_nodes();
    let mut a = vec![vec![0.0; n]; n];
    for &(i, j) in g.edges() {
        a[i][j] = 1.0;
        a[j][i] = 1.0;
    }
    a
}

/// Pre-activations of every layer for one input row.
pub fn forward_row(model: &EmbeddingModel, x: &[f64]) -> Vec<Vec<f64>> {
    let mut pres = Vec::new();
    let mut input = x.to_vec();
    for layer in model.layers() {
        let mut pre = vec![0.0; layer.fan_out()];
        for (o, p) in pre.iter_mut().enumerate() {
            *p = layer.bias[o];
            for (i, xi) in input.iter().enumerate() {
                *p += xi * layer.weights[[i, o]];
            }
        }
        input = pre.iter().map(|&v| layer.activation.apply(v)).collect();
        pres.push(pre);
    }
    pres
}

/// `(embeddings, reconstructions)` by explicit loops.
pub fn embed_and_reconstruct(model: &EmbeddingModel, a: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let layers: Vec<_> = model.layers().collect();
    let z_layer = model.encoder.len() - 1;
    let mut zs = Vec::new();
    let mut outs = Vec::new();
    for row in a {
        let pres = forward_row(model, row);
        let act = |l: usize| pres[l].iter().map(|&v| layers[l].activation.apply(v)).collect::<Vec<_>>();
        zs.push(act(z_layer));
        outs.push(act(layers.len() - 1));
    }
    (zs, outs)
}

pub fn min_abs_preactivation(model: &EmbeddingModel, a: &[Vec<f64>]) -> f64 {
    a.iter()
        .flat_map(|row| forward_row(model, row).into_iter().flatten())
        .map(f64::abs)
        .fold(f64::INFINITY, f64::min)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `sum_i l_i |z_i|^2 - sum_k sum_{i,j in C_k} l_i l_j z_i.z_j
///  + beta sum_i |a_i - a_hat_i|^2 + gamma sum_{i<j, a_ij = 1} |z_i - z_j|^2`.
pub fn objective(
    model: &EmbeddingModel,
    a: &[Vec<f64>],
    lambdas: &[f64],
    assignment: &[usize],
    beta: f64,
    gamma: f64,
) -> f64 {
    let n = a.len();
    let (z, out) = embed_and_reconstruct(model, a);
    let mut total = 0.0;
    for i in 0..n {
        total += lambdas[i] * dot(&z[i], &z[i]);
        for j in 0..n {
            if assignment[i] == assignment[j] {
                total -= lambdas[i] * lambdas[j] * dot(&z[i], &z[j]);
            }
        }
        total += beta * a[i].iter().zip(&out[i]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        for j in i + 1..n {
            if a[i][j] != 0.0 {
                let d: Vec<f64> = z[i].iter().zip(&z[j]).map(|(p, q)| p - q).collect();
                total += gamma * dot(&d, &d);
            }
        }
    }
    total
}
