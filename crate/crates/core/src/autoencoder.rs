//! The structural autoencoder: encoder `f`, decoder `g`, hand-written
//! backpropagation for the joint objective, and the ADAM update.
//!
//! The trainable objective for fixed multipliers and assignments is
//!
//! ```text
//!   sum_i l_i |z_i|^2  -  sum_k | sum_{i in C_k} l_i z_i |^2
//!     + beta * sum_i |a_i - g(z_i)|^2  +  gamma * sum_{(i,j) in E} |z_i - z_j|^2
//! ```
//!
//! with `z_i = f(a_i)`. The second and last sums can be estimated from
//! per-node samples; the gradient is always the exact gradient of whichever
//! estimate was evaluated.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DmgdError, Result};
use crate::graph::Graph;

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    /// `x` for `x >= 0`, `slope * x` otherwise.
    Leaky(f64),
    /// `max(x, 0)`.
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Leaky(s) => {
                if x >= 0.0 {
                    x
                } else {
                    s * x
                }
            }
            Activation::Relu => x.max(0.0),
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Leaky(s) => {
                if x >= 0.0 {
                    1.0
                } else {
                    s
                }
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `fan_in x fan_out`; outputs are `x W + b`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }

    fn forward_dense(&self, input: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let pre = input.dot(&self.weights) + &self.bias;
        let act = self.activation;
        let post = pre.mapv(|x| act.apply(x));
        (pre, post)
    }

    fn forward_sparse(&self, input: &NodeFeatures) -> (Array2<f64>, Array2<f64>) {
        let mut pre = Array2::zeros((input.n_rows(), self.fan_out()));
        for (i, row) in input.rows.iter().enumerate() {
            let mut out = pre.row_mut(i);
            out.assign(&self.bias);
            for &(j, x) in row {
                out.scaled_add(x, &self.weights.row(j));
            }
        }
        let act = self.activation;
        let post = pre.mapv(|x| act.apply(x));
        (pre, post)
    }
}

/// Encoder and decoder stacks. Hidden layers are leaky, the final encoder
/// and final decoder layers clamp at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    pub encoder: Vec<Layer>,
    pub decoder: Vec<Layer>,
}

/// Default hidden width: `round(sqrt(input_dim * embedding_dim))`.
pub fn default_hidden_dim(input_dim: usize, embedding_dim: usize) -> usize {
    ((input_dim as f64 * embedding_dim as f64).sqrt().round() as usize).max(1)
}

fn glorot_layer(fan_in: usize, fan_out: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Layer {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit);
    Layer {
        weights: Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(rng)),
        bias: Array1::zeros(fan_out),
        activation,
    }
}

/// Two-layer encoder `D -> H -> M` and mirrored decoder `M -> H -> D` with
/// Glorot-uniform weights and zero biases.
pub fn init_model(
    input_dim: usize,
    hidden_dim: usize,
    embedding_dim: usize,
    seed: u64,
    leaky_slope: f64,
) -> Result<EmbeddingModel> {
    if input_dim == 0 || hidden_dim == 0 || embedding_dim == 0 {
        return Err(DmgdError::InvalidConfig(format!(
            "model dimensions must be positive, got {input_dim}/{hidden_dim}/{embedding_dim}"
        )));
    }
    if embedding_dim >= input_dim {
        return Err(DmgdError::InvalidConfig(format!(
            "embedding dimension {embedding_dim} must be smaller than input dimension {input_dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leaky = Activation::Leaky(leaky_slope);
    Ok(EmbeddingModel {
        encoder: vec![
            glorot_layer(input_dim, hidden_dim, leaky, &mut rng),
            glorot_layer(hidden_dim, embedding_dim, Activation::Relu, &mut rng),
        ],
        decoder: vec![
            glorot_layer(embedding_dim, hidden_dim, leaky, &mut rng),
            glorot_layer(hidden_dim, input_dim, Activation::Relu, &mut rng),
        ],
    })
}

impl EmbeddingModel {
    pub fn input_dim(&self) -> usize {
        self.encoder[0].fan_in()
    }

    pub fn embedding_dim(&self) -> usize {
        self.encoder.last().map_or(0, Layer::fan_out)
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.encoder.iter().chain(self.decoder.iter())
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Layer> {
        self.encoder.iter_mut().chain(self.decoder.iter_mut())
    }

    pub fn n_parameters(&self) -> usize {
        self.layers().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Checks that consecutive layer dimensions compose and every parameter
    /// is finite.
    pub fn validate(&self) -> Result<()> {
        if self.encoder.is_empty() || self.decoder.is_empty() {
            return Err(DmgdError::InvalidConfig("encoder and decoder need at least one layer".into()));
        }
        let layers: Vec<&Layer> = self.layers().collect();
        for (idx, pair) in layers.windows(2).enumerate() {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(DmgdError::InvalidConfig(format!(
                    "layer {idx} outputs {} values but layer {} expects {}",
                    pair[0].fan_out(),
                    idx + 1,
                    pair[1].fan_in()
                )));
            }
        }
        if layers.last().unwrap().fan_out() != self.input_dim() {
            return Err(DmgdError::InvalidConfig("decoder output must match input dimension".into()));
        }
        for (idx, l) in layers.iter().enumerate() {
            if l.bias.len() != l.fan_out() {
                return Err(DmgdError::InvalidConfig(format!("layer {idx} bias has wrong length")));
            }
            if l.weights.iter().chain(l.bias.iter()).any(|x| !x.is_finite()) {
                return Err(DmgdError::InvalidConfig(format!("layer {idx} has non-finite parameters")));
            }
        }
        Ok(())
    }

    fn run(layers: &[Layer], x: &[f64]) -> Vec<f64> {
        let mut current = x.to_vec();
        for layer in layers {
            let pre = ArrayView1::from(&current[..]).dot(&layer.weights) + &layer.bias;
            current = pre.iter().map(|&v| layer.activation.apply(v)).collect();
        }
        current
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(DmgdError::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(Self::run(&self.encoder, x))
    }

    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.embedding_dim() {
            return Err(DmgdError::DimensionMismatch {
                expected: self.embedding_dim(),
                actual: z.len(),
            });
        }
        Ok(Self::run(&self.decoder, z))
    }

    /// `g(f(x))`.
    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.encode(x)?;
        self.decode(&z)
    }

    /// Embeddings of every node, `N x M`.
    pub fn embed(&self, feats: &NodeFeatures) -> Result<Array2<f64>> {
        self.check_features(feats)?;
        let (_, mut post) = self.encoder[0].forward_sparse(feats);
        for layer in &self.encoder[1..] {
            post = layer.forward_dense(&post).1;
        }
        Ok(post)
    }

    fn check_features(&self, feats: &NodeFeatures) -> Result<()> {
        if feats.dim != self.input_dim() {
            return Err(DmgdError::DimensionMismatch {
                expected: self.input_dim(),
                actual: feats.dim,
            });
        }
        Ok(())
    }

    fn forward(&self, feats: &NodeFeatures) -> ForwardCache {
        let mut pre = Vec::new();
        let mut post = Vec::new();
        let (p, q) = self.encoder[0].forward_sparse(feats);
        pre.push(p);
        post.push(q);
        for layer in self.layers().skip(1) {
            let (p, q) = layer.forward_dense(post.last().unwrap());
            pre.push(p);
            post.push(q);
        }
        ForwardCache { pre, post }
    }

    /// Writes layer shapes, activations and row-major parameters as text.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = String::from("dmgd-model v1\n");
        writeln!(s, "layers {} {}", self.encoder.len(), self.decoder.len()).unwrap();
        for layer in self.layers() {
            let act = match layer.activation {
                Activation::Leaky(slope) => format!("leaky {slope}"),
                Activation::Relu => "relu".to_string(),
            };
            writeln!(s, "layer {} {} {act}", layer.fan_in(), layer.fan_out()).unwrap();
            for row in layer.weights.rows() {
                push_floats(&mut s, row.iter());
            }
            push_floats(&mut s, layer.bias.iter());
        }
        fs::write(path, s).map_err(|e| DmgdError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| DmgdError::io(path, e))?;
        let err = |line: usize, msg: &str| DmgdError::Parse {
            path: path.to_path_buf(),
            line,
            message: msg.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, "dmgd-model v1")) => {}
            _ => return Err(err(1, "missing `dmgd-model v1` header")),
        }
        let (ln, counts) = lines.next().ok_or_else(|| err(2, "missing layer counts"))?;
        let counts: Vec<usize> = counts
            .strip_prefix("layers ")
            .ok_or_else(|| err(ln, "expected `layers <enc> <dec>`"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(ln, "bad layer count")))
            .collect::<Result<_>>()?;
        if counts.len() != 2 {
            return Err(err(ln, "expected two layer counts"));
        }
        let mut layers = Vec::new();
        for _ in 0..counts[0] + counts[1] {
            let (ln, header) = lines.next().ok_or_else(|| err(0, "truncated model file"))?;
            let tokens: Vec<&str> = header.split_whitespace().collect();
            if tokens.len() < 4 || tokens[0] != "layer" {
                return Err(err(ln, "expected `layer <in> <out> <activation>`"));
            }
            let fan_in: usize = tokens[1].parse().map_err(|_| err(ln, "bad fan-in"))?;
            let fan_out: usize = tokens[2].parse().map_err(|_| err(ln, "bad fan-out"))?;
            let activation = match (tokens[3], tokens.get(4)) {
                ("relu", None) => Activation::Relu,
                ("leaky", Some(s)) => Activation::Leaky(s.parse().map_err(|_| err(ln, "bad slope"))?),
                _ => return Err(err(ln, "unknown activation")),
            };
            let mut weights = Array2::zeros((fan_in, fan_out));
            for r in 0..fan_in {
                let (ln, row) = lines.next().ok_or_else(|| err(0, "truncated weights"))?;
                let values = parse_floats(row, fan_out).ok_or_else(|| err(ln, "bad weight row"))?;
                weights.row_mut(r).assign(&Array1::from(values));
            }
            let (ln, row) = lines.next().ok_or_else(|| err(0, "truncated bias"))?;
            let bias = Array1::from(parse_floats(row, fan_out).ok_or_else(|| err(ln, "bad bias row"))?);
            layers.push(Layer {
                weights,
                bias,
                activation,
            });
        }
        let decoder = layers.split_off(counts[0]);
        let model = EmbeddingModel {
            encoder: layers,
            decoder,
        };
        model.validate()?;
        Ok(model)
    }
}

fn push_floats<'a>(s: &mut String, values: impl Iterator<Item = &'a f64>) {
    let mut first = true;
    for v in values {
        if !first {
            s.push(' ');
        }
        first = false;
        write!(s, "{v}").unwrap();
    }
    s.push('\n');
}

fn parse_floats(line: &str, expected: usize) -> Option<Vec<f64>> {
    let values: Vec<f64> = line.split_whitespace().map(|t| t.parse().ok()).collect::<Option<_>>()?;
    (values.len() == expected).then_some(values)
}

/// Sparse per-node input vectors (adjacency rows, optionally normalized).
#[derive(Clone, Debug, PartialEq)]
pub struct NodeFeatures {
    pub dim: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl NodeFeatures {
    /// Raw binary adjacency rows, or rows scaled to unit sum when
    /// `row_normalize` is set.
    pub fn from_graph(g: &Graph, row_normalize: bool) -> Self {
        let rows = (0..g.n_nodes())
            .map(|i| {
                let nbrs = g.neighbors(i);
                let w = if row_normalize && !nbrs.is_empty() {
                    1.0 / nbrs.len() as f64
                } else {
                    1.0
                };
                nbrs.iter().map(|&j| (j, w)).collect()
            })
            .collect();
        NodeFeatures {
            dim: g.n_nodes(),
            rows,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(j, x) in &self.rows[i] {
            v[j] = x;
        }
        v
    }
}

struct ForwardCache {
    pre: Vec<Array2<f64>>,
    post: Vec<Array2<f64>>,
}

/// Per-layer `(dW, db)` in encoder-then-decoder order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Gradients {
    fn zeros_like(model: &EmbeddingModel) -> Self {
        Gradients {
            layers: model
                .layers()
                .map(|l| (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.bias.len())))
                .collect(),
        }
    }

    /// Index of the first layer holding a non-finite entry.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.layers
            .iter()
            .position(|(w, b)| w.iter().chain(b.iter()).any(|x| !x.is_finite()))
    }
}

/// Reconstruction and homophily terms of the autoencoder objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaseLoss {
    pub reconstruction: f64,
    pub homophily: f64,
}

fn reconstruction_error(feats: &NodeFeatures, output: &Array2<f64>) -> (f64, Array2<f64>) {
    let mut diff = output.clone();
    for (i, row) in feats.rows.iter().enumerate() {
        for &(j, x) in row {
            diff[[i, j]] -= x;
        }
    }
    let loss = diff.iter().map(|d| d * d).sum();
    (loss, diff)
}

/// Exact `sum_i |a_i - g(f(a_i))|^2` and `sum_{(i,j) in E} |f(a_i) - f(a_j)|^2`.
pub fn base_loss(model: &EmbeddingModel, g: &Graph, feats: &NodeFeatures) -> Result<BaseLoss> {
    model.check_features(feats)?;
    if feats.n_rows() != g.n_nodes() {
        return Err(DmgdError::DimensionMismatch {
            expected: g.n_nodes(),
            actual: feats.n_rows(),
        });
    }
    let cache = model.forward(feats);
    let z = &cache.post[model.encoder.len() - 1];
    let (reconstruction, _) = reconstruction_error(feats, cache.post.last().unwrap());
    Ok(BaseLoss {
        reconstruction,
        homophily: homophily_exact(g, z),
    })
}

pub fn homophily_exact(g: &Graph, z: &Array2<f64>) -> f64 {
    g.edges()
        .iter()
        .map(|&(i, j)| {
            let d = &z.row(i) - &z.row(j);
            d.dot(&d)
        })
        .sum()
}

/// Multipliers and hard assignments, held fixed during a gradient step.
#[derive(Clone, Copy, Debug)]
pub struct DualWeights<'a> {
    pub lambdas: &'a [f64],
    pub assignment: &'a [usize],
    pub n_communities: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub beta: f64,
    pub gamma: f64,
}

/// Sample sizes for the community-pair and neighbor sums; `None` uses the
/// full sets.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Subsampling {
    pub s_comm: Option<usize>,
    pub s_nbr: Option<usize>,
}

/// `(node, sampled partners, scale)`: the node's partner sum is estimated by
/// `scale * sum over partners`.
type SamplePlan = Vec<(usize, Vec<usize>, f64)>;

fn sample_subset(rng: &mut ChaCha8Rng, population: &[usize], size: Option<usize>) -> (Vec<usize>, f64) {
    match size {
        Some(s) if s < population.len() => {
            let picked = index::sample(rng, population.len(), s.max(1))
                .into_iter()
                .map(|k| population[k])
                .collect::<Vec<_>>();
            let scale = population.len() as f64 / picked.len() as f64;
            (picked, scale)
        }
        _ => (population.to_vec(), 1.0),
    }
}

/// Partners for the community-pair sum. Members with zero multiplier add
/// nothing to that sum, so partners are drawn from the positive-multiplier
/// members of the node's community only.
fn community_plan(dual: &DualWeights<'_>, size: Option<usize>, rng: &mut ChaCha8Rng) -> SamplePlan {
    let mut support = vec![Vec::new(); dual.n_communities];
    for (i, (&l, &k)) in dual.lambdas.iter().zip(dual.assignment).enumerate() {
        if l > 0.0 {
            support[k].push(i);
        }
    }
    (0..dual.lambdas.len())
        .filter(|&i| dual.lambdas[i] > 0.0)
        .map(|i| {
            let (partners, scale) = sample_subset(rng, &support[dual.assignment[i]], size);
            (i, partners, scale)
        })
        .collect()
}

fn neighbor_plan(g: &Graph, size: Option<usize>, rng: &mut ChaCha8Rng) -> SamplePlan {
    (0..g.n_nodes())
        .filter(|&i| g.degree(i) > 0)
        .map(|i| {
            let (partners, scale) = sample_subset(rng, g.neighbors(i), size);
            (i, partners, scale)
        })
        .collect()
}

/// Value of each term of the trainable objective as evaluated in one step.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct StepLoss {
    /// `sum_i l_i |z_i|^2`.
    pub norm_term: f64,
    /// Estimated `sum_k |sum_{i in C_k} l_i z_i|^2`.
    pub pair_term: f64,
    pub reconstruction: f64,
    /// Estimated homophily sum.
    pub homophily: f64,
    pub total: f64,
}

/// Loss and exact gradient of the evaluated estimate. With both sample
/// sizes `None` this is the exact objective.
pub fn loss_and_gradient(
    model: &EmbeddingModel,
    g: &Graph,
    feats: &NodeFeatures,
    dual: Option<&DualWeights<'_>>,
    weights: LossWeights,
    sampling: Subsampling,
    rng: &mut ChaCha8Rng,
) -> Result<(StepLoss, Gradients)> {
    model.check_features(feats)?;
    let n = g.n_nodes();
    if feats.n_rows() != n {
        return Err(DmgdError::DimensionMismatch {
            expected: n,
            actual: feats.n_rows(),
        });
    }
    let cache = model.forward(feats);
    let z_index = model.encoder.len() - 1;
    let z = &cache.post[z_index];
    let mut dz = Array2::<f64>::zeros(z.raw_dim());
    let mut loss = StepLoss::default();

    if let Some(dual) = dual {
        if dual.lambdas.len() != n || dual.assignment.len() != n {
            return Err(DmgdError::DimensionMismatch {
                expected: n,
                actual: dual.lambdas.len().min(dual.assignment.len()),
            });
        }
        for (i, &l) in dual.lambdas.iter().enumerate() {
            if l != 0.0 {
                let zi = z.row(i);
                loss.norm_term += l * zi.dot(&zi);
                dz.row_mut(i).scaled_add(2.0 * l, &zi);
            }
        }
        for (i, partners, scale) in community_plan(dual, sampling.s_comm, rng) {
            let li = dual.lambdas[i] * scale;
            let mut acc = Array1::<f64>::zeros(z.ncols());
            for &j in &partners {
                acc.scaled_add(dual.lambdas[j], &z.row(j));
            }
            loss.pair_term += li * z.row(i).dot(&acc);
            dz.row_mut(i).scaled_add(-li, &acc);
            for &j in &partners {
                dz.row_mut(j).scaled_add(-li * dual.lambdas[j], &z.row(i));
            }
        }
    }

    if weights.gamma != 0.0 {
        for (i, partners, scale) in neighbor_plan(g, sampling.s_nbr, rng) {
            for &j in &partners {
                let diff = &z.row(i) - &z.row(j);
                loss.homophily += 0.5 * scale * diff.dot(&diff);
                let coef = weights.gamma * scale;
                dz.row_mut(i).scaled_add(coef, &diff);
                dz.row_mut(j).scaled_add(-coef, &diff);
            }
        }
    }

    let (reconstruction, mut d_out) = reconstruction_error(feats, cache.post.last().unwrap());
    loss.reconstruction = reconstruction;
    d_out *= 2.0 * weights.beta;
    loss.total = loss.norm_term - loss.pair_term + weights.beta * loss.reconstruction + weights.gamma * loss.homophily;

    let grads = backward(model, feats, &cache, d_out, dz);
    Ok((loss, grads))
}

fn backward(
    model: &EmbeddingModel,
    feats: &NodeFeatures,
    cache: &ForwardCache,
    d_output: Array2<f64>,
    d_embedding: Array2<f64>,
) -> Gradients {
    let layers: Vec<&Layer> = model.layers().collect();
    let z_index = model.encoder.len() - 1;
    let mut grads = Gradients::zeros_like(model);
    let mut d_post = d_output;
    for l in (0..layers.len()).rev() {
        let act = layers[l].activation;
        let delta = &d_post * &cache.pre[l].mapv(|x| act.derivative(x));
        let (gw, gb) = &mut grads.layers[l];
        *gb = delta.sum_axis(Axis(0));
        if l == 0 {
            for (i, row) in feats.rows.iter().enumerate() {
                let d = delta.row(i);
                for &(j, x) in row {
                    gw.row_mut(j).scaled_add(x, &d);
                }
            }
        } else {
            *gw = cache.post[l - 1].t().dot(&delta);
            d_post = delta.dot(&layers[l].weights.t());
            if l - 1 == z_index {
                d_post += &d_embedding;
            }
        }
    }
    grads
}

/// ADAM moments for every layer of a model.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub first_moment: Vec<(Array2<f64>, Array1<f64>)>,
    pub second_moment: Vec<(Array2<f64>, Array1<f64>)>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerState {
    pub fn new(model: &EmbeddingModel, learning_rate: f64) -> Self {
        let zeros = Gradients::zeros_like(model).layers;
        OptimizerState {
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// One bias-corrected ADAM update.
    pub fn apply(&mut self, model: &mut EmbeddingModel, grads: &Gradients) {
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let (lr, eps) = (self.learning_rate, self.epsilon);
        let update = |param: f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            param - lr * (*m / c1) / ((*v / c2).sqrt() + eps)
        };
        for (idx, layer) in model.layers_mut().enumerate() {
            let (gw, gb) = &grads.layers[idx];
            let (mw, mb) = &mut self.first_moment[idx];
            let (vw, vb) = &mut self.second_moment[idx];
            ndarray::Zip::from(&mut layer.weights)
                .and(mw)
                .and(vw)
                .and(gw)
                .for_each(|p, m, v, &g| *p = update(*p, m, v, g));
            ndarray::Zip::from(&mut layer.bias)
                .and(mb)
                .and(vb)
                .and(gb)
                .for_each(|p, m, v, &g| *p = update(*p, m, v, g));
        }
    }
}

/// One ADAM step on the joint objective with multipliers, assignments and
/// sphere geometry held fixed. Returns the evaluated loss.
#[allow(clippy::too_many_arguments)]
pub fn dmgd_gradient_step(
    model: &mut EmbeddingModel,
    optim: &mut OptimizerState,
    g: &Graph,
    feats: &NodeFeatures,
    dual: &DualWeights<'_>,
    weights: LossWeights,
    sampling: Subsampling,
    rng: &mut ChaCha8Rng,
) -> Result<StepLoss> {
    let (loss, grads) = loss_and_gradient(model, g, feats, Some(dual), weights, sampling, rng)?;
    if let Some(layer) = grads.first_non_finite() {
        return Err(DmgdError::NonFiniteGradient { layer });
    }
    optim.apply(model, &grads);
    Ok(loss)
}

/// One full-batch ADAM step on the autoencoder objective alone.
pub fn autoencoder_step(
    model: &mut EmbeddingModel,
    optim: &mut OptimizerState,
    g: &Graph,
    feats: &NodeFeatures,
    weights: LossWeights,
) -> Result<StepLoss> {
    // Unused: no sampling happens without a dual and with full neighbor sets.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (loss, grads) = loss_and_gradient(model, g, feats, None, weights, Subsampling::default(), &mut rng)?;
    if let Some(layer) = grads.first_non_finite() {
        return Err(DmgdError::NonFiniteGradient { layer });
    }
    optim.apply(model, &grads);
    Ok(loss)
}
