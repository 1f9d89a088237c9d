//! Alternating training: autoencoder pretraining, k-means++ initial
//! assignments, then rounds of dual solve, sphere geometry, reassignment and
//! gradient epochs on the embedding network.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autoencoder::{
    autoencoder_step, base_loss, default_hidden_dim, dmgd_gradient_step, init_model, DualWeights, EmbeddingModel,
    LossWeights, NodeFeatures, OptimizerState, Subsampling, DEFAULT_LEAKY_SLOPE,
};
use crate::error::{DmgdError, Result};
use crate::graph::Graph;
use crate::spheres::{
    assign_communities, nu_bound_report, objectives, project_to_assignment, reseed_empty_communities, NuBoundReport,
    Objectives, QpOptions, SphereState, DEFAULT_BOUNDARY_TOL,
};

/// Box weight given directly, or derived from an expected outlier fraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaSpec {
    Alpha(f64),
    /// `alpha = K / (nu N)`.
    Nu(f64),
}

impl AlphaSpec {
    pub fn resolve(self, k: usize, n_nodes: usize) -> Result<f64> {
        match self {
            AlphaSpec::Alpha(a) if a > 0.0 && a.is_finite() => Ok(a),
            AlphaSpec::Alpha(a) => Err(DmgdError::InvalidConfig(format!("alpha must be positive, got {a}"))),
            AlphaSpec::Nu(nu) if nu > 0.0 && nu < 1.0 => Ok(k as f64 / (nu * n_nodes as f64)),
            AlphaSpec::Nu(nu) => Err(DmgdError::InvalidConfig(format!("nu must lie in (0,1), got {nu}"))),
        }
    }
}

/// Values tried for gamma unless a grid or a single value is configured.
pub const DEFAULT_GAMMA_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub k: usize,
    pub embedding_dim: usize,
    /// `None` uses `round(sqrt(D * M))`.
    pub hidden_dim: Option<usize>,
    pub leaky_slope: f64,
    pub row_normalize: bool,
    pub alpha: AlphaSpec,
    pub beta: f64,
    pub gamma: f64,
    /// When non-empty, one run per value; the run with the lowest final
    /// objective (weighted by `gamma`) is kept.
    pub gamma_grid: Vec<f64>,
    pub pretrain_epochs: usize,
    pub outer_iters: usize,
    pub epochs_per_iter: usize,
    pub s_comm: Option<usize>,
    pub s_nbr: Option<usize>,
    pub learning_rate: f64,
    pub seed_model: u64,
    pub seed_kmeans: u64,
    pub seed_sampling: u64,
    pub qp: QpOptions,
    pub boundary_tol: f64,
    /// Early stop when the objective's relative change drops below this.
    pub rel_tol: f64,
    /// Cap on reassign/re-solve rounds applied to the final state.
    pub final_refresh_rounds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k: 3,
            embedding_dim: 16,
            hidden_dim: None,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            row_normalize: false,
            alpha: AlphaSpec::Nu(0.05),
            beta: 1.0,
            gamma: 1.0,
            gamma_grid: DEFAULT_GAMMA_GRID.to_vec(),
            pretrain_epochs: 50,
            outer_iters: 15,
            epochs_per_iter: 5,
            s_comm: Some(20),
            s_nbr: Some(10),
            learning_rate: 1e-3,
            seed_model: 0,
            seed_kmeans: 0,
            seed_sampling: 0,
            qp: QpOptions::default(),
            boundary_tol: DEFAULT_BOUNDARY_TOL,
            rel_tol: 1e-4,
            final_refresh_rounds: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        let bad = |m: String| Err(DmgdError::InvalidConfig(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.k > n_nodes {
            return bad(format!("k = {} exceeds the node count {n_nodes}", self.k));
        }
        if self.embedding_dim == 0 || self.embedding_dim >= n_nodes {
            return bad(format!("embedding dim {} must lie in 1..{n_nodes}", self.embedding_dim));
        }
        if !(self.beta >= 0.0) || !(self.gamma >= 0.0) || self.gamma_grid.iter().any(|g| !(*g >= 0.0)) {
            return bad("beta and gamma must be non-negative".into());
        }
        if self.pretrain_epochs == 0 {
            return bad("pretrain_epochs must be at least 1".into());
        }
        if self.s_comm == Some(0) || self.s_nbr == Some(0) {
            return bad("subsample sizes must be at least 1".into());
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        self.alpha.resolve(self.k, n_nodes).map(|_| ())
    }

    fn subsampling(&self) -> Subsampling {
        Subsampling {
            s_comm: self.s_comm,
            s_nbr: self.s_nbr,
        }
    }
}

/// Runs `epochs` full-batch ADAM steps on the unweighted autoencoder loss.
/// Returns the loss evaluated at each step.
pub fn pretrain(model: &mut EmbeddingModel, g: &Graph, feats: &NodeFeatures, epochs: usize, lr: f64) -> Result<Vec<f64>> {
    if epochs == 0 {
        return Err(DmgdError::InvalidConfig("pretraining needs at least one epoch".into()));
    }
    let mut optim = OptimizerState::new(model, lr);
    let weights = LossWeights { beta: 1.0, gamma: 1.0 };
    let mut trace = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let loss = match autoencoder_step(model, &mut optim, g, feats, weights) {
            Ok(l) => l.total,
            Err(DmgdError::NonFiniteGradient { .. }) => f64::NAN,
            Err(e) => return Err(e),
        };
        if !loss.is_finite() {
            return Err(DmgdError::Diverged { epoch, loss });
        }
        trace.push(loss);
    }
    Ok(trace)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub centers: Array2<f64>,
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding followed by Lloyd iterations until the relative change
/// in inertia drops below `1e-6` or 300 iterations. An empty cluster is
/// re-seeded at the point farthest from its current center.
pub fn kmeans_pp_init(points: &Array2<f64>, k: usize, seed: u64) -> Result<KMeans> {
    let (n, m) = points.dim();
    if k == 0 || k > n {
        return Err(DmgdError::InvalidConfig(format!("k-means needs 1 <= k <= {n}, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = Array2::<f64>::zeros((k, m));
    let mut chosen = vec![rng.gen_range(0..n)];
    centers.row_mut(0).assign(&points.row(chosen[0]));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), centers.row(0))).collect();
    for c in 1..k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(&mut rng),
            // Every point coincides with a center: fall back to an unused index.
            Err(_) => {
                let unused: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
                unused[rng.gen_range(0..unused.len())]
            }
        };
        chosen.push(next);
        centers.row_mut(c).assign(&points.row(next));
        for i in 0..n {
            d2[i] = d2[i].min(sq_dist(points.row(i), centers.row(c)));
        }
    }

    let mut labels = vec![0usize; n];
    let mut inertia = f64::INFINITY;
    let mut iterations = 0;
    for iter in 0..300 {
        iterations = iter + 1;
        let mut current = 0.0;
        for i in 0..n {
            let (best, d) = (0..k)
                .map(|c| (c, sq_dist(points.row(i), centers.row(c))))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            labels[i] = best;
            current += d;
        }
        let mut sums = Array2::<f64>::zeros((k, m));
        let mut counts = vec![0usize; k];
        for i in 0..n {
            sums.row_mut(labels[i]).scaled_add(1.0, &points.row(i));
            counts[labels[i]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers.row_mut(c).assign(&(&sums.row(c) / counts[c] as f64));
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[labels[i]] > 1)
                    .map(|i| (i, sq_dist(points.row(i), centers.row(labels[i]))))
                    .fold(None, |best: Option<(usize, f64)>, x| match best {
                        Some(b) if b.1 >= x.1 => Some(b),
                        _ => Some(x),
                    });
                if let Some((i, _)) = far {
                    counts[labels[i]] -= 1;
                    labels[i] = c;
                    counts[c] = 1;
                    centers.row_mut(c).assign(&points.row(i));
                }
            }
        }
        let converged = current == 0.0 || (inertia - current).abs() <= 1e-6 * inertia;
        inertia = current;
        if converged {
            break;
        }
    }
    let inertia = (0..n).map(|i| sq_dist(points.row(i), centers.row(labels[i]))).sum();
    Ok(KMeans {
        labels,
        centers,
        inertia,
        iterations,
    })
}

/// Objective values recorded once per outer iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub objectives: Objectives,
}

#[derive(Clone, Debug)]
pub struct TrainedArtifacts {
    pub model: EmbeddingModel,
    pub spheres: SphereState,
    pub embeddings: Array2<f64>,
    pub pretrain_trace: Vec<f64>,
    pub trace: Vec<TraceEntry>,
    pub nu_report: NuBoundReport,
    /// Early stop reached before the iteration budget ran out.
    pub converged: bool,
    pub gamma: f64,
}

/// Trains with `cfg.gamma`, or once per `cfg.gamma_grid` value keeping the
/// run with the lowest final objective measured at weights `cfg.beta`,
/// `cfg.gamma`.
pub fn train(g: &Graph, cfg: &TrainConfig) -> Result<TrainedArtifacts> {
    if cfg.gamma_grid.is_empty() {
        return train_with_gamma(g, cfg, cfg.gamma);
    }
    let mut best: Option<(f64, TrainedArtifacts)> = None;
    for &gamma in &cfg.gamma_grid {
        let run = train_with_gamma(g, cfg, gamma)?;
        let value = run.objective_at(cfg.beta, cfg.gamma);
        log::info!("gamma {gamma}: final objective {value}");
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, run));
        }
    }
    Ok(best.expect("non-empty grid").1)
}

fn train_with_gamma(g: &Graph, cfg: &TrainConfig, gamma: f64) -> Result<TrainedArtifacts> {
    let n = g.n_nodes();
    cfg.validate(n)?;
    let k = cfg.k;
    let alpha = cfg.alpha.resolve(k, n)?;
    let feats = NodeFeatures::from_graph(g, cfg.row_normalize);
    let hidden = cfg.hidden_dim.unwrap_or_else(|| default_hidden_dim(n, cfg.embedding_dim));
    let mut model = init_model(n, hidden, cfg.embedding_dim, cfg.seed_model, cfg.leaky_slope)?;
    let pretrain_trace = pretrain(&mut model, g, &feats, cfg.pretrain_epochs, cfg.learning_rate)?;
    let mut embeddings = model.embed(&feats)?;
    let mut assignment = kmeans_pp_init(&embeddings, k, cfg.seed_kmeans)?.labels;
    log::info!("pretrained {} epochs, alpha {alpha}", cfg.pretrain_epochs);

    let mut optim = OptimizerState::new(&model, cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed_sampling);
    let weights = LossWeights { beta: cfg.beta, gamma };
    let mut warm: Option<Vec<f64>> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut current: Option<SphereState> = None;

    for t in 0..cfg.outer_iters {
        let step = |e: DmgdError| e.at_iteration(t);
        let state = SphereState::fit(&embeddings, assignment.clone(), k, alpha, cfg.qp, warm.as_deref(), cfg.boundary_tol)
            .map_err(step)?;
        let recon = base_loss(&model, g, &feats).map_err(step)?.reconstruction;
        let obj = objectives(&embeddings, &state, recon, cfg.beta, gamma, g);
        log::debug!("iteration {t}: objective {} primal {}", obj.dual, obj.primal);
        let previous = trace.last().map(|e: &TraceEntry| e.objectives.dual);
        trace.push(TraceEntry { iteration: t, objectives: obj });
        if let Some(p) = previous {
            if (obj.dual - p).abs() < cfg.rel_tol * p.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                current = Some(state);
                break;
            }
        }

        let mut centers = state.centers.clone();
        let mut radii = state.radii_sq.clone();
        let mut next = assign_communities(&embeddings, &centers, &radii);
        let reseeded = reseed_empty_communities(&embeddings, &mut centers, &mut radii, &mut next);
        if !reseeded.is_empty() {
            log::info!("iteration {t}: re-seeded empty communities {reseeded:?}");
        }
        let lambdas = project_to_assignment(&state.lambdas, &next, k, alpha).map_err(step)?;
        let dual = DualWeights {
            lambdas: &lambdas,
            assignment: &next,
            n_communities: k,
        };
        for _ in 0..cfg.epochs_per_iter {
            dmgd_gradient_step(&mut model, &mut optim, g, &feats, &dual, weights, cfg.subsampling(), &mut rng)
                .map_err(step)?;
        }
        embeddings = model.embed(&feats).map_err(step)?;
        assignment = next;
        warm = Some(lambdas);
    }

    let mut state = match current {
        Some(s) => s,
        None => {
            let s = SphereState::fit(&embeddings, assignment, k, alpha, cfg.qp, warm.as_deref(), cfg.boundary_tol)?;
            let recon = base_loss(&model, g, &feats)?.reconstruction;
            trace.push(TraceEntry {
                iteration: cfg.outer_iters,
                objectives: objectives(&embeddings, &s, recon, cfg.beta, gamma, g),
            });
            s
        }
    };
    state = settle_assignment(&embeddings, state, k, alpha, cfg)?;
    let nu_report = nu_bound_report(&state, k);
    if !(nu_report.upper_satisfied && nu_report.lower_satisfied) {
        log::warn!("outlier-count bounds not met: {nu_report:?}");
    }
    Ok(TrainedArtifacts {
        model,
        spheres: state,
        embeddings,
        pretrain_trace,
        trace,
        nu_report,
        converged,
        gamma,
    })
}

/// Repeats reassignment and the sphere fit at fixed embeddings until the
/// assignment stops changing, so every node is scored against the spheres
/// of its own community.
fn settle_assignment(embeddings: &Array2<f64>, mut state: SphereState, k: usize, alpha: f64, cfg: &TrainConfig) -> Result<SphereState> {
    for _ in 0..cfg.final_refresh_rounds {
        let mut centers = state.centers.clone();
        let mut radii = state.radii_sq.clone();
        let mut next = assign_communities(embeddings, &centers, &radii);
        reseed_empty_communities(embeddings, &mut centers, &mut radii, &mut next);
        if next == state.assignment {
            return Ok(state);
        }
        let warm = state.lambdas.clone();
        state = SphereState::fit(embeddings, next, k, alpha, cfg.qp, Some(&warm), cfg.boundary_tol)?;
    }
    log::warn!("final assignment did not settle in {} rounds", cfg.final_refresh_rounds);
    Ok(state)
}

impl TrainedArtifacts {
    pub fn final_objective(&self) -> f64 {
        self.trace.last().map_or(f64::INFINITY, |e| e.objectives.dual)
    }

    /// Final dual objective re-weighted with `beta` and `gamma`. Grid runs are
    /// compared this way so that a small trained gamma does not win merely by
    /// down-weighting its own homophily term.
    pub fn objective_at(&self, beta: f64, gamma: f64) -> f64 {
        self.trace.last().map_or(f64::INFINITY, |e| {
            let o = &e.objectives;
            o.sphere_dual + beta * o.reconstruction + gamma * o.homophily
        })
    }

    pub fn loss_trace_csv(&self) -> String {
        let mut s = String::from("iter,primal,dual,reconstruction,homophily,sphere_primal,sphere_dual\n");
        for e in &self.trace {
            let o = &e.objectives;
            writeln!(
                s,
                "{},{},{},{},{},{},{}",
                e.iteration, o.primal, o.dual, o.reconstruction, o.homophily, o.sphere_primal, o.sphere_dual
            )
            .unwrap();
        }
        s
    }

    /// CSV `node_id,v_1..v_M`.
    pub fn embeddings_csv(&self) -> String {
        let m = self.embeddings.ncols();
        let mut s = String::from("node_id");
        for j in 1..=m {
            write!(s, ",v_{j}").unwrap();
        }
        s.push('\n');
        for (i, row) in self.embeddings.rows().into_iter().enumerate() {
            write!(s, "{i}").unwrap();
            for x in row {
                write!(s, ",{x}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Writes model, spheres, loss trace, embeddings, outlier ranking and
    /// communities into `dir`.
    pub fn write_checkpoint(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| DmgdError::io(dir, e))?;
        let write = |name: &str, body: String| {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| DmgdError::io(&p, e))
        };
        self.model.save(&dir.join("model.txt"))?;
        self.spheres.save(&dir.join("spheres.txt"))?;
        write("loss_trace.csv", self.loss_trace_csv())?;
        write("embeddings.csv", self.embeddings_csv())?;
        self.spheres.write_outliers_csv(&dir.join("outliers.csv"))?;
        self.spheres.write_communities_csv(&dir.join("communities.csv"))
    }
}

/// Reads a `node_id,v_1..v_M` file as written by
/// [`TrainedArtifacts::embeddings_csv`]. Rows must be in node order.
pub fn load_embeddings_csv(path: &Path) -> Result<Array2<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| DmgdError::io(path, e))?;
    let err = |line: usize, message: String| DmgdError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| DmgdError::EmptyInput(path.to_path_buf()))?;
    if !header.starts_with("node_id") {
        return Err(err(1, "expected header `node_id,v_1,...`".into()));
    }
    let m = header.split(',').count() - 1;
    let mut values = Vec::new();
    let mut n = 0;
    for (idx, line) in lines.enumerate() {
        let ln = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id: usize = fields
            .next()
            .and_then(|f| f.trim().parse().ok())
            .ok_or_else(|| err(ln, "bad node id".into()))?;
        if id != n {
            return Err(err(ln, format!("expected node {n}, found {id}")));
        }
        let row: Vec<f64> = fields
            .map(|f| f.trim().parse().map_err(|_| err(ln, format!("bad value `{f}`"))))
            .collect::<Result<_>>()?;
        if row.len() != m {
            return Err(err(ln, format!("expected {m} values, found {}", row.len())));
        }
        values.extend(row);
        n += 1;
    }
    if n == 0 {
        return Err(DmgdError::EmptyInput(path.to_path_buf()));
    }
    Ok(Array2::from_shape_vec((n, m), values).expect("row lengths checked"))
}
