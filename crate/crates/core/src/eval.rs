//! Evaluation metrics: outlier recall at the top of a ranking, clustering
//! accuracy under the best cluster-to-class matching, and node
//! classification F1 from a multinomial logistic regression.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DmgdError, Result};
use crate::graph::GroundTruth;
use crate::spheres::SphereState;

/// Node ids sorted by descending score, ties by descending `tiebreak` (when
/// given) and then ascending id.
pub fn rank_nodes(scores: &[f64], tiebreak: Option<&[f64]>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| match tiebreak {
                Some(t) => t[b].total_cmp(&t[a]),
                None => Ordering::Equal,
            })
            .then(a.cmp(&b))
    });
    order
}

/// Number of nodes in the top `fraction` of a ranking of `n`.
pub fn top_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Share of true outliers found among the top `ceil(fraction * N)` ranked nodes.
pub fn recall_at_top(scores: &[f64], truth_flags: &[bool], fraction: f64, tiebreak: Option<&[f64]>) -> Result<f64> {
    if scores.len() != truth_flags.len() {
        return Err(DmgdError::DimensionMismatch {
            expected: truth_flags.len(),
            actual: scores.len(),
        });
    }
    let positives = truth_flags.iter().filter(|&&f| f).count();
    if positives == 0 {
        return Err(DmgdError::Evaluation("recall needs at least one true outlier".into()));
    }
    let top = top_count(fraction, scores.len());
    let hits = rank_nodes(scores, tiebreak)
        .into_iter()
        .take(top)
        .filter(|&i| truth_flags[i])
        .count();
    Ok(hits as f64 / positives as f64)
}

/// Maximum-weight perfect matching on a square matrix (Hungarian method,
/// O(n^3)). Returns `assignment[row] = column`.
pub fn hungarian_max(weights: &Array2<f64>) -> Vec<usize> {
    let n = weights.nrows();
    assert_eq!(n, weights.ncols(), "hungarian_max needs a square matrix");
    if n == 0 {
        return Vec::new();
    }
    // Minimise the negated weights; 1-based potentials with a virtual column 0.
    let cost = |i: usize, j: usize| -weights[[i - 1, j - 1]];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[matched_row[j] - 1] = j - 1;
    }
    assignment
}

/// `counts[pred][truth]`, padded with zeros to a square matrix.
pub fn confusion_matrix(pred: &[usize], truth: &[usize]) -> Array2<f64> {
    let rows = pred.iter().max().map_or(0, |m| m + 1);
    let cols = truth.iter().max().map_or(0, |m| m + 1);
    let n = rows.max(cols);
    let mut counts = Array2::zeros((n, n));
    for (&p, &t) in pred.iter().zip(truth) {
        counts[[p, t]] += 1.0;
    }
    counts
}

/// Best one-to-one mapping of predicted clusters onto classes, as a
/// fraction of correctly mapped nodes.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(DmgdError::DimensionMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(DmgdError::Evaluation("clustering accuracy of an empty labeling".into()));
    }
    let counts = confusion_matrix(pred, truth);
    let matching = hungarian_max(&counts);
    let matched: f64 = matching.iter().enumerate().map(|(r, &c)| counts[[r, c]]).sum();
    Ok(matched / pred.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct F1Scores {
    pub macro_f1: f64,
    pub micro_f1: f64,
}

/// Macro F1 over every label present in either vector, and micro F1
/// (accuracy for single-label data).
pub fn f1_scores(truth: &[usize], pred: &[usize]) -> F1Scores {
    let n_labels = truth.iter().chain(pred).max().map_or(0, |m| m + 1);
    let mut tp = vec![0usize; n_labels];
    let mut fp = vec![0usize; n_labels];
    let mut fneg = vec![0usize; n_labels];
    let mut present = vec![false; n_labels];
    for (&t, &p) in truth.iter().zip(pred) {
        present[t] = true;
        present[p] = true;
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    let per_label: Vec<f64> = (0..n_labels)
        .filter(|&l| present[l])
        .map(|l| {
            let denom = 2 * tp[l] + fp[l] + fneg[l];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[l] as f64 / denom as f64
            }
        })
        .collect();
    let macro_f1 = if per_label.is_empty() {
        0.0
    } else {
        per_label.iter().sum::<f64>() / per_label.len() as f64
    };
    let correct = tp.iter().sum::<usize>();
    let micro_f1 = if truth.is_empty() {
        0.0
    } else {
        correct as f64 / truth.len() as f64
    };
    F1Scores { macro_f1, micro_f1 }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogisticConfig {
    pub l2_penalty: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            l2_penalty: 1e-4,
            grad_tol: 1e-6,
            max_iter: 5000,
        }
    }
}

/// Multinomial logistic regression on standardized features, fitted by
/// full-gradient descent on mean cross-entropy plus an L2 penalty on the
/// non-bias weights.
#[derive(Clone, Debug)]
pub struct LogisticRegression {
    mean: Array1<f64>,
    scale: Array1<f64>,
    /// `(d + 1) x C`; the last row is the bias.
    weights: Array2<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|x| (x - m).exp());
        let s = row.sum();
        row /= s;
    }
}

impl LogisticRegression {
    fn design(&self, x: &Array2<f64>) -> Array2<f64> {
        let (n, d) = x.dim();
        let mut out = Array2::ones((n, d + 1));
        for i in 0..n {
            for j in 0..d {
                out[[i, j]] = (x[[i, j]] - self.mean[j]) / self.scale[j];
            }
        }
        out
    }

    pub fn fit(x: &Array2<f64>, y: &[usize], n_classes: usize, cfg: LogisticConfig) -> Self {
        let (n, d) = x.dim();
        let mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(d));
        let scale = x
            .std_axis(Axis(0), 0.0)
            .mapv(|s| if s > 1e-12 { s } else { 1.0 });
        let mut model = LogisticRegression {
            mean,
            scale,
            weights: Array2::zeros((d + 1, n_classes)),
            iterations: 0,
            grad_norm: f64::INFINITY,
        };
        let xd = model.design(x);
        let mut onehot = Array2::<f64>::zeros((n, n_classes));
        for (i, &c) in y.iter().enumerate() {
            onehot[[i, c]] = 1.0;
        }
        let mean_sq = xd.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let step = 1.0 / (0.5 * mean_sq + cfg.l2_penalty);
        let mut penalty_mask = Array2::<f64>::ones((d + 1, n_classes));
        penalty_mask.row_mut(d).fill(0.0);
        for iter in 0..cfg.max_iter {
            let mut probs = xd.dot(&model.weights);
            softmax_rows(&mut probs);
            let residual = probs - &onehot;
            let grad = xd.t().dot(&residual) / n as f64 + &(&model.weights * &penalty_mask * cfg.l2_penalty);
            model.grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            model.iterations = iter;
            if model.grad_norm < cfg.grad_tol {
                break;
            }
            model.weights.scaled_add(-step, &grad);
        }
        model
    }

    /// Highest-probability class per row; ties go to the lower class id.
    pub fn predict(&self, x: &Array2<f64>) -> Vec<usize> {
        let logits = self.design(x).dot(&self.weights);
        logits
            .rows()
            .into_iter()
            .map(|row| {
                let mut best = 0;
                for c in 1..row.len() {
                    if row[c] > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

/// Per-class shuffled split with `round(frac * n_c)` training nodes per
/// class, clamped so every class keeps at least one node on each side.
pub fn stratified_split(labels: &[usize], nodes: &[usize], train_frac: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let n_classes = nodes.iter().map(|&i| labels[i]).max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); n_classes];
    for &i in nodes {
        by_class[labels[i]].push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut members in by_class.into_iter().filter(|m| !m.is_empty()) {
        members.shuffle(rng);
        let n = members.len();
        let k = ((train_frac * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1));
        test.extend_from_slice(&members[k..]);
        members.truncate(k);
        train.extend(members);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Trains on a stratified `train_frac` share of the non-outlier nodes and
/// scores the rest.
pub fn node_classification_f1(
    embeddings: &Array2<f64>,
    labels: &[usize],
    outlier_flags: &[bool],
    train_frac: f64,
    seed: u64,
) -> Result<F1Scores> {
    node_classification_f1_with(embeddings, labels, outlier_flags, train_frac, seed, LogisticConfig::default())
}

pub fn node_classification_f1_with(
    embeddings: &Array2<f64>,
    labels: &[usize],
    outlier_flags: &[bool],
    train_frac: f64,
    seed: u64,
    cfg: LogisticConfig,
) -> Result<F1Scores> {
    let n = embeddings.nrows();
    if labels.len() != n || outlier_flags.len() != n {
        return Err(DmgdError::DimensionMismatch {
            expected: n,
            actual: labels.len().min(outlier_flags.len()),
        });
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(DmgdError::InvalidConfig(format!("train fraction {train_frac} outside (0,1)")));
    }
    let nodes: Vec<usize> = (0..n).filter(|&i| !outlier_flags[i]).collect();
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut class_sizes = vec![0usize; n_classes];
    for &i in &nodes {
        class_sizes[labels[i]] += 1;
    }
    if let Some(c) = class_sizes.iter().position(|&s| s == 1) {
        return Err(DmgdError::Evaluation(format!("class {c} has a single non-outlier node")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (train, test) = stratified_split(labels, &nodes, train_frac, &mut rng);
    if test.is_empty() {
        return Err(DmgdError::Evaluation("empty test split".into()));
    }
    let x_train = embeddings.select(Axis(0), &train);
    let y_train: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    let model = LogisticRegression::fit(&x_train, &y_train, n_classes, cfg);
    let pred = model.predict(&embeddings.select(Axis(0), &test));
    let y_test: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
    Ok(f1_scores(&y_test, &pred))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub recall_levels: Vec<f64>,
    pub train_fractions: Vec<f64>,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            recall_levels: vec![0.05, 0.10, 0.15, 0.20, 0.25],
            train_fractions: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// `(L, recall)`; empty when the truth has no outliers.
    pub recall_curve: Vec<(f64, f64)>,
    /// Computed over non-outlier nodes only.
    pub clustering_accuracy: f64,
    pub f1_by_train_fraction: Vec<(f64, F1Scores)>,
}

/// Recall from the multipliers (slack tie-break), clustering accuracy of
/// the sphere assignment on non-outlier nodes, classification F1 of the
/// embeddings.
pub fn evaluate_all(embeddings: &Array2<f64>, state: &SphereState, truth: &GroundTruth, cfg: &EvalConfig) -> Result<EvalReport> {
    let n = embeddings.nrows();
    if truth.n_nodes() != n || state.assignment.len() != n {
        return Err(DmgdError::DimensionMismatch {
            expected: n,
            actual: truth.n_nodes(),
        });
    }
    let recall_curve = if truth.n_outliers() > 0 {
        cfg.recall_levels
            .iter()
            .map(|&l| Ok((l, recall_at_top(&state.lambdas, &truth.outlier_flags, l, Some(&state.slacks))?)))
            .collect::<Result<Vec<_>>>()?
    } else {
        log::info!("no flagged outliers; skipping recall");
        Vec::new()
    };
    let regular: Vec<usize> = (0..n).filter(|&i| !truth.outlier_flags[i]).collect();
    let pred: Vec<usize> = regular.iter().map(|&i| state.assignment[i]).collect();
    let labels: Vec<usize> = regular.iter().map(|&i| truth.labels[i]).collect();
    let clustering_accuracy = clustering_accuracy(&pred, &labels)?;
    let f1_by_train_fraction = cfg
        .train_fractions
        .iter()
        .map(|&f| Ok((f, node_classification_f1(embeddings, &truth.labels, &truth.outlier_flags, f, cfg.seed)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        recall_curve,
        clustering_accuracy,
        f1_by_train_fraction,
    })
}

impl EvalReport {
    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        for (l, r) in &self.recall_curve {
            writeln!(s, "recall@{l}={r}").unwrap();
        }
        writeln!(s, "clustering_accuracy={}", self.clustering_accuracy).unwrap();
        writeln!(s, "clustering_excludes_outliers=true").unwrap();
        for (f, scores) in &self.f1_by_train_fraction {
            writeln!(s, "macro_f1@{f}={}", scores.macro_f1).unwrap();
            writeln!(s, "micro_f1@{f}={}", scores.micro_f1).unwrap();
        }
        s
    }

    /// CSV rows `metric,setting,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,setting,value\n");
        for (l, r) in &self.recall_curve {
            writeln!(s, "recall,{l},{r}").unwrap();
        }
        writeln!(s, "clustering_accuracy,,{}", self.clustering_accuracy).unwrap();
        for (f, scores) in &self.f1_by_train_fraction {
            writeln!(s, "macro_f1,{f},{}", scores.macro_f1).unwrap();
            writeln!(s, "micro_f1,{f},{}", scores.micro_f1).unwrap();
        }
        s
    }

    pub fn write(&self, report_path: &Path, csv_path: &Path) -> Result<()> {
        std::fs::write(report_path, self.to_key_values()).map_err(|e| DmgdError::io(report_path, e))?;
        std::fs::write(csv_path, self.to_csv()).map_err(|e| DmgdError::io(csv_path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn recall_examples() {
        let r = recall_at_top(&[0.9, 0.8, 0.1, 0.05], &[true, true, false, false], 0.5, None).unwrap();
        assert_eq!(r, 1.0);
        // Perfect anti-ranking: outliers get the five lowest scores.
        let scores: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let flags: Vec<bool> = (0..100).map(|i| i < 5).collect();
        assert_eq!(recall_at_top(&scores, &flags, 0.05, None).unwrap(), 0.0);
        assert!(recall_at_top(&[1.0, 2.0], &[false, false], 0.5, None).is_err());
    }

    #[test]
    fn ranking_tiebreaks() {
        let order = rank_nodes(&[0.0, 1.0, 0.0, 0.0], Some(&[0.0, 0.0, 2.0, 0.0]));
        assert_eq!(order, vec![1, 2, 0, 3]);
        assert_eq!(top_count(0.05, 100), 5);
        assert_eq!(top_count(0.25, 150), 38);
    }

    #[test]
    fn hungarian_small() {
        let w = array![[1.0, 5.0, 0.0], [4.0, 0.0, 0.0], [0.0, 0.0, 3.0]];
        assert_eq!(hungarian_max(&w), vec![1, 0, 2]);
    }

    #[test]
    fn clustering_accuracy_examples() {
        let truth = [0, 0, 1, 1, 2, 2];
        assert_eq!(clustering_accuracy(&truth, &truth).unwrap(), 1.0);
        assert_eq!(clustering_accuracy(&[2, 2, 0, 0, 1, 1], &truth).unwrap(), 1.0);
        assert!((clustering_accuracy(&[0, 0, 0, 1, 1, 1], &truth).unwrap() - 4.0 / 6.0).abs() < 1e-12);
        // More clusters than classes: unmatched clusters count as errors.
        assert_eq!(clustering_accuracy(&[0, 1, 2, 3], &[0, 0, 0, 0]).unwrap(), 0.25);
        assert!(clustering_accuracy(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn f1_constant_predictor() {
        let truth = [0, 0, 1, 1];
        let f1 = f1_scores(&truth, &[0, 0, 0, 0]);
        assert!((f1.macro_f1 - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(f1.micro_f1, 0.5);
    }

    #[test]
    fn separable_blobs_classify_perfectly() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let c = i % 2;
            let offset = if c == 0 { -5.0 } else { 5.0 };
            rows.push([offset + (i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()]);
            labels.push(c);
        }
        let x = Array2::from_shape_fn((40, 2), |(i, j)| rows[i][j]);
        let f1 = node_classification_f1(&x, &labels, &[false; 40], 0.3, 4).unwrap();
        assert_eq!(f1.macro_f1, 1.0);
        assert_eq!(f1.micro_f1, 1.0);
    }

    #[test]
    fn zero_embeddings_give_constant_predictor() {
        let x = Array2::zeros((20, 3));
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let f1 = node_classification_f1(&x, &labels, &[false; 20], 0.5, 1).unwrap();
        assert!((f1.macro_f1 - 1.0 / 3.0).abs() < 1e-12);
        assert!((f1.micro_f1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn outliers_are_excluded_from_classification() {
        let x = Array2::from_shape_fn((6, 1), |(i, _)| if i < 3 { -1.0 } else { 1.0 });
        let labels = [0, 0, 0, 1, 1, 2];
        let flags = [false, false, false, false, false, true];
        let f1 = node_classification_f1(&x, &labels, &flags, 0.5, 0).unwrap();
        assert_eq!(f1.micro_f1, 1.0);
        // A class reduced to one node cannot be split.
        assert!(node_classification_f1(&x, &labels, &[false; 6], 0.5, 0).is_err());
    }

    #[test]
    fn stratified_split_keeps_every_class() {
        let labels = [0, 0, 0, 0, 1, 1, 2, 2, 2, 2, 2, 2];
        let nodes: Vec<usize> = (0..12).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (train, test) = stratified_split(&labels, &nodes, 0.1, &mut rng);
        for c in 0..3 {
            assert!(train.iter().any(|&i| labels[i] == c));
            assert!(test.iter().any(|&i| labels[i] == c));
        }
        assert_eq!(train.len() + test.len(), 12);
    }

    #[test]
    fn report_formats() {
        let report = EvalReport {
            recall_curve: vec![(0.05, 0.5), (0.1, 1.0)],
            clustering_accuracy: 0.9,
            f1_by_train_fraction: vec![(0.1, F1Scores { macro_f1: 0.7, micro_f1: 0.8 })],
        };
        let kv = report.to_key_values();
        assert!(kv.contains("recall@0.05=0.5\n"));
        assert!(kv.contains("macro_f1@0.1=0.7\n"));
        let csv = report.to_csv();
        assert!(csv.starts_with("metric,setting,value\n"));
        assert_eq!(csv.lines().count(), 6);
    }
}
