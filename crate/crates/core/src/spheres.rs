//! Multi-sphere description of embedded communities.
//!
//! For fixed embeddings `z_i` and hard assignments, each community `k`
//! carries the dual problem
//!
//! ```text
//!   max  sum_{i in C_k} l_i |z_i|^2 - |sum_{i in C_k} l_i z_i|^2
//!   s.t. sum_{i in C_k} l_i = 1,  0 <= l_i <= alpha
//! ```
//!
//! whose solution gives the center `c_k = sum l_i z_i`, the squared radius
//! (read off the free multipliers) and the outlier score `l_i`.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};

use crate::autoencoder::DualWeights;
use crate::error::{DmgdError, Result};
use crate::graph::Graph;

/// Multipliers at or above `alpha - UPPER_GUARD` count as sitting on the box.
pub const UPPER_GUARD: f64 = 1e-6;
/// Multipliers at or below this count as zero when picking support vectors.
pub const LAMBDA_FLOOR: f64 = 1e-9;
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-6;
/// Tolerance on `sum l_i = 1` accepted by [`compute_centers`].
const SUM_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QpOptions {
    /// Stop once the maximal KKT violation drops below this.
    pub tol: f64,
    /// Pairwise updates allowed per community member.
    pub max_iter_per_member: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions {
            tol: 1e-6,
            max_iter_per_member: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommunityQp {
    pub size: usize,
    /// Box bound used for this community (raised when `alpha * size < 1`).
    pub alpha: f64,
    pub iterations: usize,
    pub max_violation: f64,
    pub converged: bool,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub lambdas: Vec<f64>,
    pub communities: Vec<CommunityQp>,
}

impl DualSolution {
    pub fn converged(&self) -> bool {
        self.communities.iter().all(|c| c.converged)
    }

    pub fn effective_alpha(&self) -> Vec<f64> {
        self.communities.iter().map(|c| c.alpha).collect()
    }

    pub fn objective(&self) -> f64 {
        self.communities.iter().map(|c| c.objective).sum()
    }
}

pub fn members_by_community(assignment: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); k];
    for (i, &c) in assignment.iter().enumerate() {
        members[c].push(i);
    }
    members
}

fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Box bound that keeps `sum l = 1, 0 <= l <= a` feasible for `size` members.
pub fn feasible_alpha(alpha: f64, size: usize) -> f64 {
    if alpha * size as f64 >= 1.0 {
        alpha
    } else {
        1.000001 / size as f64
    }
}

/// Euclidean projection onto `{sum x = 1, 0 <= x <= cap}`. Requires
/// `cap * len >= 1`.
pub fn project_capped_simplex(v: &[f64], cap: f64) -> Vec<f64> {
    let clipped_sum = |tau: f64| v.iter().map(|x| (x - tau).clamp(0.0, cap)).sum::<f64>();
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - cap;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if clipped_sum(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mut x: Vec<f64> = v.iter().map(|x| (x - tau).clamp(0.0, cap)).collect();
    // Absorb the bisection residual into coordinates that have room.
    for _ in 0..4 {
        let residual = 1.0 - x.iter().sum::<f64>();
        if residual == 0.0 {
            break;
        }
        for xi in x.iter_mut() {
            let room = if residual > 0.0 { cap - *xi } else { *xi };
            if room > residual.abs() {
                *xi += residual;
                break;
            }
        }
    }
    x
}

/// Pairwise coordinate ascent for one community. `lambdas` holds a feasible
/// start and is overwritten with the solution.
fn solve_community(z: &[ArrayView1<'_, f64>], lambdas: &mut [f64], alpha: f64, opts: QpOptions) -> CommunityQp {
    let n = z.len();
    let dim = z.first().map_or(0, |r| r.len());
    let norms: Vec<f64> = z.iter().map(|r| r.dot(r)).collect();
    let center_of = |l: &[f64]| {
        let mut c = Array1::<f64>::zeros(dim);
        for (r, &li) in z.iter().zip(l) {
            if li != 0.0 {
                c.scaled_add(li, r);
            }
        }
        c
    };
    let mut c = center_of(lambdas);
    let max_iter = opts.max_iter_per_member.saturating_mul(n).max(1);
    let mut grad = vec![0.0; n];
    let mut iterations = 0;
    let mut violation: f64;
    loop {
        // Gradient of the minimisation form l^T G l - q^T l.
        for i in 0..n {
            grad[i] = 2.0 * z[i].dot(&c) - norms[i];
        }
        let mut up = None;
        let mut down = None;
        for i in 0..n {
            if lambdas[i] < alpha && up.is_none_or(|u: usize| grad[i] < grad[u]) {
                up = Some(i);
            }
            if lambdas[i] > 0.0 && down.is_none_or(|d: usize| grad[i] > grad[d]) {
                down = Some(i);
            }
        }
        violation = match (up, down) {
            (Some(u), Some(d)) => (grad[d] - grad[u]).max(0.0),
            _ => 0.0,
        };
        if violation < opts.tol || iterations >= max_iter {
            break;
        }
        let (u, d) = (up.unwrap(), down.unwrap());
        let curvature = 2.0 * squared_distance(z[u], z[d]);
        let room = (alpha - lambdas[u]).min(lambdas[d]);
        let step = if curvature > 0.0 {
            ((grad[d] - grad[u]) / curvature).min(room)
        } else {
            room
        };
        let moved = if step >= alpha - lambdas[u] {
            let m = alpha - lambdas[u];
            lambdas[u] = alpha;
            lambdas[d] = (lambdas[d] - m).max(0.0);
            m
        } else if step >= lambdas[d] {
            let m = lambdas[d];
            lambdas[u] = (lambdas[u] + m).min(alpha);
            lambdas[d] = 0.0;
            m
        } else {
            lambdas[u] = (lambdas[u] + step).min(alpha);
            lambdas[d] -= step;
            step
        };
        iterations += 1;
        if iterations % 256 == 0 {
            c = center_of(lambdas);
        } else {
            c.scaled_add(moved, &z[u]);
            c.scaled_add(-moved, &z[d]);
        }
    }
    let c = center_of(lambdas);
    let objective = lambdas.iter().zip(&norms).map(|(l, q)| l * q).sum::<f64>() - c.dot(&c);
    CommunityQp {
        size: n,
        alpha,
        iterations,
        max_violation: violation,
        converged: violation < opts.tol,
        objective,
    }
}

/// Solves every community's dual independently. `warm_start`, when given, is
/// projected onto each community's feasible set; otherwise multipliers start
/// uniform at `1/|C_k|`.
pub fn solve_dual(
    embeddings: &Array2<f64>,
    assignment: &[usize],
    n_communities: usize,
    alpha: f64,
    opts: QpOptions,
    warm_start: Option<&[f64]>,
) -> Result<DualSolution> {
    if assignment.len() != embeddings.nrows() {
        return Err(DmgdError::DimensionMismatch {
            expected: embeddings.nrows(),
            actual: assignment.len(),
        });
    }
    if !(alpha > 0.0) {
        return Err(DmgdError::InvalidConfig(format!("alpha must be positive, got {alpha}")));
    }
    let members = members_by_community(assignment, n_communities);
    let mut lambdas = vec![0.0; assignment.len()];
    let mut communities = Vec::with_capacity(n_communities);
    for (k, idx) in members.iter().enumerate() {
        if idx.is_empty() {
            return Err(DmgdError::InfeasibleCommunity {
                community: k,
                reason: "no members".into(),
            });
        }
        let a = feasible_alpha(alpha, idx.len());
        if a != alpha {
            log::debug!("community {k}: alpha raised to {a} for {} members", idx.len());
        }
        let mut local = match warm_start {
            Some(w) => project_capped_simplex(&idx.iter().map(|&i| w[i]).collect::<Vec<_>>(), a),
            None => vec![1.0 / idx.len() as f64; idx.len()],
        };
        let rows: Vec<_> = idx.iter().map(|&i| embeddings.row(i)).collect();
        let info = solve_community(&rows, &mut local, a, opts);
        if !info.converged {
            log::warn!(
                "community {k}: dual solver hit the iteration cap with violation {:e}",
                info.max_violation
            );
        }
        for (&i, &l) in idx.iter().zip(&local) {
            lambdas[i] = l;
        }
        communities.push(info);
    }
    Ok(DualSolution { lambdas, communities })
}

/// Multipliers made feasible for `assignment`: each community's entries
/// are projected onto its capped simplex.
pub fn project_to_assignment(lambdas: &[f64], assignment: &[usize], n_communities: usize, alpha: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; lambdas.len()];
    for (k, idx) in members_by_community(assignment, n_communities).iter().enumerate() {
        if idx.is_empty() {
            return Err(DmgdError::EmptyCommunity(k));
        }
        let local = project_capped_simplex(&idx.iter().map(|&i| lambdas[i]).collect::<Vec<_>>(), feasible_alpha(alpha, idx.len()));
        for (&i, l) in idx.iter().zip(local) {
            out[i] = l;
        }
    }
    Ok(out)
}

/// `c_k = sum_{i in C_k} l_i z_i`.
pub fn compute_centers(
    embeddings: &Array2<f64>,
    lambdas: &[f64],
    assignment: &[usize],
    n_communities: usize,
) -> Result<Array2<f64>> {
    let mut centers = Array2::zeros((n_communities, embeddings.ncols()));
    let mut sums = vec![0.0; n_communities];
    for (i, (&l, &k)) in lambdas.iter().zip(assignment).enumerate() {
        sums[k] += l;
        if l != 0.0 {
            centers.row_mut(k).scaled_add(l, &embeddings.row(i));
        }
    }
    if let Some((k, s)) = sums.iter().enumerate().find(|(_, s)| (*s - 1.0).abs() > SUM_TOL) {
        return Err(DmgdError::InfeasibleCommunity {
            community: k,
            reason: format!("multipliers sum to {s}, expected 1"),
        });
    }
    Ok(centers)
}

/// Squared radii from the strict support vectors `LAMBDA_FLOOR < l_i <
/// alpha - UPPER_GUARD` (their minimum squared distance). Without strict
/// support vectors the radius is the largest squared distance among members
/// below the box, then among all members.
pub fn compute_radii(
    embeddings: &Array2<f64>,
    centers: &Array2<f64>,
    lambdas: &[f64],
    assignment: &[usize],
    effective_alpha: &[f64],
) -> Result<Vec<f64>> {
    let members = members_by_community(assignment, centers.nrows());
    members
        .iter()
        .enumerate()
        .map(|(k, idx)| {
            if idx.is_empty() {
                return Err(DmgdError::EmptyCommunity(k));
            }
            let a = effective_alpha[k];
            let dist = |i: usize| squared_distance(embeddings.row(i), centers.row(k));
            let below_box = |i: &&usize| lambdas[**i] < a - UPPER_GUARD;
            let strict = idx
                .iter()
                .filter(below_box)
                .filter(|&&i| lambdas[i] > LAMBDA_FLOOR)
                .map(|&i| dist(i))
                .reduce(f64::min);
            let r2 = strict
                .or_else(|| idx.iter().filter(below_box).map(|&i| dist(i)).reduce(f64::max))
                .or_else(|| idx.iter().map(|&i| dist(i)).reduce(f64::max))
                .unwrap();
            Ok(r2)
        })
        .collect()
}

/// `r_ik = |z_i - c_k|^2 - R_k^2`, `N x K`.
pub fn excess_matrix(embeddings: &Array2<f64>, centers: &Array2<f64>, radii_sq: &[f64]) -> Array2<f64> {
    let mut r = Array2::zeros((embeddings.nrows(), centers.nrows()));
    for (i, z) in embeddings.rows().into_iter().enumerate() {
        for (k, c) in centers.rows().into_iter().enumerate() {
            r[[i, k]] = squared_distance(z, c) - radii_sq[k];
        }
    }
    r
}

/// `argmin_k max(r_ik, 0)`, ties to the lowest community index.
pub fn assign_communities(embeddings: &Array2<f64>, centers: &Array2<f64>, radii_sq: &[f64]) -> Vec<usize> {
    let r = excess_matrix(embeddings, centers, radii_sq);
    r.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for k in 1..row.len() {
                if row[k].max(0.0) < row[best].max(0.0) {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// `max(r_{i, k(i)}, 0)`: slack against the node's own sphere.
pub fn assigned_slacks(excess: &Array2<f64>, assignment: &[usize]) -> Vec<f64> {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &k)| excess[[i, k]].max(0.0))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeCategory {
    Regular,
    Boundary,
    Outlier,
}

impl NodeCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeCategory::Regular => "regular",
            NodeCategory::Boundary => "boundary",
            NodeCategory::Outlier => "outlier",
        }
    }
}

/// Slack `max(min_k r_ik, 0)` and category per node. Excess within
/// `boundary_tol` of zero is a boundary node with zero slack.
pub fn slack_and_category(
    embeddings: &Array2<f64>,
    centers: &Array2<f64>,
    radii_sq: &[f64],
    boundary_tol: f64,
) -> (Vec<f64>, Vec<NodeCategory>) {
    let r = excess_matrix(embeddings, centers, radii_sq);
    r.rows()
        .into_iter()
        .map(|row| {
            let m = row.iter().cloned().fold(f64::INFINITY, f64::min);
            if m.abs() <= boundary_tol {
                (0.0, NodeCategory::Boundary)
            } else if m < 0.0 {
                (0.0, NodeCategory::Regular)
            } else {
                (m, NodeCategory::Outlier)
            }
        })
        .unzip()
}

/// Full description state after steps (i)-(iii) on a fixed embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereState {
    pub centers: Array2<f64>,
    pub radii_sq: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub assignment: Vec<usize>,
    pub alpha: f64,
    /// Box bound actually used per community.
    pub effective_alpha: Vec<f64>,
    pub slacks: Vec<f64>,
    pub categories: Vec<NodeCategory>,
    pub qp_converged: bool,
}

impl SphereState {
    /// Solves the duals, then centers, radii, slacks and categories for the
    /// given assignment.
    pub fn fit(
        embeddings: &Array2<f64>,
        assignment: Vec<usize>,
        n_communities: usize,
        alpha: f64,
        opts: QpOptions,
        warm_start: Option<&[f64]>,
        boundary_tol: f64,
    ) -> Result<Self> {
        let dual = solve_dual(embeddings, &assignment, n_communities, alpha, opts, warm_start)?;
        let centers = compute_centers(embeddings, &dual.lambdas, &assignment, n_communities)?;
        let effective_alpha = dual.effective_alpha();
        let radii_sq = compute_radii(embeddings, &centers, &dual.lambdas, &assignment, &effective_alpha)?;
        let (slacks, categories) = slack_and_category(embeddings, &centers, &radii_sq, boundary_tol);
        Ok(SphereState {
            qp_converged: dual.converged(),
            centers,
            radii_sq,
            lambdas: dual.lambdas,
            assignment,
            alpha,
            effective_alpha,
            slacks,
            categories,
        })
    }

    pub fn n_communities(&self) -> usize {
        self.centers.nrows()
    }

    pub fn dual_weights(&self) -> DualWeights<'_> {
        DualWeights {
            lambdas: &self.lambdas,
            assignment: &self.assignment,
            n_communities: self.n_communities(),
        }
    }

    pub fn refresh_slacks(&mut self, embeddings: &Array2<f64>, boundary_tol: f64) {
        let (slacks, categories) = slack_and_category(embeddings, &self.centers, &self.radii_sq, boundary_tol);
        self.slacks = slacks;
        self.categories = categories;
    }

    /// Nodes with `LAMBDA_FLOOR < l_i < alpha_k - UPPER_GUARD`.
    pub fn is_strict_support(&self, i: usize) -> bool {
        let a = self.effective_alpha[self.assignment[i]];
        self.lambdas[i] > LAMBDA_FLOOR && self.lambdas[i] < a - UPPER_GUARD
    }

    pub fn write_outliers_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("node_id,lambda,xi,category\n");
        for i in crate::eval::rank_nodes(&self.lambdas, Some(&self.slacks)) {
            s.push_str(&format!(
                "{i},{},{},{}\n",
                self.lambdas[i],
                self.slacks[i],
                self.categories[i].as_str()
            ));
        }
        std::fs::write(path, s).map_err(|e| DmgdError::io(path, e))
    }

    pub fn write_communities_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("node_id,community\n");
        for (i, k) in self.assignment.iter().enumerate() {
            s.push_str(&format!("{i},{k}\n"));
        }
        std::fs::write(path, s).map_err(|e| DmgdError::io(path, e))
    }

    /// Text dump of alpha, centers, radii, multipliers and assignments.
    pub fn save(&self, path: &Path) -> Result<()> {
        let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(" ");
        let mut s = String::from("dmgd-spheres v1\n");
        s.push_str(&format!("alpha {}\n", self.alpha));
        s.push_str(&format!("communities {} dim {}\n", self.n_communities(), self.centers.ncols()));
        for (k, c) in self.centers.rows().into_iter().enumerate() {
            s.push_str(&format!(
                "sphere {k} radius_sq {} alpha {} center {}\n",
                self.radii_sq[k],
                self.effective_alpha[k],
                join(&mut c.iter().map(|x| x.to_string()))
            ));
        }
        s.push_str(&format!("lambdas {}\n", join(&mut self.lambdas.iter().map(|x| x.to_string()))));
        s.push_str(&format!("assignment {}\n", join(&mut self.assignment.iter().map(|x| x.to_string()))));
        s.push_str(&format!("qp_converged {}\n", self.qp_converged));
        std::fs::write(path, s).map_err(|e| DmgdError::io(path, e))
    }

    /// Reads a file written by [`SphereState::save`]. Slacks and categories
    /// are not stored; call [`SphereState::refresh_slacks`] with the matching
    /// embeddings.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DmgdError::io(path, e))?;
        let err = |line: usize, msg: &str| DmgdError::Parse {
            path: path.to_path_buf(),
            line,
            message: msg.to_string(),
        };
        fn nums<T: std::str::FromStr>(tokens: &[&str]) -> Option<Vec<T>> {
            tokens.iter().map(|t| t.parse().ok()).collect()
        }
        let lines: Vec<&str> = text.lines().collect();
        if lines.first() != Some(&"dmgd-spheres v1") {
            return Err(err(1, "missing `dmgd-spheres v1` header"));
        }
        let field = |idx: usize, key: &str| -> Result<Vec<&str>> {
            let line = lines.get(idx).ok_or_else(|| err(idx + 1, "truncated spheres file"))?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.first() != Some(&key) {
                return Err(err(idx + 1, &format!("expected `{key}`")));
            }
            Ok(tokens[1..].to_vec())
        };
        let alpha: f64 = match field(1, "alpha")?.as_slice() {
            [a] => a.parse().map_err(|_| err(2, "bad alpha"))?,
            _ => return Err(err(2, "expected `alpha <value>`")),
        };
        let (k, dim): (usize, usize) = match field(2, "communities")?.as_slice() {
            [k, "dim", m] => (
                k.parse().map_err(|_| err(3, "bad community count"))?,
                m.parse().map_err(|_| err(3, "bad dimension"))?,
            ),
            _ => return Err(err(3, "expected `communities <K> dim <M>`")),
        };
        let mut centers = Array2::zeros((k, dim));
        let mut radii_sq = Vec::with_capacity(k);
        let mut effective_alpha = Vec::with_capacity(k);
        for c in 0..k {
            let ln = 4 + c;
            let t = field(3 + c, "sphere")?;
            if t.len() != 6 + dim || t[0] != c.to_string() || t[1] != "radius_sq" || t[3] != "alpha" || t[5] != "center" {
                return Err(err(ln, "expected `sphere <k> radius_sq <r> alpha <a> center <M values>`"));
            }
            radii_sq.push(t[2].parse().map_err(|_| err(ln, "bad radius"))?);
            effective_alpha.push(t[4].parse().map_err(|_| err(ln, "bad alpha"))?);
            let center: Vec<f64> = nums(&t[6..]).ok_or_else(|| err(ln, "bad center coordinate"))?;
            centers.row_mut(c).assign(&Array1::from(center));
        }
        let lambdas: Vec<f64> = nums(&field(3 + k, "lambdas")?).ok_or_else(|| err(4 + k, "bad multiplier"))?;
        let assignment: Vec<usize> = nums(&field(4 + k, "assignment")?).ok_or_else(|| err(5 + k, "bad community index"))?;
        if assignment.len() != lambdas.len() {
            return Err(err(5 + k, "assignment and lambdas differ in length"));
        }
        if let Some(&bad) = assignment.iter().find(|&&a| a >= k) {
            return Err(err(5 + k, &format!("community {bad} out of range")));
        }
        let qp_converged = match lines.get(5 + k) {
            None => true,
            Some(l) => match l.split_whitespace().collect::<Vec<_>>().as_slice() {
                ["qp_converged", v] => v.parse().map_err(|_| err(6 + k, "bad qp_converged flag"))?,
                _ => return Err(err(6 + k, "expected `qp_converged <bool>`")),
            },
        };
        Ok(SphereState {
            centers,
            radii_sq,
            lambdas,
            assignment,
            alpha,
            effective_alpha,
            slacks: Vec::new(),
            categories: Vec::new(),
            qp_converged,
        })
    }
}

/// Gives every empty community a single member: the node farthest outside
/// all spheres (largest `min_k r_ik`) among communities that can spare one.
/// The re-seeded sphere is centred on that node with zero radius.
pub fn reseed_empty_communities(
    embeddings: &Array2<f64>,
    centers: &mut Array2<f64>,
    radii_sq: &mut [f64],
    assignment: &mut [usize],
) -> Vec<usize> {
    let k = centers.nrows();
    let mut reseeded = Vec::new();
    loop {
        let mut sizes = vec![0usize; k];
        for &c in assignment.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            break;
        };
        let r = excess_matrix(embeddings, centers, radii_sq);
        let donor = (0..assignment.len())
            .filter(|&i| sizes[assignment[i]] > 1)
            .map(|i| (i, r.row(i).iter().cloned().fold(f64::INFINITY, f64::min)))
            .fold(None, |best: Option<(usize, f64)>, (i, m)| match best {
                Some((_, bm)) if bm >= m => best,
                _ => Some((i, m)),
            });
        let Some((node, _)) = donor else {
            break;
        };
        assignment[node] = empty;
        centers.row_mut(empty).assign(&embeddings.row(node));
        radii_sq[empty] = 0.0;
        reseeded.push(empty);
    }
    reseeded
}

/// Primal and dual values of the description problem and the full objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Objectives {
    /// `sum_k R_k^2 + sum_i alpha_k max(r_{i,k(i)}, 0)`.
    pub sphere_primal: f64,
    /// `sum_k [sum l_i |z_i|^2 - |sum l_i z_i|^2]` over members.
    pub sphere_dual: f64,
    pub reconstruction: f64,
    pub homophily: f64,
    /// Sphere primal plus the weighted autoencoder terms.
    pub primal: f64,
    /// Sphere dual plus the weighted autoencoder terms (the minimax value).
    pub dual: f64,
}

pub fn objectives(
    embeddings: &Array2<f64>,
    state: &SphereState,
    reconstruction: f64,
    beta: f64,
    gamma: f64,
    g: &Graph,
) -> Objectives {
    let excess = excess_matrix(embeddings, &state.centers, &state.radii_sq);
    let slack = assigned_slacks(&excess, &state.assignment);
    let sphere_primal = state.radii_sq.iter().sum::<f64>()
        + slack
            .iter()
            .zip(&state.assignment)
            .map(|(x, &k)| state.effective_alpha[k] * x)
            .sum::<f64>();
    let sphere_dual = sphere_dual(embeddings, &state.lambdas, &state.assignment, state.n_communities());
    let homophily = crate::autoencoder::homophily_exact(g, embeddings);
    let base = beta * reconstruction + gamma * homophily;
    Objectives {
        sphere_primal,
        sphere_dual,
        reconstruction,
        homophily,
        primal: sphere_primal + base,
        dual: sphere_dual + base,
    }
}

pub fn sphere_dual(embeddings: &Array2<f64>, lambdas: &[f64], assignment: &[usize], k: usize) -> f64 {
    let mut centers = Array2::<f64>::zeros((k, embeddings.ncols()));
    let mut linear = 0.0;
    for (i, (&l, &c)) in lambdas.iter().zip(assignment).enumerate() {
        let z = embeddings.row(i);
        linear += l * z.dot(&z);
        centers.row_mut(c).scaled_add(l, &z);
    }
    linear - centers.rows().into_iter().map(|c| c.dot(&c)).sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NuBoundReport {
    pub outlier_count: usize,
    /// Strict support vectors.
    pub boundary_count: usize,
    /// `K / alpha`.
    pub bound: f64,
    pub upper_satisfied: bool,
    pub lower_satisfied: bool,
    /// `bound - outlier_count`.
    pub upper_margin: f64,
    /// `outlier_count + boundary_count - bound`.
    pub lower_margin: f64,
}

/// Counts outliers (positive slack) and strict support vectors against the
/// `K / alpha` bound: at most that many outliers, at least that many
/// outliers plus boundary nodes.
pub fn nu_bound_report(state: &SphereState, k: usize) -> NuBoundReport {
    let outlier_count = state.categories.iter().filter(|&&c| c == NodeCategory::Outlier).count();
    let boundary_count = (0..state.lambdas.len()).filter(|&i| state.is_strict_support(i)).count();
    let bound = k as f64 / state.alpha;
    NuBoundReport {
        outlier_count,
        boundary_count,
        bound,
        upper_satisfied: outlier_count as f64 <= bound,
        lower_satisfied: (outlier_count + boundary_count) as f64 >= bound,
        upper_margin: bound - outlier_count as f64,
        lower_margin: (outlier_count + boundary_count) as f64 - bound,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingleSphere {
    pub center: Array1<f64>,
    pub radius_sq: f64,
    pub lambdas: Vec<f64>,
    pub slacks: Vec<f64>,
}

/// Soft-boundary one-sphere description of all embeddings.
pub fn svdd_single_sphere_fit(embeddings: &Array2<f64>, alpha: f64, opts: QpOptions) -> Result<SingleSphere> {
    let n = embeddings.nrows();
    if n < 2 {
        return Err(DmgdError::InvalidConfig("single-sphere fit needs at least two points".into()));
    }
    if alpha * (n as f64) < 1.0 {
        return Err(DmgdError::InfeasibleCommunity {
            community: 0,
            reason: format!("alpha * N = {} < 1", alpha * n as f64),
        });
    }
    let state = SphereState::fit(embeddings, vec![0; n], 1, alpha, opts, None, 0.0)?;
    Ok(SingleSphere {
        center: state.centers.row(0).to_owned(),
        radius_sq: state.radii_sq[0],
        lambdas: state.lambdas,
        slacks: state.slacks,
    })
}
