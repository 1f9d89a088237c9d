//! Planted-partition graph generation and community-outlier seeding.

use std::collections::{BTreeSet, HashMap};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DmgdError, Result};
use crate::graph::{Graph, GroundTruth};

const MAX_GENERATION_RETRIES: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub community_sizes: Vec<usize>,
    pub p_intra: f64,
    pub p_inter: f64,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            community_sizes: vec![50; 3],
            p_intra: 0.3,
            p_inter: 0.02,
            rng_seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn uniform(n_communities: usize, size: usize, p_intra: f64, p_inter: f64, rng_seed: u64) -> Self {
        SynthConfig {
            community_sizes: vec![size; n_communities],
            p_intra,
            p_inter,
            rng_seed,
        }
    }

    pub fn n_communities(&self) -> usize {
        self.community_sizes.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.community_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.community_sizes.is_empty() {
            return Err(DmgdError::InvalidConfig("at least one community is required".into()));
        }
        if let Some(&s) = self.community_sizes.iter().find(|&&s| s < 2) {
            return Err(DmgdError::InvalidConfig(format!("community size {s} < 2")));
        }
        if !(0.0 <= self.p_inter && self.p_inter < self.p_intra && self.p_intra <= 1.0) {
            return Err(DmgdError::InvalidConfig(format!(
                "need 0 <= p_inter < p_intra <= 1, got p_inter={} p_intra={}",
                self.p_inter, self.p_intra
            )));
        }
        Ok(())
    }
}

/// Samples every unordered pair independently: `p_intra` inside a community,
/// `p_inter` across. Labels are community ids; no node is flagged.
pub fn generate_planted_partition(cfg: &SynthConfig) -> Result<(Graph, GroundTruth)> {
    cfg.validate()?;
    let labels: Vec<usize> = cfg
        .community_sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &size)| std::iter::repeat(c).take(size))
        .collect();
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    for attempt in 0..MAX_GENERATION_RETRIES {
        let mut edges = Vec::new();
        let mut internal = vec![0usize; cfg.n_communities()];
        for u in 0..n {
            for v in (u + 1)..n {
                let same = labels[u] == labels[v];
                let p = if same { cfg.p_intra } else { cfg.p_inter };
                if rng.gen_bool(p) {
                    edges.push((u, v));
                    if same {
                        internal[labels[u]] += 1;
                    }
                }
            }
        }
        if internal.iter().all(|&c| c > 0) {
            let graph = Graph::from_edges(n, edges)?;
            let truth = GroundTruth::new(labels, vec![false; n])?;
            return Ok((graph, truth));
        }
        log::debug!("planted partition attempt {attempt} produced an edgeless community; retrying");
    }
    Err(DmgdError::Generation(format!(
        "a community had no internal edges after {MAX_GENERATION_RETRIES} attempts"
    )))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedingConfig {
    pub outlier_fraction: f64,
    pub far_quantile: f64,
    pub rng_seed: u64,
}

impl Default for SeedingConfig {
    fn default() -> Self {
        SeedingConfig {
            outlier_fraction: 0.05,
            far_quantile: 0.20,
            rng_seed: 2,
        }
    }
}

impl SeedingConfig {
    pub fn outlier_count(&self, n_nodes: usize) -> usize {
        (self.outlier_fraction * n_nodes as f64).round() as usize
    }

    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        if !(self.outlier_fraction > 0.0 && self.outlier_fraction < 1.0) {
            return Err(DmgdError::InvalidConfig(format!(
                "outlier_fraction must lie in (0,1), got {}",
                self.outlier_fraction
            )));
        }
        if !(self.far_quantile > 0.0 && self.far_quantile < 1.0) {
            return Err(DmgdError::InvalidConfig(format!(
                "far_quantile must lie in (0,1), got {}",
                self.far_quantile
            )));
        }
        if self.outlier_count(n_nodes) == 0 {
            return Err(DmgdError::InvalidConfig(format!(
                "outlier_fraction {} selects no node out of {n_nodes}",
                self.outlier_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SeededGraph {
    pub graph: Graph,
    pub truth: GroundTruth,
    /// Perturbed nodes in selection order.
    pub perturbed: Vec<usize>,
    /// `(node, original_degree, new_degree)` where the pool was too small.
    pub shrunk: Vec<(usize, usize, usize)>,
}

/// Nodes farthest from `v` in hop distance: the top `far_quantile` share of
/// the other nodes, unreachable first, ties by ascending id.
pub fn farthest_nodes(g: &Graph, v: usize, far_quantile: f64) -> Result<Vec<usize>> {
    let dist = g.bfs_distances(v)?;
    let mut others: Vec<usize> = (0..g.n_nodes()).filter(|&u| u != v).collect();
    others.sort_by(|&a, &b| dist[b].cmp(&dist[a]).then(a.cmp(&b)));
    let take = ((far_quantile * g.n_nodes() as f64).round() as usize).clamp(1, others.len().max(1));
    others.truncate(take);
    Ok(others)
}

/// Neighbors of the farthest nodes from `v` together with `v`'s own
/// neighbors, minus `v` and anything in `excluded`. Sorted ascending.
pub fn candidate_pool(
    g: &Graph,
    v: usize,
    far_quantile: f64,
    excluded: &BTreeSet<usize>,
) -> Result<Vec<usize>> {
    let far = farthest_nodes(g, v, far_quantile)?;
    let pool: BTreeSet<usize> = far
        .iter()
        .flat_map(|&u| g.neighbors(u).iter().copied())
        .chain(g.neighbors(v).iter().copied())
        .filter(|&u| u != v && !excluded.contains(&u))
        .collect();
    Ok(pool.into_iter().collect())
}

/// Turns `round(outlier_fraction * n)` randomly chosen nodes into community
/// outliers: each one's edges are replaced by as many edges to nodes drawn
/// uniformly from its candidate pool. Pools and degrees come from the
/// unperturbed graph, and other selected nodes never enter a pool so every
/// perturbed node ends up adjacent to exactly its drawn targets.
pub fn seed_outliers(g: &Graph, truth: &GroundTruth, cfg: &SeedingConfig) -> Result<SeededGraph> {
    let n = g.n_nodes();
    if truth.n_nodes() != n {
        return Err(DmgdError::DimensionMismatch {
            expected: n,
            actual: truth.n_nodes(),
        });
    }
    cfg.validate(n)?;
    let count = cfg.outlier_count(n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let perturbed: Vec<usize> = index::sample(&mut rng, n, count).into_iter().collect();
    let selected: BTreeSet<usize> = perturbed.iter().copied().collect();

    let mut rewired = HashMap::new();
    let mut shrunk = Vec::new();
    for &v in &perturbed {
        let degree = g.degree(v);
        let pool = candidate_pool(g, v, cfg.far_quantile, &selected)?;
        let targets: Vec<usize> = if degree <= pool.len() {
            index::sample(&mut rng, pool.len(), degree)
                .into_iter()
                .map(|k| pool[k])
                .collect()
        } else {
            let drawn: BTreeSet<usize> = (0..degree)
                .filter(|_| !pool.is_empty())
                .map(|_| pool[rng.gen_range(0..pool.len())])
                .collect();
            log::warn!(
                "node {v}: candidate pool of {} is smaller than degree {degree}; degree shrinks to {}",
                pool.len(),
                drawn.len()
            );
            shrunk.push((v, degree, drawn.len()));
            drawn.into_iter().collect()
        };
        rewired.insert(v, targets);
    }

    let graph = g.rewire(&rewired)?;
    let mut flags = truth.outlier_flags.clone();
    for &v in &perturbed {
        flags[v] = true;
    }
    Ok(SeededGraph {
        graph,
        truth: GroundTruth {
            labels: truth.labels.clone(),
            outlier_flags: flags,
        },
        perturbed,
        shrunk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_probabilities_give_disjoint_cliques() {
        let cfg = SynthConfig::uniform(2, 3, 1.0, 0.0, 7);
        let (g, truth) = generate_planted_partition(&cfg).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]);
        assert_eq!(truth.labels, vec![0, 0, 0, 1, 1, 1]);
        assert!(truth.outlier_flags.iter().all(|&f| !f));
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SynthConfig::uniform(3, 20, 0.4, 0.05, 11);
        let (a, _) = generate_planted_partition(&cfg).unwrap();
        let (b, _) = generate_planted_partition(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(generate_planted_partition(&SynthConfig::uniform(2, 1, 0.5, 0.1, 0)).is_err());
        assert!(generate_planted_partition(&SynthConfig::uniform(2, 5, 0.1, 0.1, 0)).is_err());
        assert!(generate_planted_partition(&SynthConfig::uniform(2, 5, 1.5, 0.1, 0)).is_err());
    }

    #[test]
    fn edgeless_community_exhausts_retries() {
        let cfg = SynthConfig::uniform(2, 2, 1e-12, 0.0, 3);
        assert!(matches!(generate_planted_partition(&cfg), Err(DmgdError::Generation(_))));
    }

    #[test]
    fn seeding_flags_exact_count() {
        let cfg = SynthConfig::uniform(2, 50, 0.3, 0.02, 5);
        let (g, truth) = generate_planted_partition(&cfg).unwrap();
        let seeded = seed_outliers(&g, &truth, &SeedingConfig::default()).unwrap();
        assert_eq!(seeded.graph.n_nodes(), 100);
        assert_eq!(seeded.truth.n_outliers(), 5);
        assert_eq!(seeded.truth.labels, truth.labels);
        for &v in &seeded.perturbed {
            assert!(seeded.graph.degree(v) <= g.degree(v));
        }
    }

    #[test]
    fn zero_outliers_is_an_error() {
        let g = Graph::from_edges(10, [(0, 1)]).unwrap();
        let truth = GroundTruth::new(vec![0; 10], vec![false; 10]).unwrap();
        let cfg = SeedingConfig {
            outlier_fraction: 0.01,
            ..SeedingConfig::default()
        };
        assert!(seed_outliers(&g, &truth, &cfg).is_err());
    }

    /// Triangles {0,1,2} and {4,5,6} joined through node 3 (edges 2-3, 3-4).
    fn bridged_triangles() -> Graph {
        Graph::from_edges(7, [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (4, 6), (5, 6)]).unwrap()
    }

    #[test]
    fn candidate_pool_by_hand() {
        let g = bridged_triangles();
        // From node 0: d = [0,1,1,2,3,4,4]; round(0.2*7) = 1 farthest node,
        // the tie between 5 and 6 goes to 5. N(5) = {4,6}, N(0) = {1,2}.
        assert_eq!(farthest_nodes(&g, 0, 0.2).unwrap(), vec![5]);
        assert_eq!(candidate_pool(&g, 0, 0.2, &BTreeSet::new()).unwrap(), vec![1, 2, 4, 6]);
        // From node 3: farthest are 0 and 1 (distance 2) -> pick 0, N(0)={1,2}, N(3)={2,4}.
        assert_eq!(candidate_pool(&g, 3, 0.2, &BTreeSet::new()).unwrap(), vec![1, 2, 4]);
        // Excluded nodes never enter the pool.
        assert_eq!(candidate_pool(&g, 0, 0.2, &BTreeSet::from([4])).unwrap(), vec![1, 2, 6]);
    }

    #[test]
    fn perturbed_node_reaches_other_triangle() {
        let g = bridged_triangles();
        let truth = GroundTruth::new(vec![0, 0, 0, 0, 1, 1, 1], vec![false; 7]).unwrap();
        let mut crossed = 0;
        for seed in 0..20 {
            let cfg = SeedingConfig {
                outlier_fraction: 0.1,
                far_quantile: 0.2,
                rng_seed: seed,
            };
            let seeded = seed_outliers(&g, &truth, &cfg).unwrap();
            assert_eq!(seeded.perturbed.len(), 1);
            let v = seeded.perturbed[0];
            let pool = candidate_pool(&g, v, 0.2, &BTreeSet::from([v])).unwrap();
            let nbrs = seeded.graph.neighbors(v);
            assert!(nbrs.iter().all(|u| pool.contains(u)));
            assert_eq!(nbrs.len(), g.degree(v).min(pool.len()));
            if nbrs.iter().any(|&u| truth.labels[u] != truth.labels[v]) {
                crossed += 1;
            }
        }
        assert!(crossed > 0);
    }

    #[test]
    fn small_pool_shrinks_degree() {
        // K4 with two selected nodes: each pool holds only the other two.
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let truth = GroundTruth::new(vec![0; 4], vec![false; 4]).unwrap();
        let cfg = SeedingConfig {
            outlier_fraction: 0.5,
            far_quantile: 0.2,
            rng_seed: 9,
        };
        let seeded = seed_outliers(&g, &truth, &cfg).unwrap();
        assert_eq!(seeded.shrunk.len(), 2);
        for &(v, before, after) in &seeded.shrunk {
            assert_eq!(before, 3);
            assert!(after >= 1 && after <= 2);
            assert_eq!(seeded.graph.degree(v), after);
        }
    }
}
