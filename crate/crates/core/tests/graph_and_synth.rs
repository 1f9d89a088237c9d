use std::collections::BTreeSet;

use dmgd::graph::{load_edge_list, Graph};
use dmgd::synth::{generate_planted_partition, seed_outliers, SeedingConfig, SynthConfig};
use proptest::prelude::*;

fn edge_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1usize..25).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..80)))
}

proptest! {
    #[test]
    fn construction_invariants((n, raw) in edge_strategy()) {
        let g = Graph::from_edges(n, raw.iter().copied()).unwrap();
        let expected: BTreeSet<(usize, usize)> = raw
            .iter()
            .filter(|(u, v)| u != v)
            .map(|&(u, v)| (u.min(v), u.max(v)))
            .collect();
        prop_assert_eq!(g.n_edges(), expected.len());
        prop_assert_eq!((0..n).map(|i| g.degree(i)).sum::<usize>(), 2 * expected.len());
        for u in 0..n {
            prop_assert!(!g.has_edge(u, u));
            for v in 0..n {
                prop_assert_eq!(g.has_edge(u, v), expected.contains(&(u.min(v), u.max(v))));
            }
            let row = g.adjacency_row(u).unwrap();
            prop_assert_eq!(row.iter().sum::<f64>() as usize, g.degree(u));
        }
    }

    #[test]
    fn edge_list_round_trip((n, raw) in edge_strategy()) {
        let g = Graph::from_edges(n, raw).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        g.write_edge_list(&path).unwrap();
        let back = load_edge_list(&path).unwrap();
        prop_assert_eq!(back.graph, g);
        prop_assert_eq!(back.self_loops_dropped, 0);
        prop_assert_eq!(back.duplicate_edges, 0);
    }

    #[test]
    fn bfs_distances_are_consistent((n, raw) in edge_strategy()) {
        let g = Graph::from_edges(n, raw).unwrap();
        let d = g.bfs_distances(0).unwrap();
        prop_assert_eq!(d[0], 0);
        for &(u, v) in g.edges() {
            if d[u] != usize::MAX || d[v] != usize::MAX {
                prop_assert!(d[u].abs_diff(d[v]) <= 1);
            }
        }
    }
}

#[test]
fn planted_partition_edge_counts_are_binomial() {
    // 3 x 40 nodes: 3 * C(40, 2) intra pairs and 3 * 40 * 40 inter pairs.
    let (p_in, p_out) = (0.3, 0.02);
    let intra_pairs = 3.0 * 40.0 * 39.0 / 2.0;
    let inter_pairs = 3.0 * 40.0 * 40.0;
    for seed in 0..10 {
        let (g, truth) = generate_planted_partition(&SynthConfig::uniform(3, 40, p_in, p_out, seed)).unwrap();
        let intra = g.edges().iter().filter(|&&(u, v)| truth.labels[u] == truth.labels[v]).count() as f64;
        let inter = g.n_edges() as f64 - intra;
        for (count, pairs, p) in [(intra, intra_pairs, p_in), (inter, inter_pairs, p_out)] {
            let mean = pairs * p;
            let sd = (pairs * p * (1.0 - p)).sqrt();
            assert!((count - mean).abs() <= 4.0 * sd, "seed {seed}: {count} vs {mean} +- {sd}");
        }
    }
}

#[test]
fn seeded_outliers_connect_across_communities() {
    let (g, truth) = generate_planted_partition(&SynthConfig::uniform(3, 50, 0.3, 0.02, 1)).unwrap();
    let seeded = seed_outliers(&g, &truth, &SeedingConfig::default()).unwrap();
    assert_eq!(seeded.perturbed.len(), 8);
    assert_eq!(seeded.truth.n_outliers(), 8);
    let mut own_share = 0.0;
    for &v in &seeded.perturbed {
        let nbrs = seeded.graph.neighbors(v);
        if !seeded.shrunk.iter().any(|&(u, _, _)| u == v) {
            assert_eq!(nbrs.len(), g.degree(v));
        }
        own_share += nbrs.iter().filter(|&&u| truth.labels[u] == truth.labels[v]).count() as f64 / nbrs.len() as f64;
    }
    // Unperturbed nodes keep roughly 0.3*49 / (0.3*49 + 0.02*100) of edges inside.
    assert!(own_share / 8.0 < 0.7, "outliers still mostly intra-community: {}", own_share / 8.0);
    let untouched: Vec<_> = (0..150).filter(|v| !seeded.perturbed.contains(v)).collect();
    for &(u, v) in seeded.graph.edges() {
        if untouched.contains(&u) && untouched.contains(&v) {
            assert!(g.has_edge(u, v));
        }
    }
}

#[test]
fn generation_is_reproducible() {
    let cfg = SynthConfig::uniform(2, 30, 0.4, 0.05, 42);
    assert_eq!(generate_planted_partition(&cfg).unwrap(), generate_planted_partition(&cfg).unwrap());
    let seeding = SeedingConfig::default();
    let (g, t) = generate_planted_partition(&cfg).unwrap();
    let a = seed_outliers(&g, &t, &seeding).unwrap();
    let b = seed_outliers(&g, &t, &seeding).unwrap();
    assert_eq!(a.graph, b.graph);
    assert_eq!(a.perturbed, b.perturbed);
}
