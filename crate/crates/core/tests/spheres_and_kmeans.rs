use dmgd::eval::clustering_accuracy;
use dmgd::spheres::{slack_and_category, NodeCategory, QpOptions, SphereState};
use dmgd::trainer::kmeans_pp_init;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn blobs(rng: &mut ChaCha8Rng, centers: &[[f64; 2]], per: usize, sd: f64) -> (Array2<f64>, Vec<usize>) {
    let n = centers.len() * per;
    let labels: Vec<usize> = (0..n).map(|i| i / per).collect();
    let mut z = Array2::zeros((n, 2));
    for i in 0..n {
        for j in 0..2 {
            let noise: f64 = StandardNormal.sample(rng);
            z[[i, j]] = centers[labels[i]][j] + sd * noise;
        }
    }
    (z, labels)
}

#[test]
fn kmeans_recovers_separated_blobs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (z, labels) = blobs(&mut rng, &[[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]], 30, 0.5);
    for seed in 0..5 {
        let km = kmeans_pp_init(&z, 4, seed).unwrap();
        assert_eq!(clustering_accuracy(&km.labels, &labels).unwrap(), 1.0, "seed {seed}");
        // Inertia against a direct recomputation from the returned centers.
        let inertia: f64 = (0..z.nrows())
            .map(|i| (0..2).map(|j| (z[[i, j]] - km.centers[[km.labels[i], j]]).powi(2)).sum::<f64>())
            .sum();
        assert!((inertia - km.inertia).abs() <= 1e-9 * inertia.max(1.0));
    }
}

#[test]
fn strict_support_vectors_are_equidistant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.gen_range(3..12);
        let z = Array2::from_shape_simple_fn((n, 1), || rng.gen_range(-3.0..3.0));
        let alpha = rng.gen_range(0.4..1.0);
        let state = SphereState::fit(&z, vec![0; n], 1, alpha, QpOptions::default(), None, 1e-6).unwrap();
        let c = state.centers[[0, 0]];
        let d: Vec<f64> = (0..n)
            .filter(|&i| state.is_strict_support(i))
            .map(|i| (z[[i, 0]] - c).powi(2))
            .collect();
        for x in &d {
            assert!((x - state.radii_sq[0]).abs() <= 1e-4, "{d:?} vs {}", state.radii_sq[0]);
        }
    }
}

#[test]
fn categories_partition_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (z, labels) = blobs(&mut rng, &[[0.0, 0.0], [5.0, 5.0]], 25, 1.0);
    let state = SphereState::fit(&z, labels, 2, 0.1, QpOptions::default(), None, 1e-6).unwrap();
    let (slacks, categories) = slack_and_category(&z, &state.centers, &state.radii_sq, 1e-6);
    for i in 0..z.nrows() {
        let min_excess = (0..2)
            .map(|k| (0..2).map(|j| (z[[i, j]] - state.centers[[k, j]]).powi(2)).sum::<f64>() - state.radii_sq[k])
            .fold(f64::INFINITY, f64::min);
        assert!((slacks[i] - min_excess.max(0.0)).abs() < 1e-12);
        let expected = if min_excess > 1e-6 {
            NodeCategory::Outlier
        } else if min_excess >= -1e-6 {
            NodeCategory::Boundary
        } else {
            NodeCategory::Regular
        };
        assert_eq!(categories[i], expected, "node {i} excess {min_excess}");
    }
}
