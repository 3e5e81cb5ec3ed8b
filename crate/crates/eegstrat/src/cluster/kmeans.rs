//! K-means with k-means++ seeding, multiple restarts, and empty-cluster
//! repair.
//!
//! Before any randomness is consumed, points are put in a canonical
//! lexicographic order; sampling and tie-breaking operate on that order, so
//! the clustering is invariant to the input permutation of the points.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{squared_distance, validate_k, ClusterAssignment, PointSet};
use crate::Result;

#[derive(Clone, Copy, Debug)]
pub struct KmeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self {
            k: 2,
            restarts: 10,
            max_iters: 300,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KmeansResult {
    pub assignment: ClusterAssignment,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to assigned centroids.
    pub inertia: f64,
    /// Post-update inertia after each Lloyd iteration of the winning
    /// restart; non-increasing by construction.
    pub inertia_trace: Vec<f64>,
}

fn lexicographic_order(points: &PointSet) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points
            .row(a)
            .partial_cmp(points.row(b))
            .expect("finite coordinates")
            .then(a.cmp(&b))
    });
    order
}

/// k-means++ over the canonical order. Ties in the D^2 sampling cumulative
/// sums resolve to the earliest canonical point.
fn plus_plus_init(
    points: &PointSet,
    canon: &[usize],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let n = canon.len();
    let first = canon[rng.random_range(0..n)];
    let mut centroids = vec![points.row(first).to_vec()];
    let mut d2: Vec<f64> = canon
        .iter()
        .map(|&i| squared_distance(points.row(i), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let chosen = if total <= 0.0 {
            // All remaining points coincide with a centroid; take the first
            // canonical point (duplicates are repaired after assignment).
            canon[0]
        } else {
            let target = rng.random_range(0.0..total);
            let mut acc = 0.0;
            let mut pick = canon[n - 1];
            for (pos, &i) in canon.iter().enumerate() {
                acc += d2[pos];
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        };
        let c = points.row(chosen).to_vec();
        for (pos, &i) in canon.iter().enumerate() {
            d2[pos] = d2[pos].min(squared_distance(points.row(i), &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(points: &PointSet, canon: &[usize], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut labels = vec![0usize; points.len()];
    let mut inertia = 0.0;
    for &i in canon {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let d = squared_distance(points.row(i), centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels[i] = best;
        inertia += best_d;
    }
    (labels, inertia)
}

/// Empty clusters grab the canonical-first point among those farthest from
/// their current centroid.
fn repair_empty(
    points: &PointSet,
    canon: &[usize],
    centroids: &[Vec<f64>],
    labels: &mut [usize],
) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut worst = canon[0];
        let mut worst_d = -1.0;
        for &i in canon {
            if sizes[labels[i]] <= 1 {
                continue;
            }
            let d = squared_distance(points.row(i), &centroids[labels[i]]);
            if d > worst_d {
                worst_d = d;
                worst = i;
            }
        }
        labels[worst] = empty;
    }
}

fn update_centroids(points: &PointSet, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = points.dim();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, &v) in sums[l].iter_mut().zip(points.row(i)) {
            *s += v;
        }
    }
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        if count > 0 {
            for s in sum.iter_mut() {
                *s /= count as f64;
            }
        }
    }
    sums
}

fn single_run(
    points: &PointSet,
    canon: &[usize],
    cfg: &KmeansConfig,
    rng: &mut ChaCha8Rng,
) -> KmeansResult {
    let mut centroids = plus_plus_init(points, canon, cfg.k, rng);
    let mut labels;
    let mut inertia = f64::INFINITY;
    let mut trace = Vec::new();
    for _ in 0..cfg.max_iters {
        let (mut new_labels, _) = assign(points, canon, &centroids);
        repair_empty(points, canon, &centroids, &mut new_labels);
        centroids = update_centroids(points, &new_labels, cfg.k);
        let (_, new_inertia) = assign(points, canon, &centroids);
        trace.push(new_inertia);
        labels = new_labels;
        if inertia - new_inertia <= 1e-12 * inertia.max(1.0) {
            inertia = new_inertia;
            return KmeansResult {
                assignment: ClusterAssignment::new(labels, cfg.k).expect("valid labels"),
                centroids,
                inertia,
                inertia_trace: trace,
            };
        }
        inertia = new_inertia;
    }
    let (final_labels, final_inertia) = assign(points, canon, &centroids);
    KmeansResult {
        assignment: ClusterAssignment::new(final_labels, cfg.k).expect("valid labels"),
        centroids,
        inertia: final_inertia,
        inertia_trace: trace,
    }
}

/// Best-of-restarts k-means. Deterministic given `(points as a set, cfg)`.
///
/// ```
/// use eegstrat::cluster::{kmeans_cluster, KmeansConfig, PointSet};
///
/// let points = PointSet::new(vec![
///     vec![0.0, 0.0], vec![0.2, 0.1], vec![9.0, 9.0], vec![9.1, 8.8],
/// ])?;
/// let result = kmeans_cluster(&points, &KmeansConfig::default())?;
/// assert_eq!(result.assignment.labels[0], result.assignment.labels[1]);
/// assert_ne!(result.assignment.labels[0], result.assignment.labels[2]);
/// # Ok::<(), eegstrat::Error>(())
/// ```
pub fn kmeans_cluster(points: &PointSet, cfg: &KmeansConfig) -> Result<KmeansResult> {
    validate_k(points, cfg.k)?;
    let canon = lexicographic_order(points);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<KmeansResult> = None;
    for _ in 0..cfg.restarts.max(1) {
        let run = single_run(points, &canon, cfg, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand_distr::{Distribution, Normal};

    fn two_blobs(n_per: usize, sep: f64, seed: u64) -> (PointSet, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for c in 0..2 {
            let center = if c == 0 { 0.0 } else { sep };
            for _ in 0..n_per {
                rows.push(vec![
                    center + noise.sample(&mut rng),
                    center + noise.sample(&mut rng),
                ]);
                truth.push(c);
            }
        }
        (PointSet::new(rows).unwrap(), truth)
    }

    fn agrees_up_to_swap(labels: &[usize], truth: &[usize]) -> bool {
        let direct = labels.iter().zip(truth).all(|(a, b)| a == b);
        let swapped = labels.iter().zip(truth).all(|(a, b)| 1 - a == *b);
        direct || swapped
    }

    #[test]
    fn separates_well_separated_blobs() {
        let (points, truth) = two_blobs(20, 20.0, 1);
        let result = kmeans_cluster(&points, &KmeansConfig::default()).unwrap();
        assert!(agrees_up_to_swap(&result.assignment.labels, &truth));
    }

    #[test]
    fn permutation_invariant() {
        let (points, _) = two_blobs(15, 8.0, 3);
        let base = kmeans_cluster(&points, &KmeansConfig::default()).unwrap();
        let mut perm: Vec<usize> = (0..points.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        perm.shuffle(&mut rng);
        let shuffled_rows: Vec<Vec<f64>> =
            perm.iter().map(|&i| points.row(i).to_vec()).collect();
        let shuffled = PointSet::new(shuffled_rows).unwrap();
        let other = kmeans_cluster(&shuffled, &KmeansConfig::default()).unwrap();
        // Same partition of the underlying points, up to label swap.
        let relabeled: Vec<usize> = (0..points.len())
            .map(|j| other.assignment.labels[perm.iter().position(|&p| p == j).unwrap()])
            .collect();
        let truth = base.assignment.labels.clone();
        assert!(
            relabeled == truth || relabeled.iter().zip(&truth).all(|(a, b)| 1 - a == *b),
            "partition changed under permutation"
        );
    }

    #[test]
    fn no_empty_clusters_even_with_duplicates() {
        let rows = vec![vec![0.0, 0.0]; 6];
        let points = PointSet::new(rows).unwrap();
        let result = kmeans_cluster(
            &points,
            &KmeansConfig {
                k: 3,
                ..KmeansConfig::default()
            },
        )
        .unwrap();
        assert!(result.assignment.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn inertia_is_non_negative_and_zero_when_k_equals_n() {
        let (points, _) = two_blobs(4, 5.0, 7);
        let result = kmeans_cluster(
            &points,
            &KmeansConfig {
                k: points.len(),
                ..KmeansConfig::default()
            },
        )
        .unwrap();
        assert!(result.inertia.abs() < 1e-9);
    }

    #[test]
    fn rejects_invalid_k() {
        let (points, _) = two_blobs(3, 5.0, 7);
        assert!(kmeans_cluster(&points, &KmeansConfig { k: 0, ..KmeansConfig::default() }).is_err());
        assert!(
            kmeans_cluster(&points, &KmeansConfig { k: 7, ..KmeansConfig::default() }).is_err()
        );
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (points, _) = two_blobs(10, 3.0, 4);
        let a = kmeans_cluster(&points, &KmeansConfig::default()).unwrap();
        let b = kmeans_cluster(&points, &KmeansConfig::default()).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.centroids, b.centroids);
    }
}
