//! Spectral clustering on an RBF affinity with the symmetric normalized
//! Laplacian, row-normalized spectral embedding, and k-means labeling.

use super::jacobi::jacobi_eigh;
use super::kmeans::{kmeans_cluster, KmeansConfig};
use super::{squared_distance, validate_k, ClusterAssignment, PointSet};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct SpectralConfig {
    pub k: usize,
    pub seed: u64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self { k: 2, seed: 0 }
    }
}

/// Median of the nonzero pairwise Euclidean distances; the RBF bandwidth.
fn median_pairwise_distance(points: &PointSet) -> f64 {
    let n = points.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(squared_distance(points.row(i), points.row(j)).sqrt());
        }
    }
    dists.retain(|&d| d > 0.0);
    if dists.is_empty() {
        return 0.0;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let m = dists.len();
    if m % 2 == 1 {
        dists[m / 2]
    } else {
        (dists[m / 2 - 1] + dists[m / 2]) / 2.0
    }
}

/// Symmetric normalized Laplacian L = I - D^{-1/2} A D^{-1/2} of the RBF
/// affinity A_ij = exp(-d_ij^2 / (2 sigma^2)), A_ii = 0.
pub fn normalized_laplacian(points: &PointSet) -> Result<Vec<Vec<f64>>> {
    let n = points.len();
    let sigma = median_pairwise_distance(points);
    if sigma <= 0.0 {
        return Err(Error::Invalid(
            "all points coincide; spectral affinity is degenerate".into(),
        ));
    }
    let mut affinity = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let a = (-squared_distance(points.row(i), points.row(j)) / (2.0 * sigma * sigma))
                .exp();
            affinity[i][j] = a;
            affinity[j][i] = a;
        }
    }
    let mut degree = vec![0.0f64; n];
    for (i, row) in affinity.iter().enumerate() {
        degree[i] = row.iter().sum();
        if degree[i] <= 0.0 {
            return Err(Error::Invalid(format!(
                "point {i} has zero affinity to every other point"
            )));
        }
    }
    let mut lap = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let norm = affinity[i][j] / (degree[i] * degree[j]).sqrt();
            lap[i][j] = f64::from(u8::from(i == j)) - norm;
        }
    }
    Ok(lap)
}

/// Embed on the k smallest Laplacian eigenvectors, row-normalize, k-means.
pub fn spectral_cluster(points: &PointSet, cfg: &SpectralConfig) -> Result<ClusterAssignment> {
    validate_k(points, cfg.k)?;
    if points.len() < 2 {
        return Err(Error::Invalid("spectral clustering needs >= 2 points".into()));
    }
    let lap = normalized_laplacian(points)?;
    let (_, vectors) = jacobi_eigh(&lap)?;
    let n = points.len();
    // Columns 0..k are the k smallest-eigenvalue eigenvectors.
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..cfg.k).map(|j| vectors[i][j]).collect())
        .collect();
    for row in &mut rows {
        let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }
    let embedded = PointSet::new(rows)?;
    let result = kmeans_cluster(
        &embedded,
        &KmeansConfig {
            k: cfg.k,
            seed: cfg.seed,
            ..KmeansConfig::default()
        },
    )?;
    Ok(result.assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn laplacian_is_symmetric_and_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let points = PointSet::new(rows).unwrap();
        let lap = normalized_laplacian(&points).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                assert!((lap[i][j] - lap[j][i]).abs() < 1e-12);
            }
        }
        let (values, _) = jacobi_eigh(&lap).unwrap();
        assert!(values[0] > -1e-9, "smallest eigenvalue {}", values[0]);
        // The constant-in-D^{1/2} direction gives eigenvalue ~ 0.
        assert!(values[0].abs() < 1e-8);
    }

    #[test]
    fn disconnected_blocks_give_two_near_zero_eigenvalues() {
        // Two far-apart tight groups: cross affinities underflow to ~0, so
        // the Laplacian has a near-double eigenvalue at zero.
        // Unbalanced sizes keep the median pairwise distance within-group,
        // so sigma is tiny and cross-block affinities underflow.
        let mut rows = Vec::new();
        for i in 0..10 {
            rows.push(vec![i as f64 * 0.01, 0.0]);
        }
        for i in 0..4 {
            rows.push(vec![1000.0 + i as f64 * 0.01, 0.0]);
        }
        let points = PointSet::new(rows).unwrap();
        let lap = normalized_laplacian(&points).unwrap();
        let (values, _) = jacobi_eigh(&lap).unwrap();
        assert!(values[0].abs() < 1e-6);
        assert!(values[1].abs() < 1e-6);
        assert!(values[2] > 1e-3);
    }

    #[test]
    fn separates_two_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for c in 0..2 {
            for _ in 0..12 {
                rows.push(vec![
                    c as f64 * 15.0 + noise.sample(&mut rng),
                    noise.sample(&mut rng),
                ]);
                truth.push(c);
            }
        }
        let points = PointSet::new(rows).unwrap();
        let a = spectral_cluster(&points, &SpectralConfig::default()).unwrap();
        let direct = a.labels.iter().zip(&truth).all(|(x, y)| x == y);
        let swapped = a.labels.iter().zip(&truth).all(|(x, y)| 1 - x == *y);
        assert!(direct || swapped);
    }

    #[test]
    fn coincident_points_are_rejected_with_a_clear_error() {
        let points = PointSet::new(vec![vec![1.0, 1.0]; 5]).unwrap();
        let err = spectral_cluster(&points, &SpectralConfig::default()).unwrap_err();
        assert!(err.to_string().contains("coincide"));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let points = PointSet::new(rows).unwrap();
        let a = spectral_cluster(&points, &SpectralConfig::default()).unwrap();
        let b = spectral_cluster(&points, &SpectralConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
