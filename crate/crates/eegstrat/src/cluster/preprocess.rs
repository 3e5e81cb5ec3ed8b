//! Shared clustering preprocessing: per-feature z-scoring and PCA.
//!
//! When the feature dimension exceeds the number of points the principal
//! axes are recovered from the n x n Gram matrix instead of the d x d
//! covariance, which keeps the eigenproblem small for wide embeddings.

use super::jacobi::jacobi_eigh;
use super::PointSet;
use crate::Result;

const ZERO_VARIANCE_TOL: f64 = 1e-12;
/// Components with eigenvalue below this fraction of the largest are
/// treated as numerical rank deficiency and dropped.
const RANK_REL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug)]
pub struct PreprocessConfig {
    /// Upper bound on the number of principal components kept.
    pub target_dim: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { target_dim: 10 }
    }
}

#[derive(Clone, Debug)]
pub struct Preprocessed {
    pub points: PointSet,
    /// Variance captured by each kept component, descending.
    pub explained_variance: Vec<f64>,
}

/// Per-feature z-score; zero-variance features map to exactly zero.
pub fn standardize(points: &PointSet) -> Result<PointSet> {
    let n = points.len() as f64;
    let d = points.dim();
    let mut mean = vec![0.0; d];
    for row in points.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; d];
    for row in points.rows() {
        for j in 0..d {
            let dv = row[j] - mean[j];
            var[j] += dv * dv;
        }
    }
    for v in &mut var {
        *v /= n;
    }
    let rows: Vec<Vec<f64>> = points
        .rows()
        .iter()
        .map(|row| {
            (0..d)
                .map(|j| {
                    if var[j] <= ZERO_VARIANCE_TOL {
                        0.0
                    } else {
                        (row[j] - mean[j]) / var[j].sqrt()
                    }
                })
                .collect()
        })
        .collect();
    PointSet::new(rows)
}

/// Z-score then project onto the leading principal components.
///
/// The kept dimension is `min(target_dim, numerical rank)`. Each component
/// is sign-fixed so its largest-magnitude coordinate is positive, making
/// the output independent of eigensolver sign choices.
pub fn preprocess(points: &PointSet, cfg: &PreprocessConfig) -> Result<Preprocessed> {
    let z = standardize(points)?;
    let n = z.len();
    let d = z.dim();

    // Eigenvectors of the scatter in whichever space is smaller.
    let (scores, eigenvalues) = if d > n {
        gram_pca(&z)?
    } else {
        covariance_pca(&z)?
    };

    let top = eigenvalues.first().copied().unwrap_or(0.0);
    let rank = eigenvalues
        .iter()
        .filter(|&&l| l > RANK_REL_TOL * top.max(1.0))
        .count();
    let keep = cfg.target_dim.min(rank).max(1);

    let mut rows: Vec<Vec<f64>> = scores
        .iter()
        .map(|s| s[..keep].to_vec())
        .collect();
    // Sign convention: largest-|coordinate| entry of each component positive.
    for j in 0..keep {
        let mut best = 0usize;
        for i in 1..n {
            if rows[i][j].abs() > rows[best][j].abs() {
                best = i;
            }
        }
        if rows[best][j] < 0.0 {
            for row in &mut rows {
                row[j] = -row[j];
            }
        }
    }
    Ok(Preprocessed {
        points: PointSet::new(rows)?,
        explained_variance: eigenvalues[..keep].to_vec(),
    })
}

/// PCA via the d x d covariance matrix; returns (scores, eigenvalues desc).
fn covariance_pca(z: &PointSet) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = z.len();
    let d = z.dim();
    let mut cov = vec![vec![0.0; d]; d];
    for row in z.rows() {
        for i in 0..d {
            for j in i..d {
                cov[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= n as f64;
            cov[j][i] = cov[i][j];
        }
    }
    let (values, vectors) = jacobi_eigh(&cov)?;
    // Ascending from the solver; flip to descending.
    let order: Vec<usize> = (0..d).rev().collect();
    let eigenvalues: Vec<f64> = order.iter().map(|&j| values[j].max(0.0)).collect();
    let scores: Vec<Vec<f64>> = z
        .rows()
        .iter()
        .map(|row| {
            order
                .iter()
                .map(|&j| (0..d).map(|i| row[i] * vectors[i][j]).sum())
                .collect()
        })
        .collect();
    Ok((scores, eigenvalues))
}

/// PCA via the n x n Gram matrix G = Z Z^T / n. Nonzero eigenvalues match
/// the covariance spectrum and scores are sqrt(n * lambda) * u.
fn gram_pca(z: &PointSet) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = z.len();
    let mut gram = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let dot: f64 = z.row(i).iter().zip(z.row(j)).map(|(a, b)| a * b).sum();
            gram[i][j] = dot / n as f64;
            gram[j][i] = gram[i][j];
        }
    }
    let (values, vectors) = jacobi_eigh(&gram)?;
    let order: Vec<usize> = (0..n).rev().collect();
    let eigenvalues: Vec<f64> = order.iter().map(|&j| values[j].max(0.0)).collect();
    let scores: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            order
                .iter()
                .enumerate()
                .map(|(rank, &j)| (n as f64 * eigenvalues[rank]).sqrt() * vectors[i][j])
                .collect()
        })
        .collect();
    Ok((scores, eigenvalues))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn standardize_zero_mean_unit_variance() {
        let p = PointSet::new(vec![
            vec![1.0, 10.0, 5.0],
            vec![3.0, 30.0, 5.0],
            vec![5.0, 50.0, 5.0],
        ])
        .unwrap();
        let z = standardize(&p).unwrap();
        for j in 0..3 {
            let mean: f64 = z.rows().iter().map(|r| r[j]).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-12);
        }
        // Constant third feature maps to zero, not NaN.
        assert!(z.rows().iter().all(|r| r[2] == 0.0));
        let var0: f64 = z.rows().iter().map(|r| r[0] * r[0]).sum::<f64>() / 3.0;
        assert!((var0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pca_keeps_pairwise_distances_at_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let p = PointSet::new(rows).unwrap();
        let z = standardize(&p).unwrap();
        let out = preprocess(&p, &PreprocessConfig { target_dim: 4 }).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let dz = super::super::squared_distance(z.row(i), z.row(j));
                let dp = super::super::squared_distance(out.points.row(i), out.points.row(j));
                assert!((dz - dp).abs() < 1e-8, "distance distorted at ({i}, {j})");
            }
        }
    }

    #[test]
    fn gram_and_covariance_paths_agree() {
        // 6 points in 10-d forces the Gram path; re-run the covariance path
        // directly and compare kept scores up to the sign convention both
        // paths share.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..10).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let p = PointSet::new(rows).unwrap();
        let z = standardize(&p).unwrap();
        let cfg = PreprocessConfig { target_dim: 3 };
        let via_gram = preprocess(&p, &cfg).unwrap();
        assert!(p.dim() > p.len());
        let (scores, values) = covariance_pca(&z).unwrap();
        for (a, b) in via_gram.explained_variance.iter().zip(&values) {
            assert!((a - b).abs() < 1e-8);
        }
        // Compare after applying the same sign fix to the covariance scores.
        let keep = via_gram.points.dim();
        let mut cov_rows: Vec<Vec<f64>> = scores.iter().map(|s| s[..keep].to_vec()).collect();
        for j in 0..keep {
            let best = (0..6)
                .max_by(|&a, &b| {
                    cov_rows[a][j]
                        .abs()
                        .partial_cmp(&cov_rows[b][j].abs())
                        .unwrap()
                })
                .unwrap();
            if cov_rows[best][j] < 0.0 {
                for row in &mut cov_rows {
                    row[j] = -row[j];
                }
            }
        }
        for i in 0..6 {
            for j in 0..keep {
                assert!(
                    (via_gram.points.row(i)[j] - cov_rows[i][j]).abs() < 1e-7,
                    "score mismatch at ({i}, {j})"
                );
            }
        }
    }

    #[test]
    fn rank_deficient_data_drops_null_components() {
        // Points on a line in 5-d: rank 1 after centering.
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| (0..5).map(|j| (i as f64) * (j as f64 + 1.0)).collect())
            .collect();
        let p = PointSet::new(rows).unwrap();
        let out = preprocess(&p, &PreprocessConfig { target_dim: 5 }).unwrap();
        assert_eq!(out.points.dim(), 1);
    }

    #[test]
    fn explained_variance_is_descending() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let p = PointSet::new(rows).unwrap();
        let out = preprocess(&p, &PreprocessConfig { target_dim: 6 }).unwrap();
        for w in out.explained_variance.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }
}
