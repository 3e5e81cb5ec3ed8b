//! Patient-level clustering: k-means, Ward agglomeration, diagonal GMM and
//! spectral clustering, plus the shared preprocessing (z-score, PCA) and a
//! dense symmetric eigensolver they rely on.

mod gmm;
mod jacobi;
mod kmeans;
mod preprocess;
mod spectral;
mod ward;

pub use gmm::{gmm_cluster, GmmConfig, GmmModel};
pub use jacobi::jacobi_eigh;
pub use kmeans::{kmeans_cluster, KmeansConfig, KmeansResult};
pub use preprocess::{preprocess, standardize, PreprocessConfig, Preprocessed};
pub use spectral::{normalized_laplacian, spectral_cluster, SpectralConfig};
pub use ward::{ward_cluster, WardConfig};

use crate::{Error, Result};

/// Row-major point matrix with validated, finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    rows: Vec<Vec<f64>>,
    dim: usize,
}

impl PointSet {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = match rows.first() {
            Some(r) => r.len(),
            None => return Err(Error::Invalid("empty point set".into())),
        };
        if dim == 0 {
            return Err(Error::Invalid("zero-dimensional points".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::Shape(format!(
                    "row {i} has dimension {}, expected {dim}",
                    r.len()
                )));
            }
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index: i * dim + j });
            }
        }
        Ok(Self { rows, dim })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }
}

/// Per-point cluster labels in `0..k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("k must be positive".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::Invalid(format!("label {bad} out of range for k={k}")));
        }
        Ok(Self { labels, k })
    }

    /// Cluster sizes indexed by label.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn validate_k(points: &PointSet, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Invalid("k must be positive".into()));
    }
    if k > points.len() {
        return Err(Error::Invalid(format!(
            "k={k} exceeds number of points {}",
            points.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_set_validates_shape_and_finiteness() {
        assert!(PointSet::new(vec![]).is_err());
        assert!(PointSet::new(vec![vec![]]).is_err());
        assert!(PointSet::new(vec![vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(PointSet::new(vec![vec![1.0, f64::NAN]]).is_err());
        let p = PointSet::new(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.dim(), 2);
    }

    #[test]
    fn assignment_sizes_and_bounds() {
        assert!(ClusterAssignment::new(vec![0, 2], 2).is_err());
        let a = ClusterAssignment::new(vec![0, 1, 0, 0], 2).unwrap();
        assert_eq!(a.sizes(), vec![3, 1]);
    }

    #[test]
    fn squared_distance_hand_case() {
        assert_eq!(squared_distance(&[0.0, 3.0], &[4.0, 0.0]), 25.0);
    }
}
