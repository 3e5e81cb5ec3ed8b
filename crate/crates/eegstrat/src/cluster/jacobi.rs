//! Cyclic Jacobi eigendecomposition for dense symmetric matrices.

use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix (row-major, n x n).
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues ascending and
/// eigenvector `j` stored as column `j` of the returned row-major matrix,
/// so `vectors[i][j]` is component `i` of eigenvector `j`.
pub fn jacobi_eigh(matrix: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = matrix.len();
    if n == 0 {
        return Err(Error::Invalid("empty matrix".into()));
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Shape(format!(
                "row {i} has length {}, expected {n}",
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index: i * n + j });
            }
            if (v - matrix[j][i]).abs() > SYMMETRY_TOL {
                return Err(Error::Invalid(format!(
                    "matrix not symmetric at ({i}, {j}): {} vs {}",
                    v, matrix[j][i]
                )));
            }
        }
    }

    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off.sqrt() <= 1e-12 * frobenius(matrix).max(1.0) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                // Classic Jacobi rotation zeroing a[p][q].
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p][j];
                    let aqj = a[q][j];
                    a[p][j] = c * apj - s * aqj;
                    a[q][j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[i][p];
                    let viq = v[i][q];
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).expect("finite eigenvalues"));
    let values: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|i| order.iter().map(|&j| v[i][j]).collect())
        .collect();
    Ok((values, vectors))
}

fn frobenius(m: &[Vec<f64>]) -> f64 {
    m.iter()
        .flat_map(|r| r.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn residual(m: &[Vec<f64>], values: &[f64], vectors: &[Vec<f64>]) -> f64 {
        let n = m.len();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let av: f64 = (0..n).map(|k| m[i][k] * vectors[k][j]).sum();
                worst = worst.max((av - values[j] * vectors[i][j]).abs());
            }
        }
        worst
    }

    #[test]
    fn diagonal_matrix_is_its_own_decomposition() {
        let m = vec![
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ];
        let (values, vectors) = jacobi_eigh(&m).unwrap();
        assert_eq!(values, vec![1.0, 2.0, 3.0]);
        assert!(residual(&m, &values, &vectors) < 1e-12);
    }

    #[test]
    fn two_by_two_hand_case() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let m = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let (values, vectors) = jacobi_eigh(&m).unwrap();
        assert!((values[0] - 1.0).abs() < 1e-12);
        assert!((values[1] - 3.0).abs() < 1e-12);
        assert!(residual(&m, &values, &vectors) < 1e-12);
    }

    #[test]
    fn random_symmetric_matrices_satisfy_residual_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [1usize, 2, 5, 12, 25] {
            let mut m = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in i..n {
                    let v: f64 = rng.random_range(-2.0..2.0);
                    m[i][j] = v;
                    m[j][i] = v;
                }
            }
            let (values, vectors) = jacobi_eigh(&m).unwrap();
            let bound = 1e-8 * frobenius(&m).max(1.0);
            assert!(
                residual(&m, &values, &vectors) <= bound,
                "n={n} residual too large"
            );
            for w in values.windows(2) {
                assert!(w[0] <= w[1]);
            }
            // Eigenvectors stay orthonormal.
            for a in 0..n {
                for b in 0..n {
                    let dot: f64 = (0..n).map(|i| vectors[i][a] * vectors[i][b]).sum();
                    let expect = f64::from(u8::from(a == b));
                    assert!((dot - expect).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        let m = vec![vec![1.0, 2.0], vec![0.0, 1.0]];
        assert!(jacobi_eigh(&m).is_err());
    }
}
