//! Diagonal-covariance Gaussian mixture fitted with EM, initialized from
//! k-means, with multiple restarts keeping the best log-likelihood.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kmeans::{kmeans_cluster, KmeansConfig};
use super::{validate_k, ClusterAssignment, PointSet};
use crate::Result;

const VARIANCE_FLOOR: f64 = 1e-6;
const LL_TOL: f64 = 1e-7;
/// Minimum effective points per component before EM halts instead of
/// collapsing a component onto a floored-variance spike around one point.
const MIN_EFFECTIVE_COUNT: f64 = 2.0;

#[derive(Clone, Copy, Debug)]
pub struct GmmConfig {
    pub k: usize,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        Self {
            k: 2,
            max_iters: 200,
            restarts: 5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Per-component diagonal variances, floored at 1e-6.
    pub variances: Vec<Vec<f64>>,
    pub assignment: ClusterAssignment,
    pub log_likelihood: f64,
    /// Mean log-likelihood after each EM iteration of the winning restart.
    pub ll_trace: Vec<f64>,
}

/// log N(x | mu, diag(var)) for one component.
fn log_gauss(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        let d = x[i] - mean[i];
        acc += -0.5 * ((2.0 * std::f64::consts::PI * var[i]).ln() + d * d / var[i]);
    }
    acc
}

fn log_sum_exp(vals: &[f64]) -> f64 {
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

#[derive(Clone)]
struct EmRun {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
    ll: f64,
    trace: Vec<f64>,
}

fn em(points: &PointSet, k: usize, init_labels: &[usize], max_iters: usize) -> EmRun {
    let n = points.len();
    let d = points.dim();
    // M-step from hard init labels.
    let mut resp = vec![vec![0.0f64; k]; n];
    for (i, &l) in init_labels.iter().enumerate() {
        resp[i][l] = 1.0;
    }
    let mut weights = vec![0.0; k];
    let mut means = vec![vec![0.0; d]; k];
    let mut variances = vec![vec![0.0; d]; k];
    let mut trace = Vec::new();
    let mut ll_prev = f64::NEG_INFINITY;

    // The guard only makes sense when every component could hold two points.
    let guard = 2 * k <= n;
    for iter in 0..=max_iters {
        // Halt before a degenerate M-step: a component whose responsibility
        // mass has fallen below two effective points is collapsing onto a
        // near-singleton spike whose floored variance inflates the
        // likelihood without describing structure. Keep the last healthy
        // parameters instead.
        if guard && iter > 0 {
            let min_mass = (0..k)
                .map(|c| (0..n).map(|i| resp[i][c]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            if min_mass < MIN_EFFECTIVE_COUNT {
                break;
            }
        }
        // M-step.
        for c in 0..k {
            let nc: f64 = (0..n).map(|i| resp[i][c]).sum();
            let nc_safe = nc.max(f64::MIN_POSITIVE);
            weights[c] = nc / n as f64;
            for j in 0..d {
                means[c][j] =
                    (0..n).map(|i| resp[i][c] * points.row(i)[j]).sum::<f64>() / nc_safe;
            }
            for j in 0..d {
                let v = (0..n)
                    .map(|i| {
                        let dv = points.row(i)[j] - means[c][j];
                        resp[i][c] * dv * dv
                    })
                    .sum::<f64>()
                    / nc_safe;
                variances[c][j] = v.max(VARIANCE_FLOOR);
            }
        }
        // E-step and log-likelihood.
        let mut ll = 0.0;
        for i in 0..n {
            let logp: Vec<f64> = (0..k)
                .map(|c| weights[c].max(f64::MIN_POSITIVE).ln()
                    + log_gauss(points.row(i), &means[c], &variances[c]))
                .collect();
            let norm = log_sum_exp(&logp);
            ll += norm;
            for c in 0..k {
                resp[i][c] = (logp[c] - norm).exp();
            }
        }
        let mean_ll = ll / n as f64;
        trace.push(mean_ll);
        if iter > 0 && mean_ll - ll_prev < LL_TOL {
            ll_prev = mean_ll;
            break;
        }
        ll_prev = mean_ll;
    }
    EmRun {
        weights,
        means,
        variances,
        ll: ll_prev,
        trace,
    }
}

/// Fit a diagonal GMM; labels are the responsibility argmax.
pub fn gmm_cluster(points: &PointSet, cfg: &GmmConfig) -> Result<GmmModel> {
    validate_k(points, cfg.k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = points.len() as f64;
    let mut best: Option<EmRun> = None;
    let mut best_healthy: Option<EmRun> = None;
    for _ in 0..cfg.restarts.max(1) {
        let seed = rand::RngCore::next_u64(&mut rng);
        let km = kmeans_cluster(
            points,
            &KmeansConfig {
                k: cfg.k,
                restarts: 1,
                max_iters: 100,
                seed,
            },
        )?;
        let run = em(points, cfg.k, &km.assignment.labels, cfg.max_iters);
        // A component holding fewer than two effective points is a
        // floored-variance spike whose likelihood is inflated, not a real
        // mode; prefer restarts without one when the data allows it.
        let healthy = run
            .weights
            .iter()
            .all(|&w| w * n >= MIN_EFFECTIVE_COUNT);
        if healthy && best_healthy.as_ref().is_none_or(|b| run.ll > b.ll) {
            best_healthy = Some(run.clone());
        }
        if best.as_ref().is_none_or(|b| run.ll > b.ll) {
            best = Some(run);
        }
    }
    let run = best_healthy
        .or(best)
        .expect("at least one restart");
    let labels: Vec<usize> = points
        .rows()
        .iter()
        .map(|x| {
            (0..cfg.k)
                .max_by(|&a, &b| {
                    let la = run.weights[a].max(f64::MIN_POSITIVE).ln()
                        + log_gauss(x, &run.means[a], &run.variances[a]);
                    let lb = run.weights[b].max(f64::MIN_POSITIVE).ln()
                        + log_gauss(x, &run.means[b], &run.variances[b]);
                    la.partial_cmp(&lb).expect("finite log density")
                })
                .expect("k >= 1")
        })
        .collect();
    Ok(GmmModel {
        weights: run.weights,
        means: run.means,
        variances: run.variances,
        assignment: ClusterAssignment::new(labels, cfg.k)?,
        log_likelihood: run.ll,
        ll_trace: run.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(seed: u64, sep: f64) -> (PointSet, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for c in 0..2 {
            for _ in 0..15 {
                rows.push(vec![
                    c as f64 * sep + noise.sample(&mut rng),
                    -(c as f64) * sep + noise.sample(&mut rng),
                ]);
                truth.push(c);
            }
        }
        (PointSet::new(rows).unwrap(), truth)
    }

    #[test]
    fn k_equals_one_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let points = PointSet::new(rows).unwrap();
        let model = gmm_cluster(&points, &GmmConfig { k: 1, ..GmmConfig::default() }).unwrap();
        let n = points.len() as f64;
        for j in 0..3 {
            let mean: f64 = points.rows().iter().map(|r| r[j]).sum::<f64>() / n;
            let var: f64 = points
                .rows()
                .iter()
                .map(|r| (r[j] - mean).powi(2))
                .sum::<f64>()
                / n;
            assert!((model.means[0][j] - mean).abs() < 1e-9);
            assert!((model.variances[0][j] - var.max(1e-6)).abs() < 1e-9);
        }
        assert!((model.weights[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_likelihood_trace_is_monotone() {
        let (points, _) = blobs(1, 4.0);
        let model = gmm_cluster(&points, &GmmConfig::default()).unwrap();
        for w in model.ll_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "ll decreased: {w:?}");
        }
    }

    #[test]
    fn separates_well_separated_blobs() {
        let (points, truth) = blobs(7, 8.0);
        let model = gmm_cluster(&points, &GmmConfig::default()).unwrap();
        let l = &model.assignment.labels;
        let direct = l.iter().zip(&truth).all(|(a, b)| a == b);
        let swapped = l.iter().zip(&truth).all(|(a, b)| 1 - a == *b);
        assert!(direct || swapped);
    }

    #[test]
    fn variances_respect_the_floor() {
        // Identical points would give zero variance without the floor.
        let rows = vec![vec![1.0, 2.0]; 10];
        let points = PointSet::new(rows).unwrap();
        let model = gmm_cluster(&points, &GmmConfig { k: 1, ..GmmConfig::default() }).unwrap();
        assert!(model.variances[0].iter().all(|&v| v >= 1e-6));
        assert!(model.log_likelihood.is_finite());
    }

    #[test]
    fn weights_sum_to_one() {
        let (points, _) = blobs(11, 3.0);
        let model = gmm_cluster(&points, &GmmConfig::default()).unwrap();
        let total: f64 = model.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (points, _) = blobs(5, 2.0);
        let a = gmm_cluster(&points, &GmmConfig::default()).unwrap();
        let b = gmm_cluster(&points, &GmmConfig::default()).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.means, b.means);
    }
}
