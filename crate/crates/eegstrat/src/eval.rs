//! Evaluation: best-permutation clustering accuracy against known patient
//! labels, and the four-algorithm comparison report.

use serde::{Deserialize, Serialize};

use crate::cluster::{
    gmm_cluster, kmeans_cluster, preprocess, spectral_cluster, standardize, ward_cluster,
    ClusterAssignment, GmmConfig, KmeansConfig, PointSet, PreprocessConfig, SpectralConfig,
    WardConfig,
};
use crate::{Error, Result};

/// Accuracy under the best bijection between cluster ids and label values.
///
/// The maximum is taken over all k! label permutations, which is exact and
/// fine for the small k used here (the pipeline runs k = 2).
///
/// ```
/// use eegstrat::cluster::ClusterAssignment;
/// use eegstrat::eval::clustering_accuracy;
///
/// // Swapped cluster ids still score 1.0.
/// let a = ClusterAssignment::new(vec![1, 1, 0, 0], 2)?;
/// assert_eq!(clustering_accuracy(&a, &[0, 0, 1, 1])?, 1.0);
/// # Ok::<(), eegstrat::Error>(())
/// ```
pub fn clustering_accuracy(assignment: &ClusterAssignment, truth: &[usize]) -> Result<f64> {
    if assignment.labels.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} cluster labels vs {} truth labels",
            assignment.labels.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Invalid("empty label set".into()));
    }
    let k = assignment.k;
    if let Some(&bad) = truth.iter().find(|&&t| t >= k) {
        return Err(Error::Invalid(format!(
            "truth label {bad} out of range for k={k}"
        )));
    }
    // Confusion counts, then maximize the trace over permutations.
    let mut counts = vec![vec![0usize; k]; k];
    for (&c, &t) in assignment.labels.iter().zip(truth) {
        counts[c][t] += 1;
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0usize;
    permute(&mut perm, 0, &mut |p| {
        let hits: usize = (0..k).map(|c| counts[c][p[c]]).sum();
        best = best.max(hits);
    });
    Ok(best as f64 / truth.len() as f64)
}

fn permute(perm: &mut Vec<usize>, i: usize, visit: &mut impl FnMut(&[usize])) {
    if i == perm.len() {
        visit(perm);
        return;
    }
    for j in i..perm.len() {
        perm.swap(i, j);
        permute(perm, i + 1, visit);
        perm.swap(i, j);
    }
}

/// Cluster sizes in descending order.
pub fn cluster_balance(assignment: &ClusterAssignment) -> Vec<usize> {
    let mut sizes = assignment.sizes();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// One algorithm's scorecard.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub accuracy: f64,
    /// Exact count behind the accuracy: correct / total.
    pub correct: usize,
    pub total: usize,
    pub cluster_sizes: Vec<usize>,
    pub labels: Vec<usize>,
}

/// All four algorithms on one embedding matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StratificationReport {
    pub n_patients: usize,
    pub embedding_dim: usize,
    pub methods: Vec<MethodResult>,
}

impl StratificationReport {
    pub fn method(&self, name: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == name)
    }
}

/// Run k-means, Ward, diagonal GMM and spectral clustering (k = 2) on the
/// patient embeddings and score each against the ground-truth labels.
///
/// K-means and Ward see z-scored features; GMM and spectral see the PCA
/// projection (at most 10 components), which keeps their density and
/// affinity models well conditioned for wide embeddings.
pub fn evaluate_all(points: &PointSet, truth: &[usize], seed: u64) -> Result<StratificationReport> {
    if points.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} embeddings vs {} labels",
            points.len(),
            truth.len()
        )));
    }
    let z = standardize(points)?;
    let reduced = preprocess(points, &PreprocessConfig { target_dim: 10 })?.points;

    let mut methods = Vec::new();
    let km = kmeans_cluster(&z, &KmeansConfig { seed, ..KmeansConfig::default() })?;
    methods.push(("kmeans", km.assignment));
    let wd = ward_cluster(&z, &WardConfig::default())?;
    methods.push(("ward", wd));
    let gm = gmm_cluster(&reduced, &GmmConfig { seed, ..GmmConfig::default() })?;
    methods.push(("gmm", gm.assignment));
    let sp = spectral_cluster(&reduced, &SpectralConfig { seed, ..SpectralConfig::default() })?;
    methods.push(("spectral", sp));

    let results = methods
        .into_iter()
        .map(|(name, assignment)| {
            let accuracy = clustering_accuracy(&assignment, truth)?;
            let correct = (accuracy * truth.len() as f64).round() as usize;
            Ok(MethodResult {
                method: name.to_string(),
                accuracy,
                correct,
                total: truth.len(),
                cluster_sizes: cluster_balance(&assignment),
                labels: assignment.labels,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StratificationReport {
        n_patients: points.len(),
        embedding_dim: points.dim(),
        methods: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn assignment(labels: Vec<usize>, k: usize) -> ClusterAssignment {
        ClusterAssignment::new(labels, k).unwrap()
    }

    #[test]
    fn accuracy_hand_cases() {
        let truth = vec![0, 0, 1, 1];
        assert_eq!(
            clustering_accuracy(&assignment(vec![0, 0, 1, 1], 2), &truth).unwrap(),
            1.0
        );
        // Swapped ids are equivalent.
        assert_eq!(
            clustering_accuracy(&assignment(vec![1, 1, 0, 0], 2), &truth).unwrap(),
            1.0
        );
        // One mistake out of four.
        assert_eq!(
            clustering_accuracy(&assignment(vec![0, 1, 1, 1], 2), &truth).unwrap(),
            0.75
        );
    }

    #[test]
    fn accuracy_at_least_half_for_two_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let n = rng.random_range(2..20);
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let acc = clustering_accuracy(&assignment(labels, 2), &truth).unwrap();
            assert!(acc >= 0.5, "two-mapping max cannot fall below 0.5");
        }
    }

    #[test]
    fn accuracy_invariant_under_cluster_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = 3;
        let labels: Vec<usize> = (0..30).map(|_| rng.random_range(0..k)).collect();
        let truth: Vec<usize> = (0..30).map(|_| rng.random_range(0..k)).collect();
        let base = clustering_accuracy(&assignment(labels.clone(), k), &truth).unwrap();
        // Apply a fixed relabeling 0->2, 1->0, 2->1.
        let map = [2usize, 0, 1];
        let relabeled: Vec<usize> = labels.iter().map(|&l| map[l]).collect();
        let other = clustering_accuracy(&assignment(relabeled, k), &truth).unwrap();
        assert_eq!(base, other);
    }

    #[test]
    fn three_cluster_permutation_beats_identity_mapping() {
        // Identity mapping scores 0, best permutation scores 1.
        let truth = vec![1, 1, 2, 2, 0, 0];
        let labels = vec![0, 0, 1, 1, 2, 2];
        assert_eq!(
            clustering_accuracy(&assignment(labels, 3), &truth).unwrap(),
            1.0
        );
    }

    #[test]
    fn accuracy_validates_inputs() {
        assert!(clustering_accuracy(&assignment(vec![0, 1], 2), &[0]).is_err());
        assert!(clustering_accuracy(&assignment(vec![0, 1], 2), &[0, 2]).is_err());
    }

    #[test]
    fn balance_is_descending() {
        let a = assignment(vec![0, 1, 1, 1, 0], 2);
        assert_eq!(cluster_balance(&a), vec![3, 2]);
    }

    #[test]
    fn evaluate_all_on_separated_blobs_is_perfect_for_every_method() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for c in 0..2 {
            for _ in 0..12 {
                rows.push(vec![
                    c as f64 * 20.0 + noise.sample(&mut rng),
                    c as f64 * -15.0 + noise.sample(&mut rng),
                    c as f64 * 25.0 + noise.sample(&mut rng),
                ]);
                truth.push(c);
            }
        }
        let points = PointSet::new(rows).unwrap();
        let report = evaluate_all(&points, &truth, 0).unwrap();
        assert_eq!(report.methods.len(), 4);
        for m in &report.methods {
            assert_eq!(m.accuracy, 1.0, "{} was not perfect", m.method);
            assert_eq!(m.correct, 24);
            assert_eq!(m.total, 24);
        }
    }

    #[test]
    fn null_labels_give_chance_level_accuracy_on_average() {
        // Unstructured points with random truth labels: the best-permutation
        // accuracy should hover above 0.5 (selection bias) but far from 1.
        let mut accs = Vec::new();
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..24)
                .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let truth: Vec<usize> = (0..24).map(|_| rng.random_range(0..2)).collect();
            let points = PointSet::new(rows).unwrap();
            let report = evaluate_all(&points, &truth, seed).unwrap();
            accs.push(report.method("kmeans").unwrap().accuracy);
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        assert!(mean >= 0.5 && mean < 0.8, "null mean accuracy {mean}");
    }

    #[test]
    fn report_serializes_round_trip() {
        let truth = vec![0, 0, 1, 1];
        let points = PointSet::new(vec![
            vec![0.0, 0.1],
            vec![0.1, 0.0],
            vec![5.0, 5.1],
            vec![5.1, 5.0],
        ])
        .unwrap();
        let report = evaluate_all(&points, &truth, 1).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: StratificationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.n_patients, 4);
        assert_eq!(back.methods.len(), 4);
    }
}
