//! Ward agglomerative clustering via the Lance-Williams recurrence on
//! squared Euclidean distances.

use super::{squared_distance, validate_k, ClusterAssignment, PointSet};
use crate::Result;

#[derive(Clone, Copy, Debug)]
pub struct WardConfig {
    pub k: usize,
}

impl Default for WardConfig {
    fn default() -> Self {
        Self { k: 2 }
    }
}

/// Merge until `k` clusters remain. Merge cost is the Ward distance; equal
/// costs break toward the smallest (i, j) pair of active cluster ids, so
/// the result is fully deterministic.
pub fn ward_cluster(points: &PointSet, cfg: &WardConfig) -> Result<ClusterAssignment> {
    validate_k(points, cfg.k)?;
    let n = points.len();
    // dist[i][j] holds the current Ward distance between active clusters.
    // Initial Ward distance between singletons is d^2 / 2.
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = squared_distance(points.row(i), points.row(j)) / 2.0;
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut size = vec![1usize; n];
    let mut active: Vec<bool> = vec![true; n];
    // member -> current cluster id; ids are always the smaller of merged pair.
    let mut label = (0..n).collect::<Vec<usize>>();

    let mut remaining = n;
    while remaining > cfg.k {
        let mut best: Option<(usize, usize)> = None;
        let mut best_d = f64::INFINITY;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                if dist[i][j] < best_d {
                    best_d = dist[i][j];
                    best = Some((i, j));
                }
            }
        }
        let (a, b) = best.expect("at least two active clusters");
        // Lance-Williams update for Ward:
        // d(a+b, c) = ((n_a+n_c) d(a,c) + (n_b+n_c) d(b,c) - n_c d(a,b))
        //             / (n_a+n_b+n_c)
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for c in 0..n {
            if !active[c] || c == a || c == b {
                continue;
            }
            let nc = size[c] as f64;
            let d = ((na + nc) * dist[a][c] + (nb + nc) * dist[b][c] - nc * dist[a][b])
                / (na + nb + nc);
            dist[a][c] = d;
            dist[c][a] = d;
        }
        size[a] += size[b];
        active[b] = false;
        for l in &mut label {
            if *l == b {
                *l = a;
            }
        }
        remaining -= 1;
    }

    // Compact active ids to 0..k in ascending order.
    let mut ids: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
    ids.sort_unstable();
    let labels: Vec<usize> = label
        .iter()
        .map(|l| ids.iter().position(|&id| id == *l).expect("active id"))
        .collect();
    ClusterAssignment::new(labels, cfg.k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example_three_points_on_a_line() {
        // {0, 1, 10}: first merge is {0, 1}; with k = 2 the result is
        // {0, 1} vs {10}.
        let points = PointSet::new(vec![vec![0.0], vec![1.0], vec![10.0]]).unwrap();
        let a = ward_cluster(&points, &WardConfig { k: 2 }).unwrap();
        assert_eq!(a.labels[0], a.labels[1]);
        assert_ne!(a.labels[0], a.labels[2]);
    }

    #[test]
    fn four_point_two_pair_example() {
        let points = PointSet::new(vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![10.0, 0.0],
            vec![10.0, 1.0],
        ])
        .unwrap();
        let a = ward_cluster(&points, &WardConfig { k: 2 }).unwrap();
        assert_eq!(a.labels[0], a.labels[1]);
        assert_eq!(a.labels[2], a.labels[3]);
        assert_ne!(a.labels[0], a.labels[2]);
        assert_eq!(a.sizes(), vec![2, 2]);
    }

    #[test]
    fn k_equals_n_is_identity_partition() {
        let points =
            PointSet::new(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let a = ward_cluster(&points, &WardConfig { k: 4 }).unwrap();
        let mut labels = a.labels.clone();
        labels.sort_unstable();
        assert_eq!(labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn k_equals_one_is_single_cluster() {
        let points = PointSet::new(vec![vec![0.0], vec![5.0], vec![9.0]]).unwrap();
        let a = ward_cluster(&points, &WardConfig { k: 1 }).unwrap();
        assert!(a.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn ties_resolve_deterministically() {
        // Perfect square: all nearest-pair distances tie; the smallest (i, j)
        // wins, so repeated runs agree exactly.
        let points = PointSet::new(vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let a = ward_cluster(&points, &WardConfig { k: 2 }).unwrap();
        let b = ward_cluster(&points, &WardConfig { k: 2 }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sizes(), vec![2, 2]);
    }

    #[test]
    fn agrees_with_brute_force_objective_on_small_inputs() {
        // On clearly separated data, Ward's greedy merge finds the partition
        // minimizing total within-cluster variance; verify against an
        // exhaustive search over all 2-partitions of 6 points.
        let points = PointSet::new(vec![
            vec![0.0],
            vec![0.5],
            vec![1.0],
            vec![20.0],
            vec![20.5],
            vec![21.0],
        ])
        .unwrap();
        let a = ward_cluster(&points, &WardConfig { k: 2 }).unwrap();

        let sse = |members: &[usize]| -> f64 {
            let m: f64 = members.iter().map(|&i| points.row(i)[0]).sum::<f64>()
                / members.len() as f64;
            members
                .iter()
                .map(|&i| (points.row(i)[0] - m).powi(2))
                .sum()
        };
        let mut best = f64::INFINITY;
        let mut best_mask = 0u32;
        for mask in 1u32..(1 << 6) - 1 {
            let g0: Vec<usize> = (0..6).filter(|i| mask & (1 << i) != 0).collect();
            let g1: Vec<usize> = (0..6).filter(|i| mask & (1 << i) == 0).collect();
            let total = sse(&g0) + sse(&g1);
            if total < best {
                best = total;
                best_mask = mask;
            }
        }
        let brute: Vec<usize> = (0..6)
            .map(|i| usize::from(best_mask & (1 << i) != 0))
            .collect();
        let direct = a.labels == brute;
        let swapped = a
            .labels
            .iter()
            .zip(&brute)
            .all(|(x, y)| 1 - x == *y);
        assert!(direct || swapped);
    }
}
