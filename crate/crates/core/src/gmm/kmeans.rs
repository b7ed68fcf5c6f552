//! Seeded k-means initialization for GMM training.
//!
//! Centroids start at distinct frames sampled with a ChaCha stream, Lloyd
//! iterations assign by squared Euclidean distance with ties to the lowest
//! index, and a cluster that empties is re-seeded at the frame farthest
//! from its assigned centroid.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::gmm::{DiagGmm, TrainConfig, variance_floor};

/// Deterministic choice of `k` distinct initial centroid frames.
pub(crate) fn initial_centroid_indices(num_frames: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, num_frames, k).into_vec()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Runs seeded k-means and converts the final clustering into a GMM:
/// centroid means, within-cluster floored variances, occupancy weights.
pub fn kmeans_init(data: &FeatureMatrix, cfg: &TrainConfig) -> Result<DiagGmm> {
    let n = data.num_frames();
    let k = cfg.num_components;
    let d = data.dim();
    if k == 0 {
        return Err(Error::InvalidData("num_components must be at least 1".into()));
    }
    if n < k {
        return Err(Error::InsufficientData {
            context: "k-means initialization",
            needed: k,
            available: n,
        });
    }

    let mut centroids: Vec<Vec<f64>> = initial_centroid_indices(n, k, cfg.seed)
        .into_iter()
        .map(|i| data.row(i).to_vec())
        .collect();

    let mut assign = vec![0usize; n];
    for _ in 0..cfg.kmeans_iters {
        let changed = assign_frames(data, &centroids, &mut assign);
        update_centroids(data, &assign, &mut centroids);
        if !changed {
            break;
        }
    }

    // one final assignment against the last centroids, then model stats
    assign_frames(data, &centroids, &mut assign);
    update_centroids(data, &assign, &mut centroids);

    let mut counts = vec![0usize; k];
    for &a in &assign {
        counts[a] += 1;
    }

    let floor = variance_floor(data, cfg.variance_floor_factor);
    let mut weights = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k * d);
    let mut variances = Vec::with_capacity(k * d);
    for c in 0..k {
        weights.push((counts[c] as f64 / n as f64).max(1e-10));
        means.extend_from_slice(&centroids[c]);
        let mut var = vec![0.0; d];
        if counts[c] > 0 {
            for (i, &a) in assign.iter().enumerate() {
                if a == c {
                    let row = data.row(i);
                    for j in 0..d {
                        let diff = row[j] - centroids[c][j];
                        var[j] += diff * diff;
                    }
                }
            }
            for v in &mut var {
                *v /= counts[c] as f64;
            }
        }
        for (v, &f) in var.iter_mut().zip(&floor) {
            *v = v.max(f);
        }
        variances.extend_from_slice(&var);
    }
    let wsum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= wsum;
    }

    DiagGmm::new(d, weights, means, variances)
}

/// Assigns every frame to its nearest centroid; returns whether anything
/// moved.
fn assign_frames(data: &FeatureMatrix, centroids: &[Vec<f64>], assign: &mut [usize]) -> bool {
    let mut changed = false;
    for (i, row) in data.rows().enumerate() {
        let mut best = 0;
        let mut best_d = sq_dist(row, &centroids[0]);
        for (c, cent) in centroids.iter().enumerate().skip(1) {
            let dist = sq_dist(row, cent);
            if dist < best_d {
                best_d = dist;
                best = c;
            }
        }
        if assign[i] != best {
            assign[i] = best;
            changed = true;
        }
    }
    changed
}

/// Recomputes centroids as cluster means; an empty cluster is re-seeded at
/// the not-yet-taken frame farthest from its assigned centroid.
fn update_centroids(data: &FeatureMatrix, assign: &[usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    let d = data.dim();
    let mut counts = vec![0usize; k];
    let mut sums = vec![vec![0.0; d]; k];
    for (i, &a) in assign.iter().enumerate() {
        counts[a] += 1;
        for (s, &v) in sums[a].iter_mut().zip(data.row(i)) {
            *s += v;
        }
    }
    let mut taken: Vec<usize> = Vec::new();
    for c in 0..k {
        if counts[c] > 0 {
            for j in 0..d {
                centroids[c][j] = sums[c][j] / counts[c] as f64;
            }
        } else {
            let mut far_i = usize::MAX;
            let mut far_d = f64::NEG_INFINITY;
            for (i, row) in data.rows().enumerate() {
                if taken.contains(&i) {
                    continue;
                }
                let dist = sq_dist(row, &centroids[assign[i]]);
                if dist > far_d {
                    far_d = dist;
                    far_i = i;
                }
            }
            if far_i != usize::MAX {
                centroids[c] = data.row(far_i).to_vec();
                taken.push(far_i);
            }
        }
    }
}
