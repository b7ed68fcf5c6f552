//! EM training and MAP mean adaptation.

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::gmm::{DiagGmm, TrainConfig, variance_floor};

/// Zeroth/first/second-order EM statistics. Accumulation is per frame and
/// merging is associative, so the E-step can be partitioned across
/// utterances and merged in a fixed order.
#[derive(Debug, Clone)]
pub struct SuffStats {
    pub num_components: usize,
    pub dim: usize,
    /// Per-component posterior mass.
    pub occupancy: Vec<f64>,
    /// K x D posterior-weighted feature sums.
    pub sum: Vec<f64>,
    /// K x D posterior-weighted squared-feature sums.
    pub sum_sq: Vec<f64>,
    /// Total data log likelihood of the accumulated frames.
    pub log_likelihood: f64,
}

impl SuffStats {
    pub fn new(num_components: usize, dim: usize) -> Self {
        Self {
            num_components,
            dim,
            occupancy: vec![0.0; num_components],
            sum: vec![0.0; num_components * dim],
            sum_sq: vec![0.0; num_components * dim],
            log_likelihood: 0.0,
        }
    }

    pub fn merge(&mut self, other: &SuffStats) {
        debug_assert_eq!(self.num_components, other.num_components);
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.occupancy.iter_mut().zip(&other.occupancy) {
            *a += b;
        }
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.log_likelihood += other.log_likelihood;
    }

    fn is_finite(&self) -> bool {
        self.log_likelihood.is_finite()
            && self.occupancy.iter().all(|v| v.is_finite())
            && self.sum.iter().all(|v| v.is_finite())
            && self.sum_sq.iter().all(|v| v.is_finite())
    }
}

/// One E-step pass: accumulates responsibilities of `gmm` over `data`.
#[allow(clippy::needless_range_loop)]
pub fn accumulate_stats(gmm: &DiagGmm, data: &FeatureMatrix) -> Result<SuffStats> {
    if data.dim() != gmm.dim() {
        return Err(Error::DimensionMismatch {
            context: "EM accumulation",
            expected: gmm.dim(),
            actual: data.dim(),
        });
    }
    let k = gmm.num_components();
    let d = gmm.dim();
    let scorer = gmm.scorer();
    let mut stats = SuffStats::new(k, d);
    let mut logs = vec![0.0; k];
    for row in data.rows() {
        let mut max = f64::NEG_INFINITY;
        for (c, l) in logs.iter_mut().enumerate() {
            *l = scorer.component_log_density(c, row);
            if *l > max {
                max = *l;
            }
        }
        let total: f64 = logs.iter().map(|l| (l - max).exp()).sum();
        stats.log_likelihood += max + total.ln();
        for c in 0..k {
            let resp = (logs[c] - max).exp() / total;
            stats.occupancy[c] += resp;
            let base = c * d;
            for (j, &x) in row.iter().enumerate() {
                stats.sum[base + j] += resp * x;
                stats.sum_sq[base + j] += resp * x * x;
            }
        }
    }
    Ok(stats)
}

#[allow(clippy::needless_range_loop)]
fn m_step(stats: &SuffStats, total_frames: usize, floor: &[f64]) -> Result<DiagGmm> {
    let k = stats.num_components;
    let d = stats.dim;
    let n = total_frames as f64;
    let mut weights = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k * d);
    let mut variances = Vec::with_capacity(k * d);
    for c in 0..k {
        let occ = stats.occupancy[c];
        weights.push((occ / n).max(1e-10));
        let base = c * d;
        for j in 0..d {
            let (mean, var) = if occ > 1e-10 {
                let mean = stats.sum[base + j] / occ;
                (mean, stats.sum_sq[base + j] / occ - mean * mean)
            } else {
                (stats.sum[base + j], 0.0)
            };
            means.push(mean);
            variances.push(var.max(floor[j]));
        }
    }
    let wsum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= wsum;
    }
    DiagGmm::new(d, weights, means, variances)
}

/// Runs EM from `init` and returns the trained model together with the log
/// likelihood trace. `trace[0]` is the likelihood of the initial model and
/// `trace[i]` the likelihood after the i-th M-step; the sequence is
/// non-decreasing up to floating-point slack.
pub fn train_em(
    init: &DiagGmm,
    data: &FeatureMatrix,
    cfg: &TrainConfig,
) -> Result<(DiagGmm, Vec<f64>)> {
    if data.dim() != init.dim() {
        return Err(Error::DimensionMismatch {
            context: "EM training",
            expected: init.dim(),
            actual: data.dim(),
        });
    }
    if data.num_frames() == 0 {
        return Err(Error::EmptyInput(format!(
            "EM training data for {:?}",
            data.id()
        )));
    }

    let floor = variance_floor(data, cfg.variance_floor_factor);
    let mut model = init.clone();
    let mut trace = vec![model.total_log_likelihood(data)?];

    for iter in 1..=cfg.max_em_iters {
        let stats = accumulate_stats(&model, data)?;
        if !stats.is_finite() {
            return Err(Error::NumericalFailure {
                context: "EM responsibilities",
                iteration: iter,
            });
        }
        model = m_step(&stats, data.num_frames(), &floor)?;
        let ll = model.total_log_likelihood(data)?;
        if !ll.is_finite() {
            return Err(Error::NumericalFailure {
                context: "EM log likelihood",
                iteration: iter,
            });
        }
        let prev = *trace.last().unwrap();
        trace.push(ll);
        let rel = (ll - prev).abs() / prev.abs().max(1e-12);
        if rel < cfg.rel_ll_tolerance {
            break;
        }
    }
    Ok((model, trace))
}

/// MAP mean adaptation from a universal background model:
/// `m'_k = (sum_i gamma_ik x_i + r m_k) / (n_k + r)`. Weights and
/// variances are copied from the UBM unchanged.
pub fn map_adapt(ubm: &DiagGmm, data: &FeatureMatrix, relevance: f64) -> Result<DiagGmm> {
    if data.dim() != ubm.dim() {
        return Err(Error::DimensionMismatch {
            context: "MAP adaptation",
            expected: ubm.dim(),
            actual: data.dim(),
        });
    }
    if relevance.is_nan() || relevance < 0.0 {
        return Err(Error::InvalidData(format!(
            "MAP relevance factor must be nonnegative, got {relevance}"
        )));
    }

    let stats = accumulate_stats(ubm, data)?;
    let k = ubm.num_components();
    let d = ubm.dim();
    let mut means = Vec::with_capacity(k * d);
    for c in 0..k {
        let occ = stats.occupancy[c];
        let denom = occ + relevance;
        let base = c * d;
        for j in 0..d {
            if denom > 0.0 {
                means.push((stats.sum[base + j] + relevance * ubm.mean(c)[j]) / denom);
            } else {
                means.push(ubm.mean(c)[j]);
            }
        }
    }
    DiagGmm::new(
        d,
        ubm.weights().to_vec(),
        means,
        (0..k).flat_map(|c| ubm.variance(c).to_vec()).collect(),
    )
}
