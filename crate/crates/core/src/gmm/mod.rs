//! Diagonal-covariance Gaussian mixture models: k-means initialization,
//! EM training, MAP mean adaptation, stable likelihood evaluation, and
//! hard frame-to-component alignment.

mod kmeans;
mod train;

pub use kmeans::kmeans_init;
pub use train::{SuffStats, map_adapt, train_em};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// A diagonal-covariance GMM. Weights form a simplex, variances are kept
/// above a positive floor, and all entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagGmm {
    dim: usize,
    weights: Vec<f64>,
    /// K x D, row-major.
    means: Vec<f64>,
    /// K x D, row-major.
    variances: Vec<f64>,
}

impl DiagGmm {
    pub fn new(dim: usize, weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        let gmm = Self {
            dim,
            weights,
            means,
            variances,
        };
        gmm.validate()?;
        Ok(gmm)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k == 0 || self.dim == 0 {
            return Err(Error::InvalidData("GMM needs at least one component and one dimension".into()));
        }
        if self.means.len() != k * self.dim || self.variances.len() != k * self.dim {
            return Err(Error::DimensionMismatch {
                context: "GMM parameter matrices",
                expected: k * self.dim,
                actual: self.means.len().min(self.variances.len()),
            });
        }
        let finite = self.weights.iter().all(|v| v.is_finite())
            && self.means.iter().all(|v| v.is_finite())
            && self.variances.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidData("non-finite GMM parameter".into()));
        }
        if self.weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidData("all mixture weights must be positive".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidData(format!(
                "mixture weights sum to {sum}, expected 1"
            )));
        }
        if self.variances.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidData("all variances must be positive".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        &self.means[k * self.dim..(k + 1) * self.dim]
    }

    pub fn variance(&self, k: usize) -> &[f64] {
        &self.variances[k * self.dim..(k + 1) * self.dim]
    }

    /// `log sum_k w_k N(x; m_k, diag v_k)`, computed in the log domain.
    pub fn log_likelihood(&self, frame: &[f64]) -> Result<f64> {
        self.check_dim(frame.len())?;
        Ok(self.scorer().log_likelihood(frame))
    }

    /// Index of the component maximizing `ln w_k + ln N(x; m_k, v_k)`;
    /// ties go to the lowest index.
    pub fn align_frame(&self, frame: &[f64]) -> Result<usize> {
        self.check_dim(frame.len())?;
        Ok(self.scorer().align_frame(frame))
    }

    /// Hard alignment of every frame in the utterance.
    pub fn align(&self, feats: &FeatureMatrix) -> Result<Vec<usize>> {
        self.check_dim(feats.dim())?;
        let scorer = self.scorer();
        Ok(feats.rows().map(|r| scorer.align_frame(r)).collect())
    }

    /// Sum of per-frame log likelihoods over the whole matrix.
    pub fn total_log_likelihood(&self, feats: &FeatureMatrix) -> Result<f64> {
        self.check_dim(feats.dim())?;
        let scorer = self.scorer();
        Ok(feats.rows().map(|r| scorer.log_likelihood(r)).sum())
    }

    /// Precomputes per-component normalization constants for repeated
    /// evaluation over many frames.
    pub fn scorer(&self) -> GmmScorer<'_> {
        GmmScorer::new(self)
    }

    fn check_dim(&self, actual: usize) -> Result<()> {
        if actual != self.dim {
            return Err(Error::DimensionMismatch {
                context: "GMM evaluation",
                expected: self.dim,
                actual,
            });
        }
        Ok(())
    }
}

/// Cached evaluation tables for one model: `log w_k - 0.5 (D ln 2pi +
/// sum_d ln v_kd)` and the inverse variances.
pub struct GmmScorer<'a> {
    gmm: &'a DiagGmm,
    log_norm: Vec<f64>,
    inv_var: Vec<f64>,
}

impl<'a> GmmScorer<'a> {
    fn new(gmm: &'a DiagGmm) -> Self {
        let k = gmm.num_components();
        let d = gmm.dim();
        let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        let mut log_norm = Vec::with_capacity(k);
        let mut inv_var = Vec::with_capacity(k * d);
        for c in 0..k {
            let mut ln_det = 0.0;
            for &v in gmm.variance(c) {
                ln_det += v.ln();
                inv_var.push(1.0 / v);
            }
            log_norm.push(gmm.weights[c].ln() - d as f64 * half_ln_2pi - 0.5 * ln_det);
        }
        Self {
            gmm,
            log_norm,
            inv_var,
        }
    }

    /// Weighted log density of one component at `frame`.
    pub fn component_log_density(&self, k: usize, frame: &[f64]) -> f64 {
        let d = self.gmm.dim;
        let mean = self.gmm.mean(k);
        let iv = &self.inv_var[k * d..(k + 1) * d];
        let mut maha = 0.0;
        for i in 0..d {
            let diff = frame[i] - mean[i];
            maha += diff * diff * iv[i];
        }
        self.log_norm[k] - 0.5 * maha
    }

    pub fn log_likelihood(&self, frame: &[f64]) -> f64 {
        let k = self.gmm.num_components();
        let mut max = f64::NEG_INFINITY;
        let mut logs = Vec::with_capacity(k);
        for c in 0..k {
            let l = self.component_log_density(c, frame);
            if l > max {
                max = l;
            }
            logs.push(l);
        }
        let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
        max + sum.ln()
    }

    pub fn align_frame(&self, frame: &[f64]) -> usize {
        let mut best = 0;
        let mut best_l = self.component_log_density(0, frame);
        for c in 1..self.gmm.num_components() {
            let l = self.component_log_density(c, frame);
            if l > best_l {
                best_l = l;
                best = c;
            }
        }
        best
    }
}

/// Training parameters. The defaults target desk-scale runs (64
/// components); 512 components reproduce the full-size recipe.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub num_components: usize,
    pub max_em_iters: usize,
    pub rel_ll_tolerance: f64,
    /// Variance floor as a fraction of the global per-dimension variance.
    pub variance_floor_factor: f64,
    pub kmeans_iters: usize,
    pub seed: u64,
    /// MAP relevance factor for mean adaptation.
    pub map_relevance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            num_components: 64,
            max_em_iters: 50,
            rel_ll_tolerance: 1e-5,
            variance_floor_factor: 1e-3,
            kmeans_iters: 10,
            seed: 8,
            map_relevance: 16.0,
        }
    }
}

/// Per-dimension variance floor: `factor * global population variance`,
/// never below 1e-10.
pub(crate) fn variance_floor(data: &FeatureMatrix, factor: f64) -> Vec<f64> {
    let d = data.dim();
    let n = data.num_frames() as f64;
    let mut mean = vec![0.0; d];
    for row in data.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; d];
    for row in data.rows() {
        for i in 0..d {
            let diff = row[i] - mean[i];
            var[i] += diff * diff;
        }
    }
    var.iter().map(|v| (v / n * factor).max(1e-10)).collect()
}
