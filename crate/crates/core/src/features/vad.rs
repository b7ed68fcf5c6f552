//! Bigaussian voice activity detection on frame log energies.
//!
//! A two-component 1-D Gaussian mixture is fit to the log energies by EM;
//! the higher-mean component is taken as speech and a frame is kept when
//! its likelihood under that component exceeds its likelihood under the
//! other one.

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

const EM_ITERS: usize = 10;

/// Per-frame keep decisions. `degenerate` is set when the energies could
/// not support a two-component fit (all frames identical); in that case
/// every frame is kept.
#[derive(Debug, Clone)]
pub struct VadMask {
    pub keep: Vec<bool>,
    pub degenerate: bool,
}

impl VadMask {
    pub fn num_kept(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }
}

/// Fits the bigaussian model to `energies` and returns the speech mask.
/// `energies` must hold one value per frame of `feats`.
pub fn bigaussian_vad(feats: &FeatureMatrix, energies: &[f64]) -> Result<VadMask> {
    if energies.len() != feats.num_frames() {
        return Err(Error::DimensionMismatch {
            context: "vad energies",
            expected: feats.num_frames(),
            actual: energies.len(),
        });
    }
    if energies.is_empty() {
        return Ok(VadMask {
            keep: Vec::new(),
            degenerate: false,
        });
    }
    if let Some(pos) = energies.iter().position(|e| !e.is_finite()) {
        return Err(Error::InvalidData(format!(
            "non-finite log energy at frame {pos}"
        )));
    }

    let n = energies.len() as f64;
    let mean: f64 = energies.iter().sum::<f64>() / n;
    let var: f64 = energies.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;

    if var == 0.0 {
        return Ok(VadMask {
            keep: vec![true; energies.len()],
            degenerate: true,
        });
    }

    let floor = (var * 1e-3).max(1e-10);
    let lo = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    // component 0 = noise (low mean), component 1 = speech (high mean)
    let mut means = [lo, hi];
    let mut vars = [var.max(floor); 2];
    let mut weights = [0.5f64; 2];

    let mut resp = vec![0.0; energies.len()];
    for _ in 0..EM_ITERS {
        for (i, &e) in energies.iter().enumerate() {
            let l0 = weights[0].ln() + log_normal(e, means[0], vars[0]);
            let l1 = weights[1].ln() + log_normal(e, means[1], vars[1]);
            let m = l0.max(l1);
            let p0 = (l0 - m).exp();
            let p1 = (l1 - m).exp();
            resp[i] = p1 / (p0 + p1);
        }
        let n1: f64 = resp.iter().sum();
        let n0 = n - n1;
        if n0 <= f64::EPSILON || n1 <= f64::EPSILON {
            break;
        }
        let s1: f64 = resp.iter().zip(energies).map(|(r, e)| r * e).sum();
        let s0: f64 = energies.iter().sum::<f64>() - s1;
        means = [s0 / n0, s1 / n1];
        let mut v = [0.0; 2];
        for (r, &e) in resp.iter().zip(energies) {
            v[0] += (1.0 - r) * (e - means[0]) * (e - means[0]);
            v[1] += r * (e - means[1]) * (e - means[1]);
        }
        vars = [(v[0] / n0).max(floor), (v[1] / n1).max(floor)];
        weights = [n0 / n, n1 / n];
    }

    if means[0] > means[1] {
        means.swap(0, 1);
        vars.swap(0, 1);
    }

    let keep: Vec<bool> = energies
        .iter()
        .map(|&e| log_normal(e, means[1], vars[1]) > log_normal(e, means[0], vars[0]))
        .collect();

    Ok(VadMask {
        keep,
        degenerate: false,
    })
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var)
}
