//! DSP internals for the MFCC front end.

use std::f64::consts::PI;

use super::MfccConfig;

/// `y[0] = x[0]`, `y[n] = x[n] - coeff * x[n-1]`.
pub(crate) fn pre_emphasize(signal: &[f64], coeff: f64) -> Vec<f64> {
    if signal.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(signal.len());
    out.push(signal[0]);
    for i in 1..signal.len() {
        out.push(signal[i] - coeff * signal[i - 1]);
    }
    out
}

/// Frame analyzer with precomputed Hamming window, mel filterbank, and DCT
/// basis for a fixed frame length and sample rate.
pub(crate) struct MelAnalyzer {
    frame_len: usize,
    nfft: usize,
    log_floor: f64,
    window: Vec<f64>,
    /// One row of `nfft/2 + 1` weights per mel filter.
    filters: Vec<Vec<f64>>,
    /// Orthonormal DCT-II rows for coefficients 1..=num_coeffs.
    dct_rows: Vec<Vec<f64>>,
}

impl MelAnalyzer {
    pub(crate) fn new(frame_len: usize, sample_rate: u32, cfg: &MfccConfig) -> Self {
        let nfft = frame_len.next_power_of_two();
        let window = (0..frame_len)
            .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (frame_len - 1) as f64).cos())
            .collect();
        let filters = mel_filterbank(cfg.num_filters, nfft, sample_rate);
        let m = cfg.num_filters as f64;
        let scale = (2.0 / m).sqrt();
        let dct_rows = (1..=cfg.num_coeffs)
            .map(|k| {
                (0..cfg.num_filters)
                    .map(|j| scale * (PI * k as f64 * (2.0 * j as f64 + 1.0) / (2.0 * m)).cos())
                    .collect()
            })
            .collect();
        Self {
            frame_len,
            nfft,
            log_floor: cfg.log_floor,
            window,
            filters,
            dct_rows,
        }
    }

    /// Cepstral coefficients c1..cN for one frame of raw (pre-emphasized)
    /// samples of length `frame_len`.
    pub(crate) fn frame_cepstra(&self, frame: &[f64]) -> Vec<f64> {
        debug_assert_eq!(frame.len(), self.frame_len);
        let mut re = vec![0.0; self.nfft];
        let mut im = vec![0.0; self.nfft];
        for (i, (&x, &w)) in frame.iter().zip(&self.window).enumerate() {
            re[i] = x * w;
        }
        fft_in_place(&mut re, &mut im);

        let bins = self.nfft / 2 + 1;
        let power: Vec<f64> = (0..bins)
            .map(|k| (re[k] * re[k] + im[k] * im[k]).max(self.log_floor))
            .collect();

        let log_mel: Vec<f64> = self
            .filters
            .iter()
            .map(|filt| {
                let e: f64 = filt.iter().zip(&power).map(|(w, p)| w * p).sum();
                e.max(self.log_floor).ln()
            })
            .collect();

        self.dct_rows
            .iter()
            .map(|row| row.iter().zip(&log_mel).map(|(c, v)| c * v).sum())
            .collect()
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters with mel-spaced edges from 0 Hz to Nyquist, evaluated
/// at the continuous bin frequencies (no integer-bin snapping).
fn mel_filterbank(num_filters: usize, nfft: usize, sample_rate: u32) -> Vec<Vec<f64>> {
    let bins = nfft / 2 + 1;
    let nyquist = sample_rate as f64 / 2.0;
    let mel_hi = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..num_filters + 2)
        .map(|i| mel_to_hz(mel_hi * i as f64 / (num_filters + 1) as f64))
        .collect();

    (0..num_filters)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * sample_rate as f64 / nfft as f64;
                    if f >= lo && f <= mid && mid > lo {
                        (f - lo) / (mid - lo)
                    } else if f > mid && f <= hi && hi > mid {
                        (hi - f) / (hi - mid)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Iterative radix-2 Cooley-Tukey. Lengths must be a power of two.
pub(crate) fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    debug_assert_eq!(n, im.len());

    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let ang = -2.0 * PI / len as f64;
        let (wr, wi) = (ang.cos(), ang.sin());
        for start in (0..n).step_by(len) {
            let mut cr = 1.0;
            let mut ci = 0.0;
            for k in 0..len / 2 {
                let (er, ei) = (re[start + k], im[start + k]);
                let (or_, oi) = (re[start + k + len / 2], im[start + k + len / 2]);
                let tr = or_ * cr - oi * ci;
                let ti = or_ * ci + oi * cr;
                re[start + k] = er + tr;
                im[start + k] = ei + ti;
                re[start + k + len / 2] = er - tr;
                im[start + k + len / 2] = ei - ti;
                let nr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = nr;
            }
        }
        len <<= 1;
    }
}

/// Symmetric regression deltas over `+/- window` frames with edge
/// replication: `d[t] = sum_k k*(x[t+k] - x[t-k]) / (2 * sum_k k^2)`.
pub(crate) fn delta_regression(rows: &[Vec<f64>], window: usize) -> Vec<Vec<f64>> {
    let n = rows.len();
    if n == 0 {
        return Vec::new();
    }
    let d = rows[0].len();
    let denom: f64 = 2.0 * (1..=window).map(|k| (k * k) as f64).sum::<f64>();
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let mut row = vec![0.0; d];
        for k in 1..=window {
            let fwd = &rows[(t + k).min(n - 1)];
            let bwd = &rows[t.saturating_sub(k)];
            for c in 0..d {
                row[c] += k as f64 * (fwd[c] - bwd[c]);
            }
        }
        for v in &mut row {
            *v /= denom;
        }
        out.push(row);
    }
    out
}
