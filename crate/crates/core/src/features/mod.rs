//! Acoustic front end: MFCC extraction, delta appending, and energy-based
//! voice activity detection.
//!
//! The processing chain for raw audio is:
//! 1. per-frame log energy (kept separately, feeds the VAD)
//! 2. pre-emphasis
//! 3. framing (25 ms window / 10 ms hop by default) and Hamming windowing
//! 4. power spectrum via radix-2 FFT (size = next power of two >= frame length)
//! 5. 26 triangular mel filters spanning 0..Nyquist, log-compressed
//! 6. orthonormal DCT-II; coefficients c1..c19 are retained (c0 dropped)
//! 7. bigaussian VAD on the log energies, applied to the static frames
//! 8. delta and delta-delta regression appended on the retained frames

mod mfcc;
pub mod vad;
mod wav;

pub use vad::{VadMask, bigaussian_vad};
pub use wav::{read_wav, write_wav};

use crate::error::{Error, Result};

/// A mono audio utterance with samples in [-1, 1].
#[derive(Debug, Clone)]
pub struct AudioBuffer {
    id: String,
    sample_rate: u32,
    samples: Vec<f64>,
}

impl AudioBuffer {
    /// Validates that the sample rate is positive and every sample is finite.
    pub fn new(id: impl Into<String>, sample_rate: u32, samples: Vec<f64>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidData("sample rate must be positive".into()));
        }
        if let Some(pos) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite audio sample at index {pos}"
            )));
        }
        Ok(Self {
            id: id.into(),
            sample_rate,
            samples,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// A sequence of fixed-dimension feature vectors for one utterance,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    id: String,
    dim: usize,
    frame_rate_hz: f64,
    data: Vec<f64>,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major data. The length of `data` must be a
    /// multiple of `dim` and every entry must be finite.
    pub fn new(id: impl Into<String>, dim: usize, frame_rate_hz: f64, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidData("feature dimension must be positive".into()));
        }
        if !frame_rate_hz.is_finite() || frame_rate_hz <= 0.0 {
            return Err(Error::InvalidData("frame rate must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidData(format!(
                "feature data length {} is not a multiple of dim {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite feature entry at flat index {pos}"
            )));
        }
        Ok(Self {
            id: id.into(),
            dim,
            frame_rate_hz,
            data,
        })
    }

    pub fn from_rows(
        id: impl Into<String>,
        dim: usize,
        frame_rate_hz: f64,
        rows: &[Vec<f64>],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "feature row",
                    expected: dim,
                    actual: rows[i].len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(id, dim, frame_rate_hz, data)
    }

    pub fn empty(id: impl Into<String>, dim: usize, frame_rate_hz: f64) -> Result<Self> {
        Self::new(id, dim, frame_rate_hz, Vec::new())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.frame_rate_hz
    }

    pub fn num_frames(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Keeps the rows where `keep` is true. `keep` must cover every frame.
    pub fn select(&self, keep: &[bool]) -> Result<FeatureMatrix> {
        if keep.len() != self.num_frames() {
            return Err(Error::DimensionMismatch {
                context: "frame mask",
                expected: self.num_frames(),
                actual: keep.len(),
            });
        }
        let mut data = Vec::new();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                data.extend_from_slice(self.row(i));
            }
        }
        Ok(FeatureMatrix {
            id: self.id.clone(),
            dim: self.dim,
            frame_rate_hz: self.frame_rate_hz,
            data,
        })
    }
}

/// Front-end configuration. Defaults: 25 ms frames at a 10 ms hop,
/// 19 cepstral coefficients over 26 mel filters.
#[derive(Debug, Clone)]
pub struct MfccConfig {
    pub frame_len_ms: f64,
    pub frame_shift_ms: f64,
    pub num_coeffs: usize,
    pub num_filters: usize,
    pub pre_emphasis: f64,
    /// Floor applied to power-spectrum and filter energies before the log.
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            frame_len_ms: 25.0,
            frame_shift_ms: 10.0,
            num_coeffs: 19,
            num_filters: 26,
            pre_emphasis: 0.97,
            log_floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn frame_len_samples(&self, sample_rate: u32) -> usize {
        (self.frame_len_ms * sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        (self.frame_shift_ms * sample_rate as f64 / 1000.0).round() as usize
    }
}

/// Static cepstra plus the per-frame log energies the VAD consumes.
#[derive(Debug, Clone)]
pub struct MfccExtraction {
    pub features: FeatureMatrix,
    pub log_energy: Vec<f64>,
}

/// Extracts static MFCCs from audio. Frame count is
/// `floor((num_samples - frame_len) / hop) + 1` when the signal holds at
/// least one full frame, zero otherwise.
pub fn extract_mfcc(audio: &AudioBuffer, cfg: &MfccConfig) -> Result<MfccExtraction> {
    if audio.is_empty() {
        return Err(Error::EmptyInput(format!("audio {:?}", audio.id())));
    }
    let frame_len = cfg.frame_len_samples(audio.sample_rate());
    let hop = cfg.hop_samples(audio.sample_rate());
    if frame_len == 0 || hop == 0 {
        return Err(Error::InvalidData(
            "frame length and hop must be at least one sample".into(),
        ));
    }
    if cfg.num_coeffs == 0 || cfg.num_coeffs >= cfg.num_filters {
        return Err(Error::InvalidData(format!(
            "need 0 < num_coeffs < num_filters, got {} and {}",
            cfg.num_coeffs, cfg.num_filters
        )));
    }

    let frame_rate_hz = audio.sample_rate() as f64 / hop as f64;
    let num_frames = if audio.len() >= frame_len {
        (audio.len() - frame_len) / hop + 1
    } else {
        0
    };
    if num_frames == 0 {
        return Ok(MfccExtraction {
            features: FeatureMatrix::empty(audio.id(), cfg.num_coeffs, frame_rate_hz)?,
            log_energy: Vec::new(),
        });
    }

    // Log energy comes from the raw frames so pre-emphasis cannot bias
    // the VAD statistic.
    let samples = audio.samples();
    let mut log_energy = Vec::with_capacity(num_frames);
    for f in 0..num_frames {
        let start = f * hop;
        let e: f64 = samples[start..start + frame_len].iter().map(|s| s * s).sum();
        log_energy.push(e.max(cfg.log_floor).ln());
    }

    let emphasized = mfcc::pre_emphasize(samples, cfg.pre_emphasis);
    let analyzer = mfcc::MelAnalyzer::new(frame_len, audio.sample_rate(), cfg);

    let mut data = Vec::with_capacity(num_frames * cfg.num_coeffs);
    for f in 0..num_frames {
        let start = f * hop;
        let coeffs = analyzer.frame_cepstra(&emphasized[start..start + frame_len]);
        data.extend_from_slice(&coeffs);
    }

    Ok(MfccExtraction {
        features: FeatureMatrix::new(audio.id(), cfg.num_coeffs, frame_rate_hz, data)?,
        log_energy,
    })
}

/// Appends delta and delta-delta regressions over `+/- window` frames with
/// edge replication, tripling the feature dimension.
pub fn append_deltas(feats: &FeatureMatrix, window: usize) -> Result<FeatureMatrix> {
    if window == 0 {
        return Err(Error::InvalidData("delta window must be at least 1".into()));
    }
    let n = feats.num_frames();
    let d = feats.dim();
    if n == 0 {
        return FeatureMatrix::empty(feats.id(), 3 * d, feats.frame_rate_hz());
    }

    let statics: Vec<Vec<f64>> = feats.rows().map(|r| r.to_vec()).collect();
    let deltas = mfcc::delta_regression(&statics, window);
    let delta_deltas = mfcc::delta_regression(&deltas, window);

    let mut data = Vec::with_capacity(n * 3 * d);
    for i in 0..n {
        data.extend_from_slice(&statics[i]);
        data.extend_from_slice(&deltas[i]);
        data.extend_from_slice(&delta_deltas[i]);
    }
    FeatureMatrix::new(feats.id(), 3 * d, feats.frame_rate_hz(), data)
}

/// Full front end: static MFCCs, bigaussian VAD on the log energies, then
/// deltas appended on the retained frames.
pub fn extract_voiced(
    audio: &AudioBuffer,
    cfg: &MfccConfig,
    delta_window: usize,
) -> Result<FeatureMatrix> {
    let extraction = extract_mfcc(audio, cfg)?;
    let mask = bigaussian_vad(&extraction.features, &extraction.log_energy)?;
    let voiced = extraction.features.select(&mask.keep)?;
    append_deltas(&voiced, delta_window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sine(id: &str, freq: f64, sample_rate: u32, n: usize) -> AudioBuffer {
        let samples: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * freq * i as f64 / sample_rate as f64).sin() * 0.5)
            .collect();
        AudioBuffer::new(id, sample_rate, samples).unwrap()
    }

    #[test]
    fn frame_count_one_second_at_16k() {
        let audio = sine("u1", 440.0, 16000, 16000);
        let out = extract_mfcc(&audio, &MfccConfig::default()).unwrap();
        assert_eq!(out.features.num_frames(), 98);
        assert_eq!(out.features.dim(), 19);
        assert_eq!(out.log_energy.len(), 98);
        assert!((out.features.frame_rate_hz() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn short_signal_yields_empty_matrix() {
        let audio = sine("u1", 440.0, 16000, 200);
        let out = extract_mfcc(&audio, &MfccConfig::default()).unwrap();
        assert_eq!(out.features.num_frames(), 0);
        assert_eq!(out.features.dim(), 19);
    }

    #[test]
    fn empty_audio_is_rejected() {
        let audio = AudioBuffer::new("u1", 16000, Vec::new()).unwrap();
        assert!(matches!(
            extract_mfcc(&audio, &MfccConfig::default()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn non_finite_samples_are_rejected() {
        assert!(matches!(
            AudioBuffer::new("u1", 16000, vec![0.0, f64::NAN]),
            Err(Error::InvalidData(_))
        ));
    }

    #[test]
    fn steady_sine_frames_are_identical() {
        // 1 kHz at 16 kHz: the 160-sample hop spans exactly 10 periods, so
        // every analysis window after the first sees the same signal.
        let audio = sine("u1", 1000.0, 16000, 16000);
        let out = extract_mfcc(&audio, &MfccConfig::default()).unwrap();
        let feats = &out.features;
        let reference = feats.row(1);
        for i in 2..feats.num_frames() - 1 {
            for (a, b) in reference.iter().zip(feats.row(i)) {
                assert!(
                    (a - b).abs() < 1e-6,
                    "frame {i} differs from frame 1: {a} vs {b}"
                );
            }
        }
    }

    /// Independent oracle: the whole static-MFCC chain recomputed with a
    /// plain O(N^2) DFT and naive loops.
    #[allow(clippy::needless_range_loop)]
    fn oracle_mfcc(audio: &AudioBuffer, cfg: &MfccConfig) -> Vec<Vec<f64>> {
        let sr = audio.sample_rate();
        let frame_len = cfg.frame_len_samples(sr);
        let hop = cfg.hop_samples(sr);
        let n = audio.len();
        if n < frame_len {
            return Vec::new();
        }
        let num_frames = (n - frame_len) / hop + 1;

        let x = audio.samples();
        let mut pre = vec![x[0]];
        for i in 1..n {
            pre.push(x[i] - cfg.pre_emphasis * x[i - 1]);
        }

        let mut nfft = 1usize;
        while nfft < frame_len {
            nfft *= 2;
        }
        let nyquist = sr as f64 / 2.0;
        let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
        let mel_inv = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
        let m_hi = mel(nyquist);
        let edges: Vec<f64> = (0..cfg.num_filters + 2)
            .map(|i| mel_inv(m_hi * i as f64 / (cfg.num_filters + 1) as f64))
            .collect();

        let mut frames = Vec::with_capacity(num_frames);
        for f in 0..num_frames {
            let start = f * hop;
            let mut windowed = vec![0.0; nfft];
            for j in 0..frame_len {
                let w = 0.54 - 0.46 * (2.0 * PI * j as f64 / (frame_len - 1) as f64).cos();
                windowed[j] = pre[start + j] * w;
            }
            // direct DFT, bins 0..nfft/2
            let mut power = Vec::with_capacity(nfft / 2 + 1);
            for k in 0..=nfft / 2 {
                let mut re = 0.0;
                let mut im = 0.0;
                for (j, &v) in windowed.iter().enumerate() {
                    let ang = -2.0 * PI * k as f64 * j as f64 / nfft as f64;
                    re += v * ang.cos();
                    im += v * ang.sin();
                }
                power.push((re * re + im * im).max(cfg.log_floor));
            }
            let mut mel_log = Vec::with_capacity(cfg.num_filters);
            for m in 0..cfg.num_filters {
                let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                let mut acc = 0.0;
                for k in 0..=nfft / 2 {
                    let fk = k as f64 * sr as f64 / nfft as f64;
                    let w = if fk >= lo && fk <= mid && mid > lo {
                        (fk - lo) / (mid - lo)
                    } else if fk > mid && fk <= hi && hi > mid {
                        (hi - fk) / (hi - mid)
                    } else {
                        0.0
                    };
                    acc += w * power[k];
                }
                mel_log.push(acc.max(cfg.log_floor).ln());
            }
            let mm = cfg.num_filters as f64;
            let mut coeffs = Vec::with_capacity(cfg.num_coeffs);
            for k in 1..=cfg.num_coeffs {
                let mut acc = 0.0;
                for (j, &v) in mel_log.iter().enumerate() {
                    acc += v * (PI * k as f64 * (2.0 * j as f64 + 1.0) / (2.0 * mm)).cos();
                }
                coeffs.push(acc * (2.0 / mm).sqrt());
            }
            frames.push(coeffs);
        }
        frames
    }

    #[test]
    fn matches_direct_dft_oracle() {
        let cfg = MfccConfig::default();
        let audio = sine("u1", 1000.0, 16000, 4000);
        let out = extract_mfcc(&audio, &cfg).unwrap();
        let expected = oracle_mfcc(&audio, &cfg);
        assert_eq!(out.features.num_frames(), expected.len());
        for (i, row) in expected.iter().enumerate() {
            for (a, b) in out.features.row(i).iter().zip(row) {
                assert!(
                    (a - b).abs() < 1e-9 * b.abs().max(1.0),
                    "frame {i}: {a} vs oracle {b}"
                );
            }
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let cfg = MfccConfig::default();
        let audio = sine("u1", 317.0, 16000, 3200);
        let a = extract_mfcc(&audio, &cfg).unwrap();
        let b = extract_mfcc(&audio, &cfg).unwrap();
        assert_eq!(a.features.data(), b.features.data());
        assert_eq!(a.log_energy, b.log_energy);
    }

    #[test]
    fn other_sample_rates_are_supported() {
        let cfg = MfccConfig::default();
        for sr in [8000u32, 44100] {
            let audio = sine("u1", 440.0, sr, sr as usize);
            let out = extract_mfcc(&audio, &cfg).unwrap();
            let frame_len = cfg.frame_len_samples(sr);
            let hop = cfg.hop_samples(sr);
            assert_eq!(out.features.num_frames(), (sr as usize - frame_len) / hop + 1);
            assert_eq!(out.features.dim(), 19);
            assert!(out.features.data().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn deltas_triple_the_dimension() {
        let audio = sine("u1", 440.0, 16000, 16000);
        let out = extract_mfcc(&audio, &MfccConfig::default()).unwrap();
        let with_deltas = append_deltas(&out.features, 2).unwrap();
        assert_eq!(with_deltas.dim(), 57);
        assert_eq!(with_deltas.num_frames(), out.features.num_frames());
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn deltas_of_constant_sequence_are_zero() {
        let rows = vec![vec![3.5, -1.0, 0.25]; 12];
        let feats = FeatureMatrix::from_rows("u1", 3, 100.0, &rows).unwrap();
        let out = append_deltas(&feats, 2).unwrap();
        for i in 0..out.num_frames() {
            let row = out.row(i);
            assert_eq!(&row[..3], &rows[i][..]);
            assert!(row[3..].iter().all(|&v| v == 0.0), "frame {i}: {row:?}");
        }
    }

    /// Independent regression oracle with clamped indices.
    fn oracle_delta(rows: &[Vec<f64>], window: usize) -> Vec<Vec<f64>> {
        let n = rows.len();
        let d = rows[0].len();
        let denom: f64 = 2.0 * (1..=window).map(|k| (k * k) as f64).sum::<f64>();
        (0..n)
            .map(|t| {
                (0..d)
                    .map(|c| {
                        let mut acc = 0.0;
                        for k in 1..=window {
                            let fwd = rows[(t + k).min(n - 1)][c];
                            let bwd = rows[t.saturating_sub(k)][c];
                            acc += k as f64 * (fwd - bwd);
                        }
                        acc / denom
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn ramp_deltas_match_regression_oracle() {
        let rows: Vec<Vec<f64>> = (0..20).map(|t| vec![0.5 * t as f64, -2.0 * t as f64]).collect();
        let feats = FeatureMatrix::from_rows("u1", 2, 100.0, &rows).unwrap();
        let out = append_deltas(&feats, 2).unwrap();

        let expect_d = oracle_delta(&rows, 2);
        let expect_dd = oracle_delta(&expect_d, 2);
        for i in 0..20 {
            let row = out.row(i);
            for c in 0..2 {
                assert!((row[2 + c] - expect_d[i][c]).abs() < 1e-12);
                assert!((row[4 + c] - expect_dd[i][c]).abs() < 1e-12);
            }
        }
        // interior frames of a ramp carry the exact slope, with zero curvature
        for i in 4..16 {
            let row = out.row(i);
            assert!((row[2] - 0.5).abs() < 1e-12, "delta {}", row[2]);
            assert!((row[3] + 2.0).abs() < 1e-12);
            assert!(row[4].abs() < 1e-12 && row[5].abs() < 1e-12);
        }
    }

    #[test]
    fn empty_matrix_deltas_keep_tripled_dim() {
        let feats = FeatureMatrix::empty("u1", 19, 100.0).unwrap();
        let out = append_deltas(&feats, 2).unwrap();
        assert_eq!(out.num_frames(), 0);
        assert_eq!(out.dim(), 57);
    }

    proptest! {
        #[test]
        fn frame_count_formula_holds(
            extra in 0usize..5000,
            frame_len in 1usize..600,
            hop in 1usize..300,
        ) {
            let num_samples = frame_len + extra;
            let samples = vec![0.25; num_samples];
            let audio = AudioBuffer::new("u", 16000, samples).unwrap();
            let cfg = MfccConfig {
                frame_len_ms: frame_len as f64 / 16.0,
                frame_shift_ms: hop as f64 / 16.0,
                ..MfccConfig::default()
            };
            let out = extract_mfcc(&audio, &cfg).unwrap();
            prop_assert_eq!(out.features.num_frames(), (num_samples - frame_len) / hop + 1);
        }

        #[test]
        fn delta_dimension_is_always_tripled(
            n in 1usize..30,
            d in 1usize..8,
            window in 1usize..4,
        ) {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..d).map(|c| ((i * 7 + c * 3) % 11) as f64 - 5.0).collect())
                .collect();
            let feats = FeatureMatrix::from_rows("u", d, 100.0, &rows).unwrap();
            let out = append_deltas(&feats, window).unwrap();
            prop_assert_eq!(out.dim(), 3 * d);
            prop_assert_eq!(out.num_frames(), n);
        }
    }
}
