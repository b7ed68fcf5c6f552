//! Feature-space attack simulator.
//!
//! Generates desk-scale natural/spoofed corpora carrying the two artifact
//! families the grouped detectors are meant to tell apart: rare glitch
//! frames drawn from a consistent off-speech cluster (short-duration
//! artifacts with a stable signature, as concatenation discontinuities
//! have), and trajectory smoothing (long-duration artifacts), plus a bulk
//! "model-shift" attack sampled from a mean-perturbed copy of the natural
//! emission model.
//!
//! Utterances are built as sequences of phoneme segments; each phoneme has
//! its own diagonal Gaussian emission whose mean sits near its sound-class
//! center, so grouped detectors see speech-like structure. Segment
//! boundaries are cross-faded over four frames in every utterance, natural
//! or spoofed, so boundary blending alone does not mark an utterance as
//! synthetic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::eval::{NATURAL_ATTACK_ID, TrialLabel};
use crate::features::FeatureMatrix;
use crate::gmm::DiagGmm;
use crate::grouping::{ClassMap, PhonemeAlignment, Segment, SoundClass};

/// Attack kinds the simulator can apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    Smooth,
    Glitch,
    ModelShift,
}

impl AttackKind {
    pub fn id(self) -> &'static str {
        match self {
            AttackKind::Smooth => "smooth",
            AttackKind::Glitch => "glitch",
            AttackKind::ModelShift => "shift",
        }
    }
}

/// Parameters for one attack application.
#[derive(Debug, Clone)]
pub struct AttackConfig {
    pub kind: AttackKind,
    /// Centered moving-average window in frames, odd.
    pub smooth_window: usize,
    /// Per-frame corruption probability.
    pub glitch_rate: f64,
    /// Glitch perturbation scale, in multiples of the per-dimension std.
    pub glitch_magnitude: f64,
    /// Mean offset scale for the model-shift attack, in multiples of the
    /// per-dimension emission std.
    pub shift_scale: f64,
    pub seed: u64,
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.glitch_rate) {
            return Err(Error::InvalidData(format!(
                "glitch rate must lie in [0, 1], got {}",
                self.glitch_rate
            )));
        }
        if self.smooth_window == 0 {
            return Err(Error::InvalidData("smoothing window must be >= 1".into()));
        }
        if self.glitch_magnitude.is_nan() || self.glitch_magnitude < 0.0 {
            return Err(Error::InvalidData("glitch magnitude must be >= 0".into()));
        }
        Ok(())
    }
}

/// Derives a per-utterance seed from the corpus seed and an utterance
/// index (splitmix64 over `seed XOR (index+1) * golden`), so corpus
/// generation can be partitioned per utterance without changing output.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `n` i.i.d. frames from the mixture: a component by weight, then
/// the diagonal Gaussian. Deterministic per seed.
pub fn sample_gmm(gmm: &DiagGmm, n: usize, seed: u64, id: &str) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = gmm.dim();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let mut u: f64 = rng.random();
        let mut component = gmm.num_components() - 1;
        for (k, &w) in gmm.weights().iter().enumerate() {
            if u < w {
                component = k;
                break;
            }
            u -= w;
        }
        let mean = gmm.mean(component);
        let var = gmm.variance(component);
        for j in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(mean[j] + var[j].sqrt() * z);
        }
    }
    FeatureMatrix::new(id, d, DEFAULT_FRAME_RATE_HZ, data)
        .expect("sampled features are finite by construction")
}

/// Per-dimension centered moving average with edge replication. A window
/// of one is the identity.
pub fn smooth_attack(feats: &FeatureMatrix, window: usize) -> Result<FeatureMatrix> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidData(format!(
            "smoothing window must be odd and >= 1, got {window}"
        )));
    }
    if window == 1 {
        return Ok(feats.clone());
    }
    let n = feats.num_frames() as isize;
    let d = feats.dim();
    let half = (window / 2) as isize;
    let mut data = Vec::with_capacity(feats.data().len());
    for i in 0..n {
        for j in 0..d {
            let mut acc = 0.0;
            for o in -half..=half {
                let idx = (i + o).clamp(0, n - 1) as usize;
                acc += feats.row(idx)[j];
            }
            data.push(acc / window as f64);
        }
    }
    FeatureMatrix::new(feats.id(), d, feats.frame_rate_hz(), data)
}

/// Corrupts each frame independently with probability `glitch_rate` by a
/// seeded Gaussian perturbation scaled to `glitch_magnitude` times the
/// per-dimension std of the input matrix. Unselected frames are copied
/// bit-identically.
pub fn glitch_attack(feats: &FeatureMatrix, cfg: &AttackConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let n = feats.num_frames();
    let d = feats.dim();
    if n == 0 {
        return Ok(feats.clone());
    }

    let std = per_dim_std(feats);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = Vec::with_capacity(feats.data().len());
    for i in 0..n {
        let hit = rng.random::<f64>() < cfg.glitch_rate;
        if hit {
            for (j, &x) in feats.row(i).iter().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(x + cfg.glitch_magnitude * std[j] * z);
            }
        } else {
            data.extend_from_slice(feats.row(i));
        }
    }
    FeatureMatrix::new(feats.id(), d, feats.frame_rate_hz(), data)
}

fn per_dim_std(feats: &FeatureMatrix) -> Vec<f64> {
    let n = feats.num_frames() as f64;
    let d = feats.dim();
    let mut mean = vec![0.0; d];
    for row in feats.rows() {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; d];
    for row in feats.rows() {
        for j in 0..d {
            let diff = row[j] - mean[j];
            var[j] += diff * diff;
        }
    }
    var.iter().map(|v| (v / n).sqrt()).collect()
}

pub const DEFAULT_FRAME_RATE_HZ: f64 = 100.0;

/// Corpus generator settings. The defaults produce the desk-scale demo:
/// 200 natural plus 200 spoofed utterances of 300-600 frames, 10
/// synthetic feature dimensions, split across the three attack kinds.
#[derive(Debug, Clone)]
pub struct CorpusConfig {
    pub num_natural: usize,
    pub num_spoof: usize,
    pub min_frames: usize,
    pub max_frames: usize,
    pub dim: usize,
    pub seed: u64,
    pub smooth_window: usize,
    pub glitch_rate: f64,
    pub glitch_magnitude: f64,
    pub shift_scale: f64,
    pub train_frac: f64,
    pub dev_frac: f64,
    /// Frame length in seconds used when writing alignments, so frame
    /// centers land inside their segments under the default front end.
    pub frame_len_s: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            num_natural: 200,
            num_spoof: 200,
            min_frames: 300,
            max_frames: 600,
            dim: 10,
            seed: 8,
            smooth_window: 5,
            glitch_rate: 0.02,
            glitch_magnitude: 4.0,
            shift_scale: 0.6,
            train_frac: 0.35,
            dev_frac: 0.35,
            frame_len_s: 0.025,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_natural == 0 || self.num_spoof == 0 {
            return Err(Error::InvalidData("corpus needs both classes".into()));
        }
        if self.min_frames == 0 || self.max_frames < self.min_frames {
            return Err(Error::InvalidData("bad frame count range".into()));
        }
        if self.dim == 0 {
            return Err(Error::InvalidData("dim must be positive".into()));
        }
        let fracs_ok = self.train_frac > 0.0
            && self.dev_frac > 0.0
            && self.train_frac + self.dev_frac < 1.0;
        if !fracs_ok {
            return Err(Error::InvalidData(
                "train and dev fractions must be positive and sum below 1".into(),
            ));
        }
        Ok(())
    }
}

/// Which pipeline stage an utterance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Dev,
    Eval,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Eval => "eval",
        }
    }
}

/// One generated utterance: features, its phoneme alignment, ground
/// truth, and the split it belongs to.
#[derive(Debug, Clone)]
pub struct SimulatedUtterance {
    pub features: FeatureMatrix,
    pub alignment: PhonemeAlignment,
    pub label: TrialLabel,
    pub attack_id: String,
    pub split: Split,
}

/// Per-phoneme diagonal Gaussian emissions clustered by sound class, plus
/// the fixed glitch cluster spoofed glitch frames are drawn from.
struct WorldModel {
    phonemes: Vec<String>,
    /// Per phoneme: (mean, std), both of length `dim`.
    emissions: Vec<(Vec<f64>, Vec<f64>)>,
    /// Per phoneme: (min, max) segment length in frames.
    seg_len: Vec<(usize, usize)>,
    /// Center of the glitch cluster, sitting outside the speech clusters.
    glitch_center: Vec<f64>,
    dim: usize,
}

impl WorldModel {
    fn build(dim: usize, glitch_magnitude: f64, seed: u64) -> Self {
        let map = ClassMap::builtin();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut class_centers = Vec::new();
        for _ in SoundClass::ALL {
            let center: Vec<f64> = (0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    4.0 * z
                })
                .collect();
            class_centers.push(center);
        }

        let mut phonemes = Vec::new();
        let mut emissions = Vec::new();
        let mut seg_len = Vec::new();
        for (phoneme, class) in map.entries() {
            let center = &class_centers[class.index()];
            let mean: Vec<f64> = center
                .iter()
                .map(|c| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    c + 1.0 * z
                })
                .collect();
            let std: Vec<f64> = (0..dim).map(|_| rng.random_range(0.9..1.4)).collect();
            phonemes.push(phoneme.to_string());
            emissions.push((mean, std));
            // stops are short, vowels long, everything else mid-length
            seg_len.push(match class {
                SoundClass::Stop => (3, 8),
                SoundClass::Vowel => (8, 30),
                _ => (5, 15),
            });
        }

        // glitch frames share a consistent signature the way concatenation
        // discontinuities do: a cluster sitting `magnitude` emission-stds
        // off one phoneme's mean, close enough to the speech clusters that
        // a single glitch frame is only mildly suspicious on its own. The
        // anchor and direction are chosen to maximize the pocket's
        // clearance from every other phoneme cluster, so the offset is
        // comparable across corpus seeds.
        let mut glitch_center = emissions[0].0.clone();
        let mut best_clearance = f64::NEG_INFINITY;
        for _ in 0..64 {
            let anchor = rng.random_range(0..emissions.len());
            let raw: Vec<f64> = (0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z
                })
                .collect();
            let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            let (anchor_mean, anchor_std) = &emissions[anchor];
            let candidate: Vec<f64> = anchor_mean
                .iter()
                .zip(anchor_std)
                .zip(&raw)
                .map(|((m, s), v)| m + v / norm * glitch_magnitude * s)
                .collect();
            let clearance = emissions
                .iter()
                .map(|(mean, std)| {
                    let avg_std = std.iter().sum::<f64>() / dim as f64;
                    let dist: f64 = candidate
                        .iter()
                        .zip(mean)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    dist / avg_std
                })
                .fold(f64::INFINITY, f64::min);
            if clearance > best_clearance {
                best_clearance = clearance;
                glitch_center = candidate;
            }
        }

        Self {
            phonemes,
            emissions,
            seg_len,
            glitch_center,
            dim,
        }
    }

    /// Shifted copy of the emission means for the model-shift attack; the
    /// offset direction is fixed per phoneme by the corpus seed.
    fn shifted(&self, scale: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.emissions
            .iter()
            .map(|(mean, std)| {
                mean.iter()
                    .zip(std)
                    .map(|(m, s)| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        m + scale * s * z
                    })
                    .collect()
            })
            .collect()
    }
}

/// `(start_frame, end_frame, phoneme_index)` of one generated segment.
type SegmentSpan = (usize, usize, usize);

/// Draws the segment sequence and natural frames for one utterance.
/// Phonemes are drawn from a shuffled bag that is refilled when empty, so
/// every utterance covers the inventory roughly evenly.
fn generate_segments(
    world: &WorldModel,
    target_frames: usize,
    rng: &mut ChaCha8Rng,
    means_override: Option<&[Vec<f64>]>,
) -> (Vec<Vec<f64>>, Vec<SegmentSpan>) {
    let mut frames: Vec<Vec<f64>> = Vec::with_capacity(target_frames);
    let mut segments = Vec::new();
    let mut bag: Vec<usize> = Vec::new();
    while frames.len() < target_frames {
        if bag.is_empty() {
            bag = (0..world.phonemes.len()).collect();
            for i in (1..bag.len()).rev() {
                let j = rng.random_range(0..=i);
                bag.swap(i, j);
            }
        }
        let p = bag.pop().unwrap();
        let (lo, hi) = world.seg_len[p];
        let len = rng.random_range(lo..=hi).min(target_frames - frames.len()).max(1);
        let start = frames.len();
        let (default_mean, std) = &world.emissions[p];
        let mean = means_override.map_or(default_mean, |m| &m[p]);
        for _ in 0..len {
            let frame: Vec<f64> = (0..world.dim)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(rng);
                    mean[j] + std[j] * z
                })
                .collect();
            frames.push(frame);
        }
        segments.push((start, frames.len(), p));
    }
    // graded cross-fade of seeded length around every boundary, applied to
    // natural and spoofed utterances alike so blending alone carries no
    // spoofing evidence
    for w in segments.windows(2) {
        let b = w[1].0 as isize;
        let n = frames.len() as isize;
        let fade = rng.random_range(2..=5) as isize;
        let anchor_prev = frames[(b - 1).clamp(0, n - 1) as usize].clone();
        let anchor_next = frames[b.clamp(0, n - 1) as usize].clone();
        for step in 0..fade {
            let i = b - fade / 2 + step;
            if i < 0 || i >= n {
                continue;
            }
            let lambda = (step as f64 + 1.0) / (fade as f64 + 1.0);
            let frame = &mut frames[i as usize];
            for j in 0..world.dim {
                let own = frame[j];
                let other = if lambda < 0.5 { anchor_next[j] } else { anchor_prev[j] };
                let mix = 0.5 - (lambda - 0.5).abs();
                frame[j] = (1.0 - mix) * own + mix * other;
            }
        }
    }
    (frames, segments)
}

fn split_for(index: usize, total: usize, cfg: &CorpusConfig) -> Split {
    let train_end = (total as f64 * cfg.train_frac).ceil() as usize;
    let dev_end = train_end + (total as f64 * cfg.dev_frac).ceil() as usize;
    if index < train_end {
        Split::Train
    } else if index < dev_end {
        Split::Dev
    } else {
        Split::Eval
    }
}

/// Generates the full corpus deterministically from `cfg.seed`. Spoofed
/// utterances are spread round-robin over the three attack kinds.
pub fn generate_corpus(cfg: &CorpusConfig) -> Result<Vec<SimulatedUtterance>> {
    cfg.validate()?;
    let world = WorldModel::build(cfg.dim, cfg.glitch_magnitude, mix_seed(cfg.seed, 0));
    let shifted_means = world.shifted(cfg.shift_scale, mix_seed(cfg.seed, 1));

    let attacks = [AttackKind::Glitch, AttackKind::Smooth, AttackKind::ModelShift];
    let mut corpus = Vec::with_capacity(cfg.num_natural + cfg.num_spoof);

    for u in 0..cfg.num_natural + cfg.num_spoof {
        let natural = u < cfg.num_natural;
        let attack = if natural {
            None
        } else {
            Some(attacks[(u - cfg.num_natural) % attacks.len()])
        };
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 2 + u as u64));
        let target = rng.random_range(cfg.min_frames..=cfg.max_frames);

        let means_override = match attack {
            Some(AttackKind::ModelShift) => Some(shifted_means.as_slice()),
            _ => None,
        };
        let (frames, segments) = generate_segments(&world, target, &mut rng, means_override);

        let (attack_id, class_index) = match attack {
            None => (NATURAL_ATTACK_ID.to_string(), u),
            Some(a) => (a.id().to_string(), u - cfg.num_natural),
        };
        let id = format!("{attack_id}-{class_index:04}");

        let mut frames = frames;
        if attack == Some(AttackKind::Glitch) {
            // glitch frames come from the corpus-wide glitch cluster; the
            // per-utterance density varies the way join quality varies
            // across unit-selection outputs
            let mut grng =
                ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 1_000_000 + u as u64));
            let rate = cfg.glitch_rate * grng.random_range(0.3..1.7);
            for frame in &mut frames {
                if grng.random::<f64>() < rate {
                    for (v, center) in frame.iter_mut().zip(&world.glitch_center) {
                        let z: f64 = StandardNormal.sample(&mut grng);
                        *v = center + z;
                    }
                }
            }
        }
        let feats = FeatureMatrix::from_rows(&id, cfg.dim, DEFAULT_FRAME_RATE_HZ, &frames)?;
        let feats = match attack {
            Some(AttackKind::Smooth) => smooth_attack(&feats, cfg.smooth_window)?,
            _ => feats,
        };

        // alignment times offset by half a frame so frame centers land
        // inside their segments under the default front end
        let offset = cfg.frame_len_s / 2.0;
        let alignment = PhonemeAlignment::new(
            &id,
            segments
                .iter()
                .map(|&(start, end, p)| Segment {
                    start: start as f64 / DEFAULT_FRAME_RATE_HZ + offset,
                    end: end as f64 / DEFAULT_FRAME_RATE_HZ + offset,
                    phoneme: world.phonemes[p].clone(),
                })
                .collect(),
        )?;

        let (split_index, split_total) = if natural {
            (u, cfg.num_natural)
        } else {
            // per-attack split so every attack appears in every split
            let spoof_index = u - cfg.num_natural;
            (
                spoof_index / attacks.len(),
                cfg.num_spoof.div_ceil(attacks.len()),
            )
        };

        corpus.push(SimulatedUtterance {
            features: feats,
            alignment,
            label: if natural {
                TrialLabel::Natural
            } else {
                TrialLabel::Spoof
            },
            attack_id,
            split: split_for(split_index, split_total, cfg),
        });
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy_gmm() -> DiagGmm {
        DiagGmm::new(2, vec![1.0], vec![1.0, -2.0], vec![0.25, 4.0]).unwrap()
    }

    #[test]
    fn zero_samples_give_an_empty_matrix() {
        let m = sample_gmm(&toy_gmm(), 0, 3, "u");
        assert_eq!(m.num_frames(), 0);
        assert_eq!(m.dim(), 2);
    }

    #[test]
    fn sample_mean_approaches_model_mean() {
        let n = 100_000;
        let m = sample_gmm(&toy_gmm(), n, 11, "u");
        for j in 0..2 {
            let mean: f64 = m.rows().map(|r| r[j]).sum::<f64>() / n as f64;
            let sigma = toy_gmm().variance(0)[j].sqrt();
            let bound = 4.0 * sigma / (n as f64).sqrt();
            let expected = toy_gmm().mean(0)[j];
            assert!(
                (mean - expected).abs() < bound,
                "dim {j}: {mean} vs {expected} +- {bound}"
            );
        }
    }

    #[test]
    fn sampling_is_bit_deterministic() {
        let a = sample_gmm(&toy_gmm(), 500, 42, "u");
        let b = sample_gmm(&toy_gmm(), 500, 42, "u");
        assert_eq!(a.data(), b.data());
    }

    fn random_feats(seed: u64, n: usize, d: usize) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * d).map(|_| rng.random_range(-3.0..3.0)).collect();
        FeatureMatrix::new("u", d, 100.0, data).unwrap()
    }

    #[test]
    fn window_one_smoothing_is_identity() {
        let feats = random_feats(1, 40, 3);
        let out = smooth_attack(&feats, 1).unwrap();
        assert_eq!(out.data(), feats.data());
    }

    #[test]
    fn even_windows_are_rejected() {
        let feats = random_feats(1, 10, 2);
        assert!(smooth_attack(&feats, 4).is_err());
    }

    #[test]
    fn constant_sequence_is_unchanged_by_smoothing() {
        let feats = FeatureMatrix::new("u", 2, 100.0, vec![1.5; 40]).unwrap();
        let out = smooth_attack(&feats, 5).unwrap();
        assert_eq!(out.data(), feats.data());
    }

    #[test]
    fn zero_rate_glitch_is_identity() {
        let feats = random_feats(2, 30, 4);
        let cfg = AttackConfig {
            kind: AttackKind::Glitch,
            smooth_window: 1,
            glitch_rate: 0.0,
            glitch_magnitude: 3.0,
            shift_scale: 0.0,
            seed: 5,
        };
        let out = glitch_attack(&feats, &cfg).unwrap();
        assert_eq!(out.data(), feats.data());
    }

    #[test]
    fn zero_magnitude_full_rate_glitch_is_identity() {
        let feats = random_feats(3, 30, 4);
        let cfg = AttackConfig {
            kind: AttackKind::Glitch,
            smooth_window: 1,
            glitch_rate: 1.0,
            glitch_magnitude: 0.0,
            shift_scale: 0.0,
            seed: 5,
        };
        let out = glitch_attack(&feats, &cfg).unwrap();
        for (a, b) in feats.data().iter().zip(out.data()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn glitch_count_follows_the_binomial_bound() {
        let n = 10_000;
        let feats = random_feats(4, n, 2);
        let rate = 0.05;
        let cfg = AttackConfig {
            kind: AttackKind::Glitch,
            smooth_window: 1,
            glitch_rate: rate,
            glitch_magnitude: 6.0,
            shift_scale: 0.0,
            seed: 9,
        };
        let out = glitch_attack(&feats, &cfg).unwrap();
        let hit = (0..n)
            .filter(|&i| out.row(i) != feats.row(i))
            .count() as f64;
        let expected = n as f64 * rate;
        let bound = 4.0 * (n as f64 * rate * (1.0 - rate)).sqrt();
        assert!(
            (hit - expected).abs() < bound,
            "{hit} hits vs {expected} +- {bound}"
        );
    }

    proptest! {
        #[test]
        fn attacks_preserve_shape_and_are_deterministic(
            seed in 0u64..50,
            n in 1usize..60,
            window in prop::sample::select(vec![1usize, 3, 5, 7]),
        ) {
            let feats = random_feats(seed, n, 3);
            let sm = smooth_attack(&feats, window).unwrap();
            prop_assert_eq!(sm.num_frames(), n);
            prop_assert_eq!(sm.dim(), 3);
            let sm2 = smooth_attack(&feats, window).unwrap();
            prop_assert_eq!(sm.data(), sm2.data());

            let cfg = AttackConfig {
                kind: AttackKind::Glitch,
                smooth_window: 1,
                glitch_rate: 0.3,
                glitch_magnitude: 2.0,
                shift_scale: 0.0,
                seed,
            };
            let gl = glitch_attack(&feats, &cfg).unwrap();
            prop_assert_eq!(gl.num_frames(), n);
            let gl2 = glitch_attack(&feats, &cfg).unwrap();
            prop_assert_eq!(gl.data(), gl2.data());
        }

        #[test]
        fn smoothing_never_raises_per_dimension_variance(
            seed in 0u64..50,
            window in prop::sample::select(vec![3usize, 5, 7]),
        ) {
            let feats = random_feats(seed, 80, 2);
            let out = smooth_attack(&feats, window).unwrap();
            let var = |m: &FeatureMatrix, j: usize| {
                let n = m.num_frames() as f64;
                let mean: f64 = m.rows().map(|r| r[j]).sum::<f64>() / n;
                m.rows().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<f64>() / n
            };
            for j in 0..2 {
                prop_assert!(var(&out, j) <= var(&feats, j) + 1e-12);
            }
        }

        #[test]
        fn smoothing_commutes_with_affine_maps(
            seed in 0u64..30,
            a in 0.5f64..2.0,
            b in -3.0f64..3.0,
        ) {
            let feats = random_feats(seed, 50, 2);
            let mapped = FeatureMatrix::new(
                "u", 2, 100.0,
                feats.data().iter().map(|x| a * x + b).collect(),
            ).unwrap();
            let smooth_then_map = smooth_attack(&feats, 5).unwrap();
            let map_then_smooth = smooth_attack(&mapped, 5).unwrap();
            for (x, y) in smooth_then_map.data().iter().zip(map_then_smooth.data()) {
                prop_assert!((a * x + b - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn corpus_has_expected_composition() {
        let cfg = CorpusConfig {
            num_natural: 30,
            num_spoof: 30,
            min_frames: 50,
            max_frames: 80,
            ..CorpusConfig::default()
        };
        let corpus = generate_corpus(&cfg).unwrap();
        assert_eq!(corpus.len(), 60);

        let natural = corpus.iter().filter(|u| u.label == TrialLabel::Natural).count();
        assert_eq!(natural, 30);
        for kind in ["glitch", "smooth", "shift"] {
            let of_kind: Vec<_> = corpus.iter().filter(|u| u.attack_id == kind).collect();
            assert_eq!(of_kind.len(), 10, "{kind}");
            for split in [Split::Train, Split::Dev, Split::Eval] {
                assert!(
                    of_kind.iter().any(|u| u.split == split),
                    "{kind} missing from {:?}",
                    split
                );
            }
        }

        for utt in &corpus {
            let n = utt.features.num_frames();
            assert!((cfg.min_frames..=cfg.max_frames).contains(&n));
            // alignment must cover every frame center
            let last = utt.alignment.segments().last().unwrap();
            let first = utt.alignment.segments().first().unwrap();
            let offset = cfg.frame_len_s / 2.0;
            assert_eq!(first.start, offset);
            assert!((last.end - (n as f64 / 100.0 + offset)).abs() < 1e-9);
        }
    }

    #[test]
    fn corpus_generation_is_deterministic() {
        let cfg = CorpusConfig {
            num_natural: 6,
            num_spoof: 6,
            min_frames: 40,
            max_frames: 60,
            ..CorpusConfig::default()
        };
        let a = generate_corpus(&cfg).unwrap();
        let b = generate_corpus(&cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.features.data(), y.features.data());
            assert_eq!(x.features.id(), y.features.id());
        }
    }
}
