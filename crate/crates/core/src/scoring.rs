//! Log-likelihood-ratio scoring: the frame-averaged baseline, per-group
//! scores, and duration weighting.
//!
//! All scores are natural-log based. Higher means more natural.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::gmm::DiagGmm;
use crate::grouping::{GroupAssignment, GroupScheme};

/// What a score vector's entries are: the J=1 baseline, one of the three
/// grouped detectors, or the J=3 second-stage detector triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreScheme {
    Baseline,
    Grouped(GroupScheme),
    Detector,
}

impl fmt::Display for ScoreScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreScheme::Baseline => f.write_str("baseline"),
            ScoreScheme::Grouped(g) => write!(f, "{g}"),
            ScoreScheme::Detector => f.write_str("detector"),
        }
    }
}

impl FromStr for ScoreScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(ScoreScheme::Baseline),
            "detector" => Ok(ScoreScheme::Detector),
            other => Ok(ScoreScheme::Grouped(other.parse()?)),
        }
    }
}

/// Per-group log-likelihood-ratio scores for one utterance, with the frame
/// counts the duration weighting needs.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupScoreVector {
    pub scheme: ScoreScheme,
    pub id: String,
    pub scores: Vec<f64>,
    pub counts: Vec<usize>,
    /// All frames of the utterance, assigned or not.
    pub total_frames: usize,
    pub weighted: bool,
}

impl GroupScoreVector {
    pub fn num_groups(&self) -> usize {
        self.scores.len()
    }
}

/// Per-frame `ln p(x | nat) - ln p(x | syn)`.
pub fn per_frame_llr(feats: &FeatureMatrix, nat: &DiagGmm, syn: &DiagGmm) -> Result<Vec<f64>> {
    for (model, context) in [(nat, "natural model"), (syn, "synthetic model")] {
        if model.dim() != feats.dim() {
            return Err(Error::DimensionMismatch {
                context,
                expected: model.dim(),
                actual: feats.dim(),
            });
        }
    }
    let nat_scorer = nat.scorer();
    let syn_scorer = syn.scorer();
    Ok(feats
        .rows()
        .map(|r| nat_scorer.log_likelihood(r) - syn_scorer.log_likelihood(r))
        .collect())
}

/// Frame-averaged log-likelihood ratio over the whole utterance.
pub fn baseline_llr(feats: &FeatureMatrix, nat: &DiagGmm, syn: &DiagGmm) -> Result<f64> {
    if feats.num_frames() == 0 {
        return Err(Error::NoSpeech(feats.id().to_string()));
    }
    let llrs = per_frame_llr(feats, nat, syn)?;
    Ok(llrs.iter().sum::<f64>() / llrs.len() as f64)
}

/// Mean log-likelihood ratio per group. Groups with no frames carry score
/// zero, so the vector stays total for fusion.
pub fn group_scores(
    feats: &FeatureMatrix,
    assign: &GroupAssignment,
    nat: &DiagGmm,
    syn: &DiagGmm,
) -> Result<GroupScoreVector> {
    if assign.indices.len() != feats.num_frames() {
        return Err(Error::DimensionMismatch {
            context: "group assignment",
            expected: feats.num_frames(),
            actual: assign.indices.len(),
        });
    }
    let llrs = per_frame_llr(feats, nat, syn)?;
    Ok(aggregate_group_scores(feats.id(), &llrs, assign))
}

/// Aggregates precomputed per-frame LLRs into a group score vector.
pub(crate) fn aggregate_group_scores(
    id: &str,
    llrs: &[f64],
    assign: &GroupAssignment,
) -> GroupScoreVector {
    let j = assign.num_groups();
    let mut sums = vec![0.0; j];
    let mut counts = vec![0usize; j];
    for (idx, llr) in assign.indices.iter().zip(llrs) {
        if let Some(g) = idx {
            sums[*g] += llr;
            counts[*g] += 1;
        }
    }
    let scores = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    GroupScoreVector {
        scheme: ScoreScheme::Grouped(assign.scheme),
        id: id.to_string(),
        scores,
        counts,
        total_frames: llrs.len(),
        weighted: false,
    }
}

/// Applies duration weighting `S'_j = ln(N_j + 1) * S_j`. Weighting an
/// already-weighted vector is an error.
pub fn duration_weight(scores: &GroupScoreVector) -> Result<GroupScoreVector> {
    if scores.weighted {
        return Err(Error::AlreadyWeighted);
    }
    let weighted = scores
        .scores
        .iter()
        .zip(&scores.counts)
        .map(|(s, &n)| ((n as f64) + 1.0).ln() * s)
        .collect();
    Ok(GroupScoreVector {
        scores: weighted,
        weighted: true,
        ..scores.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::GroupScheme;
    use proptest::prelude::*;

    fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix::from_rows("u", rows[0].len(), 100.0, rows).unwrap()
    }

    fn gmm(weights: &[f64], means: &[f64], vars: &[f64], d: usize) -> DiagGmm {
        DiagGmm::new(d, weights.to_vec(), means.to_vec(), vars.to_vec()).unwrap()
    }

    fn assignment(j: usize, indices: Vec<Option<usize>>) -> GroupAssignment {
        GroupAssignment {
            scheme: GroupScheme::Class,
            labels: (0..j).map(|i| format!("c{i}")).collect(),
            indices,
        }
    }

    #[test]
    fn identical_models_score_exactly_zero() {
        let m = gmm(&[1.0], &[0.5], &[2.0], 1);
        let feats = matrix(&[vec![0.1], vec![-3.0], vec![7.5]]);
        assert_eq!(baseline_llr(&feats, &m, &m).unwrap(), 0.0);
    }

    #[test]
    fn single_frame_is_the_plain_log_ratio() {
        let nat = gmm(&[1.0], &[0.0], &[1.0], 1);
        let syn = gmm(&[1.0], &[2.0], &[1.5], 1);
        let feats = matrix(&[vec![0.7]]);
        let expected =
            nat.log_likelihood(&[0.7]).unwrap() - syn.log_likelihood(&[0.7]).unwrap();
        assert_eq!(baseline_llr(&feats, &nat, &syn).unwrap(), expected);
    }

    #[test]
    fn empty_utterance_is_a_no_speech_error() {
        let m = gmm(&[1.0], &[0.0], &[1.0], 1);
        let feats = FeatureMatrix::empty("silent", 1, 100.0).unwrap();
        assert!(matches!(
            baseline_llr(&feats, &m, &m),
            Err(Error::NoSpeech(id)) if id == "silent"
        ));
    }

    fn random_models_and_frames(seed: u64, n: usize) -> (FeatureMatrix, DiagGmm, DiagGmm) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = 3;
        let k = 4;
        let mut make = |offset: f64| {
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let means: Vec<f64> = (0..k * d).map(|_| rng.random_range(-2.0..2.0) + offset).collect();
            let vars: Vec<f64> = (0..k * d).map(|_| rng.random_range(0.3..2.0)).collect();
            gmm(&weights, &means, &vars, d)
        };
        let nat = make(0.0);
        let syn = make(0.5);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        (matrix(&rows), nat, syn)
    }

    #[test]
    fn baseline_matches_per_frame_summation_oracle() {
        let (feats, nat, syn) = random_models_and_frames(42, 20);
        let fast = baseline_llr(&feats, &nat, &syn).unwrap();
        let mut acc = 0.0;
        for row in feats.rows() {
            acc += nat.log_likelihood(row).unwrap() - syn.log_likelihood(row).unwrap();
        }
        let direct = acc / feats.num_frames() as f64;
        assert!(
            (fast - direct).abs() <= 1e-12 * direct.abs().max(1.0),
            "{fast} vs {direct}"
        );
    }

    #[test]
    fn trivial_partition_reproduces_the_baseline() {
        let (feats, nat, syn) = random_models_and_frames(7, 15);
        let assign = assignment(1, vec![Some(0); 15]);
        let gs = group_scores(&feats, &assign, &nat, &syn).unwrap();
        let base = baseline_llr(&feats, &nat, &syn).unwrap();
        assert!((gs.scores[0] - base).abs() < 1e-12);
        assert_eq!(gs.counts[0], 15);
    }

    #[test]
    fn hand_placed_three_group_means() {
        let nat = gmm(&[1.0], &[0.0], &[1.0], 1);
        let syn = gmm(&[1.0], &[1.0], &[1.0], 1);
        let rows = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let feats = matrix(&rows);
        let assign = assignment(3, vec![Some(0), Some(1), Some(1), Some(2), Some(2)]);
        let gs = group_scores(&feats, &assign, &nat, &syn).unwrap();

        let llr = |x: f64| {
            nat.log_likelihood(&[x]).unwrap() - syn.log_likelihood(&[x]).unwrap()
        };
        assert!((gs.scores[0] - llr(0.0)).abs() < 1e-12);
        assert!((gs.scores[1] - (llr(1.0) + llr(2.0)) / 2.0).abs() < 1e-12);
        assert!((gs.scores[2] - (llr(3.0) + llr(4.0)) / 2.0).abs() < 1e-12);
        assert_eq!(gs.counts, vec![1, 2, 2]);
    }

    #[test]
    fn empty_groups_score_zero() {
        let (feats, nat, syn) = random_models_and_frames(3, 6);
        let assign = assignment(4, vec![Some(1); 6]);
        let gs = group_scores(&feats, &assign, &nat, &syn).unwrap();
        assert_eq!(gs.scores[0], 0.0);
        assert_eq!(gs.counts[0], 0);
        assert_eq!(gs.scores[2], 0.0);
        assert_eq!(gs.scores[3], 0.0);
    }

    #[test]
    fn swapping_models_negates_every_group_score() {
        let (feats, nat, syn) = random_models_and_frames(11, 12);
        let assign = assignment(3, (0..12).map(|i| Some(i % 3)).collect());
        let fwd = group_scores(&feats, &assign, &nat, &syn).unwrap();
        let rev = group_scores(&feats, &assign, &syn, &nat).unwrap();
        for (a, b) in fwd.scores.iter().zip(&rev.scores) {
            assert_eq!(*a, -b);
        }
    }

    #[test]
    fn duration_weight_formula() {
        let v = GroupScoreVector {
            scheme: ScoreScheme::Grouped(GroupScheme::Class),
            id: "u".into(),
            scores: vec![5.0, 2.0, -1.5],
            counts: vec![0, 1, 9],
            total_frames: 10,
            weighted: false,
        };
        let w = duration_weight(&v).unwrap();
        assert_eq!(w.scores[0], 0.0);
        assert!((w.scores[1] - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!((w.scores[1] - 1.386294361).abs() < 1e-9);
        assert_eq!(w.scores[2], (10.0f64).ln() * -1.5);
        assert_eq!(w.counts, v.counts);
        assert!(w.weighted);
    }

    #[test]
    fn weighting_twice_is_rejected() {
        let v = GroupScoreVector {
            scheme: ScoreScheme::Baseline,
            id: "u".into(),
            scores: vec![1.0],
            counts: vec![4],
            total_frames: 4,
            weighted: false,
        };
        let once = duration_weight(&v).unwrap();
        assert!(matches!(duration_weight(&once), Err(Error::AlreadyWeighted)));
    }

    proptest! {
        /// Frame-count-weighted group means recombine to the mean
        /// per-frame LLR over the assigned frames.
        #[test]
        fn partition_identity(seed in 0u64..500, j in 1usize..6) {
            let (feats, nat, syn) = random_models_and_frames(seed, 24);
            let indices: Vec<Option<usize>> =
                (0..24).map(|i| Some((i * 7 + seed as usize) % j)).collect();
            let assign = assignment(j, indices);
            let gs = group_scores(&feats, &assign, &nat, &syn).unwrap();
            let base = baseline_llr(&feats, &nat, &syn).unwrap();
            let recombined: f64 = gs
                .scores
                .iter()
                .zip(&gs.counts)
                .map(|(s, &n)| s * n as f64 / 24.0)
                .sum();
            prop_assert!((recombined - base).abs() < 1e-9, "{recombined} vs {base}");
        }

        #[test]
        fn weighting_preserves_sign_and_scales_homogeneously(
            scores in proptest::collection::vec(-5.0f64..5.0, 4),
            counts in proptest::collection::vec(1usize..50, 4),
            c in 0.01f64..10.0,
        ) {
            let v = GroupScoreVector {
                scheme: ScoreScheme::Grouped(GroupScheme::Phoneme),
                id: "u".into(),
                scores: scores.clone(),
                counts: counts.clone(),
                total_frames: counts.iter().sum(),
                weighted: false,
            };
            let w = duration_weight(&v).unwrap();
            for (ws, s) in w.scores.iter().zip(&scores) {
                prop_assert_eq!(ws.signum(), s.signum());
            }
            let scaled = GroupScoreVector {
                scores: scores.iter().map(|s| c * s).collect(),
                ..v.clone()
            };
            let ws = duration_weight(&scaled).unwrap();
            for (a, b) in ws.scores.iter().zip(&w.scores) {
                prop_assert!((a - c * b).abs() < 1e-9 * b.abs().max(1.0));
            }
        }
    }
}
