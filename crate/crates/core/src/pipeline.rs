//! In-memory desk-scale pipeline over a simulated corpus: train the
//! natural and synthetic models on the train split, score and fuse the
//! grouped detectors on the dev split, and evaluate everything on the
//! eval split. The CLI drives the same stages through files; this module
//! exists for programmatic runs and end-to-end verification.

use std::collections::BTreeSet;

use crate::attacksim::{CorpusConfig, SimulatedUtterance, Split, generate_corpus};
use crate::error::{Error, Result};
use crate::eval::{Trial, TrialLabel, TrialSet, compute_eer};
use crate::features::FeatureMatrix;
use crate::fusion::{
    DetectorScores, FusionConfig, FusionModel, apply_detector_fusion, apply_fusion,
    fuse_detectors, train_fusion,
};
use crate::gmm::{DiagGmm, TrainConfig, kmeans_init, map_adapt, train_em};
use crate::grouping::{ClassMap, GroupScheme, group_by_class, group_by_gaussian, group_by_phoneme};
use crate::scoring::{aggregate_group_scores, duration_weight};

/// Everything one desk run needs.
#[derive(Debug, Clone, Default)]
pub struct DeskConfig {
    pub corpus: CorpusConfig,
    pub train: TrainConfig,
    pub fusion: FusionConfig,
    /// Apply duration weighting to the group scores before fusion.
    pub weighted: bool,
    /// Attack ids excluded from fusion training; the remaining attacks
    /// form the known set.
    pub withheld_attacks: Vec<String>,
}

/// Fused outputs of one grouped detector.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub scheme: GroupScheme,
    pub fusion: FusionModel,
    pub dev_trials: Vec<Trial>,
    pub eval_trials: Vec<Trial>,
}

/// Models, per-scheme results, and the second-stage fusion of one run.
#[derive(Debug, Clone)]
pub struct DeskOutcome {
    pub natural_model: DiagGmm,
    pub synthetic_adapted: DiagGmm,
    pub synthetic_independent: DiagGmm,
    pub schemes: Vec<SchemeOutcome>,
    pub detector_fusion: FusionModel,
    pub fused_eval_trials: Vec<Trial>,
    pub known_attacks: BTreeSet<String>,
}

/// Concatenates the frames of several utterances into one matrix.
pub fn pool_frames(utts: &[&FeatureMatrix], id: &str) -> Result<FeatureMatrix> {
    let first = utts
        .first()
        .ok_or_else(|| Error::EmptyInput(format!("frame pool {id:?}")))?;
    let dim = first.dim();
    let mut data = Vec::new();
    for u in utts {
        if u.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "frame pool",
                expected: dim,
                actual: u.dim(),
            });
        }
        data.extend_from_slice(u.data());
    }
    FeatureMatrix::new(id, dim, first.frame_rate_hz(), data)
}

fn trials_on_subset(trials: &[Trial], attack: Option<&str>) -> TrialSet {
    let subset = trials
        .iter()
        .filter(|t| match attack {
            None => true,
            Some(a) => t.label == TrialLabel::Natural || t.attack_id == a,
        })
        .cloned()
        .collect();
    TrialSet::new(subset, BTreeSet::new())
}

/// EER over all natural trials plus the spoof trials of one attack
/// (or every attack when `attack` is `None`).
pub fn subset_eer(trials: &[Trial], attack: Option<&str>) -> Result<f64> {
    compute_eer(&trials_on_subset(trials, attack))
}

/// Equal error rate and total frame count of each single-group detector:
/// group `j`'s detector scores an utterance by `S_j` alone. Groups absent
/// from one class (so their EER is undefined) report `None`.
pub fn per_group_eers(
    vectors: &[crate::scoring::GroupScoreVector],
    labels: &[TrialLabel],
) -> Result<Vec<(Option<f64>, usize)>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::EmptyInput("per-group analysis".into()))?;
    let j = first.num_groups();
    let mut out = Vec::with_capacity(j);
    for g in 0..j {
        let mut natural = Vec::new();
        let mut spoof = Vec::new();
        let mut frames = 0usize;
        for (v, label) in vectors.iter().zip(labels) {
            if v.num_groups() != j {
                return Err(Error::DimensionMismatch {
                    context: "per-group analysis",
                    expected: j,
                    actual: v.num_groups(),
                });
            }
            if v.counts[g] == 0 {
                continue;
            }
            frames += v.counts[g];
            match label {
                TrialLabel::Natural => natural.push(v.scores[g]),
                TrialLabel::Spoof => spoof.push(v.scores[g]),
            }
        }
        let eer = if natural.is_empty() || spoof.is_empty() {
            None
        } else {
            let trials: Vec<Trial> = natural
                .iter()
                .enumerate()
                .map(|(i, &s)| Trial::new(format!("n{i}"), TrialLabel::Natural, "human", s))
                .chain(
                    spoof.iter().enumerate().map(|(i, &s)| {
                        Trial::new(format!("s{i}"), TrialLabel::Spoof, "spoof", s)
                    }),
                )
                .collect::<Result<_>>()?;
            Some(compute_eer(&TrialSet::new(trials, BTreeSet::new()))?)
        };
        out.push((eer, frames));
    }
    Ok(out)
}

/// Runs the whole desk pipeline deterministically from the seeds inside
/// `cfg`.
pub fn run_desk_pipeline(cfg: &DeskConfig) -> Result<DeskOutcome> {
    let corpus = generate_corpus(&cfg.corpus)?;
    run_on_corpus(cfg, &corpus)
}

/// The pipeline stages after corpus generation, reusable when the corpus
/// already exists.
pub fn run_on_corpus(cfg: &DeskConfig, corpus: &[SimulatedUtterance]) -> Result<DeskOutcome> {
    let class_map = ClassMap::builtin();
    let phoneme_set = class_map.phonemes();
    let frame_len_s = cfg.corpus.frame_len_s;

    let train_nat: Vec<&FeatureMatrix> = corpus
        .iter()
        .filter(|u| u.split == Split::Train && u.label == TrialLabel::Natural)
        .map(|u| &u.features)
        .collect();
    let train_spoof: Vec<&FeatureMatrix> = corpus
        .iter()
        .filter(|u| u.split == Split::Train && u.label == TrialLabel::Spoof)
        .map(|u| &u.features)
        .collect();

    let nat_pool = pool_frames(&train_nat, "train-natural")?;
    let spoof_pool = pool_frames(&train_spoof, "train-spoof")?;

    let nat_init = kmeans_init(&nat_pool, &cfg.train)?;
    let (natural_model, _) = train_em(&nat_init, &nat_pool, &cfg.train)?;
    let synthetic_adapted = map_adapt(&natural_model, &spoof_pool, cfg.train.map_relevance)?;
    let spoof_init = kmeans_init(&spoof_pool, &cfg.train)?;
    let (synthetic_independent, _) = train_em(&spoof_init, &spoof_pool, &cfg.train)?;

    // per-utterance group scores for dev and eval, per scheme
    let schemes = [GroupScheme::Class, GroupScheme::Phoneme, GroupScheme::Gaussian];
    let scored: Vec<&SimulatedUtterance> = corpus
        .iter()
        .filter(|u| u.split != Split::Train)
        .collect();

    let mut per_scheme_vectors: Vec<Vec<crate::scoring::GroupScoreVector>> =
        vec![Vec::new(); schemes.len()];
    for utt in &scored {
        let llrs = crate::scoring::per_frame_llr(
            &utt.features,
            &natural_model,
            &synthetic_adapted,
        )?;
        for (si, scheme) in schemes.iter().enumerate() {
            let assignment = match scheme {
                GroupScheme::Gaussian => group_by_gaussian(&natural_model, &utt.features)?,
                GroupScheme::Phoneme => {
                    group_by_phoneme(&utt.alignment, &utt.features, &phoneme_set, frame_len_s)?
                }
                GroupScheme::Class => {
                    group_by_class(&utt.alignment, &utt.features, &class_map, frame_len_s)?
                }
            };
            let mut vector = aggregate_group_scores(utt.features.id(), &llrs, &assignment);
            if cfg.weighted {
                vector = duration_weight(&vector)?;
            }
            per_scheme_vectors[si].push(vector);
        }
    }

    let withheld: BTreeSet<&str> = cfg.withheld_attacks.iter().map(|s| s.as_str()).collect();
    let known_attacks: BTreeSet<String> = corpus
        .iter()
        .filter(|u| u.label == TrialLabel::Spoof && !withheld.contains(u.attack_id.as_str()))
        .map(|u| u.attack_id.clone())
        .collect();

    let mut outcomes = Vec::new();
    for (si, &scheme) in schemes.iter().enumerate() {
        let mut train_vectors = Vec::new();
        let mut train_labels = Vec::new();
        for (utt, vector) in scored.iter().zip(&per_scheme_vectors[si]) {
            if utt.split == Split::Dev && !withheld.contains(utt.attack_id.as_str()) {
                train_vectors.push(vector.clone());
                train_labels.push(utt.label);
            }
        }
        let fusion = train_fusion(&train_vectors, &train_labels, &cfg.fusion)?;

        let mut dev_trials = Vec::new();
        let mut eval_trials = Vec::new();
        for (utt, vector) in scored.iter().zip(&per_scheme_vectors[si]) {
            let score = apply_fusion(&fusion, vector)?;
            let trial = Trial::new(utt.features.id(), utt.label, &utt.attack_id, score)?;
            match utt.split {
                Split::Dev => dev_trials.push(trial),
                Split::Eval => eval_trials.push(trial),
                Split::Train => unreachable!("train split was filtered out"),
            }
        }
        outcomes.push(SchemeOutcome {
            scheme,
            fusion,
            dev_trials,
            eval_trials,
        });
    }

    // second stage: fuse the three detector scores
    let detector_triples = |split: Split| -> Vec<(DetectorScores, TrialLabel, String)> {
        let by_scheme: Vec<&Vec<Trial>> = outcomes
            .iter()
            .map(|o| match split {
                Split::Dev => &o.dev_trials,
                _ => &o.eval_trials,
            })
            .collect();
        (0..by_scheme[0].len())
            .map(|i| {
                let t = &by_scheme[0][i];
                (
                    DetectorScores {
                        id: t.id.clone(),
                        class_score: by_scheme[0][i].score,
                        phoneme_score: by_scheme[1][i].score,
                        gaussian_score: by_scheme[2][i].score,
                    },
                    t.label,
                    t.attack_id.clone(),
                )
            })
            .collect()
    };

    let dev_triples = detector_triples(Split::Dev);
    let train_inputs: Vec<DetectorScores> = dev_triples
        .iter()
        .filter(|(_, _, attack)| !withheld.contains(attack.as_str()))
        .map(|(d, _, _)| d.clone())
        .collect();
    let train_labels: Vec<TrialLabel> = dev_triples
        .iter()
        .filter(|(_, _, attack)| !withheld.contains(attack.as_str()))
        .map(|(_, l, _)| *l)
        .collect();
    let detector_fusion = fuse_detectors(&train_inputs, &train_labels, &cfg.fusion)?;

    let fused_eval_trials = detector_triples(Split::Eval)
        .into_iter()
        .map(|(d, label, attack)| {
            Trial::new(d.id.clone(), label, attack, apply_detector_fusion(&detector_fusion, &d)?)
        })
        .collect::<Result<_>>()?;

    Ok(DeskOutcome {
        natural_model,
        synthetic_adapted,
        synthetic_independent,
        schemes: outcomes,
        detector_fusion,
        fused_eval_trials,
        known_attacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::GroupScheme;
    use crate::scoring::{GroupScoreVector, ScoreScheme};

    #[test]
    fn per_group_eers_reports_separation_and_coverage() {
        let vector = |scores: Vec<f64>, counts: Vec<usize>| GroupScoreVector {
            scheme: ScoreScheme::Grouped(GroupScheme::Class),
            id: "u".into(),
            total_frames: counts.iter().sum(),
            scores,
            counts,
            weighted: false,
        };
        // group 0 separates perfectly, group 1 is constant, group 2 only
        // ever appears in natural utterances
        let vectors = vec![
            vector(vec![1.0, 0.3, 0.1], vec![5, 5, 2]),
            vector(vec![2.0, 0.3, 0.2], vec![5, 5, 3]),
            vector(vec![-1.0, 0.3, 0.0], vec![5, 5, 0]),
            vector(vec![-2.0, 0.3, 0.0], vec![5, 5, 0]),
        ];
        let labels = vec![
            TrialLabel::Natural,
            TrialLabel::Natural,
            TrialLabel::Spoof,
            TrialLabel::Spoof,
        ];
        let report = per_group_eers(&vectors, &labels).unwrap();
        assert_eq!(report.len(), 3);
        assert_eq!(report[0], (Some(0.0), 20));
        assert_eq!(report[1].0, Some(0.5));
        assert_eq!(report[2], (None, 5));
    }
}
