//! `ssd fuse`: train a fusion model from labeled score vectors or from
//! three detector trial files, optionally applying it to held-out data.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ssd_core::Error as CoreError;
use ssd_core::eval::{Trial, TrialLabel};
use ssd_core::formats::{
    format_fusion, format_trials, read_fusion, read_score_vectors, read_trials,
};
use ssd_core::fusion::{
    DetectorScores, FusionModel, apply_detector_fusion, apply_fusion, fuse_detectors, train_fusion,
};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::util::atomic_write;

pub struct FuseArgs {
    pub scores: Option<PathBuf>,
    pub detector_trials: Option<Vec<PathBuf>>,
    pub prior: Option<f64>,
    pub l2: Option<f64>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub apply: Option<PathBuf>,
    pub apply_detector_trials: Option<Vec<PathBuf>>,
    pub trials_out: Option<PathBuf>,
}

pub fn run(args: &FuseArgs) -> Result<(), CliError> {
    let cfg = PipelineConfig::load(args.config.as_deref())?;
    let mut fusion_cfg = cfg.fusion_config();
    if let Some(prior) = args.prior {
        fusion_cfg.prior = prior;
    }
    if let Some(l2) = args.l2 {
        fusion_cfg.l2 = l2;
    }

    let model = match (&args.scores, &args.detector_trials) {
        (Some(scores), None) => train_from_scores(scores, &fusion_cfg)?,
        (None, Some(files)) => train_from_detectors(files, &fusion_cfg)?,
        _ => {
            return Err(CliError::usage(
                "pass exactly one of --scores or --detector-trials".to_string(),
            ));
        }
    };
    atomic_write(&args.out, &format_fusion(&model))?;

    match (&args.apply, &args.apply_detector_trials) {
        (None, None) => {
            if args.trials_out.is_some() {
                return Err(CliError::usage(
                    "--trials-out needs --apply or --apply-detector-trials".to_string(),
                ));
            }
        }
        (Some(apply), None) => {
            let trials_out = require_trials_out(args)?;
            let model = read_fusion(&args.out)?;
            let trials = apply_to_scores(&model, apply)?;
            atomic_write(trials_out, &format_trials(&trials))?;
        }
        (None, Some(files)) => {
            let trials_out = require_trials_out(args)?;
            let model = read_fusion(&args.out)?;
            let trials = apply_to_detectors(&model, files)?;
            atomic_write(trials_out, &format_trials(&trials))?;
        }
        (Some(_), Some(_)) => {
            return Err(CliError::usage(
                "pass at most one of --apply or --apply-detector-trials".to_string(),
            ));
        }
    }
    Ok(())
}

fn require_trials_out(args: &FuseArgs) -> Result<&Path, CliError> {
    args.trials_out
        .as_deref()
        .ok_or_else(|| CliError::usage("applying a model needs --trials-out".to_string()))
}

fn train_from_scores(
    path: &Path,
    cfg: &ssd_core::fusion::FusionConfig,
) -> Result<FusionModel, CliError> {
    let entries = read_score_vectors(path)?;
    let mut vectors = Vec::with_capacity(entries.len());
    let mut labels = Vec::with_capacity(entries.len());
    for entry in &entries {
        let label = entry.label().ok_or_else(|| {
            CoreError::DegenerateLabels(format!(
                "score file {} has unlabeled utterance {:?}",
                path.display(),
                entry.vector.id
            ))
        })?;
        vectors.push(entry.vector.clone());
        labels.push(label);
    }
    Ok(train_fusion(&vectors, &labels, cfg)?)
}

fn apply_to_scores(model: &FusionModel, path: &Path) -> Result<Vec<Trial>, CliError> {
    let entries = read_score_vectors(path)?;
    let mut trials = Vec::with_capacity(entries.len());
    for entry in &entries {
        let label = entry.label().ok_or_else(|| {
            CoreError::DegenerateLabels(format!(
                "score file {} has unlabeled utterance {:?}; trials need ground truth",
                path.display(),
                entry.vector.id
            ))
        })?;
        let attack = entry.attack_id.clone().expect("label() implies attack id");
        let score = apply_fusion(model, &entry.vector)?;
        trials.push(Trial::new(entry.vector.id.clone(), label, attack, score)?);
    }
    trials.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(trials)
}

/// Joins per-detector trial files by utterance id into (class, phoneme,
/// gaussian) triples. Labels and attack ids must agree across files.
fn join_detectors(
    files: &[PathBuf],
) -> Result<Vec<(DetectorScores, TrialLabel, String)>, CliError> {
    if files.len() != 3 {
        return Err(CliError::usage(format!(
            "detector fusion takes exactly 3 trial files (class, phoneme, gaussian), got {}",
            files.len()
        )));
    }
    let mut by_id: BTreeMap<String, (Vec<f64>, TrialLabel, String)> = BTreeMap::new();
    for (i, path) in files.iter().enumerate() {
        for trial in read_trials(path)? {
            let slot = by_id
                .entry(trial.id.clone())
                .or_insert_with(|| (Vec::new(), trial.label, trial.attack_id.clone()));
            if slot.0.len() != i {
                return Err(CoreError::format(
                    "trial",
                    path.display().to_string(),
                    format!("utterance {:?} missing from an earlier detector file", trial.id),
                )
                .into());
            }
            if slot.1 != trial.label || slot.2 != trial.attack_id {
                return Err(CoreError::format(
                    "trial",
                    path.display().to_string(),
                    format!("utterance {:?} has conflicting labels across detectors", trial.id),
                )
                .into());
            }
            slot.0.push(trial.score);
        }
    }
    let mut joined = Vec::with_capacity(by_id.len());
    for (id, (scores, label, attack)) in by_id {
        if scores.len() != 3 {
            return Err(CoreError::format(
                "trial",
                files[2].display().to_string(),
                format!("utterance {id:?} present in only {} of 3 detector files", scores.len()),
            )
            .into());
        }
        joined.push((
            DetectorScores {
                id,
                class_score: scores[0],
                phoneme_score: scores[1],
                gaussian_score: scores[2],
            },
            label,
            attack,
        ));
    }
    Ok(joined)
}

fn train_from_detectors(
    files: &[PathBuf],
    cfg: &ssd_core::fusion::FusionConfig,
) -> Result<FusionModel, CliError> {
    let joined = join_detectors(files)?;
    let inputs: Vec<DetectorScores> = joined.iter().map(|(d, _, _)| d.clone()).collect();
    let labels: Vec<TrialLabel> = joined.iter().map(|(_, l, _)| *l).collect();
    Ok(fuse_detectors(&inputs, &labels, cfg)?)
}

fn apply_to_detectors(model: &FusionModel, files: &[PathBuf]) -> Result<Vec<Trial>, CliError> {
    let joined = join_detectors(files)?;
    let mut trials = Vec::with_capacity(joined.len());
    for (detector, label, attack) in joined {
        let score = apply_detector_fusion(model, &detector)?;
        trials.push(Trial::new(detector.id, label, attack, score)?);
    }
    trials.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(trials)
}
