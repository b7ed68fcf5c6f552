//! `ssd score`: per-utterance score vectors for one grouping scheme.

use std::path::{Path, PathBuf};

use ssd_core::formats::{
    ScoredUtterance, format_score_vectors, read_alignment, read_class_map, read_features,
    read_gmm, read_manifest,
};
use ssd_core::grouping::{ClassMap, GroupScheme, group_by_class, group_by_gaussian, group_by_phoneme};
use ssd_core::scoring::{GroupScoreVector, ScoreScheme, baseline_llr, duration_weight, group_scores};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::util::atomic_write;

pub struct ScoreArgs {
    pub manifest: PathBuf,
    pub nat: PathBuf,
    pub syn: PathBuf,
    pub scheme: String,
    pub weighted: bool,
    pub alignments: Option<PathBuf>,
    pub class_map: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
}

pub fn run(args: &ScoreArgs) -> Result<(), CliError> {
    let cfg = PipelineConfig::load(args.config.as_deref())?;
    let scheme: ScoreScheme = args
        .scheme
        .parse()
        .map_err(|_| CliError::usage(format!("unknown scoring scheme {:?}", args.scheme)))?;
    if scheme == ScoreScheme::Detector {
        return Err(CliError::usage(
            "detector vectors come from `fuse --detector-trials`, not `score`".to_string(),
        ));
    }

    let nat = read_gmm(&args.nat)?;
    let syn = read_gmm(&args.syn)?;
    let class_map = match &args.class_map {
        Some(path) => read_class_map(path)?,
        None => ClassMap::builtin(),
    };
    let phoneme_set = class_map.phonemes();
    let needs_alignments = matches!(
        scheme,
        ScoreScheme::Grouped(GroupScheme::Phoneme) | ScoreScheme::Grouped(GroupScheme::Class)
    );
    let alignment_dir = match (&args.alignments, needs_alignments) {
        (Some(dir), _) => Some(dir.clone()),
        (None, false) => None,
        (None, true) => {
            return Err(CliError::usage(format!(
                "scheme {scheme} needs --alignments"
            )));
        }
    };

    let entries = read_manifest(&args.manifest)?;
    let mut scored = Vec::with_capacity(entries.len());
    for entry in &entries {
        let feats = read_features(&entry.path)?;
        let vector = score_one(&feats, scheme, &nat, &syn, &cfg, alignment_dir.as_deref(), &class_map, &phoneme_set)?;
        let vector = if args.weighted {
            duration_weight(&vector)?
        } else {
            vector
        };
        scored.push(ScoredUtterance {
            vector,
            attack_id: Some(entry.attack_id.clone()),
        });
    }
    scored.sort_by(|a, b| a.vector.id.cmp(&b.vector.id));
    atomic_write(&args.out, &format_score_vectors(&scored)?)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn score_one(
    feats: &ssd_core::features::FeatureMatrix,
    scheme: ScoreScheme,
    nat: &ssd_core::gmm::DiagGmm,
    syn: &ssd_core::gmm::DiagGmm,
    cfg: &PipelineConfig,
    alignment_dir: Option<&Path>,
    class_map: &ClassMap,
    phoneme_set: &[String],
) -> Result<GroupScoreVector, CliError> {
    let load_alignment = |dir: &Path| {
        read_alignment(&dir.join(format!("{}.ali", feats.id())), feats.id())
    };
    let vector = match scheme {
        ScoreScheme::Baseline => GroupScoreVector {
            scheme: ScoreScheme::Baseline,
            id: feats.id().to_string(),
            scores: vec![baseline_llr(feats, nat, syn)?],
            counts: vec![feats.num_frames()],
            total_frames: feats.num_frames(),
            weighted: false,
        },
        ScoreScheme::Grouped(GroupScheme::Gaussian) => {
            let assignment = group_by_gaussian(nat, feats)?;
            group_scores(feats, &assignment, nat, syn)?
        }
        ScoreScheme::Grouped(GroupScheme::Phoneme) => {
            let alignment = load_alignment(alignment_dir.expect("alignments checked above"))?;
            let assignment = group_by_phoneme(&alignment, feats, phoneme_set, cfg.frame_len_s())?;
            group_scores(feats, &assignment, nat, syn)?
        }
        ScoreScheme::Grouped(GroupScheme::Class) => {
            let alignment = load_alignment(alignment_dir.expect("alignments checked above"))?;
            let assignment = group_by_class(&alignment, feats, class_map, cfg.frame_len_s())?;
            group_scores(feats, &assignment, nat, syn)?
        }
        ScoreScheme::Detector => unreachable!("rejected above"),
    };
    Ok(vector)
}
