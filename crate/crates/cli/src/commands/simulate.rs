//! `ssd simulate`: write the simulated corpus to disk.
//!
//! Produces `features/<id>.feat`, `alignments/<id>.ali`, the built-in
//! `class_map.txt`, and one manifest per split (`train.manifest`,
//! `dev.manifest`, `eval.manifest`) with paths relative to the output
//! directory.

use std::fs;
use std::path::{Path, PathBuf};

use ssd_core::attacksim::{Split, generate_corpus};
use ssd_core::eval::TrialLabel;
use ssd_core::formats::{
    ManifestEntry, format_alignment, format_class_map, format_features, format_manifest,
};
use ssd_core::grouping::ClassMap;

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::util::atomic_write;

pub fn run(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let cfg = PipelineConfig::load(config)?;
    let corpus_cfg = cfg.corpus_config(seed);
    let corpus = generate_corpus(&corpus_cfg)?;

    let feature_dir = out.join("features");
    let alignment_dir = out.join("alignments");
    fs::create_dir_all(&feature_dir)?;
    fs::create_dir_all(&alignment_dir)?;

    let mut manifests: Vec<(Split, Vec<ManifestEntry>)> = vec![
        (Split::Train, Vec::new()),
        (Split::Dev, Vec::new()),
        (Split::Eval, Vec::new()),
    ];
    for utt in &corpus {
        let id = utt.features.id();
        atomic_write(
            &feature_dir.join(format!("{id}.feat")),
            &format_features(&utt.features),
        )?;
        atomic_write(
            &alignment_dir.join(format!("{id}.ali")),
            &format_alignment(&utt.alignment),
        )?;
        let entry = ManifestEntry {
            path: PathBuf::from("features").join(format!("{id}.feat")),
            label: utt.label,
            attack_id: utt.attack_id.clone(),
        };
        manifests
            .iter_mut()
            .find(|(split, _)| *split == utt.split)
            .expect("all splits are present")
            .1
            .push(entry);
    }

    for (split, mut entries) in manifests {
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        atomic_write(
            &out.join(format!("{}.manifest", split.name())),
            &format_manifest(&entries),
        )?;
    }
    atomic_write(&out.join("class_map.txt"), &format_class_map(&ClassMap::builtin()))?;

    let natural = corpus.iter().filter(|u| u.label == TrialLabel::Natural).count();
    println!(
        "wrote {} utterances ({} natural, {} spoofed) to {}",
        corpus.len(),
        natural,
        corpus.len() - natural,
        out.display()
    );
    Ok(())
}
