//! `ssd extract`: WAV manifest -> voiced MFCC+delta feature files.

use std::fs;
use std::path::{Path, PathBuf};

use ssd_core::features::{extract_voiced, read_wav};
use ssd_core::formats::{ManifestEntry, format_features, format_manifest, read_manifest};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::util::atomic_write;

pub fn run(manifest: &Path, config: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let cfg = PipelineConfig::load(config)?;
    let mfcc_cfg = cfg.mfcc_config();
    let entries = read_manifest(manifest)?;
    if entries.is_empty() {
        return Err(CliError::usage(format!(
            "manifest {} lists no utterances",
            manifest.display()
        )));
    }

    let feature_dir = out.join("features");
    fs::create_dir_all(&feature_dir)?;

    let mut out_entries = Vec::with_capacity(entries.len());
    for entry in &entries {
        let audio = read_wav(&entry.path)?;
        let feats = extract_voiced(&audio, &mfcc_cfg, cfg.delta_window)?;
        let file_name = format!("{}.feat", audio.id());
        atomic_write(&feature_dir.join(&file_name), &format_features(&feats))?;
        out_entries.push(ManifestEntry {
            path: PathBuf::from("features").join(file_name),
            label: entry.label,
            attack_id: entry.attack_id.clone(),
        });
    }
    out_entries.sort_by(|a, b| a.path.cmp(&b.path));
    atomic_write(&out.join("features.manifest"), &format_manifest(&out_entries))?;
    Ok(())
}
