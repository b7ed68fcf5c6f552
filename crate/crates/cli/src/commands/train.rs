//! `ssd train`: fit the natural GMM and both synthetic variants.

use std::fs;
use std::path::Path;

use ssd_core::eval::TrialLabel;
use ssd_core::features::FeatureMatrix;
use ssd_core::formats::{format_gmm, read_features, read_manifest};
use ssd_core::gmm::{kmeans_init, map_adapt, train_em};
use ssd_core::pipeline::pool_frames;

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::util::atomic_write;

pub fn run(
    manifest: &Path,
    config: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
) -> Result<(), CliError> {
    let cfg = PipelineConfig::load(config)?;
    let train_cfg = cfg.train_config(seed);
    let entries = read_manifest(manifest)?;

    let mut natural = Vec::new();
    let mut spoof = Vec::new();
    for entry in &entries {
        let feats = read_features(&entry.path)?;
        match entry.label {
            TrialLabel::Natural => natural.push(feats),
            TrialLabel::Spoof => spoof.push(feats),
        }
    }
    if natural.is_empty() || spoof.is_empty() {
        return Err(CliError::usage(format!(
            "training manifest needs both labels, got {} natural / {} spoof",
            natural.len(),
            spoof.len()
        )));
    }

    let nat_refs: Vec<&FeatureMatrix> = natural.iter().collect();
    let spoof_refs: Vec<&FeatureMatrix> = spoof.iter().collect();
    let nat_pool = pool_frames(&nat_refs, "train-natural")?;
    let spoof_pool = pool_frames(&spoof_refs, "train-spoof")?;

    let nat_init = kmeans_init(&nat_pool, &train_cfg)?;
    let (nat_model, _) = train_em(&nat_init, &nat_pool, &train_cfg)?;
    let syn_adapt = map_adapt(&nat_model, &spoof_pool, train_cfg.map_relevance)?;
    let spoof_init = kmeans_init(&spoof_pool, &train_cfg)?;
    let (syn_noadapt, _) = train_em(&spoof_init, &spoof_pool, &train_cfg)?;

    fs::create_dir_all(out)?;
    atomic_write(&out.join("nat.gmm"), &format_gmm(&nat_model))?;
    atomic_write(&out.join("syn_adapt.gmm"), &format_gmm(&syn_adapt))?;
    atomic_write(&out.join("syn_noadapt.gmm"), &format_gmm(&syn_noadapt))?;
    Ok(())
}
