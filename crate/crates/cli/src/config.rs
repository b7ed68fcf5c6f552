//! Flat key-value pipeline configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Every key has a default
//! so an absent or empty config runs the full demo. Unknown keys are
//! rejected.

use std::fs;
use std::path::Path;

use ssd_core::attacksim::CorpusConfig;
use ssd_core::features::MfccConfig;
use ssd_core::fusion::FusionConfig;
use ssd_core::gmm::TrainConfig;

use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub seed: u64,
    // front end
    pub frame_len_ms: f64,
    pub frame_shift_ms: f64,
    pub num_mfcc: usize,
    pub num_mel_filters: usize,
    pub pre_emphasis: f64,
    pub delta_window: usize,
    // models
    pub gmm_components: usize,
    pub em_max_iters: usize,
    pub em_rel_tolerance: f64,
    pub variance_floor_factor: f64,
    pub kmeans_iters: usize,
    pub map_relevance: f64,
    // fusion
    pub fusion_prior: f64,
    pub fusion_l2: f64,
    // simulator
    pub sim_natural: usize,
    pub sim_spoof: usize,
    pub sim_min_frames: usize,
    pub sim_max_frames: usize,
    pub sim_dim: usize,
    pub sim_smooth_window: usize,
    pub sim_glitch_rate: f64,
    pub sim_glitch_magnitude: f64,
    pub sim_shift_scale: f64,
    pub sim_train_frac: f64,
    pub sim_dev_frac: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let corpus = CorpusConfig::default();
        let mfcc = MfccConfig::default();
        let fusion = FusionConfig::default();
        Self {
            seed: corpus.seed,
            frame_len_ms: mfcc.frame_len_ms,
            frame_shift_ms: mfcc.frame_shift_ms,
            num_mfcc: mfcc.num_coeffs,
            num_mel_filters: mfcc.num_filters,
            pre_emphasis: mfcc.pre_emphasis,
            delta_window: 2,
            gmm_components: train.num_components,
            em_max_iters: train.max_em_iters,
            em_rel_tolerance: train.rel_ll_tolerance,
            variance_floor_factor: train.variance_floor_factor,
            kmeans_iters: train.kmeans_iters,
            map_relevance: train.map_relevance,
            fusion_prior: fusion.prior,
            fusion_l2: fusion.l2,
            sim_natural: corpus.num_natural,
            sim_spoof: corpus.num_spoof,
            sim_min_frames: corpus.min_frames,
            sim_max_frames: corpus.max_frames,
            sim_dim: corpus.dim,
            sim_smooth_window: corpus.smooth_window,
            sim_glitch_rate: corpus.glitch_rate,
            sim_glitch_magnitude: corpus.glitch_magnitude,
            sim_shift_scale: corpus.shift_scale,
            sim_train_frac: corpus.train_frac,
            sim_dev_frac: corpus.dev_frac,
        }
    }
}

impl PipelineConfig {
    /// Defaults overlaid with the keys from `path`, when given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let Some(path) = path else {
            return Ok(cfg);
        };
        let name = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::from(std::io::Error::new(e.kind(), format!("{name}: {e}")))
        })?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::Config {
                source_name: name.clone(),
                message: format!("line {}: expected `key = value`, got {raw:?}", lineno + 1),
            })?;
            cfg.set(key.trim(), value.trim()).map_err(|message| CliError::Config {
                source_name: name.clone(),
                message: format!("line {}: {message}", lineno + 1),
            })?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("bad value {value:?} for key {key:?}"))
        }
        match key {
            "seed" => self.seed = parse(key, value)?,
            "frame_len_ms" => self.frame_len_ms = parse(key, value)?,
            "frame_shift_ms" => self.frame_shift_ms = parse(key, value)?,
            "num_mfcc" => self.num_mfcc = parse(key, value)?,
            "num_mel_filters" => self.num_mel_filters = parse(key, value)?,
            "pre_emphasis" => self.pre_emphasis = parse(key, value)?,
            "delta_window" => self.delta_window = parse(key, value)?,
            "gmm_components" => self.gmm_components = parse(key, value)?,
            "em_max_iters" => self.em_max_iters = parse(key, value)?,
            "em_rel_tolerance" => self.em_rel_tolerance = parse(key, value)?,
            "variance_floor_factor" => self.variance_floor_factor = parse(key, value)?,
            "kmeans_iters" => self.kmeans_iters = parse(key, value)?,
            "map_relevance" => self.map_relevance = parse(key, value)?,
            "fusion_prior" => self.fusion_prior = parse(key, value)?,
            "fusion_l2" => self.fusion_l2 = parse(key, value)?,
            "sim_natural" => self.sim_natural = parse(key, value)?,
            "sim_spoof" => self.sim_spoof = parse(key, value)?,
            "sim_min_frames" => self.sim_min_frames = parse(key, value)?,
            "sim_max_frames" => self.sim_max_frames = parse(key, value)?,
            "sim_dim" => self.sim_dim = parse(key, value)?,
            "sim_smooth_window" => self.sim_smooth_window = parse(key, value)?,
            "sim_glitch_rate" => self.sim_glitch_rate = parse(key, value)?,
            "sim_glitch_magnitude" => self.sim_glitch_magnitude = parse(key, value)?,
            "sim_shift_scale" => self.sim_shift_scale = parse(key, value)?,
            "sim_train_frac" => self.sim_train_frac = parse(key, value)?,
            "sim_dev_frac" => self.sim_dev_frac = parse(key, value)?,
            other => return Err(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    pub fn mfcc_config(&self) -> MfccConfig {
        MfccConfig {
            frame_len_ms: self.frame_len_ms,
            frame_shift_ms: self.frame_shift_ms,
            num_coeffs: self.num_mfcc,
            num_filters: self.num_mel_filters,
            pre_emphasis: self.pre_emphasis,
            ..MfccConfig::default()
        }
    }

    pub fn train_config(&self, seed: Option<u64>) -> TrainConfig {
        TrainConfig {
            num_components: self.gmm_components,
            max_em_iters: self.em_max_iters,
            rel_ll_tolerance: self.em_rel_tolerance,
            variance_floor_factor: self.variance_floor_factor,
            kmeans_iters: self.kmeans_iters,
            seed: seed.unwrap_or(self.seed),
            map_relevance: self.map_relevance,
        }
    }

    pub fn fusion_config(&self) -> FusionConfig {
        FusionConfig {
            prior: self.fusion_prior,
            l2: self.fusion_l2,
            ..FusionConfig::default()
        }
    }

    pub fn corpus_config(&self, seed: Option<u64>) -> CorpusConfig {
        CorpusConfig {
            num_natural: self.sim_natural,
            num_spoof: self.sim_spoof,
            min_frames: self.sim_min_frames,
            max_frames: self.sim_max_frames,
            dim: self.sim_dim,
            seed: seed.unwrap_or(self.seed),
            smooth_window: self.sim_smooth_window,
            glitch_rate: self.sim_glitch_rate,
            glitch_magnitude: self.sim_glitch_magnitude,
            shift_scale: self.sim_shift_scale,
            train_frac: self.sim_train_frac,
            dev_frac: self.sim_dev_frac,
            frame_len_s: self.frame_len_ms / 1000.0,
        }
    }

    /// Frame length in seconds, for alignment frame centering.
    pub fn frame_len_s(&self) -> f64 {
        self.frame_len_ms / 1000.0
    }
}
