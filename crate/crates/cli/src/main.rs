//! `ssd`: manifest-driven synthetic speech detection pipeline.
//!
//! The six verbs mirror the pipeline stages: `simulate` builds a feature
//! corpus, `extract` turns WAV audio into feature files, `train` fits the
//! natural and synthetic GMMs, `score` produces per-group score vectors,
//! `fuse` trains and applies logistic-regression combiners, and `eval`
//! reports per-attack equal error rates.

mod commands;
mod config;
mod error;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "ssd", version, about = "Synthetic speech detection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract voiced MFCC+delta features from a manifest of WAV files.
    Extract {
        /// Manifest of `<wav_path> <label> <attack_id>` lines.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for feature files and the feature manifest.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the natural GMM plus both synthetic variants (MAP-adapted
    /// and independently trained).
    Train {
        /// Manifest of labeled feature files.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for `nat.gmm`, `syn_adapt.gmm`,
        /// `syn_noadapt.gmm`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a manifest of feature files against a model pair.
    Score {
        #[arg(long)]
        manifest: PathBuf,
        /// Natural-speech model file.
        #[arg(long)]
        nat: PathBuf,
        /// Synthetic-speech model file.
        #[arg(long)]
        syn: PathBuf,
        /// One of: baseline, gaussian, phoneme, class.
        #[arg(long)]
        scheme: String,
        /// Apply duration weighting to the group scores.
        #[arg(long)]
        weighted: bool,
        /// Directory of `<utterance_id>.ali` alignment files (needed for
        /// the phoneme and class schemes).
        #[arg(long)]
        alignments: Option<PathBuf>,
        /// Phoneme-to-class table; defaults to the built-in inventory.
        #[arg(long = "class-map")]
        class_map: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output score-vector file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a fusion model from labeled score vectors (or detector trial
    /// files) and optionally apply it.
    Fuse {
        /// Labeled score-vector file to train on.
        #[arg(long, conflicts_with = "detector_trials")]
        scores: Option<PathBuf>,
        /// Three trial files (class, phoneme, gaussian) for second-stage
        /// detector fusion.
        #[arg(long, value_delimiter = ',')]
        detector_trials: Option<Vec<PathBuf>>,
        /// Training prior for the natural class.
        #[arg(long)]
        prior: Option<f64>,
        /// L2 regularizer weight.
        #[arg(long)]
        l2: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output fusion model file.
        #[arg(long)]
        out: PathBuf,
        /// Score-vector file to apply the trained model to.
        #[arg(long, conflicts_with = "apply_detector_trials")]
        apply: Option<PathBuf>,
        /// Three trial files to apply a detector fusion to.
        #[arg(long, value_delimiter = ',')]
        apply_detector_trials: Option<Vec<PathBuf>>,
        /// Where the applied trials are written.
        #[arg(long)]
        trials_out: Option<PathBuf>,
    },
    /// Report per-attack and known/unknown EERs from a trial file.
    Eval {
        #[arg(long)]
        trials: PathBuf,
        /// Comma-separated attack ids that were seen in training.
        #[arg(long, value_delimiter = ',')]
        known: Vec<String>,
        /// Write the aligned table here (machine rows go to `<out>.rows`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the simulated corpus: features, alignments, class map,
    /// and train/dev/eval manifests.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Extract { manifest, config, out } => commands::extract::run(&manifest, config.as_deref(), &out),
        Command::Train { manifest, config, seed, out } => {
            commands::train::run(&manifest, config.as_deref(), seed, &out)
        }
        Command::Score {
            manifest,
            nat,
            syn,
            scheme,
            weighted,
            alignments,
            class_map,
            config,
            out,
        } => commands::score::run(&commands::score::ScoreArgs {
            manifest,
            nat,
            syn,
            scheme,
            weighted,
            alignments,
            class_map,
            config,
            out,
        }),
        Command::Fuse {
            scores,
            detector_trials,
            prior,
            l2,
            config,
            out,
            apply,
            apply_detector_trials,
            trials_out,
        } => commands::fuse::run(&commands::fuse::FuseArgs {
            scores,
            detector_trials,
            prior,
            l2,
            config,
            out,
            apply,
            apply_detector_trials,
            trials_out,
        }),
        Command::Eval { trials, known, out } => commands::eval::run(&trials, &known, out.as_deref()),
        Command::Simulate { config, seed, out } => commands::simulate::run(config.as_deref(), seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("ssd: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
