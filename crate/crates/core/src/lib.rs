//! Segment-specific synthetic speech detection.
//!
//! The pipeline scores an utterance as the log-likelihood ratio between a
//! natural-speech GMM and a synthetic-speech GMM, decomposed over frame
//! groups (aligned Gaussian component, phoneme, or broad sound class),
//! optionally duration-weighted, and fused back into one utterance score
//! with prior-weighted logistic regression. Evaluation reports per-attack
//! and known/unknown equal error rates, and a feature-space attack
//! simulator provides desk-scale corpora for end-to-end runs.

pub mod attacksim;
pub mod error;
pub mod eval;
pub mod features;
pub mod formats;
pub mod fusion;
pub mod gmm;
pub mod grouping;
pub mod pipeline;
pub mod scoring;

pub use error::{Error, Result};
