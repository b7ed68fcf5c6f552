//! Prior-weighted logistic-regression score fusion.
//!
//! The combiner is affine-plus-sigmoid: training minimizes the
//! prior-weighted cross-entropy of `sigmoid(w . S + b)` against the
//! natural/spoof labels (natural is the target class) with a small L2
//! penalty on the weights. The objective is convex; it is solved with
//! deterministic L-BFGS plus backtracking line search from a zero start.
//! Applying a model returns the linear stage `w . S + b`, a calibrated
//! log-odds score.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::eval::{Trial, TrialLabel, TrialSet, eer_with_threshold};
use crate::scoring::{GroupScoreVector, ScoreScheme};

/// Affine score combiner with the training prior and the dev-set EER
/// threshold stored alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    pub scheme: ScoreScheme,
    pub input_labels: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub prior: f64,
    pub threshold: f64,
}

impl FusionModel {
    pub fn num_inputs(&self) -> usize {
        self.weights.len()
    }
}

/// Fusion training knobs.
#[derive(Debug, Clone)]
pub struct FusionConfig {
    pub prior: f64,
    pub l2: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            prior: 0.5,
            l2: 1e-6,
            max_iters: 1000,
            // far below the 1e-7 contract so the weights also settle along
            // the nearly flat directions the tiny l2 term leaves behind
            grad_tol: 1e-13,
        }
    }
}

/// The convex training problem: weighted cross-entropy plus L2 on the
/// weights. Exposed so the gradient can be checked against finite
/// differences and the optimum against random restarts.
#[derive(Debug, Clone)]
pub struct FusionProblem {
    dim: usize,
    inputs: Vec<f64>,
    targets: Vec<bool>,
    /// Per-example weight: `prior / n_natural` or `(1 - prior) / n_spoof`.
    example_weights: Vec<f64>,
    l2: f64,
}

impl FusionProblem {
    pub fn new(inputs: &[Vec<f64>], labels: &[TrialLabel], prior: f64, l2: f64) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                context: "fusion training set",
                expected: inputs.len(),
                actual: labels.len(),
            });
        }
        if !prior.is_finite() || prior <= 0.0 || prior >= 1.0 {
            return Err(Error::InvalidData(format!(
                "training prior must lie in (0, 1), got {prior}"
            )));
        }
        if l2.is_nan() || l2 < 0.0 {
            return Err(Error::InvalidData(format!("l2 must be nonnegative, got {l2}")));
        }
        let dim = inputs[0].len();
        for (i, v) in inputs.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "fusion input vector",
                    expected: dim,
                    actual: inputs[i].len(),
                });
            }
        }
        let n_nat = labels.iter().filter(|l| **l == TrialLabel::Natural).count();
        let n_spoof = labels.len() - n_nat;
        if n_nat == 0 || n_spoof == 0 {
            return Err(Error::DegenerateLabels(format!(
                "fusion training needs both classes, got {n_nat} natural / {n_spoof} spoof"
            )));
        }
        let example_weights = labels
            .iter()
            .map(|l| match l {
                TrialLabel::Natural => prior / n_nat as f64,
                TrialLabel::Spoof => (1.0 - prior) / n_spoof as f64,
            })
            .collect();
        Ok(Self {
            dim,
            inputs: inputs.concat(),
            targets: labels.iter().map(|l| *l == TrialLabel::Natural).collect(),
            example_weights,
            l2,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.inputs.chunks_exact(self.dim.max(1))
    }

    /// Weighted cross-entropy plus `l2/2 ||w||^2` (bias unpenalized).
    pub fn objective(&self, weights: &[f64], bias: f64) -> f64 {
        let mut total = 0.0;
        for ((row, &target), &ew) in self.rows().zip(&self.targets).zip(&self.example_weights) {
            let z = dot(weights, row) + bias;
            // -ln sigma(z) = ln(1 + e^-z), stable in both tails
            let loss = if target {
                softplus(-z)
            } else {
                softplus(z)
            };
            total += ew * loss;
        }
        total + 0.5 * self.l2 * weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Analytic gradient of [`objective`](Self::objective).
    pub fn gradient(&self, weights: &[f64], bias: f64) -> (Vec<f64>, f64) {
        let mut grad_w = vec![0.0; self.dim];
        let mut grad_b = 0.0;
        for ((row, &target), &ew) in self.rows().zip(&self.targets).zip(&self.example_weights) {
            let z = dot(weights, row) + bias;
            let residual = ew * (sigmoid(z) - if target { 1.0 } else { 0.0 });
            for (g, &x) in grad_w.iter_mut().zip(row) {
                *g += residual * x;
            }
            grad_b += residual;
        }
        for (g, &w) in grad_w.iter_mut().zip(weights) {
            *g += self.l2 * w;
        }
        (grad_w, grad_b)
    }

    /// Deterministic L-BFGS with Armijo backtracking. Stops when the
    /// gradient norm drops under `grad_tol` or after `max_iters`.
    pub fn solve(
        &self,
        init_weights: &[f64],
        init_bias: f64,
        max_iters: usize,
        grad_tol: f64,
    ) -> Result<(Vec<f64>, f64)> {
        if init_weights.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "fusion initial weights",
                expected: self.dim,
                actual: init_weights.len(),
            });
        }
        let n = self.dim + 1;
        let mut x: Vec<f64> = init_weights.iter().cloned().chain([init_bias]).collect();
        let mut obj = self.objective(&x[..self.dim], x[self.dim]);
        let mut grad = self.grad_vec(&x);
        // limited-memory curvature pairs, most recent last
        let mut s_hist: Vec<Vec<f64>> = Vec::new();
        let mut y_hist: Vec<Vec<f64>> = Vec::new();
        const MEMORY: usize = 10;

        for _ in 0..max_iters {
            let grad_norm = norm(&grad);
            if grad_norm < grad_tol {
                break;
            }
            let mut dir = two_loop_direction(&grad, &s_hist, &y_hist);
            let mut slope = dot(&dir, &grad);
            if !slope.is_finite() || slope >= 0.0 {
                dir = grad.iter().map(|g| -g).collect();
                slope = -grad_norm * grad_norm;
            }

            let mut step = 1.0;
            let mut accepted = false;
            while step > 1e-18 {
                let cand: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
                let cand_obj = self.objective(&cand[..self.dim], cand[self.dim]);
                if cand_obj <= obj + 1e-4 * step * slope {
                    let cand_grad = self.grad_vec(&cand);
                    let s: Vec<f64> = cand.iter().zip(&x).map(|(a, b)| a - b).collect();
                    let y: Vec<f64> = cand_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
                    if dot(&s, &y) > 1e-12 * norm(&s) * norm(&y) {
                        s_hist.push(s);
                        y_hist.push(y);
                        if s_hist.len() > MEMORY {
                            s_hist.remove(0);
                            y_hist.remove(0);
                        }
                    }
                    x = cand;
                    obj = cand_obj;
                    grad = cand_grad;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if !(obj.is_finite() && x.iter().all(|v| v.is_finite())) {
            return Err(Error::NumericalFailure {
                context: "fusion optimization",
                iteration: max_iters,
            });
        }
        let bias = x[n - 1];
        x.truncate(self.dim);
        Ok((x, bias))
    }

    fn grad_vec(&self, x: &[f64]) -> Vec<f64> {
        let (gw, gb) = self.gradient(&x[..self.dim], x[self.dim]);
        gw.into_iter().chain([gb]).collect()
    }
}

/// Two-loop recursion producing the L-BFGS descent direction `-H g`.
fn two_loop_direction(grad: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let m = s_hist.len();
    let mut alpha = vec![0.0; m];
    let mut rho = vec![0.0; m];
    for i in (0..m).rev() {
        rho[i] = 1.0 / dot(&y_hist[i], &s_hist[i]);
        alpha[i] = rho[i] * dot(&s_hist[i], &q);
        for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
            *qj -= alpha[i] * yj;
        }
    }
    let gamma = if m > 0 {
        dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1])
    } else {
        1.0
    };
    for qj in &mut q {
        *qj *= gamma;
    }
    for i in 0..m {
        let beta = rho[i] * dot(&y_hist[i], &q);
        for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
            *qj += (alpha[i] - beta) * sj;
        }
    }
    for qj in &mut q {
        *qj = -*qj;
    }
    q
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() }
}

fn check_vectors(vectors: &[GroupScoreVector]) -> Result<(ScoreScheme, usize)> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::EmptyInput("fusion training vectors".into()))?;
    let scheme = first.scheme;
    let j = first.num_groups();
    for v in vectors {
        if v.scheme != scheme {
            return Err(Error::InvalidData(format!(
                "mixed score schemes in fusion input: {} vs {}",
                v.scheme, scheme
            )));
        }
        if v.num_groups() != j {
            return Err(Error::DimensionMismatch {
                context: "fusion score vector",
                expected: j,
                actual: v.num_groups(),
            });
        }
    }
    Ok((scheme, j))
}

fn trained_model(
    scheme: ScoreScheme,
    input_labels: Vec<String>,
    inputs: &[Vec<f64>],
    labels: &[TrialLabel],
    cfg: &FusionConfig,
) -> Result<FusionModel> {
    let problem = FusionProblem::new(inputs, labels, cfg.prior, cfg.l2)?;
    let (weights, bias) = problem.solve(&vec![0.0; problem.dim()], 0.0, cfg.max_iters, cfg.grad_tol)?;

    // decision threshold: EER crossing of the fused training scores
    let trials: Vec<Trial> = inputs
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (v, &label))| {
            Trial::new(
                format!("train{i}"),
                label,
                if label == TrialLabel::Natural { "human" } else { "spoof" },
                dot(&weights, v) + bias,
            )
        })
        .collect::<Result<_>>()?;
    let (_, threshold) = eer_with_threshold(&TrialSet::new(trials, BTreeSet::new()))?;

    Ok(FusionModel {
        scheme,
        input_labels,
        weights,
        bias,
        prior: cfg.prior,
        threshold,
    })
}

/// Canonical input labels for a scheme when none are carried by the data.
pub fn default_input_labels(scheme: ScoreScheme, j: usize) -> Vec<String> {
    let prefix = match scheme {
        ScoreScheme::Baseline => "s",
        ScoreScheme::Grouped(g) => match g {
            crate::grouping::GroupScheme::Gaussian => "g",
            crate::grouping::GroupScheme::Phoneme => "p",
            crate::grouping::GroupScheme::Class => "c",
        },
        ScoreScheme::Detector => "d",
    };
    let width = (j.max(1) as f64).log10().floor() as usize + 1;
    (0..j).map(|i| format!("{prefix}{i:0width$}")).collect()
}

/// Trains a per-scheme group-score fusion model. All vectors must share
/// one scheme and group count, and both labels must be present.
pub fn train_fusion(
    vectors: &[GroupScoreVector],
    labels: &[TrialLabel],
    cfg: &FusionConfig,
) -> Result<FusionModel> {
    let (scheme, j) = check_vectors(vectors)?;
    if vectors.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "fusion labels",
            expected: vectors.len(),
            actual: labels.len(),
        });
    }
    let inputs: Vec<Vec<f64>> = vectors.iter().map(|v| v.scores.clone()).collect();
    trained_model(scheme, default_input_labels(scheme, j), &inputs, labels, cfg)
}

/// Applies a trained model: returns the calibrated log-odds
/// `w . S + b`. Hard decisions compare against `model.threshold`.
pub fn apply_fusion(model: &FusionModel, scores: &GroupScoreVector) -> Result<f64> {
    if scores.scheme != model.scheme {
        return Err(Error::InvalidData(format!(
            "score scheme {} does not match model scheme {}",
            scores.scheme, model.scheme
        )));
    }
    if scores.num_groups() != model.num_inputs() {
        return Err(Error::DimensionMismatch {
            context: "fusion application",
            expected: model.num_inputs(),
            actual: scores.num_groups(),
        });
    }
    Ok(dot(&model.weights, &scores.scores) + model.bias)
}

/// Per-utterance scalar outputs of the three grouped detectors, the input
/// to second-stage fusion.
#[derive(Debug, Clone)]
pub struct DetectorScores {
    pub id: String,
    pub class_score: f64,
    pub phoneme_score: f64,
    pub gaussian_score: f64,
}

impl DetectorScores {
    pub fn as_vector(&self) -> Vec<f64> {
        vec![self.class_score, self.phoneme_score, self.gaussian_score]
    }
}

/// Second-stage fusion across the class, phoneme, and Gaussian detectors.
pub fn fuse_detectors(
    scores: &[DetectorScores],
    labels: &[TrialLabel],
    cfg: &FusionConfig,
) -> Result<FusionModel> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("detector fusion inputs".into()));
    }
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "detector fusion labels",
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    let inputs: Vec<Vec<f64>> = scores.iter().map(|s| s.as_vector()).collect();
    trained_model(
        ScoreScheme::Detector,
        vec!["class".into(), "phoneme".into(), "gaussian".into()],
        &inputs,
        labels,
        cfg,
    )
}

/// Applies a second-stage model to one detector triple.
pub fn apply_detector_fusion(model: &FusionModel, scores: &DetectorScores) -> Result<f64> {
    if model.scheme != ScoreScheme::Detector || model.num_inputs() != 3 {
        return Err(Error::InvalidData(format!(
            "model scheme {} is not a 3-input detector fusion",
            model.scheme
        )));
    }
    Ok(dot(&model.weights, &scores.as_vector()) + model.bias)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::GroupScheme;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vector(scores: Vec<f64>) -> GroupScoreVector {
        let counts = vec![1usize; scores.len()];
        GroupScoreVector {
            scheme: ScoreScheme::Grouped(GroupScheme::Class),
            id: "u".into(),
            total_frames: scores.len(),
            counts,
            scores,
            weighted: false,
        }
    }

    fn labeled_1d(natural: &[f64], spoof: &[f64]) -> (Vec<GroupScoreVector>, Vec<TrialLabel>) {
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for &s in natural {
            vectors.push(vector(vec![s]));
            labels.push(TrialLabel::Natural);
        }
        for &s in spoof {
            vectors.push(vector(vec![s]));
            labels.push(TrialLabel::Spoof);
        }
        (vectors, labels)
    }

    fn training_eer(model: &FusionModel, vectors: &[GroupScoreVector], labels: &[TrialLabel]) -> f64 {
        let trials: Vec<Trial> = vectors
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (v, &l))| {
                Trial::new(format!("t{i}"), l, "x", apply_fusion(model, v).unwrap()).unwrap()
            })
            .collect();
        crate::eval::compute_eer(&TrialSet::new(trials, BTreeSet::new())).unwrap()
    }

    #[test]
    fn separable_scores_reach_zero_training_eer() {
        let (vectors, labels) = labeled_1d(&[0.5, 1.0, 2.0, 3.0], &[-3.0, -2.0, -1.0, -0.5]);
        let model = train_fusion(&vectors, &labels, &FusionConfig::default()).unwrap();
        assert_eq!(training_eer(&model, &vectors, &labels), 0.0);
        assert!(model.weights[0] > 0.0);
    }

    #[test]
    fn constant_scores_learn_the_prior_logit() {
        let (vectors, labels) = labeled_1d(&[1.5; 6], &[1.5; 4]);
        for prior in [0.3, 0.5, 0.8] {
            let cfg = FusionConfig {
                prior,
                ..FusionConfig::default()
            };
            let model = train_fusion(&vectors, &labels, &cfg).unwrap();
            let logit = (prior / (1.0 - prior)).ln();
            assert!(model.weights[0].abs() < 1e-5, "w = {}", model.weights[0]);
            assert!(
                (model.bias + model.weights[0] * 1.5 - logit).abs() < 1e-6,
                "bias {} vs logit {logit}",
                model.bias
            );
        }
    }

    #[test]
    fn single_class_input_is_rejected() {
        let vectors = vec![vector(vec![1.0]), vector(vec![2.0])];
        let labels = vec![TrialLabel::Natural, TrialLabel::Natural];
        assert!(matches!(
            train_fusion(&vectors, &labels, &FusionConfig::default()),
            Err(Error::DegenerateLabels(_))
        ));
    }

    #[test]
    fn mismatched_group_counts_are_rejected() {
        let vectors = vec![vector(vec![1.0]), vector(vec![2.0, 3.0])];
        let labels = vec![TrialLabel::Natural, TrialLabel::Spoof];
        assert!(matches!(
            train_fusion(&vectors, &labels, &FusionConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hand_set_uniform_model_recovers_the_score_mean() {
        let model = FusionModel {
            scheme: ScoreScheme::Grouped(GroupScheme::Class),
            input_labels: default_input_labels(ScoreScheme::Grouped(GroupScheme::Class), 5),
            weights: vec![0.2; 5],
            bias: 0.0,
            prior: 0.5,
            threshold: 0.0,
        };
        let v = vector(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let fused = apply_fusion(&model, &v).unwrap();
        assert!((fused - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fused_score_is_monotone_in_positive_weight_inputs() {
        let model = FusionModel {
            scheme: ScoreScheme::Grouped(GroupScheme::Class),
            input_labels: default_input_labels(ScoreScheme::Grouped(GroupScheme::Class), 3),
            weights: vec![0.5, 1.5, 0.1],
            bias: -0.2,
            prior: 0.5,
            threshold: 0.0,
        };
        let base = apply_fusion(&model, &vector(vec![0.0, 0.0, 0.0])).unwrap();
        for j in 0..3 {
            let mut scores = vec![0.0; 3];
            scores[j] = 0.7;
            let bumped = apply_fusion(&model, &vector(scores)).unwrap();
            assert!(bumped > base, "input {j} did not raise the fused score");
        }
    }

    #[test]
    fn scheme_mismatch_is_rejected_on_apply() {
        let model = FusionModel {
            scheme: ScoreScheme::Grouped(GroupScheme::Gaussian),
            input_labels: vec!["g0".into()],
            weights: vec![1.0],
            bias: 0.0,
            prior: 0.5,
            threshold: 0.0,
        };
        assert!(apply_fusion(&model, &vector(vec![1.0])).is_err());
    }

    fn random_problem(seed: u64, n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<TrialLabel>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let labels: Vec<TrialLabel> = (0..n)
            .map(|i| {
                if i < 2 || (i >= 4 && rng.random::<f64>() < 0.5) {
                    TrialLabel::Natural
                } else {
                    TrialLabel::Spoof
                }
            })
            .collect();
        (inputs, labels)
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        for seed in 0..50u64 {
            let (inputs, labels) = random_problem(seed, 20, 4);
            let problem = FusionProblem::new(&inputs, &labels, 0.4, 1e-4).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
            let w: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: f64 = rng.random_range(-1.0..1.0);

            let (gw, gb) = problem.gradient(&w, b);
            let h = 1e-5;
            for j in 0..4 {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += h;
                wm[j] -= h;
                let fd = (problem.objective(&wp, b) - problem.objective(&wm, b)) / (2.0 * h);
                assert!(
                    (gw[j] - fd).abs() <= 1e-6 * fd.abs().max(1e-8),
                    "seed {seed} dim {j}: {} vs {fd}",
                    gw[j]
                );
            }
            let fd_b = (problem.objective(&w, b + h) - problem.objective(&w, b - h)) / (2.0 * h);
            assert!((gb - fd_b).abs() <= 1e-6 * fd_b.abs().max(1e-8));
        }
    }

    #[test]
    fn random_restarts_agree_on_the_optimum() {
        let (inputs, labels) = random_problem(3, 30, 3);
        let problem = FusionProblem::new(&inputs, &labels, 0.5, 1e-6).unwrap();
        let mut objectives = Vec::new();
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w0: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b0: f64 = rng.random_range(-2.0..2.0);
            let (w, b) = problem.solve(&w0, b0, 5000, 1e-9).unwrap();
            objectives.push(problem.objective(&w, b));
        }
        for o in &objectives {
            assert!(
                (o - objectives[0]).abs() < 1e-8,
                "objectives diverge: {objectives:?}"
            );
        }
    }

    #[test]
    fn trained_objective_beats_the_prior_only_model() {
        let (inputs, labels) = random_problem(9, 40, 3);
        let cfg = FusionConfig::default();
        let problem = FusionProblem::new(&inputs, &labels, cfg.prior, cfg.l2).unwrap();
        let (w, b) = problem.solve(&[0.0; 3], 0.0, cfg.max_iters, cfg.grad_tol).unwrap();
        let prior_only = problem.objective(&[0.0; 3], (cfg.prior / (1.0 - cfg.prior)).ln());
        assert!(problem.objective(&w, b) <= prior_only + 1e-12);
    }

    #[test]
    fn perfect_detector_dominates_noise_in_fused_cross_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 40;
        let labels: Vec<TrialLabel> = (0..n)
            .map(|i| if i % 2 == 0 { TrialLabel::Natural } else { TrialLabel::Spoof })
            .collect();
        let perfect: Vec<f64> = labels
            .iter()
            .map(|l| if *l == TrialLabel::Natural { 1.0 } else { -1.0 })
            .collect();
        let triples: Vec<Vec<f64>> = perfect
            .iter()
            .map(|&p| vec![p, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let singles: Vec<Vec<f64>> = perfect.iter().map(|&p| vec![p]).collect();

        let cfg = FusionConfig::default();
        let p3 = FusionProblem::new(&triples, &labels, cfg.prior, cfg.l2).unwrap();
        let p1 = FusionProblem::new(&singles, &labels, cfg.prior, cfg.l2).unwrap();
        let (w3, b3) = p3.solve(&[0.0; 3], 0.0, cfg.max_iters, cfg.grad_tol).unwrap();
        let (w1, b1) = p1.solve(&[0.0; 1], 0.0, cfg.max_iters, cfg.grad_tol).unwrap();
        assert!(p3.objective(&w3, b3) <= p1.objective(&w1, b1) + 1e-6);
    }

    #[test]
    fn identical_detectors_fuse_to_the_single_detector_eer() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut detectors = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            let natural = i % 2 == 0;
            let s = if natural {
                rng.random_range(-0.5..2.0)
            } else {
                rng.random_range(-2.0..0.5)
            };
            detectors.push(DetectorScores {
                id: format!("u{i}"),
                class_score: s,
                phoneme_score: s,
                gaussian_score: s,
            });
            labels.push(if natural { TrialLabel::Natural } else { TrialLabel::Spoof });
        }
        let model = fuse_detectors(&detectors, &labels, &FusionConfig::default()).unwrap();

        let fused_trials: Vec<Trial> = detectors
            .iter()
            .zip(&labels)
            .map(|(d, &l)| {
                Trial::new(d.id.clone(), l, "x", apply_detector_fusion(&model, d).unwrap()).unwrap()
            })
            .collect();
        let single_trials: Vec<Trial> = detectors
            .iter()
            .zip(&labels)
            .map(|(d, &l)| Trial::new(d.id.clone(), l, "x", d.class_score).unwrap())
            .collect();
        let fused = crate::eval::compute_eer(&TrialSet::new(fused_trials, BTreeSet::new())).unwrap();
        let single =
            crate::eval::compute_eer(&TrialSet::new(single_trials, BTreeSet::new())).unwrap();
        assert!((fused - single).abs() < 1e-9, "{fused} vs {single}");
    }

    #[test]
    fn complementary_detectors_fuse_below_the_best_single() {
        // detector A separates the first half, detector B the second half
        let mut detectors = Vec::new();
        let mut labels = Vec::new();
        for i in 0..80 {
            let natural = i % 2 == 0;
            let first_half = i < 40;
            let informative = if natural { 1.0 } else { -1.0 };
            detectors.push(DetectorScores {
                id: format!("u{i}"),
                class_score: if first_half { informative } else { 0.0 },
                phoneme_score: if first_half { 0.0 } else { informative },
                gaussian_score: 0.0,
            });
            labels.push(if natural { TrialLabel::Natural } else { TrialLabel::Spoof });
        }
        let model = fuse_detectors(&detectors, &labels, &FusionConfig::default()).unwrap();

        let eer_of = |scores: Vec<f64>| {
            let trials: Vec<Trial> = scores
                .into_iter()
                .zip(&labels)
                .enumerate()
                .map(|(i, (s, &l))| Trial::new(format!("t{i}"), l, "x", s).unwrap())
                .collect();
            crate::eval::compute_eer(&TrialSet::new(trials, BTreeSet::new())).unwrap()
        };
        let fused = eer_of(
            detectors
                .iter()
                .map(|d| apply_detector_fusion(&model, d).unwrap())
                .collect(),
        );
        let best_single = [
            eer_of(detectors.iter().map(|d| d.class_score).collect()),
            eer_of(detectors.iter().map(|d| d.phoneme_score).collect()),
            eer_of(detectors.iter().map(|d| d.gaussian_score).collect()),
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        assert!(fused < best_single, "fused {fused} vs best single {best_single}");
    }

    proptest! {
        /// Rescaling all inputs by c > 0 scales the learned weights by
        /// roughly 1/c and leaves the fused training scores invariant.
        #[test]
        fn rescaling_invariance(c in 0.2f64..5.0, seed in 0u64..20) {
            let (inputs, labels) = random_problem(seed, 24, 2);
            let cfg = FusionConfig { l2: 0.0, ..FusionConfig::default() };
            let problem = FusionProblem::new(&inputs, &labels, cfg.prior, cfg.l2).unwrap();
            let (w, b) = problem.solve(&[0.0; 2], 0.0, 20000, 1e-10).unwrap();

            let scaled: Vec<Vec<f64>> = inputs
                .iter()
                .map(|v| v.iter().map(|x| c * x).collect())
                .collect();
            let sp = FusionProblem::new(&scaled, &labels, cfg.prior, cfg.l2).unwrap();
            let (sw, sb) = sp.solve(&[0.0; 2], 0.0, 20000, 1e-10).unwrap();

            for (wi, swi) in w.iter().zip(&sw) {
                prop_assert!((swi - wi / c).abs() < 1e-5 * wi.abs().max(1.0),
                    "weights: {swi} vs {}", wi / c);
            }
            prop_assert!((sb - b).abs() < 1e-5);
            for (orig, sc) in inputs.iter().zip(&scaled) {
                let f0: f64 = w.iter().zip(orig).map(|(a, x)| a * x).sum::<f64>() + b;
                let f1: f64 = sw.iter().zip(sc).map(|(a, x)| a * x).sum::<f64>() + sb;
                prop_assert!((f0 - f1).abs() < 1e-5, "{f0} vs {f1}");
            }
        }

        #[test]
        fn apply_matches_direct_dot_product(
            weights in proptest::collection::vec(-2.0f64..2.0, 4),
            scores in proptest::collection::vec(-3.0f64..3.0, 4),
            bias in -1.0f64..1.0,
        ) {
            let model = FusionModel {
                scheme: ScoreScheme::Grouped(GroupScheme::Class),
                input_labels: default_input_labels(ScoreScheme::Grouped(GroupScheme::Class), 4),
                weights: weights.clone(),
                bias,
                prior: 0.5,
                threshold: 0.0,
            };
            let v = vector(scores.clone());
            let fused = apply_fusion(&model, &v).unwrap();
            let direct: f64 = weights.iter().zip(&scores).map(|(w, s)| w * s).sum::<f64>() + bias;
            prop_assert!((fused - direct).abs() < 1e-12);
        }
    }
}
