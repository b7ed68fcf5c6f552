//! Equal-error-rate evaluation: threshold sweeps, DET points, and the
//! per-attack / known / unknown report layout.
//!
//! Score polarity is fixed repo-wide: higher means more natural, and a
//! trial is accepted as natural when its score is at or above the
//! threshold. The EER is read off the FAR/FRR crossing with linear
//! interpolation between adjacent sweep points.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Ground-truth class of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialLabel {
    Natural,
    Spoof,
}

impl fmt::Display for TrialLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrialLabel::Natural => "natural",
            TrialLabel::Spoof => "spoof",
        })
    }
}

impl FromStr for TrialLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "natural" => Ok(TrialLabel::Natural),
            "spoof" => Ok(TrialLabel::Spoof),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// Attack id used for natural trials.
pub const NATURAL_ATTACK_ID: &str = "human";

/// One scored utterance with its ground truth.
#[derive(Debug, Clone)]
pub struct Trial {
    pub id: String,
    pub label: TrialLabel,
    /// Attack system id; `"human"` for natural trials.
    pub attack_id: String,
    pub score: f64,
}

impl Trial {
    pub fn new(
        id: impl Into<String>,
        label: TrialLabel,
        attack_id: impl Into<String>,
        score: f64,
    ) -> Result<Self> {
        if !score.is_finite() {
            return Err(Error::InvalidData(format!("non-finite trial score {score}")));
        }
        Ok(Self {
            id: id.into(),
            label,
            attack_id: attack_id.into(),
            score,
        })
    }
}

/// A labeled trial collection plus the set of attack ids that were seen in
/// training ("known"); everything else aggregates as "unknown".
#[derive(Debug, Clone)]
pub struct TrialSet {
    pub trials: Vec<Trial>,
    pub known_attacks: BTreeSet<String>,
}

impl TrialSet {
    pub fn new(trials: Vec<Trial>, known_attacks: BTreeSet<String>) -> Self {
        Self {
            trials,
            known_attacks,
        }
    }

    fn split_scores(&self) -> (Vec<f64>, Vec<f64>) {
        let mut natural = Vec::new();
        let mut spoof = Vec::new();
        for t in &self.trials {
            match t.label {
                TrialLabel::Natural => natural.push(t.score),
                TrialLabel::Spoof => spoof.push(t.score),
            }
        }
        (natural, spoof)
    }
}

/// Sweep points over the unique scores (ascending) plus a final
/// accept-nothing point. At threshold `t`: `FAR = P(spoof >= t)`,
/// `FRR = P(natural < t)`.
fn sweep(natural: &[f64], spoof: &[f64]) -> Vec<(f64, f64)> {
    let mut thresholds: Vec<f64> = natural.iter().chain(spoof).cloned().collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();

    let mut nat_sorted = natural.to_vec();
    nat_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut spoof_sorted = spoof.to_vec();
    spoof_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let nn = natural.len() as f64;
    let ns = spoof.len() as f64;
    let mut points = Vec::with_capacity(thresholds.len() + 1);
    for &t in &thresholds {
        let spoof_accepted = spoof_sorted.len() - spoof_sorted.partition_point(|&s| s < t);
        let nat_rejected = nat_sorted.partition_point(|&s| s < t);
        points.push((spoof_accepted as f64 / ns, nat_rejected as f64 / nn));
    }
    points.push((0.0, 1.0));
    points
}

fn eer_from_scores(natural: &[f64], spoof: &[f64]) -> Result<(f64, f64)> {
    if natural.is_empty() || spoof.is_empty() {
        return Err(Error::DegenerateLabels(
            "EER needs at least one natural and one spoof trial".into(),
        ));
    }
    let mut thresholds: Vec<f64> = natural.iter().chain(spoof).cloned().collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    let points = sweep(natural, spoof);

    // FAR - FRR is non-increasing, from +1-ish down to -1; find the sign
    // change and interpolate.
    for i in 0..points.len() {
        let diff = points[i].0 - points[i].1;
        if diff <= 0.0 {
            if diff == 0.0 || i == 0 {
                let t = if i < thresholds.len() {
                    thresholds[i]
                } else {
                    thresholds[thresholds.len() - 1]
                };
                return Ok((points[i].0, t));
            }
            let (far0, frr0) = points[i - 1];
            let (far1, frr1) = points[i];
            let d0 = far0 - frr0;
            let d1 = far1 - frr1;
            let alpha = d0 / (d0 - d1);
            let eer = far0 + alpha * (far1 - far0);
            let t0 = thresholds[i - 1];
            let t1 = if i < thresholds.len() {
                thresholds[i]
            } else {
                thresholds[thresholds.len() - 1]
            };
            return Ok((eer, t0 + alpha * (t1 - t0)));
        }
    }
    unreachable!("FAR - FRR always reaches -1 at the accept-nothing point")
}

/// Equal error rate as a fraction in [0, 1].
pub fn compute_eer(trials: &TrialSet) -> Result<f64> {
    let (natural, spoof) = trials.split_scores();
    eer_from_scores(&natural, &spoof).map(|(eer, _)| eer)
}

/// EER together with the interpolated decision threshold at the crossing.
pub fn eer_with_threshold(trials: &TrialSet) -> Result<(f64, f64)> {
    let (natural, spoof) = trials.split_scores();
    eer_from_scores(&natural, &spoof)
}

/// Ordered (FAR, FRR) operating points, one per unique score threshold
/// (ascending) plus the final accept-nothing point. FAR is non-increasing
/// and FRR non-decreasing along the list.
pub fn det_points(trials: &TrialSet) -> Result<Vec<(f64, f64)>> {
    let (natural, spoof) = trials.split_scores();
    if natural.is_empty() || spoof.is_empty() {
        return Err(Error::DegenerateLabels(
            "DET sweep needs both trial labels".into(),
        ));
    }
    Ok(sweep(&natural, &spoof))
}

/// One line of the evaluation report.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub label: String,
    pub eer: f64,
    pub num_spoof: usize,
}

/// Per-attack EERs plus Known / Unknown / All aggregates. Natural trials
/// are shared across every row.
#[derive(Debug, Clone)]
pub struct AttackReport {
    pub rows: Vec<ReportRow>,
}

impl AttackReport {
    /// Aligned text table.
    pub fn to_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .chain(["System".len()])
            .max()
            .unwrap_or(6);
        let mut out = String::new();
        out.push_str(&format!("{:<width$}  {:>8}  {:>8}\n", "System", "EER(%)", "Trials"));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<width$}  {:>8.2}  {:>8}\n",
                row.label,
                row.eer * 100.0,
                row.num_spoof
            ));
        }
        out
    }

    /// Machine-readable rows: `<row_label> <eer_percent>`.
    pub fn machine_rows(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&format!("{} {:.4}\n", row.label, row.eer * 100.0));
        }
        out
    }

    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Builds the report: one row per attack id (sorted), then Known, Unknown,
/// and All aggregates. Attack ids absent from the known set fall under
/// Unknown; aggregate rows without any spoof trials are omitted.
pub fn per_attack_report(trials: &TrialSet) -> Result<AttackReport> {
    let natural: Vec<f64> = trials
        .trials
        .iter()
        .filter(|t| t.label == TrialLabel::Natural)
        .map(|t| t.score)
        .collect();
    if natural.is_empty() {
        return Err(Error::DegenerateLabels("report needs natural trials".into()));
    }

    let attack_ids: BTreeSet<String> = trials
        .trials
        .iter()
        .filter(|t| t.label == TrialLabel::Spoof)
        .map(|t| t.attack_id.clone())
        .collect();
    if attack_ids.is_empty() {
        return Err(Error::DegenerateLabels("report needs spoof trials".into()));
    }

    let spoof_scores = |pred: &dyn Fn(&Trial) -> bool| -> Vec<f64> {
        trials
            .trials
            .iter()
            .filter(|t| t.label == TrialLabel::Spoof && pred(t))
            .map(|t| t.score)
            .collect()
    };

    let mut rows = Vec::new();
    for attack in &attack_ids {
        let spoof = spoof_scores(&|t: &Trial| &t.attack_id == attack);
        let (eer, _) = eer_from_scores(&natural, &spoof)?;
        rows.push(ReportRow {
            label: attack.clone(),
            eer,
            num_spoof: spoof.len(),
        });
    }

    let known = spoof_scores(&|t: &Trial| trials.known_attacks.contains(&t.attack_id));
    if !known.is_empty() {
        let (eer, _) = eer_from_scores(&natural, &known)?;
        rows.push(ReportRow {
            label: "Known".into(),
            eer,
            num_spoof: known.len(),
        });
    }
    let unknown = spoof_scores(&|t: &Trial| !trials.known_attacks.contains(&t.attack_id));
    if !unknown.is_empty() {
        let (eer, _) = eer_from_scores(&natural, &unknown)?;
        rows.push(ReportRow {
            label: "Unknown".into(),
            eer,
            num_spoof: unknown.len(),
        });
    }
    let all = spoof_scores(&|_| true);
    let (eer, _) = eer_from_scores(&natural, &all)?;
    rows.push(ReportRow {
        label: "All".into(),
        eer,
        num_spoof: all.len(),
    });

    Ok(AttackReport { rows })
}
