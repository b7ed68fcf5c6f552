//! Text file formats shared by the pipeline stages.
//!
//! - features: `SSDFEAT v1 <id> <N> <D> <frame_rate_hz>` then N rows of D floats
//! - models: `SSDGMM v1 <K> <D>` then weights, K mean rows, K variance rows
//! - score vectors: `SSDSCORES v1 <scheme> <J>` then `<id> [<attack_id>] S_1..S_J N_1..N_J`
//! - fusion models: `SSDFUSE v1 <scheme> <J> <prior> <threshold>` then weights and bias
//! - trials: `<utt_id> <label> <attack_id> <score>` lines
//! - manifests: `<feature_file_path> <label> <attack_id>` lines
//! - alignments: `<start_seconds> <end_seconds> <phoneme>` lines
//! - class maps: `<phoneme> <class>` lines
//!
//! Floats are written with 17 significant digits so every format
//! round-trips f64 values exactly. Identifiers and attack ids must be
//! whitespace-free; optional score-file attack ids are distinguished from
//! scores by not parsing as numbers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::{NATURAL_ATTACK_ID, Trial, TrialLabel};
use crate::features::FeatureMatrix;
use crate::fusion::FusionModel;
use crate::fusion::default_input_labels;
use crate::gmm::DiagGmm;
use crate::grouping::{ClassMap, PhonemeAlignment, Segment, SoundClass};
use crate::scoring::{GroupScoreVector, ScoreScheme};

/// 17 significant digits: exact f64 round-trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(format: &'static str, name: &str, token: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| Error::format(format, name, format!("bad float {token:?}")))
}

fn parse_usize(format: &'static str, name: &str, token: &str) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| Error::format(format, name, format!("bad integer {token:?}")))
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

// ---------------------------------------------------------------------------
// SSDFEAT
// ---------------------------------------------------------------------------

pub fn format_features(feats: &FeatureMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "SSDFEAT v1 {} {} {} {}",
        feats.id(),
        feats.num_frames(),
        feats.dim(),
        fmt_f64(feats.frame_rate_hz())
    );
    for row in feats.rows() {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn parse_features(text: &str, name: &str) -> Result<FeatureMatrix> {
    const F: &str = "SSDFEAT";
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(F, name, "empty file"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 6 || tokens[0] != "SSDFEAT" || tokens[1] != "v1" {
        return Err(Error::format(F, name, format!("bad header {header:?}")));
    }
    let id = tokens[2];
    let n = parse_usize(F, name, tokens[3])?;
    let d = parse_usize(F, name, tokens[4])?;
    let frame_rate = parse_f64(F, name, tokens[5])?;

    let mut data = Vec::with_capacity(n * d);
    for (i, line) in lines.enumerate() {
        if i >= n {
            if !line.trim().is_empty() {
                return Err(Error::format(F, name, "trailing content after data rows"));
            }
            continue;
        }
        let row: Vec<&str> = line.split_whitespace().collect();
        if row.len() != d {
            return Err(Error::format(
                F,
                name,
                format!("row {i} has {} values, expected {d}", row.len()),
            ));
        }
        for tok in row {
            data.push(parse_f64(F, name, tok)?);
        }
    }
    if data.len() != n * d {
        return Err(Error::format(
            F,
            name,
            format!("expected {n} rows, found {}", data.len() / d.max(1)),
        ));
    }
    FeatureMatrix::new(id, d, frame_rate, data)
}

pub fn write_features(path: &Path, feats: &FeatureMatrix) -> Result<()> {
    fs::write(path, format_features(feats))?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    parse_features(&read_to_string(path)?, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// SSDGMM
// ---------------------------------------------------------------------------

pub fn format_gmm(gmm: &DiagGmm) -> String {
    let k = gmm.num_components();
    let mut out = String::new();
    let _ = writeln!(out, "SSDGMM v1 {k} {}", gmm.dim());
    let weights: Vec<String> = gmm.weights().iter().map(|w| fmt_f64(*w)).collect();
    let _ = writeln!(out, "{}", weights.join(" "));
    for c in 0..k {
        let row: Vec<String> = gmm.mean(c).iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    for c in 0..k {
        let row: Vec<String> = gmm.variance(c).iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn parse_gmm(text: &str, name: &str) -> Result<DiagGmm> {
    const F: &str = "SSDGMM";
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(F, name, "empty file"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 4 || tokens[0] != "SSDGMM" || tokens[1] != "v1" {
        return Err(Error::format(F, name, format!("bad header {header:?}")));
    }
    let k = parse_usize(F, name, tokens[2])?;
    let d = parse_usize(F, name, tokens[3])?;

    let mut parse_row = |expected: usize, what: &str| -> Result<Vec<f64>> {
        let line = lines
            .next()
            .ok_or_else(|| Error::format(F, name, format!("missing {what} line")))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != expected {
            return Err(Error::format(
                F,
                name,
                format!("{what} line has {} values, expected {expected}", toks.len()),
            ));
        }
        toks.iter().map(|t| parse_f64(F, name, t)).collect()
    };

    let weights = parse_row(k, "weights")?;
    let mut means = Vec::with_capacity(k * d);
    for c in 0..k {
        means.extend(parse_row(d, &format!("mean {c}"))?);
    }
    let mut variances = Vec::with_capacity(k * d);
    for c in 0..k {
        variances.extend(parse_row(d, &format!("variance {c}"))?);
    }
    DiagGmm::new(d, weights, means, variances)
}

pub fn write_gmm(path: &Path, gmm: &DiagGmm) -> Result<()> {
    fs::write(path, format_gmm(gmm))?;
    Ok(())
}

pub fn read_gmm(path: &Path) -> Result<DiagGmm> {
    parse_gmm(&read_to_string(path)?, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// SSDSCORES
// ---------------------------------------------------------------------------

/// A score vector plus the optional attack id carried next to it
/// (`"human"` marks a natural trial).
#[derive(Debug, Clone)]
pub struct ScoredUtterance {
    pub vector: GroupScoreVector,
    pub attack_id: Option<String>,
}

impl ScoredUtterance {
    pub fn label(&self) -> Option<TrialLabel> {
        self.attack_id.as_deref().map(|a| {
            if a == NATURAL_ATTACK_ID {
                TrialLabel::Natural
            } else {
                TrialLabel::Spoof
            }
        })
    }
}

pub fn format_score_vectors(entries: &[ScoredUtterance]) -> Result<String> {
    let first = entries
        .first()
        .ok_or_else(|| Error::EmptyInput("score vectors".into()))?;
    let scheme = first.vector.scheme;
    let j = first.vector.num_groups();
    let mut out = String::new();
    let _ = writeln!(out, "SSDSCORES v1 {scheme} {j}");
    for e in entries {
        if e.vector.scheme != scheme || e.vector.num_groups() != j {
            return Err(Error::InvalidData(
                "mixed schemes or group counts in one score file".into(),
            ));
        }
        let mut line = e.vector.id.clone();
        if let Some(attack) = &e.attack_id {
            line.push(' ');
            line.push_str(attack);
        }
        for s in &e.vector.scores {
            line.push(' ');
            line.push_str(&fmt_f64(*s));
        }
        for n in &e.vector.counts {
            let _ = write!(line, " {n}");
        }
        let _ = writeln!(out, "{line}");
    }
    Ok(out)
}

pub fn parse_score_vectors(text: &str, name: &str) -> Result<Vec<ScoredUtterance>> {
    const F: &str = "SSDSCORES";
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(F, name, "empty file"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 4 || tokens[0] != "SSDSCORES" || tokens[1] != "v1" {
        return Err(Error::format(F, name, format!("bad header {header:?}")));
    }
    let scheme = ScoreScheme::from_str(tokens[2])
        .map_err(|_| Error::format(F, name, format!("unknown scheme {:?}", tokens[2])))?;
    let j = parse_usize(F, name, tokens[3])?;

    let mut entries = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        // id, optional attack id, J scores, J counts
        let (attack_id, rest) = if toks.len() == 2 * j + 2 {
            (Some(toks[1].to_string()), &toks[2..])
        } else if toks.len() == 2 * j + 1 {
            if toks.len() >= 2 && toks[1].parse::<f64>().is_err() {
                return Err(Error::format(
                    F,
                    name,
                    format!("line {}: wrong field count for labeled entry", lineno + 2),
                ));
            }
            (None, &toks[1..])
        } else {
            return Err(Error::format(
                F,
                name,
                format!(
                    "line {}: {} fields, expected {} or {}",
                    lineno + 2,
                    toks.len(),
                    2 * j + 1,
                    2 * j + 2
                ),
            ));
        };
        let scores: Vec<f64> = rest[..j]
            .iter()
            .map(|t| parse_f64(F, name, t))
            .collect::<Result<_>>()?;
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::format(
                F,
                name,
                format!("line {}: non-finite score {bad}", lineno + 2),
            ));
        }
        let counts: Vec<usize> = rest[j..]
            .iter()
            .map(|t| parse_usize(F, name, t))
            .collect::<Result<_>>()?;
        let total = counts.iter().sum();
        entries.push(ScoredUtterance {
            vector: GroupScoreVector {
                scheme,
                id: toks[0].to_string(),
                scores,
                counts,
                total_frames: total,
                weighted: false,
            },
            attack_id,
        });
    }
    Ok(entries)
}

pub fn write_score_vectors(path: &Path, entries: &[ScoredUtterance]) -> Result<()> {
    fs::write(path, format_score_vectors(entries)?)?;
    Ok(())
}

pub fn read_score_vectors(path: &Path) -> Result<Vec<ScoredUtterance>> {
    parse_score_vectors(&read_to_string(path)?, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// SSDFUSE
// ---------------------------------------------------------------------------

pub fn format_fusion(model: &FusionModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "SSDFUSE v1 {} {} {} {}",
        model.scheme,
        model.num_inputs(),
        fmt_f64(model.prior),
        fmt_f64(model.threshold)
    );
    let weights: Vec<String> = model.weights.iter().map(|w| fmt_f64(*w)).collect();
    let _ = writeln!(out, "{}", weights.join(" "));
    let _ = writeln!(out, "{}", fmt_f64(model.bias));
    out
}

pub fn parse_fusion(text: &str, name: &str) -> Result<FusionModel> {
    const F: &str = "SSDFUSE";
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(F, name, "empty file"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 6 || tokens[0] != "SSDFUSE" || tokens[1] != "v1" {
        return Err(Error::format(F, name, format!("bad header {header:?}")));
    }
    let scheme = ScoreScheme::from_str(tokens[2])
        .map_err(|_| Error::format(F, name, format!("unknown scheme {:?}", tokens[2])))?;
    let j = parse_usize(F, name, tokens[3])?;
    let prior = parse_f64(F, name, tokens[4])?;
    let threshold = parse_f64(F, name, tokens[5])?;

    let weights_line = lines
        .next()
        .ok_or_else(|| Error::format(F, name, "missing weights line"))?;
    let weights: Vec<f64> = weights_line
        .split_whitespace()
        .map(|t| parse_f64(F, name, t))
        .collect::<Result<_>>()?;
    if weights.len() != j {
        return Err(Error::format(
            F,
            name,
            format!("{} weights, expected {j}", weights.len()),
        ));
    }
    let bias_line = lines
        .next()
        .ok_or_else(|| Error::format(F, name, "missing bias line"))?;
    let bias = parse_f64(F, name, bias_line.trim())?;
    if !bias.is_finite()
        || !threshold.is_finite()
        || weights.iter().any(|w| !w.is_finite())
    {
        return Err(Error::format(F, name, "non-finite model parameter"));
    }

    Ok(FusionModel {
        scheme,
        input_labels: default_input_labels(scheme, j),
        weights,
        bias,
        prior,
        threshold,
    })
}

pub fn write_fusion(path: &Path, model: &FusionModel) -> Result<()> {
    fs::write(path, format_fusion(model))?;
    Ok(())
}

pub fn read_fusion(path: &Path) -> Result<FusionModel> {
    parse_fusion(&read_to_string(path)?, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

pub fn format_trials(trials: &[Trial]) -> String {
    let mut out = String::new();
    for t in trials {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            t.id,
            t.label,
            t.attack_id,
            fmt_f64(t.score)
        );
    }
    out
}

pub fn parse_trials(text: &str, name: &str) -> Result<Vec<Trial>> {
    const F: &str = "trial";
    let mut trials = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::format(
                F,
                name,
                format!("line {}: expected 4 fields, got {}", lineno + 1, toks.len()),
            ));
        }
        let label = TrialLabel::from_str(toks[1])
            .map_err(|_| Error::format(F, name, format!("line {}: bad label {:?}", lineno + 1, toks[1])))?;
        trials.push(Trial::new(toks[0], label, toks[2], parse_f64(F, name, toks[3])?)?);
    }
    Ok(trials)
}

pub fn write_trials(path: &Path, trials: &[Trial]) -> Result<()> {
    fs::write(path, format_trials(trials))?;
    Ok(())
}

pub fn read_trials(path: &Path) -> Result<Vec<Trial>> {
    parse_trials(&read_to_string(path)?, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

/// One corpus entry: a feature (or audio) file path with its ground truth.
#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: TrialLabel,
    pub attack_id: String,
}

pub fn format_manifest(entries: &[ManifestEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(out, "{} {} {}", e.path.display(), e.label, e.attack_id);
    }
    out
}

/// Parses a manifest; relative paths are resolved against `base_dir`.
pub fn parse_manifest(text: &str, name: &str, base_dir: &Path) -> Result<Vec<ManifestEntry>> {
    const F: &str = "manifest";
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::format(
                F,
                name,
                format!("line {}: expected 3 fields, got {}", lineno + 1, toks.len()),
            ));
        }
        let label = TrialLabel::from_str(toks[1])
            .map_err(|_| Error::format(F, name, format!("line {}: bad label {:?}", lineno + 1, toks[1])))?;
        let raw = PathBuf::from(toks[0]);
        let path = if raw.is_absolute() {
            raw
        } else {
            base_dir.join(raw)
        };
        entries.push(ManifestEntry {
            path,
            label,
            attack_id: toks[2].to_string(),
        });
    }
    Ok(entries)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    fs::write(path, format_manifest(entries))?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&read_to_string(path)?, &path.display().to_string(), base)
}

// ---------------------------------------------------------------------------
// Alignments and class maps
// ---------------------------------------------------------------------------

pub fn format_alignment(alignment: &PhonemeAlignment) -> String {
    let mut out = String::new();
    for seg in alignment.segments() {
        let _ = writeln!(out, "{} {} {}", fmt_f64(seg.start), fmt_f64(seg.end), seg.phoneme);
    }
    out
}

pub fn parse_alignment(text: &str, name: &str, id: &str) -> Result<PhonemeAlignment> {
    const F: &str = "alignment";
    let mut segments = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::format(
                F,
                name,
                format!("line {}: expected 3 fields, got {}", lineno + 1, toks.len()),
            ));
        }
        segments.push(Segment {
            start: parse_f64(F, name, toks[0])?,
            end: parse_f64(F, name, toks[1])?,
            phoneme: toks[2].to_string(),
        });
    }
    PhonemeAlignment::new(id, segments)
}

pub fn write_alignment(path: &Path, alignment: &PhonemeAlignment) -> Result<()> {
    fs::write(path, format_alignment(alignment))?;
    Ok(())
}

pub fn read_alignment(path: &Path, id: &str) -> Result<PhonemeAlignment> {
    parse_alignment(&read_to_string(path)?, &path.display().to_string(), id)
}

pub fn format_class_map(map: &ClassMap) -> String {
    let mut out = String::new();
    for (phoneme, class) in map.entries() {
        let _ = writeln!(out, "{phoneme} {}", class.label());
    }
    out
}

pub fn parse_class_map(text: &str, name: &str) -> Result<ClassMap> {
    const F: &str = "class map";
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::format(
                F,
                name,
                format!("line {}: expected 2 fields, got {}", lineno + 1, toks.len()),
            ));
        }
        let class = SoundClass::from_str(toks[1]).map_err(|_| {
            Error::format(F, name, format!("line {}: unknown class {:?}", lineno + 1, toks[1]))
        })?;
        if map.insert(toks[0].to_string(), class).is_some() {
            return Err(Error::format(
                F,
                name,
                format!("line {}: duplicate phoneme {:?}", lineno + 1, toks[0]),
            ));
        }
    }
    ClassMap::new(map)
}

pub fn write_class_map(path: &Path, map: &ClassMap) -> Result<()> {
    fs::write(path, format_class_map(map))?;
    Ok(())
}

pub fn read_class_map(path: &Path) -> Result<ClassMap> {
    parse_class_map(&read_to_string(path)?, &path.display().to_string())
}
