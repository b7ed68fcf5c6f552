//! Frame grouping: by aligned Gaussian component, by phoneme, or by broad
//! sound class.
//!
//! Phoneme and class grouping map each frame center
//! (`frame_index / frame_rate + frame_len / 2`) to the alignment segment
//! containing it; a center exactly on a boundary goes to the later
//! segment, and frames in alignment gaps stay unassigned.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::gmm::DiagGmm;

/// Which partitioning produced a group assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupScheme {
    Gaussian,
    Phoneme,
    Class,
}

impl fmt::Display for GroupScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupScheme::Gaussian => "gaussian",
            GroupScheme::Phoneme => "phoneme",
            GroupScheme::Class => "class",
        })
    }
}

impl FromStr for GroupScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(GroupScheme::Gaussian),
            "phoneme" => Ok(GroupScheme::Phoneme),
            "class" => Ok(GroupScheme::Class),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// A per-frame map into `J` labeled groups; `None` marks frames outside
/// the alignment.
#[derive(Debug, Clone)]
pub struct GroupAssignment {
    pub scheme: GroupScheme,
    pub labels: Vec<String>,
    pub indices: Vec<Option<usize>>,
}

impl GroupAssignment {
    pub fn num_groups(&self) -> usize {
        self.labels.len()
    }

    pub fn num_assigned(&self) -> usize {
        self.indices.iter().filter(|i| i.is_some()).count()
    }

    /// Frames per group.
    pub fn group_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.labels.len()];
        for idx in self.indices.iter().flatten() {
            counts[*idx] += 1;
        }
        counts
    }
}

/// One labeled time span of a phoneme alignment, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub phoneme: String,
}

/// Time-ordered, non-overlapping phoneme segments for one utterance.
#[derive(Debug, Clone)]
pub struct PhonemeAlignment {
    id: String,
    segments: Vec<Segment>,
}

impl PhonemeAlignment {
    pub fn new(id: impl Into<String>, segments: Vec<Segment>) -> Result<Self> {
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.start >= 0.0 && seg.start < seg.end && seg.end.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "segment {i} has invalid span [{}, {})",
                    seg.start, seg.end
                )));
            }
            if i > 0 && seg.start < segments[i - 1].end {
                return Err(Error::InvalidData(format!(
                    "segment {i} overlaps or precedes segment {}",
                    i - 1
                )));
            }
        }
        Ok(Self {
            id: id.into(),
            segments,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Segment containing time `t`, under half-open `[start, end)` spans.
    fn segment_at(&self, t: f64) -> Option<&Segment> {
        self.segments
            .iter()
            .find(|seg| t >= seg.start && t < seg.end)
    }
}

/// The five broad sound classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SoundClass {
    Vowel,
    Nasal,
    Glide,
    Stop,
    Rest,
}

impl SoundClass {
    pub const ALL: [SoundClass; 5] = [
        SoundClass::Vowel,
        SoundClass::Nasal,
        SoundClass::Glide,
        SoundClass::Stop,
        SoundClass::Rest,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SoundClass::Vowel => "vowel",
            SoundClass::Nasal => "nasal",
            SoundClass::Glide => "glide",
            SoundClass::Stop => "stop",
            SoundClass::Rest => "rest",
        }
    }

    pub fn index(self) -> usize {
        SoundClass::ALL.iter().position(|c| *c == self).unwrap()
    }
}

impl FromStr for SoundClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SoundClass::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

/// Total map from a phoneme inventory onto the five sound classes. The
/// built-in table covers a 37-phoneme inventory and can be replaced by a
/// user-supplied file.
#[derive(Debug, Clone)]
pub struct ClassMap {
    map: BTreeMap<String, SoundClass>,
}

impl ClassMap {
    pub fn new(map: BTreeMap<String, SoundClass>) -> Result<Self> {
        if map.is_empty() {
            return Err(Error::EmptyInput("class map".into()));
        }
        Ok(Self { map })
    }

    /// Default 37-phoneme inventory.
    pub fn builtin() -> Self {
        let mut map = BTreeMap::new();
        let table: [(&str, SoundClass); 37] = [
            ("aa", SoundClass::Vowel),
            ("ae", SoundClass::Vowel),
            ("ah", SoundClass::Vowel),
            ("ao", SoundClass::Vowel),
            ("aw", SoundClass::Vowel),
            ("ay", SoundClass::Vowel),
            ("eh", SoundClass::Vowel),
            ("er", SoundClass::Vowel),
            ("ey", SoundClass::Vowel),
            ("ih", SoundClass::Vowel),
            ("iy", SoundClass::Vowel),
            ("ow", SoundClass::Vowel),
            ("oy", SoundClass::Vowel),
            ("uh", SoundClass::Vowel),
            ("uw", SoundClass::Vowel),
            ("m", SoundClass::Nasal),
            ("n", SoundClass::Nasal),
            ("ng", SoundClass::Nasal),
            ("l", SoundClass::Glide),
            ("r", SoundClass::Glide),
            ("w", SoundClass::Glide),
            ("y", SoundClass::Glide),
            ("b", SoundClass::Stop),
            ("d", SoundClass::Stop),
            ("g", SoundClass::Stop),
            ("k", SoundClass::Stop),
            ("p", SoundClass::Stop),
            ("t", SoundClass::Stop),
            ("ch", SoundClass::Rest),
            ("dh", SoundClass::Rest),
            ("f", SoundClass::Rest),
            ("jh", SoundClass::Rest),
            ("s", SoundClass::Rest),
            ("sh", SoundClass::Rest),
            ("th", SoundClass::Rest),
            ("v", SoundClass::Rest),
            ("z", SoundClass::Rest),
        ];
        for (p, c) in table {
            map.insert(p.to_string(), c);
        }
        Self { map }
    }

    pub fn classify(&self, phoneme: &str) -> Option<SoundClass> {
        self.map.get(phoneme).copied()
    }

    /// The configured phoneme inventory in sorted order.
    pub fn phonemes(&self) -> Vec<String> {
        self.map.keys().cloned().collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, SoundClass)> {
        self.map.iter().map(|(p, c)| (p.as_str(), *c))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Groups frames by hard alignment against the natural-speech model:
/// `J` equals the component count and every frame is assigned.
pub fn group_by_gaussian(nat_gmm: &DiagGmm, feats: &FeatureMatrix) -> Result<GroupAssignment> {
    let indices = nat_gmm.align(feats)?;
    let width = (nat_gmm.num_components() as f64).log10().floor() as usize + 1;
    Ok(GroupAssignment {
        scheme: GroupScheme::Gaussian,
        labels: (0..nat_gmm.num_components())
            .map(|k| format!("g{k:0width$}"))
            .collect(),
        indices: indices.into_iter().map(Some).collect(),
    })
}

fn frame_center(i: usize, frame_rate_hz: f64, frame_len_s: f64) -> f64 {
    i as f64 / frame_rate_hz + frame_len_s / 2.0
}

/// Groups frames by the phoneme whose segment contains the frame center.
/// `J` equals the phoneme inventory size; gap frames stay unassigned.
pub fn group_by_phoneme(
    alignment: &PhonemeAlignment,
    feats: &FeatureMatrix,
    phoneme_set: &[String],
    frame_len_s: f64,
) -> Result<GroupAssignment> {
    let mut index_of = BTreeMap::new();
    for (i, p) in phoneme_set.iter().enumerate() {
        if index_of.insert(p.as_str(), i).is_some() {
            return Err(Error::InvalidData(format!(
                "duplicate phoneme {p:?} in phoneme set"
            )));
        }
    }
    for seg in alignment.segments() {
        if !index_of.contains_key(seg.phoneme.as_str()) {
            return Err(Error::UnknownLabel(seg.phoneme.clone()));
        }
    }

    let indices = (0..feats.num_frames())
        .map(|i| {
            let t = frame_center(i, feats.frame_rate_hz(), frame_len_s);
            alignment
                .segment_at(t)
                .map(|seg| index_of[seg.phoneme.as_str()])
        })
        .collect();

    Ok(GroupAssignment {
        scheme: GroupScheme::Phoneme,
        labels: phoneme_set.to_vec(),
        indices,
    })
}

/// Groups frames into the five sound classes by composing the phoneme
/// lookup with the class map.
pub fn group_by_class(
    alignment: &PhonemeAlignment,
    feats: &FeatureMatrix,
    class_map: &ClassMap,
    frame_len_s: f64,
) -> Result<GroupAssignment> {
    for seg in alignment.segments() {
        if class_map.classify(&seg.phoneme).is_none() {
            return Err(Error::UnknownLabel(seg.phoneme.clone()));
        }
    }

    let indices = (0..feats.num_frames())
        .map(|i| {
            let t = frame_center(i, feats.frame_rate_hz(), frame_len_s);
            alignment
                .segment_at(t)
                .map(|seg| class_map.classify(&seg.phoneme).unwrap().index())
        })
        .collect();

    Ok(GroupAssignment {
        scheme: GroupScheme::Class,
        labels: SoundClass::ALL.iter().map(|c| c.label().to_string()).collect(),
        indices,
    })
}
