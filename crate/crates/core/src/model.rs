//! Shared data model: labels, fragments, documents and run configurations.
//!
//! All offsets are counted in Unicode scalar values (`char`s), never bytes.
//! Annotation files for both supported corpora index characters, and this
//! keeps offsets independent of the in-memory encoding.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tagset::normalize_stem;

/// A technique class: the name used in annotation files plus the stem used
/// to build its tag surfaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    canonical_name: String,
    tag_stem: String,
}

impl Label {
    /// Builds a label whose stem is derived with [`normalize_stem`].
    pub fn new(canonical_name: &str) -> Result<Self> {
        let tag_stem = normalize_stem(canonical_name)?;
        Ok(Label {
            canonical_name: canonical_name.to_string(),
            tag_stem,
        })
    }

    /// Builds a label with an explicit stem, which must already be in normal
    /// form (`[A-Z0-9][A-Z0-9-]*`).
    pub fn with_stem(canonical_name: &str, tag_stem: &str) -> Result<Self> {
        if canonical_name.trim().is_empty() {
            return Err(Error::InvalidLabel {
                name: canonical_name.to_string(),
                reason: "empty name".into(),
            });
        }
        if !is_valid_stem(tag_stem) {
            return Err(Error::InvalidLabel {
                name: canonical_name.to_string(),
                reason: format!("stem {tag_stem:?} does not match [A-Z0-9][A-Z0-9-]*"),
            });
        }
        Ok(Label {
            canonical_name: canonical_name.to_string(),
            tag_stem: tag_stem.to_string(),
        })
    }

    pub fn canonical_name(&self) -> &str {
        &self.canonical_name
    }

    pub fn tag_stem(&self) -> &str {
        &self.tag_stem
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_name)
    }
}

pub(crate) fn is_valid_stem(stem: &str) -> bool {
    let mut chars = stem.chars();
    match chars.next() {
        Some(c) if c.is_ascii_uppercase() || c.is_ascii_digit() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '-')
}

/// An ordered, collision-free list of labels.
///
/// The registry file is line oriented: one canonical name per line, with an
/// optional tab-separated stem override. Blank lines and lines starting with
/// `#` are ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelRegistry {
    labels: Vec<Label>,
}

impl LabelRegistry {
    pub fn new(labels: Vec<Label>) -> Result<Self> {
        let mut by_stem: HashMap<&str, &Label> = HashMap::new();
        let mut names = HashSet::new();
        for label in &labels {
            if let Some(prev) = by_stem.insert(label.tag_stem(), label) {
                return Err(Error::RegistryCollision {
                    first: prev.canonical_name.clone(),
                    second: label.canonical_name.clone(),
                    stem: label.tag_stem.clone(),
                });
            }
            if !names.insert(label.canonical_name()) {
                return Err(Error::InvalidLabel {
                    name: label.canonical_name.clone(),
                    reason: "listed twice".into(),
                });
            }
        }
        Ok(LabelRegistry { labels })
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let labels = names
            .iter()
            .map(|n| Label::new(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels)
    }

    pub fn parse(source: &str) -> Result<Self> {
        let mut labels = Vec::new();
        for line in source.lines() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let label = match line.split_once('\t') {
                Some((name, stem)) if !stem.trim().is_empty() => Label::with_stem(name.trim(), stem.trim())?,
                Some((name, _)) => Label::new(name.trim())?,
                None => Label::new(line.trim())?,
            };
            labels.push(label);
        }
        Self::new(labels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let source = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&source)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Finds the label an annotation file refers to. Tries the exact
    /// canonical name, then the stem, then the normalized canonical name, so
    /// that `Loaded_Language` and `Loaded Language` resolve to one label.
    pub fn resolve(&self, name: &str) -> Option<&Label> {
        if let Some(l) = self.labels.iter().find(|l| l.canonical_name == name) {
            return Some(l);
        }
        let stem = normalize_stem(name).ok()?;
        self.labels.iter().find(|l| l.tag_stem == stem).or_else(|| {
            self.labels
                .iter()
                .find(|l| normalize_stem(&l.canonical_name).ok().as_deref() == Some(&stem))
        })
    }
}

/// A labeled half-open character interval `[start, end)` over a text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fragment {
    pub start: usize,
    pub end: usize,
    pub label: Label,
}

impl Fragment {
    pub fn new(start: usize, end: usize, label: Label) -> Self {
        Fragment { start, end, label }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub fragments: Vec<Fragment>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, fragments: Vec<Fragment>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            fragments,
        }
    }

    pub fn char_len(&self) -> usize {
        char_len(&self.text)
    }

    /// The annotated surface of a fragment, or `None` when out of range.
    pub fn surface(&self, fragment: &Fragment) -> Option<&str> {
        slice_chars(&self.text, fragment.start, fragment.end)
    }

    /// Fragments in canonical `(start, end, label)` order.
    pub fn sorted_fragments(&self) -> Vec<Fragment> {
        let mut out = self.fragments.clone();
        out.sort();
        out
    }
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Slices `text` by character offsets.
pub fn slice_chars(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
    let from = indices.nth(start)?;
    let to = if end == start {
        from
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&text[from..to])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationRule {
    OffsetOutOfRange,
    EmptySpan,
    DuplicateFragment,
}

impl ViolationRule {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationRule::OffsetOutOfRange => "offset-out-of-range",
            ViolationRule::EmptySpan => "empty-span",
            ViolationRule::DuplicateFragment => "duplicate-fragment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub fragment_index: usize,
    pub rule: ViolationRule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fragment {}: {}", self.fragment_index, self.rule.as_str())
    }
}

/// Checks every fragment against the document text. An empty result means
/// the document is valid.
pub fn validate_document(doc: &Document) -> Vec<Violation> {
    let len = doc.char_len();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, frag) in doc.fragments.iter().enumerate() {
        if frag.start >= frag.end {
            out.push(Violation {
                fragment_index: i,
                rule: ViolationRule::EmptySpan,
            });
        } else if frag.end > len {
            out.push(Violation {
                fragment_index: i,
                rule: ViolationRule::OffsetOutOfRange,
            });
        }
        if !seen.insert((frag.start, frag.end, &frag.label)) {
            out.push(Violation {
                fragment_index: i,
                rule: ViolationRule::DuplicateFragment,
            });
        }
    }
    out
}

/// Fails with the first violation, if any.
pub fn ensure_valid(doc: &Document) -> Result<()> {
    match validate_document(doc).first() {
        None => Ok(()),
        Some(v) => Err(Error::InvalidDocument {
            id: doc.id.clone(),
            detail: v.to_string(),
        }),
    }
}

/// Generation settings handed to the sequence-to-sequence model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub max_length: usize,
    pub length_penalty: f64,
    pub repetition_penalty: f64,
    pub do_sample: bool,
    pub num_beams: usize,
    pub top_p: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_length: 200,
            length_penalty: 0.4,
            repetition_penalty: 2.0,
            do_sample: true,
            num_beams: 3,
            top_p: 0.8,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_length == 0 || self.num_beams == 0 {
            return Err(Error::InvalidConfig("max_length and num_beams must be positive".into()));
        }
        if !(self.length_penalty >= 0.0 && self.repetition_penalty >= 0.0) {
            return Err(Error::InvalidConfig("penalties must be non-negative".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::InvalidConfig("top_p must be in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainStage {
    PretrainPtc,
    FinetuneMemes,
}

impl TrainStage {
    pub fn as_str(self) -> &'static str {
        match self {
            TrainStage::PretrainPtc => "pretrain_ptc",
            TrainStage::FinetuneMemes => "finetune_memes",
        }
    }
}

impl std::str::FromStr for TrainStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pretrain_ptc" => Ok(TrainStage::PretrainPtc),
            "finetune_memes" => Ok(TrainStage::FinetuneMemes),
            other => Err(Error::InvalidConfig(format!("unknown stage {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// train : dev : test
    pub split_ratios: [f64; 3],
    pub batch_size: usize,
    pub epochs: usize,
    pub stage: TrainStage,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            split_ratios: [0.7, 0.2, 0.1],
            batch_size: 8,
            epochs: 25,
            stage: TrainStage::PretrainPtc,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.split_ratios.iter().any(|r| r.is_nan() || *r < 0.0) {
            return Err(Error::InvalidConfig("split ratios must be non-negative".into()));
        }
        let sum: f64 = self.split_ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("split ratios sum to {sum}, expected 1")));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig("batch_size and epochs must be positive".into()));
        }
        Ok(())
    }
}
