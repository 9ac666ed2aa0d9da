//! Start/end tag tokens derived from a label registry.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Label, LabelRegistry};

/// Uppercases `name` and collapses every run of non-alphanumeric characters
/// into a single hyphen, trimming hyphens at both ends.
///
/// `"Name calling/Labeling"` becomes `"NAME-CALLING-LABELING"`.
pub fn normalize_stem(name: &str) -> Result<String> {
    let mut out = String::with_capacity(name.len());
    let mut pending_sep = false;
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            if pending_sep && !out.is_empty() {
                out.push('-');
            }
            pending_sep = false;
            out.push(c.to_ascii_uppercase());
        } else {
            pending_sep = true;
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidLabel {
            name: name.to_string(),
            reason: "normalizes to an empty tag stem".into(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TagKind {
    Open,
    Close,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TagToken {
    pub label: Label,
    pub kind: TagKind,
    pub surface: String,
}

impl TagToken {
    fn new(label: &Label, kind: TagKind) -> Self {
        let surface = match kind {
            TagKind::Open => format!("<{}>", label.tag_stem()),
            TagKind::Close => format!("</{}>", label.tag_stem()),
        };
        TagToken {
            label: label.clone(),
            kind,
            surface,
        }
    }
}

impl fmt::Display for TagToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface)
    }
}

/// The tag vocabulary for one registry: an open and a close token per
/// label, in registry order.
#[derive(Debug, Clone)]
pub struct TagSet {
    labels: Vec<Label>,
    tokens: Vec<TagToken>,
    by_surface: HashMap<String, usize>,
    by_label: HashMap<Label, usize>,
}

/// Builds the tag vocabulary. Fails on an empty registry or when two
/// labels share a stem.
pub fn build_tagset(registry: &[Label]) -> Result<TagSet> {
    if registry.is_empty() {
        return Err(Error::EmptyRegistry);
    }
    let mut stems: HashMap<&str, &Label> = HashMap::new();
    for label in registry {
        if let Some(prev) = stems.insert(label.tag_stem(), label) {
            return Err(Error::RegistryCollision {
                first: prev.canonical_name().to_string(),
                second: label.canonical_name().to_string(),
                stem: label.tag_stem().to_string(),
            });
        }
    }
    let mut tokens = Vec::with_capacity(registry.len() * 2);
    let mut by_surface = HashMap::new();
    let mut by_label = HashMap::new();
    for (i, label) in registry.iter().enumerate() {
        for kind in [TagKind::Open, TagKind::Close] {
            let tok = TagToken::new(label, kind);
            by_surface.insert(tok.surface.clone(), tokens.len());
            tokens.push(tok);
        }
        by_label.insert(label.clone(), i);
    }
    Ok(TagSet {
        labels: registry.to_vec(),
        tokens,
        by_surface,
        by_label,
    })
}

impl TagSet {
    pub fn from_registry(registry: &LabelRegistry) -> Result<Self> {
        build_tagset(registry.labels())
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn tokens(&self) -> &[TagToken] {
        &self.tokens
    }

    /// Registry position of a label.
    pub fn label_index(&self, label: &Label) -> Option<usize> {
        self.by_label.get(label).copied()
    }

    pub fn token(&self, label_index: usize, kind: TagKind) -> &TagToken {
        let offset = match kind {
            TagKind::Open => 0,
            TagKind::Close => 1,
        };
        &self.tokens[label_index * 2 + offset]
    }

    /// Parses an exact tag surface such as `"</SMEARS>"`.
    pub fn parse_surface(&self, surface: &str) -> Option<&TagToken> {
        self.by_surface.get(surface).map(|&i| &self.tokens[i])
    }

    /// Recognizes a tag at the very start of `input`.
    ///
    /// Stems never contain `<` or `>`, so the only candidate surface is the
    /// prefix ending at the first `>`; this is the longest (and only) match.
    pub(crate) fn match_prefix(&self, input: &str) -> Option<(&TagToken, usize)> {
        if !input.starts_with('<') {
            return None;
        }
        let close = input[1..].find(['>', '<'])? + 1;
        if input.as_bytes()[close] != b'>' {
            return None;
        }
        let candidate = &input[..=close];
        self.parse_surface(candidate).map(|tok| (tok, candidate.len()))
    }

    /// One surface per line: open then close for each label, registry order.
    pub fn render_vocab(&self) -> String {
        let mut out = String::new();
        for tok in &self.tokens {
            out.push_str(&tok.surface);
            out.push('\n');
        }
        out
    }
}

pub fn export_vocab(tagset: &TagSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, tagset.render_vocab()).map_err(|e| Error::io(path, e))
}
