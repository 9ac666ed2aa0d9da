//! Conversion between fragment annotations and inline tag markup.
//!
//! `encipher` writes a start tag before the first character of every
//! fragment and an end tag after its last one. Tags are boundary markers,
//! not a tree: fragments of different labels may cross, so the output is
//! not necessarily well-formed XML. `decipher` scans tags back out, pairs
//! them per label (innermost close with nearest unclosed open) and records
//! every repair it had to make.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{char_len, ensure_valid, Document, Fragment, Label};
use crate::tagset::{TagKind, TagSet, TagToken};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagEvent {
    pub token: TagToken,
    /// Character offset in the tag-free text.
    pub plain_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedText {
    pub surface: String,
    pub plain: String,
    pub events: Vec<TagEvent>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum RepairPolicy {
    /// Discard unpaired tags.
    #[default]
    Drop,
    /// Close dangling opens at the end of the text; dangling closes are
    /// still discarded.
    CloseAtEnd,
}

impl RepairPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            RepairPolicy::Drop => "drop",
            RepairPolicy::CloseAtEnd => "close-at-end",
        }
    }
}

impl FromStr for RepairPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drop" => Ok(RepairPolicy::Drop),
            "close-at-end" => Ok(RepairPolicy::CloseAtEnd),
            other => Err(Error::InvalidConfig(format!("unknown repair policy {other:?}"))),
        }
    }
}

impl fmt::Display for RepairPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RepairKind {
    DroppedOpen,
    DroppedClose,
    SynthesizedClose,
    /// A pair whose close does not come after its open.
    CollapsedSpan,
    /// A pair that reproduces a fragment already extracted.
    DuplicateSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairEntry {
    pub kind: RepairKind,
    pub label: Label,
    pub plain_offset: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepairLog {
    pub entries: Vec<RepairEntry>,
}

impl RepairLog {
    fn push(&mut self, kind: RepairKind, label: &Label, plain_offset: usize) {
        self.entries.push(RepairEntry {
            kind,
            label: label.clone(),
            plain_offset,
        });
    }

    pub fn count(&self, kind: RepairKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    pub fn dropped_opens(&self) -> usize {
        self.count(RepairKind::DroppedOpen)
    }

    pub fn dropped_closes(&self) -> usize {
        self.count(RepairKind::DroppedClose)
    }

    pub fn synthesized_closes(&self) -> usize {
        self.count(RepairKind::SynthesizedClose)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn counts(&self) -> RepairCounts {
        let mut c = RepairCounts::default();
        for e in &self.entries {
            c.bump(e.kind);
        }
        c
    }
}

/// Aggregated repair counters, summable across documents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RepairCounts {
    pub dropped_opens: usize,
    pub dropped_closes: usize,
    pub synthesized_closes: usize,
    pub collapsed_spans: usize,
    pub duplicate_spans: usize,
}

impl RepairCounts {
    fn bump(&mut self, kind: RepairKind) {
        match kind {
            RepairKind::DroppedOpen => self.dropped_opens += 1,
            RepairKind::DroppedClose => self.dropped_closes += 1,
            RepairKind::SynthesizedClose => self.synthesized_closes += 1,
            RepairKind::CollapsedSpan => self.collapsed_spans += 1,
            RepairKind::DuplicateSpan => self.duplicate_spans += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.dropped_opens + self.dropped_closes + self.synthesized_closes + self.collapsed_spans + self.duplicate_spans
    }
}

impl std::ops::AddAssign for RepairCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.dropped_opens += rhs.dropped_opens;
        self.dropped_closes += rhs.dropped_closes;
        self.synthesized_closes += rhs.synthesized_closes;
        self.collapsed_spans += rhs.collapsed_spans;
        self.duplicate_spans += rhs.duplicate_spans;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deciphered {
    /// Sorted by `(start, end, label)`; offsets refer to the plain text.
    pub fragments: Vec<Fragment>,
    pub log: RepairLog,
    pub plain: String,
}

/// Renders a document as marked text.
///
/// At a shared offset closes come before opens. Opens of longer fragments
/// precede opens of shorter ones, then registry order decides; closes at a
/// shared offset appear in exact reverse order of their opens.
pub fn encipher(doc: &Document, tagset: &TagSet) -> Result<MarkedText> {
    ensure_valid(doc)?;
    let mut keyed = Vec::with_capacity(doc.fragments.len());
    for frag in &doc.fragments {
        let idx = tagset
            .label_index(&frag.label)
            .ok_or_else(|| Error::UnknownLabel(frag.label.canonical_name().to_string()))?;
        keyed.push((frag.start, std::cmp::Reverse(frag.len()), idx, frag.end));
    }
    keyed.sort_unstable();

    // (offset, closes-first flag, order within group, label index, kind)
    let mut order = Vec::with_capacity(keyed.len() * 2);
    for (rank, &(start, _, idx, end)) in keyed.iter().enumerate() {
        order.push((start, 1u8, rank, idx, TagKind::Open));
        order.push((end, 0u8, usize::MAX - rank, idx, TagKind::Close));
    }
    order.sort_unstable();

    let events: Vec<TagEvent> = order
        .into_iter()
        .map(|(offset, _, _, idx, kind)| TagEvent {
            token: tagset.token(idx, kind).clone(),
            plain_offset: offset,
        })
        .collect();

    let tag_bytes: usize = events.iter().map(|e| e.token.surface.len()).sum();
    let mut surface = String::with_capacity(doc.text.len() + tag_bytes);
    let mut next = events.iter().peekable();
    for (pos, c) in doc.text.chars().enumerate() {
        while let Some(ev) = next.next_if(|e| e.plain_offset == pos) {
            surface.push_str(&ev.token.surface);
        }
        surface.push(c);
    }
    for ev in next {
        surface.push_str(&ev.token.surface);
    }

    Ok(MarkedText {
        surface,
        plain: doc.text.clone(),
        events,
    })
}

/// Removes every registry tag from `marked`, recording where each one sat.
/// Anything that looks like a tag but is not in the tag set stays as text.
pub fn strip_tags(marked: &str, tagset: &TagSet) -> (String, Vec<TagEvent>) {
    let mut plain = String::with_capacity(marked.len());
    let mut events = Vec::new();
    let mut plain_len = 0usize;
    let mut rest = marked;
    while let Some(c) = rest.chars().next() {
        if c == '<' {
            if let Some((tok, len)) = tagset.match_prefix(rest) {
                events.push(TagEvent {
                    token: tok.clone(),
                    plain_offset: plain_len,
                });
                rest = &rest[len..];
                continue;
            }
        }
        plain.push(c);
        plain_len += 1;
        rest = &rest[c.len_utf8()..];
    }
    (plain, events)
}

impl MarkedText {
    pub fn parse(marked: &str, tagset: &TagSet) -> Self {
        let (plain, events) = strip_tags(marked, tagset);
        MarkedText {
            surface: marked.to_string(),
            plain,
            events,
        }
    }
}

/// Pairs tag events into fragments.
///
/// `events` must be ordered by offset (ties in sequence order). Pairing is
/// per label and last-in-first-out. `plain_len` is where synthesized
/// closes go.
pub fn pair_events(events: &[TagEvent], plain_len: usize, policy: RepairPolicy) -> (Vec<Fragment>, RepairLog) {
    let mut log = RepairLog::default();
    let mut open: HashMap<&Label, Vec<usize>> = HashMap::new();
    let mut pairs: Vec<(usize, usize, &Label)> = Vec::new();

    for (i, ev) in events.iter().enumerate() {
        let label = &ev.token.label;
        match ev.token.kind {
            TagKind::Open => open.entry(label).or_default().push(i),
            TagKind::Close => match open.get_mut(label).and_then(Vec::pop) {
                Some(j) => pairs.push((events[j].plain_offset, ev.plain_offset, label)),
                None => log.push(RepairKind::DroppedClose, label, ev.plain_offset),
            },
        }
    }

    let mut dangling: Vec<usize> = open.into_values().flatten().collect();
    dangling.sort_unstable();
    for i in dangling {
        let ev = &events[i];
        let label = &ev.token.label;
        match policy {
            RepairPolicy::Drop => log.push(RepairKind::DroppedOpen, label, ev.plain_offset),
            RepairPolicy::CloseAtEnd => {
                log.push(RepairKind::SynthesizedClose, label, plain_len);
                pairs.push((ev.plain_offset, plain_len, label));
            }
        }
    }

    let mut fragments = BTreeSet::new();
    for (start, end, label) in pairs {
        if start >= end {
            log.push(RepairKind::CollapsedSpan, label, start);
        } else if !fragments.insert(Fragment::new(start, end, label.clone())) {
            log.push(RepairKind::DuplicateSpan, label, start);
        }
    }
    (fragments.into_iter().collect(), log)
}

/// Extracts fragments from (possibly malformed) marked text. Never fails:
/// every malformation becomes a repair log entry.
pub fn decipher(marked: &str, tagset: &TagSet, policy: RepairPolicy) -> Deciphered {
    let (plain, events) = strip_tags(marked, tagset);
    let (fragments, log) = pair_events(&events, char_len(&plain), policy);
    Deciphered { fragments, log, plain }
}
