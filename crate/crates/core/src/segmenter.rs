//! Sentence splitting, fragment-driven segmentation of long articles and
//! export of training pairs.
//!
//! A segment starts from one fragment and its covering sentences and keeps
//! absorbing any fragment that overlaps a sentence already in it, together
//! with that fragment's sentences. The result is the set of connected
//! components of the fragment/sentence overlap graph. Sentences no
//! fragment touches are dropped.

use std::collections::BTreeSet;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::encipher;
use crate::error::{Error, Result};
use crate::model::{slice_chars, Document, Fragment, TrainConfig, TrainStage};
use crate::tagset::TagSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sentence {
    pub start: usize,
    pub end: usize,
}

/// Splits on `.`, `!` or `?` followed by whitespace, and on every newline.
/// Sentences are trimmed of surrounding whitespace and never empty.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut last_end = 0;
    for (p, &c) in chars.iter().enumerate() {
        if c == '\n' {
            if let Some(s) = start.take() {
                out.push(Sentence {
                    start: s,
                    end: last_end,
                });
            }
        } else if !c.is_whitespace() {
            let s = *start.get_or_insert(p);
            last_end = p + 1;
            let terminal = matches!(c, '.' | '!' | '?') && chars.get(p + 1).is_some_and(|n| n.is_whitespace());
            if terminal {
                out.push(Sentence {
                    start: s,
                    end: last_end,
                });
                start = None;
            }
        }
    }
    if let Some(s) = start {
        out.push(Sentence {
            start: s,
            end: last_end,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub id: String,
    pub doc_id: String,
    /// Indices into the article's sentence list.
    pub sentence_range: Range<usize>,
    /// Character span of the segment within the article.
    pub start: usize,
    pub end: usize,
    pub text: String,
    /// Fragments in segment-local offsets.
    pub fragments: Vec<Fragment>,
}

impl Segment {
    pub fn to_document(&self) -> Document {
        Document::new(self.id.clone(), self.text.clone(), self.fragments.clone())
    }
}

/// A document that is not split (memes) becomes one segment as-is.
pub fn whole_document(doc: &Document) -> Segment {
    let len = doc.char_len();
    Segment {
        id: doc.id.clone(),
        doc_id: doc.id.clone(),
        sentence_range: 0..split_sentences(&doc.text).len(),
        start: 0,
        end: len,
        text: doc.text.clone(),
        fragments: doc.sorted_fragments(),
    }
}

pub fn build_segments(article: &Document) -> Vec<Segment> {
    build_segments_with(article, &split_sentences(&article.text))
}

/// Segments `article` against an explicit, ordered, non-overlapping
/// sentence list.
pub fn build_segments_with(article: &Document, sentences: &[Sentence]) -> Vec<Segment> {
    // Covering sentence range of each fragment; empty when it only touches
    // inter-sentence whitespace.
    let mut covered: Vec<(Range<usize>, &Fragment)> = article
        .fragments
        .iter()
        .map(|f| {
            let a = sentences.partition_point(|s| s.end <= f.start);
            let b = sentences.partition_point(|s| s.start < f.end).max(a);
            (a..b, f)
        })
        .collect();
    covered.sort_by(|x, y| (x.0.start, x.0.end, x.1).cmp(&(y.0.start, y.0.end, y.1)));

    let mut groups: Vec<(Range<usize>, Vec<&Fragment>)> = Vec::new();
    let mut orphans = Vec::new();
    for (range, frag) in covered {
        if range.is_empty() {
            orphans.push((range, vec![frag]));
            continue;
        }
        match groups.last_mut() {
            Some((cur, members)) if range.start < cur.end => {
                cur.end = cur.end.max(range.end);
                members.push(frag);
            }
            _ => groups.push((range, vec![frag])),
        }
    }
    groups.extend(orphans);

    let mut segments: Vec<Segment> = groups
        .into_iter()
        .map(|(range, members)| {
            let mut start = members.iter().map(|f| f.start).min().unwrap_or(0);
            let mut end = members.iter().map(|f| f.end).max().unwrap_or(0);
            if !range.is_empty() {
                start = start.min(sentences[range.start].start);
                end = end.max(sentences[range.end - 1].end);
            }
            let mut fragments: Vec<Fragment> = members
                .into_iter()
                .map(|f| Fragment::new(f.start - start, f.end - start, f.label.clone()))
                .collect();
            fragments.sort();
            Segment {
                id: String::new(),
                doc_id: article.id.clone(),
                sentence_range: range,
                start,
                end,
                text: slice_chars(&article.text, start, end).unwrap_or_default().to_string(),
                fragments,
            }
        })
        .collect();
    segments.sort_by_key(|s| (s.start, s.end));
    for (i, seg) in segments.iter_mut().enumerate() {
        seg.id = format!("{}#{}", article.id, i);
    }
    segments
}

/// One training example: plain source text and its marked target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub source: String,
    pub target: String,
    pub doc_id: String,
    pub stage: TrainStage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub stage: TrainStage,
    pub seed: u64,
    pub ratios: [f64; 3],
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

/// Partition sizes: train and dev are floored, test takes the remainder.
pub fn split_sizes(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let floor = |r: f64| ((n as f64 * r) + 1e-9).floor() as usize;
    let train = floor(ratios[0]).min(n);
    let dev = floor(ratios[1]).min(n - train);
    [train, dev, n - train - dev]
}

/// Seeded document-level split. Returns sorted id lists for train, dev and
/// test.
pub fn split_documents(doc_ids: &[String], ratios: [f64; 3], seed: u64) -> [Vec<String>; 3] {
    let mut ids: Vec<String> = doc_ids.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let [train, dev, _] = split_sizes(ids.len(), ratios);
    let mut test = ids.split_off(train + dev);
    let mut dev_ids = ids.split_off(train);
    ids.sort();
    dev_ids.sort();
    test.sort();
    [ids, dev_ids, test]
}

pub fn build_pairs(segments: &[Segment], tagset: &TagSet, stage: TrainStage) -> Result<Vec<PairRecord>> {
    let mut ordered: Vec<&Segment> = segments.iter().collect();
    ordered.sort_by(|a, b| (&a.doc_id, a.start, &a.id).cmp(&(&b.doc_id, b.start, &b.id)));
    ordered
        .into_iter()
        .map(|seg| {
            let marked = encipher(&seg.to_document(), tagset)?;
            Ok(PairRecord {
                source: seg.text.clone(),
                target: marked.surface,
                doc_id: seg.doc_id.clone(),
                stage,
            })
        })
        .collect()
}

/// Writes `train.jsonl`, `dev.jsonl`, `test.jsonl` and `manifest.json`
/// into `out_dir`.
pub fn export_pairs(
    segments: &[Segment],
    tagset: &TagSet,
    cfg: &TrainConfig,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<SplitManifest> {
    cfg.validate()?;
    let out_dir = out_dir.as_ref();
    let records = build_pairs(segments, tagset, cfg.stage)?;
    let doc_ids: Vec<String> = segments.iter().map(|s| s.doc_id.clone()).collect();
    let [train, dev, test] = split_documents(&doc_ids, cfg.split_ratios, seed);

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (name, ids) in [("train", &train), ("dev", &dev), ("test", &test)] {
        let ids: BTreeSet<&String> = ids.iter().collect();
        let mut buf = Vec::new();
        for rec in records.iter().filter(|r| ids.contains(&r.doc_id)) {
            serde_json::to_writer(&mut buf, rec).expect("pair record serializes");
            buf.push(b'\n');
        }
        write_file(&out_dir.join(format!("{name}.jsonl")), &buf)?;
    }

    let manifest = SplitManifest {
        stage: cfg.stage,
        seed,
        ratios: cfg.split_ratios,
        train,
        dev,
        test,
    };
    let mut buf = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    buf.push(b'\n');
    write_file(&out_dir.join("manifest.json"), &buf)?;
    Ok(manifest)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Number of sentences a fragment overlaps.
pub fn sentence_span(sentences: &[Sentence], fragment: &Fragment) -> usize {
    let a = sentences.partition_point(|s| s.end <= fragment.start);
    let b = sentences.partition_point(|s| s.start < fragment.end);
    b.saturating_sub(a)
}
