//! Reading and writing corpus files.
//!
//! Memes layout (also used for predictions and segments): a JSON array of
//! `{"id", "text", "labels": [{"start", "end", "technique"}]}`. Segment
//! records additionally carry `doc_id` and `offset`.
//!
//! PTC layout: one `article<ID>.txt` per article plus tab-separated
//! annotations `article_id, label, start, end`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::model::{ensure_valid, Document, Fragment, Label, LabelRegistry};
use crate::segmenter::Segment;

/// What to do with a technique name the registry does not know.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum UnknownLabels {
    #[default]
    Error,
    Skip,
}

/// Maps technique names from files to labels. Without a registry every
/// name becomes its own label.
#[derive(Debug, Clone, Copy)]
pub struct LabelResolver<'a> {
    pub registry: Option<&'a LabelRegistry>,
    pub unknown: UnknownLabels,
}

impl<'a> LabelResolver<'a> {
    pub fn strict(registry: &'a LabelRegistry) -> Self {
        LabelResolver {
            registry: Some(registry),
            unknown: UnknownLabels::Error,
        }
    }

    pub fn open() -> Self {
        LabelResolver {
            registry: None,
            unknown: UnknownLabels::Error,
        }
    }

    /// `Ok(None)` means skip this annotation.
    pub fn resolve(&self, name: &str) -> Result<Option<Label>> {
        match self.registry {
            None => Label::new(name).map(Some),
            Some(reg) => match (reg.resolve(name), self.unknown) {
                (Some(l), _) => Ok(Some(l.clone())),
                (None, UnknownLabels::Skip) => Ok(None),
                (None, UnknownLabels::Error) => Err(Error::UnknownLabel(name.to_string())),
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub documents: usize,
    pub fragments: usize,
    pub skipped_labels: BTreeMap<String, usize>,
}

fn string_or_number<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        S(String),
        N(u64),
    }
    Ok(match Id::deserialize(de)? {
        Id::S(s) => s,
        Id::N(n) => n.to_string(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpanRecord {
    start: usize,
    end: usize,
    technique: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DocRecord {
    #[serde(deserialize_with = "string_or_number")]
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    doc_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    offset: Option<usize>,
    text: String,
    #[serde(default)]
    labels: Vec<SpanRecord>,
}

fn read_records(path: &Path) -> Result<Vec<DocRecord>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn record_to_document(rec: &DocRecord, resolver: &LabelResolver<'_>, report: &mut LoadReport) -> Result<Document> {
    let mut fragments = Vec::with_capacity(rec.labels.len());
    for span in &rec.labels {
        match resolver.resolve(&span.technique)? {
            Some(label) => fragments.push(Fragment::new(span.start, span.end, label)),
            None => *report.skipped_labels.entry(span.technique.clone()).or_default() += 1,
        }
    }
    let doc = Document::new(rec.id.clone(), rec.text.clone(), fragments);
    ensure_valid(&doc)?;
    report.documents += 1;
    report.fragments += doc.fragments.len();
    Ok(doc)
}

/// Parses a memes-layout JSON document list from a string.
pub fn parse_memes(json: &str, resolver: &LabelResolver<'_>) -> Result<(Vec<Document>, LoadReport)> {
    let records: Vec<DocRecord> = serde_json::from_str(json).map_err(|source| Error::Json {
        path: PathBuf::from("<input>"),
        source,
    })?;
    let mut report = LoadReport::default();
    let docs = records
        .iter()
        .map(|r| record_to_document(r, resolver, &mut report))
        .collect::<Result<_>>()?;
    Ok((docs, report))
}

pub fn read_memes(path: impl AsRef<Path>, resolver: &LabelResolver<'_>) -> Result<(Vec<Document>, LoadReport)> {
    let records = read_records(path.as_ref())?;
    let mut report = LoadReport::default();
    let docs = records
        .iter()
        .map(|r| record_to_document(r, resolver, &mut report))
        .collect::<Result<_>>()?;
    Ok((docs, report))
}

fn document_record(doc: &Document) -> DocRecord {
    DocRecord {
        id: doc.id.clone(),
        doc_id: None,
        offset: None,
        text: doc.text.clone(),
        labels: doc
            .sorted_fragments()
            .into_iter()
            .map(|f| SpanRecord {
                start: f.start,
                end: f.end,
                technique: f.label.canonical_name().to_string(),
            })
            .collect(),
    }
}

fn to_json(records: &[DocRecord]) -> String {
    let mut out = serde_json::to_string_pretty(records).expect("records serialize");
    out.push('\n');
    out
}

pub fn render_memes(docs: &[Document]) -> String {
    to_json(&docs.iter().map(document_record).collect::<Vec<_>>())
}

pub fn write_memes(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_memes(docs)).map_err(|e| Error::io(path, e))
}

pub fn render_segments(segments: &[Segment]) -> String {
    let records: Vec<DocRecord> = segments
        .iter()
        .map(|s| DocRecord {
            doc_id: Some(s.doc_id.clone()),
            offset: Some(s.start),
            ..document_record(&s.to_document())
        })
        .collect();
    to_json(&records)
}

/// Reads segments (or plain memes documents, which become one segment
/// each).
pub fn read_segments(path: impl AsRef<Path>, resolver: &LabelResolver<'_>) -> Result<Vec<Segment>> {
    let records = read_records(path.as_ref())?;
    let mut report = LoadReport::default();
    records
        .iter()
        .map(|rec| {
            let doc = record_to_document(rec, resolver, &mut report)?;
            let start = rec.offset.unwrap_or(0);
            Ok(Segment {
                id: doc.id.clone(),
                doc_id: rec.doc_id.clone().unwrap_or_else(|| doc.id.clone()),
                sentence_range: 0..0,
                start,
                end: start + doc.char_len(),
                text: doc.text,
                fragments: doc.fragments,
            })
        })
        .collect()
}

/// `article123.txt` → `123`; other names keep their stem.
pub fn article_id(path: &Path) -> Option<String> {
    let stem = path.file_stem()?.to_str()?;
    Some(stem.strip_prefix("article").unwrap_or(stem).to_string())
}

fn annotation_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("labels" | "tsv" | "txt")))
            .collect();
        files.sort();
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

/// Loads a PTC-style corpus. `annotations` is a tab-separated file or a
/// directory of them. Articles without annotations yield documents with no
/// fragments.
pub fn read_ptc(
    articles_dir: impl AsRef<Path>,
    annotations: impl AsRef<Path>,
    resolver: &LabelResolver<'_>,
) -> Result<(Vec<Document>, LoadReport)> {
    let dir = articles_dir.as_ref();
    let mut texts: BTreeMap<String, String> = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_article = path.extension().and_then(|e| e.to_str()) == Some("txt")
            && path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("article"));
        if !is_article {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        if let Some(id) = article_id(&path) {
            texts.insert(id, text);
        }
    }

    let mut report = LoadReport::default();
    let mut fragments: BTreeMap<String, Vec<Fragment>> = BTreeMap::new();
    for file in annotation_files(annotations.as_ref())? {
        let source = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        for (n, line) in source.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |detail: String| Error::Parse {
                path: file.clone(),
                line: n + 1,
                detail,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 4 {
                return Err(parse_err(format!(
                    "expected 4 tab-separated columns, got {}",
                    cols.len()
                )));
            }
            let id = cols[0].trim();
            let id = id.strip_prefix("article").unwrap_or(id).to_string();
            let offset = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| parse_err(format!("bad offset {s:?}")))
            };
            let (start, end) = (offset(cols[2])?, offset(cols[3])?);
            if !texts.contains_key(&id) {
                return Err(parse_err(format!("no article file for id {id}")));
            }
            match resolver.resolve(cols[1].trim())? {
                Some(label) => fragments.entry(id).or_default().push(Fragment::new(start, end, label)),
                None => *report.skipped_labels.entry(cols[1].trim().to_string()).or_default() += 1,
            }
        }
    }

    let docs = texts
        .into_iter()
        .map(|(id, text)| {
            let frags = fragments.remove(&id).unwrap_or_default();
            let doc = Document::new(id, text, frags);
            ensure_valid(&doc)?;
            report.documents += 1;
            report.fragments += doc.fragments.len();
            Ok(doc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((docs, report))
}

/// One line of enciphered output: document id plus marked text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedRecord {
    #[serde(deserialize_with = "string_or_number")]
    pub id: String,
    pub marked: String,
}

pub fn render_marked(records: &[MarkedRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_marked(source: &str, origin: &Path) -> Result<Vec<MarkedRecord>> {
    source
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line: n + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> LabelRegistry {
        LabelRegistry::parse("Smears\nLoaded Language\nName calling/Labeling\tNAME-CALLING\n").unwrap()
    }

    #[test]
    fn memes_round_trip() {
        let reg = registry();
        let json = r#"[{"id": 125, "text": "abc def", "labels": [
            {"start": 4, "end": 7, "technique": "Loaded Language", "text_fragment": "def"},
            {"start": 0, "end": 7, "technique": "Smears"}]}]"#;
        let (docs, report) = parse_memes(json, &LabelResolver::strict(&reg)).unwrap();
        assert_eq!(docs[0].id, "125");
        assert_eq!(report.fragments, 2);
        let rendered = render_memes(&docs);
        let (back, _) = parse_memes(&rendered, &LabelResolver::strict(&reg)).unwrap();
        assert_eq!(back[0].sorted_fragments(), docs[0].sorted_fragments());
        assert!(rendered.find("\"Smears\"").unwrap() < rendered.find("\"Loaded Language\"").unwrap());
    }

    #[test]
    fn unknown_labels() {
        let reg = registry();
        let json = r#"[{"id": "1", "text": "abc", "labels": [{"start": 0, "end": 1, "technique": "Doubt"}]}]"#;
        assert!(matches!(
            parse_memes(json, &LabelResolver::strict(&reg)),
            Err(Error::UnknownLabel(_))
        ));
        let skip = LabelResolver {
            registry: Some(&reg),
            unknown: UnknownLabels::Skip,
        };
        let (docs, report) = parse_memes(json, &skip).unwrap();
        assert!(docs[0].fragments.is_empty());
        assert_eq!(report.skipped_labels["Doubt"], 1);
        let (docs, _) = parse_memes(json, &LabelResolver::open()).unwrap();
        assert_eq!(docs[0].fragments[0].label.tag_stem(), "DOUBT");
    }

    #[test]
    fn invalid_and_duplicate_fragments_fail_to_load() {
        let reg = registry();
        let json = r#"[{"id": "1", "text": "abc", "labels": [{"start": 0, "end": 9, "technique": "Smears"}]}]"#;
        assert!(matches!(
            parse_memes(json, &LabelResolver::strict(&reg)),
            Err(Error::InvalidDocument { .. })
        ));
        let json = r#"[{"id": "1", "text": "abc", "labels": [
            {"start": 0, "end": 2, "technique": "Smears"}, {"start": 0, "end": 2, "technique": "Smears"}]}]"#;
        assert!(parse_memes(json, &LabelResolver::strict(&reg)).is_err());
    }

    #[test]
    fn ptc_loading() {
        let dir = tempfile::tempdir().unwrap();
        let articles = dir.path().join("articles");
        std::fs::create_dir(&articles).unwrap();
        std::fs::write(articles.join("article111.txt"), "Some loaded words here.\nMore.").unwrap();
        std::fs::write(articles.join("article222.txt"), "Nothing.").unwrap();
        std::fs::write(articles.join("README.md"), "ignored").unwrap();
        let labels = dir.path().join("labels.tsv");
        std::fs::write(&labels, "111\tLoaded_Language\t5\t11\narticle111\tSmears\t0\t29\n").unwrap();
        let reg = registry();
        let (docs, report) = read_ptc(&articles, &labels, &LabelResolver::strict(&reg)).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(report.fragments, 2);
        assert_eq!(docs[0].id, "111");
        assert_eq!(docs[0].surface(&docs[0].sorted_fragments()[1]), Some("loaded"));
        assert!(docs[1].fragments.is_empty());

        std::fs::write(&labels, "999\tSmears\t0\t1\n").unwrap();
        let err = read_ptc(&articles, &labels, &LabelResolver::strict(&reg)).unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
    }

    #[test]
    fn marked_records() {
        let recs = vec![MarkedRecord {
            id: "a".into(),
            marked: "<SMEARS>x\ny</SMEARS>".into(),
        }];
        let text = render_marked(&recs);
        assert_eq!(text.lines().count(), 1);
        assert_eq!(parse_marked(&text, Path::new("m.jsonl")).unwrap(), recs);
    }
}
