//! Overlap-credit precision/recall/F1 and corpus statistics.
//!
//! For a predicted fragment `s` and a gold fragment `t` with the same label,
//! `C(s, t, h) = |s ∩ t| / h`. Precision sums `C(s, t, |s|)` over all pairs
//! and divides by the number of predictions; recall sums `C(s, t, |t|)` and
//! divides by the number of gold fragments. Sums are pooled over the whole
//! corpus, not averaged per document. A prediction overlapping several gold
//! fragments may earn more than 1 in total; this is not clamped.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ensure_valid, Document, Fragment};
use crate::segmenter::{sentence_span, split_sentences};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold_count: usize,
    pub pred_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold_count: usize,
    pub pred_count: usize,
    /// Keyed by canonical label name.
    pub per_label: BTreeMap<String, LabelScore>,
    pub documents_scored: usize,
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn intersection(a: &Fragment, b: &Fragment) -> usize {
    a.end.min(b.end).saturating_sub(a.start.max(b.start))
}

/// Overlap credit of `s` against `t`, normalized by `h`.
pub fn overlap_credit(s: &Fragment, t: &Fragment, h: usize) -> f64 {
    if s.label != t.label || h == 0 {
        return 0.0;
    }
    intersection(s, t) as f64 / h as f64
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    precision_sum: f64,
    recall_sum: f64,
    pred: usize,
    gold: usize,
}

impl Tally {
    fn add(&mut self, other: &Tally) {
        self.precision_sum += other.precision_sum;
        self.recall_sum += other.recall_sum;
        self.pred += other.pred;
        self.gold += other.gold;
    }

    fn finish(&self) -> (f64, f64, f64) {
        let p = if self.pred == 0 {
            0.0
        } else {
            self.precision_sum / self.pred as f64
        };
        let r = if self.gold == 0 {
            0.0
        } else {
            self.recall_sum / self.gold as f64
        };
        (p, r, f1(p, r))
    }
}

fn tally_document(gold: &[Fragment], pred: &[Fragment]) -> BTreeMap<String, Tally> {
    let mut by_label: BTreeMap<String, (Vec<&Fragment>, Vec<&Fragment>)> = BTreeMap::new();
    for g in gold {
        by_label
            .entry(g.label.canonical_name().to_string())
            .or_default()
            .0
            .push(g);
    }
    for p in pred {
        by_label
            .entry(p.label.canonical_name().to_string())
            .or_default()
            .1
            .push(p);
    }
    by_label
        .into_iter()
        .map(|(name, (mut golds, mut preds))| {
            golds.sort();
            preds.sort();
            let mut t = Tally {
                gold: golds.len(),
                pred: preds.len(),
                ..Tally::default()
            };
            for s in &preds {
                for g in &golds {
                    let overlap = intersection(s, g);
                    if overlap > 0 {
                        t.precision_sum += overlap as f64 / s.len() as f64;
                        t.recall_sum += overlap as f64 / g.len() as f64;
                    }
                }
            }
            (name, t)
        })
        .collect()
}

/// Scores predictions against gold, matching documents by id.
///
/// Gold documents without a prediction count as predicting nothing; a
/// prediction for an id not in `gold` is an error. Prediction offsets are
/// validated against the gold text.
pub fn score(gold: &[Document], pred: &[Document]) -> Result<ScoreReport> {
    let mut gold_by_id: HashMap<&str, &Document> = HashMap::new();
    for doc in gold {
        ensure_valid(doc)?;
        if gold_by_id.insert(doc.id.as_str(), doc).is_some() {
            return Err(Error::DuplicateDocument(doc.id.clone()));
        }
    }
    let mut pred_by_id: HashMap<&str, &Document> = HashMap::new();
    for doc in pred {
        let Some(g) = gold_by_id.get(doc.id.as_str()) else {
            return Err(Error::UnknownDocument(doc.id.clone()));
        };
        ensure_valid(&Document::new(doc.id.clone(), g.text.clone(), doc.fragments.clone()))?;
        if pred_by_id.insert(doc.id.as_str(), doc).is_some() {
            return Err(Error::DuplicateDocument(doc.id.clone()));
        }
    }

    let mut ordered: Vec<&Document> = gold.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));
    let per_doc: Vec<BTreeMap<String, Tally>> = ordered
        .par_iter()
        .map(|g| {
            let preds = pred_by_id.get(g.id.as_str()).map_or(&[][..], |p| &p.fragments[..]);
            tally_document(&g.fragments, preds)
        })
        .collect();

    // Sequential reduction in id order keeps totals bit-identical.
    let mut total = Tally::default();
    let mut labels: BTreeMap<String, Tally> = BTreeMap::new();
    for doc in &per_doc {
        for (name, t) in doc {
            total.add(t);
            labels.entry(name.clone()).or_default().add(t);
        }
    }

    let (precision, recall, f1) = total.finish();
    let per_label = labels
        .into_iter()
        .map(|(name, t)| {
            let (precision, recall, f1) = t.finish();
            (
                name,
                LabelScore {
                    precision,
                    recall,
                    f1,
                    gold_count: t.gold,
                    pred_count: t.pred,
                },
            )
        })
        .collect();
    Ok(ScoreReport {
        precision,
        recall,
        f1,
        gold_count: total.gold,
        pred_count: total.pred,
        per_label,
        documents_scored: gold.len(),
    })
}

impl ScoreReport {
    /// `key=value` lines for scripts.
    pub fn to_key_values(&self) -> String {
        let mut out = format!(
            "precision={}\nrecall={}\nf1={}\ngold_count={}\npred_count={}\ndocuments_scored={}\n",
            self.precision, self.recall, self.f1, self.gold_count, self.pred_count, self.documents_scored
        );
        for (name, s) in &self.per_label {
            let key = name.replace(char::is_whitespace, "_");
            out.push_str(&format!(
                "label.{key}.precision={}\nlabel.{key}.recall={}\nlabel.{key}.f1={}\nlabel.{key}.gold_count={}\nlabel.{key}.pred_count={}\n",
                s.precision, s.recall, s.f1, s.gold_count, s.pred_count
            ));
        }
        out
    }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "F1={:.6} P={:.6} R={:.6} (gold={}, pred={}, documents={})",
            self.f1, self.precision, self.recall, self.gold_count, self.pred_count, self.documents_scored
        )?;
        let width = self
            .per_label
            .keys()
            .map(|k| k.chars().count())
            .max()
            .unwrap_or(5)
            .max(5);
        writeln!(
            f,
            "{:<width$}  {:>8}  {:>8}  {:>8}  {:>5}  {:>5}",
            "label", "P", "R", "F1", "gold", "pred"
        )?;
        for (name, s) in &self.per_label {
            writeln!(
                f,
                "{:<width$}  {:>8.4}  {:>8.4}  {:>8.4}  {:>5}  {:>5}",
                name, s.precision, s.recall, s.f1, s.gold_count, s.pred_count
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub span_count: usize,
    pub mean_words_per_fragment: f64,
    pub multisentence_fragment_count: usize,
    pub uppercase_ratio: f64,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "spans={}", self.span_count)?;
        writeln!(f, "words_per_fragment={:.1}", self.mean_words_per_fragment)?;
        writeln!(f, "multisentence_fragments={}", self.multisentence_fragment_count)?;
        writeln!(f, "uppercase_ratio={:.2}", self.uppercase_ratio)
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Fragment count, mean words per fragment, number of fragments spanning
/// more than one sentence and `upper / (upper + lower)` over fragment
/// letters.
pub fn corpus_stats(docs: &[Document]) -> CorpusStats {
    let mut spans = 0usize;
    let mut words = 0usize;
    let mut multi = 0usize;
    let (mut upper, mut lower) = (0usize, 0usize);
    for doc in docs {
        let sentences = split_sentences(&doc.text);
        for frag in &doc.fragments {
            let Some(surface) = doc.surface(frag) else { continue };
            spans += 1;
            words += word_count(surface);
            if sentence_span(&sentences, frag) > 1 {
                multi += 1;
            }
            for c in surface.chars() {
                if c.is_uppercase() {
                    upper += 1;
                } else if c.is_lowercase() {
                    lower += 1;
                }
            }
        }
    }
    CorpusStats {
        span_count: spans,
        mean_words_per_fragment: if spans == 0 { 0.0 } else { words as f64 / spans as f64 },
        multisentence_fragment_count: multi,
        uppercase_ratio: if upper + lower == 0 {
            0.0
        } else {
            upper as f64 / (upper + lower) as f64
        },
    }
}

/// Median fragment word count per label; even counts take the lower middle.
pub fn label_medians(docs: &[Document]) -> BTreeMap<String, usize> {
    let mut counts: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for doc in docs {
        for frag in &doc.fragments {
            if let Some(surface) = doc.surface(frag) {
                counts
                    .entry(frag.label.canonical_name().to_string())
                    .or_default()
                    .push(word_count(surface));
            }
        }
    }
    counts
        .into_iter()
        .map(|(name, mut c)| {
            c.sort_unstable();
            (name, c[(c.len() - 1) / 2])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Label;

    fn x() -> Label {
        Label::new("X").unwrap()
    }

    fn doc(id: &str, frags: &[(usize, usize)]) -> Document {
        Document::new(
            id,
            "0123456789abcdefghij",
            frags.iter().map(|&(s, e)| Fragment::new(s, e, x())).collect(),
        )
    }

    #[test]
    fn identity_scores_one() {
        let gold = [doc("a", &[(0, 5), (6, 9)]), doc("b", &[(10, 20)])];
        let r = score(&gold, &gold).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        assert_eq!(r.documents_scored, 2);
        assert_eq!(r.per_label["X"].f1, 1.0);
    }

    #[test]
    fn half_overlap() {
        let r = score(&[doc("a", &[(0, 10)])], &[doc("a", &[(0, 5)])]).unwrap();
        assert_eq!(r.precision, 1.0);
        assert_eq!(r.recall, 0.5);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn disjoint_and_mislabeled_score_zero() {
        let r = score(&[doc("a", &[(0, 5)])], &[doc("a", &[(5, 10)])]).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        let other = Document::new(
            "a",
            "0123456789abcdefghij",
            vec![Fragment::new(0, 5, Label::new("Y").unwrap())],
        );
        let r = score(&[doc("a", &[(0, 5)])], &[other]).unwrap();
        assert_eq!(r.f1, 0.0);
        assert_eq!(r.per_label.len(), 2);
    }

    #[test]
    fn missing_prediction_counts_as_empty() {
        let r = score(&[doc("a", &[(0, 5)]), doc("b", &[(0, 5)])], &[doc("a", &[(0, 5)])]).unwrap();
        assert_eq!(r.precision, 1.0);
        assert_eq!(r.recall, 0.5);
        let r = score(&[doc("a", &[(0, 5)])], &[]).unwrap();
        assert_eq!((r.precision, r.f1), (0.0, 0.0));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            score(&[doc("a", &[])], &[doc("zzz", &[])]),
            Err(Error::UnknownDocument(id)) if id == "zzz"
        ));
        assert!(score(&[doc("a", &[])], &[doc("a", &[(0, 50)])]).is_err());
        assert!(matches!(
            score(&[doc("a", &[]), doc("a", &[])], &[]),
            Err(Error::DuplicateDocument(_))
        ));
    }

    #[test]
    fn precision_credit_is_not_clamped() {
        // 10/10 + 9/10 against two nested golds.
        let r = score(&[doc("a", &[(0, 10), (0, 9)])], &[doc("a", &[(0, 10)])]).unwrap();
        assert!((r.precision - 1.9).abs() < 1e-12);
    }

    #[test]
    fn stats_small_cases() {
        let d = Document::new("d", "AB cd", vec![Fragment::new(0, 5, x())]);
        let s = corpus_stats(&[d]);
        assert_eq!(s.span_count, 1);
        assert_eq!(s.mean_words_per_fragment, 2.0);
        assert_eq!(s.uppercase_ratio, 0.5);
        assert_eq!(s.multisentence_fragment_count, 0);

        assert_eq!(corpus_stats(&[]), CorpusStats::default());

        let d = Document::new("d", "One two. Three four.", vec![Fragment::new(4, 14, x())]);
        assert_eq!(corpus_stats(&[d]).multisentence_fragment_count, 1);
    }

    #[test]
    fn medians() {
        let d = Document::new("d", "a b c d", vec![Fragment::new(0, 7, x())]);
        assert_eq!(label_medians(&[d])["X"], 4);
        let d = Document::new(
            "d",
            "a b c d",
            vec![
                Fragment::new(0, 1, x()),
                Fragment::new(0, 3, x()),
                Fragment::new(0, 5, x()),
                Fragment::new(0, 7, x()),
            ],
        );
        assert_eq!(label_medians(&[d])["X"], 2);
    }
}
