//! A seeded model of generation errors, for measuring how well decoding and
//! re-anchoring recover fragments without a trained model.
//!
//! Character noise (substitution, deletion, insertion, case flips) touches
//! only the plain text. Tags are kept atomic: each one is emitted whole,
//! dropped, duplicated or displaced, never cut.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{align_texts, reanchor, AlignOptions};
use crate::codec::{encipher, pair_events, strip_tags, MarkedText, RepairCounts, RepairPolicy};
use crate::error::{Error, Result};
use crate::metrics::score;
use crate::model::{Document, Fragment, Label};
use crate::tagset::TagSet;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub char_sub_rate: f64,
    pub char_del_rate: f64,
    pub char_ins_rate: f64,
    pub tag_drop_rate: f64,
    pub tag_dup_rate: f64,
    /// Maximum displacement of a tag, in characters.
    pub tag_jitter: usize,
    pub case_scramble: bool,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("char_sub_rate", self.char_sub_rate),
            ("char_del_rate", self.char_del_rate),
            ("char_ins_rate", self.char_ins_rate),
            ("tag_drop_rate", self.tag_drop_rate),
            ("tag_dup_rate", self.tag_dup_rate),
        ];
        for (name, r) in rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidConfig(format!("{name} = {r} is not in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        NoiseConfig { seed, ..self }
    }
}

/// SplitMix64 finalizer over `master + counter * golden`, giving
/// independent streams for documents and trials.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    let mut z = master.wrapping_add(counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

fn random_letter(rng: &mut ChaCha8Rng, upper: bool) -> char {
    let c = LETTERS[rng.gen_range(0..LETTERS.len())] as char;
    if upper {
        c.to_ascii_uppercase()
    } else {
        c
    }
}

fn flip_case(c: char) -> char {
    if c.is_uppercase() {
        c.to_lowercase().next().unwrap_or(c)
    } else {
        c.to_uppercase().next().unwrap_or(c)
    }
}

fn chance(rng: &mut ChaCha8Rng, p: f64) -> bool {
    p > 0.0 && rng.gen_bool(p.min(1.0))
}

/// Applies `cfg` to marked text and returns the noisy surface string.
pub fn perturb(marked: &MarkedText, cfg: &NoiseConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let plain: Vec<char> = marked.plain.chars().collect();
    let n = plain.len();

    let mut noisy: Vec<char> = Vec::with_capacity(n + n / 8);
    // Position in `noisy` of the boundary before original character k.
    let mut boundary = vec![0usize; n + 1];
    for k in 0..=n {
        boundary[k] = noisy.len();
        if chance(&mut rng, cfg.char_ins_rate) {
            let upper = k < n && plain[k].is_uppercase();
            noisy.push(random_letter(&mut rng, upper));
        }
        if k == n || chance(&mut rng, cfg.char_del_rate) {
            continue;
        }
        let mut c = plain[k];
        if chance(&mut rng, cfg.char_sub_rate) {
            let replacement = loop {
                let r = random_letter(&mut rng, c.is_uppercase());
                if r != c {
                    break r;
                }
            };
            c = replacement;
        }
        if cfg.case_scramble && (c.is_uppercase() || c.is_lowercase()) && rng.gen_bool(0.5) {
            c = flip_case(c);
        }
        noisy.push(c);
    }

    let mut placed: Vec<(usize, usize, &str)> = Vec::with_capacity(marked.events.len());
    for ev in &marked.events {
        if chance(&mut rng, cfg.tag_drop_rate) {
            continue;
        }
        let copies = 1 + usize::from(chance(&mut rng, cfg.tag_dup_rate));
        for _ in 0..copies {
            let mut offset = ev.plain_offset.min(n);
            if cfg.tag_jitter > 0 {
                let j = cfg.tag_jitter as i64;
                let shifted = offset as i64 + rng.gen_range(-j..=j);
                offset = shifted.clamp(0, n as i64) as usize;
            }
            placed.push((boundary[offset], placed.len(), ev.token.surface.as_str()));
        }
    }
    placed.sort_unstable();

    let mut out = String::with_capacity(marked.surface.len() + 16);
    let mut tags = placed.iter().peekable();
    for (pos, c) in noisy.iter().enumerate() {
        while let Some((_, _, surface)) = tags.next_if(|t| t.0 == pos) {
            out.push_str(surface);
        }
        out.push(*c);
    }
    for (_, _, surface) in tags {
        out.push_str(surface);
    }
    out
}

/// Outcome of pushing a corpus through the simulated channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub noise: NoiseConfig,
    pub repair_policy: String,
    pub trials: usize,
    pub documents: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub repairs: RepairCounts,
    /// Mean of `(|Δstart| + |Δend|) / 2` between each prediction and its
    /// best-overlapping gold fragment of the same label.
    pub mean_displacement: f64,
}

impl RecoveryReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Predicted fragments for one document after the full
/// encipher → perturb → strip → align → re-anchor → pair path.
pub fn recover_document(
    doc: &Document,
    tagset: &TagSet,
    cfg: &NoiseConfig,
    policy: RepairPolicy,
    align: AlignOptions,
) -> Result<(Document, RepairCounts)> {
    let marked = encipher(doc, tagset)?;
    let noisy = perturb(&marked, cfg);
    let (gen_plain, events) = strip_tags(&noisy, tagset);
    let map = align_texts(&gen_plain, &doc.text, align)?;
    let anchored = reanchor(&events, &map);
    let (fragments, log) = pair_events(&anchored, doc.char_len(), policy);
    Ok((Document::new(doc.id.clone(), doc.text.clone(), fragments), log.counts()))
}

fn displacement(gold: &[Fragment], pred: &[Fragment]) -> (f64, usize) {
    let mut total = 0.0;
    let mut counted = 0;
    for p in pred {
        let best = gold
            .iter()
            .filter(|g| g.label == p.label)
            .map(|g| (g.end.min(p.end).saturating_sub(g.start.max(p.start)), g))
            .filter(|(overlap, _)| *overlap > 0)
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(a.1)));
        if let Some((_, g)) = best {
            total += (g.start.abs_diff(p.start) + g.end.abs_diff(p.end)) as f64 / 2.0;
            counted += 1;
        }
    }
    (total, counted)
}

/// Runs one trial over `docs`. Document `i` uses the seed
/// `derive_seed(cfg.seed, i)`.
pub fn recovery_trial(
    docs: &[Document],
    tagset: &TagSet,
    cfg: &NoiseConfig,
    policy: RepairPolicy,
    align: AlignOptions,
) -> Result<RecoveryReport> {
    cfg.validate()?;
    let outcomes: Vec<(Document, RepairCounts)> = docs
        .par_iter()
        .enumerate()
        .map(|(i, doc)| {
            let doc_cfg = cfg.with_seed(derive_seed(cfg.seed, i as u64));
            recover_document(doc, tagset, &doc_cfg, policy, align)
        })
        .collect::<Result<_>>()?;

    let mut repairs = RepairCounts::default();
    let (mut disp_total, mut disp_count) = (0.0, 0usize);
    let mut preds = Vec::with_capacity(outcomes.len());
    for (gold, (pred, counts)) in docs.iter().zip(outcomes) {
        repairs += counts;
        let (t, c) = displacement(&gold.fragments, &pred.fragments);
        disp_total += t;
        disp_count += c;
        preds.push(pred);
    }
    let report = score(docs, &preds)?;
    Ok(RecoveryReport {
        noise: *cfg,
        repair_policy: policy.to_string(),
        trials: 1,
        documents: docs.len(),
        precision: report.precision,
        recall: report.recall,
        f1: report.f1,
        repairs,
        mean_displacement: if disp_count == 0 {
            0.0
        } else {
            disp_total / disp_count as f64
        },
    })
}

/// Repeats [`recovery_trial`] `trials` times with seeds
/// `derive_seed(cfg.seed, t)` and averages P, R, F1 and displacement.
/// Repair counts are summed.
pub fn recovery_trials(
    docs: &[Document],
    tagset: &TagSet,
    cfg: &NoiseConfig,
    trials: usize,
    policy: RepairPolicy,
    align: AlignOptions,
) -> Result<RecoveryReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    let runs = (0..trials)
        .map(|t| {
            recovery_trial(
                docs,
                tagset,
                &cfg.with_seed(derive_seed(cfg.seed, t as u64)),
                policy,
                align,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = |f: fn(&RecoveryReport) -> f64| runs.iter().map(f).sum::<f64>() / trials as f64;
    let mut repairs = RepairCounts::default();
    for r in &runs {
        repairs += r.repairs;
    }
    Ok(RecoveryReport {
        noise: *cfg,
        repair_policy: policy.to_string(),
        trials,
        documents: docs.len(),
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        f1: mean(|r| r.f1),
        repairs,
        mean_displacement: mean(|r| r.mean_displacement),
    })
}

const WORDS: &[&str] = &[
    "they",
    "keep",
    "saying",
    "release",
    "the",
    "truth",
    "people",
    "never",
    "wanted",
    "this",
    "crooked",
    "liar",
    "media",
    "always",
    "lies",
    "about",
    "everything",
    "our",
    "great",
    "nation",
    "will",
    "win",
    "again",
    "fake",
    "news",
    "corrupt",
    "elite",
    "stop",
    "them",
    "now",
    "freedom",
    "hunter",
    "why",
    "do",
];

/// Random documents with word-aligned fragments over `labels`. Fragments of
/// different labels nest, cross and coincide freely; fragments sharing a
/// label never overlap, so a perfect prediction scores exactly 1.
pub fn synthetic_corpus(docs: usize, labels: &[Label], seed: u64) -> Vec<Document> {
    assert!(!labels.is_empty(), "synthetic corpus needs at least one label");
    (0..docs)
        .map(|d| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, d as u64));
            let upper = rng.gen_bool(0.5);
            let mut text = String::new();
            let mut words: Vec<(usize, usize)> = Vec::new();
            let sentences = rng.gen_range(1..=3);
            for s in 0..sentences {
                if s > 0 {
                    text.push_str(if rng.gen_bool(0.5) { "\n" } else { " " });
                }
                let count = rng.gen_range(3..=9);
                for w in 0..count {
                    if w > 0 {
                        text.push(' ');
                    }
                    let start = text.chars().count();
                    let word = WORDS[rng.gen_range(0..WORDS.len())];
                    if upper {
                        text.push_str(&word.to_uppercase());
                    } else {
                        text.push_str(word);
                    }
                    words.push((start, start + word.len()));
                }
                text.push(['.', '!', '?'][rng.gen_range(0..3)]);
            }

            let mut fragments: Vec<Fragment> = Vec::new();
            let wanted = rng.gen_range(1..=4);
            let mut attempts = 0;
            while fragments.len() < wanted && attempts < 50 {
                attempts += 1;
                let a = rng.gen_range(0..words.len());
                let b = rng.gen_range(a..words.len().min(a + 8));
                let label = labels[rng.gen_range(0..labels.len())].clone();
                let f = Fragment::new(words[a].0, words[b].1, label);
                let clashes = fragments
                    .iter()
                    .any(|g| g.label == f.label && g.overlaps(f.start, f.end));
                if !clashes {
                    fragments.push(f);
                }
            }
            fragments.sort();
            Document::new(format!("syn{d:05}"), text, fragments)
        })
        .collect()
}
