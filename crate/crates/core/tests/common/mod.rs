#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use markspan::model::slice_chars;
use markspan::{build_segments, split_sentences, Document, Fragment, Label, LabelRegistry, Sentence, TagSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MEME_TEXT: &str = "WHY DO THEY KEEP SAYING RELEASE THE CRACKHEAD?\nHUNTER ...";

pub const MEME_REGISTRY: &str = "\
# techniques in the worked example
Smears
Loaded Language
Name calling/Labeling\tNAME-CALLING
";

pub fn meme_registry() -> LabelRegistry {
    LabelRegistry::parse(MEME_REGISTRY).unwrap()
}

pub fn meme_doc(reg: &LabelRegistry) -> Document {
    let len = MEME_TEXT.chars().count();
    let start = MEME_TEXT.find("CRACKHEAD").unwrap(); // ASCII prefix
    let end = start + "CRACKHEAD".len();
    let l = reg.labels();
    Document::new(
        "meme",
        MEME_TEXT,
        vec![
            Fragment::new(0, len, l[0].clone()),
            Fragment::new(start, end, l[1].clone()),
            Fragment::new(start, end, l[2].clone()),
        ],
    )
}

pub fn numbered_registry(n: usize) -> LabelRegistry {
    let names: Vec<String> = (0..n).map(|i| format!("Technique {i}")).collect();
    LabelRegistry::from_names(&names).unwrap()
}

pub fn tagset(reg: &LabelRegistry) -> TagSet {
    TagSet::from_registry(reg).unwrap()
}

/// Same-label fragments that partially overlap without nesting.
pub fn same_label_crossing(a: &Fragment, b: &Fragment) -> bool {
    a.label == b.label
        && ((a.start < b.start && b.start < a.end && a.end < b.end)
            || (b.start < a.start && a.start < b.end && b.end < a.end))
}

/// Random document over `labels` with up to `max_fragments` fragments.
/// Spans are biased towards shared boundaries so nesting, coincidence and
/// crossing all occur. When `disjoint_same_label` is set, fragments with
/// the same label never overlap.
pub fn random_document(
    rng: &mut ChaCha8Rng,
    id: usize,
    labels: &[Label],
    max_fragments: usize,
    disjoint_same_label: bool,
) -> Document {
    const ALPHABET: &[char] = &['a', 'B', ' ', 'é', '字', '.', '\n', '<', '>', 'z'];
    let len = rng.gen_range(1..40);
    let text: String = (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect();
    let cuts: Vec<usize> = (0..4).map(|_| rng.gen_range(0..=len)).collect();
    let pick = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.5) {
            cuts[rng.gen_range(0..cuts.len())]
        } else {
            rng.gen_range(0..=len)
        }
    };
    let wanted = rng.gen_range(0..=max_fragments);
    let mut frags: Vec<Fragment> = Vec::new();
    let mut seen = BTreeSet::new();
    for _ in 0..wanted * 6 {
        if frags.len() == wanted {
            break;
        }
        let (a, b) = (pick(rng), pick(rng));
        if a == b {
            continue;
        }
        let f = Fragment::new(a.min(b), a.max(b), labels[rng.gen_range(0..labels.len())].clone());
        let clash = frags.iter().any(|g| {
            same_label_crossing(g, &f) || (disjoint_same_label && g.label == f.label && g.overlaps(f.start, f.end))
        });
        if !clash && seen.insert((f.start, f.end, f.label.clone())) {
            frags.push(f);
        }
    }
    Document::new(format!("doc{id:05}"), text, frags)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Textbook prefix-table edit distance.
pub fn wagner_fischer(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

pub fn random_string(rng: &mut ChaCha8Rng) -> Vec<char> {
    const SYMBOLS: [char; 4] = ['a', 'b', 'c', 'd'];
    let len = rng.gen_range(0..=12);
    (0..len).map(|_| SYMBOLS[rng.gen_range(0..4)]).collect()
}

pub fn random_article(r: &mut ChaCha8Rng, id: usize, reg: &LabelRegistry) -> Document {
    let mut text = String::new();
    for s in 0..r.gen_range(1..=15) {
        if s > 0 {
            text.push_str(["  ", " ", "\n", "\n\n"][r.gen_range(0..4)]);
        }
        for w in 0..r.gen_range(1..=6) {
            if w > 0 {
                text.push(' ');
            }
            let len = r.gen_range(1..=5);
            text.extend((0..len).map(|_| ['a', 'b', 'É', '字', ','][r.gen_range(0..5)]));
        }
        text.push(['.', '!', '?', ';'][r.gen_range(0..4)]);
    }
    let len = text.chars().count();
    let labels = reg.labels();
    let frags = (0..r.gen_range(0..=10))
        .map(|_| {
            let a = r.gen_range(0..len);
            let reach = r.gen_range(1..40);
            let b = r.gen_range(a + 1..=len.min(a + reach));
            Fragment::new(a, b, labels[r.gen_range(0..labels.len())].clone())
        })
        .collect();
    Document::new(format!("art{id:04}"), text, frags)
}

/// Connected components of the fragment/sentence overlap graph by BFS.
/// Returns (fragment indices, sentence indices) per component.
pub fn components(doc: &Document, sentences: &[Sentence]) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    let touches = |f: &Fragment, s: &Sentence| f.start < s.end && s.start < f.end;
    let n = doc.fragments.len();
    let mut seen = vec![false; n];
    let mut out = BTreeSet::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut frags = vec![root];
        let mut sents = BTreeSet::new();
        let mut queue = VecDeque::from([root]);
        while let Some(f) = queue.pop_front() {
            for (si, s) in sentences.iter().enumerate() {
                if touches(&doc.fragments[f], s) && sents.insert(si) {
                    for (g, frag) in doc.fragments.iter().enumerate() {
                        if !seen[g] && touches(frag, s) {
                            seen[g] = true;
                            frags.push(g);
                            queue.push_back(g);
                        }
                    }
                }
            }
        }
        frags.sort();
        out.insert((frags, sents.into_iter().collect()));
    }
    out
}

/// Checks `build_segments` on one article against [`components`]: same
/// fragment groups and sentence sets, no truncation, local slices equal to
/// the article slices.
pub fn check_segments(doc: &Document) -> Result<(), String> {
    let sentences = split_sentences(&doc.text);
    let segments = build_segments(doc);
    let mut used = vec![false; doc.fragments.len()];
    let mut got = BTreeSet::new();
    for seg in &segments {
        if Some(seg.text.as_str()) != slice_chars(&doc.text, seg.start, seg.end) {
            return Err(format!("{}: text is not the article slice", seg.id));
        }
        let mut frags = Vec::new();
        for lf in &seg.fragments {
            let global = Fragment::new(lf.start + seg.start, lf.end + seg.start, lf.label.clone());
            if global.end > seg.end || slice_chars(&seg.text, lf.start, lf.end).is_none() {
                return Err(format!("{}: fragment {lf:?} truncated", seg.id));
            }
            if slice_chars(&seg.text, lf.start, lf.end) != slice_chars(&doc.text, global.start, global.end) {
                return Err(format!("{}: local slice differs", seg.id));
            }
            let Some(k) = (0..doc.fragments.len()).find(|&k| !used[k] && doc.fragments[k] == global) else {
                return Err(format!("{}: fragment {global:?} not in article", seg.id));
            };
            used[k] = true;
            frags.push(global);
        }
        frags.sort();
        got.insert((frags, seg.sentence_range.clone().collect::<Vec<_>>()));
    }
    if used.iter().any(|u| !u) {
        return Err(format!("{}: a fragment is missing from every segment", doc.id));
    }
    let expected: BTreeSet<(Vec<Fragment>, Vec<usize>)> = components(doc, &sentences)
        .into_iter()
        .map(|(f, s)| {
            let mut frags: Vec<Fragment> = f.iter().map(|&k| doc.fragments[k].clone()).collect();
            frags.sort();
            (frags, s)
        })
        .collect();
    if got != expected {
        return Err(format!("{}: segments differ from overlap components", doc.id));
    }
    Ok(())
}
