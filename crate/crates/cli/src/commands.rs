use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use markspan::io::{self as mio, LabelResolver, MarkedRecord, UnknownLabels};
use markspan::protocol::{escape_line, read_lines};
use markspan::segmenter::build_pairs;
use markspan::sim::{recovery_trials, synthetic_corpus};
use markspan::{
    align_texts, build_segments, corpus_stats, decipher, encipher, export_pairs, label_medians, pair_events, reanchor,
    score, strip_tags, Document, Label, LabelRegistry, RepairCounts, RepairPolicy, Segment, TagSet,
};
use rayon::prelude::*;

use crate::args::*;

/// Exit status classes: usage problems exit 2, bad data exits 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) => f.write_str(m),
        }
    }
}

impl From<markspan::Error> for Failure {
    fn from(e: markspan::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn require_file(path: &Path) -> Result<&Path, Failure> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Failure::Usage(format!("{}: no such file", path.display())))
    }
}

fn require_path(path: &Path) -> Result<&Path, Failure> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Failure::Usage(format!("{}: no such file or directory", path.display())))
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(require_file(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, body: &str) -> Outcome {
    match output {
        Some(path) => std::fs::write(path, body).map_err(|e| Failure::Data(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Data(format!("standard output: {e}")))
        }
    }
}

pub struct Context {
    pub registry: Option<LabelRegistry>,
    pub unknown: UnknownLabels,
}

impl Context {
    pub fn load(cli: &Cli) -> Result<Self, Failure> {
        let registry = match &cli.registry {
            Some(path) => Some(LabelRegistry::load(require_file(path)?)?),
            None => None,
        };
        let unknown = match cli.unknown_labels {
            UnknownLabelsArg::Error => UnknownLabels::Error,
            UnknownLabelsArg::Skip => UnknownLabels::Skip,
        };
        Ok(Context { registry, unknown })
    }

    fn resolver(&self) -> LabelResolver<'_> {
        LabelResolver {
            registry: self.registry.as_ref(),
            unknown: self.unknown,
        }
    }

    fn require_registry(&self, command: &str) -> Result<&LabelRegistry, Failure> {
        self.registry
            .as_ref()
            .ok_or_else(|| Failure::Usage(format!("{command} needs --registry")))
    }

    fn tagset(&self, command: &str) -> Result<TagSet, Failure> {
        Ok(TagSet::from_registry(self.require_registry(command)?)?)
    }
}

fn sorted_by_id(mut docs: Vec<Document>) -> Result<Vec<Document>, Failure> {
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = docs.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(Failure::Data(format!("duplicate document id {:?}", w[0].id)));
    }
    Ok(docs)
}

fn read_docs(ctx: &Context, path: &Path) -> Result<Vec<Document>, Failure> {
    let (docs, report) = mio::read_memes(require_file(path)?, &ctx.resolver())?;
    report_skipped(&report.skipped_labels);
    sorted_by_id(docs)
}

fn read_corpus(ctx: &Context, input: Option<&Path>, ptc: &PtcArgs) -> Result<Vec<Document>, Failure> {
    match (input, &ptc.articles, &ptc.annotations) {
        (_, Some(articles), Some(annotations)) => {
            let (docs, report) = mio::read_ptc(require_path(articles)?, require_path(annotations)?, &ctx.resolver())?;
            report_skipped(&report.skipped_labels);
            sorted_by_id(docs)
        }
        (Some(input), _, _) => read_docs(ctx, input),
        _ => Err(Failure::Usage("give --input or --articles with --annotations".into())),
    }
}

fn report_skipped(skipped: &BTreeMap<String, usize>) {
    for (name, count) in skipped {
        eprintln!("warning: skipped {count} fragment(s) with unknown technique {name:?}");
    }
}

fn report_repairs(documents: usize, counts: &RepairCounts) {
    eprintln!(
        "{documents} document(s); repairs: dropped_opens={} dropped_closes={} synthesized_closes={} collapsed_spans={} duplicate_spans={}",
        counts.dropped_opens, counts.dropped_closes, counts.synthesized_closes, counts.collapsed_spans, counts.duplicate_spans
    );
}

pub fn encipher_cmd(ctx: &Context, args: &EncipherArgs) -> Outcome {
    let tagset = ctx.tagset("encipher")?;
    let docs = read_docs(ctx, &args.input)?;
    let records = docs
        .par_iter()
        .map(|doc| {
            encipher(doc, &tagset).map(|m| MarkedRecord {
                id: doc.id.clone(),
                marked: m.surface,
            })
        })
        .collect::<markspan::Result<Vec<_>>>()?;
    let body = match args.output_format {
        MarkedFormat::Jsonl => mio::render_marked(&records),
        MarkedFormat::Lines => records.iter().map(|r| escape_line(&r.marked) + "\n").collect(),
    };
    emit(args.output.as_deref(), &body)
}

pub fn decipher_cmd(ctx: &Context, args: &DecipherArgs) -> Outcome {
    let tagset = ctx.tagset("decipher")?;
    let source = read_text(&args.input)?;
    let originals: Option<Vec<Document>> = match &args.original {
        Some(path) => {
            // Only the texts matter here; labels in the file are ignored.
            let resolver = LabelResolver {
                registry: Some(ctx.require_registry("decipher")?),
                unknown: UnknownLabels::Skip,
            };
            let (docs, _) = mio::read_memes(require_file(path)?, &resolver)?;
            Some(sorted_by_id(docs)?)
        }
        None => None,
    };

    // (id, marked text or a reason it is unusable, original document)
    let mut jobs: Vec<(String, Result<String, String>, Option<&Document>)> = Vec::new();
    match args.input_format {
        MarkedFormat::Jsonl => {
            let by_id: BTreeMap<&str, &Document> = originals.iter().flatten().map(|d| (d.id.as_str(), d)).collect();
            let mut records = mio::parse_marked(&source, &args.input)?;
            records.sort_by(|a, b| a.id.cmp(&b.id));
            if let Some(w) = records.windows(2).find(|w| w[0].id == w[1].id) {
                return Err(Failure::Data(format!("duplicate document id {:?}", w[0].id)));
            }
            for rec in records {
                let original =
                    match &originals {
                        Some(_) => Some(*by_id.get(rec.id.as_str()).ok_or_else(|| {
                            Failure::Data(format!("document {:?} is not in the original file", rec.id))
                        })?),
                        None => None,
                    };
                jobs.push((rec.id, Ok(rec.marked), original));
            }
        }
        MarkedFormat::Lines => {
            let Some(originals) = &originals else {
                return Err(Failure::Usage("--input-format lines needs --original".into()));
            };
            let lines = read_lines(source.as_bytes()).map_err(|e| Failure::Data(e.to_string()))?;
            if lines.len() != originals.len() {
                return Err(Failure::Data(format!(
                    "{} line(s) for {} original document(s)",
                    lines.len(),
                    originals.len()
                )));
            }
            for (line, doc) in lines.into_iter().zip(originals) {
                jobs.push((doc.id.clone(), line.map_err(|e| e.to_string()), Some(doc)));
            }
        }
    }

    let policy: RepairPolicy = args.repair.into();
    let align = args.align.options();
    let results = jobs
        .par_iter()
        .map(
            |(id, marked, original)| -> markspan::Result<(Document, RepairCounts, Option<String>)> {
                let marked = match marked {
                    Ok(m) => m,
                    Err(reason) => {
                        let text = original.map(|d| d.text.clone()).unwrap_or_default();
                        let warning = format!("document {id:?}: {reason}; predicting no fragments");
                        return Ok((
                            Document::new(id.clone(), text, Vec::new()),
                            RepairCounts::default(),
                            Some(warning),
                        ));
                    }
                };
                match original {
                    Some(orig) => {
                        let (plain, events) = strip_tags(marked, &tagset);
                        let map = align_texts(&plain, &orig.text, align)?;
                        let anchored = reanchor(&events, &map);
                        let (fragments, log) = pair_events(&anchored, orig.char_len(), policy);
                        Ok((
                            Document::new(id.clone(), orig.text.clone(), fragments),
                            log.counts(),
                            None,
                        ))
                    }
                    None => {
                        let out = decipher(marked, &tagset, policy);
                        Ok((
                            Document::new(id.clone(), out.plain, out.fragments),
                            out.log.counts(),
                            None,
                        ))
                    }
                }
            },
        )
        .collect::<markspan::Result<Vec<_>>>()?;

    let mut totals = RepairCounts::default();
    let mut docs = Vec::with_capacity(results.len());
    for (doc, counts, warning) in results {
        if let Some(w) = warning {
            eprintln!("warning: {w}");
        }
        totals += counts;
        docs.push(doc);
    }
    report_repairs(docs.len(), &totals);
    emit(args.output.as_deref(), &mio::render_memes(&docs))
}

pub fn segment_cmd(ctx: &Context, args: &SegmentArgs) -> Outcome {
    let docs = read_corpus(ctx, args.input.as_deref(), &args.ptc)?;
    let per_doc: Vec<Vec<Segment>> = docs.par_iter().map(build_segments).collect();
    let segments: Vec<Segment> = per_doc.into_iter().flatten().collect();
    let fragments: usize = docs.iter().map(|d| d.fragments.len()).sum();
    eprintln!(
        "{} article(s), {fragments} fragment(s), {} segment(s)",
        docs.len(),
        segments.len()
    );
    emit(args.output.as_deref(), &mio::render_segments(&segments))
}

pub fn pairs_cmd(ctx: &Context, args: &PairsArgs) -> Outcome {
    let tagset = ctx.tagset("pairs")?;
    let train = args.train.config(args.stage.into());
    let gen = args.gen.config();
    train.validate()?;
    gen.validate()?;
    let segments = mio::read_segments(require_file(&args.input)?, &ctx.resolver())?;
    let out = &args.output;
    let manifest = export_pairs(&segments, &tagset, &train, args.seed, out)?;

    // Escaped source/target line files for the generator process.
    let records = build_pairs(&segments, &tagset, train.stage)?;
    for (name, ids) in [
        ("train", &manifest.train),
        ("dev", &manifest.dev),
        ("test", &manifest.test),
    ] {
        let ids: BTreeSet<&String> = ids.iter().collect();
        let (mut src, mut tgt) = (String::new(), String::new());
        for rec in records.iter().filter(|r| ids.contains(&r.doc_id)) {
            src.push_str(&escape_line(&rec.source));
            src.push('\n');
            tgt.push_str(&escape_line(&rec.target));
            tgt.push('\n');
        }
        write_in(out, &format!("{name}.source"), &src)?;
        write_in(out, &format!("{name}.target"), &tgt)?;
    }
    let config = serde_json::json!({ "seed": args.seed, "generation": gen, "training": train });
    let mut body = serde_json::to_string_pretty(&config).expect("config serializes");
    body.push('\n');
    write_in(out, "config.json", &body)?;
    write_in(out, "vocab.txt", &tagset.render_vocab())?;
    eprintln!(
        "{} segment(s); documents train={} dev={} test={}",
        segments.len(),
        manifest.train.len(),
        manifest.dev.len(),
        manifest.test.len()
    );
    Ok(())
}

fn write_in(dir: &Path, name: &str, body: &str) -> Outcome {
    let path: PathBuf = dir.join(name);
    std::fs::write(&path, body).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

pub fn score_cmd(ctx: &Context, args: &ScoreArgs) -> Outcome {
    require_file(&args.gold)?;
    require_file(&args.pred)?;
    let gold = read_docs(ctx, &args.gold)?;
    let pred = read_docs(ctx, &args.pred)?;
    let report = score(&gold, &pred)?;
    let body = match args.format {
        ReportFormat::Text => report.to_string(),
        ReportFormat::Kv => report.to_key_values(),
        ReportFormat::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    };
    emit(args.output.as_deref(), &body)
}

pub fn stats_cmd(ctx: &Context, args: &StatsArgs) -> Outcome {
    let docs = read_corpus(ctx, args.input.as_deref(), &args.ptc)?;
    let stats = corpus_stats(&docs);
    let medians = args.medians.then(|| label_medians(&docs));
    let body = match args.format {
        ReportFormat::Text | ReportFormat::Kv => {
            let mut s = stats.to_string();
            for (name, m) in medians.iter().flatten() {
                s.push_str(&format!(
                    "median_words.{}={m}\n",
                    name.replace(char::is_whitespace, "_")
                ));
            }
            s
        }
        ReportFormat::Json => {
            let mut v = serde_json::to_value(stats).expect("stats serialize");
            if let Some(m) = &medians {
                v["median_words"] = serde_json::to_value(m).expect("medians serialize");
            }
            serde_json::to_string_pretty(&v).expect("stats serialize") + "\n"
        }
    };
    emit(args.output.as_deref(), &body)
}

pub fn simulate_cmd(ctx: &Context, args: &SimulateArgs) -> Outcome {
    let (docs, tagset) = match &args.input {
        Some(path) => {
            let docs = read_docs(ctx, path)?;
            let tagset = match &ctx.registry {
                Some(reg) => TagSet::from_registry(reg)?,
                None => {
                    let labels: BTreeSet<Label> = docs
                        .iter()
                        .flat_map(|d| d.fragments.iter().map(|f| f.label.clone()))
                        .collect();
                    if labels.is_empty() {
                        return Err(Failure::Data("no fragments to simulate".into()));
                    }
                    markspan::build_tagset(&labels.into_iter().collect::<Vec<_>>())?
                }
            };
            (docs, tagset)
        }
        None => {
            let reg = ctx.require_registry("simulate without --input")?;
            (
                synthetic_corpus(args.docs, reg.labels(), args.seed),
                TagSet::from_registry(reg)?,
            )
        }
    };
    let base = args.noise.config(args.seed);
    let levels = if args.tag_drop_levels.is_empty() {
        vec![base.tag_drop_rate]
    } else {
        args.tag_drop_levels.clone()
    };
    let mut body = String::new();
    for rate in levels {
        let cfg = markspan::NoiseConfig {
            tag_drop_rate: rate,
            ..base
        };
        let report = recovery_trials(
            &docs,
            &tagset,
            &cfg,
            args.trials,
            args.repair.into(),
            args.align.options(),
        )?;
        body.push_str(&report.to_json_line());
        body.push('\n');
    }
    emit(args.output.as_deref(), &body)
}

pub fn vocab_cmd(ctx: &Context, args: &VocabArgs) -> Outcome {
    emit(args.output.as_deref(), &ctx.tagset("vocab")?.render_vocab())
}
