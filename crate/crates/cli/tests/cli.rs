use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use markspan::GenConfig;
use serde_json::Value;

const REGISTRY: &str = "Smears\nLoaded Language\nName calling/Labeling\tNAME-CALLING\n";

const MEMES: &str = r#"[
  {"id": "m2", "text": "WHY DO THEY KEEP SAYING RELEASE THE CRACKHEAD?\nHUNTER ...", "labels": [
    {"start": 0, "end": 57, "technique": "Smears"},
    {"start": 36, "end": 45, "technique": "Loaded Language"},
    {"start": 36, "end": 45, "technique": "Name calling/Labeling"}]},
  {"id": "m1", "text": "nothing to see here", "labels": []}
]"#;

fn markspan(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_markspan"));
    for (key, _) in std::env::vars() {
        if key.starts_with("MARKSPAN_") {
            cmd.env_remove(key);
        }
    }
    cmd.current_dir(dir).args(args).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("registry.txt"), REGISTRY).unwrap();
    std::fs::write(dir.path().join("memes.json"), MEMES).unwrap();
    dir
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn score_identical_files_is_perfect() {
    let dir = workspace();
    let out = ok(&markspan(
        dir.path(),
        &["score", "--gold", "memes.json", "--pred", "memes.json"],
    ));
    assert!(out.starts_with("F1=1.000000 P=1.000000 R=1.000000"), "{out}");
    let kv = ok(&markspan(
        dir.path(),
        &[
            "score",
            "--gold",
            "memes.json",
            "--pred",
            "memes.json",
            "--format",
            "kv",
        ],
    ));
    assert!(kv.contains("precision=1\nrecall=1\nf1=1\n"), "{kv}");
}

#[test]
fn encipher_then_decipher_round_trips() {
    let dir = workspace();
    let p = dir.path();
    ok(&markspan(
        p,
        &[
            "--registry",
            "registry.txt",
            "encipher",
            "--input",
            "memes.json",
            "--output",
            "marked.jsonl",
        ],
    ));
    let marked = read(p.join("marked.jsonl"));
    let first: Value = serde_json::from_str(marked.lines().next().unwrap()).unwrap();
    assert_eq!(first["id"], "m1");
    let second: Value = serde_json::from_str(marked.lines().nth(1).unwrap()).unwrap();
    assert_eq!(
        second["marked"],
        "<SMEARS>WHY DO THEY KEEP SAYING RELEASE THE <LOADED-LANGUAGE><NAME-CALLING>CRACKHEAD</NAME-CALLING></LOADED-LANGUAGE>?\nHUNTER ...</SMEARS>"
    );

    ok(&markspan(
        p,
        &[
            "--registry",
            "registry.txt",
            "decipher",
            "--input",
            "marked.jsonl",
            "--output",
            "pred.json",
        ],
    ));
    let score = ok(&markspan(
        p,
        &["score", "--gold", "memes.json", "--pred", "pred.json", "--format", "kv"],
    ));
    assert!(score.starts_with("precision=1\nrecall=1\nf1=1\n"), "{score}");
}

#[test]
fn line_protocol_with_reanchoring() {
    let dir = workspace();
    let p = dir.path();
    ok(&markspan(
        p,
        &[
            "--registry",
            "registry.txt",
            "encipher",
            "--input",
            "memes.json",
            "--output-format",
            "lines",
            "--output",
            "src.txt",
        ],
    ));
    let lines = read(p.join("src.txt"));
    assert_eq!(lines.lines().count(), 2);
    assert!(lines.contains("?\\nHUNTER"));

    // A generator that lowercased one word and failed on the other line.
    let generated = "\\error\n<SMEARS>WHY DO THEY KEEP SAYING release THE <LOADED-LANGUAGE><NAME-CALLING>CRACKHEAD</NAME-CALLING></LOADED-LANGUAGE>?\\nHUNTER ...</SMEARS>\n";
    std::fs::write(p.join("gen.txt"), generated).unwrap();
    let out = markspan(
        p,
        &[
            "--registry",
            "registry.txt",
            "decipher",
            "--input",
            "gen.txt",
            "--input-format",
            "lines",
            "--original",
            "memes.json",
            "--output",
            "pred.json",
        ],
    );
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: document \"m1\""));
    let score = ok(&markspan(
        p,
        &["score", "--gold", "memes.json", "--pred", "pred.json", "--format", "kv"],
    ));
    assert!(score.starts_with("precision=1\nrecall=1\nf1=1\n"), "{score}");
}

#[test]
fn decipher_tagless_input_predicts_nothing() {
    let dir = workspace();
    let p = dir.path();
    std::fs::write(p.join("plain.jsonl"), "{\"id\": \"a\", \"marked\": \"no tags here\"}\n").unwrap();
    let out = ok(&markspan(
        p,
        &["--registry", "registry.txt", "decipher", "--input", "plain.jsonl"],
    ));
    let docs: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(docs[0]["text"], "no tags here");
    assert_eq!(docs[0]["labels"], Value::Array(vec![]));
}

fn write_ptc(dir: &Path) {
    let articles = dir.join("articles");
    std::fs::create_dir_all(&articles).unwrap();
    let mut labels = String::new();
    for i in 0..10 {
        let id = 700 + i;
        let text = format!("First sentence of article {i}. The crooked elite lies again!\nA quiet closing line.\n");
        std::fs::write(articles.join(format!("article{id}.txt")), &text).unwrap();
        let start = text.find("crooked").unwrap();
        labels.push_str(&format!("{id}\tLoaded_Language\t{start}\t{}\n", start + 7));
        labels.push_str(&format!(
            "{id}\tSmears\t{}\t{}\n",
            start - 4,
            text.find("line").unwrap()
        ));
    }
    std::fs::write(dir.join("labels.tsv"), labels).unwrap();
}

#[test]
fn segment_then_pairs_splits_seven_two_one() {
    let dir = workspace();
    let p = dir.path();
    write_ptc(p);
    let common = ["--registry", "registry.txt"];
    ok(&markspan(
        p,
        &[
            &common[..],
            &[
                "segment",
                "--articles",
                "articles",
                "--annotations",
                "labels.tsv",
                "--output",
                "seg.json",
            ],
        ]
        .concat(),
    ));
    let segs: Value = serde_json::from_str(&read(p.join("seg.json"))).unwrap();
    assert_eq!(segs.as_array().unwrap().len(), 10);
    assert_eq!(segs[0]["doc_id"], "700");
    // The untouched first sentence is left out.
    assert_eq!(segs[0]["offset"], "First sentence of article 0. ".len());

    ok(&markspan(
        p,
        &[
            &common[..],
            &["pairs", "--input", "seg.json", "--output", "out", "--seed", "3"],
        ]
        .concat(),
    ));
    let manifest: Value = serde_json::from_str(&read(p.join("out/manifest.json"))).unwrap();
    let sizes: Vec<usize> = ["train", "dev", "test"]
        .iter()
        .map(|k| manifest[k].as_array().unwrap().len())
        .collect();
    assert_eq!(sizes, [7, 2, 1]);
    assert_eq!(read(p.join("out/train.source")).lines().count(), 7);
    assert_eq!(read(p.join("out/test.target")).lines().count(), 1);
    assert_eq!(read(p.join("out/vocab.txt")).lines().count(), 6);

    let config: Value = serde_json::from_str(&read(p.join("out/config.json"))).unwrap();
    let gen: GenConfig = serde_json::from_value(config["generation"].clone()).unwrap();
    assert_eq!(gen, GenConfig::default());
    assert_eq!(config["training"]["split_ratios"], serde_json::json!([0.7, 0.2, 0.1]));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = workspace();
    let p = dir.path();
    write_ptc(p);
    let runs: Vec<Vec<String>> = (0..2)
        .map(|n| {
            let out = format!("run{n}");
            let jobs = if n == 0 { "1" } else { "4" };
            ok(&markspan(
                p,
                &[
                    "--registry",
                    "registry.txt",
                    "--jobs",
                    jobs,
                    "segment",
                    "--articles",
                    "articles",
                    "--annotations",
                    "labels.tsv",
                    "--output",
                    &format!("{out}.json"),
                ],
            ));
            ok(&markspan(
                p,
                &[
                    "--registry",
                    "registry.txt",
                    "pairs",
                    "--input",
                    &format!("{out}.json"),
                    "--output",
                    &out,
                    "--seed",
                    "5",
                ],
            ));
            let sim = ok(&markspan(
                p,
                &[
                    "--registry",
                    "registry.txt",
                    "--jobs",
                    jobs,
                    "simulate",
                    "--seed",
                    "9",
                    "--docs",
                    "30",
                    "--char-sub-rate",
                    "0.05",
                    "--tag-drop-levels",
                    "0,0.5",
                    "--trials",
                    "3",
                ],
            ));
            let mut files = vec![read(p.join(format!("{out}.json"))), sim];
            for f in [
                "train.jsonl",
                "dev.jsonl",
                "test.jsonl",
                "manifest.json",
                "config.json",
                "train.source",
            ] {
                files.push(read(p.join(&out).join(f)));
            }
            files
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0][1].lines().count(), 2);
}

#[test]
fn simulate_reports_recovery() {
    let dir = workspace();
    let out = ok(&markspan(
        dir.path(),
        &["--registry", "registry.txt", "simulate", "--seed", "1", "--docs", "20"],
    ));
    let report: Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(report["f1"], 1.0);
    assert_eq!(report["documents"], 20);

    let out = markspan(dir.path(), &["--registry", "registry.txt", "simulate", "--docs", "20"]);
    assert_eq!(out.status.code(), Some(2), "a seed is mandatory");
}

#[test]
fn seed_can_come_from_the_environment() {
    let dir = workspace();
    let out = Command::new(env!("CARGO_BIN_EXE_markspan"))
        .current_dir(dir.path())
        .env("MARKSPAN_SEED", "4")
        .env("MARKSPAN_REGISTRY", "registry.txt")
        .args(["simulate", "--docs", "5"])
        .output()
        .unwrap();
    ok(&out);
}

#[test]
fn stats_and_vocab() {
    let dir = workspace();
    let p = dir.path();
    let stats = ok(&markspan(p, &["stats", "--input", "memes.json", "--medians"]));
    assert!(stats.starts_with("spans=3\n"), "{stats}");
    assert!(stats.contains("multisentence_fragments=1\n"));
    assert!(stats.contains("median_words.Smears=10\n"), "{stats}");
    let vocab = ok(&markspan(p, &["--registry", "registry.txt", "vocab"]));
    assert_eq!(
        vocab,
        "<SMEARS>\n</SMEARS>\n<LOADED-LANGUAGE>\n</LOADED-LANGUAGE>\n<NAME-CALLING>\n</NAME-CALLING>\n"
    );
}

#[test]
fn help_lists_generation_defaults() {
    let dir = workspace();
    let help = ok(&markspan(dir.path(), &["pairs", "--help"]));
    for expected in [
        "[default: 200]",
        "[default: 0.4]",
        "[default: 2.0]",
        "[default: 3]",
        "[default: 0.8]",
        "[default: true]",
        "[default: 0.7,0.2,0.1]",
    ] {
        assert!(help.contains(expected), "missing {expected}");
    }
    let help = ok(&markspan(dir.path(), &["decipher", "--help"]));
    assert!(help.contains("[default: drop]") && help.contains("[default: auto]") && help.contains("[default: on]"));
}

#[test]
fn exit_codes() {
    let dir = workspace();
    let p = dir.path();
    // Missing file: usage error.
    let out = markspan(p, &["score", "--gold", "missing.json", "--pred", "memes.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    // Unknown flag value: usage error.
    let out = markspan(
        p,
        &[
            "--registry",
            "registry.txt",
            "decipher",
            "--input",
            "memes.json",
            "--repair",
            "maybe",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    // Registry missing for a command that needs it.
    assert_eq!(markspan(p, &["vocab"]).status.code(), Some(2));

    // Fragment past the end of its text: data error.
    std::fs::write(
        p.join("bad.json"),
        r#"[{"id": "x", "text": "abc", "labels": [{"start": 0, "end": 9, "technique": "Smears"}]}]"#,
    )
    .unwrap();
    let out = markspan(p, &["score", "--gold", "bad.json", "--pred", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset-out-of-range"));

    // Prediction for a document that is not in gold: data error.
    std::fs::write(p.join("other.json"), r#"[{"id": "zzz", "text": "abc", "labels": []}]"#).unwrap();
    let out = markspan(p, &["score", "--gold", "memes.json", "--pred", "other.json"]);
    assert_eq!(out.status.code(), Some(1));

    // Technique outside the registry.
    std::fs::write(
        p.join("doubt.json"),
        r#"[{"id": "d", "text": "abc", "labels": [{"start": 0, "end": 2, "technique": "Doubt"}]}]"#,
    )
    .unwrap();
    let strict = markspan(p, &["--registry", "registry.txt", "encipher", "--input", "doubt.json"]);
    assert_eq!(strict.status.code(), Some(1));
    let skip = markspan(
        p,
        &[
            "--registry",
            "registry.txt",
            "--unknown-labels",
            "skip",
            "encipher",
            "--input",
            "doubt.json",
        ],
    );
    assert_eq!(ok(&skip), "{\"id\":\"d\",\"marked\":\"abc\"}\n");
}
