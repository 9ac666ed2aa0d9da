use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use markspan::{Band, GenConfig, NoiseConfig, RepairPolicy, TrainConfig, TrainStage};

#[derive(Debug, Parser)]
#[command(name = "markspan", version, about = "Span detection through inline markup")]
pub struct Cli {
    /// Label registry: one technique name per line, optional tab-separated
    /// tag stem.
    #[arg(long, global = true, env = "MARKSPAN_REGISTRY")]
    pub registry: Option<PathBuf>,

    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "MARKSPAN_JOBS", default_value_t = 0)]
    pub jobs: usize,

    /// What to do with technique names missing from the registry.
    #[arg(long, global = true, env = "MARKSPAN_UNKNOWN_LABELS", value_enum, default_value_t = UnknownLabelsArg::Error)]
    pub unknown_labels: UnknownLabelsArg,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write each document's fragments inline as tags.
    Encipher(EncipherArgs),
    /// Recover fragments from tagged text.
    Decipher(DecipherArgs),
    /// Cut articles into fragment-bearing segments.
    Segment(SegmentArgs),
    /// Export seeded train/dev/test pairs for the generator.
    Pairs(PairsArgs),
    /// Score predictions against gold fragments.
    Score(ScoreArgs),
    /// Corpus statistics over gold fragments.
    Stats(StatsArgs),
    /// Measure fragment recovery through a seeded noise channel.
    Simulate(SimulateArgs),
    /// Print the tag vocabulary, one tag per line.
    Vocab(VocabArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnknownLabelsArg {
    Error,
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MarkedFormat {
    /// One JSON object `{"id", "marked"}` per line.
    Jsonl,
    /// One escaped marked text per line, in document id order.
    Lines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Kv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RepairArg {
    Drop,
    CloseAtEnd,
}

impl From<RepairArg> for RepairPolicy {
    fn from(r: RepairArg) -> Self {
        match r {
            RepairArg::Drop => RepairPolicy::Drop,
            RepairArg::CloseAtEnd => RepairPolicy::CloseAtEnd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StageArg {
    PretrainPtc,
    FinetuneMemes,
}

impl From<StageArg> for TrainStage {
    fn from(s: StageArg) -> Self {
        match s {
            StageArg::PretrainPtc => TrainStage::PretrainPtc,
            StageArg::FinetuneMemes => TrainStage::FinetuneMemes,
        }
    }
}

/// Alignment settings used when re-anchoring generated text.
#[derive(Debug, Clone, Args)]
pub struct AlignArgs {
    /// Alignment band: auto, unlimited or a width in characters.
    #[arg(long, env = "MARKSPAN_BAND_WIDTH", default_value = "auto", value_parser = parse_band)]
    pub band_width: Band,

    /// Compare characters case-insensitively.
    #[arg(long, env = "MARKSPAN_CASE_FOLD", value_enum, default_value_t = Switch::On)]
    pub case_fold: Switch,
}

impl AlignArgs {
    pub fn options(&self) -> markspan::AlignOptions {
        markspan::AlignOptions {
            band: self.band_width,
            case_fold: self.case_fold == Switch::On,
        }
    }
}

fn parse_band(s: &str) -> Result<Band, String> {
    s.parse().map_err(|e: markspan::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct EncipherArgs {
    /// Documents or segments in the memes JSON layout.
    #[arg(long, env = "MARKSPAN_INPUT")]
    pub input: PathBuf,

    /// Output file; standard output when absent.
    #[arg(long, env = "MARKSPAN_OUTPUT")]
    pub output: Option<PathBuf>,

    #[arg(long, env = "MARKSPAN_OUTPUT_FORMAT", value_enum, default_value_t = MarkedFormat::Jsonl)]
    pub output_format: MarkedFormat,
}

#[derive(Debug, Args)]
pub struct DecipherArgs {
    /// Marked text, as written by `encipher` or returned by a generator.
    #[arg(long, env = "MARKSPAN_INPUT")]
    pub input: PathBuf,

    #[arg(long, env = "MARKSPAN_INPUT_FORMAT", value_enum, default_value_t = MarkedFormat::Jsonl)]
    pub input_format: MarkedFormat,

    /// Original documents. When given, tags are re-anchored onto the
    /// original texts; required for `lines` input, whose line i belongs
    /// to the i-th document in id order.
    #[arg(long, env = "MARKSPAN_ORIGINAL")]
    pub original: Option<PathBuf>,

    /// Predictions in the memes JSON layout; standard output when absent.
    #[arg(long, env = "MARKSPAN_OUTPUT")]
    pub output: Option<PathBuf>,

    /// Handling of unmatched opening tags.
    #[arg(long, env = "MARKSPAN_REPAIR", value_enum, default_value_t = RepairArg::Drop)]
    pub repair: RepairArg,

    #[command(flatten)]
    pub align: AlignArgs,
}

/// A PTC-style corpus: article files plus tab-separated annotations.
#[derive(Debug, Clone, Args)]
pub struct PtcArgs {
    /// Directory of `article<ID>.txt` files.
    #[arg(long, env = "MARKSPAN_ARTICLES", requires = "annotations", conflicts_with = "input")]
    pub articles: Option<PathBuf>,

    /// Annotation file or directory: id, technique, start, end per line.
    #[arg(long, env = "MARKSPAN_ANNOTATIONS", requires = "articles")]
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Articles in the memes JSON layout (alternative to --articles).
    #[arg(long, env = "MARKSPAN_INPUT", required_unless_present = "articles")]
    pub input: Option<PathBuf>,

    #[command(flatten)]
    pub ptc: PtcArgs,

    /// Segments JSON; standard output when absent.
    #[arg(long, env = "MARKSPAN_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    /// Segments or documents in the memes JSON layout.
    #[arg(long, env = "MARKSPAN_INPUT")]
    pub input: PathBuf,

    /// Directory for split files, manifest, config and vocabulary.
    #[arg(long, env = "MARKSPAN_OUTPUT")]
    pub output: PathBuf,

    /// Seed of the document-level split.
    #[arg(long, env = "MARKSPAN_SEED")]
    pub seed: u64,

    #[arg(long, env = "MARKSPAN_STAGE", value_enum, default_value_t = StageArg::PretrainPtc)]
    pub stage: StageArg,

    #[command(flatten)]
    pub train: TrainArgs,

    #[command(flatten)]
    pub gen: GenArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// train,dev,test proportions.
    #[arg(long, env = "MARKSPAN_SPLIT_RATIOS", default_value = "0.7,0.2,0.1", value_parser = parse_ratios)]
    pub split_ratios: [f64; 3],

    #[arg(long, env = "MARKSPAN_BATCH_SIZE", default_value_t = 8)]
    pub batch_size: usize,

    #[arg(long, env = "MARKSPAN_EPOCHS", default_value_t = 25)]
    pub epochs: usize,
}

impl TrainArgs {
    pub fn config(&self, stage: TrainStage) -> TrainConfig {
        TrainConfig {
            split_ratios: self.split_ratios,
            batch_size: self.batch_size,
            epochs: self.epochs,
            stage,
        }
    }
}

fn parse_ratios(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad ratio {p:?}")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|_| "expected three comma-separated ratios".to_string())
}

/// Generation settings recorded for the generator process.
#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, env = "MARKSPAN_MAX_LENGTH", default_value_t = 200)]
    pub max_length: usize,

    #[arg(long, env = "MARKSPAN_LENGTH_PENALTY", default_value = "0.4")]
    pub length_penalty: f64,

    #[arg(long, env = "MARKSPAN_REPETITION_PENALTY", default_value = "2.0")]
    pub repetition_penalty: f64,

    #[arg(long, env = "MARKSPAN_NUM_BEAMS", default_value_t = 3)]
    pub num_beams: usize,

    #[arg(long, env = "MARKSPAN_TOP_P", default_value = "0.8")]
    pub top_p: f64,

    #[arg(long, env = "MARKSPAN_DO_SAMPLE", default_value_t = true, action = clap::ArgAction::Set)]
    pub do_sample: bool,
}

impl GenArgs {
    pub fn config(&self) -> GenConfig {
        GenConfig {
            max_length: self.max_length,
            length_penalty: self.length_penalty,
            repetition_penalty: self.repetition_penalty,
            do_sample: self.do_sample,
            num_beams: self.num_beams,
            top_p: self.top_p,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Gold documents in the memes JSON layout.
    #[arg(long, env = "MARKSPAN_GOLD")]
    pub gold: PathBuf,

    /// Predictions in the memes JSON layout.
    #[arg(long, env = "MARKSPAN_PRED")]
    pub pred: PathBuf,

    #[arg(long, env = "MARKSPAN_FORMAT", value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,

    /// Report file; standard output when absent.
    #[arg(long, env = "MARKSPAN_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Documents in the memes JSON layout (alternative to --articles).
    #[arg(long, env = "MARKSPAN_INPUT", required_unless_present = "articles")]
    pub input: Option<PathBuf>,

    #[command(flatten)]
    pub ptc: PtcArgs,

    /// Also print the median fragment length in words per label.
    #[arg(long)]
    pub medians: bool,

    #[arg(long, env = "MARKSPAN_FORMAT", value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,

    #[arg(long, env = "MARKSPAN_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Gold documents in the memes JSON layout; a synthetic corpus over the
    /// registry labels is generated when absent.
    #[arg(long, env = "MARKSPAN_INPUT")]
    pub input: Option<PathBuf>,

    /// Size of the synthetic corpus.
    #[arg(long, env = "MARKSPAN_DOCS", default_value_t = 100)]
    pub docs: usize,

    /// Master seed for the corpus and every trial.
    #[arg(long, env = "MARKSPAN_SEED")]
    pub seed: u64,

    #[arg(long, env = "MARKSPAN_TRIALS", default_value_t = 1)]
    pub trials: usize,

    #[command(flatten)]
    pub noise: NoiseArgs,

    /// Comma-separated tag drop rates; one report per rate, overriding
    /// --tag-drop-rate.
    #[arg(long, env = "MARKSPAN_TAG_DROP_LEVELS", value_delimiter = ',')]
    pub tag_drop_levels: Vec<f64>,

    #[arg(long, env = "MARKSPAN_REPAIR", value_enum, default_value_t = RepairArg::Drop)]
    pub repair: RepairArg,

    #[command(flatten)]
    pub align: AlignArgs,

    /// JSON lines report; standard output when absent.
    #[arg(long, env = "MARKSPAN_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    #[arg(long, env = "MARKSPAN_CHAR_SUB_RATE", default_value_t = 0.0)]
    pub char_sub_rate: f64,

    #[arg(long, env = "MARKSPAN_CHAR_DEL_RATE", default_value_t = 0.0)]
    pub char_del_rate: f64,

    #[arg(long, env = "MARKSPAN_CHAR_INS_RATE", default_value_t = 0.0)]
    pub char_ins_rate: f64,

    #[arg(long, env = "MARKSPAN_TAG_DROP_RATE", default_value_t = 0.0)]
    pub tag_drop_rate: f64,

    #[arg(long, env = "MARKSPAN_TAG_DUP_RATE", default_value_t = 0.0)]
    pub tag_dup_rate: f64,

    /// Maximum tag displacement in characters.
    #[arg(long, env = "MARKSPAN_TAG_JITTER", default_value_t = 0)]
    pub tag_jitter: usize,

    /// Flip the case of letters at random.
    #[arg(long, env = "MARKSPAN_CASE_SCRAMBLE", default_value_t = false, action = clap::ArgAction::Set)]
    pub case_scramble: bool,
}

impl NoiseArgs {
    pub fn config(&self, seed: u64) -> NoiseConfig {
        NoiseConfig {
            char_sub_rate: self.char_sub_rate,
            char_del_rate: self.char_del_rate,
            char_ins_rate: self.char_ins_rate,
            tag_drop_rate: self.tag_drop_rate,
            tag_dup_rate: self.tag_dup_rate,
            tag_jitter: self.tag_jitter,
            case_scramble: self.case_scramble,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct VocabArgs {
    /// Vocabulary file; standard output when absent.
    #[arg(long, env = "MARKSPAN_OUTPUT")]
    pub output: Option<PathBuf>,
}
