//! Span detection and classification as markup generation.
//!
//! Labeled, possibly overlapping character fragments are written into the
//! text as XML-like start and end tags (`<SMEARS>…</SMEARS>`) so that a
//! sequence-to-sequence model can learn to reproduce them. Generated markup
//! is decoded back into fragments, repaired when tags do not pair up, and
//! re-anchored onto the original text when the generator changed words.
//!
//! Modules:
//! - [`model`]: labels, fragments, documents, run configurations
//! - [`tagset`]: tag tokens and vocabulary export
//! - [`codec`]: `encipher` / `decipher`
//! - [`align`]: edit alignment and offset re-anchoring
//! - [`segmenter`]: sentence splitting, segmentation, training pairs
//! - [`metrics`]: overlap-credit scoring and corpus statistics
//! - [`sim`]: simulated generation noise and recovery trials
//! - [`io`], [`protocol`]: file formats and the generator line protocol

pub mod align;
pub mod codec;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod protocol;
pub mod segmenter;
pub mod sim;
pub mod tagset;

pub use align::{align_texts, map_offset, reanchor, AlignOptions, AlignmentMap, Band, EditOp};
pub use codec::{
    decipher, encipher, pair_events, strip_tags, Deciphered, MarkedText, RepairCounts, RepairKind, RepairLog,
    RepairPolicy, TagEvent,
};
pub use error::{Error, Result};
pub use metrics::{corpus_stats, label_medians, score, CorpusStats, ScoreReport};
pub use model::{
    validate_document, Document, Fragment, GenConfig, Label, LabelRegistry, TrainConfig, TrainStage, Violation,
};
pub use segmenter::{build_segments, export_pairs, split_sentences, Segment, Sentence};
pub use sim::{perturb, recovery_trial, NoiseConfig, RecoveryReport};
pub use tagset::{build_tagset, export_vocab, normalize_stem, TagKind, TagSet, TagToken};
