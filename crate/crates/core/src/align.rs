//! Character-level edit alignment between generated text and the original
//! input, used to move tag positions back onto the original.
//!
//! The aligner fills a suffix cost table (cost of aligning `gen[i..]` with
//! `orig[j..]`) and then walks it forward from the origin, so ties are
//! resolved left to right with the preference
//! match > substitute > delete > insert.

use std::fmt;
use std::str::FromStr;

use crate::codec::TagEvent;
use crate::error::{Error, Result};

/// Operation of one alignment column, read from the generated side:
/// `Insert` is a generated character with no original counterpart and
/// `Delete` is an original character the generator left out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EditOp {
    Match,
    Substitute,
    Insert,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignColumn {
    pub gen: Option<usize>,
    pub orig: Option<usize>,
    pub op: EditOp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentMap {
    pub columns: Vec<AlignColumn>,
    pub cost: usize,
    gen_len: usize,
    orig_len: usize,
    /// anchors[g] = original offset for a tag before generated char g.
    anchors: Vec<usize>,
}

/// Width of the diagonal band explored by the aligner.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Band {
    /// `max(32, 2 * |len(gen) - len(orig)|)`.
    #[default]
    Auto,
    Fixed(usize),
    Unlimited,
}

impl Band {
    fn width(self, gen_len: usize, orig_len: usize) -> Result<usize> {
        let diff = gen_len.abs_diff(orig_len);
        match self {
            Band::Auto => Ok(32.max(2 * diff)),
            Band::Unlimited => Ok(gen_len.max(orig_len)),
            Band::Fixed(w) if w < diff => Err(Error::InfeasibleBand { band: w, diff }),
            Band::Fixed(w) => Ok(w),
        }
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Band::Auto),
            "unlimited" | "full" => Ok(Band::Unlimited),
            n => n
                .parse::<usize>()
                .ok()
                .filter(|w| *w > 0)
                .map(Band::Fixed)
                .ok_or_else(|| Error::InvalidConfig(format!("invalid band width {s:?}"))),
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Band::Auto => f.write_str("auto"),
            Band::Unlimited => f.write_str("unlimited"),
            Band::Fixed(w) => write!(f, "{w}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignOptions {
    pub band: Band,
    pub case_fold: bool,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions {
            band: Band::Auto,
            case_fold: true,
        }
    }
}

fn fold(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

const INF: u32 = u32::MAX / 2;

/// Suffix cost table restricted to the band |i - j| <= width.
struct BandedTable {
    width: usize,
    row_len: usize,
    cells: Vec<u32>,
}

impl BandedTable {
    fn new(rows: usize, width: usize) -> Self {
        let row_len = 2 * width + 1;
        BandedTable {
            width,
            row_len,
            cells: vec![INF; rows * row_len],
        }
    }

    fn index(&self, i: usize, j: usize) -> Option<usize> {
        let k = (j + self.width).checked_sub(i)?;
        (k < self.row_len).then(|| i * self.row_len + k)
    }

    fn get(&self, i: usize, j: usize) -> u32 {
        self.index(i, j).map_or(INF, |k| self.cells[k])
    }
}

/// Minimum-cost unit-cost alignment of `generated` against `original`.
pub fn align_texts(generated: &str, original: &str, opts: AlignOptions) -> Result<AlignmentMap> {
    let fold_if = |c: char| if opts.case_fold { fold(c) } else { c };
    let gen: Vec<char> = generated.chars().map(fold_if).collect();
    let orig: Vec<char> = original.chars().map(fold_if).collect();
    let (n, m) = (gen.len(), orig.len());
    let width = opts.band.width(n, m)?;

    let mut table = BandedTable::new(n + 1, width);
    for i in (0..=n).rev() {
        let lo = i.saturating_sub(width);
        let hi = (i + width).min(m);
        for j in (lo..=hi).rev() {
            let cost = if i == n && j == m {
                0
            } else {
                let mut best = INF;
                if i < n && j < m {
                    best = best.min(table.get(i + 1, j + 1) + u32::from(gen[i] != orig[j]));
                }
                if j < m {
                    best = best.min(table.get(i, j + 1) + 1);
                }
                if i < n {
                    best = best.min(table.get(i + 1, j) + 1);
                }
                best
            };
            let k = table.index(i, j).expect("cell inside band");
            table.cells[k] = cost;
        }
    }

    let total = table.get(0, 0);
    debug_assert!(total < INF);
    let mut columns = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let here = table.get(i, j);
        if i < n && j < m {
            let diag = table.get(i + 1, j + 1);
            if gen[i] == orig[j] && diag == here {
                columns.push(AlignColumn {
                    gen: Some(i),
                    orig: Some(j),
                    op: EditOp::Match,
                });
                i += 1;
                j += 1;
                continue;
            }
            if gen[i] != orig[j] && diag + 1 == here {
                columns.push(AlignColumn {
                    gen: Some(i),
                    orig: Some(j),
                    op: EditOp::Substitute,
                });
                i += 1;
                j += 1;
                continue;
            }
        }
        if j < m && table.get(i, j + 1) + 1 == here {
            columns.push(AlignColumn {
                gen: None,
                orig: Some(j),
                op: EditOp::Delete,
            });
            j += 1;
            continue;
        }
        debug_assert!(i < n && table.get(i + 1, j) + 1 == here);
        columns.push(AlignColumn {
            gen: Some(i),
            orig: None,
            op: EditOp::Insert,
        });
        i += 1;
    }

    Ok(AlignmentMap::from_columns(columns, n, m, total as usize))
}

impl AlignmentMap {
    fn from_columns(columns: Vec<AlignColumn>, gen_len: usize, orig_len: usize, cost: usize) -> Self {
        let mut anchors = vec![orig_len; gen_len + 1];
        let mut next_orig = orig_len;
        for col in columns.iter().rev() {
            if let Some(o) = col.orig {
                next_orig = o;
            }
            if let Some(g) = col.gen {
                anchors[g] = next_orig;
            }
        }
        AlignmentMap {
            columns,
            cost,
            gen_len,
            orig_len,
            anchors,
        }
    }

    pub fn gen_len(&self) -> usize {
        self.gen_len
    }

    pub fn orig_len(&self) -> usize {
        self.orig_len
    }

    /// Maps a boundary before generated character `gen_offset` to the
    /// original index of the first column at or after it that has an
    /// original character. Tags inside a run of insertions snap forward.
    pub fn map_offset(&self, gen_offset: usize) -> Result<usize> {
        self.anchors.get(gen_offset).copied().ok_or(Error::OffsetOutOfRange {
            offset: gen_offset,
            len: self.gen_len,
        })
    }
}

pub fn map_offset(map: &AlignmentMap, gen_offset: usize) -> Result<usize> {
    map.map_offset(gen_offset)
}

/// Moves tag events from generated-text offsets to original-text offsets.
/// Order is preserved because the mapping is monotone; events past the end
/// of the generated text land at the end of the original.
pub fn reanchor(events: &[TagEvent], map: &AlignmentMap) -> Vec<TagEvent> {
    events
        .iter()
        .map(|ev| TagEvent {
            token: ev.token.clone(),
            plain_offset: map.map_offset(ev.plain_offset).unwrap_or(map.orig_len),
        })
        .collect()
}
