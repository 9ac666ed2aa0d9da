//! Newline-delimited text exchange with an external generator process.
//!
//! Each record is one UTF-8 line. Texts may contain newlines (meme texts do),
//! so inside a line a backslash is written as `\\`, a newline as `\n` and a
//! carriage return as `\r`. A generator that cannot decode a line answers
//! with [`ERROR_SENTINEL`] and moves on to the next one.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Reply line for a request the generator could not process.
pub const ERROR_SENTINEL: &str = "\\error";

pub fn escape_line(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_line(line: &str) -> Result<String> {
    let mut out = String::with_capacity(line.len());
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            if c == '\n' || c == '\r' {
                return Err(Error::Protocol("raw line break inside a record".into()));
            }
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => return Err(Error::Protocol(format!("unknown escape \\{other}"))),
            None => return Err(Error::Protocol("dangling backslash".into())),
        }
    }
    Ok(out)
}

/// Decodes every line of a reply stream. Sentinel and malformed lines are
/// returned as errors in place, so line positions stay aligned with the
/// requests.
pub fn read_lines<R: BufRead>(reader: R) -> std::io::Result<Vec<Result<String>>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line == ERROR_SENTINEL {
            out.push(Err(Error::Protocol("generator reported an error".into())));
        } else {
            out.push(unescape_line(line));
        }
    }
    Ok(out)
}

pub fn write_lines<W: Write, S: AsRef<str>>(mut writer: W, texts: &[S]) -> std::io::Result<()> {
    for t in texts {
        writer.write_all(escape_line(t.as_ref()).as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}
