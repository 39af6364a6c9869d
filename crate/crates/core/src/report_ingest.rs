//! Bug report ingestion: raw text to an ordered list of sentences.
//!
//! Segmentation is rule based and deterministic: every line break ends a
//! sentence, lines that begin with an enumeration marker (`1.`, `-`, `*`,
//! `Step 3:`) have the marker stripped, and within a line text is split on
//! sentence-final punctuation followed by whitespace and an uppercase letter
//! or digit. Abbreviations and dotted version numbers never split.

use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing field: {0}")]
    MissingField(&'static str),
    #[error("malformed report file {path}: {message}")]
    Malformed { path: String, message: String },
}

/// Where a sentence came from within the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SentenceOrigin {
    Title,
    Body,
}

/// One segmented sentence. `span` is a byte range into the originating field
/// (title or body); it covers the enumeration marker when one was stripped,
/// so the marker is recoverable from the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    /// 0-based ordinal within the body; the title sentence uses -1.
    pub index: i32,
    pub text: String,
    pub origin: SentenceOrigin,
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BugReport {
    pub id: String,
    pub title: String,
    pub body: String,
    pub sentences: Vec<Sentence>,
}

impl BugReport {
    /// Builds a report and segments its body. A non-empty title becomes
    /// sentence index -1 and is classified like any other sentence.
    pub fn new(id: impl Into<String>, title: impl Into<String>, body: impl Into<String>) -> Self {
        let id = id.into();
        let title = title.into();
        let body = body.into();
        let mut sentences = Vec::new();
        let trimmed_title = title.trim();
        if !trimmed_title.is_empty() {
            sentences.push(Sentence {
                index: -1,
                text: collapse_whitespace(trimmed_title),
                origin: SentenceOrigin::Title,
                span: 0..title.len(),
            });
        }
        sentences.extend(segment(&body));
        BugReport {
            id,
            title,
            body,
            sentences,
        }
    }

    pub fn sentence(&self, index: i32) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.index == index)
    }
}

/// Report file format accepted by [`load_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Whole file is the body; the filename stem becomes the id.
    Plain,
    /// JSON record `{id, title, body}`, or an array of such records.
    Structured,
}

/// Splits report text into sentences. Empty or whitespace-only input yields
/// an empty list. Spans are byte offsets into `text`, non-overlapping and
/// increasing.
pub fn segment(text: &str) -> Vec<Sentence> {
    let mut out = Vec::new();
    let mut line_start = 0usize;
    for line in text.split_inclusive('\n') {
        let line_end = line_start + line.len();
        let content = line.strip_suffix('\n').unwrap_or(line);
        segment_line(content, line_start, &mut out);
        line_start = line_end;
    }
    for (i, s) in out.iter_mut().enumerate() {
        s.index = i as i32;
    }
    out
}

fn segment_line(line: &str, line_offset: usize, out: &mut Vec<Sentence>) {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return;
    }
    let leading_ws = line.len() - line.trim_start().len();
    let content_start = line_offset + leading_ws;
    let content = line.trim_start().trim_end();

    let (item_start, item) = match enumeration_marker_len(content) {
        Some(marker_len) => (content_start + marker_len, &content[marker_len..]),
        None => (content_start, content),
    };
    // The sentence span covers the marker so it stays recoverable.
    split_on_punctuation(item, item_start, content_start, out);
}

/// Byte length of a leading enumeration marker, if the line starts with one.
/// Recognized: `- `, `* `, `+ `, `• `, `1. `, `2) `, `3: `, `Step 4: `.
fn enumeration_marker_len(line: &str) -> Option<usize> {
    let starts_with_ws = |s: &str| s.chars().next().is_some_and(char::is_whitespace);
    if let Some(c) = line.chars().next() {
        if matches!(c, '-' | '*' | '+' | '•') {
            let rest = &line[c.len_utf8()..];
            if starts_with_ws(rest) {
                let ws = rest.len() - rest.trim_start().len();
                return Some(c.len_utf8() + ws);
            }
        }
    }
    // "Step 3:" style. Offsets computed on the lowercased copy are applied
    // to the original only when they land on a char boundary there.
    let lower = line.to_lowercase();
    if let Some(rest) = lower.strip_prefix("step ") {
        let digits = rest.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits > 0 {
            let after = &rest[digits..];
            for sep in [":", ".", ")", " -"] {
                if let Some(tail) = after.strip_prefix(sep) {
                    if starts_with_ws(tail) || tail.is_empty() {
                        let consumed = "step ".len() + digits + sep.len();
                        if let Some(remainder) = line.get(consumed..) {
                            let ws = remainder.len() - remainder.trim_start().len();
                            return Some(consumed + ws);
                        }
                    }
                }
            }
        }
    }
    // "12." / "12)" / "12:" followed by whitespace
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 && digits <= 3 {
        let after = &line[digits..];
        if let Some(tail) = after.strip_prefix(['.', ')', ':']) {
            if starts_with_ws(tail) {
                let ws = tail.len() - tail.trim_start().len();
                return Some(digits + 1 + ws);
            }
        }
    }
    None
}

const ABBREVIATIONS: &[&str] = &[
    "e.g", "i.e", "etc", "vs", "cf", "mr", "mrs", "ms", "dr", "fig", "no", "al", "approx",
];

/// Splits `text` (one line, already trimmed) on `.?!` followed by whitespace
/// and an uppercase letter or digit. `span_start` is the byte offset of
/// `text` in the source; `marker_start` is where the first sentence's span
/// should begin (covers a stripped enumeration marker).
fn split_on_punctuation(
    text: &str,
    span_start: usize,
    marker_start: usize,
    out: &mut Vec<Sentence>,
) {
    let mut piece_start = 0usize;
    let mut first = true;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            // Lookahead: whitespace then uppercase or digit.
            let mut j = i + 1;
            let mut saw_ws = false;
            while j < chars.len() && chars[j].1.is_whitespace() {
                saw_ws = true;
                j += 1;
            }
            let starts_new = j < chars.len()
                && saw_ws
                && (chars[j].1.is_uppercase() || chars[j].1.is_ascii_digit());
            if starts_new && !abbreviation_before(text, pos) {
                let piece = &text[piece_start..pos + c.len_utf8()];
                push_sentence(piece, span_start, piece_start, marker_start, first, out);
                first = false;
                piece_start = chars[j].0;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    let piece = &text[piece_start..];
    push_sentence(piece, span_start, piece_start, marker_start, first, out);
}

fn push_sentence(
    piece: &str,
    span_start: usize,
    piece_offset: usize,
    marker_start: usize,
    first: bool,
    out: &mut Vec<Sentence>,
) {
    let trimmed = piece.trim();
    if trimmed.is_empty() {
        return;
    }
    let local = piece_offset + (piece.len() - piece.trim_start().len());
    let start = if first {
        marker_start
    } else {
        span_start + local
    };
    out.push(Sentence {
        index: 0, // reassigned by segment()
        text: collapse_whitespace(trimmed),
        origin: SentenceOrigin::Body,
        span: start..span_start + local + trimmed.len(),
    });
}

/// True when the token ending at byte `pos` (exclusive of the punctuation
/// char itself) is an abbreviation or part of a dotted number.
fn abbreviation_before(text: &str, pos: usize) -> bool {
    let before = &text[..pos];
    let token_start = before
        .rfind(|c: char| c.is_whitespace())
        .map(|i| i + before[i..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(0);
    let token = before[token_start..].trim_matches(|c: char| !c.is_alphanumeric() && c != '.');
    if token.is_empty() {
        return false;
    }
    let lowered = token.to_lowercase();
    let bare = lowered.trim_end_matches('.');
    if ABBREVIATIONS.contains(&bare) {
        return true;
    }
    // Single capital initial: "A. Smith"
    if token.len() == 1 && token.chars().next().unwrap().is_uppercase() {
        return true;
    }
    false
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    id: Option<String>,
    title: Option<String>,
    body: Option<String>,
}

impl RawRecord {
    fn into_report(self) -> Result<BugReport, IngestError> {
        let id = self.id.ok_or(IngestError::MissingField("id"))?;
        let body = self.body.ok_or(IngestError::MissingField("body"))?;
        let title = self.title.unwrap_or_default();
        Ok(BugReport::new(id, title, body))
    }
}

/// Loads a single report. A structured file holding an array must contain
/// exactly one record; use [`load_reports`] for multi-record files.
pub fn load_report(path: &Path, format: ReportFormat) -> Result<BugReport, IngestError> {
    let mut reports = load_reports(path, format)?;
    match reports.len() {
        1 => Ok(reports.remove(0)),
        n => Err(IngestError::Malformed {
            path: path.display().to_string(),
            message: format!("expected exactly one record, found {n}"),
        }),
    }
}

/// Loads every report in a file. Plain files yield one report whose id is
/// the filename stem.
pub fn load_reports(path: &Path, format: ReportFormat) -> Result<Vec<BugReport>, IngestError> {
    let raw = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        ReportFormat::Plain => {
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "report".to_string());
            Ok(vec![BugReport::new(id, "", raw)])
        }
        ReportFormat::Structured => {
            let value: serde_json::Value =
                serde_json::from_str(&raw).map_err(|e| IngestError::Malformed {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
            let records: Vec<RawRecord> = match value {
                serde_json::Value::Array(items) => items
                    .into_iter()
                    .map(serde_json::from_value)
                    .collect::<Result<_, _>>()
                    .map_err(|e| IngestError::Malformed {
                        path: path.display().to_string(),
                        message: e.to_string(),
                    })?,
                other => {
                    vec![
                        serde_json::from_value(other).map_err(|e| IngestError::Malformed {
                            path: path.display().to_string(),
                            message: e.to_string(),
                        })?,
                    ]
                }
            };
            let reports: Vec<BugReport> = records
                .into_iter()
                .map(RawRecord::into_report)
                .collect::<Result<_, _>>()?;
            let mut ids = std::collections::BTreeSet::new();
            for report in &reports {
                if !ids.insert(report.id.as_str()) {
                    return Err(IngestError::Malformed {
                        path: path.display().to_string(),
                        message: format!("duplicate report id '{}'", report.id),
                    });
                }
            }
            Ok(reports)
        }
    }
}
