//! Identification of step-bearing sentences and extraction of ordered,
//! de-duplicated individual S2Rs in the `[action][object][preposition][object2]`
//! slot format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::llm_gateway::{
    action_class, normalize_tokens, parse_extraction_lines, parse_index_list, Gateway,
    GatewayError, TemplateSet,
};
use crate::report_ingest::BugReport;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("report {report_id}: {source}")]
    Gateway {
        report_id: String,
        #[source]
        source: GatewayError,
    },
    #[error("report {report_id}: unparseable model response: {raw}")]
    UnparseableResponse { report_id: String, raw: String },
    #[error("slot format error: {0}")]
    SlotFormat(String),
}

/// One atomic app interaction extracted from a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndividualS2R {
    /// 0-based order of appearance across the report.
    pub index: usize,
    pub action: String,
    pub object: String,
    pub preposition: Option<String>,
    pub object2: Option<String>,
    /// Index of the sentence this step came from (-1 for the title).
    pub source_sentence: i32,
}

impl IndividualS2R {
    /// Canonical bracketed rendering, used in prompts and quality reports.
    pub fn formatted(&self) -> String {
        match (&self.preposition, &self.object2) {
            (Some(p), Some(o2)) => format!("[{}][{}][{}][{}]", self.action, self.object, p, o2),
            _ => format!("[{}][{}]", self.action, self.object),
        }
    }

    /// De-duplication key: the action-synonym class (or bare verb) plus the
    /// normalized object tokens (object2 included).
    pub fn normalized_key(&self) -> (String, BTreeSet<String>) {
        let class = action_class(&self.action)
            .map(|k| k.as_str().to_string())
            .unwrap_or_else(|| self.action.to_lowercase());
        let mut tokens = normalize_tokens(&self.object);
        if let Some(o2) = &self.object2 {
            tokens.extend(normalize_tokens(o2));
        }
        (class, tokens)
    }
}

impl fmt::Display for IndividualS2R {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.formatted())
    }
}

/// Parsed slot parts, before indices are attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotParts {
    pub action: String,
    pub object: String,
    pub preposition: Option<String>,
    pub object2: Option<String>,
}

/// Parses a bracketed slot string. Both 2-slot and 4-slot forms are
/// accepted; anything else is a format error.
pub fn parse_slots(formatted: &str) -> Result<SlotParts, PipelineError> {
    let mut groups = Vec::new();
    let mut rest = formatted.trim();
    while let Some(open) = rest.find('[') {
        let Some(close) = rest[open..].find(']') else {
            return Err(PipelineError::SlotFormat(format!(
                "unterminated slot in '{formatted}'"
            )));
        };
        groups.push(rest[open + 1..open + close].trim().to_string());
        rest = &rest[open + close + 1..];
    }
    if groups.len() < 2 {
        return Err(PipelineError::SlotFormat(format!(
            "expected at least 2 slots in '{formatted}'"
        )));
    }
    if groups[0].is_empty() {
        return Err(PipelineError::SlotFormat(format!(
            "empty action in '{formatted}'"
        )));
    }
    if groups[1].is_empty() {
        return Err(PipelineError::SlotFormat(format!(
            "empty object in '{formatted}'"
        )));
    }
    match groups.len() {
        2 => Ok(SlotParts {
            action: groups[0].clone(),
            object: groups[1].clone(),
            preposition: None,
            object2: None,
        }),
        4 => {
            if groups[2].is_empty() || groups[3].is_empty() {
                return Err(PipelineError::SlotFormat(format!(
                    "preposition and object2 must both be present in '{formatted}'"
                )));
            }
            Ok(SlotParts {
                action: groups[0].clone(),
                object: groups[1].clone(),
                preposition: Some(groups[2].clone()),
                object2: Some(groups[3].clone()),
            })
        }
        n => Err(PipelineError::SlotFormat(format!(
            "expected 2 or 4 slots, found {n} in '{formatted}'"
        ))),
    }
}

fn numbered_sentences<'a>(
    report: &'a BugReport,
    filter: Option<&BTreeSet<i32>>,
) -> impl Iterator<Item = String> + 'a {
    let filter: Option<BTreeSet<i32>> = filter.cloned();
    report
        .sentences
        .iter()
        .filter(move |s| filter.as_ref().is_none_or(|f| f.contains(&s.index)))
        .map(|s| format!("{}: {}", s.index, s.text))
}

/// Classifies every sentence of the report in one batched prompt and returns
/// the indices judged to describe reproduction steps.
pub fn identify_s2r_sentences(
    report: &BugReport,
    gateway: &Gateway,
    templates: &TemplateSet,
) -> Result<BTreeSet<i32>, PipelineError> {
    if report.sentences.is_empty() {
        return Ok(BTreeSet::new());
    }
    let listing: Vec<String> = numbered_sentences(report, None).collect();
    let mut bindings = BTreeMap::new();
    bindings.insert("sentences".to_string(), listing.join("\n"));
    let response = gateway
        .complete(&templates.identify, &bindings)
        .map_err(|source| PipelineError::Gateway {
            report_id: report.id.clone(),
            source,
        })?;
    let Some(indices) = parse_index_list(&response) else {
        return Err(PipelineError::UnparseableResponse {
            report_id: report.id.clone(),
            raw: response,
        });
    };
    let valid: BTreeSet<i32> = report.sentences.iter().map(|s| s.index).collect();
    let mut out = BTreeSet::new();
    for value in indices {
        let idx = value as i32;
        if valid.contains(&idx) {
            out.insert(idx);
        } else {
            log::warn!(
                "report {}: model flagged nonexistent sentence {value}, dropped",
                report.id
            );
        }
    }
    Ok(out)
}

/// Extracts the individual S2Rs from the classified sentences, in order of
/// appearance, de-duplicated by normalized (action class, object tokens).
pub fn extract_individual_s2rs(
    report: &BugReport,
    s2r_indices: &BTreeSet<i32>,
    gateway: &Gateway,
    templates: &TemplateSet,
) -> Result<Vec<IndividualS2R>, PipelineError> {
    if s2r_indices.is_empty() {
        return Ok(Vec::new());
    }
    let listing: Vec<String> = numbered_sentences(report, Some(s2r_indices)).collect();
    let mut bindings = BTreeMap::new();
    bindings.insert("sentences".to_string(), listing.join("\n"));
    let response = gateway
        .complete(&templates.extract, &bindings)
        .map_err(|source| PipelineError::Gateway {
            report_id: report.id.clone(),
            source,
        })?;
    let lines = parse_extraction_lines(&response);
    if lines.is_empty() {
        return Err(PipelineError::UnparseableResponse {
            report_id: report.id.clone(),
            raw: response,
        });
    }
    let mut out: Vec<IndividualS2R> = Vec::new();
    for (sentence_index, formatted) in lines {
        if !s2r_indices.contains(&sentence_index) {
            log::warn!(
                "report {}: extraction referenced unclassified sentence {sentence_index}, dropped",
                report.id
            );
            continue;
        }
        let parts = parse_slots(&formatted)?;
        out.push(IndividualS2R {
            index: 0,
            action: parts.action,
            object: parts.object,
            preposition: parts.preposition,
            object2: parts.object2,
            source_sentence: sentence_index,
        });
    }
    // Order by appearance: sentence order first, response order within a
    // sentence (stable sort keeps the left-to-right emission order).
    out.sort_by_key(|s| s.source_sentence);
    // Post-hoc redundancy guard: the model is asked to de-duplicate, but
    // drift is dropped here, keeping the earliest occurrence.
    let mut seen = BTreeSet::new();
    out.retain(|s| seen.insert(s.normalized_key()));
    for (i, s2r) in out.iter_mut().enumerate() {
        s2r.index = i;
    }
    Ok(out)
}
