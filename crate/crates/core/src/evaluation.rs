//! Scoring of generated quality reports against ground truth: per-category
//! and overall precision/recall/F1 for the step annotations, and
//! interaction-level multiset matching for missing steps.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quality_report::{EdgeIdentity, QualityLabel, QualityReport};

pub const TRUTH_FORMAT_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("report id mismatch: predicted '{predicted}', truth '{truth}'")]
    ReportIdMismatch { predicted: String, truth: String },
    #[error("label lists differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(
        "ground truth file {path}: unsupported schema version '{found}', expected '{expected}'"
    )]
    VersionMismatch {
        path: String,
        found: String,
        expected: String,
    },
    #[error("ground truth file {path} is malformed: {message}")]
    Malformed { path: String, message: String },
}

/// Ground-truth annotation for one reported step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthStep {
    pub s2r_text: String,
    pub label: QualityLabel,
    #[serde(default)]
    pub has_missing_before: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub report_id: String,
    pub steps: Vec<GroundTruthStep>,
    /// Edge identities of the missing interactions, one list per gap
    /// position.
    #[serde(default)]
    pub missing_edges: Vec<Vec<EdgeIdentity>>,
}

#[derive(Serialize, Deserialize)]
struct TruthEnvelope {
    version: String,
    truth: GroundTruth,
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruth, EvalError> {
    let raw = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let envelope: TruthEnvelope = serde_json::from_str(&raw).map_err(|e| EvalError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if envelope.version != TRUTH_FORMAT_VERSION {
        return Err(EvalError::VersionMismatch {
            path: path.display().to_string(),
            found: envelope.version,
            expected: TRUTH_FORMAT_VERSION.to_string(),
        });
    }
    Ok(envelope.truth)
}

pub fn save_ground_truth(truth: &GroundTruth, path: &Path) -> Result<(), EvalError> {
    let envelope = TruthEnvelope {
        version: TRUTH_FORMAT_VERSION.to_string(),
        truth: truth.clone(),
    };
    let out = serde_json::to_string_pretty(&envelope).expect("truth serializes");
    std::fs::write(path, out).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Precision/recall/F1 with raw counts. With a zero denominator the affected
/// metrics report 1.0 by convention and `undefined` is set; F1 is 0 when
/// precision and recall are both a defined 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default)]
    pub undefined: bool,
}

impl CategoryMetrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> CategoryMetrics {
        let mut undefined = false;
        let precision = if tp + fp == 0 {
            undefined = true;
            1.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_ == 0 {
            undefined = true;
            1.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        CategoryMetrics {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
            undefined,
        }
    }
}

pub const CATEGORIES: [&str; 4] = ["CS", "AS", "VM", "MS"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub per_category: BTreeMap<String, CategoryMetrics>,
    pub overall: CategoryMetrics,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alignment {
    /// (predicted index, truth index) pairs over reported steps.
    pub pairs: Vec<(usize, usize)>,
    pub unpaired_predicted: Vec<usize>,
    pub unpaired_truth: Vec<usize>,
}

fn normalize_step_text(text: &str) -> String {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Pairs predicted reported steps with ground-truth steps: first by
/// normalized text equality, then by order among the unpaired remainder.
/// Unpaired truth steps are false negatives for their label; unpaired
/// predictions are false positives.
pub fn align_steps(predicted: &QualityReport, truth: &GroundTruth) -> Result<Alignment, EvalError> {
    if predicted.report_id != truth.report_id {
        return Err(EvalError::ReportIdMismatch {
            predicted: predicted.report_id.clone(),
            truth: truth.report_id.clone(),
        });
    }
    let predicted_steps: Vec<usize> = predicted
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == crate::quality_report::StepKind::Reported)
        .map(|(i, _)| i)
        .collect();

    // Queue truth indices per normalized text; matched in order.
    let mut by_text: BTreeMap<String, std::collections::VecDeque<usize>> = BTreeMap::new();
    for (t_idx, step) in truth.steps.iter().enumerate() {
        by_text
            .entry(normalize_step_text(&step.s2r_text))
            .or_default()
            .push_back(t_idx);
    }
    let mut pairs = Vec::new();
    let mut leftover_pred = Vec::new();
    for &p_idx in &predicted_steps {
        let key = normalize_step_text(&predicted.steps[p_idx].text);
        match by_text.get_mut(&key).and_then(|q| q.pop_front()) {
            Some(t_idx) => pairs.push((p_idx, t_idx)),
            None => leftover_pred.push(p_idx),
        }
    }
    let mut leftover_truth: Vec<usize> = by_text.into_values().flatten().collect();
    leftover_truth.sort_unstable();
    // Remainder pairing by order.
    let n = leftover_pred.len().min(leftover_truth.len());
    for i in 0..n {
        pairs.push((leftover_pred[i], leftover_truth[i]));
    }
    let alignment = Alignment {
        unpaired_predicted: leftover_pred.split_off(n),
        unpaired_truth: leftover_truth.split_off(n),
        pairs: {
            let mut p = pairs;
            p.sort_unstable();
            p
        },
    };
    Ok(alignment)
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
}

/// Scores step annotations over a corpus. A paired step is a true positive
/// for label X when both sides carry X; a predicted X against truth Y is a
/// false positive for X and a false negative for Y. The MS category is
/// scored the same way on the missing-before flag. Overall sums the counts
/// across categories.
pub fn score_annotations(
    corpus: &[(QualityReport, GroundTruth)],
) -> Result<EvalMetrics, EvalError> {
    let mut counts: BTreeMap<&str, Counts> =
        CATEGORIES.iter().map(|c| (*c, Counts::default())).collect();
    let label_key = |label: QualityLabel| match label {
        QualityLabel::Cs => "CS",
        QualityLabel::As => "AS",
        QualityLabel::Vm => "VM",
        QualityLabel::Ms => "MS",
    };
    for (predicted, truth) in corpus {
        let alignment = align_steps(predicted, truth)?;
        for (p_idx, t_idx) in &alignment.pairs {
            let p = &predicted.steps[*p_idx];
            let t = &truth.steps[*t_idx];
            if p.label == t.label {
                counts.get_mut(label_key(p.label)).unwrap().tp += 1;
            } else {
                counts.get_mut(label_key(p.label)).unwrap().fp += 1;
                counts.get_mut(label_key(t.label)).unwrap().fn_ += 1;
            }
            match (p.has_missing_before, t.has_missing_before) {
                (true, true) => counts.get_mut("MS").unwrap().tp += 1,
                (true, false) => counts.get_mut("MS").unwrap().fp += 1,
                (false, true) => counts.get_mut("MS").unwrap().fn_ += 1,
                (false, false) => {}
            }
        }
        for &t_idx in &alignment.unpaired_truth {
            let t = &truth.steps[t_idx];
            counts.get_mut(label_key(t.label)).unwrap().fn_ += 1;
            if t.has_missing_before {
                counts.get_mut("MS").unwrap().fn_ += 1;
            }
        }
        for &p_idx in &alignment.unpaired_predicted {
            let p = &predicted.steps[p_idx];
            counts.get_mut(label_key(p.label)).unwrap().fp += 1;
            if p.has_missing_before {
                counts.get_mut("MS").unwrap().fp += 1;
            }
        }
    }
    let mut per_category = BTreeMap::new();
    let mut total = Counts::default();
    for (name, c) in &counts {
        per_category.insert(
            name.to_string(),
            CategoryMetrics::from_counts(c.tp, c.fp, c.fn_),
        );
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn_ += c.fn_;
    }
    Ok(EvalMetrics {
        per_category,
        overall: CategoryMetrics::from_counts(total.tp, total.fp, total.fn_),
    })
}

/// Metric arithmetic for missing steps given aggregate counts: `predicted`
/// suggested steps of which `correct` are in the ground truth of `truth`
/// total steps.
pub fn missing_step_counts(predicted: usize, correct: usize, truth: usize) -> CategoryMetrics {
    CategoryMetrics::from_counts(
        correct,
        predicted.saturating_sub(correct),
        truth.saturating_sub(correct),
    )
}

fn multiset(edges: impl Iterator<Item = EdgeIdentity>) -> BTreeMap<EdgeIdentity, usize> {
    let mut m = BTreeMap::new();
    for e in edges {
        *m.entry(e).or_insert(0usize) += 1;
    }
    m
}

fn multiset_intersection_size(
    a: &BTreeMap<EdgeIdentity, usize>,
    b: &BTreeMap<EdgeIdentity, usize>,
) -> usize {
    a.iter()
        .map(|(k, &n)| n.min(b.get(k).copied().unwrap_or(0)))
        .sum()
}

fn predicted_missing_multiset(report: &QualityReport) -> BTreeMap<EdgeIdentity, usize> {
    multiset(report.missing_steps().flat_map(|s| s.edges.iter().cloned()))
}

fn truth_missing_multiset(truth: &GroundTruth) -> BTreeMap<EdgeIdentity, usize> {
    multiset(truth.missing_edges.iter().flatten().cloned())
}

/// Scores generated missing steps against ground truth by multiset
/// intersection on edge identity, summed over the corpus.
pub fn score_missing_steps(
    corpus: &[(QualityReport, GroundTruth)],
) -> Result<CategoryMetrics, EvalError> {
    let mut predicted_total = 0usize;
    let mut correct = 0usize;
    let mut truth_total = 0usize;
    for (predicted, truth) in corpus {
        if predicted.report_id != truth.report_id {
            return Err(EvalError::ReportIdMismatch {
                predicted: predicted.report_id.clone(),
                truth: truth.report_id.clone(),
            });
        }
        let p = predicted_missing_multiset(predicted);
        let t = truth_missing_multiset(truth);
        predicted_total += p.values().sum::<usize>();
        truth_total += t.values().sum::<usize>();
        correct += multiset_intersection_size(&p, &t);
    }
    Ok(missing_step_counts(predicted_total, correct, truth_total))
}

/// Missing-step overlap between two systems against the same ground truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingOverlap {
    pub both_correct: usize,
    pub only_a_correct: usize,
    pub only_b_correct: usize,
    pub both_missed: usize,
}

/// Computes which ground-truth missing steps each system recovered. Reports
/// are matched to truths by report id; ids present on one side only are
/// skipped.
pub fn missing_overlap(
    system_a: &[QualityReport],
    system_b: &[QualityReport],
    truths: &[GroundTruth],
) -> MissingOverlap {
    let a_by_id: BTreeMap<&str, &QualityReport> =
        system_a.iter().map(|r| (r.report_id.as_str(), r)).collect();
    let b_by_id: BTreeMap<&str, &QualityReport> =
        system_b.iter().map(|r| (r.report_id.as_str(), r)).collect();
    let mut overlap = MissingOverlap::default();
    for truth in truths {
        let t = truth_missing_multiset(truth);
        let a = a_by_id
            .get(truth.report_id.as_str())
            .map(|r| predicted_missing_multiset(r))
            .unwrap_or_default();
        let b = b_by_id
            .get(truth.report_id.as_str())
            .map(|r| predicted_missing_multiset(r))
            .unwrap_or_default();
        for (edge, &count) in &t {
            let in_a = a.get(edge).copied().unwrap_or(0).min(count);
            let in_b = b.get(edge).copied().unwrap_or(0).min(count);
            overlap.both_correct += in_a.min(in_b);
            overlap.only_a_correct += in_a.saturating_sub(in_b);
            overlap.only_b_correct += in_b.saturating_sub(in_a);
            overlap.both_missed += count - in_a.max(in_b);
        }
    }
    overlap
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaResult {
    pub value: f64,
    /// Set when chance agreement is 1 (a single label on both sides), which
    /// leaves kappa undefined; the value reported is 1.0 on full agreement.
    pub undefined: bool,
}

/// Cohen's kappa between two parallel label lists.
pub fn cohen_kappa<T: AsRef<str>>(
    labels_a: &[T],
    labels_b: &[T],
) -> Result<KappaResult, EvalError> {
    if labels_a.len() != labels_b.len() {
        return Err(EvalError::LengthMismatch {
            a: labels_a.len(),
            b: labels_b.len(),
        });
    }
    let n = labels_a.len();
    if n == 0 {
        return Ok(KappaResult {
            value: 1.0,
            undefined: true,
        });
    }
    let mut agree = 0usize;
    let mut count_a: BTreeMap<&str, usize> = BTreeMap::new();
    let mut count_b: BTreeMap<&str, usize> = BTreeMap::new();
    for (a, b) in labels_a.iter().zip(labels_b) {
        let (a, b) = (a.as_ref(), b.as_ref());
        if a == b {
            agree += 1;
        }
        *count_a.entry(a).or_insert(0) += 1;
        *count_b.entry(b).or_insert(0) += 1;
    }
    let po = agree as f64 / n as f64;
    let pe: f64 = count_a
        .iter()
        .map(|(label, &ca)| {
            let cb = count_b.get(label).copied().unwrap_or(0);
            (ca as f64 / n as f64) * (cb as f64 / n as f64)
        })
        .sum();
    if (1.0 - pe).abs() < f64::EPSILON {
        return Ok(KappaResult {
            value: if po >= 1.0 { 1.0 } else { 0.0 },
            undefined: true,
        });
    }
    Ok(KappaResult {
        value: (po - pe) / (1.0 - pe),
        undefined: false,
    })
}
