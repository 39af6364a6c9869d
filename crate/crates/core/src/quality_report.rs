//! Assembly and rendering of the final quality report: reported steps with
//! their labels, synthesized missing steps interleaved before the step they
//! precede, diagnostics, and per-label summary counts.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::execution_model::{ActionKind, ExecutionGraph, InteractionEdge, NodeId};
use crate::mapping_engine::{StepLabel, TraversalResult};
use crate::report_ingest::BugReport;
use crate::s2r_pipeline::IndividualS2R;

pub const REPORT_FORMAT_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report file {path}: unsupported schema version '{found}', expected '{expected}'")]
    VersionMismatch {
        path: String,
        found: String,
        expected: String,
    },
    #[error("report file {path} is corrupt: {message}")]
    Corrupt { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Reported,
    Missing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QualityLabel {
    #[serde(rename = "CS")]
    Cs,
    #[serde(rename = "AS")]
    As,
    #[serde(rename = "VM")]
    Vm,
    #[serde(rename = "MS")]
    Ms,
}

impl fmt::Display for QualityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QualityLabel::Cs => "CS",
            QualityLabel::As => "AS",
            QualityLabel::Vm => "VM",
            QualityLabel::Ms => "MS",
        })
    }
}

impl From<StepLabel> for QualityLabel {
    fn from(label: StepLabel) -> Self {
        match label {
            StepLabel::Cs => QualityLabel::Cs,
            StepLabel::As => QualityLabel::As,
            StepLabel::Vm => QualityLabel::Vm,
        }
    }
}

/// Full edge identity, so evaluation can match on interactions rather than
/// on step text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeIdentity {
    pub source: NodeId,
    pub target: NodeId,
    pub action: ActionKind,
    pub component_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl EdgeIdentity {
    pub fn from_edge(edge: &InteractionEdge) -> EdgeIdentity {
        EdgeIdentity {
            source: edge.source.clone(),
            target: edge.target.clone(),
            action: edge.action,
            component_type: edge.component.component_type.clone(),
            resource_id: edge.component.resource_id.clone(),
            text: edge.component.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedStep {
    pub kind: StepKind,
    pub label: QualityLabel,
    pub text: String,
    #[serde(rename = "edge_refs", default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<EdgeIdentity>,
    pub position: usize,
    /// Set on a reported step when missing steps were inserted before it.
    #[serde(default)]
    pub has_missing_before: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualitySummary {
    pub cs: usize,
    #[serde(rename = "as")]
    pub ambiguous: usize,
    pub vm: usize,
    pub ms: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityReport {
    pub report_id: String,
    pub app_id: String,
    pub steps: Vec<AnnotatedStep>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    pub summary: QualitySummary,
}

impl QualityReport {
    pub fn reported_steps(&self) -> impl Iterator<Item = &AnnotatedStep> {
        self.steps.iter().filter(|s| s.kind == StepKind::Reported)
    }

    pub fn missing_steps(&self) -> impl Iterator<Item = &AnnotatedStep> {
        self.steps.iter().filter(|s| s.kind == StepKind::Missing)
    }
}

fn component_label(edge: &InteractionEdge) -> String {
    [
        &edge.component.text,
        &edge.component.description,
        &edge.component.resource_id,
    ]
    .into_iter()
    .flatten()
    .find(|s| !s.trim().is_empty())
    .cloned()
    .unwrap_or_else(|| edge.component.component_type.clone())
}

/// Renders reporter-facing text for a missing interaction: one template per
/// action kind, labeled by the first non-empty of component text,
/// description, resource id, falling back to the component type.
pub fn synthesize_missing_step_text(edge: &InteractionEdge) -> String {
    match edge.action {
        ActionKind::OpenApp => "Open the app".to_string(),
        ActionKind::Tap => format!("Tap on '{}'", component_label(edge)),
        ActionKind::LongTap => format!("Long-tap on '{}'", component_label(edge)),
        ActionKind::Type => format!("Enter text in '{}'", component_label(edge)),
        ActionKind::Swipe => format!("Swipe on '{}'", component_label(edge)),
    }
}

/// Interleaves missing steps before the reported step they precede and
/// computes the summary. Positions are contiguous from 0.
pub fn assemble(
    traversal: &TraversalResult,
    s2rs: &[IndividualS2R],
    report: &BugReport,
    graph: &ExecutionGraph,
) -> QualityReport {
    let mut steps = Vec::new();
    let mut summary = QualitySummary::default();
    for mapping in &traversal.step_mappings {
        let has_missing_before = !mapping.gap_edges_before.is_empty();
        for &gap_edge in &mapping.gap_edges_before {
            let edge = graph.edge(gap_edge).expect("gap edge exists");
            summary.ms += 1;
            steps.push(AnnotatedStep {
                kind: StepKind::Missing,
                label: QualityLabel::Ms,
                text: synthesize_missing_step_text(edge),
                edges: vec![EdgeIdentity::from_edge(edge)],
                position: steps.len(),
                has_missing_before: false,
            });
        }
        let label = QualityLabel::from(mapping.label);
        match label {
            QualityLabel::Cs => summary.cs += 1,
            QualityLabel::As => summary.ambiguous += 1,
            QualityLabel::Vm => summary.vm += 1,
            QualityLabel::Ms => {}
        }
        steps.push(AnnotatedStep {
            kind: StepKind::Reported,
            label,
            text: s2rs[mapping.s2r_index].formatted(),
            edges: mapping
                .mapped_edges
                .iter()
                .map(|&id| EdgeIdentity::from_edge(graph.edge(id).expect("mapped edge exists")))
                .collect(),
            position: steps.len(),
            has_missing_before,
        });
    }
    QualityReport {
        report_id: report.id.clone(),
        app_id: graph.app_id.clone(),
        steps,
        diagnostics: traversal.diagnostics.clone(),
        summary,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Human,
    Machine,
}

#[derive(Serialize, Deserialize)]
struct ReportEnvelope {
    version: String,
    checksum: String,
    report: QualityReport,
}

fn report_checksum(report: &QualityReport) -> String {
    let payload = serde_json::to_string(report).expect("report serializes");
    let mut hasher = Sha256::new();
    hasher.update(payload.as_bytes());
    hex::encode(hasher.finalize())
}

/// Renders the report. The machine format is a versioned, checksummed JSON
/// document that round-trips losslessly; the human format is a readable
/// listing with one line per step.
pub fn render(report: &QualityReport, format: RenderFormat) -> String {
    match format {
        RenderFormat::Machine => {
            let envelope = ReportEnvelope {
                version: REPORT_FORMAT_VERSION.to_string(),
                checksum: report_checksum(report),
                report: report.clone(),
            };
            let mut out = serde_json::to_string_pretty(&envelope).expect("report serializes");
            out.push('\n');
            out
        }
        RenderFormat::Human => {
            let mut out = String::new();
            out.push_str(&format!(
                "Quality report for {} (app: {})\n\n",
                report.report_id, report.app_id
            ));
            for step in &report.steps {
                let marker = match step.kind {
                    StepKind::Reported => "",
                    StepKind::Missing => " (missing step)",
                };
                out.push_str(&format!(
                    "{:3}. [{}] {}{}\n",
                    step.position,
                    step.label,
                    step.text.replace('\n', " "),
                    marker
                ));
            }
            if !report.diagnostics.is_empty() {
                out.push_str("\nDiagnostics:\n");
                for d in &report.diagnostics {
                    out.push_str(&format!("  - {}\n", d.replace('\n', " ")));
                }
            }
            out.push_str(&format!(
                "\nSummary: CS={} AS={} VM={} MS={}\n",
                report.summary.cs, report.summary.ambiguous, report.summary.vm, report.summary.ms
            ));
            out
        }
    }
}

/// Parses a machine-format document, verifying version and checksum.
pub fn parse_machine_report(raw: &str, path: &str) -> Result<QualityReport, ReportError> {
    let envelope: ReportEnvelope = serde_json::from_str(raw).map_err(|e| ReportError::Corrupt {
        path: path.to_string(),
        message: e.to_string(),
    })?;
    if envelope.version != REPORT_FORMAT_VERSION {
        return Err(ReportError::VersionMismatch {
            path: path.to_string(),
            found: envelope.version,
            expected: REPORT_FORMAT_VERSION.to_string(),
        });
    }
    if report_checksum(&envelope.report) != envelope.checksum {
        return Err(ReportError::Corrupt {
            path: path.to_string(),
            message: "checksum mismatch".to_string(),
        });
    }
    Ok(envelope.report)
}

pub fn load_machine_report(path: &Path) -> Result<QualityReport, ReportError> {
    let raw = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_machine_report(&raw, &path.display().to_string())
}
