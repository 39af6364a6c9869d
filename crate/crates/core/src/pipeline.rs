//! End-to-end orchestration shared by the command-line tool and the C API:
//! trace directory to graph file, bug report to quality report, and
//! prediction/truth directories to evaluation metrics.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::Config;
use crate::evaluation::{
    load_ground_truth, score_annotations, score_missing_steps, CategoryMetrics, EvalError,
    EvalMetrics, GroundTruth,
};
use crate::execution_model::{build_graph, parse_trace, save_graph, ExecutionGraph, GraphError};
use crate::llm_gateway::{
    Gateway, GatewayError, MockOracle, ProviderKind, RemoteProvider, TemplateSet,
};
use crate::mapping_engine::{traverse, MappingError};
use crate::quality_report::{
    assemble, load_machine_report, render, QualityReport, RenderFormat, ReportError,
};
use crate::report_ingest::{load_reports, BugReport, IngestError, ReportFormat};
use crate::s2r_pipeline::{extract_individual_s2rs, identify_s2r_sentences, PipelineError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    std::fs::write(path, contents).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Builds the execution graph from every `*.json` trace in a directory and
/// writes it to `out_path`. Returns (node count, edge count).
pub fn build_graph_from_dir(trace_dir: &Path, out_path: &Path) -> Result<(usize, usize), RunError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(trace_dir)
        .map_err(|source| RunError::Io {
            path: trace_dir.display().to_string(),
            source,
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(RunError::Usage(format!(
            "no trace files (*.json) in {}",
            trace_dir.display()
        )));
    }
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for path in &paths {
        match parse_trace(path) {
            Ok(t) => traces.push(t),
            Err(e) => failures.push(format!("{}: {e}", path.display())),
        }
    }
    if !failures.is_empty() {
        return Err(RunError::Usage(format!(
            "failed to parse {} trace file(s):\n  {}",
            failures.len(),
            failures.join("\n  ")
        )));
    }
    let app_id = traces[0].app_id.clone();
    let graph = build_graph(&traces, &app_id)?;
    save_graph(&graph, out_path)?;
    Ok((graph.nodes.len(), graph.edges.len()))
}

/// Builds the gateway for the configured provider. The mock provider honors
/// the match threshold; the remote provider reads its key from the
/// environment.
pub fn make_gateway(config: &Config, audit_log: Option<&Path>) -> Result<Gateway, RunError> {
    let provider: Box<dyn crate::llm_gateway::Provider> = match config.model.provider {
        ProviderKind::MockOracle => Box::new(MockOracle::with_threshold(config.threshold)),
        ProviderKind::RemoteApi => Box::new(RemoteProvider::from_config(&config.model)?),
    };
    let gateway = Gateway::new(provider, config.model.clone())?;
    match audit_log {
        Some(path) => Ok(gateway.with_audit_log(path)?),
        None => Ok(gateway),
    }
}

/// Runs the full assessment for one ingested report against a loaded graph.
pub fn assess_report(
    report: &BugReport,
    graph: &ExecutionGraph,
    gateway: &Gateway,
    templates: &TemplateSet,
) -> Result<QualityReport, RunError> {
    let indices = identify_s2r_sentences(report, gateway, templates)?;
    let s2rs = extract_individual_s2rs(report, &indices, gateway, templates)?;
    let traversal = traverse(graph, &s2rs, gateway, templates)?;
    Ok(assemble(&traversal, &s2rs, report, graph))
}

pub fn report_format_for(path: &Path) -> ReportFormat {
    if path.extension().is_some_and(|e| e == "json") {
        ReportFormat::Structured
    } else {
        ReportFormat::Plain
    }
}

/// Written outputs for one assessed report.
#[derive(Debug, Clone)]
pub struct AssessOutput {
    pub report_id: String,
    pub machine_path: PathBuf,
    pub human_path: PathBuf,
    pub summary_line: String,
}

/// Assesses one report file end to end, writing `<id>.report.json` and
/// `<id>.report.txt` into the output directory.
pub fn assess_file(
    report_path: &Path,
    graph: &ExecutionGraph,
    gateway: &Gateway,
    templates: &TemplateSet,
    out_dir: &Path,
) -> Result<Vec<AssessOutput>, RunError> {
    let reports = load_reports(report_path, report_format_for(report_path))?;
    let mut outputs = Vec::new();
    for report in &reports {
        let quality = assess_report(report, graph, gateway, templates)?;
        let machine_path = out_dir.join(format!("{}.report.json", report.id));
        let human_path = out_dir.join(format!("{}.report.txt", report.id));
        write_file(&machine_path, &render(&quality, RenderFormat::Machine))?;
        write_file(&human_path, &render(&quality, RenderFormat::Human))?;
        let s = &quality.summary;
        outputs.push(AssessOutput {
            report_id: report.id.clone(),
            machine_path,
            human_path,
            summary_line: format!(
                "{}: CS={} AS={} VM={} MS={}",
                report.id, s.cs, s.ambiguous, s.vm, s.ms
            ),
        });
    }
    Ok(outputs)
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalOutput {
    pub annotations: EvalMetrics,
    pub missing_steps: CategoryMetrics,
    pub report_count: usize,
}

fn collect_json_files(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>, RunError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|source| RunError::Io {
            path: dir.display().to_string(),
            source,
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .is_some_and(|n| n.to_string_lossy().ends_with(suffix))
        })
        .collect();
    paths.sort();
    Ok(paths)
}

/// Loads predicted machine reports (`*.report.json`) and ground truth files
/// (`*.truth.json`), matches them by report id, and scores annotations and
/// missing steps. Unmatched ids on either side are an error.
pub fn evaluate_dirs(predicted_dir: &Path, truth_dir: &Path) -> Result<EvalOutput, RunError> {
    let predicted_paths = collect_json_files(predicted_dir, ".report.json")?;
    let truth_paths = collect_json_files(truth_dir, ".truth.json")?;
    if predicted_paths.is_empty() {
        return Err(RunError::Usage(format!(
            "no predicted reports (*.report.json) in {}",
            predicted_dir.display()
        )));
    }
    if truth_paths.is_empty() {
        return Err(RunError::Usage(format!(
            "no ground truth files (*.truth.json) in {}",
            truth_dir.display()
        )));
    }
    let mut predicted: Vec<QualityReport> = Vec::new();
    for p in &predicted_paths {
        predicted.push(load_machine_report(p)?);
    }
    let mut truths: Vec<GroundTruth> = Vec::new();
    for p in &truth_paths {
        truths.push(load_ground_truth(p)?);
    }
    let mut truth_by_id: std::collections::BTreeMap<String, GroundTruth> = truths
        .into_iter()
        .map(|t| (t.report_id.clone(), t))
        .collect();
    let mut corpus = Vec::new();
    let mut unmatched_predicted = Vec::new();
    for report in predicted {
        match truth_by_id.remove(&report.report_id) {
            Some(truth) => corpus.push((report, truth)),
            None => unmatched_predicted.push(report.report_id),
        }
    }
    let unmatched_truth: Vec<String> = truth_by_id.into_keys().collect();
    if !unmatched_predicted.is_empty() || !unmatched_truth.is_empty() {
        return Err(RunError::Usage(format!(
            "unmatched report ids: predictions without truth {unmatched_predicted:?}, truths without prediction {unmatched_truth:?}"
        )));
    }
    Ok(EvalOutput {
        annotations: score_annotations(&corpus)?,
        missing_steps: score_missing_steps(&corpus)?,
        report_count: corpus.len(),
    })
}

/// Renders the metrics table printed by the eval command.
pub fn render_metrics_table(output: &EvalOutput) -> String {
    let mut out = String::new();
    out.push_str(&format!("Evaluated {} report(s)\n\n", output.report_count));
    out.push_str(&format!(
        "{:<10} {:>6} {:>6} {:>6} {:>10} {:>8} {:>8}\n",
        "Category", "TP", "FP", "FN", "Precision", "Recall", "F1"
    ));
    let row = |name: &str, m: &CategoryMetrics| {
        format!(
            "{:<10} {:>6} {:>6} {:>6} {:>10.3} {:>8.3} {:>8.3}{}\n",
            name,
            m.tp,
            m.fp,
            m.fn_,
            m.precision,
            m.recall,
            m.f1,
            if m.undefined { "  (undefined)" } else { "" }
        )
    };
    for (name, metrics) in &output.annotations.per_category {
        out.push_str(&row(name, metrics));
    }
    out.push_str(&row("Overall", &output.annotations.overall));
    out.push('\n');
    out.push_str(&row("Missing", &output.missing_steps));
    out
}

/// Serializes eval output as a machine-readable JSON document.
pub fn render_metrics_json(output: &EvalOutput) -> String {
    #[derive(Serialize)]
    struct Envelope<'a> {
        version: &'static str,
        #[serde(flatten)]
        output: &'a EvalOutput,
    }
    let mut s = serde_json::to_string_pretty(&Envelope {
        version: "1",
        output,
    })
    .expect("metrics serialize");
    s.push('\n');
    s
}
