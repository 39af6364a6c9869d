//! Exercises the C ABI end to end from Rust: handle lifecycle, status
//! codes, error reporting, and the string ownership contract.

use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};

use libc::c_char;

use s2rq_ffi::*;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(rel)
}

fn c_path(path: &Path) -> CString {
    CString::new(path.to_str().unwrap()).unwrap()
}

fn take_string(ptr: *mut c_char) -> String {
    assert!(!ptr.is_null());
    let s = unsafe { CStr::from_ptr(ptr) }
        .to_string_lossy()
        .into_owned();
    unsafe { s2rq_string_free(ptr) };
    s
}

fn last_error() -> Option<String> {
    let ptr = s2rq_last_error();
    if ptr.is_null() {
        None
    } else {
        Some(take_string(ptr))
    }
}

#[test]
fn build_load_and_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("graph.json");
    let traces = c_path(&fixture("traces"));
    let out_c = c_path(&out);
    let graph = unsafe { s2rq_graph_build(traces.as_ptr(), out_c.as_ptr()) };
    assert!(!graph.is_null(), "build failed: {:?}", last_error());
    unsafe {
        assert_eq!(s2rq_graph_node_count(graph), 5);
        assert_eq!(s2rq_graph_edge_count(graph), 9);
        s2rq_graph_free(graph);
    }

    let reloaded = unsafe { s2rq_graph_load(out_c.as_ptr()) };
    assert!(!reloaded.is_null());
    unsafe {
        assert_eq!(s2rq_graph_node_count(reloaded), 5);
        s2rq_graph_free(reloaded);
    }
}

#[test]
fn assess_returns_machine_document() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("graph.json");
    let traces = c_path(&fixture("traces"));
    let out_c = c_path(&out);
    let graph = unsafe { s2rq_graph_build(traces.as_ptr(), out_c.as_ptr()) };
    assert!(!graph.is_null());

    let report = c_path(&fixture("reports/mileage-65.json"));
    let mut document: *mut c_char = std::ptr::null_mut();
    let status = unsafe { s2rq_assess_report(graph, report.as_ptr(), -1.0, 1, &mut document) };
    assert_eq!(status, S2rqStatus::Ok, "assess failed: {:?}", last_error());
    let json = take_string(document);
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed["report"]["report_id"], "mileage-65");
    assert_eq!(parsed["report"]["summary"]["ms"], 2);

    // Human format is plain text.
    let mut human: *mut c_char = std::ptr::null_mut();
    let status = unsafe { s2rq_assess_report(graph, report.as_ptr(), 0.5, 0, &mut human) };
    assert_eq!(status, S2rqStatus::Ok);
    let text = take_string(human);
    assert!(text.contains("[VM] [Change][the phone setting]"));

    unsafe { s2rq_graph_free(graph) };
}

#[test]
fn evaluate_directories() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("graph.json");
    let traces = c_path(&fixture("traces"));
    let out_c = c_path(&out);
    let graph = unsafe { s2rq_graph_build(traces.as_ptr(), out_c.as_ptr()) };
    assert!(!graph.is_null());

    // Produce predictions for the whole fixture corpus via the core crate.
    let loaded = s2rq::execution_model::load_graph(&out).unwrap();
    let gateway = s2rq::pipeline::make_gateway(&s2rq::config::Config::default(), None).unwrap();
    let templates = s2rq::llm_gateway::TemplateSet::zero_shot();
    let pred_dir = dir.path().join("pred");
    std::fs::create_dir(&pred_dir).unwrap();
    for name in ["mileage-65.json", "empty-9.json", "rotation-12.json"] {
        s2rq::pipeline::assess_file(
            &fixture(&format!("reports/{name}")),
            &loaded,
            &gateway,
            &templates,
            &pred_dir,
        )
        .unwrap();
    }

    let pred = c_path(&pred_dir);
    let truth = c_path(&fixture("truth"));
    let mut metrics: *mut c_char = std::ptr::null_mut();
    let status = unsafe { s2rq_evaluate(pred.as_ptr(), truth.as_ptr(), &mut metrics) };
    assert_eq!(status, S2rqStatus::Ok, "eval failed: {:?}", last_error());
    let parsed: serde_json::Value = serde_json::from_str(&take_string(metrics)).unwrap();
    assert_eq!(parsed["annotations"]["overall"]["f1"], 1.0);
    assert_eq!(parsed["report_count"], 3);

    unsafe { s2rq_graph_free(graph) };
}

#[test]
fn failures_set_status_and_message() {
    let missing = c_path(Path::new("/nonexistent/graph.json"));
    let graph = unsafe { s2rq_graph_load(missing.as_ptr()) };
    assert!(graph.is_null());
    let message = last_error().expect("error message set");
    assert!(message.contains("graph.json"), "message: {message}");

    let mut out: *mut c_char = std::ptr::null_mut();
    let status =
        unsafe { s2rq_assess_report(std::ptr::null(), missing.as_ptr(), 0.5, 1, &mut out) };
    assert_eq!(status, S2rqStatus::InvalidArgument);
    assert!(out.is_null());
    assert!(last_error().unwrap().contains("NULL"));

    unsafe {
        assert_eq!(s2rq_graph_node_count(std::ptr::null()), -1);
        s2rq_graph_free(std::ptr::null_mut());
        s2rq_string_free(std::ptr::null_mut());
    }
}

#[test]
fn generated_header_covers_the_surface() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/s2rq.h");
    let text = std::fs::read_to_string(header).expect("header generated at build time");
    for symbol in [
        "s2rq_graph_load",
        "s2rq_graph_build",
        "s2rq_graph_free",
        "s2rq_graph_node_count",
        "s2rq_graph_edge_count",
        "s2rq_assess_report",
        "s2rq_evaluate",
        "s2rq_last_error",
        "s2rq_string_free",
        "S2RQ_STATUS_OK",
    ] {
        assert!(text.contains(symbol), "header is missing {symbol}");
    }
}
