//! C ABI over the core pipeline: opaque handles, integer status codes, and
//! caller-freed strings. The generated header lands in `include/s2rq.h`.
//!
//! Conventions:
//! - Functions returning a pointer return NULL on failure.
//! - Functions returning `S2rqStatus` return `S2RQ_STATUS_OK` (0) on
//!   success.
//! - On failure, `s2rq_last_error` returns a thread-local message.
//! - Strings returned by the library are freed with `s2rq_string_free`;
//!   graph handles with `s2rq_graph_free`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::path::Path;

use libc::{c_char, c_double, c_int};

use s2rq::config::Config;
use s2rq::execution_model::{load_graph, ExecutionGraph};
use s2rq::llm_gateway::TemplateSet;
use s2rq::pipeline;
use s2rq::quality_report::{render, RenderFormat};
use s2rq::report_ingest::load_reports;

/// Status codes returned by fallible functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum S2rqStatus {
    Ok = 0,
    InvalidArgument = 1,
    Io = 2,
    Parse = 3,
    Pipeline = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let cleaned = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).ok();
    });
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().take());
}

/// Opaque handle to a loaded execution graph.
pub struct S2rqGraph {
    graph: ExecutionGraph,
}

unsafe fn path_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a Path, String> {
    if ptr.is_null() {
        return Err(format!("{name} is NULL"));
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => Err(format!("{name} is not valid UTF-8")),
    }
}

fn string_out(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(std::ptr::null_mut(), CString::into_raw)
}

/// Last error message for this thread, or NULL when the previous call
/// succeeded. Free with `s2rq_string_free`.
#[no_mangle]
pub extern "C" fn s2rq_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow().as_ref().map_or(std::ptr::null_mut(), |msg| {
            CString::new(msg.as_bytes()).map_or(std::ptr::null_mut(), CString::into_raw)
        })
    })
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by an `s2rq_*` function and not
/// yet freed; NULL is accepted.
#[no_mangle]
pub unsafe extern "C" fn s2rq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads an execution graph file. Returns NULL on failure.
///
/// # Safety
/// `path` must be a valid NUL-terminated string or NULL.
#[no_mangle]
pub unsafe extern "C" fn s2rq_graph_load(path: *const c_char) -> *mut S2rqGraph {
    clear_last_error();
    let path = match path_arg(path, "path") {
        Ok(p) => p,
        Err(e) => {
            set_last_error(e);
            return std::ptr::null_mut();
        }
    };
    match load_graph(path) {
        Ok(graph) => Box::into_raw(Box::new(S2rqGraph { graph })),
        Err(e) => {
            set_last_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Builds a graph from a directory of trace files and writes it to
/// `out_path`, returning the loaded handle. Returns NULL on failure.
///
/// # Safety
/// Both arguments must be valid NUL-terminated strings or NULL.
#[no_mangle]
pub unsafe extern "C" fn s2rq_graph_build(
    trace_dir: *const c_char,
    out_path: *const c_char,
) -> *mut S2rqGraph {
    clear_last_error();
    let run = || -> Result<ExecutionGraph, String> {
        let traces = path_arg(trace_dir, "trace_dir")?;
        let out = path_arg(out_path, "out_path")?;
        pipeline::build_graph_from_dir(traces, out).map_err(|e| e.to_string())?;
        load_graph(out).map_err(|e| e.to_string())
    };
    match run() {
        Ok(graph) => Box::into_raw(Box::new(S2rqGraph { graph })),
        Err(e) => {
            set_last_error(e);
            std::ptr::null_mut()
        }
    }
}

/// Frees a graph handle.
///
/// # Safety
/// `graph` must be a pointer previously returned by `s2rq_graph_load` or
/// `s2rq_graph_build` and not yet freed; NULL is accepted.
#[no_mangle]
pub unsafe extern "C" fn s2rq_graph_free(graph: *mut S2rqGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Number of screens in the graph, including the synthetic start node.
///
/// # Safety
/// `graph` must be a valid handle or NULL (which returns -1).
#[no_mangle]
pub unsafe extern "C" fn s2rq_graph_node_count(graph: *const S2rqGraph) -> c_int {
    graph.as_ref().map_or(-1, |g| g.graph.nodes.len() as c_int)
}

/// Number of interaction edges in the graph.
///
/// # Safety
/// `graph` must be a valid handle or NULL (which returns -1).
#[no_mangle]
pub unsafe extern "C" fn s2rq_graph_edge_count(graph: *const S2rqGraph) -> c_int {
    graph.as_ref().map_or(-1, |g| g.graph.edges.len() as c_int)
}

/// Assesses one bug report file against the graph with the offline provider
/// and stores the quality report into `out_document`: machine JSON when
/// `machine_format` is nonzero, human text otherwise. `threshold` is the
/// offline match threshold; pass a value outside 0..=1 for the default.
///
/// # Safety
/// `graph` must be a valid handle; `report_path` a valid NUL-terminated
/// string; `out_document` a valid non-NULL destination pointer.
#[no_mangle]
pub unsafe extern "C" fn s2rq_assess_report(
    graph: *const S2rqGraph,
    report_path: *const c_char,
    threshold: c_double,
    machine_format: c_int,
    out_document: *mut *mut c_char,
) -> S2rqStatus {
    clear_last_error();
    if out_document.is_null() {
        set_last_error("out_document is NULL".to_string());
        return S2rqStatus::InvalidArgument;
    }
    *out_document = std::ptr::null_mut();
    let Some(handle) = graph.as_ref() else {
        set_last_error("graph is NULL".to_string());
        return S2rqStatus::InvalidArgument;
    };
    let path = match path_arg(report_path, "report_path") {
        Ok(p) => p,
        Err(e) => {
            set_last_error(e);
            return S2rqStatus::InvalidArgument;
        }
    };
    let mut config = Config::default();
    if (0.0..=1.0).contains(&threshold) {
        config.threshold = threshold;
    }
    let run = || -> Result<String, (S2rqStatus, String)> {
        let gateway = pipeline::make_gateway(&config, None)
            .map_err(|e| (S2rqStatus::Pipeline, e.to_string()))?;
        let reports = load_reports(path, pipeline::report_format_for(path))
            .map_err(|e| (S2rqStatus::Parse, e.to_string()))?;
        let templates = TemplateSet::zero_shot();
        let format = if machine_format != 0 {
            RenderFormat::Machine
        } else {
            RenderFormat::Human
        };
        let mut out = String::new();
        for report in &reports {
            let quality = pipeline::assess_report(report, &handle.graph, &gateway, &templates)
                .map_err(|e| (S2rqStatus::Pipeline, e.to_string()))?;
            out.push_str(&render(&quality, format));
        }
        Ok(out)
    };
    match run() {
        Ok(document) => {
            *out_document = string_out(document);
            S2rqStatus::Ok
        }
        Err((status, message)) => {
            set_last_error(message);
            status
        }
    }
}

/// Scores predicted reports against ground truth and stores the metrics
/// document (JSON) into `out_metrics`.
///
/// # Safety
/// Directory arguments must be valid NUL-terminated strings; `out_metrics`
/// a valid non-NULL destination pointer.
#[no_mangle]
pub unsafe extern "C" fn s2rq_evaluate(
    predicted_dir: *const c_char,
    truth_dir: *const c_char,
    out_metrics: *mut *mut c_char,
) -> S2rqStatus {
    clear_last_error();
    if out_metrics.is_null() {
        set_last_error("out_metrics is NULL".to_string());
        return S2rqStatus::InvalidArgument;
    }
    *out_metrics = std::ptr::null_mut();
    let run = || -> Result<String, (S2rqStatus, String)> {
        let predicted = path_arg(predicted_dir, "predicted_dir")
            .map_err(|e| (S2rqStatus::InvalidArgument, e))?;
        let truth =
            path_arg(truth_dir, "truth_dir").map_err(|e| (S2rqStatus::InvalidArgument, e))?;
        let output = pipeline::evaluate_dirs(predicted, truth)
            .map_err(|e| (S2rqStatus::Pipeline, e.to_string()))?;
        Ok(pipeline::render_metrics_json(&output))
    };
    match run() {
        Ok(document) => {
            *out_metrics = string_out(document);
            S2rqStatus::Ok
        }
        Err((status, message)) => {
            set_last_error(message);
            status
        }
    }
}
