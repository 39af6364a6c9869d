//! Quality assessment for reproduction steps ("S2Rs") in textual bug reports.
//!
//! The pipeline ingests a bug report, identifies the sentences that describe
//! reproduction steps, extracts each atomic step in a
//! `[action][object][preposition][object2]` slot format, and maps the steps
//! onto a directed execution graph of GUI screens and interactions. Every
//! step is labeled Correct (maps to exactly one interaction), Ambiguous
//! (maps to several interactions on one screen), or Vocabulary Mismatch
//! (maps to nothing), and gaps between mapped interactions are filled with
//! synthesized Missing Steps. An evaluation harness scores generated reports
//! against ground truth with per-category precision/recall/F1.

pub mod config;
pub mod evaluation;
pub mod execution_model;
pub mod llm_gateway;
pub mod mapping_engine;
pub mod pipeline;
pub mod quality_report;
pub mod report_ingest;
pub mod s2r_pipeline;
