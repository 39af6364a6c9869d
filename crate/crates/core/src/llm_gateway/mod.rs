//! Uniform interface to a language model for the three pipeline tasks:
//! sentence classification, individual step extraction, and the two-step
//! screen mapping (a yes/no gate followed by an interaction list).
//!
//! Two providers ship: a remote chat-completions API and a deterministic
//! offline oracle for testing and air-gapped use. Both run at temperature 0
//! and are driven through the same prompt templates, so the response parsers
//! exercise one code path regardless of provider.

mod mock;
mod remote;
mod templates;

pub use mock::{
    action_class, extract_slot_forms, is_s2r_sentence, mock_match_score, normalize_tokens,
    MockOracle, DEFAULT_MATCH_THRESHOLD,
};
pub use remote::RemoteProvider;
pub use templates::TemplateSet;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("unbound placeholder: {{{0}}}")]
    UnboundPlaceholder(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("provider error: {0}")]
    Provider(String),
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("cannot open audit log {path}: {source}")]
    Audit {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Identify,
    Extract,
    MapGate,
    MapList,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Identify => "identify",
            Task::Extract => "extract",
            Task::MapGate => "map_gate",
            Task::MapList => "map_list",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    ZeroShot,
}

#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub task: Task,
    pub strategy: Strategy,
    pub template_text: String,
    pub version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    RemoteApi,
    MockOracle,
}

/// Environment variable holding the remote provider API key.
pub const API_KEY_ENV: &str = "S2RQ_API_KEY";

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub provider: ProviderKind,
    pub model_name: String,
    /// Fixed at 0 to minimize nondeterminism; any other value is rejected.
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout: Duration,
    pub endpoint: Option<String>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            provider: ProviderKind::MockOracle,
            model_name: "mock".to_string(),
            temperature: 0.0,
            max_retries: 2,
            timeout: Duration::from_secs(60),
            endpoint: None,
        }
    }
}

/// Strict yes/no gate answer. Anything that does not parse as yes or no is
/// treated as "no"; callers log a warning in that case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateAnswer {
    pub maps: bool,
    pub raw_response: String,
}

pub fn parse_gate_answer(response: &str) -> GateAnswer {
    let token = response
        .split_whitespace()
        .next()
        .unwrap_or("")
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    GateAnswer {
        maps: token == "yes",
        raw_response: response.to_string(),
    }
}

/// True when the gate response was not a clean yes/no token.
pub fn gate_answer_malformed(response: &str) -> bool {
    let token = response
        .split_whitespace()
        .next()
        .unwrap_or("")
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    token != "yes" && token != "no"
}

/// Extracts the first bracketed integer list (`[1, 3, 5]`) from a response,
/// ignoring any surrounding prose. `[]` parses to an empty list.
pub fn parse_index_list(response: &str) -> Option<Vec<i64>> {
    let bytes = response.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'[' {
            if let Some(end) = response[i..].find(']') {
                let inner = &response[i + 1..i + end];
                let trimmed = inner.trim();
                if trimmed.is_empty() {
                    return Some(Vec::new());
                }
                let parsed: Result<Vec<i64>, _> = trimmed
                    .split(',')
                    .map(|p| p.trim().parse::<i64>())
                    .collect();
                if let Ok(values) = parsed {
                    return Some(values);
                }
                i += end + 1;
                continue;
            }
        }
        i += 1;
    }
    None
}

/// Extracts `index: [slots...]` lines from an extraction response, dropping
/// any other prose the model may have added.
pub fn parse_extraction_lines(response: &str) -> Vec<(i32, String)> {
    let mut out = Vec::new();
    for line in response.lines() {
        let line = line.trim();
        let Some(colon) = line.find(':') else {
            continue;
        };
        let Ok(index) = line[..colon].trim().parse::<i32>() else {
            continue;
        };
        let rest = line[colon + 1..].trim();
        if rest.starts_with('[') && rest.ends_with(']') {
            out.push((index, rest.to_string()));
        }
    }
    out
}

/// Textual view of one outgoing interaction, as listed in mapping prompts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionDescriptor {
    /// 1-based position in the prompt's interaction list.
    pub ordinal: usize,
    pub action: String,
    pub component_type: String,
    pub resource_id: String,
    pub text: String,
    pub description: String,
}

impl InteractionDescriptor {
    pub fn format_line(&self) -> String {
        fn clean(s: &str) -> String {
            s.replace('|', "/").replace('\n', " ")
        }
        format!(
            "{}. action={} | type={} | id={} | text={} | desc={}",
            self.ordinal,
            clean(&self.action),
            clean(&self.component_type),
            clean(&self.resource_id),
            clean(&self.text),
            clean(&self.description),
        )
    }

    pub fn parse_line(line: &str) -> Option<InteractionDescriptor> {
        let line = line.trim();
        let dot = line.find(". ")?;
        let ordinal: usize = line[..dot].trim().parse().ok()?;
        let mut action = String::new();
        let mut component_type = String::new();
        let mut resource_id = String::new();
        let mut text = String::new();
        let mut description = String::new();
        for part in line[dot + 2..].split(" | ") {
            let (key, value) = part.split_once('=')?;
            match key.trim() {
                "action" => action = value.to_string(),
                "type" => component_type = value.to_string(),
                "id" => resource_id = value.to_string(),
                "text" => text = value.to_string(),
                "desc" => description = value.to_string(),
                _ => {}
            }
        }
        Some(InteractionDescriptor {
            ordinal,
            action,
            component_type,
            resource_id,
            text,
            description,
        })
    }
}

/// What a provider sees for one call. Remote providers use `prompt`; the
/// mock oracle reads the structured `bindings` directly.
pub struct PromptRequest<'a> {
    pub task: Task,
    pub template_version: &'a str,
    pub prompt: &'a str,
    pub bindings: &'a BTreeMap<String, String>,
}

pub trait Provider: Send + Sync {
    fn kind(&self) -> ProviderKind;
    fn complete(&self, request: &PromptRequest<'_>) -> Result<String, GatewayError>;
}

#[derive(Serialize)]
struct AuditRecord<'a> {
    timestamp: String,
    task: &'static str,
    template_version: &'a str,
    prompt_hash: String,
    response: &'a str,
}

/// Shared, thread-safe entry point for all model calls. Retries transport
/// failures up to `max_retries` and appends an audit record per successful
/// call when an audit log is configured.
pub struct Gateway {
    provider: Box<dyn Provider>,
    config: ModelConfig,
    audit: Option<Mutex<std::fs::File>>,
    calls: AtomicU64,
}

impl Gateway {
    pub fn new(provider: Box<dyn Provider>, config: ModelConfig) -> Result<Gateway, GatewayError> {
        if config.temperature != 0.0 {
            return Err(GatewayError::InvalidConfig(format!(
                "temperature must be exactly 0, got {}",
                config.temperature
            )));
        }
        Ok(Gateway {
            provider,
            config,
            audit: None,
            calls: AtomicU64::new(0),
        })
    }

    pub fn with_audit_log(mut self, path: &Path) -> Result<Gateway, GatewayError> {
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| GatewayError::Audit {
                path: path.display().to_string(),
                source,
            })?;
        self.audit = Some(Mutex::new(file));
        Ok(self)
    }

    pub fn provider_kind(&self) -> ProviderKind {
        self.provider.kind()
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Number of provider calls issued so far (successful attempts).
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Fills the template, dispatches to the provider, and returns the raw
    /// response. Transport failures retry up to `max_retries`.
    pub fn complete(
        &self,
        template: &PromptTemplate,
        bindings: &BTreeMap<String, String>,
    ) -> Result<String, GatewayError> {
        let prompt = fill_template(&template.template_text, bindings)?;
        let request = PromptRequest {
            task: template.task,
            template_version: &template.version,
            prompt: &prompt,
            bindings,
        };
        let mut attempt = 0u32;
        loop {
            match self.provider.complete(&request) {
                Ok(response) => {
                    self.calls.fetch_add(1, Ordering::Relaxed);
                    self.log_audit(&request, &response);
                    return Ok(response);
                }
                Err(GatewayError::Transport(message)) => {
                    if attempt < self.config.max_retries {
                        attempt += 1;
                        log::warn!(
                            "transport failure (attempt {attempt}/{}): {message}",
                            self.config.max_retries
                        );
                        continue;
                    }
                    return Err(GatewayError::Transport(message));
                }
                Err(other) => return Err(other),
            }
        }
    }

    fn log_audit(&self, request: &PromptRequest<'_>, response: &str) {
        let Some(audit) = &self.audit else { return };
        let mut hasher = Sha256::new();
        hasher.update(request.prompt.as_bytes());
        let record = AuditRecord {
            timestamp: chrono::Utc::now().to_rfc3339(),
            task: request.task.as_str(),
            template_version: request.template_version,
            prompt_hash: hex::encode(hasher.finalize()),
            response,
        };
        if let Ok(mut file) = audit.lock() {
            let line = serde_json::to_string(&record).expect("audit record serializes");
            let _ = writeln!(file, "{line}");
        }
    }
}

/// Replaces `{name}` placeholders with bound values. A placeholder without a
/// binding is an error; braces introduced by the values themselves are left
/// alone.
pub fn fill_template(
    template: &str,
    bindings: &BTreeMap<String, String>,
) -> Result<String, GatewayError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close)
                if !after[..close].is_empty()
                    && after[..close]
                        .chars()
                        .all(|c| c.is_ascii_lowercase() || c == '_') =>
            {
                let name = &after[..close];
                let value = bindings
                    .get(name)
                    .ok_or_else(|| GatewayError::UnboundPlaceholder(name.to_string()))?;
                out.push_str(value);
                rest = &after[close + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}
