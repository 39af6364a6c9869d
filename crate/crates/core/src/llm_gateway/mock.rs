//! Deterministic offline oracle standing in for the language model.
//!
//! Sentence classification looks for action verbs; step extraction is a
//! small clause grammar over the verb lexicon; screen mapping scores
//! normalized-token overlap between the step's object phrases and the
//! interaction's text, description, and resource id, plus an additive bonus
//! when the step's verb class matches the edge's action kind. Everything is
//! a fixed, documented constant so the whole pipeline is bit-reproducible.

use std::collections::BTreeSet;

use super::{GatewayError, InteractionDescriptor, PromptRequest, Provider, ProviderKind, Task};
use crate::execution_model::ActionKind;

/// Scores at or above this count as a mapping.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.5;

/// Added to the overlap score when the step's verb class matches the edge's
/// action kind. Kept below the threshold so a compatible verb alone never
/// maps.
const ACTION_BONUS: f64 = 0.25;

/// Action-synonym lexicon: verb classes for edge-action compatibility.
const TAP_VERBS: &[&str] = &["tap", "click", "press", "select", "choose", "hit"];
const TYPE_VERBS: &[&str] = &["type", "enter", "input", "write", "fill"];
const SWIPE_VERBS: &[&str] = &["swipe", "scroll", "drag"];
const LONG_TAP_VERBS: &[&str] = &["hold"];
const LONG_TAP_PHRASES: &[&str] = &["long tap", "long press", "long click"];
const OPEN_VERBS: &[&str] = &["open", "launch", "start"];

/// Verbs that mark a sentence as describing a reproduction step but carry no
/// edge-action class. Unsupported device actions (rotate, shake) stay in so
/// they flow through extraction and surface as vocabulary mismatches at
/// mapping time.
const NEUTRAL_ACTION_VERBS: &[&str] = &[
    "navigate", "go", "change", "set", "toggle", "check", "uncheck", "add", "create", "remove",
    "delete", "install", "update", "turn", "visit", "enable", "disable", "rotate", "shake",
];

/// Tokens that mark expected-behavior prose; such sentences are never steps.
const EXPECTATION_GUARDS: &[&str] = &["should", "would", "expected", "supposed"];

const STOP_WORDS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our",
    "their", "i", "you", "he", "she", "it", "we", "they", "of", "to", "on", "in", "at", "for",
    "with", "from", "into", "onto", "and", "or", "is", "are", "was", "were", "be", "been", "s",
    "t",
];

const PREPOSITIONS: &[&str] = &[
    "on", "in", "at", "to", "for", "from", "with", "into", "onto", "of", "inside", "within",
];

/// Particles that attach directly to a verb ("tap on X", "navigate to X").
const VERB_PARTICLES: &[&str] = &["on", "to", "into", "at"];

const POSSESSIVES: &[&str] = &["my", "your", "his", "her", "our", "their"];

fn inflections(verb: &str) -> Vec<String> {
    let mut forms = vec![
        verb.to_string(),
        format!("{verb}s"),
        format!("{verb}es"),
        format!("{verb}ed"),
        format!("{verb}d"),
        format!("{verb}ing"),
    ];
    if let Some(stem) = verb.strip_suffix('e') {
        forms.push(format!("{stem}ing"));
    }
    if let Some(last) = verb.chars().last() {
        if !matches!(last, 'a' | 'e' | 'i' | 'o' | 'u') {
            forms.push(format!("{verb}{last}ed"));
            forms.push(format!("{verb}{last}ing"));
        }
    }
    forms
}

fn verb_matches(token: &str, verb: &str) -> bool {
    inflections(verb).iter().any(|f| f == token)
}

fn classed_verbs() -> [(ActionKind, &'static [&'static str]); 5] {
    [
        (ActionKind::Tap, TAP_VERBS),
        (ActionKind::Type, TYPE_VERBS),
        (ActionKind::Swipe, SWIPE_VERBS),
        (ActionKind::LongTap, LONG_TAP_VERBS),
        (ActionKind::OpenApp, OPEN_VERBS),
    ]
}

/// Classifies an action phrase into an edge-action class, or `None` for
/// verbs outside the lexicon ("navigate", "change", ...).
pub fn action_class(action_phrase: &str) -> Option<ActionKind> {
    let normalized = action_phrase
        .to_lowercase()
        .replace(['-', '_'], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    for phrase in LONG_TAP_PHRASES {
        // Inflection lives on the final word: "long tapped".
        if let Some((head, tail)) = phrase.rsplit_once(' ') {
            if let Some(rest) = normalized.strip_prefix(head) {
                let rest = rest.trim_start();
                if rest
                    .split_whitespace()
                    .next()
                    .is_some_and(|t| verb_matches(t, tail))
                {
                    return Some(ActionKind::LongTap);
                }
            }
        }
    }
    for token in normalized.split_whitespace() {
        for (kind, verbs) in classed_verbs() {
            if verbs.iter().any(|v| verb_matches(token, v)) {
                return Some(kind);
            }
        }
    }
    None
}

fn is_action_verb(token: &str) -> bool {
    classed_verbs()
        .iter()
        .any(|(_, verbs)| verbs.iter().any(|v| verb_matches(token, v)))
        || NEUTRAL_ACTION_VERBS.iter().any(|v| verb_matches(token, v))
        || ["long-tap", "long-press", "longtap", "longpress"]
            .iter()
            .any(|v| verb_matches(token, &v.replace('-', "")))
}

/// Lowercased alphanumeric tokens with stop words removed.
pub fn normalize_tokens(text: &str) -> BTreeSet<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| !STOP_WORDS.contains(t))
        .map(String::from)
        .collect()
}

fn dice(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let common = a.intersection(b).count();
    2.0 * common as f64 / (a.len() + b.len()) as f64
}

struct SlotView {
    action: String,
    object: String,
    object2: String,
}

impl SlotView {
    fn parse(s2r_text: &str) -> SlotView {
        let trimmed = s2r_text.trim();
        if trimmed.starts_with('[') {
            let mut groups = Vec::new();
            let mut rest = trimmed;
            while let Some(open) = rest.find('[') {
                let Some(close) = rest[open..].find(']') else {
                    break;
                };
                groups.push(rest[open + 1..open + close].trim().to_string());
                rest = &rest[open + close + 1..];
            }
            return SlotView {
                action: groups.first().cloned().unwrap_or_default(),
                object: groups.get(1).cloned().unwrap_or_default(),
                object2: groups.get(3).cloned().unwrap_or_default(),
            };
        }
        let mut words = trimmed.splitn(2, char::is_whitespace);
        SlotView {
            action: words.next().unwrap_or("").to_string(),
            object: words.next().unwrap_or("").to_string(),
            object2: String::new(),
        }
    }
}

/// Deterministic lexical stand-in for model-based step↔interaction mapping.
///
/// The score is the Dice coefficient between the step's object/object2
/// tokens and the interaction's {text, description, resource id} tokens,
/// plus a fixed bonus when the verb class matches the edge action,
/// clamped to 0..=1. Symmetric in the token sets and invariant to word
/// order.
pub fn mock_match_score(s2r_text: &str, interaction: &InteractionDescriptor) -> f64 {
    let slots = SlotView::parse(s2r_text);
    let mut step_tokens = normalize_tokens(&slots.object);
    step_tokens.extend(normalize_tokens(&slots.object2));
    let mut edge_tokens = normalize_tokens(&interaction.text);
    edge_tokens.extend(normalize_tokens(&interaction.description));
    edge_tokens.extend(normalize_tokens(&interaction.resource_id));
    let overlap = dice(&step_tokens, &edge_tokens);
    let compatible = match (
        action_class(&slots.action),
        ActionKind::parse(&interaction.action),
    ) {
        (Some(a), Some(b)) => a == b,
        _ => false,
    };
    let bonus = if compatible { ACTION_BONUS } else { 0.0 };
    (overlap + bonus).min(1.0)
}

/// True when a sentence describes a reproduction step: it contains an action
/// verb and no expected-behavior marker.
pub fn is_s2r_sentence(text: &str) -> bool {
    let tokens: Vec<String> = text
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric() && c != '-')
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect();
    if tokens
        .iter()
        .any(|t| EXPECTATION_GUARDS.contains(&t.as_str()))
    {
        return false;
    }
    tokens.iter().any(|t| is_action_verb(&t.replace('-', "")))
}

/// Extracts `[action][object]` / `[action][object][prep][object2]` slot
/// forms from one sentence. Clauses split on coordination; the object stops
/// at the first preposition (object2 follows) or, absent one, at a
/// possessive that starts an apposition ("a second service, my yearly...").
pub fn extract_slot_forms(sentence: &str) -> Vec<String> {
    let cleaned = sentence.trim().trim_end_matches(['.', '!', '?', ';']);
    let mut clauses: Vec<String> = vec![cleaned.to_string()];
    for sep in ["; ", ", and ", " and ", ", then ", " then "] {
        clauses = clauses
            .iter()
            .flat_map(|c| c.split(sep).map(String::from))
            .collect();
    }
    let mut out = Vec::new();
    for clause in clauses {
        let words: Vec<&str> = clause.split_whitespace().collect();
        let Some(verb_at) = words.iter().position(|w| {
            let token = w
                .to_lowercase()
                .trim_matches(|c: char| !c.is_alphanumeric())
                .to_string();
            !token.is_empty() && is_action_verb(&token)
        }) else {
            continue;
        };
        let action = words[verb_at].trim_matches(|c: char| !c.is_alphanumeric() && c != '-');
        let mut rest: Vec<&str> = words[verb_at + 1..].to_vec();
        if rest.len() > 1 && VERB_PARTICLES.contains(&rest[0].to_lowercase().as_str()) {
            rest.remove(0);
        }
        if rest.is_empty() {
            continue;
        }
        let lowered: Vec<String> = rest.iter().map(|w| w.to_lowercase()).collect();
        let prep_at = (1..rest.len().saturating_sub(1))
            .find(|&i| PREPOSITIONS.contains(&lowered[i].as_str()));
        let form = if let Some(i) = prep_at {
            format!(
                "[{}][{}][{}][{}]",
                action,
                rest[..i].join(" "),
                rest[i],
                rest[i + 1..].join(" ")
            )
        } else {
            let cut = (1..rest.len())
                .find(|&i| POSSESSIVES.contains(&lowered[i].as_str()))
                .unwrap_or(rest.len());
            format!("[{}][{}]", action, rest[..cut].join(" "))
        };
        out.push(form);
    }
    out
}

fn dedup_key(form: &str) -> (String, BTreeSet<String>) {
    let slots = SlotView::parse(form);
    let class = action_class(&slots.action)
        .map(|k| k.as_str().to_string())
        .unwrap_or_else(|| stem(&slots.action));
    let mut tokens = normalize_tokens(&slots.object);
    tokens.extend(normalize_tokens(&slots.object2));
    (class, tokens)
}

fn stem(verb: &str) -> String {
    let v = verb.to_lowercase();
    for suffix in ["ing", "ied", "ed", "es", "s"] {
        if let Some(stripped) = v.strip_suffix(suffix) {
            if stripped.len() >= 3 {
                return stripped
                    .trim_end_matches(|c| {
                        // "tapped" -> "tapp" -> "tap"
                        stripped.len() >= 4 && stripped.ends_with(c) && {
                            let chars: Vec<char> = stripped.chars().collect();
                            chars[chars.len() - 1] == chars[chars.len() - 2]
                        }
                    })
                    .to_string();
            }
        }
    }
    v
}

/// The offline provider. Answers all four task prompts deterministically
/// from the structured bindings.
#[derive(Debug, Clone)]
pub struct MockOracle {
    pub threshold: f64,
}

impl Default for MockOracle {
    fn default() -> Self {
        MockOracle {
            threshold: DEFAULT_MATCH_THRESHOLD,
        }
    }
}

impl MockOracle {
    pub fn with_threshold(threshold: f64) -> Self {
        MockOracle { threshold }
    }

    fn binding<'a>(request: &'a PromptRequest<'_>, name: &str) -> Result<&'a String, GatewayError> {
        request
            .bindings
            .get(name)
            .ok_or_else(|| GatewayError::Provider(format!("mock oracle: missing binding '{name}'")))
    }

    fn numbered_lines(raw: &str) -> Vec<(i32, String)> {
        raw.lines()
            .filter_map(|line| {
                let (idx, text) = line.split_once(':')?;
                Some((idx.trim().parse::<i32>().ok()?, text.trim().to_string()))
            })
            .collect()
    }

    fn identify(&self, request: &PromptRequest<'_>) -> Result<String, GatewayError> {
        let sentences = Self::binding(request, "sentences")?;
        let hits: Vec<String> = Self::numbered_lines(sentences)
            .into_iter()
            .filter(|(_, text)| is_s2r_sentence(text))
            .map(|(idx, _)| idx.to_string())
            .collect();
        Ok(format!("[{}]", hits.join(", ")))
    }

    fn extract(&self, request: &PromptRequest<'_>) -> Result<String, GatewayError> {
        let sentences = Self::binding(request, "sentences")?;
        let mut seen = BTreeSet::new();
        let mut lines = Vec::new();
        for (idx, text) in Self::numbered_lines(sentences) {
            for form in extract_slot_forms(&text) {
                if seen.insert(dedup_key(&form)) {
                    lines.push(format!("{idx}: {form}"));
                }
            }
        }
        Ok(lines.join("\n"))
    }

    fn scored_ordinals(&self, request: &PromptRequest<'_>) -> Result<Vec<usize>, GatewayError> {
        let s2r = Self::binding(request, "s2r")?;
        let interactions = Self::binding(request, "interactions")?;
        let mut hits = Vec::new();
        for line in interactions.lines() {
            if let Some(descriptor) = InteractionDescriptor::parse_line(line) {
                if mock_match_score(s2r, &descriptor) >= self.threshold {
                    hits.push(descriptor.ordinal);
                }
            }
        }
        Ok(hits)
    }

    fn map_gate(&self, request: &PromptRequest<'_>) -> Result<String, GatewayError> {
        Ok(if self.scored_ordinals(request)?.is_empty() {
            "no".to_string()
        } else {
            "yes".to_string()
        })
    }

    fn map_list(&self, request: &PromptRequest<'_>) -> Result<String, GatewayError> {
        let hits: Vec<String> = self
            .scored_ordinals(request)?
            .into_iter()
            .map(|o| o.to_string())
            .collect();
        Ok(format!("[{}]", hits.join(", ")))
    }
}

impl Provider for MockOracle {
    fn kind(&self) -> ProviderKind {
        ProviderKind::MockOracle
    }

    fn complete(&self, request: &PromptRequest<'_>) -> Result<String, GatewayError> {
        match request.task {
            Task::Identify => self.identify(request),
            Task::Extract => self.extract(request),
            Task::MapGate => self.map_gate(request),
            Task::MapList => self.map_list(request),
        }
    }
}
