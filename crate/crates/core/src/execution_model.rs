//! The app execution model: a directed graph of unique GUI screens and the
//! interactions that move between them.
//!
//! Nodes are screens identified by a canonical hash of their component
//! hierarchy (type, resource id, child index — labels excluded, since typed
//! text would otherwise fragment the graph). Edges are unique
//! (source, target, action, component) tuples. A synthetic start node holds
//! one `open_app` edge per distinct launch screen observed in the traces.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const GRAPH_FORMAT_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("trace {path}, record {record}: {message}")]
    Trace {
        path: String,
        record: usize,
        message: String,
    },
    #[error("trace {path}: {message}")]
    TraceHeader { path: String, message: String },
    #[error("unsupported action '{action}' in {path}, record {record}")]
    UnsupportedAction {
        path: String,
        record: usize,
        action: String,
    },
    #[error("graph file {path}: unsupported schema version '{found}', expected '{expected}'")]
    VersionMismatch {
        path: String,
        found: String,
        expected: String,
    },
    #[error("graph file {path} is corrupt: {message}")]
    Corrupt { path: String, message: String },
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("graph has no start node")]
    NoStartNode,
    #[error("nodes unreachable from the start node: {0:?}")]
    UnreachableNodes(Vec<NodeId>),
    #[error("no traces provided")]
    NoTraces,
    #[error("trace {path}: app id '{found}' does not match '{expected}'")]
    AppIdMismatch {
        path: String,
        found: String,
        expected: String,
    },
}

/// Stable screen identifier: hex digest of the canonical hierarchy hash.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub String);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Tap,
    LongTap,
    Type,
    Swipe,
    OpenApp,
}

impl ActionKind {
    pub fn parse(s: &str) -> Option<ActionKind> {
        match s {
            "tap" => Some(ActionKind::Tap),
            "long_tap" => Some(ActionKind::LongTap),
            "type" => Some(ActionKind::Type),
            "swipe" => Some(ActionKind::Swipe),
            "open_app" => Some(ActionKind::OpenApp),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ActionKind::Tap => "tap",
            ActionKind::LongTap => "long_tap",
            ActionKind::Type => "type",
            ActionKind::Swipe => "swipe",
            ActionKind::OpenApp => "open_app",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A GUI component. `children` is populated in screen hierarchies and empty
/// on edge metadata, which only records the interacted component itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuiComponent {
    #[serde(rename = "type")]
    pub component_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub child_index: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<GuiComponent>,
}

impl GuiComponent {
    /// Identity used in edge uniqueness: (type, resource id, text). Text is
    /// included because same-typed siblings are often distinguished only by
    /// their label.
    pub fn identity_key(&self) -> (String, String, String) {
        (
            self.component_type.clone(),
            self.resource_id.clone().unwrap_or_default(),
            self.text.clone().unwrap_or_default(),
        )
    }

    fn without_children(&self) -> GuiComponent {
        GuiComponent {
            children: Vec::new(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenNode {
    pub node_id: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activity_name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub component_tree: Vec<GuiComponent>,
    #[serde(default)]
    pub is_start: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEdge {
    pub edge_id: u32,
    pub source: NodeId,
    pub target: NodeId,
    pub action: ActionKind,
    pub component: GuiComponent,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub typed_text: Option<String>,
}

type EdgeTupleKey = (NodeId, NodeId, ActionKind, (String, String, String));

impl InteractionEdge {
    fn tuple_key(&self) -> EdgeTupleKey {
        (
            self.source.clone(),
            self.target.clone(),
            self.action,
            self.component.identity_key(),
        )
    }

    /// Canonical ordering key; edge_id ordinals are assigned in this order so
    /// they do not depend on trace file order.
    fn canonical_key(&self) -> (String, u8, String, String, String, String) {
        let (t, id, text) = self.component.identity_key();
        (
            self.source.0.clone(),
            self.action as u8,
            t,
            id,
            text,
            self.target.0.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionGraph {
    pub app_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub app_label: Option<String>,
    pub nodes: Vec<ScreenNode>,
    pub edges: Vec<InteractionEdge>,
    #[serde(skip)]
    adjacency: BTreeMap<NodeId, Vec<u32>>,
}

impl ExecutionGraph {
    /// Assembles a graph from explicit nodes and edges: edge ordinals are
    /// reassigned in canonical order, duplicates by (source, target, action,
    /// component identity) merge, and the usual invariants are enforced
    /// (every endpoint exists, exactly one start node, everything reachable
    /// from it).
    pub fn from_parts(
        app_id: impl Into<String>,
        nodes: Vec<ScreenNode>,
        edges: Vec<InteractionEdge>,
    ) -> Result<ExecutionGraph, GraphError> {
        let mut unique = BTreeSet::new();
        let mut edges: Vec<InteractionEdge> = edges
            .into_iter()
            .filter(|e| unique.insert(e.tuple_key()))
            .collect();
        edges.sort_by_key(|e| e.canonical_key());
        for (i, e) in edges.iter_mut().enumerate() {
            e.edge_id = i as u32;
        }
        if nodes.iter().filter(|n| n.is_start).count() != 1 {
            return Err(GraphError::NoStartNode);
        }
        let mut graph = ExecutionGraph {
            app_id: app_id.into(),
            app_label: None,
            nodes,
            edges,
            adjacency: BTreeMap::new(),
        };
        graph.rebuild_adjacency();
        graph.validate("<parts>")?;
        Ok(graph)
    }

    pub fn start_node(&self) -> Result<&ScreenNode, GraphError> {
        self.nodes
            .iter()
            .find(|n| n.is_start)
            .ok_or(GraphError::NoStartNode)
    }

    pub fn node(&self, id: &NodeId) -> Option<&ScreenNode> {
        self.nodes.iter().find(|n| &n.node_id == id)
    }

    pub fn edge(&self, edge_id: u32) -> Option<&InteractionEdge> {
        self.edges.get(edge_id as usize)
    }

    /// Outgoing edges of `node`, sorted by edge_id for deterministic
    /// iteration.
    pub fn outgoing(&self, node: &NodeId) -> Result<Vec<&InteractionEdge>, GraphError> {
        if self.node(node).is_none() {
            return Err(GraphError::UnknownNode(node.clone()));
        }
        Ok(self
            .adjacency
            .get(node)
            .map(|ids| ids.iter().map(|&i| &self.edges[i as usize]).collect())
            .unwrap_or_default())
    }

    fn rebuild_adjacency(&mut self) {
        let mut adj: BTreeMap<NodeId, Vec<u32>> = BTreeMap::new();
        for e in &self.edges {
            adj.entry(e.source.clone()).or_default().push(e.edge_id);
        }
        for ids in adj.values_mut() {
            ids.sort_unstable();
        }
        self.adjacency = adj;
    }

    fn validate(&self, path: &str) -> Result<(), GraphError> {
        let start = self.start_node()?;
        let node_ids: BTreeSet<&NodeId> = self.nodes.iter().map(|n| &n.node_id).collect();
        for e in &self.edges {
            if !node_ids.contains(&e.source) || !node_ids.contains(&e.target) {
                return Err(GraphError::Corrupt {
                    path: path.to_string(),
                    message: format!("edge {} references a missing node", e.edge_id),
                });
            }
        }
        // Reachability: every node must be reachable from the start node.
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.node_id.clone());
        queue.push_back(start.node_id.clone());
        while let Some(n) = queue.pop_front() {
            if let Some(ids) = self.adjacency.get(&n) {
                for &i in ids {
                    let t = &self.edges[i as usize].target;
                    if seen.insert(t.clone()) {
                        queue.push_back(t.clone());
                    }
                }
            }
        }
        let unreachable: Vec<NodeId> = self
            .nodes
            .iter()
            .map(|n| n.node_id.clone())
            .filter(|id| !seen.contains(id))
            .collect();
        if !unreachable.is_empty() {
            return Err(GraphError::UnreachableNodes(unreachable));
        }
        Ok(())
    }
}

/// Canonical screen hash over (type, resource id, child index) in preorder.
/// Text and description are excluded: labels are often dynamic and would
/// fragment the graph.
pub fn screen_hash(components: &[GuiComponent]) -> NodeId {
    let mut hasher = Sha256::new();
    fn feed(h: &mut Sha256, c: &GuiComponent, depth: usize) {
        h.update(depth.to_le_bytes());
        h.update(c.child_index.to_le_bytes());
        h.update(c.component_type.as_bytes());
        h.update([0u8]);
        h.update(c.resource_id.as_deref().unwrap_or("").as_bytes());
        h.update([1u8]);
        for child in &c.children {
            feed(h, child, depth + 1);
        }
    }
    for c in components {
        feed(&mut hasher, c, 0);
    }
    let digest = hasher.finalize();
    NodeId(hex::encode(&digest[..16]))
}

fn start_node_id(app_id: &str) -> NodeId {
    let mut hasher = Sha256::new();
    hasher.update(b"start:");
    hasher.update(app_id.as_bytes());
    let digest = hasher.finalize();
    NodeId(hex::encode(&digest[..16]))
}

// ---------------------------------------------------------------------------
// Trace files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    Automated,
    Manual,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceScreen {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activity: Option<String>,
    pub components: Vec<GuiComponent>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceAction {
    pub kind: String,
    /// Child-index path into the previous screen's component tree; the first
    /// element selects a root. Absent for `open_app`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_component_path: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub typed_text: Option<String>,
}

/// One step: `action` was performed on the previous step's screen and
/// produced `screen`. The first step's action must be `open_app`, and its
/// screen is the launch screen.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceStep {
    pub action: TraceAction,
    pub screen: TraceScreen,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trace {
    pub app_id: String,
    /// Human-readable app name; used as the `open_app` edge label. Defaults
    /// to `app_id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub app_label: Option<String>,
    pub source: TraceSource,
    pub steps: Vec<TraceStep>,
}

/// Parses and validates one trace file. Schema violations report the record
/// index and offending field.
pub fn parse_trace(path: &Path) -> Result<Trace, GraphError> {
    let raw = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let trace: Trace = serde_json::from_str(&raw).map_err(|e| GraphError::TraceHeader {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let p = path.display().to_string();
    if trace.steps.is_empty() {
        return Err(GraphError::TraceHeader {
            path: p,
            message: "trace has no steps".to_string(),
        });
    }
    for (i, step) in trace.steps.iter().enumerate() {
        let kind =
            ActionKind::parse(&step.action.kind).ok_or_else(|| GraphError::UnsupportedAction {
                path: p.clone(),
                record: i,
                action: step.action.kind.clone(),
            })?;
        if i == 0 {
            if kind != ActionKind::OpenApp {
                return Err(GraphError::Trace {
                    path: p,
                    record: 0,
                    message: "first record must be open_app".to_string(),
                });
            }
        } else {
            if kind == ActionKind::OpenApp {
                return Err(GraphError::Trace {
                    path: p,
                    record: i,
                    message: "open_app is only valid as the first record".to_string(),
                });
            }
            if step.action.target_component_path.is_none() {
                return Err(GraphError::Trace {
                    path: p,
                    record: i,
                    message: "missing field: target_component_path".to_string(),
                });
            }
        }
        if step.screen.components.is_empty() {
            return Err(GraphError::Trace {
                path: p,
                record: i,
                message: "screen has no components".to_string(),
            });
        }
    }
    Ok(trace)
}

fn resolve_component<'a>(roots: &'a [GuiComponent], path: &[usize]) -> Option<&'a GuiComponent> {
    let (&root, rest) = path.split_first()?;
    let mut current = roots.get(root)?;
    for &idx in rest {
        current = current.children.get(idx)?;
    }
    Some(current)
}

fn assign_child_indices(components: &mut [GuiComponent]) {
    for (i, c) in components.iter_mut().enumerate() {
        c.child_index = i;
        assign_child_indices(&mut c.children);
    }
}

/// Builds the execution graph from parsed traces. Screens with identical
/// canonical hierarchies merge into one node; duplicate edge tuples merge
/// (the first typed_text observed is kept). Trace order never affects node
/// identities or edge ordinals.
pub fn build_graph(traces: &[Trace], app_id: &str) -> Result<ExecutionGraph, GraphError> {
    if traces.is_empty() {
        return Err(GraphError::NoTraces);
    }
    let mut app_label = None;
    for t in traces {
        if t.app_id != app_id {
            return Err(GraphError::AppIdMismatch {
                path: String::new(),
                found: t.app_id.clone(),
                expected: app_id.to_string(),
            });
        }
        if app_label.is_none() {
            app_label = t.app_label.clone();
        }
    }

    let start_id = start_node_id(app_id);
    let mut nodes: BTreeMap<NodeId, ScreenNode> = BTreeMap::new();
    nodes.insert(
        start_id.clone(),
        ScreenNode {
            node_id: start_id.clone(),
            activity_name: None,
            component_tree: Vec::new(),
            is_start: true,
        },
    );

    let mut edge_set: BTreeSet<EdgeTupleKey> = BTreeSet::new();
    let mut edges: Vec<InteractionEdge> = Vec::new();

    for trace in traces {
        let mut prev: Option<(NodeId, Vec<GuiComponent>)> = None;
        for (i, step) in trace.steps.iter().enumerate() {
            let mut components = step.screen.components.clone();
            assign_child_indices(&mut components);
            let id = screen_hash(&components);
            nodes.entry(id.clone()).or_insert_with(|| ScreenNode {
                node_id: id.clone(),
                activity_name: step.screen.activity.clone(),
                component_tree: components.clone(),
                is_start: false,
            });
            let kind = ActionKind::parse(&step.action.kind).expect("validated in parse_trace");
            let (source, component) = if kind == ActionKind::OpenApp {
                let label = trace
                    .app_label
                    .clone()
                    .unwrap_or_else(|| app_id.to_string());
                (
                    start_id.clone(),
                    GuiComponent {
                        component_type: "app".to_string(),
                        resource_id: None,
                        text: Some(label),
                        description: None,
                        child_index: 0,
                        children: Vec::new(),
                    },
                )
            } else {
                let (prev_id, prev_tree) = prev.as_ref().expect("non-first record");
                let path = step
                    .action
                    .target_component_path
                    .as_ref()
                    .expect("validated in parse_trace");
                let component =
                    resolve_component(prev_tree, path).ok_or_else(|| GraphError::Trace {
                        path: String::new(),
                        record: i,
                        message: format!("target_component_path {path:?} does not resolve"),
                    })?;
                (prev_id.clone(), component.without_children())
            };
            let edge = InteractionEdge {
                edge_id: 0, // assigned after canonical sort
                source,
                target: id.clone(),
                action: kind,
                component,
                typed_text: step.action.typed_text.clone(),
            };
            if edge_set.insert(edge.tuple_key()) {
                edges.push(edge);
            }
            prev = Some((id, components));
        }
    }

    edges.sort_by_key(|e| e.canonical_key());
    for (i, e) in edges.iter_mut().enumerate() {
        e.edge_id = i as u32;
    }

    let mut graph = ExecutionGraph {
        app_id: app_id.to_string(),
        app_label,
        nodes: nodes.into_values().collect(),
        edges,
        adjacency: BTreeMap::new(),
    };
    graph.rebuild_adjacency();
    graph.validate("<built>")?;
    Ok(graph)
}

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

/// Minimum-hop path from `from` to `to` as edge ids. Among equal-length
/// paths the lexicographically smallest edge_id sequence wins. `None` when
/// unreachable; `Some(empty)` when `from == to`.
pub fn shortest_path(
    g: &ExecutionGraph,
    from: &NodeId,
    to: &NodeId,
) -> Result<Option<Vec<u32>>, GraphError> {
    if g.node(from).is_none() {
        return Err(GraphError::UnknownNode(from.clone()));
    }
    if g.node(to).is_none() {
        return Err(GraphError::UnknownNode(to.clone()));
    }
    if from == to {
        return Ok(Some(Vec::new()));
    }
    // Dijkstra over (hops, edge-id sequence); appending an edge preserves
    // the lexicographic order of distinct prefixes, so the first pop per
    // node is optimal.
    type QueueEntry = std::cmp::Reverse<(usize, Vec<u32>, NodeId)>;
    let mut best: BTreeMap<NodeId, (usize, Vec<u32>)> = BTreeMap::new();
    let mut heap: BinaryHeap<QueueEntry> = BinaryHeap::new();
    heap.push(std::cmp::Reverse((0, Vec::new(), from.clone())));
    while let Some(std::cmp::Reverse((dist, seq, node))) = heap.pop() {
        if let Some((d, s)) = best.get(&node) {
            if (*d, s) <= (dist, &seq) {
                continue;
            }
        }
        best.insert(node.clone(), (dist, seq.clone()));
        if &node == to {
            return Ok(Some(seq));
        }
        if let Some(ids) = g.adjacency.get(&node) {
            for &i in ids {
                let e = &g.edges[i as usize];
                if best.contains_key(&e.target) {
                    continue;
                }
                let mut next = seq.clone();
                next.push(i);
                heap.push(std::cmp::Reverse((dist + 1, next, e.target.clone())));
            }
        }
    }
    Ok(None)
}

/// Plain BFS hop count, kept separate from [`shortest_path`] so tests can
/// cross-check distances through an independent route.
pub fn bfs_distance(g: &ExecutionGraph, from: &NodeId, to: &NodeId) -> Option<usize> {
    if from == to {
        return Some(0);
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(from.clone());
    queue.push_back((from.clone(), 0usize));
    while let Some((n, d)) = queue.pop_front() {
        if let Some(ids) = g.adjacency.get(&n) {
            for &i in ids {
                let t = &g.edges[i as usize].target;
                if t == to {
                    return Some(d + 1);
                }
                if seen.insert(t.clone()) {
                    queue.push_back((t.clone(), d + 1));
                }
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Graph files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct GraphEnvelope {
    version: String,
    checksum: String,
    graph: ExecutionGraph,
}

fn graph_checksum(graph: &ExecutionGraph) -> String {
    let payload = serde_json::to_string(graph).expect("graph serializes");
    let mut hasher = Sha256::new();
    hasher.update(payload.as_bytes());
    hex::encode(hasher.finalize())
}

pub fn save_graph(g: &ExecutionGraph, path: &Path) -> Result<(), GraphError> {
    let envelope = GraphEnvelope {
        version: GRAPH_FORMAT_VERSION.to_string(),
        checksum: graph_checksum(g),
        graph: g.clone(),
    };
    let out = serde_json::to_string_pretty(&envelope).expect("graph serializes");
    std::fs::write(path, out).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_graph(path: &Path) -> Result<ExecutionGraph, GraphError> {
    let raw = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let p = path.display().to_string();
    let envelope: GraphEnvelope = serde_json::from_str(&raw).map_err(|e| GraphError::Corrupt {
        path: p.clone(),
        message: e.to_string(),
    })?;
    if envelope.version != GRAPH_FORMAT_VERSION {
        return Err(GraphError::VersionMismatch {
            path: p,
            found: envelope.version,
            expected: GRAPH_FORMAT_VERSION.to_string(),
        });
    }
    let expected = graph_checksum(&envelope.graph);
    if expected != envelope.checksum {
        return Err(GraphError::Corrupt {
            path: p,
            message: "checksum mismatch".to_string(),
        });
    }
    let mut graph = envelope.graph;
    graph.rebuild_adjacency();
    graph.validate(&p)?;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(t: &str, id: Option<&str>, text: Option<&str>) -> GuiComponent {
        GuiComponent {
            component_type: t.to_string(),
            resource_id: id.map(String::from),
            text: text.map(String::from),
            description: None,
            child_index: 0,
            children: Vec::new(),
        }
    }

    fn screen(name: &str, leaves: Vec<GuiComponent>) -> TraceScreen {
        TraceScreen {
            activity: Some(name.to_string()),
            components: vec![GuiComponent {
                component_type: "layout".to_string(),
                resource_id: Some(name.to_string()),
                text: None,
                description: None,
                child_index: 0,
                children: leaves,
            }],
        }
    }

    fn open_step(name: &str, leaves: Vec<GuiComponent>) -> TraceStep {
        TraceStep {
            action: TraceAction {
                kind: "open_app".to_string(),
                target_component_path: None,
                typed_text: None,
            },
            screen: screen(name, leaves),
        }
    }

    fn tap_step(path: Vec<usize>, name: &str, leaves: Vec<GuiComponent>) -> TraceStep {
        TraceStep {
            action: TraceAction {
                kind: "tap".to_string(),
                target_component_path: Some(path),
                typed_text: None,
            },
            screen: screen(name, leaves),
        }
    }

    fn linear_trace(screens: usize) -> Trace {
        let mut steps = vec![open_step(
            "s0",
            vec![leaf("button", Some("b0"), Some("go"))],
        )];
        for i in 1..screens {
            steps.push(tap_step(
                vec![0, 0],
                &format!("s{i}"),
                vec![leaf("button", Some(&format!("b{i}")), Some("go"))],
            ));
        }
        Trace {
            app_id: "app".to_string(),
            app_label: None,
            source: TraceSource::Manual,
            steps,
        }
    }

    #[test]
    fn linear_trace_makes_start_plus_screens() {
        let g = build_graph(&[linear_trace(4)], "app").unwrap();
        assert_eq!(g.nodes.len(), 5);
        assert_eq!(g.edges.len(), 4);
        let start = g.start_node().unwrap();
        let out = g.outgoing(&start.node_id).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].action, ActionKind::OpenApp);
    }

    #[test]
    fn shared_screens_merge_and_edges_union() {
        let t1 = linear_trace(2);
        let mut t2 = linear_trace(1);
        // Same launch screen, then a different tap target going elsewhere.
        t2.steps.push(tap_step(
            vec![0],
            "other",
            vec![leaf("text_field", Some("f"), None)],
        ));
        let g = build_graph(&[t1, t2], "app").unwrap();
        // start + s0 + s1 + other
        assert_eq!(g.nodes.len(), 4);
        let start = g.start_node().unwrap();
        assert_eq!(g.outgoing(&start.node_id).unwrap().len(), 1);
    }

    #[test]
    fn node_count_matches_hash_set_oracle() {
        let traces = [linear_trace(3), linear_trace(2)];
        // Independent oracle: distinct canonical hashes over raw snapshots.
        let mut raw_hashes = BTreeSet::new();
        for t in &traces {
            for s in &t.steps {
                let mut c = s.screen.components.clone();
                assign_child_indices(&mut c);
                raw_hashes.insert(screen_hash(&c));
            }
        }
        let g = build_graph(&traces, "app").unwrap();
        assert_eq!(g.nodes.len(), raw_hashes.len() + 1);
    }

    #[test]
    fn trace_order_does_not_change_identities() {
        let t1 = linear_trace(3);
        let mut t2 = linear_trace(2);
        t2.steps.push(tap_step(
            vec![0],
            "zz",
            vec![leaf("button", Some("z"), Some("z"))],
        ));
        let a = build_graph(&[t1.clone(), t2.clone()], "app").unwrap();
        let b = build_graph(&[t2, t1], "app").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_type_edges_merge_ignoring_typed_text() {
        let mut t = linear_trace(1);
        let field = vec![leaf("text_field", Some("title"), None)];
        t.steps[0].screen = screen("form", field.clone());
        for text in ["alpha", "beta"] {
            t.steps.push(TraceStep {
                action: TraceAction {
                    kind: "type".to_string(),
                    target_component_path: Some(vec![0, 0]),
                    typed_text: Some(text.to_string()),
                },
                screen: screen("form", field.clone()),
            });
        }
        let g = build_graph(&[t], "app").unwrap();
        let type_edges: Vec<_> = g
            .edges
            .iter()
            .filter(|e| e.action == ActionKind::Type)
            .collect();
        assert_eq!(type_edges.len(), 1);
        assert_eq!(type_edges[0].typed_text.as_deref(), Some("alpha"));
    }

    #[test]
    fn shortest_path_from_equals_to_is_empty() {
        let g = build_graph(&[linear_trace(3)], "app").unwrap();
        let start = g.start_node().unwrap().node_id.clone();
        assert_eq!(shortest_path(&g, &start, &start).unwrap(), Some(vec![]));
    }

    #[test]
    fn shortest_path_on_chain() {
        let g = build_graph(&[linear_trace(3)], "app").unwrap();
        let start = g.start_node().unwrap().node_id.clone();
        // Last node in the chain: walk the edges.
        let mut node = start.clone();
        for _ in 0..3 {
            let out = g.outgoing(&node).unwrap();
            node = out[0].target.clone();
        }
        let path = shortest_path(&g, &start, &node).unwrap().unwrap();
        assert_eq!(path.len(), 3);
        assert_eq!(bfs_distance(&g, &start, &node), Some(3));
    }

    #[test]
    fn unreachable_nodes_are_rejected_with_a_listing() {
        let nodes = vec![
            ScreenNode {
                node_id: NodeId("start".to_string()),
                activity_name: None,
                component_tree: vec![],
                is_start: true,
            },
            ScreenNode {
                node_id: NodeId("reached".to_string()),
                activity_name: None,
                component_tree: vec![],
                is_start: false,
            },
            ScreenNode {
                node_id: NodeId("island".to_string()),
                activity_name: None,
                component_tree: vec![],
                is_start: false,
            },
        ];
        let edges = vec![InteractionEdge {
            edge_id: 0,
            source: NodeId("start".to_string()),
            target: NodeId("reached".to_string()),
            action: ActionKind::OpenApp,
            component: leaf("app", None, Some("app")),
            typed_text: None,
        }];
        let err = ExecutionGraph::from_parts("app", nodes, edges).unwrap_err();
        match err {
            GraphError::UnreachableNodes(listed) => {
                assert_eq!(listed, vec![NodeId("island".to_string())]);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn outgoing_of_leaf_is_empty_and_unknown_node_errors() {
        let g = build_graph(&[linear_trace(2)], "app").unwrap();
        let start = g.start_node().unwrap().node_id.clone();
        let mut node = start;
        loop {
            let out = g.outgoing(&node).unwrap();
            match out.first() {
                Some(edge) => node = edge.target.clone(),
                None => break, // the chain's last screen has no outgoing edges
            }
        }
        assert!(g.outgoing(&node).unwrap().is_empty());
        let bogus = NodeId("not-a-node".to_string());
        assert!(matches!(
            g.outgoing(&bogus),
            Err(GraphError::UnknownNode(_))
        ));
    }

    #[test]
    fn shortest_path_unknown_node_errors() {
        let g = build_graph(&[linear_trace(2)], "app").unwrap();
        let start = g.start_node().unwrap().node_id.clone();
        let bogus = NodeId("ffff".to_string());
        assert!(matches!(
            shortest_path(&g, &start, &bogus),
            Err(GraphError::UnknownNode(_))
        ));
    }

    #[test]
    fn roundtrip_preserves_graph() {
        let g = build_graph(&[linear_trace(4)], "app").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.json");
        save_graph(&g, &path).unwrap();
        let loaded = load_graph(&path).unwrap();
        assert_eq!(g, loaded);
    }

    #[test]
    fn empty_graph_roundtrips() {
        // Start node only: a single open_app step whose screen is the start
        // screen is the smallest valid trace, so build the minimal graph.
        let g = build_graph(&[linear_trace(1)], "app").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.json");
        save_graph(&g, &path).unwrap();
        assert_eq!(load_graph(&path).unwrap(), g);
    }

    #[test]
    fn version_mismatch_is_named_error() {
        let g = build_graph(&[linear_trace(2)], "app").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.json");
        save_graph(&g, &path).unwrap();
        let contents = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"version\": \"1\"", "\"version\": \"99\"");
        std::fs::write(&path, contents).unwrap();
        assert!(matches!(
            load_graph(&path),
            Err(GraphError::VersionMismatch { .. })
        ));
    }

    #[test]
    fn corrupted_content_fails_checksum() {
        let g = build_graph(&[linear_trace(2)], "app").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.json");
        save_graph(&g, &path).unwrap();
        let contents = std::fs::read_to_string(&path).unwrap().replace("go", "GO");
        std::fs::write(&path, contents).unwrap();
        assert!(matches!(load_graph(&path), Err(GraphError::Corrupt { .. })));
    }

    #[test]
    fn trace_missing_launch_record_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let trace = serde_json::json!({
            "app_id": "app",
            "source": "manual",
            "steps": [{
                "action": {"kind": "tap", "target_component_path": [0]},
                "screen": {"activity": "a", "components": [{"type": "button"}]}
            }]
        });
        std::fs::write(&path, trace.to_string()).unwrap();
        let err = parse_trace(&path).unwrap_err();
        assert!(err.to_string().contains("first record must be open_app"));
    }

    #[test]
    fn unsupported_action_fails_fast() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let trace = serde_json::json!({
            "app_id": "app",
            "source": "manual",
            "steps": [
                {"action": {"kind": "open_app"},
                 "screen": {"activity": "a", "components": [{"type": "button"}]}},
                {"action": {"kind": "rotate", "target_component_path": [0]},
                 "screen": {"activity": "a", "components": [{"type": "button"}]}}
            ]
        });
        std::fs::write(&path, trace.to_string()).unwrap();
        let err = parse_trace(&path).unwrap_err();
        assert!(
            matches!(err, GraphError::UnsupportedAction { ref action, .. } if action == "rotate")
        );
    }

    #[test]
    fn three_record_trace_parses_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let t = linear_trace(3);
        std::fs::write(&path, serde_json::to_string(&t).unwrap()).unwrap();
        let parsed = parse_trace(&path).unwrap();
        assert_eq!(parsed.steps.len(), 3);
        assert_eq!(parsed.steps[0].action.kind, "open_app");
    }
}
