//! Shared test support: fixture loading, a seeded random graph generator,
//! and independent oracles for shortest paths and the traversal optimum.
//!
//! The oracles deliberately avoid the library's search code: distances come
//! from a plain breadth-first search, lexicographic tie-breaks from explicit
//! enumeration of all minimum-hop paths, and the traversal optimum from
//! exhaustive enumeration of every candidate plan without memoization,
//! scoring edge matches directly through `mock_match_score`.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use s2rq::execution_model::{
    ActionKind, ExecutionGraph, GuiComponent, InteractionEdge, NodeId, ScreenNode,
};
use s2rq::llm_gateway::{
    mock_match_score, Gateway, InteractionDescriptor, MockOracle, ModelConfig, TemplateSet,
    DEFAULT_MATCH_THRESHOLD,
};
use s2rq::report_ingest::{load_report, BugReport, ReportFormat};
use s2rq::s2r_pipeline::IndividualS2R;

pub fn fixture_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn mock_gateway() -> Gateway {
    Gateway::new(Box::new(MockOracle::default()), ModelConfig::default()).unwrap()
}

pub fn templates() -> TemplateSet {
    TemplateSet::zero_shot()
}

pub fn mileage_graph() -> ExecutionGraph {
    let traces = [
        s2rq::execution_model::parse_trace(&fixture_path("traces/mileage_manual.json")).unwrap(),
        s2rq::execution_model::parse_trace(&fixture_path("traces/mileage_automated.json")).unwrap(),
    ];
    s2rq::execution_model::build_graph(&traces, "mileage-tracker").unwrap()
}

pub fn mileage_report() -> BugReport {
    load_report(
        &fixture_path("reports/mileage-65.json"),
        ReportFormat::Structured,
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// Random graphs and step lists
// ---------------------------------------------------------------------------

const VOCAB: [&str; 6] = ["alpha", "beta", "gamma", "delta", "omega", "sigma"];
const ACTIONS: [ActionKind; 4] = [
    ActionKind::Tap,
    ActionKind::Type,
    ActionKind::Swipe,
    ActionKind::LongTap,
];
const STEP_VERBS: [&str; 4] = ["tap", "enter", "press", "foo"];

fn node(id: &str, is_start: bool) -> ScreenNode {
    ScreenNode {
        node_id: NodeId(id.to_string()),
        activity_name: None,
        component_tree: Vec::new(),
        is_start,
    }
}

fn component(rng: &mut StdRng) -> GuiComponent {
    let words = 1 + rng.gen_range(0..2);
    let text: Vec<&str> = (0..words)
        .map(|_| VOCAB[rng.gen_range(0..VOCAB.len())])
        .collect();
    GuiComponent {
        component_type: "widget".to_string(),
        resource_id: None,
        text: Some(text.join(" ")),
        description: None,
        child_index: 0,
        children: Vec::new(),
    }
}

/// Seeded random graph: a start node plus up to `max_nodes - 1` screens,
/// connected by a spanning set of edges from the start (open_app to entry
/// screens, ordinary actions elsewhere) plus random extras, capped at
/// `max_edges`.
pub fn random_graph(seed: u64, max_nodes: usize, max_edges: usize) -> ExecutionGraph {
    let mut rng = StdRng::seed_from_u64(seed);
    let screen_count = rng.gen_range(1..max_nodes.max(2));
    let mut nodes = vec![node("start", true)];
    for i in 0..screen_count {
        nodes.push(node(&format!("n{i:02}"), false));
    }
    let mut edges: Vec<InteractionEdge> = Vec::new();
    let mut seen: BTreeSet<(String, String, ActionKind, String)> = BTreeSet::new();
    let push = |edges: &mut Vec<InteractionEdge>,
                seen: &mut BTreeSet<(String, String, ActionKind, String)>,
                source: &NodeId,
                target: &NodeId,
                action: ActionKind,
                comp: GuiComponent| {
        let key = (
            source.0.clone(),
            target.0.clone(),
            action,
            comp.text.clone().unwrap_or_default(),
        );
        if seen.insert(key) {
            edges.push(InteractionEdge {
                edge_id: 0,
                source: source.clone(),
                target: target.clone(),
                action,
                component: comp,
                typed_text: None,
            });
        }
    };
    // Spanning connectivity: each screen hangs off an already-connected node.
    let start = nodes[0].node_id.clone();
    for i in 1..nodes.len() {
        let parent = if i == 1 { 0 } else { rng.gen_range(0..i) };
        let (source, action) = if parent == 0 {
            (start.clone(), ActionKind::OpenApp)
        } else {
            (
                nodes[parent].node_id.clone(),
                ACTIONS[rng.gen_range(0..ACTIONS.len())],
            )
        };
        let target = nodes[i].node_id.clone();
        let comp = component(&mut rng);
        push(&mut edges, &mut seen, &source, &target, action, comp);
    }
    // Extra edges between arbitrary screens (start only emits open_app).
    let extras = rng.gen_range(0..=max_edges.saturating_sub(edges.len()));
    for _ in 0..extras {
        let si = rng.gen_range(0..nodes.len());
        let ti = rng.gen_range(1..nodes.len());
        let (source, action) = if si == 0 {
            (start.clone(), ActionKind::OpenApp)
        } else {
            (
                nodes[si].node_id.clone(),
                ACTIONS[rng.gen_range(0..ACTIONS.len())],
            )
        };
        let target = nodes[ti].node_id.clone();
        let comp = component(&mut rng);
        push(&mut edges, &mut seen, &source, &target, action, comp);
    }
    ExecutionGraph::from_parts("random", nodes, edges).expect("generated graph is valid")
}

/// Seeded random step list in the slot format, drawn from the same small
/// vocabulary as the graph components so gates pass and fail in mixes.
pub fn random_s2rs(seed: u64, max_steps: usize) -> Vec<IndividualS2R> {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed_5eed);
    let count = rng.gen_range(1..=max_steps);
    (0..count)
        .map(|i| {
            let words = 1 + rng.gen_range(0..2);
            let object: Vec<&str> = (0..words)
                .map(|_| VOCAB[rng.gen_range(0..VOCAB.len())])
                .collect();
            IndividualS2R {
                index: i,
                action: STEP_VERBS[rng.gen_range(0..STEP_VERBS.len())].to_string(),
                object: object.join(" "),
                preposition: None,
                object2: None,
                source_sentence: i as i32,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Independent shortest-path oracles
// ---------------------------------------------------------------------------

fn adjacency(g: &ExecutionGraph) -> BTreeMap<&NodeId, Vec<&InteractionEdge>> {
    let mut adj: BTreeMap<&NodeId, Vec<&InteractionEdge>> = BTreeMap::new();
    for e in &g.edges {
        adj.entry(&e.source).or_default().push(e);
    }
    adj
}

/// Plain BFS hop count, written against the raw edge list.
pub fn oracle_bfs_distance(g: &ExecutionGraph, from: &NodeId, to: &NodeId) -> Option<usize> {
    if from == to {
        return Some(0);
    }
    let adj = adjacency(g);
    let mut seen = BTreeSet::new();
    seen.insert(from.clone());
    let mut queue = VecDeque::from([(from.clone(), 0usize)]);
    while let Some((n, d)) = queue.pop_front() {
        for e in adj.get(&n).into_iter().flatten() {
            if e.target == *to {
                return Some(d + 1);
            }
            if seen.insert(e.target.clone()) {
                queue.push_back((e.target.clone(), d + 1));
            }
        }
    }
    None
}

/// All minimum-hop paths from `from` to `to`, as edge-id sequences, by
/// depth-limited enumeration at the BFS distance.
fn all_min_paths(g: &ExecutionGraph, from: &NodeId, to: &NodeId) -> Vec<Vec<u32>> {
    let Some(dist) = oracle_bfs_distance(g, from, to) else {
        return Vec::new();
    };
    let adj = adjacency(g);
    let mut out = Vec::new();
    let mut stack: Vec<(NodeId, Vec<u32>)> = vec![(from.clone(), Vec::new())];
    while let Some((n, path)) = stack.pop() {
        if path.len() == dist {
            if n == *to {
                out.push(path);
            }
            continue;
        }
        for e in adj.get(&n).into_iter().flatten() {
            let mut next = path.clone();
            next.push(e.edge_id);
            stack.push((e.target.clone(), next));
        }
    }
    out
}

/// Minimum-hop path with the lexicographically smallest edge-id sequence,
/// found by enumerating every minimum-hop path.
pub fn oracle_lex_shortest_path(
    g: &ExecutionGraph,
    from: &NodeId,
    to: &NodeId,
) -> Option<Vec<u32>> {
    all_min_paths(g, from, to).into_iter().min()
}

// ---------------------------------------------------------------------------
// Brute-force traversal oracle
// ---------------------------------------------------------------------------

/// One planned step as the oracle sees it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleStep {
    Vm,
    Mapped {
        node: NodeId,
        edges: Vec<u32>,
        representative: u32,
        gap: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OraclePlan {
    pub steps: Vec<OracleStep>,
    pub mapped: usize,
    pub path: Vec<u32>,
}

fn descriptor_for(edge: &InteractionEdge) -> InteractionDescriptor {
    InteractionDescriptor {
        ordinal: 1,
        action: edge.action.as_str().to_string(),
        component_type: edge.component.component_type.clone(),
        resource_id: edge.component.resource_id.clone().unwrap_or_default(),
        text: edge.component.text.clone().unwrap_or_default(),
        description: edge.component.description.clone().unwrap_or_default(),
    }
}

/// Edges of `node` the mock oracle maps `s2r` to, scored directly without
/// prompts or parsing.
pub fn oracle_mapped_edges(g: &ExecutionGraph, node: &NodeId, s2r: &IndividualS2R) -> Vec<u32> {
    let mut out: Vec<u32> = g
        .edges
        .iter()
        .filter(|e| e.source == *node)
        .filter(|e| {
            mock_match_score(&s2r.formatted(), &descriptor_for(e)) >= DEFAULT_MATCH_THRESHOLD
        })
        .map(|e| e.edge_id)
        .collect();
    out.sort_unstable();
    out
}

/// Nodes where the step maps, reachable from `from` through nodes where it
/// does not map.
fn oracle_descent_targets(g: &ExecutionGraph, from: &NodeId, s2r: &IndividualS2R) -> Vec<NodeId> {
    let adj = adjacency(g);
    let mut seen = BTreeSet::new();
    seen.insert(from.clone());
    let mut queue = VecDeque::from([from.clone()]);
    let mut found = Vec::new();
    while let Some(n) = queue.pop_front() {
        for e in adj.get(&n).into_iter().flatten() {
            if !seen.insert(e.target.clone()) {
                continue;
            }
            if oracle_mapped_edges(g, &e.target, s2r).is_empty() {
                queue.push_back(e.target.clone());
            } else {
                found.push(e.target.clone());
            }
        }
    }
    found.sort();
    found
}

fn edge_target(g: &ExecutionGraph, edge_id: u32) -> NodeId {
    g.edges[edge_id as usize].target.clone()
}

fn enumerate_plans(
    g: &ExecutionGraph,
    s2rs: &[IndividualS2R],
    node: &NodeId,
    i: usize,
    partial: &OraclePlan,
    out: &mut Vec<OraclePlan>,
) {
    if i == s2rs.len() {
        out.push(partial.clone());
        return;
    }
    let mapped = oracle_mapped_edges(g, node, &s2rs[i]);
    if !mapped.is_empty() {
        for &rep in &mapped {
            let mut next = partial.clone();
            next.steps.push(OracleStep::Mapped {
                node: node.clone(),
                edges: mapped.clone(),
                representative: rep,
                gap: Vec::new(),
            });
            next.mapped += 1;
            next.path.push(rep);
            enumerate_plans(g, s2rs, &edge_target(g, rep), i + 1, &next, out);
        }
    } else {
        for target in oracle_descent_targets(g, node, &s2rs[i]) {
            let gap =
                oracle_lex_shortest_path(g, node, &target).expect("descent target is reachable");
            let edges = oracle_mapped_edges(g, &target, &s2rs[i]);
            for &rep in &edges {
                let mut next = partial.clone();
                next.steps.push(OracleStep::Mapped {
                    node: target.clone(),
                    edges: edges.clone(),
                    representative: rep,
                    gap: gap.clone(),
                });
                next.mapped += 1;
                next.path.extend(gap.iter().copied());
                next.path.push(rep);
                enumerate_plans(g, s2rs, &edge_target(g, rep), i + 1, &next, out);
            }
        }
    }
    // Skipping the step (vocabulary mismatch) is always a candidate.
    let mut next = partial.clone();
    next.steps.push(OracleStep::Vm);
    enumerate_plans(g, s2rs, node, i + 1, &next, out);
}

fn plan_shape(plan: &OraclePlan) -> Vec<bool> {
    plan.steps
        .iter()
        .map(|s| matches!(s, OracleStep::Mapped { .. }))
        .collect()
}

/// Exhaustively enumerates every candidate plan and returns the optimum
/// under (most mapped, shortest path, lexicographically smallest edge
/// sequence, earliest mapped steps).
pub fn oracle_best_plan(g: &ExecutionGraph, s2rs: &[IndividualS2R]) -> OraclePlan {
    if s2rs.is_empty() {
        return OraclePlan::default();
    }
    let start = g
        .nodes
        .iter()
        .find(|n| n.is_start)
        .expect("graph has a start node")
        .node_id
        .clone();
    let mut plans = Vec::new();
    enumerate_plans(g, s2rs, &start, 0, &OraclePlan::default(), &mut plans);
    plans
        .into_iter()
        .reduce(|best, p| {
            let better = p
                .mapped
                .cmp(&best.mapped)
                .then_with(|| best.path.len().cmp(&p.path.len()))
                .then_with(|| best.path.cmp(&p.path))
                .then_with(|| plan_shape(&p).cmp(&plan_shape(&best)));
            if better == std::cmp::Ordering::Greater {
                p
            } else {
                best
            }
        })
        .expect("the all-skip plan always exists")
}
