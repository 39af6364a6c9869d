//! Maps individual S2Rs onto interaction sequences in the execution graph.
//!
//! Mapping a step on one screen is a two-call contract: a gate prompt asks
//! whether the step maps to any outgoing interaction, and only on "yes" does
//! a list prompt ask which ones. The traversal explores the graph from the
//! start node: a step that maps at the current node consumes its mapped
//! edge; a step that maps nowhere below the current node is a vocabulary
//! mismatch and the next step is tried in place. When a step maps at a
//! deeper node, the connecting edges come from the shortest path between the
//! two nodes (which may leave the descent route) and surface downstream as
//! missing steps.
//!
//! Every (node, step) pair is processed at most once: the visited set doubles
//! as a memo table, so the recursion returns the best sub-result under the
//! (most mapped steps, shortest path, lexicographically smallest edge
//! sequence) ordering without re-prompting.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::execution_model::{shortest_path, ExecutionGraph, GraphError, NodeId};
use crate::llm_gateway::{
    gate_answer_malformed, parse_gate_answer, parse_index_list, Gateway, GatewayError,
    InteractionDescriptor, TemplateSet,
};
use crate::s2r_pipeline::IndividualS2R;

#[derive(Debug, Error)]
pub enum MappingError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StepLabel {
    /// Maps to exactly one interaction.
    Cs,
    /// Maps to multiple interactions on a single screen.
    As,
    /// Maps to no interaction anywhere below the current node.
    Vm,
}

/// Per-step outcome. The label is determined by mapped-edge cardinality:
/// empty = VM, one = CS, several = AS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepMapping {
    pub s2r_index: usize,
    pub label: StepLabel,
    /// Node whose outgoing interactions the step mapped to; `None` for VM.
    pub node: Option<NodeId>,
    pub mapped_edges: Vec<u32>,
    /// The mapped edge the chosen walk continues through; `None` for VM.
    pub representative: Option<u32>,
    /// Connecting edges inserted before this step; missing steps downstream.
    pub gap_edges_before: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraversalStats {
    pub nodes_visited: usize,
    pub gateway_calls: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraversalResult {
    /// The selected walk: gap edges and representative mapped edges, in step
    /// order. Contiguous from the start node whenever non-empty.
    pub path: Vec<u32>,
    pub step_mappings: Vec<StepMapping>,
    pub mapped_count: usize,
    pub diagnostics: Vec<String>,
    pub stats: TraversalStats,
}

/// Pairs already processed during one traversal. A pair is inserted before
/// its (node, step) is processed and never removed.
#[derive(Debug, Default)]
pub struct VisitedSet {
    pairs: BTreeSet<(NodeId, usize)>,
}

impl VisitedSet {
    pub fn insert(&mut self, node: &NodeId, s2r_index: usize) -> bool {
        self.pairs.insert((node.clone(), s2r_index))
    }

    pub fn contains(&self, node: &NodeId, s2r_index: usize) -> bool {
        self.pairs.contains(&(node.clone(), s2r_index))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Result of connecting two mapped interactions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GapFill {
    Connected(Vec<u32>),
    /// No path exists; recorded as a diagnostic, never an abort.
    Unresolvable,
}

/// Shortest connecting path between the nodes of two consecutive mapped
/// interactions. Empty when they are already consecutive.
pub fn fill_gap(
    g: &ExecutionGraph,
    prev_node: &NodeId,
    current_node: &NodeId,
) -> Result<GapFill, GraphError> {
    Ok(match shortest_path(g, prev_node, current_node)? {
        Some(path) => GapFill::Connected(path),
        None => GapFill::Unresolvable,
    })
}

/// Asks the model whether `s2r` maps to any outgoing interaction of `node`,
/// and if so which ones. Interaction numbers outside the prompt's list are
/// hallucinations and are dropped with a warning.
pub fn map_on_screen(
    s2r: &IndividualS2R,
    node: &NodeId,
    g: &ExecutionGraph,
    gateway: &Gateway,
    templates: &TemplateSet,
) -> Result<Vec<u32>, MappingError> {
    let mut diagnostics = Vec::new();
    map_on_screen_inner(s2r, node, g, gateway, templates, &mut diagnostics)
}

fn screen_description(g: &ExecutionGraph, node: &NodeId) -> String {
    match g.node(node).and_then(|n| n.activity_name.clone()) {
        Some(activity) => format!("{activity} ({node})"),
        None => node.to_string(),
    }
}

fn map_on_screen_inner(
    s2r: &IndividualS2R,
    node: &NodeId,
    g: &ExecutionGraph,
    gateway: &Gateway,
    templates: &TemplateSet,
    diagnostics: &mut Vec<String>,
) -> Result<Vec<u32>, MappingError> {
    let outgoing = g.outgoing(node)?;
    if outgoing.is_empty() {
        return Ok(Vec::new());
    }
    let descriptors: Vec<InteractionDescriptor> = outgoing
        .iter()
        .enumerate()
        .map(|(i, e)| InteractionDescriptor {
            ordinal: i + 1,
            action: e.action.as_str().to_string(),
            component_type: e.component.component_type.clone(),
            resource_id: e.component.resource_id.clone().unwrap_or_default(),
            text: e.component.text.clone().unwrap_or_default(),
            description: e.component.description.clone().unwrap_or_default(),
        })
        .collect();
    let lines: Vec<String> = descriptors.iter().map(|d| d.format_line()).collect();
    let mut bindings = BTreeMap::new();
    bindings.insert("s2r".to_string(), s2r.formatted());
    bindings.insert("screen".to_string(), screen_description(g, node));
    bindings.insert("interactions".to_string(), lines.join("\n"));

    let gate_raw = gateway.complete(&templates.map_gate, &bindings)?;
    if gate_answer_malformed(&gate_raw) {
        let note = format!(
            "node {node}, step {}: malformed gate answer treated as no: {:?}",
            s2r.index,
            gate_raw.trim()
        );
        log::warn!("{note}");
        diagnostics.push(note);
    }
    let gate = parse_gate_answer(&gate_raw);
    if !gate.maps {
        return Ok(Vec::new());
    }

    let list_raw = gateway.complete(&templates.map_list, &bindings)?;
    let Some(ordinals) = parse_index_list(&list_raw) else {
        let note = format!(
            "node {node}, step {}: unparseable interaction list treated as empty: {:?}",
            s2r.index,
            list_raw.trim()
        );
        log::warn!("{note}");
        diagnostics.push(note);
        return Ok(Vec::new());
    };
    let mut edge_ids = BTreeSet::new();
    for ordinal in ordinals {
        if ordinal >= 1 && (ordinal as usize) <= outgoing.len() {
            edge_ids.insert(outgoing[ordinal as usize - 1].edge_id);
        } else {
            let note = format!(
                "node {node}, step {}: dropped hallucinated interaction number {ordinal}",
                s2r.index
            );
            log::warn!("{note}");
            diagnostics.push(note);
        }
    }
    Ok(edge_ids.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PlannedMapping {
    node: NodeId,
    edges: Vec<u32>,
    representative: u32,
    gap: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PlannedStep {
    s2r_index: usize,
    mapping: Option<PlannedMapping>,
}

/// A traversal plan from some (node, step) state to the end of the list,
/// with its comparison keys precomputed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct SubResult {
    steps: Vec<PlannedStep>,
    mapped: usize,
    path_len: usize,
    seq: Vec<u32>,
    /// Per-step mapped flags; resolves residual ties toward mapping earlier
    /// steps.
    shape: Vec<bool>,
}

impl SubResult {
    fn compose(s2r_index: usize, mapping: Option<PlannedMapping>, tail: &SubResult) -> SubResult {
        let mut seq = Vec::new();
        let mut mapped = tail.mapped;
        if let Some(m) = &mapping {
            seq.extend(m.gap.iter().copied());
            seq.push(m.representative);
            mapped += 1;
        }
        let path_len = seq.len() + tail.path_len;
        seq.extend(tail.seq.iter().copied());
        let mut steps = vec![PlannedStep { s2r_index, mapping }];
        steps.extend(tail.steps.iter().cloned());
        let mut shape = vec![steps[0].mapping.is_some()];
        shape.extend(tail.shape.iter().copied());
        SubResult {
            steps,
            mapped,
            path_len,
            seq,
            shape,
        }
    }
}

/// Total ordering over candidate plans: most mapped steps, then shortest
/// path, then lexicographically smallest edge-id sequence, then mapping
/// earlier steps. `Greater` means `a` is the better plan.
fn compare_plans(a: &SubResult, b: &SubResult) -> Ordering {
    a.mapped
        .cmp(&b.mapped)
        .then_with(|| b.path_len.cmp(&a.path_len))
        .then_with(|| b.seq.cmp(&a.seq))
        .then_with(|| a.shape.cmp(&b.shape))
}

struct Traverser<'a> {
    graph: &'a ExecutionGraph,
    gateway: &'a Gateway,
    templates: &'a TemplateSet,
    s2rs: &'a [IndividualS2R],
    map_cache: BTreeMap<(NodeId, usize), Vec<u32>>,
    memo: BTreeMap<(NodeId, usize), SubResult>,
    visited: VisitedSet,
    diagnostics: Vec<String>,
}

impl<'a> Traverser<'a> {
    /// Mapped edges for (node, step), prompting the model at most once per
    /// pair across the whole traversal.
    fn mapped_edges(&mut self, node: &NodeId, i: usize) -> Result<Vec<u32>, MappingError> {
        let key = (node.clone(), i);
        if let Some(cached) = self.map_cache.get(&key) {
            return Ok(cached.clone());
        }
        let edges = map_on_screen_inner(
            &self.s2rs[i],
            node,
            self.graph,
            self.gateway,
            self.templates,
            &mut self.diagnostics,
        )?;
        log::debug!(
            "map step {} at node {node}: {:?}",
            self.s2rs[i].index,
            edges
        );
        self.map_cache.insert(key, edges.clone());
        Ok(edges)
    }

    /// Nodes below `node` where step `i` maps, reached through nodes where it
    /// does not, paired with the shortest connecting path.
    fn descent_targets(
        &mut self,
        node: &NodeId,
        i: usize,
    ) -> Result<Vec<(NodeId, Vec<u32>)>, MappingError> {
        let mut seen = BTreeSet::new();
        seen.insert(node.clone());
        let mut queue = VecDeque::new();
        queue.push_back(node.clone());
        let mut found = Vec::new();
        while let Some(current) = queue.pop_front() {
            let outgoing: Vec<(u32, NodeId)> = self
                .graph
                .outgoing(&current)?
                .iter()
                .map(|e| (e.edge_id, e.target.clone()))
                .collect();
            for (_, target) in outgoing {
                if !seen.insert(target.clone()) {
                    continue;
                }
                if self.mapped_edges(&target, i)?.is_empty() {
                    queue.push_back(target);
                } else {
                    found.push(target);
                }
            }
        }
        found.sort();
        let mut out = Vec::with_capacity(found.len());
        for target in found {
            let gap =
                shortest_path(self.graph, node, &target)?.expect("descent target is reachable");
            out.push((target, gap));
        }
        Ok(out)
    }

    fn best(&mut self, node: &NodeId, i: usize) -> Result<SubResult, MappingError> {
        if i == self.s2rs.len() {
            return Ok(SubResult::default());
        }
        let key = (node.clone(), i);
        if let Some(done) = self.memo.get(&key) {
            return Ok(done.clone());
        }
        self.visited.insert(node, i);

        let mut candidates: Vec<SubResult> = Vec::new();
        let mapped = self.mapped_edges(node, i)?;
        if !mapped.is_empty() {
            // Branch 2: the step maps here; continue with the next step on
            // each node the mapped interactions lead to.
            for &rep in &mapped {
                let target = self.graph.edge(rep).expect("edge exists").target.clone();
                let tail = self.best(&target, i + 1)?;
                candidates.push(SubResult::compose(
                    i,
                    Some(PlannedMapping {
                        node: node.clone(),
                        edges: mapped.clone(),
                        representative: rep,
                        gap: Vec::new(),
                    }),
                    &tail,
                ));
            }
        } else {
            // Branch 1: try the same step further down; the connecting edges
            // become the gap before it.
            for (target, gap) in self.descent_targets(node, i)? {
                let edges = self.mapped_edges(&target, i)?;
                for &rep in &edges {
                    let next = self.graph.edge(rep).expect("edge exists").target.clone();
                    let tail = self.best(&next, i + 1)?;
                    candidates.push(SubResult::compose(
                        i,
                        Some(PlannedMapping {
                            node: target.clone(),
                            edges: edges.clone(),
                            representative: rep,
                            gap: gap.clone(),
                        }),
                        &tail,
                    ));
                }
            }
        }
        // The step may also be skipped (vocabulary mismatch): the next step
        // is attempted at the current node, consuming no movement.
        let vm_tail = self.best(node, i + 1)?;
        candidates.push(SubResult::compose(i, None, &vm_tail));

        let best = candidates
            .into_iter()
            .reduce(|best, c| {
                if compare_plans(&c, &best) == Ordering::Greater {
                    c
                } else {
                    best
                }
            })
            .expect("at least the skip candidate exists");
        self.memo.insert(key, best.clone());
        Ok(best)
    }
}

/// Runs the full traversal for an ordered step list. An empty list yields an
/// empty result; a graph without a start node is an error.
pub fn traverse(
    g: &ExecutionGraph,
    s2rs: &[IndividualS2R],
    gateway: &Gateway,
    templates: &TemplateSet,
) -> Result<TraversalResult, MappingError> {
    if s2rs.is_empty() {
        return Ok(TraversalResult::default());
    }
    let start = g.start_node()?.node_id.clone();
    let calls_before = gateway.calls();
    let mut traverser = Traverser {
        graph: g,
        gateway,
        templates,
        s2rs,
        map_cache: BTreeMap::new(),
        memo: BTreeMap::new(),
        visited: VisitedSet::default(),
        diagnostics: Vec::new(),
    };
    let plan = traverser.best(&start, 0)?;
    let step_mappings: Vec<StepMapping> = plan
        .steps
        .iter()
        .map(|s| match &s.mapping {
            Some(m) => StepMapping {
                s2r_index: s.s2r_index,
                label: if m.edges.len() == 1 {
                    StepLabel::Cs
                } else {
                    StepLabel::As
                },
                node: Some(m.node.clone()),
                mapped_edges: m.edges.clone(),
                representative: Some(m.representative),
                gap_edges_before: m.gap.clone(),
            },
            None => StepMapping {
                s2r_index: s.s2r_index,
                label: StepLabel::Vm,
                node: None,
                mapped_edges: Vec::new(),
                representative: None,
                gap_edges_before: Vec::new(),
            },
        })
        .collect();
    log::debug!(
        "traversal: mapped {}/{} steps, path length {}, visited {} pairs",
        plan.mapped,
        s2rs.len(),
        plan.path_len,
        traverser.visited.len()
    );
    Ok(TraversalResult {
        path: plan.seq,
        mapped_count: plan.mapped,
        step_mappings,
        diagnostics: traverser.diagnostics,
        stats: TraversalStats {
            nodes_visited: traverser.visited.len(),
            gateway_calls: gateway.calls() - calls_before,
        },
    })
}
