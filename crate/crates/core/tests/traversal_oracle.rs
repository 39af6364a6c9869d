//! Cross-checks the traversal against an exhaustive brute-force enumeration
//! of candidate plans, and the lexicographic shortest path against explicit
//! enumeration of all minimum-hop paths.

mod common;

use common::{
    mock_gateway, oracle_best_plan, oracle_bfs_distance, oracle_lex_shortest_path, random_graph,
    random_s2rs, templates, OracleStep,
};
use s2rq::execution_model::shortest_path;
use s2rq::mapping_engine::{traverse, StepLabel};

/// The traversal's selected plan must equal the exhaustive optimum: same
/// labels, mapped nodes, edge sets, representatives, gaps, and final path.
fn check_against_oracle(seed: u64) {
    let graph = random_graph(seed, 8, 14);
    let s2rs = random_s2rs(seed, 3);
    let gateway = mock_gateway();
    let result = traverse(&graph, &s2rs, &gateway, &templates()).unwrap();
    let oracle = oracle_best_plan(&graph, &s2rs);

    assert_eq!(
        result.mapped_count, oracle.mapped,
        "seed {seed}: mapped count diverges"
    );
    assert_eq!(result.path, oracle.path, "seed {seed}: path diverges");
    assert_eq!(result.step_mappings.len(), oracle.steps.len());
    for (i, (got, want)) in result.step_mappings.iter().zip(&oracle.steps).enumerate() {
        match want {
            OracleStep::Vm => {
                assert_eq!(got.label, StepLabel::Vm, "seed {seed} step {i}");
                assert!(got.mapped_edges.is_empty());
            }
            OracleStep::Mapped {
                node,
                edges,
                representative,
                gap,
            } => {
                assert_ne!(got.label, StepLabel::Vm, "seed {seed} step {i}");
                assert_eq!(got.node.as_ref(), Some(node), "seed {seed} step {i}: node");
                assert_eq!(&got.mapped_edges, edges, "seed {seed} step {i}: edges");
                assert_eq!(
                    got.representative,
                    Some(*representative),
                    "seed {seed} step {i}: representative"
                );
                assert_eq!(&got.gap_edges_before, gap, "seed {seed} step {i}: gap");
            }
        }
    }
}

#[test]
fn traversal_matches_brute_force_on_250_graphs() {
    for seed in 0..250u64 {
        check_against_oracle(seed);
    }
}

#[test]
fn shortest_path_matches_bfs_on_600_graphs() {
    let mut checked_pairs = 0usize;
    for seed in 0..600u64 {
        let graph = random_graph(seed.wrapping_mul(0x9e37_79b9), 10, 20);
        for a in &graph.nodes {
            for b in &graph.nodes {
                let got = shortest_path(&graph, &a.node_id, &b.node_id).unwrap();
                let want_dist = oracle_bfs_distance(&graph, &a.node_id, &b.node_id);
                assert_eq!(
                    got.as_ref().map(Vec::len),
                    want_dist,
                    "seed {seed}: {} -> {}",
                    a.node_id,
                    b.node_id
                );
                // Tie-break: lexicographically smallest edge-id sequence
                // among all minimum-hop paths.
                let want_path = oracle_lex_shortest_path(&graph, &a.node_id, &b.node_id);
                assert_eq!(got, want_path, "seed {seed}: lex tie-break");
                checked_pairs += 1;
            }
        }
    }
    assert!(checked_pairs > 600, "oracle exercised");
}

#[test]
fn oracle_sees_the_same_screen_mappings_as_the_gateway() {
    // The bridge both sides share: per-(node, step) mapped edge sets. The
    // oracle scores components directly; the traversal goes through prompt
    // formatting and response parsing. They must agree everywhere.
    for seed in 0..100u64 {
        let graph = random_graph(seed, 8, 14);
        let s2rs = random_s2rs(seed, 3);
        let gateway = mock_gateway();
        for step in &s2rs {
            for node in &graph.nodes {
                let via_gateway = s2rq::mapping_engine::map_on_screen(
                    step,
                    &node.node_id,
                    &graph,
                    &gateway,
                    &templates(),
                )
                .unwrap();
                let via_oracle = common::oracle_mapped_edges(&graph, &node.node_id, step);
                assert_eq!(via_gateway, via_oracle, "seed {seed}");
            }
        }
    }
}
