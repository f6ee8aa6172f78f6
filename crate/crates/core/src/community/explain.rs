use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{louvain_with_restarts, Digraph, Partition};
use crate::dataset::{Instance, Part};
use crate::graph::{build_graph, GraphError, InteractionGraph};
use crate::heads::{HeadError, HeadMethod, HeadSelector};
use crate::oracle::{ModelMeta, Oracle, OracleError};

/// Maximal contiguous runs of one community, per part, as local `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunitySpans {
    pub community: usize,
    pub p1: Vec<(usize, usize)>,
    pub p2: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanPair {
    pub p1: [usize; 2],
    pub p2: [usize; 2],
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub instance_id: String,
    pub head: usize,
    pub method: HeadMethod,
    pub seed: u64,
    /// Sorted by score, highest first.
    pub pairs: Vec<SpanPair>,
}

fn runs(mut positions: Vec<usize>) -> Vec<(usize, usize)> {
    positions.sort_unstable();
    let mut out: Vec<(usize, usize)> = Vec::new();
    for p in positions {
        match out.last_mut() {
            Some((_, e)) if *e == p => *e += 1,
            _ => out.push((p, p + 1)),
        }
    }
    out
}

pub fn communities_to_spans(partition: &Partition, graph: &InteractionGraph) -> Vec<CommunitySpans> {
    partition
        .members()
        .into_iter()
        .enumerate()
        .map(|(community, nodes)| {
            let (p1, p2): (Vec<usize>, Vec<usize>) = nodes.into_iter().partition(|&n| graph.part_of(n) == Part::P1);
            CommunitySpans {
                community,
                p1: runs(p1.into_iter().map(|n| graph.local_index(n)).collect()),
                p2: runs(p2.into_iter().map(|n| graph.local_index(n)).collect()),
            }
        })
        .collect()
}

/// Scores every P1-span × P2-span pair inside each community by the edge
/// weight between them in both directions, then sorts all pairs by score.
/// Equal scores keep community order, then P1 span order, then P2 span order.
pub fn rank_span_pairs(spans: &[CommunitySpans], graph: &InteractionGraph) -> Vec<SpanPair> {
    // node -> (community slot, span index within its part)
    let mut locate: HashMap<usize, (usize, usize)> = HashMap::new();
    for (slot, cs) in spans.iter().enumerate() {
        for (part, list) in [(Part::P1, &cs.p1), (Part::P2, &cs.p2)] {
            for (k, &(s, e)) in list.iter().enumerate() {
                for t in s..e {
                    locate.insert(graph.node_of(part, t), (slot, k));
                }
            }
        }
    }
    let mut scores: HashMap<(usize, usize, usize), f64> = HashMap::new();
    for e in &graph.edges {
        let (Some(&(cs, ks)), Some(&(cd, kd))) = (locate.get(&e.src), locate.get(&e.dst)) else { continue };
        if cs != cd || graph.part_of(e.src) == graph.part_of(e.dst) {
            continue;
        }
        let (k1, k2) = if graph.part_of(e.src) == Part::P1 { (ks, kd) } else { (kd, ks) };
        *scores.entry((cs, k1, k2)).or_insert(0.0) += e.weight;
    }
    let mut pairs = Vec::new();
    for (slot, cs) in spans.iter().enumerate() {
        for (k1, &(s1, e1)) in cs.p1.iter().enumerate() {
            for (k2, &(s2, e2)) in cs.p2.iter().enumerate() {
                let score = scores.get(&(slot, k1, k2)).copied().unwrap_or(0.0);
                pairs.push(SpanPair { p1: [s1, e1], p2: [s2, e2], score });
            }
        }
    }
    pairs.sort_by(|a, b| b.score.total_cmp(&a.score));
    pairs
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractConfig {
    pub selector: HeadSelector,
    pub seed: u64,
    /// Attention threshold for graph edges.
    pub epsilon: f64,
    pub restarts: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("instance '{instance}': {source}")]
    Oracle {
        instance: String,
        #[source]
        source: OracleError,
    },
    #[error("instance '{instance}': {source}")]
    Head {
        instance: String,
        #[source]
        source: HeadError,
    },
    #[error("instance '{instance}': {source}")]
    Graph {
        instance: String,
        #[source]
        source: GraphError,
    },
    #[error("instance '{instance}': backend returned {got} tokens, expected {expected}")]
    TokenMismatch { instance: String, expected: usize, got: usize },
}

/// Everything computed on the way to an explanation.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub explanation: Explanation,
    pub graph: InteractionGraph,
    pub partition: Partition,
    pub words: Vec<String>,
}

pub fn extract_detailed(
    instance: &Instance,
    oracle: &dyn Oracle,
    meta: &ModelMeta,
    config: &ExtractConfig,
) -> Result<Extraction, ExtractError> {
    let id = || instance.id.clone();
    let enc = oracle
        .encode(&instance.part1_tokens, &instance.part2_tokens)
        .map_err(|source| ExtractError::Oracle { instance: id(), source })?;
    let expected = instance.part1_tokens.len() + instance.part2_tokens.len();
    if enc.token_count() != expected || enc.boundary != instance.part1_tokens.len() {
        return Err(ExtractError::TokenMismatch { instance: id(), expected, got: enc.token_count() });
    }
    let head = config.selector.head_for(meta, &enc).map_err(|source| ExtractError::Head { instance: id(), source })?;
    let graph = build_graph(&enc.attention[head - 1], enc.boundary, config.epsilon)
        .map_err(|source| ExtractError::Graph { instance: id(), source })?;
    let partition = louvain_with_restarts(&Digraph::from_graph(&graph), config.seed, config.restarts);
    let pairs = if graph.edges.is_empty() {
        Vec::new()
    } else {
        rank_span_pairs(&communities_to_spans(&partition, &graph), &graph)
    };
    let words = enc.part1.iter().chain(&enc.part2).cloned().collect();
    Ok(Extraction {
        explanation: Explanation {
            instance_id: id(),
            head,
            method: config.selector.method(),
            seed: config.seed,
            pairs,
        },
        graph,
        partition,
        words,
    })
}

/// Encodes the instance, picks a head, runs Louvain on its attention graph
/// and ranks the resulting span pairs.
pub fn extract_explanation(
    instance: &Instance,
    oracle: &dyn Oracle,
    meta: &ModelMeta,
    config: &ExtractConfig,
) -> Result<Explanation, ExtractError> {
    extract_detailed(instance, oracle, meta, config).map(|e| e.explanation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn graph(len: usize, boundary: usize, edges: &[(usize, usize, f64)]) -> InteractionGraph {
        InteractionGraph {
            len,
            boundary,
            edges: edges.iter().map(|&(src, dst, weight)| Edge { src, dst, weight }).collect(),
        }
    }

    #[test]
    fn contiguous_and_gapped_runs() {
        // P1 has 3 tokens, P2 has 5: nodes 0..3 and 3..8
        let g = graph(8, 3, &[]);
        let p = Partition::from_assignment(vec![0, 0, 1, 2, 2, 2, 2, 0]);
        let spans = communities_to_spans(&p, &g);
        assert_eq!(spans[0].p1, vec![(0, 2)]);
        assert_eq!(spans[0].p2, vec![(4, 5)]);
        let p = Partition::from_assignment(vec![0, 1, 0, 2, 2, 2, 2, 2]);
        assert_eq!(communities_to_spans(&p, &g)[0].p1, vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn single_pair_scores_both_directions() {
        let g = graph(2, 1, &[(0, 1, 0.3), (1, 0, 0.5)]);
        let spans = communities_to_spans(&Partition::from_assignment(vec![0, 0]), &g);
        let pairs = rank_span_pairs(&spans, &g);
        assert_eq!(pairs.len(), 1);
        assert_eq!((pairs[0].p1, pairs[0].p2), ([0, 1], [0, 1]));
        assert!((pairs[0].score - 0.8).abs() < 1e-15);
    }

    #[test]
    fn p1_only_community_contributes_nothing() {
        let g = graph(3, 2, &[(0, 2, 0.4)]);
        let spans = communities_to_spans(&Partition::from_assignment(vec![0, 1, 0]), &g);
        let pairs = rank_span_pairs(&spans, &g);
        assert_eq!(pairs.len(), 1);
        assert_eq!(spans[1].p2, vec![]);
    }
}
