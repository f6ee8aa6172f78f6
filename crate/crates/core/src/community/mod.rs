//! Community detection on interaction graphs and span-pair explanations.

mod explain;
mod louvain;
mod modularity;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use explain::{
    communities_to_spans, extract_detailed, extract_explanation, rank_span_pairs, CommunitySpans, Explanation,
    ExtractConfig, ExtractError, Extraction, SpanPair,
};
pub use louvain::{louvain_digraph, louvain_traced, louvain_with_restarts, MoveEvent, DEFAULT_RESTARTS, MIN_GAIN};
pub use modularity::{directed_modularity, modularity, Digraph};

use crate::graph::InteractionGraph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommunityError {
    #[error("modularity is undefined on a graph without edge weight")]
    EmptyGraph,
    #[error("partition assigns {assigned} nodes but the graph has {nodes}")]
    SizeMismatch { nodes: usize, assigned: usize },
}

/// Community id per node, dense from 0 in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    pub assignment: Vec<usize>,
}

impl Partition {
    /// Renumbers arbitrary labels densely by first appearance.
    pub fn from_assignment(labels: Vec<usize>) -> Self {
        let mut map = std::collections::HashMap::new();
        let assignment = labels
            .into_iter()
            .map(|l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        Partition { assignment }
    }

    pub fn singletons(n: usize) -> Self {
        Partition { assignment: (0..n).collect() }
    }

    pub fn community_count(&self) -> usize {
        self.assignment.iter().max().map_or(0, |&c| c + 1)
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.community_count()];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }
}

pub fn louvain(graph: &InteractionGraph, seed: u64) -> Partition {
    louvain_digraph(&Digraph::from_graph(graph), seed)
}
