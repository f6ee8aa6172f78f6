//! Directed bipartite token graph built from one head's attention.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Part;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("attention is not square: row {row} has {got} entries, expected {expected}")]
    NotSquare { row: usize, got: usize, expected: usize },
    #[error("negative or non-finite attention {value} at ({row}, {col})")]
    InvalidWeight { row: usize, col: usize, value: f64 },
    #[error("part boundary {boundary} leaves a part empty ({tokens} tokens)")]
    Boundary { boundary: usize, tokens: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// Nodes are token positions `0..len`; positions below `boundary` are Part 1.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph {
    pub len: usize,
    pub boundary: usize,
    pub edges: Vec<Edge>,
}

impl InteractionGraph {
    pub fn part_of(&self, node: usize) -> Part {
        if node < self.boundary {
            Part::P1
        } else {
            Part::P2
        }
    }

    /// Position of `node` within its own part.
    pub fn local_index(&self, node: usize) -> usize {
        if node < self.boundary {
            node
        } else {
            node - self.boundary
        }
    }

    pub fn node_of(&self, part: Part, index: usize) -> usize {
        match part {
            Part::P1 => index,
            Part::P2 => self.boundary + index,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Debug dump: `{"nodes":[{"id","part","word"}],"edges":[[src,dst,w]]}`.
    pub fn to_debug_json(&self, words: &[String]) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = (0..self.len)
            .map(|i| {
                serde_json::json!({
                    "id": i,
                    "part": self.part_of(i),
                    "word": words.get(i).cloned().unwrap_or_default(),
                })
            })
            .collect();
        let edges: Vec<serde_json::Value> =
            self.edges.iter().map(|e| serde_json::json!([e.src, e.dst, e.weight])).collect();
        serde_json::json!({ "nodes": nodes, "edges": edges })
    }
}

/// Keeps every cross-part entry with weight `> 0` and `>= epsilon`, row-major.
pub fn build_graph(attention: &[Vec<f64>], boundary: usize, epsilon: f64) -> Result<InteractionGraph, GraphError> {
    let len = attention.len();
    if boundary == 0 || boundary >= len {
        return Err(GraphError::Boundary { boundary, tokens: len });
    }
    for (row, r) in attention.iter().enumerate() {
        if r.len() != len {
            return Err(GraphError::NotSquare { row, got: r.len(), expected: len });
        }
        if let Some((col, &value)) = r.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(GraphError::InvalidWeight { row, col, value });
        }
    }
    let mut edges = Vec::new();
    for (src, row) in attention.iter().enumerate() {
        for (dst, &weight) in row.iter().enumerate() {
            if (src < boundary) != (dst < boundary) && weight > 0.0 && weight >= epsilon {
                edges.push(Edge { src, dst, weight });
            }
        }
    }
    Ok(InteractionGraph { len, boundary, edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_diagonal_has_no_edges() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let g = build_graph(&a, 1, 0.0).unwrap();
        assert!(g.edges.is_empty());
        assert_eq!(g.total_weight(), 0.0);
    }

    #[test]
    fn two_edge_example() {
        // P1 = {a, b}, P2 = {x}
        let a = vec![vec![0.7, 0.0, 0.3], vec![1.0, 0.0, 0.0], vec![0.5, 0.0, 0.5]];
        let g = build_graph(&a, 2, 0.0).unwrap();
        assert_eq!(g.edges, vec![Edge { src: 0, dst: 2, weight: 0.3 }, Edge { src: 2, dst: 0, weight: 0.5 }]);
        assert!((g.total_weight() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let a = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        assert!(matches!(build_graph(&a, 0, 0.0), Err(GraphError::Boundary { .. })));
        assert!(matches!(build_graph(&a, 2, 0.0), Err(GraphError::Boundary { .. })));
        let neg = vec![vec![1.5, -0.5], vec![0.5, 0.5]];
        assert!(matches!(build_graph(&neg, 1, 0.0), Err(GraphError::InvalidWeight { row: 0, col: 1, .. })));
        let ragged = vec![vec![1.0], vec![0.5, 0.5]];
        assert!(matches!(build_graph(&ragged, 1, 0.0), Err(GraphError::NotSquare { row: 0, .. })));
    }

    #[test]
    fn debug_dump_shape() {
        let a = vec![vec![0.5, 0.5], vec![0.25, 0.75]];
        let g = build_graph(&a, 1, 0.0).unwrap();
        let v = g.to_debug_json(&["a".into(), "x".into()]);
        assert_eq!(v["nodes"][1]["part"], "P2");
        assert_eq!(v["edges"][1], serde_json::json!([1, 0, 0.25]));
    }
}
