use super::{CommunityError, Partition};
use crate::graph::InteractionGraph;

/// Weighted digraph with merged parallel edges; self-loops allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    pub(crate) out: Vec<Vec<(usize, f64)>>,
    pub(crate) inn: Vec<Vec<(usize, f64)>>,
    pub(crate) k_out: Vec<f64>,
    pub(crate) k_in: Vec<f64>,
    pub(crate) m: f64,
}

impl Digraph {
    /// Parallel edges are summed; adjacency lists are sorted by neighbour.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (s, d, w) in edges {
            out[s].push((d, w));
        }
        for list in &mut out {
            list.sort_by_key(|&(d, _)| d);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(list.len());
            for &(d, w) in list.iter() {
                match merged.last_mut() {
                    Some((ld, lw)) if *ld == d => *lw += w,
                    _ => merged.push((d, w)),
                }
            }
            *list = merged;
        }
        let mut inn: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (s, list) in out.iter().enumerate() {
            for &(d, w) in list {
                inn[d].push((s, w));
            }
        }
        let k_out: Vec<f64> = out.iter().map(|l| l.iter().map(|e| e.1).sum()).collect();
        let k_in: Vec<f64> = inn.iter().map(|l| l.iter().map(|e| e.1).sum()).collect();
        let m = k_out.iter().sum();
        Digraph { out, inn, k_out, k_in, m }
    }

    pub fn from_graph(g: &InteractionGraph) -> Self {
        Digraph::from_edges(g.len, g.edges.iter().map(|e| (e.src, e.dst, e.weight)))
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.m
    }

    pub fn out_degree(&self, i: usize) -> f64 {
        self.k_out[i]
    }

    pub fn in_degree(&self, i: usize) -> f64 {
        self.k_in[i]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.out.iter().enumerate().flat_map(|(s, l)| l.iter().map(move |&(d, w)| (s, d, w)))
    }
}

/// `Q = (1/m) Σ_ij [A_ij − k_i^out k_j^in / m] δ(c_i, c_j)`.
pub fn modularity(g: &Digraph, communities: &[usize]) -> Result<f64, CommunityError> {
    if !(g.m > 0.0) {
        return Err(CommunityError::EmptyGraph);
    }
    if communities.len() != g.node_count() {
        return Err(CommunityError::SizeMismatch { nodes: g.node_count(), assigned: communities.len() });
    }
    let count = communities.iter().max().map_or(0, |&c| c + 1);
    let mut s_out = vec![0.0; count];
    let mut s_in = vec![0.0; count];
    for (i, &c) in communities.iter().enumerate() {
        s_out[c] += g.k_out[i];
        s_in[c] += g.k_in[i];
    }
    let intra: f64 = g.edges().filter(|&(s, d, _)| communities[s] == communities[d]).map(|(_, _, w)| w).sum();
    let expected: f64 = s_out.iter().zip(&s_in).map(|(o, i)| o * i).sum();
    Ok(intra / g.m - expected / (g.m * g.m))
}

pub fn directed_modularity(graph: &InteractionGraph, partition: &Partition) -> Result<f64, CommunityError> {
    modularity(&Digraph::from_graph(graph), &partition.assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Digraph {
        // a=0, b=1, x=2, y=3
        Digraph::from_edges(4, [(0, 2, 0.9), (1, 3, 0.9), (0, 3, 0.1), (1, 2, 0.1)])
    }

    #[test]
    fn singleton_partition_formula() {
        let g = toy();
        let q = modularity(&g, &[0, 1, 2, 3]).unwrap();
        let expect: f64 = -(0..4).map(|i| g.k_out[i] * g.k_in[i]).sum::<f64>() / (g.m * g.m);
        assert!((q - expect).abs() < 1e-15);
        // no node has both in- and out-weight here
        assert_eq!(q, 0.0);
    }

    #[test]
    fn matched_pairs_beat_crossed_pairs() {
        let g = toy();
        let good = modularity(&g, &[0, 1, 0, 1]).unwrap();
        let bad = modularity(&g, &[0, 1, 1, 0]).unwrap();
        assert!(good > bad);
        // (1.8 / 2) − (1·1 + 1·1) / 4 = 0.4
        assert!((good - 0.4).abs() < 1e-12);
    }

    #[test]
    fn parallel_edges_merge() {
        let g = Digraph::from_edges(2, [(0, 1, 0.25), (0, 1, 0.5), (1, 1, 1.0)]);
        assert_eq!(g.out[0], vec![(1, 0.75)]);
        assert_eq!(g.k_in[1], 1.75);
        assert_eq!(g.m, 1.75);
    }

    #[test]
    fn empty_graph_is_undefined() {
        let g = Digraph::from_edges(3, []);
        assert_eq!(modularity(&g, &[0, 1, 2]), Err(CommunityError::EmptyGraph));
    }
}
