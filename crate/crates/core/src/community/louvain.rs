//! Directed Louvain: seeded local moves, then aggregation, until stable.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::modularity::{modularity, Digraph};
use super::Partition;

/// Minimum gain for a move to count as an improvement.
pub const MIN_GAIN: f64 = 1e-12;
/// Independent runs per graph.
pub const DEFAULT_RESTARTS: usize = 8;

/// One accepted move, reported on the original nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveEvent {
    pub level: usize,
    /// Node of the level graph that moved.
    pub node: usize,
    /// Gain computed from the local formula.
    pub delta: f64,
    /// Original-node assignment before and after the move (not renumbered).
    pub before: Vec<usize>,
    pub after: Vec<usize>,
}

struct Level<'a> {
    g: &'a Digraph,
    comm: Vec<usize>,
    s_out: Vec<f64>,
    s_in: Vec<f64>,
}

impl<'a> Level<'a> {
    fn new(g: &'a Digraph) -> Self {
        Level { g, comm: (0..g.node_count()).collect(), s_out: g.k_out.clone(), s_in: g.k_in.clone() }
    }

    /// Starts from an existing assignment with ids below the node count.
    fn with_assignment(g: &'a Digraph, comm: Vec<usize>) -> Self {
        let n = g.node_count();
        let (mut s_out, mut s_in) = (vec![0.0; n], vec![0.0; n]);
        for (i, &c) in comm.iter().enumerate() {
            s_out[c] += g.k_out[i];
            s_in[c] += g.k_in[i];
        }
        Level { g, comm, s_out, s_in }
    }

    /// `k_{i,C}/m − (k_i^out Σ_tot^in + k_i^in Σ_tot^out)/m²` for node `i` outside `C`.
    fn gain(&self, i: usize, c: usize, k_ic: f64) -> f64 {
        let m = self.g.m;
        k_ic / m - (self.g.k_out[i] * self.s_in[c] + self.g.k_in[i] * self.s_out[c]) / (m * m)
    }

    /// Weight between `i` and each neighbouring community, both directions,
    /// self-loop excluded. Communities appear in first-encountered order.
    fn neighbour_weights(&self, i: usize, order: &mut Vec<usize>, weight: &mut [f64]) {
        for &(j, w) in self.g.out[i].iter().chain(self.g.inn[i].iter()) {
            if j == i {
                continue;
            }
            let c = self.comm[j];
            if weight[c] == 0.0 && !order.contains(&c) {
                order.push(c);
            }
            weight[c] += w;
        }
    }
}

fn lift(membership: &[usize], comm: &[usize]) -> Vec<usize> {
    membership.iter().map(|&node| comm[node]).collect()
}

/// Runs one local-move phase; returns whether any node moved.
fn move_phase(
    level: &mut Level<'_>,
    rng: &mut ChaCha8Rng,
    depth: usize,
    membership: &[usize],
    observer: &mut Option<&mut dyn FnMut(&MoveEvent)>,
) -> bool {
    let n = level.g.node_count();
    let mut visit: Vec<usize> = (0..n).collect();
    visit.shuffle(rng);
    let mut members = vec![0usize; n];
    for &c in &level.comm {
        members[c] += 1;
    }
    let mut weight = vec![0.0f64; n];
    let mut order = Vec::new();
    let mut moved_any = false;
    loop {
        let mut moved = false;
        for &i in &visit {
            let from = level.comm[i];
            order.clear();
            level.neighbour_weights(i, &mut order, &mut weight);

            level.s_out[from] -= level.g.k_out[i];
            level.s_in[from] -= level.g.k_in[i];
            members[from] -= 1;
            let stay = level.gain(i, from, weight[from]);

            let mut candidate: Option<(usize, f64)> = None;
            for &c in &order {
                if c == from {
                    continue;
                }
                let g = level.gain(i, c, weight[c]);
                if candidate.is_none_or(|(_, best)| g > best) {
                    candidate = Some((c, g));
                }
            }
            let (mut best, mut best_gain) = match candidate {
                Some((c, g)) if g > stay + MIN_GAIN => (c, g),
                _ => (from, stay),
            };
            // an empty community has gain 0
            if members[from] > 0 && 0.0 > best_gain + MIN_GAIN {
                if let Some(empty) = members.iter().position(|&k| k == 0) {
                    best = empty;
                    best_gain = 0.0;
                }
            }

            let before = observer.as_ref().map(|_| lift(membership, &level.comm));
            level.s_out[best] += level.g.k_out[i];
            level.s_in[best] += level.g.k_in[i];
            members[best] += 1;
            level.comm[i] = best;
            for &c in &order {
                weight[c] = 0.0;
            }
            if best != from {
                moved = true;
                moved_any = true;
                if let (Some(obs), Some(before)) = (observer.as_mut(), before) {
                    let after = lift(membership, &level.comm);
                    obs(&MoveEvent { level: depth, node: i, delta: best_gain - stay, before, after });
                }
            }
        }
        if !moved {
            return moved_any;
        }
    }
}

/// Renumbers `comm` densely and builds the community graph (self-loops kept).
fn aggregate(g: &Digraph, comm: &[usize]) -> (Digraph, Vec<usize>) {
    let mut dense = vec![usize::MAX; g.node_count()];
    let mut next = 0;
    let relabel: Vec<usize> = comm
        .iter()
        .map(|&c| {
            if dense[c] == usize::MAX {
                dense[c] = next;
                next += 1;
            }
            dense[c]
        })
        .collect();
    let edges: Vec<(usize, usize, f64)> = g.edges().map(|(s, d, w)| (relabel[s], relabel[d], w)).collect();
    (Digraph::from_edges(next, edges), relabel)
}

/// Multilevel passes alternate with a node-level refinement on the original
/// graph until the refinement moves nothing.
fn run(g: &Digraph, seed: u64, observer: &mut Option<&mut dyn FnMut(&MoveEvent)>) -> Partition {
    let n = g.node_count();
    let identity: Vec<usize> = (0..n).collect();
    let mut membership = identity.clone();
    if !(g.m > 0.0) {
        return Partition::from_assignment(membership);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = g.clone();
    let mut depth = 0;
    loop {
        loop {
            let mut level = Level::new(&current);
            let moved = move_phase(&mut level, &mut rng, depth, &membership, observer);
            if !moved {
                break;
            }
            let (next, relabel) = aggregate(&current, &level.comm);
            for m in membership.iter_mut() {
                *m = relabel[*m];
            }
            depth += 1;
            if next.node_count() == current.node_count() {
                break;
            }
            current = next;
        }
        let mut level = Level::with_assignment(g, membership.clone());
        if !move_phase(&mut level, &mut rng, depth, &identity, observer) {
            break;
        }
        let (next, relabel) = aggregate(g, &level.comm);
        membership = relabel;
        current = next;
        depth += 1;
    }
    Partition::from_assignment(membership)
}

/// Best of `restarts` runs by modularity; run 0 uses `seed`, later runs use
/// seeds derived from it. The earliest run wins ties.
fn best_of(g: &Digraph, seed: u64, restarts: usize, mut observer: Option<&mut dyn FnMut(&MoveEvent)>) -> Partition {
    let mut best: Option<(f64, Partition)> = None;
    for r in 0..restarts.max(1) {
        let run_seed = if r == 0 { seed } else { derive_seed(seed, r as u64) };
        let p = run(g, run_seed, &mut observer);
        let Ok(q) = modularity(g, &p.assignment) else { return p };
        if best.as_ref().is_none_or(|(bq, _)| q > *bq) {
            best = Some((q, p));
        }
    }
    best.map(|(_, p)| p).expect("at least one run")
}

fn derive_seed(seed: u64, r: u64) -> u64 {
    let mut x = seed ^ r.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Louvain partition of a weighted digraph. Deterministic for a given seed;
/// a graph without weight yields singletons.
pub fn louvain_digraph(g: &Digraph, seed: u64) -> Partition {
    best_of(g, seed, DEFAULT_RESTARTS, None)
}

pub fn louvain_with_restarts(g: &Digraph, seed: u64, restarts: usize) -> Partition {
    best_of(g, seed, restarts, None)
}

/// As [`louvain_with_restarts`], reporting every accepted move of every run.
pub fn louvain_traced(g: &Digraph, seed: u64, restarts: usize, observer: &mut dyn FnMut(&MoveEvent)) -> Partition {
    best_of(g, seed, restarts, Some(observer))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_directed_edge_has_zero_gain() {
        // merged: 1 − (0.4 · 0.4) / 0.16 = 0, same as singletons, so no move is positive
        let g = Digraph::from_edges(2, [(0, 1, 0.4)]);
        assert_eq!(modularity(&g, &[0, 0]).unwrap(), 0.0);
        assert_eq!(modularity(&g, &[0, 1]).unwrap(), 0.0);
        assert_eq!(louvain_digraph(&g, 0).assignment, vec![0, 1]);
    }

    #[test]
    fn reciprocal_pair_merges() {
        let g = Digraph::from_edges(2, [(0, 1, 0.3), (1, 0, 0.5)]);
        for seed in 0..4 {
            assert_eq!(louvain_digraph(&g, seed).assignment, vec![0, 0]);
        }
    }

    #[test]
    fn two_pair_toy() {
        let g = Digraph::from_edges(4, [(0, 2, 0.9), (1, 3, 0.9), (0, 3, 0.1), (1, 2, 0.1)]);
        for seed in 0..20 {
            let p = louvain_digraph(&g, seed);
            assert_eq!(p.assignment, vec![0, 1, 0, 1], "seed {seed}");
        }
    }

    #[test]
    fn traced_moves_are_consistent() {
        let g = Digraph::from_edges(
            6,
            [(0, 3, 0.5), (3, 0, 0.2), (1, 4, 0.7), (4, 1, 0.1), (2, 5, 0.3), (0, 4, 0.05), (5, 2, 0.6), (1, 3, 0.2)],
        );
        let mut count = 0;
        louvain_traced(&g, 3, 1, &mut |e| {
            let q0 = modularity(&g, &e.before).unwrap();
            let q1 = modularity(&g, &e.after).unwrap();
            assert!((e.delta - (q1 - q0)).abs() < 1e-12);
            assert!(e.delta > 0.0);
            count += 1;
        });
        assert!(count > 0);
    }

    #[test]
    fn weightless_graph_gives_singletons() {
        let g = Digraph::from_edges(3, []);
        assert_eq!(louvain_digraph(&g, 1).assignment, vec![0, 1, 2]);
    }
}
