//! Grouping of annotators' interactions by span agreement.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Instance, Interaction, Level};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Identical `(span_p1, span_p2)` tuples.
    Exact,
    /// Both spans share at least one token; groups are connected components.
    Relaxed,
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchMode::Exact => "exact",
            MatchMode::Relaxed => "relaxed",
        })
    }
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(MatchMode::Exact),
            "relaxed" => Ok(MatchMode::Relaxed),
            other => Err(format!("unknown match mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupMember {
    pub annotator: String,
    /// Position in the annotator's interaction list.
    pub index: usize,
    pub interaction: Interaction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchGroup {
    pub mode: MatchMode,
    pub level: Level,
    pub members: Vec<GroupMember>,
}

impl MatchGroup {
    /// Number of distinct annotators in the group.
    pub fn annotator_count(&self) -> usize {
        self.members.iter().map(|m| m.annotator.as_str()).collect::<BTreeSet<_>>().len()
    }

    pub fn contains(&self, annotator: &str, index: usize) -> bool {
        self.members.iter().any(|m| m.annotator == annotator && m.index == index)
    }
}

/// Relaxed relation: P1 spans overlap and P2 spans overlap.
pub fn relaxed_match(a: &Interaction, b: &Interaction) -> bool {
    match (a.span_p1, a.span_p2, b.span_p1, b.span_p2) {
        (Some(a1), Some(a2), Some(b1), Some(b2)) => a1.overlaps(&b1) && a2.overlaps(&b2),
        _ => false,
    }
}

fn human_members(instance: &Instance, level: Level) -> Vec<GroupMember> {
    instance
        .annotations
        .iter()
        .flat_map(|(annotator, its)| {
            its.iter()
                .enumerate()
                .filter(move |(_, it)| it.level == level && it.kind.is_human())
                .map(move |(index, it)| GroupMember { annotator: annotator.clone(), index, interaction: it.clone() })
        })
        .collect()
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Partitions the human-annotated interactions of one level into match groups.
///
/// Exact groups hold at most one interaction per annotator: an annotator's
/// k-th interaction with a given span tuple joins the k-th group for that
/// tuple. Relaxed groups are connected components of the pairwise relaxed
/// relation between interactions of different annotators.
pub fn match_interactions(instance: &Instance, mode: MatchMode, level: Level) -> Vec<MatchGroup> {
    let members = human_members(instance, level);
    match mode {
        MatchMode::Exact => {
            // (key, groups for that key) in first-seen order
            let mut keyed: Vec<(_, Vec<Vec<GroupMember>>)> = Vec::new();
            for m in members {
                let key = (m.interaction.span_p1, m.interaction.span_p2);
                let slot = match keyed.iter().position(|(k, _)| *k == key) {
                    Some(p) => p,
                    None => {
                        keyed.push((key, Vec::new()));
                        keyed.len() - 1
                    }
                };
                let groups = &mut keyed[slot].1;
                match groups.iter_mut().find(|g| g.iter().all(|x| x.annotator != m.annotator)) {
                    Some(g) => g.push(m),
                    None => groups.push(vec![m]),
                }
            }
            keyed
                .into_iter()
                .flat_map(|(_, gs)| gs)
                .map(|members| MatchGroup { mode, level, members })
                .collect()
        }
        MatchMode::Relaxed => {
            let n = members.len();
            let mut parent: Vec<usize> = (0..n).collect();
            for i in 0..n {
                for j in (i + 1)..n {
                    if members[i].annotator != members[j].annotator
                        && relaxed_match(&members[i].interaction, &members[j].interaction)
                    {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                        if ri != rj {
                            parent[ri.max(rj)] = ri.min(rj);
                        }
                    }
                }
            }
            let mut roots: Vec<usize> = Vec::new();
            let mut groups: Vec<Vec<GroupMember>> = Vec::new();
            for (i, m) in members.into_iter().enumerate() {
                let r = find(&mut parent, i);
                match roots.iter().position(|&x| x == r) {
                    Some(p) => groups[p].push(m),
                    None => {
                        roots.push(r);
                        groups.push(vec![m]);
                    }
                }
            }
            groups.into_iter().map(|members| MatchGroup { mode, level, members }).collect()
        }
    }
}
