//! Corpus statistics and agreement reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::kappa::group_kappa;
use super::matching::{match_interactions, MatchGroup, MatchMode};
use crate::dataset::{Corpus, DatasetKind, Instance, InteractionType, Label, Level};

/// Number of raters whose groups enter the kappa computation.
pub const KAPPA_RATERS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeLevelStat {
    #[serde(rename = "type")]
    pub kind: InteractionType,
    pub level: Level,
    /// Interactions summed over annotators.
    pub count: usize,
    /// Mean token length over every span of this type (both parts).
    pub mean_span_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub dataset: DatasetKind,
    pub total_instances: usize,
    pub instances_by_label: BTreeMap<Label, usize>,
    pub interactions: Vec<TypeLevelStat>,
    pub total_interactions: usize,
}

#[derive(Default, Clone, Copy)]
struct Acc {
    count: usize,
    span_tokens: usize,
    spans: usize,
}

fn accumulate(instance: &Instance, acc: &mut BTreeMap<(InteractionType, Level), Acc>) {
    for its in instance.annotations.values() {
        for it in its {
            let a = acc.entry((it.kind, it.level)).or_default();
            a.count += 1;
            for s in it.spans() {
                a.span_tokens += s.len();
                a.spans += 1;
            }
        }
    }
}

pub fn summarize(corpus: &Corpus) -> CorpusSummary {
    let mut by_label: BTreeMap<Label, usize> = Label::ALL.iter().map(|&l| (l, 0)).collect();
    let mut acc = BTreeMap::new();
    for inst in &corpus.instances {
        *by_label.entry(inst.label).or_default() += 1;
        accumulate(inst, &mut acc);
    }
    let mut interactions = Vec::new();
    for kind in InteractionType::ALL {
        for level in Level::ALL {
            let a = acc.get(&(kind, level)).copied().unwrap_or_default();
            interactions.push(TypeLevelStat {
                kind,
                level,
                count: a.count,
                mean_span_length: (a.spans > 0).then(|| a.span_tokens as f64 / a.spans as f64),
            });
        }
    }
    let total_interactions = interactions.iter().map(|s| s.count).sum();
    CorpusSummary {
        dataset: corpus.dataset,
        total_instances: corpus.instances.len(),
        instances_by_label: by_label,
        interactions,
        total_interactions,
    }
}

impl CorpusSummary {
    /// `section,key,level,value` rows covering label counts, interaction counts and span lengths.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,table,key,level,value\n");
        for (label, n) in &self.instances_by_label {
            let _ = writeln!(out, "{},instances,{},,{}", self.dataset, label, n);
        }
        let _ = writeln!(out, "{},instances,Total,,{}", self.dataset, self.total_instances);
        for s in &self.interactions {
            let _ = writeln!(out, "{},count,{},{},{}", self.dataset, s.kind, s.level, s.count);
        }
        for s in &self.interactions {
            let v = s.mean_span_length.map(|v| format!("{v:.2}")).unwrap_or_default();
            let _ = writeln!(out, "{},span_length,{},{},{}", self.dataset, s.kind, s.level, v);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub annotators: usize,
    pub level: Level,
    /// Match groups annotated by exactly `annotators` distinct annotators.
    pub groups: usize,
    /// Human interactions inside those groups.
    pub interactions: usize,
    /// Only for groups rated by [`KAPPA_RATERS`] annotators, when defined.
    pub fleiss_kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub dataset: DatasetKind,
    pub mode: MatchMode,
    pub rows: Vec<AgreementRow>,
    /// Human-annotated interactions at the reported levels.
    pub total_interactions: usize,
    pub type_counts: BTreeMap<String, usize>,
}

pub fn corpus_groups(corpus: &Corpus, mode: MatchMode, level: Level) -> Vec<MatchGroup> {
    corpus.instances.iter().flat_map(|i| match_interactions(i, mode, level)).collect()
}

pub fn agreement_report(corpus: &Corpus, mode: MatchMode, levels: &[Level]) -> AgreementReport {
    let mut rows = Vec::new();
    let mut total = 0;
    let mut type_counts: BTreeMap<String, usize> = BTreeMap::new();
    for &level in levels {
        let groups = corpus_groups(corpus, mode, level);
        let max_annotators = groups.iter().map(MatchGroup::annotator_count).max().unwrap_or(0).max(KAPPA_RATERS);
        for g in &groups {
            total += g.members.len();
            for m in &g.members {
                *type_counts.entry(m.interaction.kind.to_string()).or_default() += 1;
            }
        }
        for n in 1..=max_annotators {
            let selected: Vec<&MatchGroup> = groups.iter().filter(|g| g.annotator_count() == n).collect();
            let kappa = if n == KAPPA_RATERS {
                let owned: Vec<MatchGroup> = selected.iter().map(|g| (*g).clone()).collect();
                group_kappa(&owned, KAPPA_RATERS).ok()
            } else {
                None
            };
            rows.push(AgreementRow {
                annotators: n,
                level,
                groups: selected.len(),
                interactions: selected.iter().map(|g| g.members.len()).sum(),
                fleiss_kappa: kappa,
            });
        }
    }
    rows.sort_by_key(|r| (r.annotators, r.level));
    AgreementReport { dataset: corpus.dataset, mode, rows, total_interactions: total, type_counts }
}

impl AgreementReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,mode,annotators,level,interactions,fleiss_kappa\n");
        for r in &self.rows {
            let kappa = r.fleiss_kappa.map(|k| format!("{:.2}", k * 100.0)).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "{},{},{},{},{},{}", self.dataset, self.mode, r.annotators, r.level, r.groups, kappa);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Interaction;

    fn one_annotator_corpus() -> Corpus {
        let mut annotations = BTreeMap::new();
        annotations.insert(
            "A".to_string(),
            vec![
                Interaction::pair(InteractionType::Synonym, Level::Low, (0, 1), (0, 1)),
                Interaction::pair(InteractionType::Antonym, Level::High, (0, 2), (0, 3)),
            ],
        );
        Corpus {
            dataset: DatasetKind::Snli,
            instances: vec![Instance {
                id: "1".into(),
                label: Label::Contradiction,
                part1_tokens: vec!["a".into(), "b".into(), "c".into()],
                part2_tokens: vec!["x".into(), "y".into(), "z".into()],
                annotations,
            }],
        }
    }

    #[test]
    fn single_annotator_groups_are_all_size_one() {
        let c = one_annotator_corpus();
        let r = agreement_report(&c, MatchMode::Exact, &Level::ALL);
        for row in &r.rows {
            if row.annotators == 1 {
                assert_eq!(row.groups, 1);
            } else {
                assert_eq!(row.groups, 0);
            }
        }
        assert_eq!(r.total_interactions, 2);
        assert_eq!(r.rows.iter().map(|r| r.interactions).sum::<usize>(), 2);
    }

    #[test]
    fn span_length_means() {
        let s = summarize(&one_annotator_corpus());
        let ant = s.interactions.iter().find(|t| t.kind == InteractionType::Antonym && t.level == Level::High).unwrap();
        assert_eq!(ant.count, 1);
        assert_eq!(ant.mean_span_length, Some(2.5));
        assert_eq!(s.total_instances, 1);
        assert_eq!(s.instances_by_label[&Label::Contradiction], 1);
    }
}
