//! Label-consistency rules used for annotation quality control.
//!
//! Rules are evaluated on augmented annotations (system synonyms and
//! danglers present). Each rule is reported at most once per annotator.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Instance, InteractionType, Label, Level, Part};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// Contradiction needs at least one Antonym.
    #[serde(rename = "RULE_CONTRA_ANTONYM")]
    ContraAntonym,
    /// Antonyms only appear in Contradiction instances.
    #[serde(rename = "RULE_ANTONYM_ONLY_CONTRA")]
    AntonymOnlyContra,
    /// Neutral needs a Hypernym-P1-P2 or a Part 2 dangler.
    #[serde(rename = "RULE_NEUTRAL_HYPERNYM_OR_DANGLER")]
    NeutralHypernymOrDangler,
    /// Entailment: every high-level Part 2 token sits in a Synonym,
    /// Synonym-SYS or Hypernym-P2-P1 span.
    #[serde(rename = "RULE_ENTAIL_P2_COVERAGE")]
    EntailP2Coverage,
    /// Entailment must not contain Hypernym-P1-P2 (that makes the pair Neutral).
    #[serde(rename = "RULE_ENTAIL_NO_HYPERNYM_P1P2")]
    EntailNoHypernymP1P2,
    /// A human high-level span never spans a whole part.
    #[serde(rename = "RULE_HIGH_SPAN_NOT_WHOLE_PART")]
    HighSpanNotWholePart,
}

impl Rule {
    pub const ALL: [Rule; 6] = [
        Rule::ContraAntonym,
        Rule::AntonymOnlyContra,
        Rule::NeutralHypernymOrDangler,
        Rule::EntailP2Coverage,
        Rule::EntailNoHypernymP1P2,
        Rule::HighSpanNotWholePart,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Rule::ContraAntonym => "RULE_CONTRA_ANTONYM",
            Rule::AntonymOnlyContra => "RULE_ANTONYM_ONLY_CONTRA",
            Rule::NeutralHypernymOrDangler => "RULE_NEUTRAL_HYPERNYM_OR_DANGLER",
            Rule::EntailP2Coverage => "RULE_ENTAIL_P2_COVERAGE",
            Rule::EntailNoHypernymP1P2 => "RULE_ENTAIL_NO_HYPERNYM_P1P2",
            Rule::HighSpanNotWholePart => "RULE_HIGH_SPAN_NOT_WHOLE_PART",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub instance_id: String,
    pub annotator: String,
    pub rule: Rule,
    pub message: String,
}

pub fn validate_label_constraints(instance: &Instance, annotator: &str) -> Vec<Violation> {
    let its = instance.interactions(annotator);
    let has = |kind: InteractionType| its.iter().any(|it| it.kind == kind);
    let mut out = Vec::new();
    let mut flag = |rule: Rule, message: String| {
        out.push(Violation {
            instance_id: instance.id.clone(),
            annotator: annotator.to_string(),
            rule,
            message,
        })
    };

    match instance.label {
        Label::Contradiction => {
            if !has(InteractionType::Antonym) {
                flag(Rule::ContraAntonym, "Contradiction instance has no Antonym interaction".into());
            }
        }
        _ => {
            if has(InteractionType::Antonym) {
                flag(
                    Rule::AntonymOnlyContra,
                    format!("Antonym interaction in a {} instance", instance.label),
                );
            }
        }
    }

    if instance.label == Label::Neutral
        && !has(InteractionType::HypernymP1P2)
        && !has(InteractionType::DanglerSysP2)
    {
        flag(
            Rule::NeutralHypernymOrDangler,
            "Neutral instance has neither a Hypernym-P1-P2 nor a Part 2 dangler".into(),
        );
    }

    if instance.label == Label::Entailment {
        let mut covered = vec![false; instance.part2_tokens.len()];
        for it in its.iter().filter(|it| {
            it.level == Level::High
                && matches!(
                    it.kind,
                    InteractionType::Synonym | InteractionType::SynonymSys | InteractionType::HypernymP2P1
                )
        }) {
            if let Some(span) = it.span_p2 {
                for t in span.tokens() {
                    covered[t] = true;
                }
            }
        }
        let missing: Vec<usize> = covered.iter().enumerate().filter(|(_, &c)| !c).map(|(i, _)| i).collect();
        if !missing.is_empty() {
            flag(
                Rule::EntailP2Coverage,
                format!("Part 2 tokens {missing:?} are not entailed at the high level"),
            );
        }
        if has(InteractionType::HypernymP1P2) {
            flag(Rule::EntailNoHypernymP1P2, "Hypernym-P1-P2 interaction in an Entailment instance".into());
        }
    }

    let whole = its.iter().find(|it| {
        it.level == Level::High
            && it.kind.is_human()
            && it.spans().any(|s| s.start == 0 && s.end == instance.part_len(s.part))
    });
    if let Some(it) = whole {
        let part = if it.span_p1.is_some_and(|s| s.len() == instance.part_len(Part::P1)) { "Part 1" } else { "Part 2" };
        flag(
            Rule::HighSpanNotWholePart,
            format!("high-level {} span covers the whole of {part}", it.kind),
        );
    }

    out
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::dataset::Interaction;

    fn inst(label: Label, its: Vec<Interaction>) -> Instance {
        let mut annotations = BTreeMap::new();
        annotations.insert("A".to_string(), its);
        Instance {
            id: "c".into(),
            label,
            part1_tokens: "Two women are running outside".split(' ').map(String::from).collect(),
            part2_tokens: "Two men are walking".split(' ').map(String::from).collect(),
            annotations,
        }
    }

    fn rules(v: &[Violation]) -> Vec<Rule> {
        v.iter().map(|v| v.rule).collect()
    }

    #[test]
    fn contradiction_without_antonym() {
        let i = inst(Label::Contradiction, vec![Interaction::pair(InteractionType::Synonym, Level::Low, (0, 1), (0, 1))]);
        assert_eq!(rules(&validate_label_constraints(&i, "A")), vec![Rule::ContraAntonym]);
    }

    #[test]
    fn neutral_with_hypernym_is_clean() {
        let i = inst(Label::Neutral, vec![Interaction::pair(InteractionType::HypernymP1P2, Level::High, (0, 2), (0, 2))]);
        assert!(validate_label_constraints(&i, "A").is_empty());
    }

    #[test]
    fn antonym_outside_contradiction() {
        let i = inst(
            Label::Entailment,
            vec![
                Interaction::pair(InteractionType::Synonym, Level::High, (0, 2), (0, 2)),
                Interaction::pair(InteractionType::Synonym, Level::High, (2, 4), (2, 4)),
                Interaction::pair(InteractionType::Antonym, Level::Low, (1, 2), (1, 2)),
            ],
        );
        assert_eq!(rules(&validate_label_constraints(&i, "A")), vec![Rule::AntonymOnlyContra]);
    }

    #[test]
    fn unknown_annotator_has_no_interactions() {
        let i = inst(Label::Contradiction, vec![]);
        assert_eq!(rules(&validate_label_constraints(&i, "nobody")), vec![Rule::ContraAntonym]);
    }
}
