//! Choosing the attention head whose top-layer attention builds the graph.

mod classifier_weight;
mod scalar_mix;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use classifier_weight::{classifier_weight_head, head_scores};
pub use scalar_mix::{scalar_mix_train, ScalarMixHyper, ScalarMixModel};

use crate::dataset::{Corpus, Instance};
use crate::oracle::{EncodeResult, ModelMeta, Oracle, OracleError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeadError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no training examples")]
    NoData,
    #[error("no training example for class {0}")]
    MissingClass(usize),
    #[error("scalar-mix training diverged (non-finite loss) at learning rate {learning_rate:e}")]
    Divergence { learning_rate: f64 },
    #[error("instance '{instance}': {source}")]
    Oracle {
        instance: String,
        #[source]
        source: OracleError,
    },
    #[error("gold label {label} of instance '{instance}' is not among the model's labels")]
    UnknownLabel { instance: String, label: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadMethod {
    ClassifierWeight,
    ScalarMix,
}

impl HeadMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            HeadMethod::ClassifierWeight => "classifier-weight",
            HeadMethod::ScalarMix => "scalar-mix",
        }
    }
}

impl fmt::Display for HeadMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeadMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "classifier-weight" => Ok(HeadMethod::ClassifierWeight),
            "scalar-mix" => Ok(HeadMethod::ScalarMix),
            _ => Err(format!("unknown head method '{s}' (expected classifier-weight or scalar-mix)")),
        }
    }
}

/// How a head is chosen for each instance.
#[derive(Debug, Clone, PartialEq)]
pub enum HeadSelector {
    /// Per instance, from its CLS vector and the predicted class's weights.
    ClassifierWeight,
    /// One head for every instance, e.g. a trained scalar mix or the modal
    /// classifier-weight head.
    Fixed { method: HeadMethod, head: usize },
}

impl HeadSelector {
    pub fn method(&self) -> HeadMethod {
        match self {
            HeadSelector::ClassifierWeight => HeadMethod::ClassifierWeight,
            HeadSelector::Fixed { method, .. } => *method,
        }
    }

    /// 1-based head for an already encoded instance.
    pub fn head_for(&self, meta: &ModelMeta, enc: &EncodeResult) -> Result<usize, HeadError> {
        match self {
            HeadSelector::ClassifierWeight => {
                if meta.n != enc.cls.len() || meta.a != enc.head_count {
                    return Err(HeadError::Config(format!(
                        "model meta (n={}, a={}) disagrees with encode output (n={}, a={})",
                        meta.n,
                        meta.a,
                        enc.cls.len(),
                        enc.head_count
                    )));
                }
                classifier_weight_head(&enc.cls, &meta.class_weights(enc.predicted), meta.a)
            }
            HeadSelector::Fixed { head, .. } => {
                if *head == 0 || *head > enc.head_count {
                    return Err(HeadError::Config(format!("head {head} outside 1..={}", enc.head_count)));
                }
                Ok(*head)
            }
        }
    }
}

/// Encodes `instance` and returns the selector's head.
pub fn select_head(oracle: &dyn Oracle, instance: &Instance, selector: &HeadSelector) -> Result<usize, HeadError> {
    let wrap = |source| HeadError::Oracle { instance: instance.id.clone(), source };
    let meta = oracle.meta().map_err(wrap)?;
    let enc = oracle.encode(&instance.part1_tokens, &instance.part2_tokens).map_err(wrap)?;
    selector.head_for(&meta, &enc)
}

/// Frozen `(cls, gold class)` pairs for scalar-mix training.
pub fn collect_cls(oracle: &dyn Oracle, corpus: &Corpus) -> Result<(ModelMeta, Vec<(Vec<f64>, usize)>), HeadError> {
    let meta = oracle.meta().map_err(|source| HeadError::Oracle { instance: String::new(), source })?;
    let mut data = Vec::with_capacity(corpus.instances.len());
    for inst in &corpus.instances {
        let class = meta
            .class_of(inst.label)
            .ok_or_else(|| HeadError::UnknownLabel { instance: inst.id.clone(), label: inst.label.to_string() })?;
        let enc = oracle
            .encode(&inst.part1_tokens, &inst.part2_tokens)
            .map_err(|source| HeadError::Oracle { instance: inst.id.clone(), source })?;
        data.push((enc.cls, class));
    }
    Ok((meta, data))
}

/// Most frequent head, lowest index on ties.
pub fn modal_head(heads: &[usize]) -> Option<usize> {
    let max = *heads.iter().max()?;
    let mut counts = vec![0usize; max + 1];
    for &h in heads {
        counts[h] += 1;
    }
    let best = *counts.iter().max()?;
    counts.iter().position(|&c| c == best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Label, Part};
    use crate::oracle::{MockConfig, MockOracle};
    use std::collections::BTreeMap;

    fn inst(p1: &str, p2: &str, label: Label) -> Instance {
        Instance {
            id: format!("{p1}|{p2}"),
            label,
            part1_tokens: p1.split_whitespace().map(str::to_string).collect(),
            part2_tokens: p2.split_whitespace().map(str::to_string).collect(),
            annotations: BTreeMap::new(),
        }
    }

    #[test]
    fn mock_keyword_instances_select_head_two() {
        let o = MockOracle::new(MockConfig::default());
        let i = inst("a sad man", "nobody is tall", Label::Neutral);
        assert_eq!(select_head(&o, &i, &HeadSelector::ClassifierWeight).unwrap(), 2);
        assert_eq!(i.tokens(Part::P1).len(), 3);
    }

    #[test]
    fn fixed_selector_checks_range() {
        let o = MockOracle::new(MockConfig::default());
        let i = inst("a", "b", Label::Neutral);
        let sel = HeadSelector::Fixed { method: HeadMethod::ScalarMix, head: 5 };
        assert!(matches!(select_head(&o, &i, &sel), Err(HeadError::Config(_))));
    }

    #[test]
    fn modal_head_ties_to_lowest() {
        assert_eq!(modal_head(&[3, 2, 3, 2, 1]), Some(2));
        assert_eq!(modal_head(&[]), None);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [HeadMethod::ClassifierWeight, HeadMethod::ScalarMix] {
            assert_eq!(m.as_str().parse::<HeadMethod>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
        }
    }
}
