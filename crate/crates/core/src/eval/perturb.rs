use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{Instance, InteractionType, Level, Part, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbMode {
    /// Delete the selected tokens.
    Remove,
    /// Keep only the selected tokens.
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    RandomPhrase,
    PartPhrase,
}

impl BaselineKind {
    /// Name used as the `type` of baseline cells in reports.
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::RandomPhrase => "Random-Phrase",
            BaselineKind::PartPhrase => "Part-Phrase",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" | "random-phrase" => Ok(BaselineKind::RandomPhrase),
            "part" | "part-phrase" => Ok(BaselineKind::PartPhrase),
            other => Err(format!("unknown baseline '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SelectionSource {
    HumanType { interaction: InteractionType, level: Level, annotator: String },
    ExtractedTopK { k: usize },
    Baseline { baseline: BaselineKind },
}

/// Selected tokens of one instance, as a mask per part.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSelection {
    pub instance_id: String,
    pub p1: Vec<bool>,
    pub p2: Vec<bool>,
    pub source: SelectionSource,
}

impl TokenSelection {
    pub fn empty(instance: &Instance, source: SelectionSource) -> Self {
        TokenSelection {
            instance_id: instance.id.clone(),
            p1: vec![false; instance.part1_tokens.len()],
            p2: vec![false; instance.part2_tokens.len()],
            source,
        }
    }

    pub fn full(instance: &Instance, source: SelectionSource) -> Self {
        let mut s = Self::empty(instance, source);
        s.p1.fill(true);
        s.p2.fill(true);
        s
    }

    /// Union of the spans' tokens. Spans must lie inside their parts.
    pub fn from_spans<'a>(
        instance: &Instance,
        spans: impl IntoIterator<Item = &'a Span>,
        source: SelectionSource,
    ) -> Self {
        let mut s = Self::empty(instance, source);
        for span in spans {
            s.add(span);
        }
        s
    }

    pub fn add(&mut self, span: &Span) {
        let mask = self.mask_mut(span.part);
        for t in span.tokens() {
            mask[t] = true;
        }
    }

    pub fn mask(&self, part: Part) -> &[bool] {
        match part {
            Part::P1 => &self.p1,
            Part::P2 => &self.p2,
        }
    }

    fn mask_mut(&mut self, part: Part) -> &mut Vec<bool> {
        match part {
            Part::P1 => &mut self.p1,
            Part::P2 => &mut self.p2,
        }
    }

    pub fn complement(&self) -> Self {
        TokenSelection {
            instance_id: self.instance_id.clone(),
            p1: self.p1.iter().map(|b| !b).collect(),
            p2: self.p2.iter().map(|b| !b).collect(),
            source: self.source.clone(),
        }
    }

    pub fn count(&self) -> usize {
        self.p1.iter().chain(&self.p2).filter(|&&b| b).count()
    }

    pub fn indices(&self, part: Part) -> Vec<usize> {
        self.mask(part).iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }
}

/// A perturbation that would leave a part without tokens.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{mode:?} perturbation leaves {part:?} empty")]
pub struct EmptyPart {
    pub part: Part,
    pub mode: PerturbMode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Perturbed {
    pub part1: Vec<String>,
    pub part2: Vec<String>,
}

/// Applies a selection. Token order is preserved; the selection masks must
/// match the part lengths.
pub fn perturb(instance: &Instance, selection: &TokenSelection, mode: PerturbMode) -> Result<Perturbed, EmptyPart> {
    assert_eq!(selection.p1.len(), instance.part1_tokens.len(), "selection does not match Part 1");
    assert_eq!(selection.p2.len(), instance.part2_tokens.len(), "selection does not match Part 2");
    let want = mode == PerturbMode::Keep;
    let filter = |part: Part| -> Result<Vec<String>, EmptyPart> {
        let out: Vec<String> = instance
            .tokens(part)
            .iter()
            .zip(selection.mask(part))
            .filter(|(_, &m)| m == want)
            .map(|(t, _)| t.clone())
            .collect();
        if out.is_empty() {
            Err(EmptyPart { part, mode })
        } else {
            Ok(out)
        }
    };
    Ok(Perturbed { part1: filter(Part::P1)?, part2: filter(Part::P2)? })
}
