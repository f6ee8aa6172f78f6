//! Data model for two-part instances and their span-interaction annotations.
//!
//! An [`Instance`] holds the word tokens of Part 1 (premise / evidence) and
//! Part 2 (hypothesis / claim), the gold label, and one list of
//! [`Interaction`]s per annotator. Submodules cover ingestion (brat standoff,
//! canonical JSON), system augmentation and label-constraint checks.

pub mod augment;
pub mod brat;
pub mod constraints;
pub mod io;
pub mod stopwords;
pub mod tokenize;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use augment::{augment_all, augment_danglers, augment_synonym_sys, AugmentConfig};
pub use brat::{parse_brat, render_brat, BratDocument, BratEntity, BratError};
pub use constraints::{validate_label_constraints, Rule, Violation};
pub use io::{load_json, parse_json, store_json, to_canonical_json, LoadError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DatasetKind {
    #[serde(rename = "SNLI")]
    Snli,
    #[serde(rename = "FEVER")]
    Fever,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Snli => "SNLI",
            DatasetKind::Fever => "FEVER",
        })
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "snli" => Ok(DatasetKind::Snli),
            "fever" => Ok(DatasetKind::Fever),
            other => Err(format!("unknown dataset '{other}'")),
        }
    }
}

/// Gold label. FEVER's `supports` / `NEI` / `refutes` map onto the NLI names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Entailment,
    Neutral,
    Contradiction,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Entailment, Label::Neutral, Label::Contradiction];

    /// Every surface name that denotes this label, lowercase.
    pub fn aliases(self) -> &'static [&'static str] {
        match self {
            Label::Entailment => &["entailment", "supports", "support", "entails"],
            Label::Neutral => &["neutral", "nei", "not enough info", "not_enough_info"],
            Label::Contradiction => &["contradiction", "refutes", "refute", "contradicts"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entailment => "Entailment",
            Label::Neutral => "Neutral",
            Label::Contradiction => "Contradiction",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Label::ALL
            .into_iter()
            .find(|l| l.aliases().contains(&lower.as_str()))
            .ok_or_else(|| format!("unknown label '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Part {
    P1,
    P2,
}

impl Part {
    pub fn other(self) -> Part {
        match self {
            Part::P1 => Part::P2,
            Part::P2 => Part::P1,
        }
    }
}

/// Contiguous token range `[start, end)` inside one part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub part: Part,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(part: Part, start: usize, end: usize) -> Self {
        Span { part, start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, token: usize) -> bool {
        self.start <= token && token < self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.part == other.part && self.start < other.end && other.start < self.end
    }

    pub fn tokens(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}[{},{})", self.part, self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InteractionType {
    Synonym,
    Antonym,
    #[serde(rename = "Hypernym-P1-P2")]
    HypernymP1P2,
    #[serde(rename = "Hypernym-P2-P1")]
    HypernymP2P1,
    #[serde(rename = "Synonym-SYS")]
    SynonymSys,
    #[serde(rename = "Dangler-SYS-P1")]
    DanglerSysP1,
    #[serde(rename = "Dangler-SYS-P2")]
    DanglerSysP2,
}

impl InteractionType {
    pub const ALL: [InteractionType; 7] = [
        InteractionType::Synonym,
        InteractionType::Antonym,
        InteractionType::HypernymP1P2,
        InteractionType::HypernymP2P1,
        InteractionType::SynonymSys,
        InteractionType::DanglerSysP1,
        InteractionType::DanglerSysP2,
    ];

    /// The four types annotators produce by hand.
    pub const HUMAN: [InteractionType; 4] = [
        InteractionType::Synonym,
        InteractionType::Antonym,
        InteractionType::HypernymP1P2,
        InteractionType::HypernymP2P1,
    ];

    pub fn is_human(self) -> bool {
        Self::HUMAN.contains(&self)
    }

    pub fn is_dangler(self) -> bool {
        matches!(self, InteractionType::DanglerSysP1 | InteractionType::DanglerSysP2)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InteractionType::Synonym => "Synonym",
            InteractionType::Antonym => "Antonym",
            InteractionType::HypernymP1P2 => "Hypernym-P1-P2",
            InteractionType::HypernymP2P1 => "Hypernym-P2-P1",
            InteractionType::SynonymSys => "Synonym-SYS",
            InteractionType::DanglerSysP1 => "Dangler-SYS-P1",
            InteractionType::DanglerSysP2 => "Dangler-SYS-P2",
        }
    }
}

impl fmt::Display for InteractionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InteractionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InteractionType::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown interaction type '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Low,
    High,
}

impl Level {
    pub const ALL: [Level; 2] = [Level::Low, Level::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Low => "low",
            Level::High => "high",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Level::Low),
            "high" => Ok(Level::High),
            other => Err(format!("unknown level '{other}'")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InteractionError {
    #[error("{0} requires a Part 1 span")]
    MissingP1(InteractionType),
    #[error("{0} requires a Part 2 span")]
    MissingP2(InteractionType),
    #[error("{0} must not carry a Part 1 span")]
    UnexpectedP1(InteractionType),
    #[error("{0} must not carry a Part 2 span")]
    UnexpectedP2(InteractionType),
    #[error("span {0} is on the wrong part")]
    WrongPart(Span),
    #[error("span {0} is empty")]
    EmptySpan(Span),
}

/// A typed, leveled link between a Part 1 span and a Part 2 span.
///
/// Danglers carry a single span. The hypernym direction lives in the type,
/// never in span order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interaction {
    pub kind: InteractionType,
    pub level: Level,
    pub span_p1: Option<Span>,
    pub span_p2: Option<Span>,
}

impl Interaction {
    pub fn new(
        kind: InteractionType,
        level: Level,
        span_p1: Option<Span>,
        span_p2: Option<Span>,
    ) -> Result<Self, InteractionError> {
        let it = Interaction { kind, level, span_p1, span_p2 };
        it.check_shape()?;
        Ok(it)
    }

    /// Two-span interaction; panics on malformed spans. Handy in tests and fixtures.
    pub fn pair(kind: InteractionType, level: Level, p1: (usize, usize), p2: (usize, usize)) -> Self {
        Interaction::new(
            kind,
            level,
            Some(Span::new(Part::P1, p1.0, p1.1)),
            Some(Span::new(Part::P2, p2.0, p2.1)),
        )
        .expect("well-formed pair")
    }

    pub fn dangler(part: Part, level: Level, start: usize, end: usize) -> Self {
        let span = Span::new(part, start, end);
        match part {
            Part::P1 => Interaction {
                kind: InteractionType::DanglerSysP1,
                level,
                span_p1: Some(span),
                span_p2: None,
            },
            Part::P2 => Interaction {
                kind: InteractionType::DanglerSysP2,
                level,
                span_p1: None,
                span_p2: Some(span),
            },
        }
    }

    pub fn check_shape(&self) -> Result<(), InteractionError> {
        let kind = self.kind;
        match kind {
            InteractionType::DanglerSysP1 => {
                if self.span_p1.is_none() {
                    return Err(InteractionError::MissingP1(kind));
                }
                if self.span_p2.is_some() {
                    return Err(InteractionError::UnexpectedP2(kind));
                }
            }
            InteractionType::DanglerSysP2 => {
                if self.span_p1.is_some() {
                    return Err(InteractionError::UnexpectedP1(kind));
                }
                if self.span_p2.is_none() {
                    return Err(InteractionError::MissingP2(kind));
                }
            }
            _ => {
                if self.span_p1.is_none() {
                    return Err(InteractionError::MissingP1(kind));
                }
                if self.span_p2.is_none() {
                    return Err(InteractionError::MissingP2(kind));
                }
            }
        }
        for (expected, span) in [(Part::P1, self.span_p1), (Part::P2, self.span_p2)] {
            if let Some(span) = span {
                if span.part != expected {
                    return Err(InteractionError::WrongPart(span));
                }
                if span.is_empty() {
                    return Err(InteractionError::EmptySpan(span));
                }
            }
        }
        Ok(())
    }

    pub fn spans(&self) -> impl Iterator<Item = Span> {
        self.span_p1.into_iter().chain(self.span_p2)
    }

    pub fn span_on(&self, part: Part) -> Option<Span> {
        match part {
            Part::P1 => self.span_p1,
            Part::P2 => self.span_p2,
        }
    }
}

/// One two-part input with its gold label and per-annotator interactions.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub label: Label,
    pub part1_tokens: Vec<String>,
    pub part2_tokens: Vec<String>,
    /// Annotator id → interactions. `BTreeMap` keeps iteration (and output) order stable.
    pub annotations: BTreeMap<String, Vec<Interaction>>,
}

impl Instance {
    pub fn tokens(&self, part: Part) -> &[String] {
        match part {
            Part::P1 => &self.part1_tokens,
            Part::P2 => &self.part2_tokens,
        }
    }

    pub fn part_len(&self, part: Part) -> usize {
        self.tokens(part).len()
    }

    pub fn span_text(&self, span: &Span) -> String {
        self.tokens(span.part)[span.tokens()].join(" ")
    }

    pub fn annotators(&self) -> impl Iterator<Item = &str> {
        self.annotations.keys().map(String::as_str)
    }

    pub fn interactions(&self, annotator: &str) -> &[Interaction] {
        self.annotations.get(annotator).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// A dataset: the source corpus and its instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub dataset: DatasetKind,
    pub instances: Vec<Instance>,
}

impl Corpus {
    pub fn new(dataset: DatasetKind) -> Self {
        Corpus { dataset, instances: Vec::new() }
    }
}
