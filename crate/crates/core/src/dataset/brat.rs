//! Read-only import of brat standoff annotations (`.ann` + `.txt`).
//!
//! The `.txt` file holds Part 1 followed by Part 2; `part_boundary` is the
//! character offset where Part 2 begins. T-lines carry character-offset spans
//! whose entity type encodes the level (`Premise`/`Hypothesis` for high-level
//! spans, `pleaf`/`hleaf` for low-level ones). R-lines link two T ids with a
//! relation type. For a bare `Hypernym` relation the arrow origin (`Arg1`) is
//! the hypernym, which decides between the two directed types.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::tokenize::{tokenize_with_offset, Token};
use super::{Interaction, InteractionType, Level, Part, Span};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BratError {
    #[error("line {line}: malformed annotation: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: span {id} crosses the part boundary at char {boundary}")]
    CrossesBoundary { line: usize, id: String, boundary: usize },
    #[error("line {line}: relation references missing entity {id}")]
    DanglingReference { line: usize, id: String },
    #[error("line {line}: offsets {start}..{end} outside text of length {len}")]
    OffsetOutOfRange { line: usize, start: usize, end: usize, len: usize },
    #[error("line {line}: span {id} covers no token")]
    NoTokens { line: usize, id: String },
    #[error("line {line}: relation {id} links two spans of the same part")]
    SamePart { line: usize, id: String },
    #[error("line {line}: relation {id} mixes high- and low-level spans")]
    MixedLevels { line: usize, id: String },
    #[error("part boundary {boundary} leaves an empty part")]
    EmptyPart { boundary: usize },
    #[error("interaction type {0} has no standoff rendering")]
    Unrenderable(InteractionType),
}

/// Result of a standoff import: word tokens per part (with char offsets) and
/// the interactions in R-line order.
#[derive(Debug, Clone, PartialEq)]
pub struct BratDocument {
    pub part1: Vec<Token>,
    pub part2: Vec<Token>,
    /// T-line entities in file order, resolved to token spans.
    pub entities: Vec<BratEntity>,
    pub interactions: Vec<Interaction>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BratEntity {
    pub id: String,
    pub span: Span,
    pub level: Level,
}

impl BratDocument {
    pub fn part1_words(&self) -> Vec<String> {
        self.part1.iter().map(|t| t.text.clone()).collect()
    }

    pub fn part2_words(&self) -> Vec<String> {
        self.part2.iter().map(|t| t.text.clone()).collect()
    }
}

struct Entity {
    span: Span,
    level: Level,
}

fn entity_level(kind: &str) -> Option<Level> {
    match kind.to_ascii_lowercase().as_str() {
        "premise" | "hypothesis" | "evidence" | "claim" | "high" => Some(Level::High),
        "pleaf" | "hleaf" | "eleaf" | "cleaf" | "leaf" | "low" => Some(Level::Low),
        _ => None,
    }
}

fn relation_type(name: &str, arg1_part: Part) -> Option<InteractionType> {
    match name.to_ascii_lowercase().as_str() {
        "synonym" => Some(InteractionType::Synonym),
        "antonym" => Some(InteractionType::Antonym),
        "hypernym" => Some(match arg1_part {
            Part::P1 => InteractionType::HypernymP1P2,
            Part::P2 => InteractionType::HypernymP2P1,
        }),
        "hypernym-p-to-h" => Some(InteractionType::HypernymP1P2),
        "hypernym-h-to-p" => Some(InteractionType::HypernymP2P1),
        "hypernym-p1-p2" => Some(InteractionType::HypernymP1P2),
        "hypernym-p2-p1" => Some(InteractionType::HypernymP2P1),
        "synonym-sys" => Some(InteractionType::SynonymSys),
        _ => None,
    }
}

/// Splits a standoff line into its id and body, accepting tab- or space-separated fields.
fn split_line(line: &str) -> (&str, &str) {
    if let Some((id, rest)) = line.split_once('\t') {
        let body = rest.split('\t').next().unwrap_or("");
        (id.trim(), body.trim())
    } else {
        let line = line.trim();
        match line.split_once(char::is_whitespace) {
            Some((id, rest)) => (id, rest.trim()),
            None => (line, ""),
        }
    }
}

fn token_range(tokens: &[Token], start: usize, end: usize) -> Option<(usize, usize)> {
    let mut hit = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.start < end && start < t.end)
        .map(|(i, _)| i);
    let first = hit.next()?;
    let last = hit.last().unwrap_or(first);
    Some((first, last + 1))
}

pub fn parse_brat(ann_text: &str, txt_text: &str, part_boundary: usize) -> Result<BratDocument, BratError> {
    let text_len = txt_text.chars().count();
    if part_boundary == 0 || part_boundary >= text_len {
        return Err(BratError::EmptyPart { boundary: part_boundary });
    }
    let split_byte = txt_text
        .char_indices()
        .nth(part_boundary)
        .map(|(b, _)| b)
        .unwrap_or(txt_text.len());
    let part1 = tokenize_with_offset(&txt_text[..split_byte], 0);
    let part2 = tokenize_with_offset(&txt_text[split_byte..], part_boundary);
    if part1.is_empty() || part2.is_empty() {
        return Err(BratError::EmptyPart { boundary: part_boundary });
    }

    let mut entities: HashMap<String, Entity> = HashMap::new();
    let mut entity_order: Vec<BratEntity> = Vec::new();
    let mut relations: Vec<(usize, String, String, String, String)> = Vec::new();

    for (idx, raw) in ann_text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (id, body) = split_line(raw);
        let malformed = |message: &str| BratError::Malformed { line: line_no, message: message.to_string() };
        match id.chars().next() {
            Some('T') => {
                let mut fields = body.split_whitespace();
                let kind = fields.next().ok_or_else(|| malformed("missing entity type"))?;
                let offsets: Vec<&str> = fields.collect();
                if offsets.iter().any(|f| f.contains(';')) {
                    return Err(malformed("discontinuous spans are not supported"));
                }
                if offsets.len() != 2 {
                    return Err(malformed("expected `<type> <start> <end>`"));
                }
                let start: usize = offsets[0].parse().map_err(|_| malformed("start offset is not an integer"))?;
                let end: usize = offsets[1].parse().map_err(|_| malformed("end offset is not an integer"))?;
                if start >= end || end > text_len {
                    return Err(BratError::OffsetOutOfRange { line: line_no, start, end, len: text_len });
                }
                if start < part_boundary && end > part_boundary {
                    return Err(BratError::CrossesBoundary {
                        line: line_no,
                        id: id.to_string(),
                        boundary: part_boundary,
                    });
                }
                let level = entity_level(kind).ok_or_else(|| malformed(&format!("unknown entity type '{kind}'")))?;
                let (part, tokens) = if end <= part_boundary { (Part::P1, &part1) } else { (Part::P2, &part2) };
                let (s, e) = token_range(tokens, start, end)
                    .ok_or_else(|| BratError::NoTokens { line: line_no, id: id.to_string() })?;
                let span = Span::new(part, s, e);
                if entities.insert(id.to_string(), Entity { span, level }).is_some() {
                    return Err(malformed(&format!("duplicate entity id {id}")));
                }
                entity_order.push(BratEntity { id: id.to_string(), span, level });
            }
            Some('R') => {
                let mut fields = body.split_whitespace();
                let name = fields.next().ok_or_else(|| malformed("missing relation type"))?;
                let mut arg1 = None;
                let mut arg2 = None;
                for f in fields {
                    if let Some(v) = f.strip_prefix("Arg1:") {
                        arg1 = Some(v.to_string());
                    } else if let Some(v) = f.strip_prefix("Arg2:") {
                        arg2 = Some(v.to_string());
                    } else {
                        return Err(malformed(&format!("unexpected relation field '{f}'")));
                    }
                }
                let arg1 = arg1.ok_or_else(|| malformed("relation missing Arg1"))?;
                let arg2 = arg2.ok_or_else(|| malformed("relation missing Arg2"))?;
                relations.push((line_no, id.to_string(), name.to_string(), arg1, arg2));
            }
            // notes, attributes, normalizations and events carry nothing we import
            Some('#') | Some('A') | Some('M') | Some('N') | Some('E') => {}
            _ => return Err(malformed(&format!("unrecognised line id '{id}'"))),
        }
    }

    let mut interactions = Vec::with_capacity(relations.len());
    for (line, id, name, arg1, arg2) in relations {
        let a1 = entities
            .get(&arg1)
            .ok_or_else(|| BratError::DanglingReference { line, id: arg1.clone() })?;
        let a2 = entities
            .get(&arg2)
            .ok_or_else(|| BratError::DanglingReference { line, id: arg2.clone() })?;
        if a1.span.part == a2.span.part {
            return Err(BratError::SamePart { line, id });
        }
        if a1.level != a2.level {
            return Err(BratError::MixedLevels { line, id });
        }
        let kind = relation_type(&name, a1.span.part).ok_or_else(|| BratError::Malformed {
            line,
            message: format!("unknown relation type '{name}'"),
        })?;
        let (p1, p2) = if a1.span.part == Part::P1 { (a1.span, a2.span) } else { (a2.span, a1.span) };
        interactions.push(Interaction { kind, level: a1.level, span_p1: Some(p1), span_p2: Some(p2) });
    }

    Ok(BratDocument { part1, part2, entities: entity_order, interactions })
}

/// Standoff rendering of a tokenized instance: `(txt, ann, part_boundary)`.
///
/// Tokens are joined by single spaces, with a newline between the parts.
/// Danglers have no relation form and are rejected.
pub fn render_brat(
    part1: &[String],
    part2: &[String],
    interactions: &[Interaction],
) -> Result<(String, String, usize), BratError> {
    let mut txt = String::new();
    let mut offsets1 = Vec::with_capacity(part1.len());
    let mut offsets2 = Vec::with_capacity(part2.len());
    let mut pos = 0usize;
    for (i, w) in part1.iter().enumerate() {
        if i > 0 {
            txt.push(' ');
            pos += 1;
        }
        let len = w.chars().count();
        offsets1.push((pos, pos + len));
        txt.push_str(w);
        pos += len;
    }
    txt.push('\n');
    pos += 1;
    let boundary = pos;
    for (i, w) in part2.iter().enumerate() {
        if i > 0 {
            txt.push(' ');
            pos += 1;
        }
        let len = w.chars().count();
        offsets2.push((pos, pos + len));
        txt.push_str(w);
        pos += len;
    }
    txt.push('\n');

    let mut ann = String::new();
    let mut next_t = 1;
    for (r, it) in interactions.iter().enumerate() {
        if it.kind.is_dangler() {
            return Err(BratError::Unrenderable(it.kind));
        }
        let (Some(s1), Some(s2)) = (it.span_p1, it.span_p2) else {
            return Err(BratError::Unrenderable(it.kind));
        };
        let (k1, k2) = match it.level {
            Level::High => ("Premise", "Hypothesis"),
            Level::Low => ("pleaf", "hleaf"),
        };
        let (a, b) = (offsets1[s1.start].0, offsets1[s1.end - 1].1);
        let (c, d) = (offsets2[s2.start].0, offsets2[s2.end - 1].1);
        let _ = writeln!(ann, "T{}\t{} {} {}\t{}", next_t, k1, a, b, part1[s1.tokens()].join(" "));
        let _ = writeln!(ann, "T{}\t{} {} {}\t{}", next_t + 1, k2, c, d, part2[s2.tokens()].join(" "));
        let _ = writeln!(ann, "R{}\t{} Arg1:T{} Arg2:T{}\t", r + 1, it.kind.as_str(), next_t, next_t + 1);
        next_t += 2;
    }
    Ok((txt, ann, boundary))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE_TXT: &str = "Two women are running .\nTwo men are walking .\n";

    #[test]
    fn single_t_line_maps_to_word_tokens() {
        let doc = parse_brat("T1 Premise 0 9", "Two women\nTwo men", 10).unwrap();
        assert!(doc.interactions.is_empty());
        assert_eq!(doc.entities[0].span, Span::new(Part::P1, 0, 2));
        assert_eq!(doc.entities[0].level, Level::High);
        let doc = parse_brat("T1 Premise 0 9\nT2 Hypothesis 10 17\nR1 Synonym Arg1:T1 Arg2:T2", "Two women\nTwo men", 10)
            .unwrap();
        assert_eq!(doc.interactions[0].span_p1, Some(Span::new(Part::P1, 0, 2)));
        assert_eq!(doc.interactions[0].span_p2, Some(Span::new(Part::P2, 0, 2)));
    }

    #[test]
    fn empty_ann_gives_no_interactions() {
        let doc = parse_brat("", FIXTURE_TXT, 24).unwrap();
        assert!(doc.interactions.is_empty());
        assert_eq!(doc.part1_words(), vec!["Two", "women", "are", "running", "."]);
        assert_eq!(doc.part2_words(), vec!["Two", "men", "are", "walking", "."]);
    }

    #[test]
    fn antonym_relation_hand_trace() {
        // "women" = chars 4..9 (P1 token 1); "men" = chars 28..31 (P2 token 1)
        let ann = "T1\tpleaf 4 9\twomen\nT2\thleaf 28 31\tmen\nR1\tAntonym Arg1:T2 Arg2:T1\t\n";
        let doc = parse_brat(ann, FIXTURE_TXT, 24).unwrap();
        assert_eq!(
            doc.interactions,
            vec![Interaction::pair(InteractionType::Antonym, Level::Low, (1, 2), (1, 2))]
        );
    }

    #[test]
    fn hypernym_direction_follows_arrow_origin() {
        let ann = "T1\tPremise 0 9\nT2\tHypothesis 24 31\nR1\tHypernym Arg1:T2 Arg2:T1\nR2\tHypernym Arg1:T1 Arg2:T2\n";
        let doc = parse_brat(ann, FIXTURE_TXT, 24).unwrap();
        assert_eq!(doc.interactions[0].kind, InteractionType::HypernymP2P1);
        assert_eq!(doc.interactions[1].kind, InteractionType::HypernymP1P2);
        assert_eq!(doc.interactions[0].span_p1, doc.interactions[1].span_p1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_brat("T1\tPremise 0 9\nX1 nonsense", FIXTURE_TXT, 24).unwrap_err();
        assert!(matches!(err, BratError::Malformed { line: 2, .. }));

        let err = parse_brat("T1\tPremise zero 9", FIXTURE_TXT, 24).unwrap_err();
        assert!(matches!(err, BratError::Malformed { line: 1, .. }));
    }

    #[test]
    fn span_crossing_boundary_is_rejected() {
        let err = parse_brat("T1\tPremise 15 28", FIXTURE_TXT, 24).unwrap_err();
        assert!(matches!(err, BratError::CrossesBoundary { line: 1, .. }));
    }

    #[test]
    fn missing_relation_target_is_dangling() {
        let err = parse_brat("T1\tpleaf 4 9\nR1\tAntonym Arg1:T1 Arg2:T9", FIXTURE_TXT, 24).unwrap_err();
        assert_eq!(err, BratError::DanglingReference { line: 2, id: "T9".into() });
    }

    #[test]
    fn same_part_relation_is_rejected() {
        let err = parse_brat("T1\tpleaf 0 3\nT2\tpleaf 4 9\nR1\tSynonym Arg1:T1 Arg2:T2", FIXTURE_TXT, 24).unwrap_err();
        assert!(matches!(err, BratError::SamePart { line: 3, .. }));
    }

    #[test]
    fn render_then_parse_is_identity() {
        let p1: Vec<String> = "Two women are running".split(' ').map(String::from).collect();
        let p2: Vec<String> = "Two men are walking".split(' ').map(String::from).collect();
        let its = vec![
            Interaction::pair(InteractionType::Antonym, Level::High, (0, 2), (0, 2)),
            Interaction::pair(InteractionType::HypernymP2P1, Level::Low, (3, 4), (3, 4)),
        ];
        let (txt, ann, boundary) = render_brat(&p1, &p2, &its).unwrap();
        let doc = parse_brat(&ann, &txt, boundary).unwrap();
        assert_eq!(doc.interactions, its);
        assert_eq!(doc.part1_words(), p1);
        assert_eq!(doc.part2_words(), p2);
    }

    #[test]
    fn render_rejects_danglers() {
        let p: Vec<String> = vec!["a".into()];
        let err = render_brat(&p, &p, &[Interaction::dangler(Part::P1, Level::Low, 0, 1)]).unwrap_err();
        assert_eq!(err, BratError::Unrenderable(InteractionType::DanglerSysP1));
    }
}
