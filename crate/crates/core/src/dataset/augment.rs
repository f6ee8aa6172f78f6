//! System-added interactions: surface-match synonyms and danglers.

use super::stopwords::is_stopword;
use super::{Instance, Interaction, InteractionType, Level, Part, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentConfig {
    /// Compare tokens case-insensitively when looking for surface matches.
    pub case_insensitive: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig { case_insensitive: true }
    }
}

fn same_surface(a: &str, b: &str, config: AugmentConfig) -> bool {
    if config.case_insensitive {
        a.to_lowercase() == b.to_lowercase()
    } else {
        a == b
    }
}

/// Adds a `Synonym-SYS` interaction at both levels for every token that
/// appears in both parts, unless the pair is already covered at that level by
/// an interaction of the same annotator whose spans contain both tokens.
///
/// Matches are single tokens; stopword-only pairs are skipped.
pub fn augment_synonym_sys(instance: &Instance, annotator: &str, config: AugmentConfig) -> Instance {
    let mut out = instance.clone();
    let existing = instance.interactions(annotator).to_vec();
    let mut added = Vec::new();

    for level in Level::ALL {
        for (i, w1) in instance.part1_tokens.iter().enumerate() {
            if is_stopword(w1) {
                continue;
            }
            for (j, w2) in instance.part2_tokens.iter().enumerate() {
                if !same_surface(w1, w2, config) {
                    continue;
                }
                let covered = existing.iter().any(|it| {
                    it.level == level
                        && it.span_p1.is_some_and(|s| s.contains(i))
                        && it.span_p2.is_some_and(|s| s.contains(j))
                });
                if !covered {
                    added.push(Interaction {
                        kind: InteractionType::SynonymSys,
                        level,
                        span_p1: Some(Span::new(Part::P1, i, i + 1)),
                        span_p2: Some(Span::new(Part::P2, j, j + 1)),
                    });
                }
            }
        }
    }

    if !added.is_empty() {
        out.annotations.entry(annotator.to_string()).or_default().extend(added);
    }
    out
}

/// Token coverage of one part by an annotator's spans at one level.
pub fn coverage(instance: &Instance, annotator: &str, level: Level, part: Part) -> Vec<bool> {
    let mut covered = vec![false; instance.part_len(part)];
    for it in instance.interactions(annotator).iter().filter(|it| it.level == level) {
        if let Some(span) = it.span_on(part) {
            for t in span.tokens() {
                covered[t] = true;
            }
        }
    }
    covered
}

/// Maximal runs of `false` in a coverage bitmap, as `[start, end)` pairs.
pub fn uncovered_runs(covered: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &c) in covered.iter().enumerate() {
        match (c, start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, covered.len()));
    }
    runs
}

/// Turns every maximal uncovered run of each part into one dangler.
pub fn augment_danglers(instance: &Instance, annotator: &str, level: Level) -> Instance {
    let mut out = instance.clone();
    let mut added = Vec::new();
    for part in [Part::P1, Part::P2] {
        let covered = coverage(instance, annotator, level, part);
        for (s, e) in uncovered_runs(&covered) {
            added.push(Interaction::dangler(part, level, s, e));
        }
    }
    if !added.is_empty() {
        out.annotations.entry(annotator.to_string()).or_default().extend(added);
    }
    out
}

/// Full augmentation for every annotator: synonyms first, then danglers at both levels.
pub fn augment_all(instance: &Instance, config: AugmentConfig) -> Instance {
    let annotators: Vec<String> = instance.annotations.keys().cloned().collect();
    let mut out = instance.clone();
    for a in &annotators {
        out = augment_synonym_sys(&out, a, config);
        for level in Level::ALL {
            out = augment_danglers(&out, a, level);
        }
    }
    out
}
