//! Canonical JSON schema for corpora.
//!
//! ```json
//! {"dataset": "SNLI", "instances": [{"id": "...", "label": "Neutral",
//!   "part1_tokens": [...], "part2_tokens": [...],
//!   "annotations": {"A1": [{"type": "Synonym", "level": "low",
//!                           "span_p1": [0, 2], "span_p2": null}]}}]}
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Corpus, DatasetKind, Instance, Interaction, InteractionType, Label, Level, Part, Span};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusDoc {
    dataset: DatasetKind,
    instances: Vec<InstanceDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    id: String,
    label: Label,
    part1_tokens: Vec<String>,
    part2_tokens: Vec<String>,
    #[serde(default)]
    annotations: BTreeMap<String, Vec<InteractionDoc>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InteractionDoc {
    #[serde(rename = "type")]
    kind: InteractionType,
    level: Level,
    span_p1: Option<[usize; 2]>,
    span_p2: Option<[usize; 2]>,
}

fn pointer_escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

fn path_to_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&pointer_escape(key)),
            Segment::Enum { variant } => out.push_str(&pointer_escape(variant)),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> LoadError {
    LoadError::Schema { pointer: pointer.into(), message: message.into() }
}

fn convert_instance(idx: usize, doc: InstanceDoc) -> Result<Instance, LoadError> {
    let base = format!("/instances/{idx}");
    if doc.part1_tokens.is_empty() {
        return Err(schema(format!("{base}/part1_tokens"), "token list is empty"));
    }
    if doc.part2_tokens.is_empty() {
        return Err(schema(format!("{base}/part2_tokens"), "token list is empty"));
    }
    let lens = [doc.part1_tokens.len(), doc.part2_tokens.len()];
    let mut annotations = BTreeMap::new();
    for (annotator, items) in doc.annotations {
        let mut its = Vec::with_capacity(items.len());
        for (k, item) in items.into_iter().enumerate() {
            let at = format!("{base}/annotations/{}/{k}", pointer_escape(&annotator));
            let span = |field: &str, part: Part, raw: Option<[usize; 2]>| -> Result<Option<Span>, LoadError> {
                let Some([s, e]) = raw else { return Ok(None) };
                let len = lens[part as usize];
                if !(s < e && e <= len) {
                    return Err(schema(format!("{at}/{field}"), format!("span [{s},{e}) outside part of length {len}")));
                }
                Ok(Some(Span::new(part, s, e)))
            };
            let span_p1 = span("span_p1", Part::P1, item.span_p1)?;
            let span_p2 = span("span_p2", Part::P2, item.span_p2)?;
            let it = Interaction::new(item.kind, item.level, span_p1, span_p2)
                .map_err(|e| schema(at.clone(), e.to_string()))?;
            its.push(it);
        }
        annotations.insert(annotator, its);
    }
    Ok(Instance {
        id: doc.id,
        label: doc.label,
        part1_tokens: doc.part1_tokens,
        part2_tokens: doc.part2_tokens,
        annotations,
    })
}

pub fn parse_json(text: &str) -> Result<Corpus, LoadError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: CorpusDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = path_to_pointer(e.path());
        schema(if pointer.is_empty() { "/".to_string() } else { pointer }, e.inner().to_string())
    })?;
    let mut seen = std::collections::HashSet::new();
    let mut instances = Vec::with_capacity(doc.instances.len());
    for (idx, inst) in doc.instances.into_iter().enumerate() {
        if !seen.insert(inst.id.clone()) {
            return Err(schema(format!("/instances/{idx}/id"), format!("duplicate instance id '{}'", inst.id)));
        }
        instances.push(convert_instance(idx, inst)?);
    }
    Ok(Corpus { dataset: doc.dataset, instances })
}

pub fn load_json(path: &Path) -> Result<Corpus, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
    parse_json(&text)
}

fn to_doc(corpus: &Corpus) -> CorpusDoc {
    let pair = |s: Option<Span>| s.map(|s| [s.start, s.end]);
    CorpusDoc {
        dataset: corpus.dataset,
        instances: corpus
            .instances
            .iter()
            .map(|inst| InstanceDoc {
                id: inst.id.clone(),
                label: inst.label,
                part1_tokens: inst.part1_tokens.clone(),
                part2_tokens: inst.part2_tokens.clone(),
                annotations: inst
                    .annotations
                    .iter()
                    .map(|(a, its)| {
                        let docs = its
                            .iter()
                            .map(|it| InteractionDoc {
                                kind: it.kind,
                                level: it.level,
                                span_p1: pair(it.span_p1),
                                span_p2: pair(it.span_p2),
                            })
                            .collect();
                        (a.clone(), docs)
                    })
                    .collect(),
            })
            .collect(),
    }
}

/// Pretty-printed canonical form with a trailing newline.
pub fn to_canonical_json(corpus: &Corpus) -> String {
    let mut s = serde_json::to_string_pretty(&to_doc(corpus)).expect("corpus serializes");
    s.push('\n');
    s
}

pub fn store_json(corpus: &Corpus, path: &Path) -> Result<(), LoadError> {
    std::fs::write(path, to_canonical_json(corpus)).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })
}
