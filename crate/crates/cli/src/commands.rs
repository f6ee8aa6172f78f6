use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;

use spanex_core::agreement::{agreement_report, summarize, MatchMode};
use spanex_core::dataset::{
    augment_all, parse_brat, store_json, validate_label_constraints, AugmentConfig, Corpus,
    DatasetKind, Instance, Label, Level, Violation,
};

use crate::args::{AgreementArgs, ConvertArgs, StatsArgs, ValidateArgs};
use crate::provenance::{artifact_json, emit, load_corpus, sibling, write_file, Settings};
use crate::{usage, EXIT_FAILURE, EXIT_OK};

fn augment_config(case_sensitive: bool) -> AugmentConfig {
    AugmentConfig { case_insensitive: !case_sensitive }
}

fn augment_corpus(corpus: &mut Corpus, config: AugmentConfig) {
    for inst in &mut corpus.instances {
        *inst = augment_all(inst, config);
    }
}

fn ann_stems(dir: &Path) -> anyhow::Result<Vec<String>> {
    let mut stems = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "ann") {
            if let Some(s) = path.file_stem() {
                stems.push(s.to_string_lossy().into_owned());
            }
        }
    }
    stems.sort();
    Ok(stems)
}

/// `(annotator, directory)` pairs: the directory itself when it holds `.ann`
/// files, else each subdirectory.
fn brat_sources(dir: &Path, annotator: &str) -> anyhow::Result<Vec<(String, PathBuf)>> {
    if !ann_stems(dir)?.is_empty() {
        return Ok(vec![(annotator.to_string(), dir.to_path_buf())]);
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            out.push((name, path));
        }
    }
    out.sort();
    if out.is_empty() {
        bail!("{}: no .ann files and no annotator subdirectories", dir.display());
    }
    Ok(out)
}

fn read_labels(path: &Path) -> anyhow::Result<BTreeMap<String, Label>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((id, label)) = line.split_once('\t') else {
            bail!("{}:{}: expected id<TAB>label", path.display(), n + 1);
        };
        let label: Label =
            label.trim().parse().map_err(|e: String| anyhow::anyhow!("{}:{}: {e}", path.display(), n + 1))?;
        out.insert(id.trim().to_string(), label);
    }
    Ok(out)
}

pub fn import_brat(dir: &Path, annotator: &str, labels: &BTreeMap<String, Label>, dataset: DatasetKind) -> anyhow::Result<Corpus> {
    let mut instances: BTreeMap<String, Instance> = BTreeMap::new();
    for (name, sub) in brat_sources(dir, annotator)? {
        for stem in ann_stems(&sub)? {
            let ann_path = sub.join(format!("{stem}.ann"));
            let txt_path = sub.join(format!("{stem}.txt"));
            let ann = std::fs::read_to_string(&ann_path).with_context(|| format!("reading {}", ann_path.display()))?;
            let txt = std::fs::read_to_string(&txt_path).with_context(|| format!("reading {}", txt_path.display()))?;
            let Some(newline) = txt.chars().position(|c| c == '\n') else {
                bail!("{}: no newline between the two parts", txt_path.display());
            };
            let doc = parse_brat(&ann, &txt, newline + 1).with_context(|| format!("parsing {}", ann_path.display()))?;
            let Some(&label) = labels.get(&stem) else {
                bail!("{}: no label for instance '{stem}'", ann_path.display());
            };
            let inst = instances.entry(stem.clone()).or_insert_with(|| Instance {
                id: stem.clone(),
                label,
                part1_tokens: doc.part1_words(),
                part2_tokens: doc.part2_words(),
                annotations: BTreeMap::new(),
            });
            if inst.part1_tokens != doc.part1_words() || inst.part2_tokens != doc.part2_words() {
                bail!("{}: text differs from another annotator's copy of '{stem}'", txt_path.display());
            }
            inst.annotations.insert(name.clone(), doc.interactions);
        }
    }
    let mut corpus = Corpus::new(dataset);
    corpus.instances = instances.into_values().collect();
    Ok(corpus)
}

pub fn convert(a: ConvertArgs) -> anyhow::Result<i32> {
    if a.to != "json" {
        return usage(format!("unsupported --to '{}' (expected json)", a.to));
    }
    let mut corpus = match a.from.as_str() {
        "json" => load_corpus(&a.input)?,
        "brat" => {
            let dataset: DatasetKind = a.dataset.parse().map_err(crate::UsageError)?;
            let Some(labels) = &a.labels else { return usage("brat import needs --labels") };
            import_brat(&a.input, &a.annotator, &read_labels(labels)?, dataset)?
        }
        other => return usage(format!("unsupported --from '{other}' (expected brat or json)")),
    };
    if a.augment {
        augment_corpus(&mut corpus, augment_config(a.case_sensitive));
    }
    store_json(&corpus, &a.out)?;
    eprintln!("wrote {} instances to {}", corpus.instances.len(), a.out.display());
    Ok(EXIT_OK)
}

pub fn violations(corpus: &Corpus, augment: Option<AugmentConfig>) -> Vec<Violation> {
    let mut out = Vec::new();
    for inst in &corpus.instances {
        let inst = match augment {
            Some(c) => augment_all(inst, c),
            None => inst.clone(),
        };
        for annotator in inst.annotators() {
            out.extend(validate_label_constraints(&inst, annotator));
        }
    }
    out
}

#[derive(Serialize)]
struct ValidationOutput<'a> {
    instances: usize,
    violations: &'a [Violation],
}

pub fn validate(a: ValidateArgs) -> anyhow::Result<i32> {
    let corpus = load_corpus(&a.input)?;
    let augment = (!a.no_augment).then(|| augment_config(a.case_sensitive));
    let found = violations(&corpus, augment);
    for v in &found {
        println!("{}\t{}\t{}\t{}", v.instance_id, v.annotator, v.rule, v.message);
    }
    if let Some(out) = &a.out {
        let mut s = Settings::new("validate");
        s.input("input", &a.input)?.set("augment", !a.no_augment).set("case_sensitive", a.case_sensitive);
        let body = ValidationOutput { instances: corpus.instances.len(), violations: &found };
        write_file(out, &artifact_json(&body, &s, None)?)?;
    }
    eprintln!("{} instances, {} violations", corpus.instances.len(), found.len());
    Ok(if found.is_empty() { EXIT_OK } else { EXIT_FAILURE })
}

pub fn stats(a: StatsArgs) -> anyhow::Result<i32> {
    let mut corpus = load_corpus(&a.input)?;
    if a.augment {
        augment_corpus(&mut corpus, augment_config(a.case_sensitive));
    }
    let summary = summarize(&corpus);
    let mut s = Settings::new("stats");
    s.input("input", &a.input)?.set("augment", a.augment).set("case_sensitive", a.case_sensitive);
    emit(a.out.as_deref(), &artifact_json(&summary, &s, None)?)?;
    if let Some(out) = &a.out {
        write_file(&sibling(out, ".csv"), &summary.to_csv())?;
    }
    Ok(EXIT_OK)
}

pub fn parse_levels(text: &str) -> anyhow::Result<Vec<Level>> {
    let mut levels = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let level: Level = part.parse().map_err(crate::UsageError)?;
        if !levels.contains(&level) {
            levels.push(level);
        }
    }
    if levels.is_empty() {
        return usage("--level needs at least one of low, high");
    }
    Ok(levels)
}

pub fn agreement(a: AgreementArgs) -> anyhow::Result<i32> {
    let mode: MatchMode = a.mode.parse().map_err(crate::UsageError)?;
    let levels = parse_levels(&a.level)?;
    let corpus = load_corpus(&a.input)?;
    let report = agreement_report(&corpus, mode, &levels);
    let mut s = Settings::new("agreement");
    let level_names: Vec<&str> = levels.iter().map(|l| l.as_str()).collect();
    s.input("input", &a.input)?.set("mode", mode).set("level", level_names.join(","));
    emit(a.out.as_deref(), &artifact_json(&report, &s, None)?)?;
    if let Some(out) = &a.out {
        write_file(&sibling(out, ".csv"), &report.to_csv())?;
    }
    Ok(EXIT_OK)
}

