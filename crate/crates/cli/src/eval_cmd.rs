use std::path::Path;

use anyhow::Context;

use spanex_core::agreement::MatchMode;
use spanex_core::community::Explanation;
use spanex_core::dataset::{augment_all, AugmentConfig, Part};
use spanex_core::eval::{evaluate_dataset, BaselineKind, EvalConfig, EvalInput, EvalReport, PerturbUnit, PhaReference};

use crate::args::{EvalArgs, ReportArgs};
use crate::provenance::{artifact_json, load_corpus, open_oracle, sibling, write_file, Settings};
use crate::{usage, UsageError, EXIT_OK};

pub fn parse_topk(text: &str) -> anyhow::Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.parse::<usize>() {
            Ok(k) if k > 0 => {
                if !out.contains(&k) {
                    out.push(k);
                }
            }
            _ => return usage(format!("--topk: '{part}' is not a positive integer")),
        }
    }
    if out.is_empty() {
        return usage("--topk needs at least one value");
    }
    Ok(out)
}

pub fn parse_baselines(text: &str) -> anyhow::Result<Vec<BaselineKind>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty() && *p != "none") {
        let kind: BaselineKind = part.parse().map_err(|e: String| UsageError(e))?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    Ok(out)
}

fn parse_part(text: &str) -> anyhow::Result<Part> {
    match text.to_ascii_lowercase().as_str() {
        "p1" | "part1" => Ok(Part::P1),
        "p2" | "part2" => Ok(Part::P2),
        _ => usage(format!("unknown part '{text}' (expected p1 or p2)")),
    }
}

fn parse_flag<T: std::str::FromStr<Err = String>>(text: &str) -> anyhow::Result<T> {
    text.parse().map_err(|e: String| UsageError(e).into())
}

/// Accepts the `extract` output or a bare array of explanations.
pub fn load_explanations(path: &Path) -> anyhow::Result<Vec<Explanation>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(list) = value.get_mut("explanations") {
        value = list.take();
    }
    serde_json::from_value(value).with_context(|| format!("reading explanations from {}", path.display()))
}

fn write_report(out: &Path, report: &EvalReport, settings: &Settings, seed: Option<u64>) -> anyhow::Result<()> {
    write_file(out, &artifact_json(report, settings, seed)?)?;
    write_file(&sibling(out, ".csv"), &report.to_csv())?;
    write_file(&sibling(out, ".plot.csv"), &report.plot_csv())?;
    write_file(&sibling(out, ".ranking.csv"), &report.ranking_csv())?;
    if !report.agreement_cells.is_empty() {
        write_file(&sibling(out, ".agreement.csv"), &report.agreement_csv())?;
    }
    Ok(())
}

pub fn eval(a: EvalArgs) -> anyhow::Result<i32> {
    let config = EvalConfig {
        topk: parse_topk(&a.topk)?,
        baselines: parse_baselines(&a.baselines)?,
        seed: a.seed,
        jobs: a.jobs,
        unit: parse_flag::<PerturbUnit>(&a.unit)?,
        pha_reference: parse_flag::<PhaReference>(&a.pha_reference)?,
        part_phrase_random: parse_part(&a.part_phrase_random)?,
        agreement_split: a.agreement_split.as_deref().map(parse_flag::<MatchMode>).transpose()?,
        model: a.model.clone(),
    };
    let mut corpus = load_corpus(&a.input)?;
    if a.augment {
        for inst in &mut corpus.instances {
            *inst = augment_all(inst, AugmentConfig::default());
        }
    }
    let explanations = match &a.explanations {
        Some(p) => Some(load_explanations(p)?),
        None => None,
    };
    let (oracle, meta) = open_oracle(a.oracle.oracle.as_deref(), a.jobs)?;

    let mut s = Settings::new("eval");
    s.input("input", &a.input)?
        .model(&meta)
        .set("augment", a.augment)
        .set("topk", format!("{:?}", config.topk))
        .set("baselines", format!("{:?}", config.baselines))
        .set("seed", config.seed)
        .set("unit", format!("{:?}", config.unit))
        .set("pha_reference", format!("{:?}", config.pha_reference))
        .set("part_phrase_random", format!("{:?}", config.part_phrase_random))
        .set("agreement_split", format!("{:?}", config.agreement_split))
        .set("model_label", &config.model);
    let input = match (&a.explanations, &explanations) {
        (Some(p), Some(es)) => {
            s.input("explanations", p)?;
            EvalInput::Explanations(es)
        }
        _ => EvalInput::Annotations,
    };
    let report = evaluate_dataset(&corpus, input, &*oracle, &meta, &config);
    write_report(&a.out, &report, &s, Some(config.seed))?;
    eprintln!(
        "{} instances, {} cells, {} failures; wrote {}",
        report.instances,
        report.cells.len(),
        report.failures.len(),
        a.out.display()
    );
    Ok(EXIT_OK)
}

pub fn report(a: ReportArgs) -> anyhow::Result<i32> {
    let mut reports = Vec::with_capacity(a.reports.len());
    let mut s = Settings::new("report");
    for (i, p) in a.reports.iter().enumerate() {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let r: EvalReport = serde_json::from_str(&text).with_context(|| format!("parsing report {}", p.display()))?;
        s.input(&format!("report{i}"), p)?;
        reports.push(r);
    }
    if let Some(r) = reports.iter().find(|r| r.dataset != reports[0].dataset) {
        anyhow::bail!("cannot merge reports on {} and {}", reports[0].dataset, r.dataset);
    }
    let merged = EvalReport::merge(&reports).context("no reports to merge")?;
    write_report(&a.out, &merged, &s, None)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topk_list() {
        assert_eq!(parse_topk("1, 3,5,3").unwrap(), vec![1, 3, 5]);
        assert!(parse_topk("0").is_err());
        assert!(parse_topk("a").unwrap_err().downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn baseline_list() {
        assert_eq!(parse_baselines("random,part").unwrap(), vec![BaselineKind::RandomPhrase, BaselineKind::PartPhrase]);
        assert!(parse_baselines("none").unwrap().is_empty());
        assert!(parse_baselines("other").is_err());
    }
}
