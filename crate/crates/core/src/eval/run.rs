use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baseline::{sample_baseline, BaselineSpec};
use super::perturb::{BaselineKind, SelectionSource, TokenSelection};
use super::report::{EvalReport, Failure, Metric, UnitScores};
use super::score::{
    aopc_curve, aopc_single, original_prediction, pair_spans, pairs_fit, reference_class, top_k_selection, EvalRecord,
    Original, PhaReference,
};
use crate::agreement::{match_interactions, MatchMode};
use crate::community::Explanation;
use crate::dataset::{Corpus, Instance, Interaction, InteractionType, Level, Part, Span};
use crate::oracle::{CachedOracle, ModelMeta, Oracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbUnit {
    /// All spans of one (type, level, annotator) at once.
    #[default]
    Union,
    /// Each interaction on its own.
    PerPair,
}

impl std::str::FromStr for PerturbUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "union" => Ok(PerturbUnit::Union),
            "per-pair" | "pair" => Ok(PerturbUnit::PerPair),
            other => Err(format!("unknown perturbation unit '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub topk: Vec<usize>,
    pub baselines: Vec<BaselineKind>,
    pub seed: u64,
    /// Worker threads; 0 uses the number of logical cores.
    pub jobs: usize,
    pub unit: PerturbUnit,
    pub pha_reference: PhaReference,
    /// Part-Phrase side drawn at random.
    pub part_phrase_random: Part,
    /// Also pool human units by how many annotators agree on them.
    pub agreement_split: Option<MatchMode>,
    /// Label of the model, copied into the report.
    pub model: String,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            topk: vec![1, 3, 5],
            baselines: vec![BaselineKind::RandomPhrase, BaselineKind::PartPhrase],
            seed: 0,
            jobs: 0,
            unit: PerturbUnit::Union,
            pha_reference: PhaReference::Original,
            part_phrase_random: Part::P2,
            agreement_split: None,
            model: String::new(),
        }
    }
}

pub enum EvalInput<'a> {
    Annotations,
    Explanations(&'a [Explanation]),
}

/// Type name of extracted-explanation cells.
pub const EXTRACTED: &str = "Extracted";

fn fnv(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Baseline seed of one unit: depends on the run seed, the instance id and
/// the unit's position, never on scheduling.
fn unit_seed(seed: u64, instance: &str, unit: &str, kind: BaselineKind) -> u64 {
    mix(mix(mix(seed ^ fnv(instance)) ^ fnv(unit)) ^ kind as u64)
}

struct Ctx<'a> {
    oracle: &'a dyn Oracle,
    meta: &'a ModelMeta,
    config: &'a EvalConfig,
}

#[derive(Default)]
struct Out {
    units: Vec<UnitScores>,
    failures: Vec<Failure>,
}

impl Out {
    fn fail(&mut self, instance: &Instance, unit: &str, reason: impl Into<String>) {
        self.failures.push(Failure { instance_id: instance.id.clone(), unit: unit.to_string(), reason: reason.into() });
    }
}

fn put(values: &mut BTreeMap<Metric, f64>, metric: Metric, v: Option<f64>) {
    if let Some(v) = v {
        values.insert(metric, v);
    }
}

fn single_values(ctx: &Ctx<'_>, instance: &Instance, original: &Original, rec: &EvalRecord) -> BTreeMap<Metric, f64> {
    let mut values = BTreeMap::new();
    put(&mut values, Metric::Comp, rec.aopc_comp);
    put(&mut values, Metric::Suff, rec.aopc_suff);
    put(&mut values, Metric::CompNorm, rec.comp_per_token);
    put(&mut values, Metric::SuffNorm, rec.suff_per_token);
    let preserved = reference_class(ctx.config.pha_reference, instance, original, ctx.meta)
        .and_then(|c| rec.preserved(c))
        .map(|b| if b { 1.0 } else { 0.0 });
    put(&mut values, Metric::Pha, preserved);
    put(&mut values, Metric::PhaNorm, preserved.filter(|_| rec.perturbed_token_count > 0).map(|p| p / rec.perturbed_token_count as f64));
    values
}

struct UnitId<'a> {
    kind: &'a str,
    level: &'a str,
    annotator: Option<&'a str>,
    agreement: Option<usize>,
    /// Distinguishes units of the same cell on one instance.
    tag: String,
}

impl UnitId<'_> {
    fn name(&self) -> String {
        let mut s = format!("{}/{}", self.kind, self.level);
        if let Some(a) = self.annotator {
            s = format!("{s}/{a}");
        }
        if let Some(g) = self.agreement {
            s = format!("{s}/agree={g}");
        }
        if !self.tag.is_empty() {
            s = format!("{s}/{}", self.tag);
        }
        s
    }
}

fn emit(out: &mut Out, instance: &Instance, id: &UnitId<'_>, values: BTreeMap<Metric, f64>, missing: &[String]) {
    let name = id.name();
    for m in missing {
        out.fail(instance, &name, m.clone());
    }
    out.units.push(UnitScores {
        instance_id: instance.id.clone(),
        label: instance.label.as_str().to_string(),
        kind: id.kind.to_string(),
        level: id.level.to_string(),
        annotator: id.annotator.map(str::to_string),
        agreement: id.agreement,
        values,
    });
}

fn score_baselines(
    ctx: &Ctx<'_>,
    out: &mut Out,
    instance: &Instance,
    original: &Original,
    source: &[(Option<Span>, Option<Span>)],
    id: &UnitId<'_>,
) {
    if source.is_empty() {
        return;
    }
    for &kind in &ctx.config.baselines {
        let seed = unit_seed(ctx.config.seed, &instance.id, &id.name(), kind);
        let spec = BaselineSpec::from_pairs(kind, source, ctx.config.part_phrase_random, seed);
        if kind == BaselineKind::PartPhrase && spec.kept_spans.is_empty() {
            continue;
        }
        let sample = sample_baseline(instance, &spec);
        let rec = aopc_single(instance, &sample.selection, ctx.oracle, original);
        let values = single_values(ctx, instance, original, &rec);
        let bid = UnitId { kind: kind.as_str(), level: id.level, annotator: id.annotator, agreement: None, tag: id.tag.clone() };
        emit(out, instance, &bid, values, &rec.missing);
    }
}

fn explanation_units(ctx: &Ctx<'_>, out: &mut Out, instance: &Instance, original: &Original, e: &Explanation) {
    for &k in &ctx.config.topk {
        let level = format!("top-{k}");
        let id = UnitId { kind: EXTRACTED, level: &level, annotator: None, agreement: None, tag: String::new() };
        let sel = top_k_selection(instance, &e.pairs, k);
        let rec = aopc_single(instance, &sel, ctx.oracle, original);
        let mut values = single_values(ctx, instance, original, &rec);
        let mut missing = rec.missing.clone();
        let curve = aopc_curve(instance, &e.pairs, ctx.oracle, original, k);
        put(&mut values, Metric::CompAopc, curve.comp);
        put(&mut values, Metric::SuffAopc, curve.suff);
        put(&mut values, Metric::CompAopcNorm, curve.comp_per_token);
        put(&mut values, Metric::SuffAopcNorm, curve.suff_per_token);
        for (j, p) in curve.points.iter().enumerate() {
            // the last point repeats the single record above
            if j + 1 < curve.k {
                missing.extend(p.missing.iter().map(|m| format!("k={}: {m}", j + 1)));
            }
        }
        emit(out, instance, &id, values, &missing);

        let source: Vec<(Option<Span>, Option<Span>)> =
            e.pairs.iter().take(k).map(pair_spans).map(|[a, b]| (Some(a), Some(b))).collect();
        score_baselines(ctx, out, instance, original, &source, &id);
    }
}

fn annotation_units(ctx: &Ctx<'_>, out: &mut Out, instance: &Instance, original: &Original) {
    let sizes: HashMap<(Level, String, usize), usize> = match ctx.config.agreement_split {
        None => HashMap::new(),
        Some(mode) => Level::ALL
            .into_iter()
            .flat_map(|level| match_interactions(instance, mode, level))
            .flat_map(|g| {
                let size = g.annotator_count();
                let level = g.level;
                g.members.into_iter().map(move |m| ((level, m.annotator, m.index), size))
            })
            .collect(),
    };
    for annotator in instance.annotators() {
        let mut cells: BTreeMap<(InteractionType, Level), Vec<(usize, &Interaction)>> = BTreeMap::new();
        for (index, it) in instance.interactions(annotator).iter().enumerate() {
            cells.entry((it.kind, it.level)).or_default().push((index, it));
        }
        for ((kind, level), items) in &cells {
            let groups: Vec<(String, Vec<&Interaction>)> = match ctx.config.unit {
                PerturbUnit::Union => vec![(String::new(), items.iter().map(|x| x.1).collect())],
                PerturbUnit::PerPair => items.iter().map(|(i, it)| (format!("#{i}"), vec![*it])).collect(),
            };
            for (tag, members) in groups {
                let id = UnitId { kind: kind.as_str(), level: level.as_str(), annotator: Some(annotator), agreement: None, tag };
                human_unit(ctx, out, instance, original, &members, &id, kind.is_human());
            }
            if ctx.config.agreement_split.is_some() && kind.is_human() {
                let mut by_size: BTreeMap<usize, Vec<&Interaction>> = BTreeMap::new();
                for (index, it) in items {
                    if let Some(&s) = sizes.get(&(*level, annotator.to_string(), *index)) {
                        by_size.entry(s).or_default().push(it);
                    }
                }
                for (size, members) in by_size {
                    let id = UnitId {
                        kind: kind.as_str(),
                        level: level.as_str(),
                        annotator: Some(annotator),
                        agreement: Some(size),
                        tag: String::new(),
                    };
                    human_unit(ctx, out, instance, original, &members, &id, false);
                }
            }
        }
    }
}

fn human_unit(
    ctx: &Ctx<'_>,
    out: &mut Out,
    instance: &Instance,
    original: &Original,
    members: &[&Interaction],
    id: &UnitId<'_>,
    with_baselines: bool,
) {
    let spans: Vec<Span> = members.iter().flat_map(|it| it.spans()).collect();
    let source = SelectionSource::HumanType {
        interaction: members[0].kind,
        level: members[0].level,
        annotator: id.annotator.unwrap_or_default().to_string(),
    };
    let sel = TokenSelection::from_spans(instance, &spans, source);
    let rec = aopc_single(instance, &sel, ctx.oracle, original);
    emit(out, instance, id, single_values(ctx, instance, original, &rec), &rec.missing);
    if with_baselines {
        let pairs: Vec<_> = members.iter().map(|it| (it.span_p1, it.span_p2)).collect();
        score_baselines(ctx, out, instance, original, &pairs, id);
    }
}

fn spans_fit(instance: &Instance) -> bool {
    instance
        .annotations
        .values()
        .flatten()
        .flat_map(|it| it.spans())
        .all(|s| s.start < s.end && s.end <= instance.part_len(s.part))
}

fn evaluate_instance(ctx: &Ctx<'_>, instance: &Instance, explanation: Option<&Explanation>, annotations: bool) -> Out {
    let mut out = Out::default();
    let cached = CachedOracle::new(ctx.oracle);
    let ctx = Ctx { oracle: &cached, meta: ctx.meta, config: ctx.config };
    let original = match original_prediction(instance, ctx.oracle) {
        Ok(o) => o,
        Err(e) => {
            out.fail(instance, "original", e.to_string());
            return out;
        }
    };
    if annotations {
        if !spans_fit(instance) {
            out.fail(instance, "annotations", "span outside its part");
            return out;
        }
        annotation_units(&ctx, &mut out, instance, &original);
    } else if let Some(e) = explanation {
        if !pairs_fit(instance, &e.pairs) {
            out.fail(instance, "explanation", "span outside its part");
            return out;
        }
        explanation_units(&ctx, &mut out, instance, &original, e);
    }
    out
}

/// Scores every instance and aggregates. Work runs on `config.jobs`
/// threads; results are merged in corpus order.
pub fn evaluate_dataset(
    corpus: &Corpus,
    input: EvalInput<'_>,
    oracle: &dyn Oracle,
    meta: &ModelMeta,
    config: &EvalConfig,
) -> EvalReport {
    let ctx = Ctx { oracle, meta, config };
    let (explanations, source) = match input {
        EvalInput::Annotations => (HashMap::new(), "annotations"),
        EvalInput::Explanations(es) => (es.iter().map(|e| (e.instance_id.as_str(), e)).collect(), "explanations"),
    };
    let annotations = source == "annotations";
    let mut failures = Vec::new();
    let mut known = std::collections::HashSet::new();
    for i in &corpus.instances {
        known.insert(i.id.as_str());
        if !annotations && !explanations.contains_key(i.id.as_str()) {
            failures.push(Failure { instance_id: i.id.clone(), unit: "explanation".into(), reason: "no explanation".into() });
        }
    }
    let work = || -> Vec<Out> {
        corpus
            .instances
            .par_iter()
            .map(|i| evaluate_instance(&ctx, i, explanations.get(i.id.as_str()).copied(), annotations))
            .collect()
    };
    let outs = match rayon::ThreadPoolBuilder::new().num_threads(config.jobs).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    };
    let mut units = Vec::new();
    for o in outs {
        units.extend(o.units);
        failures.extend(o.failures);
    }
    let mut orphans: Vec<&str> = explanations.keys().copied().filter(|id| !known.contains(id)).collect();
    orphans.sort_unstable();
    for id in orphans {
        failures.push(Failure { instance_id: id.to_string(), unit: "explanation".into(), reason: "unknown instance".into() });
    }
    let mut report = EvalReport::new(corpus.dataset.to_string(), source, corpus.instances.len(), &units, failures);
    if !config.model.is_empty() {
        report.models.push(config.model.clone());
    }
    report
}

/// Per-unit scores without aggregation, in the order `evaluate_dataset` uses.
pub fn score_units(
    corpus: &Corpus,
    input: EvalInput<'_>,
    oracle: &dyn Oracle,
    meta: &ModelMeta,
    config: &EvalConfig,
) -> (Vec<UnitScores>, Vec<Failure>) {
    let ctx = Ctx { oracle, meta, config };
    let (explanations, annotations): (HashMap<&str, &Explanation>, bool) = match input {
        EvalInput::Annotations => (HashMap::new(), true),
        EvalInput::Explanations(es) => (es.iter().map(|e| (e.instance_id.as_str(), e)).collect(), false),
    };
    let mut units = Vec::new();
    let mut failures = Vec::new();
    for i in &corpus.instances {
        let o = evaluate_instance(&ctx, i, explanations.get(i.id.as_str()).copied(), annotations);
        units.extend(o.units);
        failures.extend(o.failures);
    }
    (units, failures)
}
