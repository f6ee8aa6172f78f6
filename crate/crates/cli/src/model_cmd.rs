use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;

use spanex_core::community::{extract_detailed, ExtractConfig, Explanation};
use spanex_core::dataset::Corpus;
use spanex_core::heads::{
    collect_cls, modal_head, scalar_mix_train, select_head as instance_head, HeadMethod, HeadSelector, ScalarMixHyper, ScalarMixModel,
};
use spanex_core::oracle::{ModelMeta, Oracle};

use crate::args::{ExtractArgs, SelectHeadArgs};
use crate::provenance::{artifact_json, emit, load_corpus, open_oracle, write_file, Settings};
use crate::{usage, UsageError, EXIT_FAILURE, EXIT_OK};

pub(crate) fn pool(jobs: usize) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().context("starting worker threads")
}

fn parse_method(s: &str) -> anyhow::Result<HeadMethod> {
    s.parse().map_err(|e: String| UsageError(e).into())
}

#[derive(Serialize)]
struct InstanceHead<'a> {
    instance_id: &'a str,
    head: usize,
}

#[derive(Serialize)]
struct ClassifierWeightHeads<'a> {
    method: HeadMethod,
    heads: Vec<InstanceHead<'a>>,
    modal_head: Option<usize>,
}

#[derive(Serialize)]
struct MixOutput<'a> {
    method: HeadMethod,
    head: usize,
    #[serde(flatten)]
    model: &'a ScalarMixModel,
}

fn per_instance_heads(corpus: &Corpus, oracle: &dyn Oracle, jobs: usize) -> anyhow::Result<Vec<usize>> {
    let heads: Result<Vec<usize>, _> = pool(jobs)?.install(|| {
        corpus.instances.par_iter().map(|i| instance_head(oracle, i, &HeadSelector::ClassifierWeight)).collect()
    });
    Ok(heads?)
}

fn train_mix(corpus: &Corpus, oracle: &dyn Oracle, hyper: ScalarMixHyper, seed: u64) -> anyhow::Result<ScalarMixModel> {
    let (meta, data) = collect_cls(oracle, corpus)?;
    Ok(scalar_mix_train(&data, meta.a, meta.m, hyper, seed)?)
}

pub fn select_head(a: SelectHeadArgs) -> anyhow::Result<i32> {
    let method = parse_method(&a.method)?;
    let corpus = load_corpus(&a.input)?;
    let (oracle, meta) = open_oracle(a.oracle.oracle.as_deref(), 0)?;
    let mut s = Settings::new("select-head");
    s.input("input", &a.input)?.model(&meta).set("method", method).set("seed", a.seed);
    let json = match method {
        HeadMethod::ClassifierWeight => {
            let heads = per_instance_heads(&corpus, &*oracle, 0)?;
            let modal = modal_head(&heads);
            if let Some(h) = modal {
                eprintln!("modal head {h}");
            }
            let body = ClassifierWeightHeads {
                method,
                heads: corpus
                    .instances
                    .iter()
                    .zip(&heads)
                    .map(|(i, &head)| InstanceHead { instance_id: &i.id, head })
                    .collect(),
                modal_head: modal,
            };
            artifact_json(&body, &s, Some(a.seed))?
        }
        HeadMethod::ScalarMix => {
            let hyper = ScalarMixHyper { learning_rate: a.learning_rate, epochs: a.epochs };
            s.set("learning_rate", a.learning_rate).set("epochs", a.epochs);
            let model = train_mix(&corpus, &*oracle, hyper, a.seed)?;
            eprintln!("scalar-mix head {}", model.head());
            // the model carries its own seed field
            artifact_json(&MixOutput { method, head: model.head(), model: &model }, &s, None)?
        }
    };
    emit(a.out.as_deref(), &json)?;
    Ok(EXIT_OK)
}

fn load_mix(path: &Path) -> anyhow::Result<ScalarMixModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing scalar-mix model {}", path.display()))
}

#[derive(Serialize)]
struct ExtractFailure {
    instance_id: String,
    reason: String,
}

#[derive(Serialize)]
struct ExplanationsFile<'a> {
    method: HeadMethod,
    explanations: &'a [Explanation],
    #[serde(skip_serializing_if = "Vec::is_empty")]
    failures: Vec<ExtractFailure>,
}

fn selector(a: &ExtractArgs, corpus: &Corpus, oracle: &dyn Oracle, meta: &ModelMeta, s: &mut Settings) -> anyhow::Result<HeadSelector> {
    match parse_method(&a.method)? {
        HeadMethod::ClassifierWeight => match a.head_scope.as_str() {
            "instance" => Ok(HeadSelector::ClassifierWeight),
            "model" => {
                let heads = per_instance_heads(corpus, oracle, a.jobs)?;
                let head = modal_head(&heads).context("empty corpus has no modal head")?;
                Ok(HeadSelector::Fixed { method: HeadMethod::ClassifierWeight, head })
            }
            other => usage(format!("unknown --head-scope '{other}' (expected instance or model)")),
        },
        HeadMethod::ScalarMix => {
            let model = match &a.mix_model {
                Some(p) => {
                    s.input("mix_model", p)?;
                    load_mix(p)?
                }
                None => {
                    s.set("learning_rate", a.learning_rate).set("epochs", a.epochs);
                    let hyper = ScalarMixHyper { learning_rate: a.learning_rate, epochs: a.epochs };
                    train_mix(corpus, oracle, hyper, a.seed)?
                }
            };
            if model.heads() != meta.a {
                anyhow::bail!("scalar-mix model has {} heads, the oracle has {}", model.heads(), meta.a);
            }
            Ok(HeadSelector::Fixed { method: HeadMethod::ScalarMix, head: model.head() })
        }
    }
}

pub fn extract(a: ExtractArgs) -> anyhow::Result<i32> {
    if !(a.epsilon >= 0.0 && a.epsilon.is_finite()) {
        return usage("--epsilon must be a finite non-negative number");
    }
    if a.restarts == 0 {
        return usage("--restarts must be at least 1");
    }
    let corpus = load_corpus(&a.input)?;
    let (oracle, meta) = open_oracle(a.oracle.oracle.as_deref(), a.jobs)?;
    let mut s = Settings::new("extract");
    s.input("input", &a.input)?
        .model(&meta)
        .set("method", &a.method)
        .set("head_scope", &a.head_scope)
        .set("seed", a.seed)
        .set("epsilon", a.epsilon)
        .set("restarts", a.restarts);
    let selector = selector(&a, &corpus, &*oracle, &meta, &mut s)?;
    let config = ExtractConfig { selector, seed: a.seed, epsilon: a.epsilon, restarts: a.restarts };
    let results: Vec<_> = pool(a.jobs)?.install(|| {
        corpus
            .instances
            .par_iter()
            .map(|inst| extract_detailed(inst, &*oracle, &meta, &config))
            .collect()
    });
    let mut explanations = Vec::new();
    let mut failures = Vec::new();
    for (inst, r) in corpus.instances.iter().zip(results) {
        match r {
            Ok(x) => {
                if let Some(dir) = &a.graphs {
                    let dump = serde_json::to_string_pretty(&x.graph.to_debug_json(&x.words))?;
                    write_file(&dir.join(format!("{}.graph.json", inst.id)), &(dump + "\n"))?;
                }
                explanations.push(x.explanation);
            }
            Err(e) => {
                eprintln!("warning: {e}");
                failures.push(ExtractFailure { instance_id: inst.id.clone(), reason: e.to_string() });
            }
        }
    }
    let failed = failures.len();
    let body = ExplanationsFile { method: config.selector.method(), explanations: &explanations, failures };
    write_file(&a.out, &artifact_json(&body, &s, Some(a.seed))?)?;
    eprintln!("{} explanations, {failed} failures", explanations.len());
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE })
}
