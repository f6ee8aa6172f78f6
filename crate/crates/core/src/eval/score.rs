use serde::{Deserialize, Serialize};

use super::perturb::{perturb, PerturbMode, SelectionSource, TokenSelection};
use crate::community::SpanPair;
use crate::dataset::{Instance, Part, Span};
use crate::oracle::{ModelMeta, Oracle, OracleError};

/// The model's prediction on the unperturbed instance. Every score of the
/// instance is taken on this class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Original {
    pub probabilities: Vec<f64>,
    pub class: usize,
}

impl Original {
    /// First maximum wins.
    pub fn from_probabilities(probabilities: Vec<f64>) -> Self {
        let class = argmax(&probabilities);
        Original { probabilities, class }
    }

    pub fn p(&self) -> f64 {
        self.probabilities[self.class]
    }
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

pub fn original_prediction(instance: &Instance, oracle: &dyn Oracle) -> Result<Original, OracleError> {
    oracle.predict(&instance.part1_tokens, &instance.part2_tokens).map(Original::from_probabilities)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaReference {
    /// The model's prediction on the unperturbed instance.
    #[default]
    Original,
    Gold,
}

impl std::str::FromStr for PhaReference {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "original" => Ok(PhaReference::Original),
            "gold" => Ok(PhaReference::Gold),
            other => Err(format!("unknown PHA reference '{other}'")),
        }
    }
}

/// Class a kept-only prediction is compared against; `None` when the gold
/// label has no class in the model.
pub fn reference_class(reference: PhaReference, instance: &Instance, original: &Original, meta: &ModelMeta) -> Option<usize> {
    match reference {
        PhaReference::Original => Some(original.class),
        PhaReference::Gold => meta.class_of(instance.label),
    }
}

/// Scores of one selection. A probability is `None` when its perturbation
/// could not be scored; `missing` says why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub p_orig: f64,
    pub p_removed: Option<f64>,
    pub p_kept: Option<f64>,
    /// Predicted class when only the selection is kept.
    pub kept_class: Option<usize>,
    pub aopc_comp: Option<f64>,
    pub aopc_suff: Option<f64>,
    pub perturbed_token_count: usize,
    pub comp_per_token: Option<f64>,
    pub suff_per_token: Option<f64>,
    pub missing: Vec<String>,
}

impl EvalRecord {
    /// Whether keeping the selection preserves `reference`.
    pub fn preserved(&self, reference: usize) -> Option<bool> {
        self.kept_class.map(|c| c == reference)
    }
}

fn score(
    instance: &Instance,
    selection: &TokenSelection,
    mode: PerturbMode,
    oracle: &dyn Oracle,
) -> Result<Vec<f64>, String> {
    let p = perturb(instance, selection, mode).map_err(|e| e.to_string())?;
    oracle.predict(&p.part1, &p.part2).map_err(|e| format!("{mode:?}: {e}").to_lowercase())
}

/// `comp = p(ŷ|x) − p(ŷ|x without S)` and `suff = p(ŷ|x) − p(ŷ|only S)`.
pub fn aopc_single(instance: &Instance, selection: &TokenSelection, oracle: &dyn Oracle, original: &Original) -> EvalRecord {
    let class = original.class;
    let p_orig = original.p();
    let mut missing = Vec::new();
    let mut run = |mode| match score(instance, selection, mode, oracle) {
        Ok(p) => Some(p),
        Err(reason) => {
            missing.push(reason);
            None
        }
    };
    let removed = run(PerturbMode::Remove);
    let kept = run(PerturbMode::Keep);
    let p_removed = removed.as_ref().map(|p| p[class]);
    let p_kept = kept.as_ref().map(|p| p[class]);
    let count = selection.count();
    let aopc_comp = p_removed.map(|p| p_orig - p);
    let aopc_suff = p_kept.map(|p| p_orig - p);
    let per_token = |v: Option<f64>| v.filter(|_| count > 0).map(|v| v / count as f64);
    EvalRecord {
        p_orig,
        p_removed,
        p_kept,
        kept_class: kept.as_deref().map(argmax),
        aopc_comp,
        aopc_suff,
        perturbed_token_count: count,
        comp_per_token: per_token(aopc_comp),
        suff_per_token: per_token(aopc_suff),
        missing,
    }
}

pub(crate) fn pair_spans(pair: &SpanPair) -> [Span; 2] {
    [Span::new(Part::P1, pair.p1[0], pair.p1[1]), Span::new(Part::P2, pair.p2[0], pair.p2[1])]
}

/// Whether every span of the explanation lies inside its part.
pub fn pairs_fit(instance: &Instance, pairs: &[SpanPair]) -> bool {
    pairs.iter().flat_map(pair_spans).all(|s| s.start < s.end && s.end <= instance.part_len(s.part))
}

/// Union of the tokens of the first `k` pairs (fewer if the list is shorter).
pub fn top_k_selection(instance: &Instance, pairs: &[SpanPair], k: usize) -> TokenSelection {
    let spans: Vec<Span> = pairs.iter().take(k).flat_map(pair_spans).collect();
    TokenSelection::from_spans(instance, &spans, SelectionSource::ExtractedTopK { k })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AopcCurve {
    /// `K` after truncation to the number of pairs.
    pub k: usize,
    pub comp: Option<f64>,
    pub suff: Option<f64>,
    pub comp_per_token: Option<f64>,
    pub suff_per_token: Option<f64>,
    /// Record for each `k = 1..=K`.
    pub points: Vec<EvalRecord>,
}

fn mean_of(points: &[EvalRecord], f: impl Fn(&EvalRecord) -> Option<f64>) -> Option<f64> {
    if points.is_empty() {
        return Some(0.0);
    }
    let mut sum = 0.0;
    for p in points {
        sum += f(p)?;
    }
    Some(sum / points.len() as f64)
}

/// Mean of the top-k scores over `k = 1..=K`. `K = 0` scores 0.
pub fn aopc_curve(
    instance: &Instance,
    pairs: &[SpanPair],
    oracle: &dyn Oracle,
    original: &Original,
    k: usize,
) -> AopcCurve {
    let k = k.min(pairs.len());
    let points: Vec<EvalRecord> =
        (1..=k).map(|j| aopc_single(instance, &top_k_selection(instance, pairs, j), oracle, original)).collect();
    AopcCurve {
        k,
        comp: mean_of(&points, |r| r.aopc_comp),
        suff: mean_of(&points, |r| r.aopc_suff),
        comp_per_token: mean_of(&points, |r| r.comp_per_token),
        suff_per_token: mean_of(&points, |r| r.suff_per_token),
        points,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaResult {
    /// Fraction of scored instances whose reference class survives; `None`
    /// when nothing could be scored.
    pub accuracy: Option<f64>,
    /// Mean of the 0/1 outcome divided by the kept-token count.
    pub per_token: Option<f64>,
    pub scored: usize,
    /// `(instance id, reason)` for selections that could not be scored.
    pub missing: Vec<(String, String)>,
}

/// Post-hoc accuracy of Keep-mode perturbations. Selections are matched to
/// instances by id.
pub fn pha(
    instances: &[Instance],
    selections: &[TokenSelection],
    oracle: &dyn Oracle,
    meta: &ModelMeta,
    reference: PhaReference,
) -> PhaResult {
    let mut hits = 0usize;
    let mut per_token = 0.0;
    let mut scored = 0usize;
    let mut missing = Vec::new();
    for sel in selections {
        let Some(instance) = instances.iter().find(|i| i.id == sel.instance_id) else {
            missing.push((sel.instance_id.clone(), "unknown instance".to_string()));
            continue;
        };
        let original = match original_prediction(instance, oracle) {
            Ok(o) => o,
            Err(e) => {
                missing.push((instance.id.clone(), e.to_string()));
                continue;
            }
        };
        let Some(target) = reference_class(reference, instance, &original, meta) else {
            missing.push((instance.id.clone(), format!("label {} has no model class", instance.label)));
            continue;
        };
        match score(instance, sel, PerturbMode::Keep, oracle) {
            Ok(p) => {
                scored += 1;
                if argmax(&p) == target {
                    hits += 1;
                    per_token += 1.0 / sel.count() as f64;
                }
            }
            Err(reason) => missing.push((instance.id.clone(), reason)),
        }
    }
    let frac = |x: f64| (scored > 0).then(|| x / scored as f64);
    PhaResult { accuracy: frac(hits as f64), per_token: frac(per_token), scored, missing }
}
