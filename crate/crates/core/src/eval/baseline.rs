use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::perturb::{BaselineKind, SelectionSource, TokenSelection};
use crate::dataset::{Instance, Part, Span};

/// Placement attempts before an over-long span is cut to the part length.
pub const MAX_RESAMPLES: usize = 100;

/// Empirical distribution over non-negative integers, sorted by value.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Histogram {
    pub values: Vec<usize>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn from_samples(samples: impl IntoIterator<Item = usize>) -> Self {
        let mut map = std::collections::BTreeMap::new();
        for s in samples {
            *map.entry(s).or_insert(0u64) += 1;
        }
        Histogram { values: map.keys().copied().collect(), counts: map.values().copied().collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn probability(&self, value: usize) -> f64 {
        match self.values.iter().position(|&v| v == value) {
            Some(i) => self.counts[i] as f64 / self.total() as f64,
            None => 0.0,
        }
    }

    fn sampler(&self) -> Option<WeightedIndex<u64>> {
        WeightedIndex::new(&self.counts).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSpec {
    pub kind: BaselineKind,
    pub pair_count: Histogram,
    pub p1_length: Histogram,
    pub p2_length: Histogram,
    /// Part-Phrase: source spans on the side kept verbatim.
    pub kept_spans: Vec<Span>,
    /// Part-Phrase: the side drawn at random.
    pub random_side: Part,
    pub seed: u64,
}

impl BaselineSpec {
    /// Distributions recorded from source pairs; a pair may lack one side.
    pub fn from_pairs(kind: BaselineKind, pairs: &[(Option<Span>, Option<Span>)], random_side: Part, seed: u64) -> Self {
        let lengths = |f: fn(&(Option<Span>, Option<Span>)) -> Option<Span>| {
            Histogram::from_samples(pairs.iter().filter_map(f).map(|s| s.len()))
        };
        let kept_side = random_side.other();
        BaselineSpec {
            kind,
            pair_count: Histogram::from_samples([pairs.len()]),
            p1_length: lengths(|p| p.0),
            p2_length: lengths(|p| p.1),
            kept_spans: pairs
                .iter()
                .filter_map(|p| match kept_side {
                    Part::P1 => p.0,
                    Part::P2 => p.1,
                })
                .collect(),
            random_side,
            seed,
        }
    }

    fn lengths(&self, part: Part) -> &Histogram {
        match part {
            Part::P1 => &self.p1_length,
            Part::P2 => &self.p2_length,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSample {
    pub pairs: Vec<(Option<Span>, Option<Span>)>,
    pub selection: TokenSelection,
}

fn random_span<R: Rng>(rng: &mut R, part: Part, lengths: &Histogram, part_len: usize) -> Option<Span> {
    let dist = lengths.sampler()?;
    if part_len == 0 {
        return None;
    }
    let mut len = 0;
    for _ in 0..MAX_RESAMPLES {
        len = lengths.values[dist.sample(rng)];
        if len <= part_len {
            break;
        }
    }
    let len = len.clamp(1, part_len);
    let start = rng.random_range(0..=part_len - len);
    Some(Span::new(part, start, start + len))
}

/// Draws one baseline explanation with a generator seeded from `spec.seed`.
pub fn sample_baseline(instance: &Instance, spec: &BaselineSpec) -> BaselineSample {
    sample_baseline_with(instance, spec, &mut ChaCha8Rng::seed_from_u64(spec.seed))
}

/// As [`sample_baseline`], drawing from a caller-owned generator.
pub fn sample_baseline_with<R: Rng>(instance: &Instance, spec: &BaselineSpec, rng: &mut R) -> BaselineSample {
    let count = spec.pair_count.sampler().map_or(0, |d| spec.pair_count.values[d.sample(rng)]);
    let mut pairs = Vec::with_capacity(count);
    // kept spans are used without replacement, cycling when the count is larger
    let mut order: Vec<usize> = (0..spec.kept_spans.len()).collect();
    if spec.kind == BaselineKind::PartPhrase {
        order.shuffle(rng);
    }
    for j in 0..count {
        let pair = match spec.kind {
            BaselineKind::RandomPhrase => (
                random_span(rng, Part::P1, &spec.p1_length, instance.part_len(Part::P1)),
                random_span(rng, Part::P2, &spec.p2_length, instance.part_len(Part::P2)),
            ),
            BaselineKind::PartPhrase => {
                let kept = (!order.is_empty()).then(|| spec.kept_spans[order[j % order.len()]]);
                let side = spec.random_side;
                let random = random_span(rng, side, spec.lengths(side), instance.part_len(side));
                match side {
                    Part::P1 => (random, kept),
                    Part::P2 => (kept, random),
                }
            }
        };
        pairs.push(pair);
    }
    let spans: Vec<Span> = pairs.iter().flat_map(|(a, b)| a.iter().chain(b.iter()).copied()).collect();
    let selection = TokenSelection::from_spans(instance, &spans, SelectionSource::Baseline { baseline: spec.kind });
    BaselineSample { pairs, selection }
}
