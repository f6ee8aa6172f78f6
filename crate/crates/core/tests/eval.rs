use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spanex_core::community::{Explanation, SpanPair};
use spanex_core::dataset::{Corpus, DatasetKind, Instance, Interaction, InteractionType, Label, Level, Part, Span};
use spanex_core::eval::*;
use spanex_core::heads::HeadMethod;
use spanex_core::oracle::{MockOracle, Oracle};

const VOCAB: &[&str] = &[
    "a", "the", "dog", "man", "runs", "park", "red", "good", "people", "outside", "tall", "sad", "friends", "not",
    "nobody", "sleeping", "same", "married",
];

fn mock() -> MockOracle {
    MockOracle::new(Default::default())
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn instance(id: &str, label: Label, p1: &str, p2: &str) -> Instance {
    Instance { id: id.into(), label, part1_tokens: words(p1), part2_tokens: words(p2), annotations: BTreeMap::new() }
}

fn random_instance(rng: &mut ChaCha8Rng, id: usize) -> Instance {
    let mut part = |lo, hi| -> Vec<String> {
        let n = rng.random_range(lo..=hi);
        (0..n).map(|_| VOCAB[rng.random_range(0..VOCAB.len())].to_string()).collect()
    };
    let p1 = part(2, 12);
    let p2 = part(2, 8);
    Instance { id: format!("r{id}"), label: Label::Neutral, part1_tokens: p1, part2_tokens: p2, annotations: BTreeMap::new() }
}

fn source() -> SelectionSource {
    SelectionSource::ExtractedTopK { k: 0 }
}

#[test]
fn comp_of_selection_equals_suff_of_complement() {
    let oracle = mock();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut checked = 0;
    while checked < 500 {
        let inst = random_instance(&mut rng, checked);
        let mut sel = TokenSelection::empty(&inst, source());
        sel.p1.iter_mut().for_each(|b| *b = rng.random_bool(0.4));
        sel.p2.iter_mut().for_each(|b| *b = rng.random_bool(0.4));
        // both perturbations must leave every part non-empty
        if [&sel.p1, &sel.p2].iter().any(|m| m.iter().all(|&b| b) || m.iter().all(|&b| !b)) {
            continue;
        }
        let orig = original_prediction(&inst, &oracle).unwrap();
        let direct = aopc_single(&inst, &sel, &oracle, &orig);
        let dual = aopc_single(&inst, &sel.complement(), &oracle, &orig);
        let (a, b) = (direct.p_removed.unwrap(), dual.p_kept.unwrap());
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(direct.aopc_comp.unwrap().to_bits(), dual.aopc_suff.unwrap().to_bits());
        checked += 1;
    }
}

#[test]
fn removing_good_under_the_mock() {
    let inst = instance("g", Label::Entailment, "a good dog", "a dog");
    let oracle = mock();
    let orig = original_prediction(&inst, &oracle).unwrap();
    // 18 / (18 + 1 + 1) with "good", uniform without any keyword
    assert_eq!(orig.p(), 0.9);
    let sel = TokenSelection::from_spans(&inst, &[Span::new(Part::P1, 1, 2)], source());
    let r = aopc_single(&inst, &sel, &oracle, &orig);
    assert!((r.aopc_comp.unwrap() - (0.9 - 1.0 / 3.0)).abs() < 1e-15);
}

fn spans_of(p: &SpanPair) -> Vec<(Part, usize, usize)> {
    vec![(Part::P1, p.p1[0], p.p1[1]), (Part::P2, p.p2[0], p.p2[1])]
}

/// Per-k scores rebuilt from raw token lists and direct `predict` calls.
fn direct_curve(inst: &Instance, pairs: &[SpanPair], oracle: &dyn Oracle, k: usize) -> (f64, f64) {
    let p0 = oracle.predict(&inst.part1_tokens, &inst.part2_tokens).unwrap();
    let y = (0..p0.len()).fold(0, |b, i| if p0[i] > p0[b] { i } else { b });
    let (mut comp, mut suff) = (0.0, 0.0);
    for j in 1..=k {
        let mut chosen = [vec![false; inst.part1_tokens.len()], vec![false; inst.part2_tokens.len()]];
        for p in &pairs[..j] {
            for (part, s, e) in spans_of(p) {
                let idx = if part == Part::P1 { 0 } else { 1 };
                (s..e).for_each(|t| chosen[idx][t] = true);
            }
        }
        let pick = |toks: &[String], mask: &[bool], keep: bool| -> Vec<String> {
            toks.iter().zip(mask).filter(|(_, &m)| m == keep).map(|(t, _)| t.clone()).collect()
        };
        let rem = oracle
            .predict(&pick(&inst.part1_tokens, &chosen[0], false), &pick(&inst.part2_tokens, &chosen[1], false))
            .unwrap();
        let kep = oracle
            .predict(&pick(&inst.part1_tokens, &chosen[0], true), &pick(&inst.part2_tokens, &chosen[1], true))
            .unwrap();
        comp += p0[y] - rem[y];
        suff += p0[y] - kep[y];
    }
    (comp / k as f64, suff / k as f64)
}

#[test]
fn curve_is_the_mean_of_per_k_scores() {
    let oracle = mock();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut done = 0;
    while done < 40 {
        let inst = random_instance(&mut rng, done);
        let (n1, n2) = (inst.part1_tokens.len(), inst.part2_tokens.len());
        if n1 < 4 || n2 < 4 {
            continue;
        }
        let pairs: Vec<SpanPair> = (0..3)
            .map(|i| SpanPair { p1: [i, i + 1], p2: [i, i + 1], score: 1.0 - i as f64 * 0.1 })
            .collect();
        let orig = original_prediction(&inst, &oracle).unwrap();
        let curve = aopc_curve(&inst, &pairs, &oracle, &orig, 3);
        let (c, s) = direct_curve(&inst, &pairs, &oracle, 3);
        assert!((curve.comp.unwrap() - c).abs() < 1e-12);
        assert!((curve.suff.unwrap() - s).abs() < 1e-12);
        let top1 = aopc_single(&inst, &top_k_selection(&inst, &pairs, 1), &oracle, &orig);
        assert_eq!(aopc_curve(&inst, &pairs, &oracle, &orig, 1).comp, top1.aopc_comp);
        done += 1;
    }
}

fn tv(a: &BTreeMap<usize, u64>, source: &Histogram) -> f64 {
    let total: u64 = a.values().sum();
    let mut keys: Vec<usize> = a.keys().copied().chain(source.values.iter().copied()).collect();
    keys.sort_unstable();
    keys.dedup();
    let src_total: u64 = source.counts.iter().sum();
    keys.iter()
        .map(|k| {
            let p = a.get(k).copied().unwrap_or(0) as f64 / total as f64;
            let q = source.values.iter().position(|v| v == k).map_or(0.0, |i| source.counts[i] as f64 / src_total as f64);
            (p - q).abs()
        })
        .sum::<f64>()
        / 2.0
}

#[test]
fn random_phrase_marginals_match_source() {
    let inst = instance("b", Label::Neutral, &vec!["w"; 12].join(" "), &vec!["v"; 9].join(" "));
    let spec = BaselineSpec {
        kind: BaselineKind::RandomPhrase,
        pair_count: Histogram { values: vec![1, 2, 3], counts: vec![3, 1, 2] },
        p1_length: Histogram { values: vec![1, 2, 3, 5], counts: vec![4, 2, 1, 1] },
        p2_length: Histogram { values: vec![1, 2, 4], counts: vec![5, 3, 2] },
        kept_spans: vec![],
        random_side: Part::P2,
        seed: 11,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut counts, mut l1, mut l2) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
    for _ in 0..100_000 {
        let s = sample_baseline_with(&inst, &spec, &mut rng);
        *counts.entry(s.pairs.len()).or_insert(0) += 1;
        for (a, b) in s.pairs {
            *l1.entry(a.unwrap().len()).or_insert(0) += 1;
            *l2.entry(b.unwrap().len()).or_insert(0) += 1;
        }
    }
    assert!(tv(&counts, &spec.pair_count) < 0.02);
    assert!(tv(&l1, &spec.p1_length) < 0.02);
    assert!(tv(&l2, &spec.p2_length) < 0.02);
}

#[test]
fn part_phrase_keeps_human_spans() {
    let inst = instance("b", Label::Neutral, "a b c d e f g", "h i j k l");
    let src = [
        (Some(Span::new(Part::P1, 0, 2)), Some(Span::new(Part::P2, 1, 3))),
        (Some(Span::new(Part::P1, 4, 7)), Some(Span::new(Part::P2, 4, 5))),
    ];
    let spec = BaselineSpec::from_pairs(BaselineKind::PartPhrase, &src, Part::P2, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let s = sample_baseline_with(&inst, &spec, &mut rng);
        assert_eq!(s.pairs.len(), 2);
        let mut kept: Vec<Span> = s.pairs.iter().map(|p| p.0.unwrap()).collect();
        kept.sort_by_key(|s| s.start);
        assert_eq!(kept, vec![src[0].0.unwrap(), src[1].0.unwrap()]);
        for (_, b) in &s.pairs {
            let b = b.unwrap();
            assert!(b.end <= 5 && [1, 2].contains(&b.len()));
        }
    }
}

#[test]
fn seeded_baselines_are_bitwise_reproducible() {
    let inst = instance("b", Label::Neutral, "a b c d e f g", "h i j k l");
    let src = [(Some(Span::new(Part::P1, 0, 2)), Some(Span::new(Part::P2, 1, 3)))];
    for kind in [BaselineKind::RandomPhrase, BaselineKind::PartPhrase] {
        for seed in 0..20 {
            let spec = BaselineSpec::from_pairs(kind, &src, Part::P2, seed);
            assert_eq!(sample_baseline(&inst, &spec), sample_baseline(&inst, &spec));
        }
    }
}

/// Five fixtures traced by hand against the mock's keyword counts.
fn pha_fixtures() -> (Vec<Instance>, Vec<TokenSelection>) {
    let rows: [(&str, &str, usize, usize); 5] = [
        // class 0 twice; keeps "people" and "good" -> class 0, preserved
        ("the people smile", "a good day", 1, 1),
        // tie 0/2 resolves to class 0; keeps "nobody" and "was" -> class 2, lost
        ("nobody came", "it was good", 0, 1),
        // class 1 three times; keeps "married" and "sad" -> class 1, preserved
        ("they are married", "friends are sad", 2, 2),
        // no keyword: uniform, class 0; keeps "dog" and "cat" -> uniform, preserved
        ("a dog runs", "a cat sleeps", 1, 1),
        // class 0 three times vs one "no"; keeps "no" and "are" -> class 2, lost
        ("no one is outside", "people are together", 0, 1),
    ];
    let mut insts = Vec::new();
    let mut sels = Vec::new();
    for (i, (p1, p2, t1, t2)) in rows.into_iter().enumerate() {
        let inst = instance(&format!("f{i}"), Label::Entailment, p1, p2);
        let spans = [Span::new(Part::P1, t1, t1 + 1), Span::new(Part::P2, t2, t2 + 1)];
        sels.push(TokenSelection::from_spans(&inst, &spans, source()));
        insts.push(inst);
    }
    (insts, sels)
}

#[test]
fn pha_hand_traced_fixtures() {
    let oracle = mock();
    let meta = oracle.meta().unwrap();
    let (insts, sels) = pha_fixtures();
    let r = pha(&insts, &sels, &oracle, &meta, PhaReference::Original);
    assert_eq!(r.scored, 5);
    assert_eq!(r.accuracy, Some(0.6));
    // two kept tokens everywhere: (1/2 + 1/2 + 1/2) / 5
    assert!((r.per_token.unwrap() - 0.3).abs() < 1e-15);
    // gold is Entailment (class 0) everywhere, so fixture 2 no longer counts
    let g = pha(&insts, &sels, &oracle, &meta, PhaReference::Gold);
    assert_eq!(g.accuracy, Some(0.4));
}

fn pair(p1: [usize; 2], p2: [usize; 2], score: f64) -> SpanPair {
    SpanPair { p1, p2, score }
}

fn toy_corpus() -> (Corpus, Vec<Explanation>) {
    let mut corpus = Corpus::new(DatasetKind::Snli);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut expl = Vec::new();
    for i in 0..12 {
        let mut inst = random_instance(&mut rng, i);
        inst.label = Label::ALL[i % 3];
        let n1 = inst.part1_tokens.len();
        let n2 = inst.part2_tokens.len();
        let mut pairs = vec![pair([0, 1], [0, 1], 0.7)];
        if n1 > 2 && n2 > 2 {
            pairs.push(pair([1, 3], [1, 2], 0.4));
        }
        let mut anns = Vec::new();
        for a in ["a1", "a2", "a3"] {
            let mut list = vec![Interaction::pair(InteractionType::Synonym, Level::Low, (0, 1), (0, 1))];
            if a != "a3" {
                list.push(Interaction::pair(InteractionType::Antonym, Level::High, (0, n1 - 1), (1, n2)));
            }
            anns.push((a.to_string(), list));
        }
        inst.annotations = anns.into_iter().collect();
        expl.push(Explanation { instance_id: inst.id.clone(), head: 2, method: HeadMethod::ClassifierWeight, seed: 0, pairs });
        corpus.instances.push(inst);
    }
    (corpus, expl)
}

#[test]
fn thread_count_does_not_change_reports() {
    let (corpus, expl) = toy_corpus();
    let oracle = mock();
    let meta = oracle.meta().unwrap();
    let mut config = EvalConfig { jobs: 1, ..Default::default() };
    let a = evaluate_dataset(&corpus, EvalInput::Explanations(&expl), &oracle, &meta, &config);
    config.jobs = 4;
    let b = evaluate_dataset(&corpus, EvalInput::Explanations(&expl), &oracle, &meta, &config);
    assert_eq!(a, b);
    assert!(a.cells.iter().any(|c| c.kind == EXTRACTED && c.level == "top-3" && c.metric == Metric::CompAopc));
    assert!(a.cells.iter().any(|c| c.kind == "Random-Phrase"));
    assert!(a.cells.iter().any(|c| c.kind == "Part-Phrase"));
    assert!(a.failures.is_empty(), "{:?}", a.failures);
}

#[test]
fn duplicating_instances_keeps_means() {
    let (corpus, expl) = toy_corpus();
    let oracle = mock();
    let meta = oracle.meta().unwrap();
    let config = EvalConfig::default();
    let once = evaluate_dataset(&corpus, EvalInput::Explanations(&expl), &oracle, &meta, &config);
    let mut twice = corpus.clone();
    let mut expl2 = expl.clone();
    for (inst, e) in corpus.instances.iter().zip(&expl) {
        let mut i = inst.clone();
        i.id = format!("{}-dup", i.id);
        let mut e = e.clone();
        e.instance_id = i.id.clone();
        twice.instances.push(i);
        expl2.push(e);
    }
    let both = evaluate_dataset(&twice, EvalInput::Explanations(&expl2), &oracle, &meta, &config);
    for c in once.cells.iter().filter(|c| c.kind == EXTRACTED) {
        let d = both.cells.iter().find(|d| (&d.label, &d.kind, &d.level, d.metric) == (&c.label, &c.kind, &c.level, c.metric)).unwrap();
        assert_eq!(d.n, 2 * c.n);
        assert!((d.mean - c.mean).abs() < 1e-12);
        assert!((d.std - c.std).abs() < 1e-12);
    }
}

#[test]
fn annotation_mode_cells_and_agreement_split() {
    let (corpus, _) = toy_corpus();
    let oracle = mock();
    let meta = oracle.meta().unwrap();
    let config = EvalConfig { agreement_split: Some(spanex_core::agreement::MatchMode::Exact), ..Default::default() };
    let r = evaluate_dataset(&corpus, EvalInput::Annotations, &oracle, &meta, &config);
    assert_eq!(r.source, "annotations");
    let all = |kind: &str, level: &str, m: Metric| {
        r.cells.iter().find(|c| c.label == ALL_LABELS && c.kind == kind && c.level == level && c.metric == m).cloned()
    };
    // one Synonym unit per annotator and instance
    assert_eq!(all("Synonym", "low", Metric::Comp).unwrap().n, 36);
    assert!(all("Antonym", "high", Metric::Comp).is_some());
    assert!(all("Random-Phrase", "low", Metric::Comp).is_some());
    // Synonym agreed by all three, Antonym by two
    let split = |kind: &str, g: usize| r.agreement_cells.iter().any(|c| c.kind == kind && c.agreement == Some(g));
    assert!(split("Synonym", 3) && split("Antonym", 2));
    assert!(!split("Synonym", 1));
    for row in &r.ranking {
        assert!(row.rank >= 1 && row.rank <= row.total);
    }
    let per_pair = EvalConfig { unit: PerturbUnit::PerPair, ..Default::default() };
    let p = evaluate_dataset(&corpus, EvalInput::Annotations, &oracle, &meta, &per_pair);
    assert!(p.cells.iter().any(|c| c.kind == "Synonym"));
}

#[test]
fn missing_explanations_are_reported() {
    let (corpus, expl) = toy_corpus();
    let oracle = mock();
    let meta = oracle.meta().unwrap();
    let mut partial = expl[1..].to_vec();
    partial.push(Explanation { instance_id: "ghost".into(), ..expl[0].clone() });
    let r = evaluate_dataset(&corpus, EvalInput::Explanations(&partial), &oracle, &meta, &EvalConfig::default());
    assert!(r.failures.iter().any(|f| f.instance_id == corpus.instances[0].id && f.reason == "no explanation"));
    assert!(r.failures.iter().any(|f| f.instance_id == "ghost"));
}

#[test]
fn csv_outputs_have_fixed_headers() {
    let (corpus, expl) = toy_corpus();
    let oracle = mock();
    let meta = oracle.meta().unwrap();
    let r = evaluate_dataset(&corpus, EvalInput::Explanations(&expl), &oracle, &meta, &EvalConfig::default());
    let csv = r.to_csv();
    assert!(csv.starts_with("dataset,label,type,level,metric,mean,std,n\n"));
    assert_eq!(csv.lines().count(), r.cells.len() + 1);
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 8 && l.starts_with("SNLI,")));
    assert!(r.plot_csv().lines().skip(1).all(|l| l.split(',').count() == 7));
    let merged = EvalReport::merge(&[r.clone(), r.clone()]).unwrap();
    for (a, b) in merged.cells.iter().zip(&r.cells) {
        assert_eq!(a.n, 2 * b.n);
        assert!((a.mean - b.mean).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn records_respect_their_formulas(seed in any::<u64>(), density in 0.05f64..0.95) {
        let oracle = mock();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 0);
        let mut sel = TokenSelection::empty(&inst, source());
        sel.p1.iter_mut().for_each(|b| *b = rng.random_bool(density));
        sel.p2.iter_mut().for_each(|b| *b = rng.random_bool(density));
        let orig = original_prediction(&inst, &oracle).unwrap();
        let r = aopc_single(&inst, &sel, &oracle, &orig);
        prop_assert_eq!(r.perturbed_token_count, sel.count());
        for p in [Some(r.p_orig), r.p_removed, r.p_kept].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        if let Some(p) = r.p_removed {
            prop_assert_eq!(r.aopc_comp, Some(r.p_orig - p));
            if r.perturbed_token_count > 0 {
                prop_assert_eq!(r.comp_per_token, Some((r.p_orig - p) / r.perturbed_token_count as f64));
            }
        } else {
            prop_assert!(!r.missing.is_empty());
        }
        if let Some(p) = r.p_kept {
            prop_assert_eq!(r.aopc_suff, Some(r.p_orig - p));
        } else {
            prop_assert!(!r.missing.is_empty());
        }
    }

    #[test]
    fn pha_is_a_fraction_and_keep_all_is_one(seed in any::<u64>()) {
        let oracle = mock();
        let meta = oracle.meta().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let insts: Vec<Instance> = (0..6).map(|i| random_instance(&mut rng, i)).collect();
        let full: Vec<_> = insts.iter().map(|i| TokenSelection::full(i, source())).collect();
        prop_assert_eq!(pha(&insts, &full, &oracle, &meta, PhaReference::Original).accuracy, Some(1.0));
        let some: Vec<_> = insts
            .iter()
            .map(|i| {
                let mut s = TokenSelection::empty(i, source());
                s.p1[0] = true;
                let t = rng.random_range(0..s.p2.len());
                s.p2[t] = true;
                s
            })
            .collect();
        let acc = pha(&insts, &some, &oracle, &meta, PhaReference::Original).accuracy.unwrap();
        prop_assert!((0.0..=1.0).contains(&acc));
    }
}
