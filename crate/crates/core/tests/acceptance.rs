//! Acceptance suite. Runs every criterion against the shipped synthetic
//! fixtures and prints one `PASS`/`FAIL` line per criterion; exits non-zero
//! if any fails.
//!
//! Pinned setup: SiteA generated with seed 1, SiteB with seed 2, both 200
//! documents of 8 to 15 sentences; each split 70/10/20 with seed 3; builtin
//! lexicons with seed 0; harness seed 0; 5 paired seeds; α = 2.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use phicon::augment::{augment_corpus, AugOp, AugmentConfig};
use phicon::corpus::{
    extract_entities, parse_conll, serialize_conll, split_corpus, validate_bio, Category, Corpus, Document, Label,
    PhiType, Sentence, Token, CATEGORIES, FINE_TYPES,
};
use phicon::evaluate::{
    ablation_arms, binary_token_f1, format_ablation, format_sweep, to_jsonl, Arm, ExperimentResult, Harness,
};
use phicon::lexicon::LexiconRegistry;
use phicon::rng::RandomStream;
use phicon::synonyms::SynonymProvider;
use phicon::synthgen::{builtin_profiles, generate_corpus};
use phicon::tagger::{self, TaggerModel};

const N_SEEDS: usize = 5;
const ALPHA: u32 = 2;
const LOW_RESOURCE_SLACK: f64 = 0.01;
const SWEEP_SLACK: f64 = 0.01;
const IN_DOMAIN_TARGET: f64 = 0.85;
const IN_DOMAIN_TOL: f64 = 0.05;
const DROP_TARGET_POINTS: f64 = 10.0;
const DROP_TOL_POINTS: f64 = 3.0;
const METRIC_CASES: usize = 1000;
const FUZZ_SENTENCES: usize = 10_000;
const ROUND_TRIP_CASES: usize = 500;

struct Fixtures {
    site_a: Corpus,
    site_b: Corpus,
    a_train: Corpus,
    a_test: Corpus,
    b_dev: Corpus,
    registry: LexiconRegistry,
    provider: SynonymProvider,
}

impl Fixtures {
    fn load() -> Self {
        let (pa, pb) = builtin_profiles();
        let site_a = generate_corpus(&pa, 200, (8, 15), 1).unwrap();
        let site_b = generate_corpus(&pb, 200, (8, 15), 2).unwrap();
        let (a_train, _, a_test) = split_corpus(&site_a, [0.7, 0.1, 0.2], 3).unwrap();
        let (_, b_dev, _) = split_corpus(&site_b, [0.7, 0.1, 0.2], 3).unwrap();
        Self {
            site_a,
            site_b,
            a_train,
            a_test,
            b_dev,
            registry: LexiconRegistry::builtin(0).unwrap(),
            provider: SynonymProvider::builtin(),
        }
    }

    fn harness(&self) -> Harness<'_> {
        let mut h = Harness::new(&self.registry, &self.provider);
        h.setting = "SiteA→SiteB".into();
        h
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fmt_seeds(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:+.4}")).collect::<Vec<_>>().join(" ")
}

fn means(r: &ExperimentResult) -> BTreeMap<String, f64> {
    r.means()
}

fn criterion_1(low: &ExperimentResult, full: &ExperimentResult, seconds: f64) -> Outcome {
    let (ml, mf) = (means(low), means(full));
    let imp_low = low.improvements("phicon", "baseline").unwrap();
    let positive = imp_low.iter().filter(|d| **d > 0.0).count();
    let pass = ml["phicon"] > ml["baseline"] && mf["phicon"] > mf["baseline"] && positive >= 4 && seconds < 180.0;
    outcome(
        pass,
        format!(
            "20%: baseline {:.4} phicon {:.4}; 100%: baseline {:.4} phicon {:.4}; seeds improved at 20%: {positive}/5 [{}]; {seconds:.1}s",
            ml["baseline"],
            ml["phicon"],
            mf["baseline"],
            mf["phicon"],
            fmt_seeds(&imp_low)
        ),
    )
}

fn criterion_2(low: &ExperimentResult, full: &ExperimentResult) -> Outcome {
    let avg = |r: &ExperimentResult| {
        let d = r.improvements("phicon", "baseline").unwrap();
        d.iter().sum::<f64>() / d.len() as f64
    };
    let (il, ifull) = (avg(low), avg(full));
    outcome(
        il >= ifull - LOW_RESOURCE_SLACK,
        format!("mean improvement 20%: {il:+.4}, 100%: {ifull:+.4} (slack {LOW_RESOURCE_SLACK})"),
    )
}

fn criterion_3(low: &ExperimentResult, full: &ExperimentResult) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in [low, full] {
        let m = means(r);
        pass &= m["phi_only"] >= m["baseline"] && m["phicon"] >= m["baseline"];
        let table = format_ablation(r);
        let rows: Vec<&str> = table
            .lines()
            .skip(2)
            .map(|l| l.split_whitespace().next().unwrap_or(""))
            .collect();
        pass &= rows == ["Baseline", "+PHI", "+Context", "+PHICON"];
        parts.push(format!(
            "{:.0}%: baseline {:.4} +PHI {:.4} +Context {:.4} +PHICON {:.4}",
            r.train_fraction * 100.0,
            m["baseline"],
            m["phi_only"],
            m["context_only"],
            m["phicon"]
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_4(fx: &Fixtures) -> Outcome {
    let h = fx.harness();
    let sweep = h
        .alpha_sweep(
            &fx.a_train,
            &fx.b_dev,
            &[1, 2, 3, 4],
            &AugmentConfig::default(),
            N_SEEDS,
        )
        .unwrap();
    let alphas: Vec<u32> = sweep.points.iter().map(|p| p.alpha).collect();
    let floor = sweep.baseline - SWEEP_SLACK;
    let pass =
        alphas == [1, 2, 3, 4] && sweep.points.iter().all(|p| p.mean >= floor) && !format_sweep(&sweep).is_empty();
    // Informational: wall time per unit of α relative to α = 1.
    let t1 = sweep.points[0].seconds.max(1e-9);
    let scaling: Vec<String> = sweep
        .points
        .iter()
        .map(|p| {
            format!(
                "α={} {:.4} ({:.1}s, x{:.2})",
                p.alpha,
                p.mean,
                p.seconds,
                p.seconds / t1
            )
        })
        .collect();
    outcome(
        pass,
        format!("dev baseline {:.4}; {}", sweep.baseline, scaling.join(", ")),
    )
}

fn random_label(rng: &mut RandomStream, prev: Option<Label>, types: &[PhiType]) -> Label {
    let t = types[rng.index(types.len())];
    match rng.below(3) {
        0 => Label::Outside,
        1 => Label::Begin(t),
        _ => match prev {
            Some(Label::Begin(p)) | Some(Label::Inside(p)) => Label::Inside(p),
            _ => Label::Begin(t),
        },
    }
}

fn random_labels(rng: &mut RandomStream, n: usize, types: &[PhiType]) -> Vec<Label> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let l = random_label(rng, out.last().copied(), types);
        out.push(l);
    }
    out
}

/// Token-by-token recount: (tp, fp, fn, tn) plus per-category (tp, fp, support).
fn recount(gold: &[Vec<Label>], pred: &[Vec<Label>]) -> ([usize; 4], BTreeMap<Category, [usize; 3]>) {
    let mut c = [0usize; 4];
    let mut cats: BTreeMap<Category, [usize; 3]> = BTreeMap::new();
    for (gs, ps) in gold.iter().zip(pred) {
        for (g, p) in gs.iter().zip(ps) {
            let gp = *g != Label::Outside;
            let pp = *p != Label::Outside;
            let idx = match (gp, pp) {
                (true, true) => 0,
                (false, true) => 1,
                (true, false) => 2,
                (false, false) => 3,
            };
            c[idx] += 1;
            let gc = g.phi_type().map(|t| t.category());
            let pc = p.phi_type().map(|t| t.category());
            if let Some(gc) = gc {
                cats.entry(gc).or_default()[2] += 1;
                if pc == Some(gc) {
                    cats.entry(gc).or_default()[0] += 1;
                }
            }
            if let Some(pc) = pc {
                if gc != Some(pc) {
                    cats.entry(pc).or_default()[1] += 1;
                }
            }
        }
    }
    (c, cats)
}

fn criterion_5() -> Outcome {
    let mut rng = RandomStream::new(5);
    let coarse: Vec<PhiType> = CATEGORIES.iter().map(|c| c.phi_type()).collect();
    let mut failures = 0;
    for case in 0..METRIC_CASES {
        let types: &[PhiType] = if case % 2 == 0 { &FINE_TYPES } else { &coarse };
        let n_docs = 1 + rng.index(3);
        let mut docs = Vec::new();
        let mut gold_labels = Vec::new();
        let mut pred = Vec::new();
        for d in 0..n_docs {
            let mut sentences = Vec::new();
            for _ in 0..1 + rng.index(4) {
                let len = rng.index(9);
                let g = random_labels(&mut rng, len, types);
                let p = random_labels(&mut rng, len, types);
                let toks = g
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| Token::new(format!("w{i}"), l).unwrap())
                    .collect();
                sentences.push(Sentence::new(toks));
                gold_labels.push(g);
                pred.push(p);
            }
            docs.push(Document::new(format!("d{d}"), sentences));
        }
        let gold = Corpus::new(docs).unwrap();
        let report = binary_token_f1(&gold, &pred).unwrap();
        let ([tp, fp, fn_, tn], cats) = recount(&gold_labels, &pred);
        let tc = report.token_counts;
        let mut ok = (tc.tp, tc.fp, tc.fn_, tc.tn) == (tp, fp, fn_, tn);
        let expected_f1 = if tp == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        };
        ok &= (report.micro_f1 - expected_f1).abs() <= 1e-12;
        ok &= report.per_category.len() == cats.len();
        for (c, [ctp, cfp, support]) in &cats {
            let Some(s) = report.per_category.get(c) else {
                ok = false;
                continue;
            };
            let f = if *ctp == 0 {
                0.0
            } else {
                2.0 * *ctp as f64 / (2 * ctp + cfp + (support - ctp)) as f64
            };
            ok &= s.support == *support && (s.f1 - f).abs() <= 1e-12;
        }
        if !ok {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!(
            "{} of {METRIC_CASES} randomized cases match the recount",
            METRIC_CASES - failures
        ),
    )
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn criterion_6(fx: &Fixtures) -> Outcome {
    let (pa, _) = builtin_profiles();
    let sub = Harness::new(&fx.registry, &fx.provider)
        .subsample(&fx.a_train, 0.2, 1)
        .unwrap();
    let cfg = AugmentConfig {
        master_seed: 9,
        ..AugmentConfig::default()
    };
    let generate = || serialize_conll(&generate_corpus(&pa, 60, (8, 15), 7).unwrap());
    let augment = || {
        let (c, r) = augment_corpus(&fx.a_train, &fx.registry, &fx.provider, &cfg).unwrap();
        (serialize_conll(&c), phicon::augment::records_to_jsonl(&r))
    };
    let train = || tagger::train(&phicon::corpus::coarsen(&sub), 3, 4).unwrap().to_text();
    let xeval = || {
        let h = fx.harness();
        let r = h
            .cross_dataset_eval(
                &fx.a_train,
                &fx.b_dev,
                &ablation_arms(&AugmentConfig::default()),
                0.2,
                2,
            )
            .unwrap();
        to_jsonl(&[r])
    };
    let mut checks = Vec::new();
    let mut pass = true;
    macro_rules! check {
        ($name:expr, $f:expr) => {{
            let a = in_pool(4, $f);
            let b = in_pool(4, $f);
            let c = in_pool(1, $f);
            let ok = a == b && a == c;
            pass &= ok;
            checks.push(format!("{} {}", $name, if ok { "identical" } else { "DIFFERS" }));
        }};
    }
    check!("generate_corpus", generate);
    check!("augment_corpus", augment);
    check!("train", train);
    check!("xeval", xeval);
    outcome(pass, format!("{} (two runs, 4 vs 1 threads)", checks.join(", ")))
}

/// Random sentences over clinical context words (so SR and RI have targets)
/// and random PHI spans of every fine type.
fn fuzz_corpus(rng: &mut RandomStream, n_sentences: usize, provider: &SynonymProvider) -> Corpus {
    let mut vocab: Vec<String> = Vec::new();
    for line in provider.dump().lines() {
        if let Some(rest) = line.strip_prefix("syn\t") {
            let lemma = rest.split('\t').next().unwrap_or("");
            if !lemma.contains(' ') && !lemma.is_empty() {
                vocab.push(lemma.to_string());
            }
        }
    }
    vocab.extend(["the", "was", "at", "on", "Seen", "and", ".", ","].map(String::from));
    vocab.sort();
    vocab.dedup();
    let per_doc = 10;
    let mut docs = Vec::new();
    let mut made = 0;
    while made < n_sentences {
        let mut sentences = Vec::new();
        for _ in 0..per_doc.min(n_sentences - made) {
            let mut toks = Vec::new();
            let len = 1 + rng.index(14);
            while toks.len() < len {
                if rng.chance(0.25) {
                    let t = FINE_TYPES[rng.index(FINE_TYPES.len())];
                    for k in 0..1 + rng.index(3) {
                        let l = if k == 0 { Label::Begin(t) } else { Label::Inside(t) };
                        toks.push(Token::new(format!("Q{k}"), l).unwrap());
                    }
                } else {
                    toks.push(Token::new(vocab[rng.index(vocab.len())].clone(), Label::Outside).unwrap());
                }
            }
            sentences.push(Sentence::new(toks));
            made += 1;
        }
        docs.push(Document::new(format!("f{}", docs.len()), sentences));
    }
    Corpus::new(docs).unwrap()
}

fn criterion_7(fx: &Fixtures) -> Outcome {
    let mut rng = RandomStream::new(7);
    let corpus = fuzz_corpus(&mut rng, FUZZ_SENTENCES, &fx.provider);
    let cfg = AugmentConfig {
        alpha: 1,
        master_seed: 77,
        sr_rate: 0.3,
        ri_rate: 0.2,
        drop_unchanged: false,
        ..AugmentConfig::default()
    };
    let (out, records) = augment_corpus(&corpus, &fx.registry, &fx.provider, &cfg).unwrap();
    let originals: BTreeMap<&str, &Document> = corpus.documents().iter().map(|d| (d.id.as_str(), d)).collect();
    let augmented: Vec<&Sentence> = out.documents()[corpus.len()..]
        .iter()
        .flat_map(|d| &d.sentences)
        .collect();
    let (mut bio_bad, mut foreign, mut phi_touched, mut context_edits) = (0, 0, 0, 0);
    for (s, r) in augmented.iter().zip(&records) {
        if !validate_bio(s).is_empty() {
            bio_bad += 1;
            continue;
        }
        let spans = extract_entities(s).unwrap();
        for span in &spans {
            if !fx
                .registry
                .resolve(span.phi_type)
                .unwrap()
                .entries()
                .contains(&span.surface)
            {
                foreign += 1;
            }
        }
        // The PHI tokens of the final sentence must be exactly the words
        // written by the PHI step, in order: SR and RI left them alone.
        let phi_words: Vec<&str> = s.tokens.iter().filter(|t| t.label.is_phi()).map(|t| t.text()).collect();
        let written: Vec<&str> = r
            .replacements
            .iter()
            .filter(|e| e.op == AugOp::Phi)
            .flat_map(|e| e.new.split_whitespace())
            .collect();
        let orig = &originals[r.doc_id.as_str()].sentences[r.sentence_index];
        let types_before: Vec<_> = extract_entities(orig)
            .unwrap()
            .into_iter()
            .map(|e| e.phi_type)
            .collect();
        let types_after: Vec<_> = spans.iter().map(|e| e.phi_type).collect();
        if phi_words != written || types_before != types_after {
            phi_touched += 1;
        }
        context_edits += r.replacements.iter().filter(|e| e.op != AugOp::Phi).count();
    }
    let eligible = corpus.sentences().filter(|s| s.has_phi()).count();
    let pass = bio_bad == 0 && foreign == 0 && phi_touched == 0 && augmented.len() == eligible && context_edits > 0;
    outcome(
        pass,
        format!(
            "{} sentences fuzzed, {} augmented, {context_edits} context edits; BIO-invalid {bio_bad}, out-of-lexicon {foreign}, PHI spans altered by context edits {phi_touched}",
            corpus.sentence_count(),
            augmented.len()
        ),
    )
}

fn random_token_text(rng: &mut RandomStream) -> String {
    const PIECES: [&str; 12] = ["a", "Zz", "9", "-", "é", "#doc", "B-", "ü", ".", "Ω", "x_y", "O"];
    let n = 1 + rng.index(4);
    (0..n).map(|_| PIECES[rng.index(PIECES.len())]).collect()
}

fn random_corpus(rng: &mut RandomStream, types: &[PhiType]) -> Corpus {
    let n_docs = 1 + rng.index(4);
    let docs = (0..n_docs)
        .map(|d| {
            let sentences = (0..1 + rng.index(4))
                .map(|_| {
                    let len = 1 + rng.index(8);
                    let labels = random_labels(rng, len, types);
                    Sentence::new(
                        labels
                            .into_iter()
                            .map(|l| Token::new(random_token_text(rng), l).unwrap())
                            .collect(),
                    )
                })
                .collect();
            Document::new(format!("doc-{d}.{}", rng.below(1000)), sentences)
        })
        .collect();
    Corpus::new(docs).unwrap()
}

fn criterion_8() -> Outcome {
    let mut rng = RandomStream::new(8);
    let mut conll_ok = 0;
    for _ in 0..ROUND_TRIP_CASES {
        let c = random_corpus(&mut rng, &FINE_TYPES);
        let text = serialize_conll(&c);
        if let Ok(back) = parse_conll(&text) {
            if back == c && serialize_conll(&back) == text {
                conll_ok += 1;
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let coarse: Vec<PhiType> = CATEGORIES.iter().map(|c| c.phi_type()).collect();
    let mut model_ok = 0;
    for case in 0..ROUND_TRIP_CASES {
        let c = random_corpus(&mut rng, &coarse);
        let model: TaggerModel = tagger::train(&c, 1 + rng.index(2), rng.next_u64()).unwrap();
        let back = if case % 10 == 0 {
            let path = dir.path().join(format!("m{case}.model"));
            tagger::save_model(&model, &path).unwrap();
            tagger::load_model(&path).unwrap()
        } else {
            TaggerModel::from_text(&model.to_text()).unwrap()
        };
        let same_preds = c.sentences().all(|s| model.predict(s) == back.predict(s));
        if back == model && back.to_text() == model.to_text() && same_preds {
            model_ok += 1;
        }
    }
    outcome(
        conll_ok == ROUND_TRIP_CASES && model_ok == ROUND_TRIP_CASES,
        format!("CoNLL {conll_ok}/{ROUND_TRIP_CASES} exact, model {model_ok}/{ROUND_TRIP_CASES} exact"),
    )
}

fn criterion_9(fx: &Fixtures) -> Outcome {
    let h = fx.harness();
    let arms = [Arm::baseline()];
    let in_domain = h
        .cross_dataset_eval(&fx.a_train, &fx.a_test, &arms, 1.0, N_SEEDS)
        .unwrap()
        .arms[0]
        .mean;
    let cross = h
        .cross_dataset_eval(&fx.a_train, &fx.site_b, &arms, 1.0, N_SEEDS)
        .unwrap()
        .arms[0]
        .mean;
    let drop = (in_domain - cross) * 100.0;
    outcome(
        in_domain >= IN_DOMAIN_TARGET - IN_DOMAIN_TOL && drop >= DROP_TARGET_POINTS - DROP_TOL_POINTS,
        format!(
            "in-domain {in_domain:.4} (target {IN_DOMAIN_TARGET} ± {IN_DOMAIN_TOL}), SiteB {cross:.4}, drop {drop:.1} points (target {DROP_TARGET_POINTS} ± {DROP_TOL_POINTS}); SiteA {} docs, SiteB {} docs",
            fx.site_a.len(),
            fx.site_b.len()
        ),
    )
}

fn main() -> ExitCode {
    let fx = Fixtures::load();
    let h = fx.harness();
    let cfg = AugmentConfig {
        alpha: ALPHA,
        ..AugmentConfig::default()
    };
    let started = Instant::now();
    let low = h.ablation_run(&fx.a_train, &fx.site_b, &cfg, 0.2, N_SEEDS).unwrap();
    let full = h.ablation_run(&fx.a_train, &fx.site_b, &cfg, 1.0, N_SEEDS).unwrap();
    let seconds = started.elapsed().as_secs_f64();

    let results: Vec<(&str, Outcome)> = vec![
        ("generalization improvement", criterion_1(&low, &full, seconds)),
        ("low-resource amplification", criterion_2(&low, &full)),
        ("ablation structure", criterion_3(&low, &full)),
        ("alpha sweep", criterion_4(&fx)),
        ("metric oracle", criterion_5()),
        ("determinism", criterion_6(&fx)),
        ("structural invariants", criterion_7(&fx)),
        ("round-trips", criterion_8()),
        ("fixture calibration", criterion_9(&fx)),
    ];
    let mut all = true;
    for (i, (name, o)) in results.iter().enumerate() {
        all &= o.pass;
        println!(
            "criterion {} {:<28} {}  {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
