use std::sync::OnceLock;

use phicon::augment::{augment_corpus, AugOp, AugmentConfig};
use phicon::corpus::{extract_entities, serialize_conll, validate_bio, Corpus, Document, Sentence, FINE_TYPES};
use phicon::lexicon::LexiconRegistry;
use phicon::synonyms::SynonymProvider;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

const CONTEXT: [&str; 14] = [
    "the", "patient", "was", "seen", "in", "clinic", "today", "stable", "pain", "promptly", "reported", "Mild", "at",
    "visit",
];

fn arb_sentence() -> impl Strategy<Value = Sentence> {
    let tok = prop_oneof![
        3 => prop::sample::select(CONTEXT.to_vec()).prop_map(|w| (w.to_string(), None)),
        1 => (prop::sample::select(FINE_TYPES.to_vec()), 1usize..3).prop_map(|(t, n)| ("X".repeat(n), Some(t))),
    ];
    prop::collection::vec(tok, 1..12).prop_map(|items| {
        let mut pairs = Vec::new();
        for (w, t) in items {
            match t {
                None => pairs.push((w, "O".to_string())),
                Some(t) => {
                    for k in 0..w.len() {
                        let tag = if k == 0 { "B" } else { "I" };
                        pairs.push((format!("x{k}"), format!("{tag}-{t}")));
                    }
                }
            }
        }
        Sentence::from_pairs(&pairs).unwrap()
    })
}

fn arb_corpus() -> impl Strategy<Value = Corpus> {
    prop::collection::vec(prop::collection::vec(arb_sentence(), 1..5), 1..5).prop_map(|docs| {
        Corpus::new(
            docs.into_iter()
                .enumerate()
                .map(|(i, s)| Document::new(format!("d{i}"), s))
                .collect(),
        )
        .unwrap()
    })
}

fn setup() -> &'static (LexiconRegistry, SynonymProvider) {
    static SETUP: OnceLock<(LexiconRegistry, SynonymProvider)> = OnceLock::new();
    SETUP.get_or_init(|| (LexiconRegistry::builtin(3).unwrap(), SynonymProvider::builtin()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn augmented_output_invariants(corpus in arb_corpus(), seed in any::<u64>(), alpha in 0u32..4) {
        let (reg, prov) = setup();
        let cfg = AugmentConfig { alpha, master_seed: seed, sr_rate: 0.5, ri_rate: 0.2, ..AugmentConfig::default() };
        let (out, records) = augment_corpus(&corpus, reg, prov, &cfg).unwrap();
        let n = corpus.len();
        prop_assert_eq!(&out.documents()[..n], corpus.documents());
        let aug_sentences: Vec<&Sentence> = out.documents()[n..].iter().flat_map(|d| &d.sentences).collect();
        prop_assert_eq!(out.sentence_count(), corpus.sentence_count() + aug_sentences.len());
        prop_assert_eq!(records.len(), aug_sentences.len());
        for (s, r) in aug_sentences.iter().zip(&records) {
            prop_assert!(validate_bio(s).is_empty());
            prop_assert!(r.run_index >= 1 && r.run_index <= alpha);
            let orig = &corpus.documents().iter().find(|d| d.id == r.doc_id).unwrap().sentences[r.sentence_index];
            let before: Vec<_> = extract_entities(orig).unwrap().iter().map(|e| e.phi_type).collect();
            let spans = extract_entities(s).unwrap();
            let after: Vec<_> = spans.iter().map(|e| e.phi_type).collect();
            prop_assert_eq!(before, after);
            for span in &spans {
                let lex = reg.resolve(span.phi_type).unwrap();
                prop_assert!(lex.entries().contains(&span.surface), "{} not in lexicon", span.surface);
            }
            let phi_edits: Vec<_> = r.replacements.iter().filter(|e| e.op == AugOp::Phi).map(|e| e.new.clone()).collect();
            let surfaces: Vec<_> = spans.iter().map(|e| e.surface.clone()).collect();
            prop_assert_eq!(phi_edits, surfaces);
        }
    }

    #[test]
    fn context_edits_keep_phi_tokens(corpus in arb_corpus(), seed in any::<u64>()) {
        let (reg, prov) = setup();
        let cfg = AugmentConfig { alpha: 1, master_seed: seed, sr_rate: 1.0, ri_rate: 1.0, drop_unchanged: false, ..AugmentConfig::default() }
            .with_parts(false, true);
        let (out, _) = augment_corpus(&corpus, reg, prov, &cfg).unwrap();
        let orig: Vec<&Sentence> = corpus.sentences().filter(|s| s.has_phi()).collect();
        let aug: Vec<&Sentence> = out.documents()[corpus.len()..].iter().flat_map(|d| &d.sentences).collect();
        prop_assert_eq!(orig.len(), aug.len());
        for (a, b) in orig.iter().zip(aug) {
            let ea: Vec<_> = extract_entities(a).unwrap().into_iter().map(|e| e.surface).collect();
            let eb: Vec<_> = extract_entities(b).unwrap().into_iter().map(|e| e.surface).collect();
            prop_assert_eq!(ea, eb);
        }
    }
}

#[test]
fn output_is_independent_of_thread_count() {
    let (reg, prov) = setup();
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let corpus = arb_corpus().new_tree(&mut runner).unwrap().current();
    let cfg = AugmentConfig {
        master_seed: 11,
        ..AugmentConfig::default()
    };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| augment_corpus(&corpus, reg, prov, &cfg).unwrap())
    };
    let (a, ra) = run(1);
    let (b, rb) = run(4);
    assert_eq!(serialize_conll(&a), serialize_conll(&b));
    assert_eq!(ra, rb);
}
