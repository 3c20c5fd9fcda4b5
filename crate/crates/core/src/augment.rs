//! PHI augmentation, context augmentation (synonym replacement and random
//! insertion), and the corpus merge `D_new = D ∪ α·D_aug`.
//!
//! Every PHI-bearing sentence of copy `run` of document `doc` is transformed
//! with its own stream `RandomStream::derive(master_seed, &[run, doc,
//! sentence])`, so results do not depend on traversal order or thread count.
//! Within a sentence the steps run in the order PHI, SR, RI.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{extract_entities, Corpus, Document, Label, Sentence, Token};
use crate::error::{Error, Result};
use crate::lexicon::{sample_entity, LexiconRegistry};
use crate::rng::RandomStream;
use crate::synonyms::{PosTag, SynonymProvider};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub alpha: u32,
    pub sr_rate: f64,
    pub ri_rate: f64,
    pub enable_phi: bool,
    pub enable_sr: bool,
    pub enable_ri: bool,
    pub master_seed: u64,
    pub drop_unchanged: bool,
    /// Copy PHI-free sentences into augmented documents unchanged.
    pub keep_context_sentences: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            alpha: 2,
            sr_rate: 0.1,
            ri_rate: 0.05,
            enable_phi: true,
            enable_sr: true,
            enable_ri: true,
            master_seed: 0,
            drop_unchanged: true,
            keep_context_sentences: false,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("sr_rate", self.sr_rate), ("ri_rate", self.ri_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidArgument(format!("{name} must be in [0, 1], got {r}")));
            }
        }
        Ok(())
    }

    /// Configuration for one arm of the ablation: PHI and/or context edits.
    pub fn with_parts(mut self, phi: bool, context: bool) -> Self {
        self.enable_phi = phi;
        self.enable_sr = context;
        self.enable_ri = context;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AugOp {
    #[serde(rename = "PHI")]
    Phi,
    #[serde(rename = "SR")]
    Sr,
    #[serde(rename = "RI")]
    Ri,
}

impl fmt::Display for AugOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AugOp::Phi => "PHI",
            AugOp::Sr => "SR",
            AugOp::Ri => "RI",
        })
    }
}

/// One edit. `start..end` are token positions in the sentence right after
/// the step that made the edit; insertions have an empty `old`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub op: AugOp,
    pub start: usize,
    pub end: usize,
    pub old: String,
    pub new: String,
}

/// Audit line for one emitted augmented sentence. Serialized as one JSON
/// object per line with the fields in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentRecord {
    pub doc_id: String,
    pub sentence_index: usize,
    pub run_index: u32,
    pub applied: BTreeSet<AugOp>,
    pub replacements: Vec<Replacement>,
}

pub fn records_to_jsonl(records: &[AugmentRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

fn tok(text: &str, label: Label) -> Token {
    Token::new_unchecked(text.to_string(), label)
}

fn words(s: &str) -> impl Iterator<Item = &str> {
    s.split_whitespace()
}

/// Replace every entity span by a same-type entity drawn from `registry`.
pub fn phi_augment(
    sentence: &Sentence,
    registry: &LexiconRegistry,
    rng: &mut RandomStream,
) -> Result<(Sentence, Vec<Replacement>)> {
    let spans = extract_entities(sentence)?;
    // resolve everything before drawing so failures leave no partial output
    let lexicons = spans
        .iter()
        .map(|s| registry.resolve(s.phi_type))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(sentence.len());
    let mut edits = Vec::with_capacity(spans.len());
    let mut cursor = 0;
    for (span, lex) in spans.iter().zip(lexicons) {
        out.extend_from_slice(&sentence.tokens[cursor..span.start]);
        let new = sample_entity(lex, rng, Some(&span.surface));
        let start = out.len();
        for (k, w) in words(new).enumerate() {
            let label = if k == 0 {
                Label::Begin(span.phi_type)
            } else {
                Label::Inside(span.phi_type)
            };
            out.push(tok(w, label));
        }
        edits.push(Replacement {
            op: AugOp::Phi,
            start,
            end: out.len(),
            old: span.surface.clone(),
            new: new.to_string(),
        });
        cursor = span.end;
    }
    out.extend_from_slice(&sentence.tokens[cursor..]);
    Ok((Sentence::new(out), edits))
}

fn match_case(original: &str, replacement: &str) -> String {
    let upper = original.chars().next().is_some_and(char::is_uppercase);
    let mut chars = replacement.chars();
    match chars.next() {
        Some(c) if upper => c.to_uppercase().chain(chars).collect(),
        _ => replacement.to_string(),
    }
}

fn count_for(rate: f64, base: usize) -> usize {
    ((rate * base as f64).round() as usize).max(1)
}

pub fn synonym_replace(
    sentence: &Sentence,
    provider: &SynonymProvider,
    sr_rate: f64,
    rng: &mut RandomStream,
) -> Sentence {
    synonym_replace_traced(sentence, provider, sr_rate, rng).0
}

fn synonym_replace_traced(
    sentence: &Sentence,
    provider: &SynonymProvider,
    sr_rate: f64,
    rng: &mut RandomStream,
) -> (Sentence, Vec<Replacement>) {
    let eligible: Vec<(usize, Vec<String>)> = sentence
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.label == Label::Outside)
        .filter_map(|(i, t)| {
            let pos = provider.unambiguous_pos(t.text())?;
            let syns = provider.lookup_synonyms(t.text(), pos);
            (!syns.is_empty()).then_some((i, syns))
        })
        .collect();
    if eligible.is_empty() {
        return (sentence.clone(), Vec::new());
    }
    let n = count_for(sr_rate, eligible.len());
    let mut chosen: Vec<(usize, String)> = rng
        .sample_indices(eligible.len(), n)
        .into_iter()
        .map(|k| {
            let (i, syns) = &eligible[k];
            (*i, rng.choose(syns).expect("non-empty").clone())
        })
        .collect();
    chosen.sort_by_key(|(i, _)| *i);

    let mut out = Vec::with_capacity(sentence.len() + chosen.len());
    let mut edits = Vec::with_capacity(chosen.len());
    let mut next = chosen.iter().peekable();
    for (i, t) in sentence.tokens.iter().enumerate() {
        match next.next_if(|(j, _)| *j == i) {
            Some((_, syn)) => {
                let new = match_case(t.text(), syn);
                let start = out.len();
                out.extend(words(&new).map(|w| tok(w, Label::Outside)));
                edits.push(Replacement {
                    op: AugOp::Sr,
                    start,
                    end: out.len(),
                    old: t.text().to_string(),
                    new,
                });
            }
            None => out.push(t.clone()),
        }
    }
    (Sentence::new(out), edits)
}

pub fn random_insert(
    sentence: &Sentence,
    provider: &SynonymProvider,
    ri_rate: f64,
    rng: &mut RandomStream,
) -> Result<Sentence> {
    Ok(random_insert_traced(sentence, provider, ri_rate, rng)?.0)
}

fn random_insert_traced(
    sentence: &Sentence,
    provider: &SynonymProvider,
    ri_rate: f64,
    rng: &mut RandomStream,
) -> Result<(Sentence, Vec<Replacement>)> {
    let anchors: Vec<(usize, PosTag)> = sentence
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.label == Label::Outside)
        .filter_map(|(i, t)| match provider.unambiguous_pos(t.text())? {
            PosTag::Adverb => None,
            pos => Some((i, pos)),
        })
        .collect();
    if anchors.is_empty() {
        return Ok((sentence.clone(), Vec::new()));
    }
    let n = count_for(ri_rate, sentence.len());
    let mut chosen: Vec<(usize, String)> = Vec::with_capacity(n);
    for k in rng.sample_indices(anchors.len(), n) {
        let (i, pos) = anchors[k];
        let (pool_pos, name) = match pos {
            PosTag::Noun => (PosTag::Adjective, "adjective"),
            _ => (PosTag::Adverb, "adverb"),
        };
        let word = rng.choose(provider.pool(pool_pos)).ok_or(Error::EmptyPool(name))?;
        chosen.push((i, word.clone()));
    }
    chosen.sort_by_key(|(i, _)| *i);

    let mut out = Vec::with_capacity(sentence.len() + chosen.len());
    let mut edits = Vec::with_capacity(chosen.len());
    let mut next = chosen.iter().peekable();
    for (i, t) in sentence.tokens.iter().enumerate() {
        if let Some((_, word)) = next.next_if(|(j, _)| *j == i) {
            let start = out.len();
            out.extend(words(word).map(|w| tok(w, Label::Outside)));
            edits.push(Replacement {
                op: AugOp::Ri,
                start,
                end: out.len(),
                old: String::new(),
                new: word.clone(),
            });
        }
        out.push(t.clone());
    }
    Ok((Sentence::new(out), edits))
}

/// Output of [`augment_sentence_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub sentence: Sentence,
    pub applied: BTreeSet<AugOp>,
    pub replacements: Vec<Replacement>,
}

pub fn augment_sentence(
    sentence: &Sentence,
    registry: &LexiconRegistry,
    provider: &SynonymProvider,
    config: &AugmentConfig,
    rng: &mut RandomStream,
) -> Result<Option<Sentence>> {
    Ok(augment_sentence_traced(sentence, registry, provider, config, rng)?.map(|a| a.sentence))
}

pub fn augment_sentence_traced(
    sentence: &Sentence,
    registry: &LexiconRegistry,
    provider: &SynonymProvider,
    config: &AugmentConfig,
    rng: &mut RandomStream,
) -> Result<Option<Augmented>> {
    let mut current = sentence.clone();
    let mut applied = BTreeSet::new();
    let mut replacements = Vec::new();
    let mut record = |op, edits: Vec<Replacement>| {
        if !edits.is_empty() {
            applied.insert(op);
            replacements.extend(edits);
        }
    };
    if config.enable_phi {
        let (s, e) = phi_augment(&current, registry, rng)?;
        current = s;
        record(AugOp::Phi, e);
    }
    if config.enable_sr {
        let (s, e) = synonym_replace_traced(&current, provider, config.sr_rate, rng);
        current = s;
        record(AugOp::Sr, e);
    }
    if config.enable_ri {
        let (s, e) = random_insert_traced(&current, provider, config.ri_rate, rng)?;
        current = s;
        record(AugOp::Ri, e);
    }
    if config.drop_unchanged && current == *sentence {
        return Ok(None);
    }
    Ok(Some(Augmented {
        sentence: current,
        applied,
        replacements,
    }))
}

pub fn augmented_id(doc_id: &str, run: u32) -> String {
    format!("{doc_id}#aug{run}")
}

fn augment_document(
    doc: &Document,
    doc_index: usize,
    run: u32,
    registry: &LexiconRegistry,
    provider: &SynonymProvider,
    config: &AugmentConfig,
) -> Result<(Option<Document>, Vec<AugmentRecord>)> {
    let mut sentences = Vec::new();
    let mut records = Vec::new();
    for (si, s) in doc.sentences.iter().enumerate() {
        if !s.has_phi() {
            if config.keep_context_sentences && !s.is_empty() {
                sentences.push(s.clone());
            }
            continue;
        }
        let mut rng = RandomStream::derive(config.master_seed, &[run as u64, doc_index as u64, si as u64]);
        if let Some(a) = augment_sentence_traced(s, registry, provider, config, &mut rng)? {
            records.push(AugmentRecord {
                doc_id: doc.id.clone(),
                sentence_index: si,
                run_index: run,
                applied: a.applied,
                replacements: a.replacements,
            });
            sentences.push(a.sentence);
        }
    }
    if records.is_empty() {
        return Ok((None, records));
    }
    Ok((Some(Document::new(augmented_id(&doc.id, run), sentences)), records))
}

/// `D_new`: the original documents followed by the augmented copies, run 1
/// for every document first, then run 2, and so on. Copies with no emitted
/// sentence are left out.
pub fn augment_corpus(
    corpus: &Corpus,
    registry: &LexiconRegistry,
    provider: &SynonymProvider,
    config: &AugmentConfig,
) -> Result<(Corpus, Vec<AugmentRecord>)> {
    config.validate()?;
    let jobs: Vec<(u32, usize)> = (1..=config.alpha)
        .flat_map(|run| (0..corpus.len()).map(move |d| (run, d)))
        .collect();
    let results: Vec<(Option<Document>, Vec<AugmentRecord>)> = jobs
        .par_iter()
        .map(|&(run, d)| augment_document(&corpus.documents()[d], d, run, registry, provider, config))
        .collect::<Result<_>>()?;
    let mut documents = corpus.documents().to_vec();
    let mut records = Vec::new();
    for (doc, recs) in results {
        documents.extend(doc);
        records.extend(recs);
    }
    Ok((Corpus::new(documents)?, records))
}

/// Counts reported by a dry run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AugmentPlan {
    pub documents: usize,
    pub sentences: usize,
    pub eligible_sentences: usize,
    /// Upper bound on `|D_aug|` in sentences; `drop_unchanged` may remove some.
    pub max_augmented_sentences: usize,
}

pub fn plan(corpus: &Corpus, config: &AugmentConfig) -> AugmentPlan {
    let eligible = corpus.sentences().filter(|s| s.has_phi()).count();
    let kept = if config.keep_context_sentences {
        corpus.sentences().filter(|s| !s.has_phi() && !s.is_empty()).count()
    } else {
        0
    };
    AugmentPlan {
        documents: corpus.len(),
        sentences: corpus.sentence_count(),
        eligible_sentences: eligible,
        max_augmented_sentences: config.alpha as usize * (eligible + kept),
    }
}
