//! BIO-labeled corpora: data model, CoNLL-style I/O, and dataset preparation.
//!
//! A [`Corpus`] is an ordered list of [`Document`]s, each an ordered list of
//! [`Sentence`]s of labeled [`Token`]s. Labels follow the BIO scheme over the
//! PHI types of [`PhiTaxonomy`].

mod conll;
mod prepare;
mod taxonomy;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use conll::{parse_conll, parse_conll_with, read_conll, serialize_conll, write_conll, ParseMode, IMPLICIT_DOC_ID};
pub use prepare::{coarsen, corpus_stats, filter_rare_types, map_to_coarse, split_corpus, split_sizes, CorpusStats};
pub use taxonomy::{Category, PhiTaxonomy, PhiType, CATEGORIES, FINE_TYPES, GENERATOR_BACKED};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Outside,
    Begin(PhiType),
    Inside(PhiType),
}

impl Label {
    pub fn phi_type(self) -> Option<PhiType> {
        match self {
            Label::Outside => None,
            Label::Begin(t) | Label::Inside(t) => Some(t),
        }
    }

    pub fn is_phi(self) -> bool {
        self != Label::Outside
    }

    /// Same kind with the type replaced.
    pub fn with_type(self, t: PhiType) -> Label {
        match self {
            Label::Outside => Label::Outside,
            Label::Begin(_) => Label::Begin(t),
            Label::Inside(_) => Label::Inside(t),
        }
    }

    /// Whether `self` may follow `prev` (`None` = sentence start).
    pub fn can_follow(self, prev: Option<Label>) -> bool {
        match self {
            Label::Inside(t) => matches!(prev, Some(Label::Begin(p)) | Some(Label::Inside(p)) if p == t),
            _ => true,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Outside => f.write_str("O"),
            Label::Begin(t) => write!(f, "B-{t}"),
            Label::Inside(t) => write!(f, "I-{t}"),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(Label::Outside);
        }
        if let Some(t) = s.strip_prefix("B-") {
            return Ok(Label::Begin(t.parse()?));
        }
        if let Some(t) = s.strip_prefix("I-") {
            return Ok(Label::Inside(t.parse()?));
        }
        Err(Error::InvalidArgument(format!("malformed label `{s}`")))
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// True if `text` can be a token: non-empty, no space, tab, CR or LF.
pub fn is_valid_token_text(text: &str) -> bool {
    !text.is_empty() && !text.contains([' ', '\t', '\n', '\r'])
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    text: String,
    pub label: Label,
}

impl Token {
    pub fn new(text: impl Into<String>, label: Label) -> Result<Self> {
        let text = text.into();
        if !is_valid_token_text(&text) {
            return Err(Error::InvalidToken(text));
        }
        Ok(Self { text, label })
    }

    pub(crate) fn new_unchecked(text: String, label: Label) -> Self {
        debug_assert!(is_valid_token_text(&text), "{text:?}");
        Self { text, label }
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Self { tokens }
    }

    /// Build from `(text, label)` pairs, e.g. `[("She", "O"), ("Ann", "B-Patient")]`.
    pub fn from_pairs<S: AsRef<str>, L: AsRef<str>>(pairs: &[(S, L)]) -> Result<Self> {
        pairs
            .iter()
            .map(|(t, l)| Token::new(t.as_ref(), l.as_ref().parse()?))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.tokens.iter().map(|t| t.label).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(Token::text).collect()
    }

    pub fn text(&self) -> String {
        self.texts().join(" ")
    }

    pub fn has_phi(&self) -> bool {
        self.tokens.iter().any(|t| t.label.is_phi())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn new(id: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        Self {
            id: id.into(),
            sentences,
        }
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }
}

/// An ordered collection of documents with unique, non-empty ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        for d in &documents {
            if d.id.is_empty() || d.id.contains(['\n', '\r']) {
                return Err(Error::InvalidArgument(format!("invalid document id {:?}", d.id)));
            }
            if !seen.insert(d.id.as_str()) {
                return Err(Error::DuplicateDocument(d.id.clone()));
            }
        }
        Ok(Self { documents })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.documents.iter().flat_map(|d| d.sentences.iter())
    }

    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(Document::token_count).sum()
    }

    /// Apply `f` to every label, keeping texts and structure.
    pub fn map_labels(&self, mut f: impl FnMut(Label) -> Label) -> Corpus {
        let documents = self
            .documents
            .iter()
            .map(|d| Document {
                id: d.id.clone(),
                sentences: d
                    .sentences
                    .iter()
                    .map(|s| Sentence {
                        tokens: s
                            .tokens
                            .iter()
                            .map(|t| Token {
                                text: t.text.clone(),
                                label: f(t.label),
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect();
        Corpus { documents }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub position: usize,
    pub description: String,
}

/// Positions where an Inside label does not continue a span of its own type.
pub fn validate_bio(sentence: &Sentence) -> Vec<Violation> {
    let mut prev = None;
    let mut out = Vec::new();
    for (i, tok) in sentence.tokens.iter().enumerate() {
        if !tok.label.can_follow(prev) {
            let description = match prev {
                None => format!("{} at sentence start", tok.label),
                Some(p) => format!("{} after {}", tok.label, p),
            };
            out.push(Violation {
                position: i,
                description,
            });
        }
        prev = Some(tok.label);
    }
    out
}

/// A labeled entity: tokens `start..end` of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub sentence_index: usize,
    pub start: usize,
    pub end: usize,
    pub phi_type: PhiType,
    pub surface: String,
}

impl EntitySpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Entity spans of a BIO-valid sentence, sorted by start.
pub fn extract_entities(sentence: &Sentence) -> Result<Vec<EntitySpan>> {
    extract_entities_at(sentence, 0)
}

pub(crate) fn extract_entities_at(sentence: &Sentence, sentence_index: usize) -> Result<Vec<EntitySpan>> {
    if let Some(v) = validate_bio(sentence).into_iter().next() {
        return Err(Error::InvalidBio {
            position: v.position,
            description: v.description,
        });
    }
    let mut spans: Vec<EntitySpan> = Vec::new();
    let mut open: Option<(usize, PhiType)> = None;
    let close = |spans: &mut Vec<EntitySpan>, start: usize, end: usize, t: PhiType| {
        spans.push(EntitySpan {
            sentence_index,
            start,
            end,
            phi_type: t,
            surface: sentence.texts()[start..end].join(" "),
        });
    };
    for (i, tok) in sentence.tokens.iter().enumerate() {
        match tok.label {
            Label::Inside(_) => {}
            Label::Begin(t) => {
                if let Some((s, ot)) = open.take() {
                    close(&mut spans, s, i, ot);
                }
                open = Some((i, t));
            }
            Label::Outside => {
                if let Some((s, ot)) = open.take() {
                    close(&mut spans, s, i, ot);
                }
            }
        }
    }
    if let Some((s, t)) = open {
        close(&mut spans, s, sentence.len(), t);
    }
    Ok(spans)
}

/// Labels of a sentence of length `len` determined entirely by `spans`.
pub fn labels_from_spans(len: usize, spans: &[EntitySpan]) -> Vec<Label> {
    let mut labels = vec![Label::Outside; len];
    for s in spans {
        labels[s.start] = Label::Begin(s.phi_type);
        for l in &mut labels[s.start + 1..s.end] {
            *l = Label::Inside(s.phi_type);
        }
    }
    labels
}
