//! Two-column CoNLL-style corpus files.
//!
//! ```text
//! #doc id=note-17
//! She  O
//! met  O
//! Washington  B-Patient
//!
//! Seen  O
//! ...
//! ```
//!
//! One `<text>\t<label>` line per token, a blank line between sentences, and
//! a `#doc id=<id>` line opening each document. Tokens that appear before the
//! first `#doc` line belong to an implicit document with id
//! [`IMPLICIT_DOC_ID`]; when that document comes first its header is omitted
//! on output, so header-less files round-trip byte for byte.

use std::fs;
use std::path::Path;

use super::{Corpus, Document, Label, Sentence, Token};
use crate::error::{Error, Result};

pub const IMPLICIT_DOC_ID: &str = "_";

const DOC_MARKER: &str = "#doc id=";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ParseMode {
    /// Invalid BIO transitions are errors.
    #[default]
    Strict,
    /// A dangling or type-mismatched Inside label is relabeled Begin.
    Repair,
}

pub fn parse_conll(text: &str) -> Result<Corpus> {
    parse_conll_with(text, ParseMode::Strict)
}

pub fn parse_conll_with(text: &str, mode: ParseMode) -> Result<Corpus> {
    let mut docs: Vec<Document> = Vec::new();
    let mut current: Option<Document> = None;
    let mut sentence: Vec<Token> = Vec::new();

    fn flush(sentence: &mut Vec<Token>, doc: &mut Option<Document>) {
        if sentence.is_empty() {
            return;
        }
        let doc = doc.get_or_insert_with(|| Document::new(IMPLICIT_DOC_ID, Vec::new()));
        doc.sentences.push(Sentence::new(std::mem::take(sentence)));
    }

    for (idx, raw) in text.split('\n').enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            flush(&mut sentence, &mut current);
            continue;
        }
        if let Some(id) = line.strip_prefix(DOC_MARKER) {
            flush(&mut sentence, &mut current);
            if id.is_empty() {
                return Err(Error::Parse {
                    line: lineno,
                    message: "empty document id".into(),
                });
            }
            docs.extend(current.take());
            current = Some(Document::new(id, Vec::new()));
            continue;
        }
        let mut cols = line.split('\t');
        let (text, label) = match (cols.next(), cols.next(), cols.next()) {
            (Some(t), Some(l), None) => (t, l),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected 2 tab-separated columns, found {}", line.split('\t').count()),
                })
            }
        };
        let mut label: Label = label.parse().map_err(|e: Error| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let prev = sentence.last().map(|t| t.label);
        if !label.can_follow(prev) {
            match mode {
                ParseMode::Strict => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: match prev {
                            None => format!("{label} at sentence start"),
                            Some(p) => format!("{label} after {p}"),
                        },
                    })
                }
                ParseMode::Repair => {
                    if let Label::Inside(t) = label {
                        label = Label::Begin(t);
                    }
                }
            }
        }
        let token = Token::new(text, label).map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid token text {text:?}"),
        })?;
        sentence.push(token);
    }
    flush(&mut sentence, &mut current);
    docs.extend(current);
    Corpus::new(docs)
}

pub fn serialize_conll(corpus: &Corpus) -> String {
    let mut out = String::new();
    let mut first_block = true;
    for (i, doc) in corpus.documents().iter().enumerate() {
        let has_content = doc.sentences.iter().any(|s| !s.is_empty());
        let implicit = i == 0 && doc.id == IMPLICIT_DOC_ID && has_content;
        if !implicit {
            if !first_block {
                out.push('\n');
            }
            out.push_str(DOC_MARKER);
            out.push_str(&doc.id);
            out.push('\n');
            first_block = true;
        }
        for s in doc.sentences.iter().filter(|s| !s.is_empty()) {
            if !first_block {
                out.push('\n');
            }
            for t in &s.tokens {
                out.push_str(t.text());
                out.push('\t');
                out.push_str(&t.label.to_string());
                out.push('\n');
            }
            first_block = false;
        }
    }
    out
}

pub fn read_conll(path: impl AsRef<Path>, mode: ParseMode) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_conll_with(&text, mode)
}

pub fn write_conll(path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, serialize_conll(corpus)).map_err(|e| Error::io(path, e))
}
