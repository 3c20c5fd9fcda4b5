//! Synonym and part-of-speech lookup for context augmentation.
//!
//! A [`SynonymProvider`] is loaded either from a WordNet database directory
//! ([`load_wndb`]) or from a flat tab-separated file ([`load_tsv`]):
//!
//! ```text
//! met  verb  encountered,saw
//! promptly  adverb
//! ```
//!
//! Lemmas are stored lowercase with multiword lemmas joined by single spaces.
//! Words in the stopword list are never reported as having a part of speech.

mod wndb;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use wndb::load_wndb;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PosTag {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

pub const POS_TAGS: [PosTag; 4] = [PosTag::Noun, PosTag::Verb, PosTag::Adjective, PosTag::Adverb];

impl PosTag {
    pub fn name(self) -> &'static str {
        match self {
            PosTag::Noun => "noun",
            PosTag::Verb => "verb",
            PosTag::Adjective => "adj",
            PosTag::Adverb => "adv",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "n" | "noun" => PosTag::Noun,
            "v" | "verb" => PosTag::Verb,
            "a" | "s" | "adj" | "adjective" => PosTag::Adjective,
            "r" | "adv" | "adverb" => PosTag::Adverb,
            _ => return Err(format!("unknown part of speech `{s}`")),
        })
    }
}

static BUILTIN_STOPWORDS: &str = include_str!("../../data/stopwords.txt");
static BUILTIN_SYNONYMS: &str = include_str!("../../data/synonyms.tsv");

pub fn builtin_stopwords() -> BTreeSet<String> {
    BUILTIN_STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect()
}

fn normalize_lemma(s: &str) -> String {
    s.split(|c: char| c.is_whitespace() || c == '_')
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynonymProvider {
    index: BTreeMap<(String, PosTag), BTreeSet<String>>,
    pos_index: BTreeMap<String, BTreeSet<PosTag>>,
    stopwords: BTreeSet<String>,
    pools: BTreeMap<PosTag, Vec<String>>,
}

impl Default for SynonymProvider {
    fn default() -> Self {
        Self::from_parts(BTreeMap::new(), BTreeMap::new())
    }
}

impl SynonymProvider {
    /// Build from raw tables; lemmas are normalized and self-synonyms dropped.
    pub(crate) fn from_parts(
        index: BTreeMap<(String, PosTag), BTreeSet<String>>,
        pos_index: BTreeMap<String, BTreeSet<PosTag>>,
    ) -> Self {
        let index = index
            .into_iter()
            .map(|((lemma, pos), syns)| {
                let lemma = normalize_lemma(&lemma);
                let syns = syns
                    .iter()
                    .map(|s| normalize_lemma(s))
                    .filter(|s| !s.is_empty() && *s != lemma)
                    .collect();
                ((lemma, pos), syns)
            })
            .collect();
        let pos_index = pos_index
            .into_iter()
            .map(|(lemma, tags)| (normalize_lemma(&lemma), tags))
            .collect();
        let mut p = Self {
            index,
            pos_index,
            stopwords: builtin_stopwords(),
            pools: BTreeMap::new(),
        };
        p.rebuild_pools();
        p
    }

    fn rebuild_pools(&mut self) {
        let mut pools: BTreeMap<PosTag, Vec<String>> = BTreeMap::new();
        for (lemma, tags) in &self.pos_index {
            if self.stopwords.contains(lemma) {
                continue;
            }
            for t in tags {
                pools.entry(*t).or_default().push(lemma.clone());
            }
        }
        self.pools = pools;
    }

    /// The provider bundled with the crate (clinical-register vocabulary).
    pub fn builtin() -> Self {
        parse_tsv(BUILTIN_SYNONYMS, "<builtin synonyms>").expect("bundled synonym table parses")
    }

    pub fn with_stopwords<I, S>(mut self, stopwords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stopwords = stopwords
            .into_iter()
            .map(|s| s.as_ref().trim().to_lowercase())
            .collect();
        self.rebuild_pools();
        self
    }

    /// Replace the stopword list with the words of a one-per-line file.
    pub fn with_stopword_file(self, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let words: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        Ok(self.with_stopwords(words))
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(&word.to_lowercase())
    }

    /// Synonyms of `word` as `pos`, lowercase, lexicographic, never `word`.
    pub fn lookup_synonyms(&self, word: &str, pos: PosTag) -> Vec<String> {
        let key = (normalize_lemma(word), pos);
        self.index
            .get(&key)
            .map(|s| s.iter().filter(|x| **x != key.0).cloned().collect())
            .unwrap_or_default()
    }

    /// Parts of speech recorded for `word`; empty for stopwords.
    pub fn lookup_pos(&self, word: &str) -> BTreeSet<PosTag> {
        let w = normalize_lemma(word);
        if self.stopwords.contains(&w) {
            return BTreeSet::new();
        }
        self.pos_index.get(&w).cloned().unwrap_or_default()
    }

    /// The single part of speech of `word`, if it has exactly one.
    pub fn unambiguous_pos(&self, word: &str) -> Option<PosTag> {
        let tags = self.lookup_pos(word);
        match (tags.len(), tags.first()) {
            (1, Some(t)) => Some(*t),
            _ => None,
        }
    }

    /// All non-stopword lemmas recorded with `pos`, sorted.
    pub fn pool(&self, pos: PosTag) -> &[String] {
        self.pools.get(&pos).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn entry_count(&self) -> usize {
        self.index.len()
    }

    /// Stable text dump of both tables, one record per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for ((lemma, pos), syns) in &self.index {
            let syns: Vec<&str> = syns.iter().map(String::as_str).collect();
            out.push_str(&format!("syn\t{lemma}\t{pos}\t{}\n", syns.join(",")));
        }
        for (lemma, tags) in &self.pos_index {
            let tags: Vec<&str> = tags.iter().map(|t| t.name()).collect();
            out.push_str(&format!("pos\t{lemma}\t{}\n", tags.join(",")));
        }
        out
    }
}

pub fn lookup_synonyms(provider: &SynonymProvider, word: &str, pos: PosTag) -> Vec<String> {
    provider.lookup_synonyms(word, pos)
}

pub fn lookup_pos(provider: &SynonymProvider, word: &str) -> BTreeSet<PosTag> {
    provider.lookup_pos(word)
}

pub fn is_stopword(provider: &SynonymProvider, word: &str) -> bool {
    provider.is_stopword(word)
}

/// Parse the tab-separated synonym format. `source` names the input in errors.
pub fn parse_tsv(text: &str, source: &str) -> Result<SynonymProvider> {
    let mut index: BTreeMap<(String, PosTag), BTreeSet<String>> = BTreeMap::new();
    let mut pos_index: BTreeMap<String, BTreeSet<PosTag>> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::SynonymParse {
            file: source.to_string(),
            line: i + 1,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&cols.len()) {
            return Err(err(format!(
                "expected 2 or 3 tab-separated columns, found {}",
                cols.len()
            )));
        }
        let lemma = normalize_lemma(cols[0]);
        if lemma.is_empty() {
            return Err(err("empty lemma".into()));
        }
        let pos: PosTag = cols[1].trim().parse().map_err(err)?;
        let syns = index.entry((lemma.clone(), pos)).or_default();
        if let Some(list) = cols.get(2) {
            syns.extend(list.split(',').map(normalize_lemma).filter(|s| !s.is_empty()));
        }
        pos_index.entry(lemma).or_default().insert(pos);
    }
    Ok(SynonymProvider::from_parts(index, pos_index))
}

pub fn load_tsv(path: impl AsRef<Path>) -> Result<SynonymProvider> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tsv(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> SynonymProvider {
        parse_tsv(
            "met\tverb\tencountered,saw\n\
             quick\tadj\tspeedy,fast\n\
             run\tnoun\tsprint\n\
             run\tverb\tjog\n\
             the\tadj\tsome\n\
             health center\tnoun\tclinic\n\
             promptly\tadverb\n",
            "fixture",
        )
        .unwrap()
    }

    #[test]
    fn tsv_readback() {
        let p = fixture();
        assert_eq!(p.lookup_synonyms("met", PosTag::Verb), ["encountered", "saw"]);
        assert_eq!(p.lookup_synonyms("quick", PosTag::Adjective), ["fast", "speedy"]);
        assert_eq!(p.lookup_synonyms("Quick", PosTag::Adjective), ["fast", "speedy"]);
        assert!(p.lookup_synonyms("unknown", PosTag::Noun).is_empty());
        assert!(p.lookup_synonyms("met", PosTag::Noun).is_empty());
    }

    #[test]
    fn pos_lookup_and_stopword_masking() {
        let p = fixture();
        assert_eq!(p.lookup_pos("run"), BTreeSet::from([PosTag::Noun, PosTag::Verb]));
        assert_eq!(p.unambiguous_pos("run"), None);
        assert_eq!(p.unambiguous_pos("met"), Some(PosTag::Verb));
        assert!(p.lookup_pos("unknown").is_empty());
        assert!(p.lookup_pos("the").is_empty());
        assert!(p.lookup_pos("The").is_empty());
        assert_eq!(p.pool(PosTag::Adverb), ["promptly"]);
        assert!(!p.pool(PosTag::Adjective).contains(&"the".to_string()));
    }

    #[test]
    fn stopwords() {
        let p = SynonymProvider::default();
        assert!(p.is_stopword("the"));
        assert!(p.is_stopword("The"));
        assert!(!p.is_stopword("hospital"));
        assert_eq!(builtin_stopwords().len(), 179);
        let custom = p.with_stopwords(["hospital"]);
        assert!(custom.is_stopword("Hospital"));
        assert!(!custom.is_stopword("the"));
    }

    #[test]
    fn duplicate_lines_merge_and_empty_file() {
        let p = parse_tsv("a\tnoun\tb\na\tnoun\tc\n", "t").unwrap();
        assert_eq!(p.lookup_synonyms("a", PosTag::Noun), ["b", "c"]);
        let e = parse_tsv("", "t").unwrap();
        assert_eq!(e.entry_count(), 0);
    }

    #[test]
    fn tsv_errors() {
        assert!(matches!(
            parse_tsv("a\tnoun\tb\nc\tprep\td\n", "t"),
            Err(Error::SynonymParse { line: 2, .. })
        ));
        assert!(parse_tsv("a\n", "t").is_err());
    }

    #[test]
    fn self_is_never_a_synonym() {
        let p = parse_tsv("quick\tadj\tQuick,fast\n", "t").unwrap();
        assert_eq!(p.lookup_synonyms("quick", PosTag::Adjective), ["fast"]);
    }

    #[test]
    fn multiword_lemmas() {
        let p = fixture();
        assert_eq!(p.lookup_synonyms("Health_Center", PosTag::Noun), ["clinic"]);
    }

    #[test]
    fn builtin_parses_and_dump_is_stable() {
        let a = SynonymProvider::builtin();
        assert!(a.entry_count() > 50);
        assert_eq!(a.dump(), SynonymProvider::builtin().dump());
        assert!(!a.pool(PosTag::Adverb).is_empty());
        assert!(!a.pool(PosTag::Adjective).is_empty());
    }
}
