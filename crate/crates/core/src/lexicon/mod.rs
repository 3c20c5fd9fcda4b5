//! Typed candidate-entity pools used for PHI replacement.
//!
//! Name-like types (organizations, hospitals, locations, patients, doctors)
//! come from curated list files; identifier-like types are generated from
//! shape patterns ([`GeneratorSpec`]). A [`LexiconRegistry`] holds at most one
//! list per fine type and resolves coarse category names to the union of
//! their members.

mod builtin;
mod pattern;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

pub use builtin::{builtin_list, BUILTIN_LIST_TYPES};
pub use pattern::Pattern;

use crate::corpus::{Category, PhiType, CATEGORIES, FINE_TYPES};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Normalize an entry: trim and collapse internal whitespace to single
/// spaces. `None` for blank input.
fn normalize_entry(raw: &str) -> Option<String> {
    let parts: Vec<&str> = raw.split_whitespace().collect();
    (!parts.is_empty()).then(|| parts.join(" "))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    phi_type: PhiType,
    entries: Vec<String>,
}

impl Lexicon {
    /// Normalizes and deduplicates `entries` (first occurrence wins).
    pub fn new<I, S>(phi_type: PhiType, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let entries: Vec<String> = entries
            .into_iter()
            .filter_map(|e| normalize_entry(e.as_ref()))
            .filter(|e| seen.insert(e.clone()))
            .collect();
        if entries.is_empty() {
            return Err(Error::EmptyLexicon(phi_type.to_string()));
        }
        Ok(Self { phi_type, entries })
    }

    pub fn phi_type(&self) -> PhiType {
        self.phi_type
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Load a one-entry-per-line list file.
pub fn load_lexicon(path: impl AsRef<Path>, phi_type: PhiType) -> Result<Lexicon> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Lexicon::new(phi_type, text.lines()).map_err(|e| match e {
        Error::EmptyLexicon(_) => Error::EmptyLexicon(format!("{phi_type} ({})", path.display())),
        other => other,
    })
}

/// Uniform draw from `lexicon`. When the draw equals `avoid` and there is an
/// alternative, one redraw is made and returned as is.
pub fn sample_entity<'a>(lexicon: &'a Lexicon, rng: &mut RandomStream, avoid: Option<&str>) -> &'a str {
    let draw = rng.choose(&lexicon.entries).expect("lexicon is never empty");
    match avoid {
        Some(a) if draw == a && lexicon.len() >= 2 => rng.choose(&lexicon.entries).unwrap(),
        _ => draw,
    }
}

pub const DEFAULT_YEARS: (i32, i32) = (1950, 2020);

/// How to generate candidate values for one identifier-like type.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    phi_type: PhiType,
    patterns: Vec<Pattern>,
    weights: Vec<f64>,
    years: (i32, i32),
}

impl GeneratorSpec {
    pub fn new(phi_type: PhiType, patterns: &[&str], weights: Option<Vec<f64>>) -> Result<Self> {
        if !phi_type.is_generator_backed() {
            return Err(Error::InvalidArgument(format!("{phi_type} is not a generated type")));
        }
        if patterns.is_empty() {
            return Err(Error::InvalidArgument(format!("no patterns for {phi_type}")));
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; patterns.len()]);
        if weights.len() != patterns.len() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "{phi_type}: need one positive weight per pattern, got {weights:?}"
            )));
        }
        Ok(Self {
            phi_type,
            patterns: patterns.iter().map(|p| Pattern::parse(p)).collect::<Result<_>>()?,
            weights,
            years: DEFAULT_YEARS,
        })
    }

    pub fn with_years(mut self, first: i32, last: i32) -> Result<Self> {
        if first > last || !(1..=9999).contains(&first) || !(1..=9999).contains(&last) {
            return Err(Error::InvalidArgument(format!("bad year range {first}..={last}")));
        }
        self.years = (first, last);
        Ok(self)
    }

    /// Default patterns for a generated type, equal weights.
    pub fn default_for(phi_type: PhiType) -> Option<Self> {
        let patterns: &[&str] = match phi_type {
            PhiType::Zip => &[r"\d{5}"],
            PhiType::Phone => &[r"(\d{3}) \d{3}-\d{4}", r"\d{3}-\d{3}-\d{4}", r"\d{3}.\d{3}.\d{4}"],
            PhiType::Date => &[
                "date:MM/DD/YYYY",
                "date:YYYY-MM-DD",
                "date:M/D/YY",
                "date:MonthName D, YYYY",
            ],
            PhiType::Id => &[r"[A-Z]{2}\d{6}", r"\d{5,8}"],
            PhiType::MedicalRecord => &[r"\d{7}", r"\d{3}-\d{2}-\d{2}"],
            PhiType::Username => &[r"[a-z]{5,8}\d{2}"],
            _ => return None,
        };
        Some(Self::new(phi_type, patterns, None).expect("built-in patterns are valid"))
    }

    /// Default list size for a generated type.
    pub fn default_count(phi_type: PhiType) -> Option<usize> {
        Some(match phi_type {
            PhiType::Id => 20_000,
            PhiType::Date => 32_900,
            PhiType::Username => 3_000,
            PhiType::Phone => 21_000,
            PhiType::Zip => 4_000,
            PhiType::MedicalRecord => 4_900,
            _ => return None,
        })
    }

    pub fn phi_type(&self) -> PhiType {
        self.phi_type
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn years(&self) -> (i32, i32) {
        self.years
    }

    pub fn sample(&self, rng: &mut RandomStream) -> String {
        let i = rng.choose_weighted(&self.weights).expect("weights validated");
        self.patterns[i].sample(rng, self.years)
    }

    pub fn matches(&self, value: &str) -> bool {
        self.patterns.iter().any(|p| p.matches(value))
    }

    /// Upper bound on the number of distinct values (sum over patterns).
    pub fn space_size(&self) -> u128 {
        self.patterns
            .iter()
            .fold(0u128, |acc, p| acc.saturating_add(p.space_size(self.years)))
    }
}

/// `count` distinct values drawn from `spec` by rejection sampling.
///
/// Gives up with [`Error::Exhausted`] when the pattern space is provably too
/// small or after `100 * count` draws.
pub fn generate_identifiers(spec: &GeneratorSpec, count: usize, seed: u64) -> Result<Lexicon> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let space = spec.space_size();
    if space < count as u128 {
        return Err(Error::Exhausted {
            phi_type: spec.phi_type.to_string(),
            requested: count,
            produced: space as usize,
        });
    }
    let mut rng = RandomStream::derive(seed, &[spec.phi_type as u64]);
    let mut seen = HashSet::with_capacity(count);
    let mut entries = Vec::with_capacity(count);
    let budget = count.saturating_mul(100);
    let mut draws = 0usize;
    while entries.len() < count {
        if draws == budget {
            return Err(Error::Exhausted {
                phi_type: spec.phi_type.to_string(),
                requested: count,
                produced: entries.len(),
            });
        }
        draws += 1;
        let v = spec.sample(&mut rng);
        if seen.insert(v.clone()) {
            entries.push(v);
        }
    }
    Lexicon::new(spec.phi_type, entries)
}

/// At most one lexicon per fine type, plus precomputed category unions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LexiconRegistry {
    by_type: BTreeMap<PhiType, Lexicon>,
    unions: BTreeMap<Category, Lexicon>,
}

impl LexiconRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register `lexicon`, replacing any previous list of the same type.
    pub fn insert(&mut self, lexicon: Lexicon) -> Result<()> {
        let t = lexicon.phi_type;
        if !t.is_fine() {
            return Err(Error::InvalidArgument(format!(
                "lexicons are registered per fine type, not `{t}`"
            )));
        }
        self.by_type.insert(t, lexicon);
        self.rebuild_union(t.category());
        Ok(())
    }

    fn rebuild_union(&mut self, c: Category) {
        let members: Vec<&Lexicon> = c.members().filter_map(|t| self.by_type.get(&t)).collect();
        let union = Lexicon::new(c.phi_type(), members.iter().flat_map(|l| l.entries.iter()));
        match union {
            Ok(u) => self.unions.insert(c, u),
            Err(_) => self.unions.remove(&c),
        };
    }

    pub fn get(&self, t: PhiType) -> Option<&Lexicon> {
        self.by_type.get(&t)
    }

    pub fn types(&self) -> impl Iterator<Item = PhiType> + '_ {
        self.by_type.keys().copied()
    }

    /// Fine name: its own list. Category name: the deduplicated union of its
    /// members' lists, in taxonomy order. `ID` is treated as the fine type.
    pub fn resolve(&self, label_type: PhiType) -> Result<&Lexicon> {
        let found = if label_type.is_fine() {
            self.by_type.get(&label_type)
        } else {
            self.unions.get(&label_type.category())
        };
        found.ok_or_else(|| Error::Unresolved(label_type.to_string()))
    }

    /// Bundled name lists plus generated identifier lists at default sizes.
    pub fn builtin(seed: u64) -> Result<Self> {
        let mut reg = Self::new();
        for t in BUILTIN_LIST_TYPES {
            reg.insert(builtin_list(t).expect("bundled list"))?;
        }
        for t in FINE_TYPES.into_iter().filter(|t| t.is_generator_backed()) {
            let spec = GeneratorSpec::default_for(t).expect("default spec");
            let count = GeneratorSpec::default_count(t).expect("default count");
            reg.insert(generate_identifiers(&spec, count, seed)?)?;
        }
        Ok(reg)
    }

    /// Category names this registry can resolve.
    pub fn resolvable_categories(&self) -> Vec<Category> {
        CATEGORIES.into_iter().filter(|c| self.unions.contains_key(c)).collect()
    }
}

pub fn registry_resolve(registry: &LexiconRegistry, label_type: PhiType) -> Result<&Lexicon> {
    registry.resolve(label_type)
}
