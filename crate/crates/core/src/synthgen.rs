//! Synthetic two-site clinical-note corpora with a controlled domain shift.
//!
//! A profile directory holds:
//!
//! * `templates.txt`: one sentence template per line, tokens separated by
//!   spaces, slots written `<Type>` with a fine PHI type name;
//! * `<type>.txt` pools (`patient.txt`, `hospital.txt`, ...) for list-backed
//!   slot types, one entity per line;
//! * `profile.tsv`: tab-separated settings
//!   ```text
//!   name  SiteA
//!   phi_density  0.9
//!   format  Date  0.7  date:MM/DD/YYYY
//!   ```
//!   with one `format` line per generator pattern (type, weight, pattern).
//!
//! Slots of generated types without `format` lines use the default patterns.
//! A sentence uses a PHI template with probability `phi_density / mean slots
//! per PHI template` (capped at 1), otherwise a PHI-free template.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Corpus, Document, Label, PhiType, Sentence, Token, CATEGORIES, FINE_TYPES};
use crate::error::{Error, Result};
use crate::lexicon::{sample_entity, GeneratorSpec, Lexicon};
use crate::rng::RandomStream;

pub const DEFAULT_DOCUMENTS: usize = 200;
pub const DEFAULT_SENTENCES: (usize, usize) = (8, 15);

#[derive(Debug, Clone, PartialEq, Eq)]
enum Part {
    Word(String),
    Slot(PhiType),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    source: String,
    parts: Vec<Part>,
}

impl Template {
    pub fn parse(line: &str) -> Result<Self> {
        let source = line.split_whitespace().collect::<Vec<_>>().join(" ");
        if source.is_empty() {
            return Err(Error::Synth("empty template".into()));
        }
        let parts = source
            .split(' ')
            .map(|w| match w.strip_prefix('<').and_then(|r| r.strip_suffix('>')) {
                Some(t) => {
                    let t: PhiType = t
                        .parse()
                        .map_err(|_| Error::Synth(format!("unknown slot `{w}` in `{source}`")))?;
                    if !t.is_fine() {
                        return Err(Error::Synth(format!("slot `{w}` in `{source}` is not a fine type")));
                    }
                    Ok(Part::Slot(t))
                }
                None => Ok(Part::Word(w.to_string())),
            })
            .collect::<Result<_>>()?;
        Ok(Self { source, parts })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn slots(&self) -> impl Iterator<Item = PhiType> + '_ {
        self.parts.iter().filter_map(|p| match p {
            Part::Slot(t) => Some(*t),
            Part::Word(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteProfile {
    pub name: String,
    pub templates: Vec<Template>,
    pub entity_pools: BTreeMap<PhiType, Lexicon>,
    pub phi_density: f64,
    pub format_preferences: BTreeMap<PhiType, GeneratorSpec>,
}

fn pool_file(t: PhiType) -> String {
    format!("{}.txt", t.name().to_lowercase())
}

struct ProfileFiles<'a> {
    templates: &'a str,
    profile: &'a str,
    pools: Vec<(PhiType, String)>,
}

impl SiteProfile {
    fn from_files(files: ProfileFiles<'_>) -> Result<Self> {
        let mut name = None;
        let mut density = None;
        let mut formats: BTreeMap<PhiType, (Vec<String>, Vec<f64>)> = BTreeMap::new();
        for (i, line) in files.profile.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: &str| Error::Synth(format!("profile.tsv line {}: {m}", i + 1));
            let f: Vec<&str> = line.split('\t').collect();
            match f.as_slice() {
                ["name", n] => name = Some(n.trim().to_string()),
                ["phi_density", d] => density = Some(d.trim().parse::<f64>().map_err(|_| bad("bad density"))?),
                ["format", t, w, p] => {
                    let t: PhiType = t.parse().map_err(|_| bad("unknown type"))?;
                    let w: f64 = w.parse().map_err(|_| bad("bad weight"))?;
                    let e = formats.entry(t).or_default();
                    e.0.push(p.to_string());
                    e.1.push(w);
                }
                _ => return Err(bad("unrecognized line")),
            }
        }
        let format_preferences = formats
            .into_iter()
            .map(|(t, (ps, ws))| {
                let ps: Vec<&str> = ps.iter().map(String::as_str).collect();
                Ok((t, GeneratorSpec::new(t, &ps, Some(ws))?))
            })
            .collect::<Result<_>>()?;
        let templates = files
            .templates
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(Template::parse)
            .collect::<Result<Vec<_>>>()?;
        let entity_pools = files
            .pools
            .into_iter()
            .map(|(t, text)| Ok((t, Lexicon::new(t, text.lines())?)))
            .collect::<Result<_>>()?;
        let p = Self {
            name: name.ok_or_else(|| Error::Synth("profile.tsv lacks a name".into()))?,
            templates,
            entity_pools,
            phi_density: density.ok_or_else(|| Error::Synth("profile.tsv lacks phi_density".into()))?,
            format_preferences,
        };
        p.validate()?;
        Ok(p)
    }

    /// Load a profile directory (see the module docs for its layout).
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
        };
        let templates = read("templates.txt")?;
        let profile = read("profile.tsv")?;
        let mut pools = Vec::new();
        for t in FINE_TYPES {
            let path = dir.join(pool_file(t));
            if path.exists() {
                pools.push((t, fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?));
            }
        }
        Self::from_files(ProfileFiles {
            templates: &templates,
            profile: &profile,
            pools,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi_density.is_finite() && self.phi_density > 0.0) {
            return Err(Error::Synth(format!("{}: phi_density must be positive", self.name)));
        }
        if !self.templates.iter().any(|t| t.slots().next().is_some()) {
            return Err(Error::Synth(format!("{}: no template has a PHI slot", self.name)));
        }
        Ok(())
    }

    fn fill(&self, t: PhiType, rng: &mut RandomStream) -> Option<String> {
        if let Some(pool) = self.entity_pools.get(&t) {
            return Some(sample_entity(pool, rng, None).to_string());
        }
        if let Some(spec) = self.format_preferences.get(&t) {
            return Some(spec.sample(rng));
        }
        GeneratorSpec::default_for(t).map(|s| s.sample(rng))
    }

    fn can_fill(&self, t: PhiType) -> bool {
        self.entity_pools.contains_key(&t) || self.format_preferences.contains_key(&t) || t.is_generator_backed()
    }

    /// Coarse categories that some template can produce.
    pub fn categories(&self) -> BTreeSet<crate::corpus::Category> {
        self.templates
            .iter()
            .flat_map(|t| t.slots())
            .map(|t| t.category())
            .collect()
    }
}

/// The two bundled sites.
pub fn builtin_profiles() -> (SiteProfile, SiteProfile) {
    macro_rules! site {
        ($dir:literal) => {
            SiteProfile::from_files(ProfileFiles {
                templates: include_str!(concat!("../data/sites/", $dir, "/templates.txt")),
                profile: include_str!(concat!("../data/sites/", $dir, "/profile.tsv")),
                pools: vec![
                    (
                        PhiType::Patient,
                        include_str!(concat!("../data/sites/", $dir, "/patient.txt")).to_string(),
                    ),
                    (
                        PhiType::Doctor,
                        include_str!(concat!("../data/sites/", $dir, "/doctor.txt")).to_string(),
                    ),
                    (
                        PhiType::Hospital,
                        include_str!(concat!("../data/sites/", $dir, "/hospital.txt")).to_string(),
                    ),
                    (
                        PhiType::Location,
                        include_str!(concat!("../data/sites/", $dir, "/location.txt")).to_string(),
                    ),
                    (
                        PhiType::Organization,
                        include_str!(concat!("../data/sites/", $dir, "/organization.txt")).to_string(),
                    ),
                ],
            })
            .expect("bundled site profile is valid")
        };
    }
    (site!("site_a"), site!("site_b"))
}

/// Shared templates divided by the size of the smaller template pool.
pub fn template_overlap(a: &SiteProfile, b: &SiteProfile) -> f64 {
    let sa: BTreeSet<&str> = a.templates.iter().map(Template::source).collect();
    let sb: BTreeSet<&str> = b.templates.iter().map(Template::source).collect();
    let smaller = sa.len().min(sb.len());
    if smaller == 0 {
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / smaller as f64
}

fn instantiate(profile: &SiteProfile, template: &Template, rng: &mut RandomStream) -> Sentence {
    let mut tokens = Vec::new();
    for part in &template.parts {
        match part {
            Part::Word(w) => tokens.push(Token::new_unchecked(w.clone(), Label::Outside)),
            Part::Slot(t) => {
                let value = profile.fill(*t, rng).expect("slot types checked before generation");
                for (k, w) in value.split_whitespace().enumerate() {
                    let label = if k == 0 { Label::Begin(*t) } else { Label::Inside(*t) };
                    tokens.push(Token::new_unchecked(w.to_string(), label));
                }
            }
        }
    }
    Sentence::new(tokens)
}

/// `n_documents` notes; document `d` is drawn from
/// `RandomStream::derive(seed, &[d])`.
pub fn generate_corpus(
    profile: &SiteProfile,
    n_documents: usize,
    sentences_per_doc: (usize, usize),
    seed: u64,
) -> Result<Corpus> {
    profile.validate()?;
    let (lo, hi) = sentences_per_doc;
    if n_documents == 0 || lo == 0 || lo > hi {
        return Err(Error::InvalidArgument(format!(
            "need n_documents >= 1 and 1 <= min <= max sentences, got {n_documents} and ({lo}, {hi})"
        )));
    }
    for t in &profile.templates {
        if let Some(s) = t.slots().find(|s| !profile.can_fill(*s)) {
            return Err(Error::Synth(format!("no pool for {s} used by template `{}`", t.source)));
        }
    }
    let (with_phi, without): (Vec<&Template>, Vec<&Template>) =
        profile.templates.iter().partition(|t| t.slots().next().is_some());
    let mean_slots = with_phi.iter().map(|t| t.slots().count()).sum::<usize>() as f64 / with_phi.len() as f64;
    let p_phi = if without.is_empty() {
        1.0
    } else {
        (profile.phi_density / mean_slots).min(1.0)
    };
    let documents = (0..n_documents)
        .into_par_iter()
        .map(|d| {
            let mut rng = RandomStream::derive(seed, &[d as u64]);
            let n = rng.range_inclusive(lo as u64, hi as u64) as usize;
            let sentences = (0..n)
                .map(|_| {
                    let pool = if rng.chance(p_phi) { &with_phi } else { &without };
                    let t = *rng.choose(pool).expect("non-empty template pool");
                    instantiate(profile, t, &mut rng)
                })
                .collect();
            Document::new(format!("{}-{:04}", profile.name, d + 1), sentences)
        })
        .collect();
    Corpus::new(documents)
}

/// Whether `profile` yields every coarse category.
pub fn covers_all_categories(profile: &SiteProfile) -> bool {
    profile.categories().len() == CATEGORIES.len()
}
