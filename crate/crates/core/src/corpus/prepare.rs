//! Dataset preparation: coarse mapping, rare-type filtering, note-level
//! splitting and summary statistics.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Category, Corpus, Document, Label, PhiType};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Replace every fine PHI type by its coarse category.
///
/// Labels that already carry a category-only name (`NAME`, `LOCATION`,
/// `DATE`, `CONTACT`) are rejected so a double mapping is caught early. `ID`
/// names both a fine type and its category and maps to itself.
pub fn map_to_coarse(corpus: &Corpus) -> Result<Corpus> {
    if let Some(t) = corpus
        .sentences()
        .flat_map(|s| s.tokens.iter())
        .filter_map(|t| t.label.phi_type())
        .find(|t| !t.is_fine())
    {
        return Err(Error::AlreadyCoarse(t.name().to_string()));
    }
    Ok(coarsen(corpus))
}

/// Like [`map_to_coarse`], but passes labels that are already coarse through.
pub fn coarsen(corpus: &Corpus) -> Corpus {
    corpus.map_labels(|l| match l.phi_type() {
        Some(t) => l.with_type(t.coarse()),
        None => l,
    })
}

/// Relabel as Outside every entity whose type has fewer than `threshold`
/// spans in the whole corpus.
pub fn filter_rare_types(corpus: &Corpus, threshold: usize) -> Corpus {
    let mut counts: BTreeMap<PhiType, usize> = BTreeMap::new();
    for tok in corpus.sentences().flat_map(|s| s.tokens.iter()) {
        if let Label::Begin(t) = tok.label {
            *counts.entry(t).or_default() += 1;
        }
    }
    corpus.map_labels(|l| match l.phi_type() {
        Some(t) if counts.get(&t).copied().unwrap_or(0) < threshold => Label::Outside,
        _ => l,
    })
}

/// Part sizes for `n` documents: floors of `n * ratio`, with the leftover
/// documents going to the parts with the largest fractional remainders
/// (ties resolved train, dev, test).
pub fn split_sizes(n: usize, ratios: [f64; 3]) -> Result<[usize; 3]> {
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "split ratios must be positive: {ratios:?}"
        )));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "split ratios must sum to 1, got {total}"
        )));
    }
    if n < ratios.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} documents into {} parts",
            ratios.len()
        )));
    }
    let exact: Vec<f64> = ratios.iter().map(|r| n as f64 * r).collect();
    let mut sizes = [0usize; 3];
    for (s, x) in sizes.iter_mut().zip(&exact) {
        *s = (x + 1e-9).floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    let frac = |i: usize| exact[i] - sizes[i] as f64;
    order.sort_by(|&a, &b| frac(b).partial_cmp(&frac(a)).unwrap().then(a.cmp(&b)));
    let assigned: usize = sizes.iter().sum();
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    Ok(sizes)
}

/// Shuffle documents with `seed` and cut them into train, dev and test parts.
pub fn split_corpus(corpus: &Corpus, ratios: [f64; 3], seed: u64) -> Result<(Corpus, Corpus, Corpus)> {
    let [n_train, n_dev, _] = split_sizes(corpus.len(), ratios)?;
    let mut docs: Vec<Document> = corpus.documents().to_vec();
    RandomStream::new(seed).shuffle(&mut docs);
    let test = docs.split_off(n_train + n_dev);
    let dev = docs.split_off(n_train);
    Ok((
        Corpus { documents: docs },
        Corpus { documents: dev },
        Corpus { documents: test },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub note_count: usize,
    pub avg_tokens_per_note: f64,
    pub avg_phi_per_note: f64,
    pub phi_counts: BTreeMap<Category, usize>,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let n = corpus.len();
    let mut phi_counts = BTreeMap::new();
    let mut spans = 0usize;
    for tok in corpus.sentences().flat_map(|s| s.tokens.iter()) {
        if let Label::Begin(t) = tok.label {
            *phi_counts.entry(t.category()).or_insert(0) += 1;
            spans += 1;
        }
    }
    let avg = |x: usize| if n == 0 { 0.0 } else { x as f64 / n as f64 };
    CorpusStats {
        note_count: n,
        avg_tokens_per_note: avg(corpus.token_count()),
        avg_phi_per_note: avg(spans),
        phi_counts,
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "#notes               {}", self.note_count)?;
        writeln!(f, "#avg tokens / note   {:.1}", self.avg_tokens_per_note)?;
        writeln!(f, "#avg PHI / note      {:.1}", self.avg_phi_per_note)?;
        let mut total = 0;
        for (c, n) in &self.phi_counts {
            writeln!(f, "{:<20} {}", c.name(), n)?;
            total += n;
        }
        writeln!(f, "{:<20} {}", "Total", total)
    }
}
