//! Binary token-level micro-F1, per-category scores, and the experiment
//! harness (cross-dataset runs, augmentation-factor sweep, ablation).
//!
//! A ratio with a zero denominator is reported as 0.
//!
//! Every experiment run is keyed by a seed index `s` in `1..=n_seeds`. For a
//! harness seed `h`, run `s` subsamples training documents with
//! `derive(h, [s, 0])`, trains the tagger with seed `derive_seed(h, [s, 1])`
//! and augments with master seed `derive_seed(h, [s, 2])`, identically for
//! every arm. Training labels are mapped to coarse categories after
//! augmentation; test labels are mapped before scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_corpus, AugmentConfig};
use crate::corpus::{coarsen, Category, Corpus, Document, Label};
use crate::error::{Error, Result};
use crate::lexicon::LexiconRegistry;
use crate::rng::RandomStream;
use crate::synonyms::SynonymProvider;
use crate::tagger::{self, TaggerModel, DEFAULT_EPOCHS};

pub const DEFAULT_SEEDS: usize = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub micro_f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub per_category: BTreeMap<Category, CategoryScore>,
    pub token_counts: TokenCounts,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn f1_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn category_of(l: Label) -> Option<Category> {
    l.phi_type().map(|t| t.category())
}

/// Score `pred` (one label sequence per sentence, in corpus order) against
/// `gold`.
pub fn binary_token_f1(gold: &Corpus, pred: &[Vec<Label>]) -> Result<EvalReport> {
    let mut counts = TokenCounts::default();
    // (tp, fp, support) per category
    let mut cats: BTreeMap<Category, (usize, usize, usize)> = BTreeMap::new();
    let mut preds = pred.iter();
    for doc in gold.documents() {
        for (si, sentence) in doc.sentences.iter().enumerate() {
            let mismatch = |message: String| Error::ShapeMismatch {
                document: doc.id.clone(),
                sentence: si,
                message,
            };
            let p = preds
                .next()
                .ok_or_else(|| mismatch("no prediction for this sentence".into()))?;
            if p.len() != sentence.len() {
                return Err(mismatch(format!(
                    "{} predicted labels for {} tokens",
                    p.len(),
                    sentence.len()
                )));
            }
            for (tok, &pl) in sentence.tokens.iter().zip(p) {
                let gl = tok.label;
                match (gl.is_phi(), pl.is_phi()) {
                    (true, true) => counts.tp += 1,
                    (false, true) => counts.fp += 1,
                    (true, false) => counts.fn_ += 1,
                    (false, false) => counts.tn += 1,
                }
                let (gc, pc) = (category_of(gl), category_of(pl));
                if let Some(g) = gc {
                    let e = cats.entry(g).or_default();
                    e.2 += 1;
                    if pc == Some(g) {
                        e.0 += 1;
                    }
                }
                if let Some(c) = pc {
                    if gc != Some(c) {
                        cats.entry(c).or_default().1 += 1;
                    }
                }
            }
        }
    }
    let extra = preds.count();
    if extra > 0 {
        return Err(Error::ShapeMismatch {
            document: gold.documents().last().map(|d| d.id.clone()).unwrap_or_default(),
            sentence: gold.documents().last().map_or(0, |d| d.sentences.len()),
            message: format!("{extra} predicted sentences beyond the end of the corpus"),
        });
    }
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    let per_category = cats
        .into_iter()
        .map(|(c, (tp, fp, support))| {
            let p = ratio(tp, tp + fp);
            let r = ratio(tp, support);
            (
                c,
                CategoryScore {
                    precision: p,
                    recall: r,
                    f1: f1_score(p, r),
                    support,
                },
            )
        })
        .collect();
    Ok(EvalReport {
        micro_f1: f1_score(precision, recall),
        precision,
        recall,
        per_category,
        token_counts: counts,
    })
}

pub fn predict_corpus(model: &TaggerModel, corpus: &Corpus) -> Vec<Vec<Label>> {
    let sentences: Vec<_> = corpus.sentences().collect();
    sentences.par_iter().map(|s| model.predict(s)).collect()
}

/// Predictions of `model` on `corpus`, scored at the coarse level.
pub fn evaluate_model(model: &TaggerModel, corpus: &Corpus) -> Result<EvalReport> {
    let gold = coarsen(corpus);
    binary_token_f1(&gold, &predict_corpus(model, &gold))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub name: String,
    /// `None` trains on the subsample as is.
    pub augment: Option<AugmentConfig>,
}

impl Arm {
    pub fn baseline() -> Self {
        Self {
            name: "baseline".into(),
            augment: None,
        }
    }

    pub fn augmented(name: &str, config: AugmentConfig) -> Self {
        Self {
            name: name.into(),
            augment: Some(config),
        }
    }
}

/// The four ablation arms derived from `base`.
pub fn ablation_arms(base: &AugmentConfig) -> Vec<Arm> {
    vec![
        Arm::baseline(),
        Arm::augmented("phi_only", base.clone().with_parts(true, false)),
        Arm::augmented("context_only", base.clone().with_parts(false, true)),
        Arm::augmented("phicon", base.clone().with_parts(true, true)),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmScores {
    pub name: String,
    pub per_seed: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub setting: String,
    pub train_fraction: f64,
    pub alpha: u32,
    pub arms: Vec<ArmScores>,
}

impl ExperimentResult {
    pub fn arm(&self, name: &str) -> Option<&ArmScores> {
        self.arms.iter().find(|a| a.name == name)
    }

    pub fn means(&self) -> BTreeMap<String, f64> {
        self.arms.iter().map(|a| (a.name.clone(), a.mean)).collect()
    }

    /// Per-seed `arm - baseline` differences.
    pub fn improvements(&self, arm: &str, baseline: &str) -> Option<Vec<f64>> {
        let (a, b) = (self.arm(arm)?, self.arm(baseline)?);
        Some(a.per_seed.iter().zip(&b.per_seed).map(|(x, y)| x - y).collect())
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Shared inputs for experiment runs.
#[derive(Debug, Clone)]
pub struct Harness<'a> {
    pub registry: &'a LexiconRegistry,
    pub provider: &'a SynonymProvider,
    pub epochs: usize,
    pub seed: u64,
    pub setting: String,
}

impl<'a> Harness<'a> {
    pub fn new(registry: &'a LexiconRegistry, provider: &'a SynonymProvider) -> Self {
        Self {
            registry,
            provider,
            epochs: DEFAULT_EPOCHS,
            seed: 0,
            setting: "train→test".into(),
        }
    }

    /// Documents kept for seed index `s` at `fraction`, in original order.
    pub fn subsample(&self, train: &Corpus, fraction: f64, s: u64) -> Result<Corpus> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction must be in (0, 1], got {fraction}"
            )));
        }
        let k = (fraction * train.len() as f64 + 1e-9).floor() as usize;
        if k == 0 {
            return Err(Error::InvalidArgument(format!(
                "fraction {fraction} of {} documents leaves nothing to train on",
                train.len()
            )));
        }
        let mut idx = RandomStream::derive(self.seed, &[s, 0]).sample_indices(train.len(), k);
        idx.sort_unstable();
        let docs: Vec<Document> = idx.into_iter().map(|i| train.documents()[i].clone()).collect();
        Corpus::new(docs)
    }

    fn run_one(&self, sub: &Corpus, arm: &Arm, test: &Corpus, s: u64) -> Result<f64> {
        let training = match &arm.augment {
            None => sub.clone(),
            Some(cfg) => {
                let cfg = AugmentConfig {
                    master_seed: RandomStream::derive_seed(self.seed, &[s, 2]),
                    ..cfg.clone()
                };
                augment_corpus(sub, self.registry, self.provider, &cfg)?.0
            }
        };
        let model = tagger::train(
            &coarsen(&training),
            self.epochs,
            RandomStream::derive_seed(self.seed, &[s, 1]),
        )?;
        let report = binary_token_f1(test, &predict_corpus(&model, test))?;
        log::debug!("{} seed {s} arm {}: {:.4}", self.setting, arm.name, report.micro_f1);
        Ok(report.micro_f1)
    }

    pub fn cross_dataset_eval(
        &self,
        train: &Corpus,
        test: &Corpus,
        arms: &[Arm],
        train_fraction: f64,
        n_seeds: usize,
    ) -> Result<ExperimentResult> {
        if n_seeds == 0 {
            return Err(Error::InvalidArgument("n_seeds must be at least 1".into()));
        }
        if arms.is_empty() {
            return Err(Error::InvalidArgument("no arms to run".into()));
        }
        let test = coarsen(test);
        let subs: Vec<Corpus> = (1..=n_seeds as u64)
            .map(|s| self.subsample(train, train_fraction, s))
            .collect::<Result<_>>()?;
        let jobs: Vec<(usize, usize)> = (0..n_seeds)
            .flat_map(|s| (0..arms.len()).map(move |a| (s, a)))
            .collect();
        let scores: Vec<f64> = jobs
            .par_iter()
            .map(|&(s, a)| self.run_one(&subs[s], &arms[a], &test, s as u64 + 1))
            .collect::<Result<_>>()?;
        let arms_out = arms
            .iter()
            .enumerate()
            .map(|(a, arm)| {
                let per_seed: Vec<f64> = (0..n_seeds).map(|s| scores[s * arms.len() + a]).collect();
                ArmScores {
                    name: arm.name.clone(),
                    mean: mean(&per_seed),
                    per_seed,
                }
            })
            .collect();
        let alpha = arms
            .iter()
            .filter_map(|a| a.augment.as_ref())
            .map(|c| c.alpha)
            .max()
            .unwrap_or(0);
        Ok(ExperimentResult {
            setting: self.setting.clone(),
            train_fraction,
            alpha,
            arms: arms_out,
        })
    }

    pub fn ablation_run(
        &self,
        train: &Corpus,
        test: &Corpus,
        base_config: &AugmentConfig,
        train_fraction: f64,
        n_seeds: usize,
    ) -> Result<ExperimentResult> {
        self.cross_dataset_eval(train, test, &ablation_arms(base_config), train_fraction, n_seeds)
    }

    /// One evaluation on `dev` per distinct α (full training set), plus the
    /// un-augmented baseline under the same seeds.
    pub fn alpha_sweep(
        &self,
        train: &Corpus,
        dev: &Corpus,
        alphas: &[u32],
        base_config: &AugmentConfig,
        n_seeds: usize,
    ) -> Result<SweepResult> {
        if alphas.is_empty() {
            return Err(Error::InvalidArgument("no alpha values to sweep".into()));
        }
        let mut seen = BTreeSet::new();
        let mut unique = Vec::new();
        for &a in alphas {
            if seen.insert(a) {
                unique.push(a);
            } else {
                log::warn!("alpha {a} listed more than once; running it once");
            }
        }
        let base = self.cross_dataset_eval(train, dev, &[Arm::baseline()], 1.0, n_seeds)?;
        let mut points = Vec::with_capacity(unique.len());
        for alpha in unique {
            let cfg = AugmentConfig {
                alpha,
                ..base_config.clone()
            };
            let started = Instant::now();
            let r = self.cross_dataset_eval(train, dev, &[Arm::augmented("phicon", cfg)], 1.0, n_seeds)?;
            let seconds = started.elapsed().as_secs_f64();
            log::info!("alpha {alpha}: mean micro-F1 {:.4} in {seconds:.1}s", r.arms[0].mean);
            points.push(SweepPoint {
                alpha,
                mean: r.arms[0].mean,
                per_seed: r.arms[0].per_seed.clone(),
                seconds,
            });
        }
        Ok(SweepResult {
            setting: self.setting.clone(),
            baseline: base.arms[0].mean,
            points,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: u32,
    pub mean: f64,
    pub per_seed: Vec<f64>,
    /// Wall time of this point; not serialized so reports stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub setting: String,
    pub baseline: f64,
    pub points: Vec<SweepPoint>,
}

pub fn cross_dataset_eval(
    harness: &Harness<'_>,
    train: &Corpus,
    test: &Corpus,
    arms: &[Arm],
    train_fraction: f64,
    n_seeds: usize,
) -> Result<ExperimentResult> {
    harness.cross_dataset_eval(train, test, arms, train_fraction, n_seeds)
}

pub fn alpha_sweep(
    harness: &Harness<'_>,
    train: &Corpus,
    dev: &Corpus,
    alphas: &[u32],
    base_config: &AugmentConfig,
    n_seeds: usize,
) -> Result<SweepResult> {
    harness.alpha_sweep(train, dev, alphas, base_config, n_seeds)
}

pub fn ablation_run(
    harness: &Harness<'_>,
    train: &Corpus,
    test: &Corpus,
    base_config: &AugmentConfig,
    train_fraction: f64,
    n_seeds: usize,
) -> Result<ExperimentResult> {
    harness.ablation_run(train, test, base_config, train_fraction, n_seeds)
}

fn pct(f: f64) -> String {
    format!("{:.4}", f)
}

/// Arms as rows, training fractions as columns, mean micro-F1 per cell,
/// followed by per-seed scores.
pub fn format_experiments(results: &[ExperimentResult]) -> String {
    let mut out = String::new();
    let Some(first) = results.first() else {
        return out;
    };
    let _ = writeln!(
        out,
        "Setting: {}   (binary token micro-F1, mean over seeds)",
        first.setting
    );
    let _ = write!(out, "{:<16}", "Arm");
    for r in results {
        let _ = write!(out, "{:>12}", format!("{:.0}%", r.train_fraction * 100.0));
    }
    out.push('\n');
    for (i, arm) in first.arms.iter().enumerate() {
        let _ = write!(out, "{:<16}", arm.name);
        for r in results {
            let _ = write!(out, "{:>12}", r.arms.get(i).map_or("-".into(), |a| pct(a.mean)));
        }
        out.push('\n');
    }
    for r in results {
        let _ = writeln!(out, "\nper-seed scores at {:.0}%:", r.train_fraction * 100.0);
        for a in &r.arms {
            let s: Vec<String> = a.per_seed.iter().map(|x| pct(*x)).collect();
            let _ = writeln!(out, "  {:<14}{}", a.name, s.join("  "));
        }
    }
    out
}

/// The four-row ablation table.
pub fn format_ablation(result: &ExperimentResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Ablation ({}, {:.0}% training data, alpha = {})",
        result.setting,
        result.train_fraction * 100.0,
        result.alpha
    );
    let _ = writeln!(out, "{:<16}{:>10}", "Model", "micro-F1");
    let label = |n: &str| {
        match n {
            "baseline" => "Baseline",
            "phi_only" => "+PHI",
            "context_only" => "+Context",
            "phicon" => "+PHICON",
            other => other,
        }
        .to_string()
    };
    for a in &result.arms {
        let _ = writeln!(out, "{:<16}{:>10}", label(&a.name), pct(a.mean));
    }
    out
}

pub fn format_sweep(result: &SweepResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Augmentation factor sweep ({}, dev set)", result.setting);
    let _ = writeln!(out, "{:<8}{:>10}", "alpha", "micro-F1");
    let _ = writeln!(out, "{:<8}{:>10}", "none", pct(result.baseline));
    for p in &result.points {
        let _ = writeln!(out, "{:<8}{:>10}", p.alpha, pct(p.mean));
    }
    out
}

/// One JSON object per line.
pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("report serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{PhiType, Sentence};

    fn corpus_of(labels: &[&str]) -> Corpus {
        let pairs: Vec<(String, String)> = labels.iter().map(|l| ("t".to_string(), l.to_string())).collect();
        Corpus::new(vec![Document::new("d", vec![Sentence::from_pairs(&pairs).unwrap()])]).unwrap()
    }

    fn labels(ls: &[&str]) -> Vec<Label> {
        ls.iter().map(|l| l.parse().unwrap()).collect()
    }

    #[test]
    fn exact_prediction_scores_one() {
        let g = corpus_of(&["O", "B-NAME", "I-NAME", "B-DATE"]);
        let r = binary_token_f1(&g, &[labels(&["O", "B-NAME", "I-NAME", "B-DATE"])]).unwrap();
        assert_eq!(r.micro_f1, 1.0);
        assert_eq!(
            r.token_counts,
            TokenCounts {
                tp: 3,
                fp: 0,
                fn_: 0,
                tn: 1
            }
        );
        assert_eq!(r.per_category[&Category::Name].support, 2);
    }

    #[test]
    fn type_confusion_is_binary_hit() {
        let g = corpus_of(&["B-NAME"]);
        let r = binary_token_f1(&g, &[labels(&["B-LOCATION"])]).unwrap();
        assert_eq!(r.micro_f1, 1.0);
        assert_eq!(r.per_category[&Category::Name].f1, 0.0);
        assert_eq!(r.per_category[&Category::Location].precision, 0.0);
        assert_eq!(r.per_category[&Category::Location].support, 0);
    }

    #[test]
    fn degenerate_and_shape_errors() {
        let g = corpus_of(&["O", "O"]);
        let r = binary_token_f1(&g, &[labels(&["O", "O"])]).unwrap();
        assert_eq!(r.micro_f1, 0.0);
        assert!(matches!(
            binary_token_f1(&g, &[labels(&["O"])]),
            Err(Error::ShapeMismatch { sentence: 0, .. })
        ));
        assert!(binary_token_f1(&g, &[]).is_err());
        assert!(binary_token_f1(&g, &[labels(&["O", "O"]), labels(&["O"])]).is_err());
    }

    #[test]
    fn fine_labels_score_by_category() {
        let g = corpus_of(&["B-Patient", "B-Doctor"]);
        let r = binary_token_f1(&g, &[labels(&["B-Doctor", "B-Hospital"])]).unwrap();
        let name = r.per_category[&Category::Name];
        assert_eq!((name.support, name.recall), (2, 0.5));
        assert_eq!(
            Label::Begin(PhiType::Doctor).phi_type().unwrap().category(),
            Category::Name
        );
    }

    #[test]
    fn tables_have_expected_rows() {
        let r = ExperimentResult {
            setting: "A→B".into(),
            train_fraction: 0.2,
            alpha: 2,
            arms: vec![
                ArmScores {
                    name: "baseline".into(),
                    per_seed: vec![0.5],
                    mean: 0.5,
                },
                ArmScores {
                    name: "phicon".into(),
                    per_seed: vec![0.6],
                    mean: 0.6,
                },
            ],
        };
        let t = format_experiments(std::slice::from_ref(&r));
        assert!(t.contains("baseline") && t.contains("0.6000") && t.contains("20%"));
        assert!(format_ablation(&r).contains("+PHICON"));
        assert_eq!(r.improvements("phicon", "baseline").unwrap().len(), 1);
        assert_eq!(to_jsonl(&[r]).lines().count(), 1);
    }
}
