//! Averaged-perceptron BIO tagger with greedy, BIO-masked decoding.
//!
//! Each token is scored with the sparse features of [`featurize`] plus two
//! history features, `pl=<previous predicted label>` and that label joined
//! with the token's shape. Weights are averaged over every token step of
//! training.
//!
//! # Model file
//!
//! A UTF-8 text file:
//!
//! ```text
//! phicon-tagger 1
//! template <feature template version>
//! epochs <n>
//! seed <u64>
//! fingerprint <hex>
//! labels <k>
//! <label>                      (k lines, in label-set order)
//! features <f>
//! <feature>\t<w_1> ... <w_k>   (f lines, features sorted, shortest round-trip decimals)
//! end
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::corpus::{serialize_conll, Corpus, Label, Sentence};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

pub const MODEL_MAGIC: &str = "phicon-tagger";
pub const MODEL_VERSION: u32 = 1;
pub const FEATURE_TEMPLATE_VERSION: &str = "v1";
pub const DEFAULT_EPOCHS: usize = 5;

const START: &str = "<S>";
const END: &str = "</S>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub seed: u64,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    /// Feature name to one weight per entry of `label_set`.
    pub weights: HashMap<String, Vec<f64>>,
    pub label_set: Vec<Label>,
    pub feature_template_version: String,
    pub training_meta: TrainingMeta,
}

fn shape(word: &str) -> String {
    word.chars()
        .take(5)
        .map(|c| {
            if c.is_uppercase() {
                'X'
            } else if c.is_lowercase() {
                'x'
            } else if c.is_ascii_digit() {
                'd'
            } else {
                c
            }
        })
        .collect()
}

fn prefix(chars: &[char], n: usize) -> String {
    chars[..n.min(chars.len())].iter().collect()
}

fn suffix(chars: &[char], n: usize) -> String {
    chars[chars.len() - n.min(chars.len())..].iter().collect()
}

fn features_of(lower: &[String], texts: &[&str], i: usize, out: &mut Vec<String>) {
    let word = texts[i];
    let w = &lower[i];
    let chars: Vec<char> = w.chars().collect();
    let prev = if i == 0 { START } else { &lower[i - 1] };
    let next = lower.get(i + 1).map_or(END, String::as_str);
    out.push("bias".into());
    out.push(format!("w={w}"));
    out.push(format!("shape={}", shape(word)));
    for n in 1..=3 {
        out.push(format!("pre{n}={}", prefix(&chars, n)));
        out.push(format!("suf{n}={}", suffix(&chars, n)));
    }
    out.push(format!("prev={prev}"));
    out.push(format!("next={next}"));
    out.push(format!(
        "prevshape={}",
        if i == 0 { START.to_string() } else { shape(texts[i - 1]) }
    ));
    out.push(format!(
        "nextshape={}",
        texts.get(i + 1).map_or(END.to_string(), |t| shape(t))
    ));
    out.push(format!("bigram={prev}|{w}"));
    if word.chars().all(|c| c.is_ascii_digit()) {
        out.push("isdigit=1".into());
    }
    if word.chars().any(|c| c.is_ascii_digit()) {
        out.push("hasdigit=1".into());
    }
    if word.contains('-') {
        out.push("hashyphen=1".into());
    }
    let mut cs = word.chars();
    if cs.next().is_some_and(char::is_uppercase) && !cs.any(char::is_uppercase) {
        out.push("istitle=1".into());
    }
    if i == 0 {
        out.push("start=1".into());
    }
}

fn sentence_features(sentence: &Sentence) -> Vec<Vec<String>> {
    let texts = sentence.texts();
    let lower: Vec<String> = texts.iter().map(|t| t.to_lowercase()).collect();
    (0..texts.len())
        .map(|i| {
            let mut f = Vec::with_capacity(20);
            features_of(&lower, &texts, i, &mut f);
            f
        })
        .collect()
}

/// Static features of token `index`.
pub fn featurize(sentence: &Sentence, index: usize) -> Result<BTreeSet<String>> {
    if index >= sentence.len() {
        return Err(Error::InvalidArgument(format!(
            "token index {index} out of range for sentence of length {}",
            sentence.len()
        )));
    }
    let texts = sentence.texts();
    let lower: Vec<String> = texts.iter().map(|t| t.to_lowercase()).collect();
    let mut f = Vec::new();
    features_of(&lower, &texts, index, &mut f);
    Ok(f.into_iter().collect())
}

fn history_label(prev: Option<Label>) -> String {
    prev.map_or(START.to_string(), |l| l.to_string())
}

/// Features tying the previous predicted label to the current token.
fn history_features(prev: Option<Label>, word: &str) -> [String; 2] {
    let h = history_label(prev);
    [format!("pl={h}"), format!("pl+shape={h}|{}", shape(word))]
}

/// Index of the best label allowed after `prev`; ties go to the earlier label.
fn masked_argmax(scores: &[f64], labels: &[Label], prev: Option<Label>) -> usize {
    let mut best: Option<usize> = None;
    for (k, l) in labels.iter().enumerate() {
        if l.can_follow(prev) && best.is_none_or(|b| scores[k] > scores[b]) {
            best = Some(k);
        }
    }
    best.expect("Outside is always allowed")
}

pub fn corpus_fingerprint(corpus: &Corpus) -> String {
    let digest = Sha256::digest(serialize_conll(corpus).as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

struct Trainer {
    n_labels: usize,
    w: Vec<f64>,
    acc: Vec<f64>,
    stamp: Vec<u64>,
    step: u64,
}

impl Trainer {
    fn bump(&mut self, feat: usize, label: usize, delta: f64) {
        let i = feat * self.n_labels + label;
        self.acc[i] += (self.step - self.stamp[i]) as f64 * self.w[i];
        self.stamp[i] = self.step;
        self.w[i] += delta;
    }

    fn scores(&self, feats: &[usize], out: &mut [f64]) {
        out.fill(0.0);
        for &f in feats {
            let row = &self.w[f * self.n_labels..(f + 1) * self.n_labels];
            for (o, w) in out.iter_mut().zip(row) {
                *o += w;
            }
        }
    }

    fn averaged(mut self) -> Vec<f64> {
        let step = self.step.max(1);
        for i in 0..self.w.len() {
            self.acc[i] += (step - self.stamp[i]) as f64 * self.w[i];
            self.acc[i] /= step as f64;
        }
        self.acc
    }
}

pub fn train(corpus: &Corpus, epochs: usize, seed: u64) -> Result<TaggerModel> {
    if epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be at least 1".into()));
    }
    let sentences: Vec<&Sentence> = corpus.sentences().filter(|s| !s.is_empty()).collect();
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    for s in &sentences {
        if let Some(v) = crate::corpus::validate_bio(s).into_iter().next() {
            return Err(Error::InvalidBio {
                position: v.position,
                description: v.description,
            });
        }
    }
    let mut label_set: BTreeSet<Label> = sentences.iter().flat_map(|s| s.labels()).collect();
    label_set.insert(Label::Outside);
    let label_set: Vec<Label> = label_set.into_iter().collect();
    let label_index: HashMap<Label, usize> = label_set.iter().enumerate().map(|(k, l)| (*l, k)).collect();
    let k = label_set.len();

    let mut names: Vec<String> = Vec::new();
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut intern = |name: String| -> usize {
        if let Some(&i) = ids.get(&name) {
            return i;
        }
        names.push(name.clone());
        ids.insert(name, names.len() - 1);
        names.len() - 1
    };
    let prev_options: Vec<Option<Label>> = std::iter::once(None)
        .chain(label_set.iter().map(|l| Some(*l)))
        .collect();
    // per sentence: static feature ids, history feature ids per previous-label option, gold labels
    type Encoded = (Vec<Vec<usize>>, Vec<Vec<[usize; 2]>>, Vec<usize>);
    let data: Vec<Encoded> = sentences
        .iter()
        .map(|s| {
            let feats = sentence_features(s)
                .into_iter()
                .map(|fs| fs.into_iter().map(&mut intern).collect())
                .collect();
            let hist = s
                .texts()
                .iter()
                .map(|w| {
                    prev_options
                        .iter()
                        .map(|p| history_features(*p, w).map(&mut intern))
                        .collect()
                })
                .collect();
            let gold = s.tokens.iter().map(|t| label_index[&t.label]).collect();
            (feats, hist, gold)
        })
        .collect();

    let n = names.len() * k;
    let mut t = Trainer {
        n_labels: k,
        w: vec![0.0; n],
        acc: vec![0.0; n],
        stamp: vec![0; n],
        step: 0,
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut scores = vec![0.0; k];
    let mut feats: Vec<usize> = Vec::with_capacity(32);
    for epoch in 0..epochs {
        RandomStream::derive(seed, &[epoch as u64]).shuffle(&mut order);
        for &si in &order {
            let (sent_feats, hist, gold) = &data[si];
            let mut prev: Option<usize> = None;
            for ((tf, th), &g) in sent_feats.iter().zip(hist).zip(gold) {
                feats.clear();
                feats.extend_from_slice(tf);
                feats.extend_from_slice(&th[prev.map_or(0, |p| p + 1)]);
                t.scores(&feats, &mut scores);
                let guess = masked_argmax(&scores, &label_set, prev.map(|p| label_set[p]));
                t.step += 1;
                if guess != g {
                    for &f in &feats {
                        t.bump(f, g, 1.0);
                        t.bump(f, guess, -1.0);
                    }
                }
                prev = Some(guess);
            }
        }
    }
    let avg = t.averaged();
    let weights = names
        .into_iter()
        .enumerate()
        .filter_map(|(f, name)| {
            let row = avg[f * k..(f + 1) * k].to_vec();
            row.iter().any(|w| *w != 0.0).then_some((name, row))
        })
        .collect();
    Ok(TaggerModel {
        weights,
        label_set,
        feature_template_version: FEATURE_TEMPLATE_VERSION.to_string(),
        training_meta: TrainingMeta {
            epochs,
            seed,
            fingerprint: corpus_fingerprint(corpus),
        },
    })
}

impl TaggerModel {
    fn add_feature(&self, name: &str, scores: &mut [f64]) {
        if let Some(row) = self.weights.get(name) {
            for (s, w) in scores.iter_mut().zip(row) {
                *s += w;
            }
        }
    }

    pub fn predict(&self, sentence: &Sentence) -> Vec<Label> {
        let feats = sentence_features(sentence);
        let texts = sentence.texts();
        let mut scores = vec![0.0; self.label_set.len()];
        let mut out: Vec<Label> = Vec::with_capacity(feats.len());
        for (tf, word) in feats.into_iter().zip(texts) {
            scores.fill(0.0);
            for f in &tf {
                self.add_feature(f, &mut scores);
            }
            let prev = out.last().copied();
            for f in history_features(prev, word) {
                self.add_feature(&f, &mut scores);
            }
            out.push(self.label_set[masked_argmax(&scores, &self.label_set, prev)]);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let m = &self.training_meta;
        let _ = writeln!(s, "{MODEL_MAGIC} {MODEL_VERSION}");
        let _ = writeln!(s, "template {}", self.feature_template_version);
        let _ = writeln!(s, "epochs {}", m.epochs);
        let _ = writeln!(s, "seed {}", m.seed);
        let _ = writeln!(s, "fingerprint {}", m.fingerprint);
        let _ = writeln!(s, "labels {}", self.label_set.len());
        for l in &self.label_set {
            let _ = writeln!(s, "{l}");
        }
        let _ = writeln!(s, "features {}", self.weights.len());
        let mut names: Vec<&String> = self.weights.keys().collect();
        names.sort();
        for name in names {
            s.push_str(name);
            for (j, w) in self.weights[name].iter().enumerate() {
                s.push(if j == 0 { '\t' } else { ' ' });
                let _ = write!(s, "{w}");
            }
            s.push('\n');
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::ModelFormat(m);
        let mut lines = text.lines();
        let mut next = |what: &str| lines.next().ok_or_else(|| bad(format!("truncated before {what}")));
        let header = next("header")?;
        match header.split_once(' ') {
            Some((MODEL_MAGIC, v)) if v == MODEL_VERSION.to_string() => {}
            _ => return Err(Error::ModelVersion(header.to_string())),
        }
        fn field<'a>(line: &'a str, key: &str) -> Result<&'a str> {
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .ok_or_else(|| Error::ModelFormat(format!("expected `{key}`, found `{line}`")))
        }
        fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
            s.parse().map_err(|_| Error::ModelFormat(format!("bad {what} `{s}`")))
        }
        let template = field(next("template")?, "template")?.to_string();
        let epochs = num(field(next("epochs")?, "epochs")?, "epochs")?;
        let seed = num(field(next("seed")?, "seed")?, "seed")?;
        let fingerprint = field(next("fingerprint")?, "fingerprint")?.to_string();
        let k: usize = num(field(next("labels")?, "labels")?, "label count")?;
        let mut label_set = Vec::with_capacity(k);
        for _ in 0..k {
            let l = next("label")?;
            label_set.push(l.parse::<Label>().map_err(|e| bad(format!("label `{l}`: {e}")))?);
        }
        if !label_set.contains(&Label::Outside) {
            return Err(bad("label set lacks O".into()));
        }
        let f: usize = num(field(next("features")?, "features")?, "feature count")?;
        let mut weights = HashMap::with_capacity(f);
        for _ in 0..f {
            let line = next("feature")?;
            let (name, ws) = line
                .split_once('\t')
                .ok_or_else(|| bad(format!("feature line `{line}`")))?;
            let row: Vec<f64> = ws.split(' ').map(|w| num::<f64>(w, "weight")).collect::<Result<_>>()?;
            if row.len() != k || row.iter().any(|w| !w.is_finite()) {
                return Err(bad(format!("feature `{name}` needs {k} finite weights")));
            }
            weights.insert(name.to_string(), row);
        }
        if next("end")? != "end" {
            return Err(bad("missing end marker".into()));
        }
        Ok(Self {
            weights,
            label_set,
            feature_template_version: template,
            training_meta: TrainingMeta {
                epochs,
                seed,
                fingerprint,
            },
        })
    }
}

pub fn predict(model: &TaggerModel, sentence: &Sentence) -> Vec<Label> {
    model.predict(sentence)
}

pub fn save_model(model: &TaggerModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_text()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TaggerModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TaggerModel::from_text(&text)
}
