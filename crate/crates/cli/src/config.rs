//! Run configuration file (TOML).
//!
//! ```toml
//! seed = 0                 # master seed for every subcommand
//! jobs = 4                 # worker threads
//!
//! [paths]                  # relative paths resolve against the config file
//! train = "data/train.conll"
//! dev = "data/dev.conll"
//! test = "data/test.conll"
//! lexicon_dir = "lexicons" # optional <type>.txt lists replacing the bundled ones
//! synonyms = "wn/dict"     # WNDB directory or TSV file; bundled table if absent
//! stopwords = "stop.txt"
//! profile = "sites/clinic" # site profile directory used by `synth`
//! output_dir = "out"
//!
//! [augment]                # any AugmentConfig field
//! alpha = 2
//!
//! [generators.Phone]       # replaces the default generator for a type
//! patterns = ['\d{3}-\d{3}-\d{4}']
//! weights = [1.0]
//! count = 5000
//! seed = 3
//! years = [1950, 2020]
//!
//! [experiment]
//! arms = ["baseline", "phicon"]
//! fractions = [0.2, 1.0]
//! alphas = [1, 2, 3, 4]
//! n_seeds = 5
//! epochs = 5
//! setting = "SiteA→SiteB"
//! ```
//!
//! Every key is optional and unknown keys are rejected. Command-line flags
//! take precedence over the file, which takes precedence over built-in
//! defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use phicon::augment::AugmentConfig;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub paths: Paths,
    pub augment: Option<AugmentConfig>,
    pub generators: BTreeMap<String, GeneratorSection>,
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub lexicon_dir: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub profile: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    pub patterns: Vec<String>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub years: Option<[i32; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub arms: Option<Vec<String>>,
    pub fractions: Option<Vec<f64>>,
    pub alphas: Option<Vec<u32>>,
    pub n_seeds: Option<usize>,
    pub epochs: Option<usize>,
    pub setting: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.paths.resolve(base)?;
        Ok(cfg)
    }
}

impl Paths {
    /// Make every path absolute against `base` and check that inputs exist.
    fn resolve(&mut self, base: &Path) -> Result<()> {
        let join = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        for p in [
            &mut self.train,
            &mut self.dev,
            &mut self.test,
            &mut self.lexicon_dir,
            &mut self.synonyms,
            &mut self.stopwords,
            &mut self.profile,
            &mut self.output_dir,
        ] {
            join(p);
        }
        let inputs = [
            ("train", &self.train),
            ("dev", &self.dev),
            ("test", &self.test),
            ("lexicon_dir", &self.lexicon_dir),
            ("synonyms", &self.synonyms),
            ("stopwords", &self.stopwords),
            ("profile", &self.profile),
        ];
        for (key, p) in inputs {
            if let Some(p) = p {
                if !p.exists() {
                    bail!("config path `{key}` does not exist: {}", p.display());
                }
            }
        }
        Ok(())
    }
}
