mod config;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use phicon::augment::{augment_corpus, plan, records_to_jsonl, AugmentConfig};
use phicon::corpus::{
    coarsen, corpus_stats, filter_rare_types, read_conll, serialize_conll, split_corpus, Corpus, ParseMode, PhiType,
    FINE_TYPES,
};
use phicon::evaluate::{
    ablation_arms, evaluate_model, format_ablation, format_experiments, format_sweep, to_jsonl, Arm, EvalReport,
    Harness, DEFAULT_SEEDS,
};
use phicon::lexicon::{generate_identifiers, load_lexicon, GeneratorSpec, LexiconRegistry};
use phicon::synonyms::{load_tsv, load_wndb, SynonymProvider};
use phicon::synthgen::{builtin_profiles, generate_corpus, SiteProfile, DEFAULT_DOCUMENTS, DEFAULT_SENTENCES};
use phicon::tagger::{self, DEFAULT_EPOCHS};

use crate::config::{GeneratorSection, RunConfig};

/// PHI and context augmentation for BIO-labeled de-identification corpora.
///
/// Settings come from command-line flags first, then the `--config` file,
/// then built-in defaults. Logs go to standard error.
#[derive(Debug, Parser)]
#[command(name = "phicon", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Relabel dangling Inside labels as Begin instead of rejecting the file.
    #[arg(long, global = true)]
    repair: bool,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write D ∪ α·D_aug for a corpus.
    Augment(AugmentArgs),
    /// Generate a candidate list for an identifier-like PHI type.
    GenLexicon(GenLexiconArgs),
    /// Generate a synthetic site corpus.
    Synth(SynthArgs),
    /// Split a corpus into train, dev and test documents.
    Split(SplitArgs),
    /// Print corpus statistics.
    Stats(StatsArgs),
    /// Train the tagger.
    Train(TrainArgs),
    /// Score a trained model on a corpus.
    Eval(EvalArgs),
    /// Cross-dataset experiment over arms and training fractions.
    Xeval(XevalArgs),
    /// Augmentation factor sweep on a dev set.
    Sweep(SweepArgs),
    /// Four-arm ablation.
    Ablate(AblateArgs),
}

#[derive(Debug, Args, Default)]
struct AugmentFlags {
    /// Augmentation factor α.
    #[arg(long)]
    alpha: Option<u32>,
    #[arg(long)]
    sr_rate: Option<f64>,
    #[arg(long)]
    ri_rate: Option<f64>,
    /// Disable PHI replacement.
    #[arg(long)]
    no_phi: bool,
    /// Disable synonym replacement.
    #[arg(long)]
    no_sr: bool,
    /// Disable random insertion.
    #[arg(long)]
    no_ri: bool,
    /// Emit augmented sentences even when no edit changed them.
    #[arg(long)]
    keep_unchanged: bool,
    /// Copy PHI-free sentences into augmented documents.
    #[arg(long)]
    keep_context: bool,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSONL audit trail of every augmented sentence.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Print planned counts without writing anything.
    #[arg(long)]
    dry_run: bool,
    #[command(flatten)]
    aug: AugmentFlags,
}

#[derive(Debug, Args)]
struct GenLexiconArgs {
    /// Fine PHI type (ID, Username, Zip, Date, Phone, MedicalRecord).
    #[arg(long = "type")]
    phi_type: String,
    #[arg(long)]
    count: Option<usize>,
    /// Pattern, repeatable; replaces the configured or default patterns.
    #[arg(long = "pattern")]
    patterns: Vec<String>,
    /// Weight per pattern, repeatable.
    #[arg(long = "weight")]
    weights: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// `a`, `b`, or a profile directory (default: paths.profile, else `a`).
    #[arg(long)]
    site: Option<String>,
    #[arg(long, default_value_t = DEFAULT_DOCUMENTS)]
    docs: usize,
    #[arg(long, default_value_t = DEFAULT_SENTENCES.0)]
    min_sentences: usize,
    #[arg(long, default_value_t = DEFAULT_SENTENCES.1)]
    max_sentences: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Directory receiving train.conll, dev.conll and test.conll.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.1,0.2")]
    ratios: Vec<f64>,
    /// Map fine PHI types to their categories first.
    #[arg(long)]
    coarse: bool,
    /// Relabel as O every type with fewer spans than this.
    #[arg(long)]
    min_type_count: Option<usize>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ExperimentFlags {
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Label printed in report headers.
    #[arg(long)]
    setting: Option<String>,
    /// JSONL report.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    aug: AugmentFlags,
}

#[derive(Debug, Args)]
struct XevalArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Comma-separated: baseline, phi_only, context_only, phicon.
    #[arg(long, value_delimiter = ',')]
    arms: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    fractions: Vec<f64>,
    #[command(flatten)]
    exp: ExperimentFlags,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<u32>,
    #[command(flatten)]
    exp: ExperimentFlags,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    fraction: Option<f64>,
    #[command(flatten)]
    exp: ExperimentFlags,
}

struct Ctx {
    cfg: RunConfig,
    seed: Option<u64>,
    mode: ParseMode,
}

impl Ctx {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn read(&self, flag: Option<&PathBuf>, key: &str, fallback: Option<&PathBuf>) -> Result<Corpus> {
        let path = flag
            .or(fallback)
            .ok_or_else(|| anyhow!("no input corpus: pass --{key} or set the path under [paths] in the config"))?;
        let corpus = read_conll(path, self.mode)?;
        log::info!(
            "{}: {} documents, {} sentences",
            path.display(),
            corpus.len(),
            corpus.sentence_count()
        );
        Ok(corpus)
    }

    /// `flag`, else `<output_dir>/<default_name>`, else standard output.
    fn out_path(&self, flag: Option<&PathBuf>, default_name: &str) -> Option<PathBuf> {
        flag.cloned()
            .or_else(|| self.cfg.paths.output_dir.as_ref().map(|d| d.join(default_name)))
    }

    fn augment_config(&self, flags: &AugmentFlags) -> Result<AugmentConfig> {
        let mut c = self.cfg.augment.clone().unwrap_or_default();
        if let Some(s) = self.seed {
            c.master_seed = s;
        }
        if let Some(a) = flags.alpha {
            c.alpha = a;
        }
        if let Some(r) = flags.sr_rate {
            c.sr_rate = r;
        }
        if let Some(r) = flags.ri_rate {
            c.ri_rate = r;
        }
        c.enable_phi &= !flags.no_phi;
        c.enable_sr &= !flags.no_sr;
        c.enable_ri &= !flags.no_ri;
        c.drop_unchanged &= !flags.keep_unchanged;
        c.keep_context_sentences |= flags.keep_context;
        c.validate()?;
        Ok(c)
    }

    fn registry(&self) -> Result<LexiconRegistry> {
        let seed = self.seed();
        let mut reg = LexiconRegistry::builtin(seed)?;
        if let Some(dir) = &self.cfg.paths.lexicon_dir {
            for t in FINE_TYPES {
                let path = dir.join(format!("{}.txt", t.name().to_lowercase()));
                if path.exists() {
                    let lex = load_lexicon(&path, t)?;
                    log::info!("{t}: {} entries from {}", lex.len(), path.display());
                    reg.insert(lex)?;
                }
            }
        }
        for (name, section) in &self.cfg.generators {
            let t: PhiType = name.parse()?;
            let spec = generator_spec(t, section)?;
            let count = section
                .count
                .or_else(|| GeneratorSpec::default_count(t))
                .ok_or_else(|| anyhow!("generators.{name}: no count"))?;
            reg.insert(generate_identifiers(&spec, count, section.seed.unwrap_or(seed))?)?;
        }
        Ok(reg)
    }

    fn provider(&self) -> Result<SynonymProvider> {
        let p = match &self.cfg.paths.synonyms {
            None => SynonymProvider::builtin(),
            Some(path) if path.is_dir() => load_wndb(path)?,
            Some(path) => load_tsv(path)?,
        };
        Ok(match &self.cfg.paths.stopwords {
            Some(path) => p.with_stopword_file(path)?,
            None => p,
        })
    }

    fn epochs(&self, flag: Option<usize>) -> usize {
        flag.or(self.cfg.experiment.epochs).unwrap_or(DEFAULT_EPOCHS)
    }

    fn harness<'a>(
        &self,
        registry: &'a LexiconRegistry,
        provider: &'a SynonymProvider,
        exp: &ExperimentFlags,
    ) -> Harness<'a> {
        let mut h = Harness::new(registry, provider);
        h.seed = self.seed();
        h.epochs = self.epochs(exp.epochs);
        if let Some(s) = exp.setting.clone().or_else(|| self.cfg.experiment.setting.clone()) {
            h.setting = s;
        }
        h
    }

    fn n_seeds(&self, exp: &ExperimentFlags) -> usize {
        exp.seeds.or(self.cfg.experiment.n_seeds).unwrap_or(DEFAULT_SEEDS)
    }
}

fn generator_spec(t: PhiType, section: &GeneratorSection) -> Result<GeneratorSpec> {
    let patterns: Vec<&str> = section.patterns.iter().map(String::as_str).collect();
    let mut spec = GeneratorSpec::new(t, &patterns, section.weights.clone())?;
    if let Some([a, b]) = section.years {
        spec = spec.with_years(a, b)?;
    }
    Ok(spec)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
            log::info!("wrote {}", p.display());
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn select_arms(names: &[String], base: &AugmentConfig) -> Result<Vec<Arm>> {
    let all = ablation_arms(base);
    names
        .iter()
        .map(|n| {
            all.iter()
                .find(|a| a.name == *n)
                .cloned()
                .ok_or_else(|| anyhow!("unknown arm `{n}` (expected baseline, phi_only, context_only or phicon)"))
        })
        .collect()
}

fn or_config<T: Clone>(flag: &[T], config: &Option<Vec<T>>, default: &[T]) -> Vec<T> {
    if !flag.is_empty() {
        flag.to_vec()
    } else {
        config.clone().unwrap_or_else(|| default.to_vec())
    }
}

fn format_eval(r: &EvalReport) -> String {
    let mut s = format!(
        "micro-F1 {:.4}  precision {:.4}  recall {:.4}\n",
        r.micro_f1, r.precision, r.recall
    );
    let c = r.token_counts;
    s.push_str(&format!("tokens: tp {} fp {} fn {} tn {}\n", c.tp, c.fp, c.fn_, c.tn));
    s.push_str(&format!(
        "{:<10}{:>10}{:>10}{:>10}{:>10}\n",
        "category", "precision", "recall", "F1", "support"
    ));
    for (cat, sc) in &r.per_category {
        s.push_str(&format!(
            "{:<10}{:>10.4}{:>10.4}{:>10.4}{:>10}\n",
            cat.name(),
            sc.precision,
            sc.recall,
            sc.f1,
            sc.support
        ));
    }
    s
}

fn run(cli: Cli, ctx: Ctx) -> Result<()> {
    let paths = ctx.cfg.paths.clone();
    match cli.command {
        Command::Augment(a) => {
            let corpus = ctx.read(a.input.as_ref(), "in", paths.train.as_ref())?;
            let cfg = ctx.augment_config(&a.aug)?;
            if a.dry_run {
                let p = plan(&corpus, &cfg);
                println!("documents                 {}", p.documents);
                println!("sentences                 {}", p.sentences);
                println!("eligible sentences        {}", p.eligible_sentences);
                println!("alpha                     {}", cfg.alpha);
                println!("augmented sentences (max) {}", p.max_augmented_sentences);
                return Ok(());
            }
            let (out, records) = augment_corpus(&corpus, &ctx.registry()?, &ctx.provider()?, &cfg)?;
            log::info!(
                "{} augmented sentences added, {} documents total",
                records.len(),
                out.len()
            );
            emit(
                ctx.out_path(a.out.as_ref(), "augmented.conll").as_deref(),
                &serialize_conll(&out),
            )?;
            if let Some(r) = &a.records {
                emit(Some(r), &records_to_jsonl(&records))?;
            }
        }
        Command::GenLexicon(g) => {
            let t: PhiType = g.phi_type.parse()?;
            let section = ctx.cfg.generators.get(t.name());
            let spec = if !g.patterns.is_empty() {
                let weights = (!g.weights.is_empty()).then(|| g.weights.clone());
                let p: Vec<&str> = g.patterns.iter().map(String::as_str).collect();
                GeneratorSpec::new(t, &p, weights)?
            } else if let Some(s) = section {
                generator_spec(t, s)?
            } else {
                GeneratorSpec::default_for(t).ok_or_else(|| anyhow!("{t} is not a generated type"))?
            };
            let count = g
                .count
                .or(section.and_then(|s| s.count))
                .or_else(|| GeneratorSpec::default_count(t))
                .unwrap_or(1000);
            let seed = ctx.seed.or(section.and_then(|s| s.seed)).unwrap_or(0);
            let lex = generate_identifiers(&spec, count, seed)?;
            let mut text = lex.entries().join("\n");
            text.push('\n');
            emit(
                ctx.out_path(g.out.as_ref(), &format!("{}.txt", t.name().to_lowercase()))
                    .as_deref(),
                &text,
            )?;
        }
        Command::Synth(s) => {
            let (a, b) = builtin_profiles();
            let profile = match (s.site.as_deref(), &paths.profile) {
                (Some("a" | "A" | "SiteA"), _) | (None, None) => a,
                (Some("b" | "B" | "SiteB"), _) => b,
                (Some(dir), _) => SiteProfile::load_dir(dir)?,
                (None, Some(dir)) => SiteProfile::load_dir(dir)?,
            };
            let corpus = generate_corpus(&profile, s.docs, (s.min_sentences, s.max_sentences), ctx.seed())?;
            let name = format!("{}.conll", profile.name.to_lowercase());
            emit(
                ctx.out_path(s.out.as_ref(), &name).as_deref(),
                &serialize_conll(&corpus),
            )?;
        }
        Command::Split(s) => {
            let mut corpus = ctx.read(s.input.as_ref(), "in", paths.train.as_ref())?;
            if s.coarse {
                corpus = coarsen(&corpus);
            }
            if let Some(k) = s.min_type_count {
                corpus = filter_rare_types(&corpus, k);
            }
            let [r0, r1, r2] = s.ratios[..] else {
                bail!("--ratios needs three values, got {}", s.ratios.len());
            };
            let dir = s
                .out_dir
                .or(paths.output_dir.clone())
                .ok_or_else(|| anyhow!("pass --out-dir or set paths.output_dir"))?;
            let (train, dev, test) = split_corpus(&corpus, [r0, r1, r2], ctx.seed())?;
            for (name, part) in [("train", train), ("dev", dev), ("test", test)] {
                emit(Some(&dir.join(format!("{name}.conll"))), &serialize_conll(&part))?;
            }
        }
        Command::Stats(s) => {
            let corpus = ctx.read(s.input.as_ref(), "in", paths.train.as_ref())?;
            let stats = corpus_stats(&corpus);
            if s.json {
                println!("{}", serde_json::to_string(&stats)?);
            } else {
                print!("{stats}");
            }
        }
        Command::Train(t) => {
            let corpus = ctx.read(t.train.as_ref(), "train", paths.train.as_ref())?;
            let model = tagger::train(&coarsen(&corpus), ctx.epochs(t.epochs), ctx.seed())?;
            emit(
                ctx.out_path(t.out.as_ref(), "tagger.model").as_deref(),
                &model.to_text(),
            )?;
        }
        Command::Eval(e) => {
            let model = tagger::load_model(&e.model)?;
            let corpus = ctx.read(e.test.as_ref(), "test", paths.test.as_ref())?;
            let report = evaluate_model(&model, &corpus)?;
            if e.json {
                println!("{}", serde_json::to_string(&report)?);
            } else {
                print!("{}", format_eval(&report));
            }
        }
        Command::Xeval(x) => {
            let train = ctx.read(x.train.as_ref(), "train", paths.train.as_ref())?;
            let test = ctx.read(x.test.as_ref(), "test", paths.test.as_ref())?;
            let (reg, prov) = (ctx.registry()?, ctx.provider()?);
            let base = ctx.augment_config(&x.exp.aug)?;
            let names = or_config(&x.arms, &ctx.cfg.experiment.arms, &["baseline".into(), "phicon".into()]);
            let arms = select_arms(&names, &base)?;
            let fractions = or_config(&x.fractions, &ctx.cfg.experiment.fractions, &[0.2, 1.0]);
            let h = ctx.harness(&reg, &prov, &x.exp);
            let n = ctx.n_seeds(&x.exp);
            let results = fractions
                .iter()
                .map(|&f| h.cross_dataset_eval(&train, &test, &arms, f, n))
                .collect::<phicon::Result<Vec<_>>>()?;
            print!("{}", format_experiments(&results));
            if let Some(p) = &x.exp.out {
                emit(Some(p), &to_jsonl(&results))?;
            }
        }
        Command::Sweep(s) => {
            let train = ctx.read(s.train.as_ref(), "train", paths.train.as_ref())?;
            let dev = ctx.read(s.dev.as_ref(), "dev", paths.dev.as_ref())?;
            let (reg, prov) = (ctx.registry()?, ctx.provider()?);
            let base = ctx.augment_config(&s.exp.aug)?;
            let alphas = or_config(&s.alphas, &ctx.cfg.experiment.alphas, &[1, 2, 3, 4]);
            let h = ctx.harness(&reg, &prov, &s.exp);
            let result = h.alpha_sweep(&train, &dev, &alphas, &base, ctx.n_seeds(&s.exp))?;
            print!("{}", format_sweep(&result));
            if let Some(p) = &s.exp.out {
                emit(Some(p), &to_jsonl(&[result]))?;
            }
        }
        Command::Ablate(a) => {
            let train = ctx.read(a.train.as_ref(), "train", paths.train.as_ref())?;
            let test = ctx.read(a.test.as_ref(), "test", paths.test.as_ref())?;
            let (reg, prov) = (ctx.registry()?, ctx.provider()?);
            let base = ctx.augment_config(&a.exp.aug)?;
            let fraction = a
                .fraction
                .or_else(|| ctx.cfg.experiment.fractions.as_ref().and_then(|f| f.first().copied()))
                .unwrap_or(1.0);
            let h = ctx.harness(&reg, &prov, &a.exp);
            let result = h.ablation_run(&train, &test, &base, fraction, ctx.n_seeds(&a.exp))?;
            print!("{}", format_ablation(&result));
            if let Some(p) = &a.exp.out {
                emit(Some(p), &to_jsonl(&[result]))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match start(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn start(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let jobs = cli.jobs.or(cfg.jobs).unwrap_or(0);
    let ctx = Ctx {
        seed: cli.seed.or(cfg.seed),
        mode: if cli.repair {
            ParseMode::Repair
        } else {
            ParseMode::Strict
        },
        cfg,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    pool.install(|| run(cli, ctx))
}
