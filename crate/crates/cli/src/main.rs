use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use painscale::confound::Confound;
use painscale::corpus::write_corpus;
use painscale::eval::FeatureSetId;
use painscale::models::ModelKind;
use painscale::pipeline::{run_configured, RunConfig, Stage};
use painscale::synth::{generate, SynthConfig};

/// Pain-intensity classification from annotated interview transcripts.
#[derive(Parser)]
#[command(name = "painscale", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the corpus and report kept records and rejects.
    Validate(RunArgs),
    /// Fit all feature families on the whole corpus and write the fused matrix.
    Featurize(RunArgs),
    /// Leave-one-out evaluation of every feature set and model.
    Evaluate(RunArgs),
    /// Confound tests and screened re-evaluation for each confound.
    Screen(RunArgs),
    /// Part-of-speech and word summaries of the selected features.
    Interpret(RunArgs),
    /// Every stage in order.
    Run(RunArgs),
    /// Write a synthetic corpus with planted signal.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSONL corpus; `-` or absent reads standard input.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 uses every core).
    #[arg(long, env = "PAINSCALE_JOBS")]
    jobs: Option<usize>,
    /// Comma-separated: verbosity, tfidf, pos_tfidf, topics, ef, lf.
    #[arg(long, value_delimiter = ',')]
    feature_sets: Option<Vec<FeatureSetId>>,
    /// Comma-separated: dt, svm (the baseline always runs).
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<ModelKind>>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    allow_wide_k_grid: bool,
    #[arg(long)]
    inner_folds: Option<usize>,
    #[arg(long)]
    n_topics: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    confounds: Option<Vec<Confound>>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    fit_features_globally: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    per_fold_screening: Option<bool>,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON generator configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_participants: Option<usize>,
    #[arg(long)]
    signal_strength: Option<f64>,
    /// Corpus destination; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Ground-truth sidecar destination.
    #[arg(long)]
    truth: Option<PathBuf>,
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl RunArgs {
    fn into_config(self) -> anyhow::Result<(RunConfig, Option<usize>)> {
        let mut c: RunConfig = match &self.config {
            Some(p) => load_json(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(
            feature_sets,
            models,
            k_min,
            k_max,
            inner_folds,
            n_topics,
            confounds,
            out
        );
        set!(fit_features_globally, per_fold_screening);
        if self.corpus.is_some() {
            c.corpus = self.corpus;
        }
        if self.stopwords.is_some() {
            c.stopwords = self.stopwords;
        }
        if self.seed.is_some() {
            c.seed = self.seed;
        }
        if c.seed.is_none() {
            log::warn!("no seed given; using 0");
            c.seed = Some(0);
        }
        c.allow_wide_k_grid |= self.allow_wide_k_grid;
        Ok((c, self.jobs))
    }
}

fn run(args: RunArgs, stage: Stage) -> anyhow::Result<()> {
    let (config, jobs) = args.into_config()?;
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let out = run_configured(config, stage)?;
    log::info!("artifacts written to {}", out.display());
    Ok(())
}

fn synth(args: SynthArgs) -> anyhow::Result<()> {
    let mut cfg: SynthConfig = match &args.config {
        Some(p) => load_json(p)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.n_participants {
        cfg.n_participants = n;
    }
    if let Some(s) = args.signal_strength {
        cfg.signal_strength = s;
    }
    let (corpus, truth) = generate(&cfg)?;
    match &args.output {
        Some(p) => write_corpus(&corpus, std::io::BufWriter::new(fs::File::create(p)?))?,
        None => {
            let mut out = std::io::stdout().lock();
            write_corpus(&corpus, &mut out)?;
            out.flush()?;
        }
    }
    if let Some(p) = &args.truth {
        let mut bytes = serde_json::to_vec_pretty(&truth)?;
        bytes.push(b'\n');
        fs::write(p, bytes)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate(a) => run(a, Stage::Validate),
        Command::Featurize(a) => run(a, Stage::Featurize),
        Command::Evaluate(a) => run(a, Stage::Evaluate),
        Command::Screen(a) => run(a, Stage::Screen),
        Command::Interpret(a) => run(a, Stage::Interpret),
        Command::Run(a) => run(a, Stage::Run),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
