//! End-to-end run: validate, featurize, evaluate, screen and interpret, with
//! every artifact written to one output directory.

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::confound::{
    intensity_confound_report, screened_comparison, write_screen_table, Confound, ConfoundTest,
    ScreenedComparison,
};
use crate::corpus::{complete_case_filter, parse_corpus_reader, Corpus, PainClass, Reject};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_folds, prepare_folds, EvalConfig, EvalReport, FeatureSetId, FoldData, NoScreen,
};
use crate::features::{FamilyMatrices, FeatureConfig, FeatureExtractor, FeatureMatrix, StopWords};
use crate::interpret::{interpret, InterpretReport};
use crate::models::{class_counts, ModelKind};
use crate::seed;

/// Largest k the default grid allows without `allow_wide_k_grid`.
pub const K_LIMIT: (usize, usize) = (2, 20);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// JSONL corpus; standard input when absent.
    pub corpus: Option<PathBuf>,
    /// Newline-delimited stop-word lemmas; the bundled Portuguese list when absent.
    pub stopwords: Option<PathBuf>,
    pub feature_sets: Vec<FeatureSetId>,
    /// Classifiers evaluated on every feature set; the baseline always runs.
    pub models: Vec<ModelKind>,
    pub k_min: usize,
    pub k_max: usize,
    pub allow_wide_k_grid: bool,
    pub inner_folds: usize,
    pub n_topics: usize,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub fit_features_globally: bool,
    pub per_fold_screening: bool,
    pub confounds: Vec<Confound>,
    /// The feature set and model that screening and interpretation analyse.
    pub focus_feature_set: FeatureSetId,
    pub focus_model: ModelKind,
    pub top_words: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            stopwords: None,
            feature_sets: FeatureSetId::ALL.to_vec(),
            models: vec![ModelKind::Dt, ModelKind::Svm],
            k_min: K_LIMIT.0,
            k_max: K_LIMIT.1,
            allow_wide_k_grid: false,
            inner_folds: 5,
            n_topics: 12,
            seed: None,
            out: PathBuf::from("out"),
            fit_features_globally: false,
            per_fold_screening: false,
            confounds: Confound::ALL.to_vec(),
            focus_feature_set: FeatureSetId::EarlyFusion,
            focus_model: ModelKind::Svm,
            top_words: 10,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<u64> {
        let bad = |m: String| Err(Error::Config(m));
        let Some(seed) = self.seed else {
            return bad("a seed is required".into());
        };
        if self.k_min < 1 || self.k_min > self.k_max {
            return bad(format!("empty k grid {}..={}", self.k_min, self.k_max));
        }
        if !self.allow_wide_k_grid && (self.k_min < K_LIMIT.0 || self.k_max > K_LIMIT.1) {
            return bad(format!(
                "k grid {}..={} leaves [{}, {}]; set allow_wide_k_grid to override",
                self.k_min, self.k_max, K_LIMIT.0, K_LIMIT.1
            ));
        }
        if self.inner_folds < 2 {
            return bad("inner_folds must be at least 2".into());
        }
        if self.n_topics < 1 {
            return bad("n_topics must be positive".into());
        }
        if self.feature_sets.is_empty() {
            return bad("no feature sets selected".into());
        }
        Ok(seed)
    }

    /// Models run on each feature set, without the baseline, deduplicated in
    /// canonical order.
    pub fn grid_models(&self) -> Vec<ModelKind> {
        let mut m: Vec<ModelKind> = self
            .models
            .iter()
            .copied()
            .filter(|&k| k != ModelKind::Zrb)
            .collect();
        m.sort();
        m.dedup();
        m
    }

    pub fn grid_feature_sets(&self) -> Vec<FeatureSetId> {
        let mut f = self.feature_sets.clone();
        f.sort();
        f.dedup();
        f
    }
}

/// Read the corpus bytes from a path, or standard input for `None` or `-`.
pub fn read_input(path: Option<&Path>) -> Result<Vec<u8>> {
    match path {
        None => read_stdin(),
        Some(p) if p.as_os_str() == "-" => read_stdin(),
        Some(p) => fs::read(p).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::CorpusNotFound(p.to_path_buf()),
            _ => Error::Io(e),
        }),
    }
}

fn read_stdin() -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    std::io::stdin().read_to_end(&mut buf)?;
    Ok(buf)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub config_fingerprint: String,
    pub records_kept: usize,
    pub class_counts: BTreeMap<PainClass, usize>,
    pub rejects: Vec<Reject>,
}

/// A loaded corpus with its configuration and lazily computed shared state.
pub struct Pipeline {
    pub config: RunConfig,
    pub corpus: Corpus,
    pub fingerprint: String,
    pub seed: u64,
    eval: EvalConfig,
    folds: OnceCell<Vec<FoldData>>,
    global: OnceCell<FamilyMatrices>,
}

impl Pipeline {
    /// Parse and filter `corpus_bytes`. The fingerprint covers the config
    /// (without input and output locations) and the content of the inputs.
    pub fn new(config: RunConfig, corpus_bytes: &[u8]) -> Result<Self> {
        let seed = config.validate()?;
        let (stopwords, stop_hash) = match &config.stopwords {
            Some(p) => {
                let text = fs::read_to_string(p)?;
                let hash = sha256_hex(text.as_bytes());
                (StopWords::parse(&text), Some(hash))
            }
            None => (StopWords::portuguese(), None),
        };
        let corpus = complete_case_filter(parse_corpus_reader(corpus_bytes)?);
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut portable = config.clone();
        portable.corpus = None;
        portable.stopwords = None;
        portable.out = PathBuf::new();
        let fingerprint = seed::fingerprint(&serde_json::json!({
            "config": portable,
            "corpus_sha256": sha256_hex(corpus_bytes),
            "stopwords_sha256": stop_hash,
        }));
        let eval = EvalConfig {
            features: FeatureConfig {
                stopwords,
                n_topics: config.n_topics,
                ..FeatureConfig::default()
            },
            k_grid: (config.k_min..=config.k_max).collect(),
            inner_folds: config.inner_folds,
            fit_features_globally: config.fit_features_globally,
            parallel: true,
        };
        Ok(Pipeline {
            config,
            corpus,
            fingerprint,
            seed,
            eval,
            folds: OnceCell::new(),
            global: OnceCell::new(),
        })
    }

    pub fn eval_config(&self) -> &EvalConfig {
        &self.eval
    }

    pub fn validation(&self) -> ValidationReport {
        let counts = class_counts(&self.corpus.labels());
        ValidationReport {
            config_fingerprint: self.fingerprint.clone(),
            records_kept: self.corpus.len(),
            class_counts: PainClass::ALL
                .iter()
                .map(|&c| (c, counts[c.index()]))
                .collect(),
            rejects: self.corpus.ingest_rejects.clone(),
        }
    }

    /// Feature families fitted on the whole corpus (for featurize, screening
    /// and interpretation; never for evaluation unless configured).
    pub fn global_features(&self) -> Result<&FamilyMatrices> {
        if let Some(g) = self.global.get() {
            return Ok(g);
        }
        let records: Vec<_> = self.corpus.participants.iter().collect();
        let ex = FeatureExtractor::fit(
            &records,
            &self.eval.features,
            seed::derive(self.seed, u64::MAX),
        )?;
        Ok(self
            .global
            .get_or_init(|| ex.transform(&records).expect("fitted on the same records")))
    }

    pub fn folds(&self) -> Result<&[FoldData]> {
        if let Some(f) = self.folds.get() {
            return Ok(f);
        }
        let folds = prepare_folds(&self.corpus, &self.eval, self.seed)?;
        Ok(self.folds.get_or_init(|| folds))
    }

    /// One leave-one-out evaluation over the shared folds.
    pub fn evaluate_one(&self, set: FeatureSetId, kind: ModelKind) -> Result<EvalReport> {
        let mut r = evaluate_folds(
            &self.corpus,
            self.folds()?,
            set,
            kind,
            &self.eval,
            &NoScreen,
            self.seed,
        )?;
        r.config_fingerprint = self.fingerprint.clone();
        Ok(r)
    }

    /// The baseline followed by every configured (feature set, model) pair.
    pub fn evaluate(&self) -> Result<Vec<EvalReport>> {
        let mut out = vec![self.evaluate_one(FeatureSetId::EarlyFusion, ModelKind::Zrb)?];
        for set in self.config.grid_feature_sets() {
            for kind in self.config.grid_models() {
                log::info!("evaluating {set} + {kind}");
                out.push(self.evaluate_one(set, kind)?);
            }
        }
        Ok(out)
    }

    pub fn intensity(&self) -> Result<Vec<ConfoundTest>> {
        intensity_confound_report(&self.corpus)
    }

    /// The baseline and focus reports, taken from `reports` when present and
    /// evaluated otherwise.
    pub fn baseline_and_focus(&self, reports: &[EvalReport]) -> Result<(EvalReport, EvalReport)> {
        let find = |set: Option<FeatureSetId>, kind: ModelKind| {
            reports
                .iter()
                .find(|r| r.model == kind && (kind == ModelKind::Zrb || r.feature_set == set))
        };
        let (set, kind) = (self.config.focus_feature_set, self.config.focus_model);
        let zrb = match find(None, ModelKind::Zrb) {
            Some(r) => r.clone(),
            None => self.evaluate_one(set, ModelKind::Zrb)?,
        };
        let focus = match find(Some(set), kind) {
            Some(r) => r.clone(),
            None => self.evaluate_one(set, kind)?,
        };
        Ok((zrb, focus))
    }

    /// Screened comparisons of the focus model for every configured confound.
    pub fn screen(&self, zrb: &EvalReport, focus: &EvalReport) -> Result<Vec<ScreenedComparison>> {
        let global = self.global_features()?.fused()?;
        let mut out = Vec::new();
        for &c in &self.config.confounds {
            log::info!("screening {c}");
            let mut cmp = screened_comparison(
                &self.corpus,
                self.folds()?,
                &global,
                self.config.focus_feature_set,
                self.config.focus_model,
                c,
                (zrb, focus),
                &self.eval,
                self.config.per_fold_screening,
                self.seed,
            )?;
            cmp.select_report.config_fingerprint = self.fingerprint.clone();
            out.push(cmp);
        }
        Ok(out)
    }

    /// Interpret the focus model's selections against the global matrix.
    pub fn interpret(&self, focus: &EvalReport) -> Result<InterpretReport> {
        let global: FeatureMatrix = self.global_features()?.fused()?;
        Ok(interpret(
            focus,
            &global,
            &self.corpus.labels(),
            self.config.top_words,
        ))
    }
}

/// Writes artifacts into the output directory and keeps a manifest of them.
pub struct ArtifactWriter {
    dir: PathBuf,
    fingerprint: String,
    written: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub module: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fold: Option<usize>,
    pub message: String,
}

impl ErrorReport {
    pub fn from_error(e: &Error) -> Self {
        match e {
            Error::Fold { fold, source } => ErrorReport {
                module: source.module(),
                fold: Some(*fold),
                message: e.to_string(),
            },
            _ => ErrorReport {
                module: e.module(),
                fold: None,
                message: e.to_string(),
            },
        }
    }
}

impl ArtifactWriter {
    pub fn new(dir: impl Into<PathBuf>, fingerprint: impl Into<String>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(ArtifactWriter {
            dir,
            fingerprint: fingerprint.into(),
            written: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.written.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.bytes(name, &bytes)
    }

    /// Write a CSV produced by `f`, with a trailing `config_fingerprint`
    /// column added to every row.
    pub fn csv<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(buf.as_slice());
        let mut w = csv::Writer::from_writer(Vec::new());
        for (i, rec) in r.records().enumerate() {
            let mut rec = rec?;
            rec.push_field(if i == 0 {
                "config_fingerprint"
            } else {
                &self.fingerprint
            });
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.bytes(name, &bytes)
    }

    /// Write `status.json`: the manifest of artifacts with their SHA-256,
    /// and the error that stopped the run, if any.
    pub fn finish(self, error: Option<&Error>) -> Result<()> {
        let status = serde_json::json!({
            "status": if error.is_some() { "incomplete" } else { "complete" },
            "config_fingerprint": self.fingerprint,
            "artifacts": self.written,
            "error": error.map(ErrorReport::from_error),
        });
        let mut bytes = serde_json::to_vec_pretty(&status)?;
        bytes.push(b'\n');
        fs::write(self.dir.join("status.json"), bytes)?;
        Ok(())
    }
}

/// Score grid with one row per evaluated (feature set, model).
pub fn write_score_table(reports: &[EvalReport], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["feature_set", "model", "weighted_f1"])?;
    for r in reports {
        w.write_record([
            r.feature_set.map_or("none", FeatureSetId::as_str),
            r.model.as_str(),
            &format!("{:.4}", r.weighted_f1),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_evaluation(
    p: &Pipeline,
    w: &mut ArtifactWriter,
    reports: &[EvalReport],
    zrb: &EvalReport,
    focus: &EvalReport,
) -> Result<()> {
    w.csv("table3.csv", |b| write_score_table(reports, b))?;
    w.json(
        "eval_report.json",
        &serde_json::json!({ "config_fingerprint": p.fingerprint, "reports": reports }),
    )?;
    w.json(
        "table4_confusion.json",
        &serde_json::json!({
            "config_fingerprint": p.fingerprint,
            "feature_set": focus.feature_set,
            "model": focus.model,
            "classes": PainClass::ALL,
            "confusion": focus.confusion,
            "baseline_confusion": zrb.confusion,
        }),
    )
}

pub fn write_screening(
    p: &Pipeline,
    w: &mut ArtifactWriter,
    intensity: &[ConfoundTest],
    comparisons: &[ScreenedComparison],
) -> Result<()> {
    w.json(
        "confound_intensity.json",
        &serde_json::json!({ "config_fingerprint": p.fingerprint, "tests": intensity }),
    )?;
    w.csv("table5_screen.csv", |b| write_screen_table(comparisons, b))?;
    w.json(
        "screen_report.json",
        &serde_json::json!({
            "config_fingerprint": p.fingerprint,
            "per_fold_screening": p.config.per_fold_screening,
            "comparisons": comparisons,
        }),
    )
}

pub fn write_interpretation(
    p: &Pipeline,
    w: &mut ArtifactWriter,
    r: &InterpretReport,
) -> Result<()> {
    w.csv("fig1_pos_distribution.csv", |b| r.write_pos_distribution(b))?;
    w.csv("fig2_class_pos.csv", |b| r.write_class_pos(b))?;
    w.csv("table7_top_words.csv", |b| r.write_top_words(b))?;
    w.csv("fig3_class_word.csv", |b| r.write_class_word(b))?;
    w.json(
        "interpret_report.json",
        &serde_json::json!({ "config_fingerprint": p.fingerprint, "report": r }),
    )
}

/// A subcommand's scope: each stage implies the artifacts it writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Validate,
    Featurize,
    Evaluate,
    Screen,
    Interpret,
    /// Every stage in order.
    Run,
}

/// Run every stage, writing artifacts as they complete. On failure the
/// manifest is marked incomplete and records the error.
pub fn run_pipeline(config: RunConfig, corpus_bytes: &[u8]) -> Result<PathBuf> {
    run_stage(config, corpus_bytes, Stage::Run)
}

/// Read the configured corpus and run one stage; a missing corpus is
/// recorded in `status.json` like any other failure.
pub fn run_configured(config: RunConfig, stage: Stage) -> Result<PathBuf> {
    match read_input(config.corpus.as_deref()) {
        Ok(bytes) => run_stage(config, &bytes, stage),
        Err(e) => {
            if let Ok(w) = ArtifactWriter::new(&config.out, "") {
                w.finish(Some(&e))?;
            }
            Err(e)
        }
    }
}

/// Run one stage into `config.out`, always ending with `status.json`.
pub fn run_stage(config: RunConfig, corpus_bytes: &[u8], stage: Stage) -> Result<PathBuf> {
    let out = config.out.clone();
    let p = match Pipeline::new(config, corpus_bytes) {
        Ok(p) => p,
        Err(e) => {
            if let Ok(w) = ArtifactWriter::new(&out, "") {
                w.finish(Some(&e))?;
            }
            return Err(e);
        }
    };
    let mut w = ArtifactWriter::new(&out, p.fingerprint.clone())?;
    let result = stages(&p, &mut w, stage);
    w.finish(result.as_ref().err())?;
    result.map(|_| out)
}

fn stages(p: &Pipeline, w: &mut ArtifactWriter, stage: Stage) -> Result<()> {
    use Stage::*;
    w.json("validation.json", &p.validation())?;
    if matches!(stage, Featurize | Run) {
        let global = p.global_features()?.fused()?;
        // The matrix and its sidecar stay in the format `FeatureMatrix::read_csv`
        // accepts; status.json ties them to the fingerprint.
        let mut buf = Vec::new();
        global.write_csv(&mut buf)?;
        w.bytes("features.csv", &buf)?;
        w.json("features_sidecar.json", &global.sidecar())?;
    }
    if stage == Featurize || stage == Validate {
        return Ok(());
    }
    let reports = if matches!(stage, Evaluate | Run) {
        p.evaluate()?
    } else {
        Vec::new()
    };
    let (zrb, focus) = p.baseline_and_focus(&reports)?;
    if matches!(stage, Evaluate | Run) {
        write_evaluation(p, w, &reports, &zrb, &focus)?;
    }
    if matches!(stage, Screen | Run) {
        let intensity = p.intensity()?;
        let comparisons = p.screen(&zrb, &focus)?;
        write_screening(p, w, &intensity, &comparisons)?;
    }
    if matches!(stage, Interpret | Run) {
        let interp = p.interpret(&focus)?;
        write_interpretation(p, w, &interp)?;
    }
    Ok(())
}
