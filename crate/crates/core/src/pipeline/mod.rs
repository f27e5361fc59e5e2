//! End-to-end orchestration: load, score, partition, aggregate, regress,
//! and write reports.

pub mod config;
pub mod svg;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, HalfMonthBucket};
use crate::lexicon::{load_lexicon, read_word_list, LexiconError, PolarityLexicon};
use crate::partition::{
    count_terms, curate_terms, label_corpus, select_salient_terms, write_selection_csv, Dataset, Labeling,
    PartitionError, PhraseMatcher, TermSelection,
};
use crate::sentiment::{tokenizer_for, DocumentScore, LongestMatchTokenizer, SentimentScorer};
use crate::study::{
    bucket_mean_series, describe_listings, load_listings, load_series_csv, run_study, write_series_csv, CarListing,
    DeflatorTable, DescriptiveReport, SentimentSeries, StudyError, StudyGrid,
};
use crate::synth::{self, SyntheticData, SyntheticSpec};

pub use config::PipelineConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

pub const MANIFEST: &str = "MANIFEST";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Corpus { path: String, source: CorpusError },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error("missing input file for {name}: {path}")]
    MissingInput { name: &'static str, path: String },
    #[error("writing {path}: {message}")]
    Output { path: String, message: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("synthetic spec: {0}")]
    Synth(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Invariant(_) | PipelineError::Partition(PartitionError::Invariant(_)) => EXIT_INVARIANT,
            _ => EXIT_INPUT,
        }
    }
}

fn corpus_err(path: &Path) -> impl Fn(CorpusError) -> PipelineError + '_ {
    move |source| PipelineError::Corpus {
        path: path.display().to_string(),
        source,
    }
}

/// Everything the scoring and partition stages read.
pub struct TextInputs {
    pub lexicon: PolarityLexicon,
    pub gazetteer: PhraseMatcher,
    pub allowlist: BTreeSet<String>,
    pub candidates: BTreeSet<String>,
    pub corpus: Corpus,
    pub baseline: Corpus,
}

/// Everything the regression stage reads.
pub struct MarketInputs {
    pub listings: Vec<CarListing>,
    pub deflators: DeflatorTable,
}

fn require(name: &'static str, path: &Path) -> Result<(), PipelineError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(PipelineError::MissingInput {
            name,
            path: path.display().to_string(),
        })
    }
}

impl TextInputs {
    pub fn load(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        for (name, p) in [
            ("lexicon", &cfg.lexicon),
            ("denial", &cfg.denial),
            ("removal", &cfg.removal),
            ("gazetteer", &cfg.gazetteer),
            ("allowlist", &cfg.allowlist),
            ("corpus", &cfg.corpus),
            ("baseline", &cfg.baseline),
        ] {
            require(name, p)?;
        }
        if let Some(c) = &cfg.candidates {
            require("candidates", c)?;
        }
        let lexicon = load_lexicon(&cfg.lexicon, &cfg.denial, &cfg.removal)?;
        let gazetteer = PhraseMatcher::from_file(&cfg.gazetteer)?;
        let allowlist = read_word_list(&cfg.allowlist)?;
        let candidates = match &cfg.candidates {
            Some(p) => read_word_list(p)?,
            None => BTreeSet::new(),
        };
        info!("loading corpus {}", cfg.corpus.display());
        let corpus = Corpus::load_jsonl(&cfg.corpus).map_err(corpus_err(&cfg.corpus))?;
        let baseline = Corpus::load_jsonl(&cfg.baseline).map_err(corpus_err(&cfg.baseline))?;
        Ok(Self {
            lexicon,
            gazetteer,
            allowlist,
            candidates,
            corpus,
            baseline,
        })
    }

    pub fn from_synthetic(data: &SyntheticData) -> Result<Self, PipelineError> {
        let cerr = corpus_err(Path::new("<synthetic>"));
        Ok(Self {
            lexicon: data.lexicon.clone(),
            gazetteer: PhraseMatcher::new(&data.gazetteer)?,
            allowlist: data.allowlist.iter().cloned().collect(),
            candidates: data.candidates.iter().cloned().collect(),
            corpus: Corpus::from_documents(data.corpus.clone()).map_err(&cerr)?,
            baseline: Corpus::from_documents(data.baseline.clone()).map_err(&cerr)?,
        })
    }

    pub fn tokenizer(&self) -> LongestMatchTokenizer {
        let extra = self
            .gazetteer
            .phrases()
            .iter()
            .chain(&self.allowlist)
            .chain(&self.candidates)
            .map(String::as_str);
        tokenizer_for(&self.lexicon, extra)
    }
}

impl MarketInputs {
    /// Deflators are read first so a missing index file fails before
    /// anything else is parsed.
    pub fn load(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        require("deflators", &cfg.deflators)?;
        require("listings", &cfg.listings)?;
        let deflators = DeflatorTable::load(&cfg.deflators)?;
        let listings = load_listings(&cfg.listings, &cfg.market_range)?;
        Ok(Self { listings, deflators })
    }

    pub fn from_synthetic(data: &SyntheticData) -> Self {
        Self {
            listings: data.listings.clone(),
            deflators: data.deflators.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub bucket: HalfMonthBucket,
    pub score: DocumentScore,
}

/// Output of scoring, term selection, partitioning and aggregation.
pub struct TextAnalysis {
    pub scored: Vec<ScoredDoc>,
    pub selection: Vec<TermSelection>,
    pub termset: BTreeSet<String>,
    pub labeling: Labeling,
    pub series: BTreeMap<Dataset, SentimentSeries>,
}

pub fn score_corpus(corpus: &Corpus, lexicon: &PolarityLexicon, tokenizer: &LongestMatchTokenizer) -> Vec<ScoredDoc> {
    let scorer = SentimentScorer::new(lexicon, tokenizer);
    corpus
        .documents()
        .par_iter()
        .map(|d| ScoredDoc {
            doc_id: d.doc_id.clone(),
            bucket: d.bucket(),
            score: scorer.score_document(d),
        })
        .collect()
}

/// Chi-square selection against the baseline, then allowlist curation.
pub fn select_terms(
    text: &TextInputs,
    tokenizer: &LongestMatchTokenizer,
    cfg: &PipelineConfig,
) -> (Vec<TermSelection>, BTreeSet<String>) {
    let event = count_terms(&text.corpus, tokenizer, cfg.count_mode);
    let base = count_terms(&text.baseline, tokenizer, cfg.count_mode);
    let selection = select_salient_terms(&event, &base, cfg.alpha);
    let termset = curate_terms(&selection, &text.allowlist);
    info!(
        "{} candidate terms, {} salient, {} curated",
        selection.len(),
        selection.iter().filter(|s| s.selected).count(),
        termset.len()
    );
    (selection, termset)
}

pub fn analyze_text(text: &TextInputs, cfg: &PipelineConfig) -> Result<TextAnalysis, PipelineError> {
    let tokenizer = text.tokenizer();
    info!("scoring {} documents", text.corpus.len());
    let scored = score_corpus(&text.corpus, &text.lexicon, &tokenizer);
    if let Some(bad) = scored.iter().find(|s| !(-2.0..=2.0).contains(&s.score.score.0)) {
        return Err(PipelineError::Invariant(format!(
            "document {} scored {} outside [-2, 2]",
            bad.doc_id, bad.score.score.0
        )));
    }
    let (selection, termset) = select_terms(text, &tokenizer, cfg);
    let labeling = label_corpus(&text.corpus, &text.gazetteer, &PhraseMatcher::new(&termset)?)?;
    let scores: BTreeMap<String, f64> = scored.iter().map(|s| (s.doc_id.clone(), s.score.score.0)).collect();
    let buckets: BTreeMap<String, HalfMonthBucket> = scored.iter().map(|s| (s.doc_id.clone(), s.bucket)).collect();
    let series = Dataset::ALL
        .into_iter()
        .map(|d| {
            let s = bucket_mean_series(&scores, &labeling.by_doc, &buckets, d).clipped(&cfg.fb_range);
            (d, s)
        })
        .collect();
    Ok(TextAnalysis {
        scored,
        selection,
        termset,
        labeling,
        series,
    })
}

pub struct MarketAnalysis {
    pub grid: StudyGrid,
    pub descriptive: DescriptiveReport,
}

pub fn analyze_market(
    market: &MarketInputs,
    series: &BTreeMap<Dataset, SentimentSeries>,
) -> Result<MarketAnalysis, PipelineError> {
    info!("fitting grid over {} listings", market.listings.len());
    let grid = run_study(&market.listings, series, &market.deflators)?;
    let descriptive = describe_listings(&market.listings, series, &market.deflators)?;
    Ok(MarketAnalysis { grid, descriptive })
}

/// Runs `f` on a dedicated pool; `threads == 0` uses every core.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PipelineError::Invariant(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Writes report files and records their digests for the manifest.
pub struct OutputWriter {
    dir: PathBuf,
    written: Vec<(String, String)>,
}

impl OutputWriter {
    pub fn new(dir: &Path) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::Output {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn record(&mut self, name: &str) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| PipelineError::Output {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let digest = Sha256::digest(&bytes);
        let hex = digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        self.written.push((name.to_string(), hex));
        Ok(())
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| PipelineError::Output {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        self.record(name)
    }

    /// Lets `f` write `name` itself, then records it.
    pub fn with<E>(&mut self, name: &str, f: impl FnOnce(&Path) -> Result<(), E>) -> Result<(), PipelineError>
    where
        PipelineError: From<E>,
    {
        f(&self.dir.join(name))?;
        self.record(name)
    }

    /// Writes the manifest: completeness flag, optional note, then one
    /// `sha256  name` line per file in write order.
    pub fn finish(self, complete: bool, note: Option<&str>) -> Result<PathBuf, PipelineError> {
        let mut body = format!("complete: {complete}\n");
        if let Some(n) = note {
            let _ = writeln!(body, "note: {}", n.replace('\n', " "));
        }
        for (name, hex) in &self.written {
            let _ = writeln!(body, "{hex}  {name}");
        }
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, body).map_err(|e| PipelineError::Output {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(path)
    }
}

fn write_scored_csv(analysis: &TextAnalysis, path: &Path) -> Result<(), PipelineError> {
    let err = |e: csv::Error| PipelineError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record([
        "doc_id", "bucket", "score", "n_pos", "n_neg", "n_neu", "attachment_added", "in_d1", "in_d2", "in_d3", "in_d4",
    ])
    .map_err(err)?;
    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    for s in &analysis.scored {
        let l = analysis.labeling.by_doc.get(&s.doc_id).copied().unwrap_or_default();
        let c = s.score.counts;
        w.write_record([
            s.doc_id.clone(),
            s.bucket.to_string(),
            s.score.score.0.to_string(),
            c.n_positive.to_string(),
            c.n_negative.to_string(),
            c.n_neutral.to_string(),
            flag(s.score.attachment_added),
            flag(l.in_d1),
            flag(l.in_d2),
            flag(l.in_d3()),
            flag(l.in_d4()),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| PipelineError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[derive(Serialize)]
struct PartitionReport<'a> {
    alpha: f64,
    candidates: usize,
    salient: usize,
    termset: &'a BTreeSet<String>,
    summary: crate::partition::PartitionSummary,
}

fn write_partition_outputs(out: &mut OutputWriter, analysis: &TextAnalysis, cfg: &PipelineConfig) -> Result<(), PipelineError> {
    out.with("selection.csv", |p| write_selection_csv(&analysis.selection, p))?;
    let mut termset = String::new();
    for t in &analysis.termset {
        let _ = writeln!(termset, "{t}");
    }
    out.text("termset.txt", &termset)?;
    let report = PartitionReport {
        alpha: cfg.alpha,
        candidates: analysis.selection.len(),
        salient: analysis.selection.iter().filter(|s| s.selected).count(),
        termset: &analysis.termset,
        summary: analysis.labeling.summary,
    };
    out.text("partition.json", &(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))
}

fn write_series_outputs(
    out: &mut OutputWriter,
    series: &BTreeMap<Dataset, SentimentSeries>,
    cfg: &PipelineConfig,
) -> Result<(), PipelineError> {
    out.with("series.csv", |p| write_series_csv(series.values(), p))?;
    out.text("series.svg", &svg::series_chart(series, &cfg.fb_range))
}

fn write_market_outputs(out: &mut OutputWriter, m: &MarketAnalysis) -> Result<(), PipelineError> {
    out.with("grid.csv", |p| m.grid.write_csv(p))?;
    out.with("coefficients.csv", |p| m.grid.write_coefficients_csv(p))?;
    out.text("grid.json", &(m.grid.to_json() + "\n"))?;
    out.text("grid.txt", &m.grid.render_text())?;
    out.with("descriptive.csv", |p| m.descriptive.write_csv(p))?;
    out.text("descriptive.json", &(m.descriptive.to_json() + "\n"))?;
    out.text("descriptive.txt", &m.descriptive.render_text())
}

/// Outcome of a command, for printing and exit-code selection.
#[derive(Debug, Clone)]
pub struct CommandReport {
    pub summary: String,
    pub out_dir: PathBuf,
    /// True when the grid ran and every cell failed numerically.
    pub all_cells_failed: bool,
}

impl CommandReport {
    pub fn exit_code(&self) -> i32 {
        if self.all_cells_failed {
            EXIT_NUMERIC
        } else {
            EXIT_OK
        }
    }
}

fn grid_summary(grid: &StudyGrid) -> String {
    let ok = grid.fits().count();
    let mut s = format!("grid: {ok} of {} cells fitted\n", grid.cells.len());
    for (c, e) in grid.failures() {
        let _ = writeln!(s, "  {}/{} failed: {e}", c.dataset, c.body_type);
    }
    s
}

/// Parses and validates every input, caches normalized corpora under
/// `out_dir/ingest` and reports per-source counts.
pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<CommandReport, PipelineError> {
    let market = MarketInputs::load(cfg)?;
    let text = TextInputs::load(cfg)?;
    let mut out = OutputWriter::new(&cfg.out_dir.join("ingest"))?;
    out.with("corpus.jsonl", |p| text.corpus.write_jsonl(p).map_err(corpus_err(p)))?;
    out.with("baseline.jsonl", |p| text.baseline.write_jsonl(p).map_err(corpus_err(p)))?;
    let lc = text.lexicon.counts();
    let mut summary = text.corpus.summary();
    let _ = writeln!(summary, "baseline documents: {}", text.baseline.len());
    let _ = writeln!(
        summary,
        "lexicon: {} positive, {} negative, {} neutral, {} denial, {} removed",
        lc.positive, lc.negative, lc.neutral, lc.denial, lc.removed
    );
    let _ = writeln!(summary, "gazetteer: {} names", text.gazetteer.len());
    let _ = writeln!(summary, "allowlist: {} terms", text.allowlist.len());
    let _ = writeln!(summary, "candidates: {} terms", text.candidates.len());
    let _ = writeln!(summary, "listings: {}", market.listings.len());
    let _ = writeln!(summary, "deflator months: {}", market.deflators.len());
    out.text("summary.txt", &summary)?;
    let out_dir = out.dir().to_path_buf();
    out.finish(true, None)?;
    Ok(CommandReport {
        summary,
        out_dir,
        all_cells_failed: false,
    })
}

fn run_stages(
    out: &mut OutputWriter,
    cfg: &PipelineConfig,
    text: &TextInputs,
    market: &MarketInputs,
) -> Result<CommandReport, PipelineError> {
    let analysis = with_threads(cfg.threads, || analyze_text(text, cfg))??;
    write_partition_outputs(out, &analysis, cfg)?;
    out.with("scored.csv", |p| write_scored_csv(&analysis, p))?;
    write_series_outputs(out, &analysis.series, cfg)?;
    let m = with_threads(cfg.threads, || analyze_market(market, &analysis.series))??;
    write_market_outputs(out, &m)?;
    let s = analysis.labeling.summary;
    let mut summary = format!(
        "documents: {}\nD1 {}  D2 {}  D3 {}  D4 {}\ncurated terms: {}\n",
        text.corpus.len(),
        s.d1,
        s.d2,
        s.d3,
        s.d4,
        analysis.termset.len()
    );
    summary.push_str(&grid_summary(&m.grid));
    Ok(CommandReport {
        summary,
        out_dir: out.dir().to_path_buf(),
        all_cells_failed: m.grid.all_failed(),
    })
}

/// Full pipeline. Reports land in `out_dir`; the manifest records whether
/// the run completed.
pub fn cmd_run(cfg: &PipelineConfig) -> Result<CommandReport, PipelineError> {
    let market = MarketInputs::load(cfg)?;
    let text = TextInputs::load(cfg)?;
    run_loaded(cfg, &text, &market)
}

/// [`cmd_run`] on inputs already in memory.
pub fn run_loaded(cfg: &PipelineConfig, text: &TextInputs, market: &MarketInputs) -> Result<CommandReport, PipelineError> {
    let mut out = OutputWriter::new(&cfg.out_dir)?;
    match run_stages(&mut out, cfg, text, market) {
        Ok(report) => {
            out.finish(true, None)?;
            Ok(report)
        }
        Err(e) => {
            out.finish(false, Some(&e.to_string()))?;
            Err(e)
        }
    }
}

/// Scoring-free partition run: salient terms, termset and dataset sizes.
pub fn cmd_select_terms(cfg: &PipelineConfig) -> Result<CommandReport, PipelineError> {
    let text = TextInputs::load(cfg)?;
    let mut out = OutputWriter::new(&cfg.out_dir)?;
    let result = with_threads(cfg.threads, || -> Result<_, PipelineError> {
        let tokenizer = text.tokenizer();
        let (selection, termset) = select_terms(&text, &tokenizer, cfg);
        let labeling = label_corpus(&text.corpus, &text.gazetteer, &PhraseMatcher::new(&termset)?)?;
        Ok(TextAnalysis {
            scored: Vec::new(),
            selection,
            termset,
            labeling,
            series: BTreeMap::new(),
        })
    })?;
    let analysis = match result {
        Ok(a) => a,
        Err(e) => {
            out.finish(false, Some(&e.to_string()))?;
            return Err(e);
        }
    };
    write_partition_outputs(&mut out, &analysis, cfg)?;
    let s = analysis.labeling.summary;
    let mut summary = format!("curated terms: {}\n", analysis.termset.len());
    for t in &analysis.termset {
        let _ = writeln!(summary, "  {t}");
    }
    let _ = writeln!(summary, "D1 {}  D2 {}  D3 {}  D4 {}", s.d1, s.d2, s.d3, s.d4);
    let out_dir = out.dir().to_path_buf();
    out.finish(true, None)?;
    Ok(CommandReport {
        summary,
        out_dir,
        all_cells_failed: false,
    })
}

/// Regression grid from a precomputed `dataset,bucket,mean,n_docs` file.
pub fn cmd_regress(cfg: &PipelineConfig, series_csv: &Path) -> Result<CommandReport, PipelineError> {
    let market = MarketInputs::load(cfg)?;
    require("series", series_csv)?;
    let series: BTreeMap<Dataset, SentimentSeries> = load_series_csv(series_csv)?
        .into_iter()
        .map(|(d, s)| (d, s.clipped(&cfg.fb_range)))
        .collect();
    let mut out = OutputWriter::new(&cfg.out_dir)?;
    let m = match with_threads(cfg.threads, || analyze_market(&market, &series))? {
        Ok(m) => m,
        Err(e) => {
            out.finish(false, Some(&e.to_string()))?;
            return Err(e);
        }
    };
    write_market_outputs(&mut out, &m)?;
    let summary = grid_summary(&m.grid);
    let out_dir = out.dir().to_path_buf();
    out.finish(true, None)?;
    Ok(CommandReport {
        summary,
        out_dir,
        all_cells_failed: m.grid.all_failed(),
    })
}

pub fn read_synth_spec(path: &Path) -> Result<SyntheticSpec, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

/// Generates a synthetic fixture plus a ready-to-run `config.toml`.
pub fn cmd_synth(spec: &SyntheticSpec, dir: &Path) -> Result<CommandReport, PipelineError> {
    let data = synth::generate(spec).map_err(PipelineError::Synth)?;
    data.write_to_dir(dir).map_err(|e| PipelineError::Output {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let cfg = PipelineConfig {
        fb_range: spec.fb_range,
        market_range: spec.market_range,
        ..PipelineConfig::for_synthetic_dir(Path::new(""))
    };
    let config_path = dir.join("config.toml");
    std::fs::write(&config_path, toml::to_string(&cfg).expect("config serializes")).map_err(|e| {
        PipelineError::Output {
            path: config_path.display().to_string(),
            message: e.to_string(),
        }
    })?;
    let s = data.truth.summary;
    let summary = format!(
        "wrote {} documents, {} baseline documents, {} listings to {}\nplanted D1 {}  D2 {}  D3 {}  D4 {}\nconfig: {}\n",
        data.corpus.len(),
        data.baseline.len(),
        data.listings.len(),
        dir.display(),
        s.d1,
        s.d2,
        s.d3,
        s.d4,
        config_path.display()
    );
    Ok(CommandReport {
        summary,
        out_dir: dir.to_path_buf(),
        all_cells_failed: false,
    })
}
