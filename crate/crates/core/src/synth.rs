//! Deterministic synthetic corpus, lexicon and listings with planted effects.
//!
//! Documents are assembled from whole vocabulary tokens separated by spaces,
//! so the generator knows every document's polarity counts, dataset label
//! and bucket without running the tokenizer. Listing prices follow the
//! hedonic model with planted coefficients, using the realized per-bucket
//! sentiment means computed from that bookkeeping.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{write_jsonl, BucketRange, DocKind, Document, HalfMonthBucket};
use crate::lexicon::{write_word_list, LexiconEntry, Polarity, PolarityLexicon, WordClass};
use crate::partition::{Dataset, PartitionLabel, PartitionSummary};
use crate::sentiment::{score_text, PolarityCounts};
use crate::study::{
    bucket_mean_series, lag_align, lag_source, write_listings, BodyType, CarListing, DeflatorTable, Fuel,
    Regressor, SentimentSeries,
};

pub const POSITIVE_WORDS: &[(&str, WordClass)] = &[
    ("嬉しい", WordClass::Adjective),
    ("希望", WordClass::Noun),
    ("感謝", WordClass::Noun),
    ("元気", WordClass::AdjectivalVerb),
    ("笑顔", WordClass::Noun),
    ("安心", WordClass::Noun),
    ("頑張る", WordClass::Verb),
    ("素晴らしい", WordClass::Adjective),
];
pub const NEGATIVE_WORDS: &[(&str, WordClass)] = &[
    ("悲しい", WordClass::Adjective),
    ("不安", WordClass::Noun),
    ("心配", WordClass::Noun),
    ("辛い", WordClass::Adjective),
    ("怖い", WordClass::Adjective),
    ("被害", WordClass::Noun),
    ("残念", WordClass::AdjectivalVerb),
    ("寂しい", WordClass::Adjective),
];
pub const NEUTRAL_WORDS: &[&str] = &["情報", "予定", "天気", "連絡"];
/// Dictionary entries that the removal list takes out again.
pub const REMOVED_WORDS: &[&str] = &["震災", "地震"];
pub const DENIAL_WORDS: &[&str] = &["ない", "ません", "not"];
pub const DENIAL: &str = "ない";
pub const PLACE_NAMES: &[&str] = &[
    "石巻", "気仙沼", "陸前高田", "南三陸", "大船渡", "釜石", "女川", "名取", "東松島", "亘理", "大槌", "宮古",
];
/// Gazetteer entries that never occur in generated text.
pub const UNUSED_PLACES: &[&str] = &["宮城県", "岩手県"];
pub const INTEREST_TERMS: &[&str] = &["津波", "被災地", "避難所", "義援金", "復興", "支援物資", "ボランティア", "原発"];
/// On the allowlist but more frequent in the baseline, so never selected.
pub const BASELINE_HEAVY: &str = "応援";
/// Salient in the event corpus but not on the allowlist.
pub const DISTRACTORS: &[&str] = &["節電", "計画停電"];
pub const FILLERS: &[&str] = &["今日", "週末", "ランチ", "写真", "友達", "電車", "会社", "映画"];
const DELIMITERS: &[&str] = &["。", "、", "！", "\n"];

/// Every token the generator may emit or list.
pub fn vocabulary() -> Vec<&'static str> {
    let mut v: Vec<&str> = Vec::new();
    v.extend(POSITIVE_WORDS.iter().map(|w| w.0));
    v.extend(NEGATIVE_WORDS.iter().map(|w| w.0));
    v.extend(NEUTRAL_WORDS);
    v.extend(REMOVED_WORDS);
    v.extend(DENIAL_WORDS);
    v.extend(PLACE_NAMES);
    v.extend(UNUSED_PLACES);
    v.extend(INTEREST_TERMS);
    v.push(BASELINE_HEAVY);
    v.extend(DISTRACTORS);
    v.extend(FILLERS);
    v
}

/// Mean-score path of one document segment over Facebook buckets:
/// `base + slope·t + shock_loading·shock`, with t counted from the start
/// of the Facebook range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub base: f64,
    #[serde(default)]
    pub slope: f64,
    #[serde(default)]
    pub shock_loading: f64,
}

/// Disjoint document segments. D1 = geo_only ∪ geo_interest,
/// D2 = geo_interest ∪ interest_only, D3 = geo_interest, D4 = interest_only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    GeoOnly,
    GeoInterest,
    InterestOnly,
    Unrelated,
}

impl Segment {
    pub const ALL: [Segment; 4] = [Segment::GeoOnly, Segment::GeoInterest, Segment::InterestOnly, Segment::Unrelated];

    pub fn label(self) -> PartitionLabel {
        match self {
            Segment::GeoOnly => PartitionLabel::new(true, false),
            Segment::GeoInterest => PartitionLabel::new(true, true),
            Segment::InterestOnly => PartitionLabel::new(false, true),
            Segment::Unrelated => PartitionLabel::new(false, false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentTrends {
    pub geo_only: Trend,
    pub geo_interest: Trend,
    pub interest_only: Trend,
    pub unrelated: Trend,
}

impl SegmentTrends {
    pub fn get(&self, s: Segment) -> Trend {
        match s {
            Segment::GeoOnly => self.geo_only,
            Segment::GeoInterest => self.geo_interest,
            Segment::InterestOnly => self.interest_only,
            Segment::Unrelated => self.unrelated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentShares {
    pub geo_only: f64,
    pub geo_interest: f64,
    pub interest_only: f64,
    pub unrelated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub n_docs: usize,
    pub n_baseline_docs: usize,
    pub n_listings: usize,
    pub noise_sigma: f64,
    /// Hedonic coefficients keyed by regressor name (`Intercept`, `X1` … `S`).
    pub planted_beta: BTreeMap<String, f64>,
    /// Dataset whose lagged series enters prices through the `S` coefficient.
    pub planted_dataset: Dataset,
    /// Direct effect of the per-bucket market shock on log prices.
    pub shock_beta: f64,
    pub trends: SegmentTrends,
    pub shares: SegmentShares,
    /// Share of documents dated outside the Facebook range.
    pub out_of_range_share: f64,
    pub attachment_rate: f64,
    pub fb_range: BucketRange,
    pub market_range: BucketRange,
}

#[allow(clippy::approx_constant)] // X2 = 0.318 is a coefficient, not 1/π
fn reference_betas(beta_s: f64) -> BTreeMap<String, f64> {
    [
        ("Intercept", 13.8),
        ("X1", 0.092),
        ("X2", 0.318),
        ("X3", 0.267),
        ("X4", -0.071),
        ("X5", 0.309),
        ("X6", -0.10),
        ("X7", -0.321),
        ("D_72", -0.006),
        ("D_82", 0.013),
        ("D_91", -0.015),
        ("S", beta_s),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

impl Default for SyntheticSpec {
    /// Coefficient-recovery scenario: β_S = 0.9 on the geo dataset.
    fn default() -> Self {
        let t = |base, shock_loading| Trend {
            base,
            slope: 0.0,
            shock_loading,
        };
        Self {
            seed: 42,
            n_docs: 20_000,
            n_baseline_docs: 5_000,
            n_listings: 5_000,
            noise_sigma: 0.1,
            planted_beta: reference_betas(0.9),
            planted_dataset: Dataset::D1,
            shock_beta: 0.0,
            trends: SegmentTrends {
                geo_only: t(0.2, 0.2),
                geo_interest: t(0.2, 0.2),
                interest_only: t(0.2, -0.2),
                unrelated: t(0.2, 0.0),
            },
            shares: SegmentShares {
                geo_only: 0.08,
                geo_interest: 0.17,
                interest_only: 0.55,
                unrelated: 0.20,
            },
            out_of_range_share: 0.05,
            attachment_rate: 0.12,
            fb_range: "2011-04-H2..2011-09-H2".parse().expect("valid range"),
            market_range: "2011-04-H2..2011-10-H1".parse().expect("valid range"),
        }
    }
}

impl SyntheticSpec {
    /// Sign-pattern scenario: prices respond to a per-bucket shock that geo
    /// sentiment follows and interest-only sentiment opposes. S itself has
    /// no direct effect.
    pub fn sign_pattern(seed: u64) -> Self {
        Self {
            seed,
            planted_beta: reference_betas(0.0),
            shock_beta: 0.1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_docs == 0 || self.n_listings == 0 || self.n_baseline_docs == 0 {
            return Err("n_docs, n_baseline_docs and n_listings must be positive".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(format!("noise_sigma {} must be a finite non-negative number", self.noise_sigma));
        }
        for k in self.planted_beta.keys() {
            k.parse::<Regressor>()?;
        }
        let s = &self.shares;
        let shares = [s.geo_only, s.geo_interest, s.interest_only, s.unrelated];
        if shares.iter().any(|&x| !(x >= 0.0)) || shares.iter().sum::<f64>() <= 0.0 {
            return Err("segment shares must be non-negative with a positive sum".into());
        }
        for (name, p) in [("out_of_range_share", self.out_of_range_share), ("attachment_rate", self.attachment_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} {p} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn beta(&self, r: Regressor) -> f64 {
        self.planted_beta
            .iter()
            .find(|(k, _)| k.parse::<Regressor>().ok() == Some(r))
            .map(|(_, v)| *v)
            .unwrap_or(0.0)
    }
}

/// Generator-side record of what each event document should produce.
#[derive(Debug, Clone, Serialize)]
pub struct Truth {
    pub summary: PartitionSummary,
    pub segment_counts: BTreeMap<Segment, usize>,
    /// Realized bucket means per dataset, clipped to the Facebook range.
    pub series: BTreeMap<Dataset, BTreeMap<HalfMonthBucket, f64>>,
    pub shocks: BTreeMap<HalfMonthBucket, f64>,
}

pub struct SyntheticData {
    pub spec: SyntheticSpec,
    pub lexicon: PolarityLexicon,
    pub gazetteer: Vec<String>,
    pub allowlist: Vec<String>,
    pub candidates: Vec<String>,
    pub corpus: Vec<Document>,
    pub baseline: Vec<Document>,
    pub listings: Vec<CarListing>,
    pub deflators: DeflatorTable,
    pub scores: BTreeMap<String, f64>,
    pub labels: BTreeMap<String, PartitionLabel>,
    pub series: BTreeMap<Dataset, SentimentSeries>,
    pub truth: Truth,
}

/// Input file names written by [`SyntheticData::write_to_dir`].
pub mod files {
    pub const CORPUS: &str = "corpus.jsonl";
    pub const BASELINE: &str = "baseline.jsonl";
    pub const LEXICON: &str = "lexicon.csv";
    pub const DENIAL: &str = "denial.txt";
    pub const REMOVAL: &str = "removal.txt";
    pub const GAZETTEER: &str = "gazetteer.txt";
    pub const ALLOWLIST: &str = "allowlist.txt";
    pub const CANDIDATES: &str = "candidates.txt";
    pub const LISTINGS: &str = "listings.csv";
    pub const DEFLATORS: &str = "deflators.csv";
    pub const TRUTH: &str = "truth.json";
    pub const SPEC: &str = "spec.toml";
}

pub fn lexicon() -> PolarityLexicon {
    let mut entries: Vec<LexiconEntry> = Vec::new();
    for &(w, c) in POSITIVE_WORDS {
        entries.push(LexiconEntry {
            surface: w.into(),
            word_class: c,
            polarity: Polarity::Positive,
        });
    }
    for &(w, c) in NEGATIVE_WORDS {
        entries.push(LexiconEntry {
            surface: w.into(),
            word_class: c,
            polarity: Polarity::Negative,
        });
    }
    for &w in NEUTRAL_WORDS {
        entries.push(LexiconEntry {
            surface: w.into(),
            word_class: WordClass::Noun,
            polarity: Polarity::Neutral,
        });
    }
    for &w in REMOVED_WORDS {
        entries.push(LexiconEntry {
            surface: w.into(),
            word_class: WordClass::Noun,
            polarity: Polarity::Negative,
        });
    }
    PolarityLexicon::new(
        entries,
        DENIAL_WORDS.iter().map(|s| s.to_string()),
        REMOVED_WORDS.iter().map(|s| s.to_string()),
    )
    .expect("built-in lexicon is consistent")
}

/// Monthly index: a gentle upward drift around 100 over 2010–2012.
pub fn deflators() -> DeflatorTable {
    let rows = (2010..=2012).flat_map(|y| {
        (1..=12).map(move |m| {
            let k = (y - 2010) * 12 + m as i32 - 1;
            ((y, m), 98.5 + 0.1 * k as f64 + 0.05 * ((k % 4) as f64))
        })
    });
    DeflatorTable::new(rows).expect("positive indices")
}

struct TextBuilder {
    clauses: Vec<Vec<&'static str>>,
    counts: PolarityCounts,
}

impl TextBuilder {
    fn new() -> Self {
        Self {
            clauses: Vec::new(),
            counts: PolarityCounts::default(),
        }
    }

    /// A clause whose single polar word has effective polarity positive
    /// with probability `q`, possibly expressed through negation.
    fn polar_clause(&mut self, rng: &mut ChaCha8Rng, q: f64) {
        let positive = rng.random_bool(q);
        let denials = match rng.random_range(0..100) {
            0..=74 => 0,
            75..=96 => 1,
            _ => 2,
        };
        let surface_positive = positive == (denials % 2 == 0);
        let pool = if surface_positive { POSITIVE_WORDS } else { NEGATIVE_WORDS };
        let mut clause = Vec::new();
        if rng.random_bool(0.3) {
            clause.push(pick(rng, FILLERS));
        }
        clause.push(pool[rng.random_range(0..pool.len())].0);
        clause.extend(std::iter::repeat_n(DENIAL, denials));
        if rng.random_bool(0.15) {
            clause.push(pick(rng, NEUTRAL_WORDS));
            self.counts.n_neutral += 1;
        }
        if positive {
            self.counts.n_positive += 1;
        } else {
            self.counts.n_negative += 1;
        }
        self.clauses.push(clause);
    }

    /// Adds a token that carries no polarity to a random clause.
    fn sprinkle(&mut self, rng: &mut ChaCha8Rng, token: &'static str) {
        if self.clauses.is_empty() || rng.random_bool(0.3) {
            self.clauses.push(vec![token]);
        } else {
            let i = rng.random_range(0..self.clauses.len());
            let pos = rng.random_range(0..=self.clauses[i].len());
            self.clauses[i].insert(pos, token);
        }
    }

    fn render(&self, rng: &mut ChaCha8Rng) -> String {
        let mut out = String::new();
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                out.push_str(pick(rng, DELIMITERS));
            }
            out.push_str(&c.join(" "));
        }
        if rng.random_bool(0.5) {
            out.push('。');
        }
        out
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.random_range(0..pool.len())]
}

fn timestamp_in(rng: &mut ChaCha8Rng, bucket: HalfMonthBucket) -> chrono::NaiveDateTime {
    let (start, end) = bucket.day_span();
    let days = (end - start).num_days();
    let day = start + Duration::days(rng.random_range(0..=days));
    day.and_hms_opt(rng.random_range(0..24), rng.random_range(0..60), rng.random_range(0..60))
        .expect("valid time")
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
}

/// Body-type shares, automatic-transmission and high-mileage rates,
/// and price offsets per body type.
const BODY_PROFILES: [(BodyType, f64, f64, f64, f64); 4] = [
    (BodyType::LR, 16_333.0, 0.58, 0.16, 0.0),
    (BodyType::LC, 1_314.0, 0.29, 0.31, -0.12),
    (BodyType::LT, 1_280.0, 0.06, 0.14, -0.25),
    (BodyType::LO, 3_567.0, 0.72, 0.14, -0.18),
];

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData, String> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let fb_buckets = spec.fb_range.buckets();
    let market_buckets = spec.market_range.buckets();

    let shocks: BTreeMap<HalfMonthBucket, f64> =
        market_buckets.iter().map(|&b| (b, standard_normal(&mut rng))).collect();
    let shock_of_fb = |f: HalfMonthBucket| {
        lag_align(f)
            .ok()
            .and_then(|m| shocks.get(&m).copied())
            .unwrap_or(0.0)
    };

    let outside: Vec<HalfMonthBucket> = ["2011-03-POST", "2011-04-H1", "2011-10-H1"]
        .iter()
        .map(|s| s.parse().expect("valid bucket"))
        .filter(|b| !spec.fb_range.contains(*b))
        .collect();
    let sh = spec.shares;
    let share_weights = [sh.geo_only, sh.geo_interest, sh.interest_only, sh.unrelated];
    let share_total: f64 = share_weights.iter().sum();

    let mut corpus = Vec::with_capacity(spec.n_docs);
    let mut scores = BTreeMap::new();
    let mut labels = BTreeMap::new();
    let mut buckets = BTreeMap::new();
    let mut segment_counts: BTreeMap<Segment, usize> = BTreeMap::new();
    for i in 0..spec.n_docs {
        let mut u = rng.random::<f64>() * share_total;
        let mut segment = Segment::Unrelated;
        for (s, w) in Segment::ALL.iter().zip(share_weights) {
            if u < w {
                segment = *s;
                break;
            }
            u -= w;
        }
        let bucket = if !outside.is_empty() && rng.random_bool(spec.out_of_range_share) {
            outside[rng.random_range(0..outside.len())]
        } else {
            fb_buckets[rng.random_range(0..fb_buckets.len())]
        };
        let trend = spec.trends.get(segment);
        let t = fb_buckets.iter().position(|&b| b == bucket).unwrap_or(0) as f64;
        let mu = (trend.base + trend.slope * t + trend.shock_loading * shock_of_fb(bucket)).clamp(-0.95, 0.95);
        let q = (1.0 + mu) / 2.0;

        let mut text = TextBuilder::new();
        for _ in 0..rng.random_range(2..=4) {
            text.polar_clause(&mut rng, q);
        }
        let label = segment.label();
        if label.in_d2 {
            for _ in 0..rng.random_range(1..=2) {
                let term = pick(&mut rng, INTEREST_TERMS);
                text.sprinkle(&mut rng, term);
            }
        }
        if rng.random_bool(0.1) {
            let token = pick(&mut rng, DISTRACTORS);
            text.sprinkle(&mut rng, token);
        }
        if rng.random_bool(0.1) {
            let token = pick(&mut rng, REMOVED_WORDS);
            text.sprinkle(&mut rng, token);
        }
        if rng.random_bool(0.03) {
            text.sprinkle(&mut rng, BASELINE_HEAVY);
        }

        let mut attachment: Option<TextBuilder> = None;
        let mut copy_text = false;
        if rng.random_bool(spec.attachment_rate) {
            if rng.random_bool(0.2) {
                copy_text = true;
            } else {
                let mut a = TextBuilder::new();
                for _ in 0..rng.random_range(1..=2) {
                    a.polar_clause(&mut rng, q);
                }
                attachment = Some(a);
            }
        }
        if label.in_d1 {
            let place = pick(&mut rng, PLACE_NAMES);
            match attachment.as_mut() {
                Some(a) if rng.random_bool(0.2) => a.sprinkle(&mut rng, place),
                _ => text.sprinkle(&mut rng, place),
            }
        }

        let body = text.render(&mut rng);
        let mut score = score_text(text.counts).0;
        let attachment_text = if copy_text {
            Some(body.clone())
        } else {
            attachment.map(|a| {
                let rendered = a.render(&mut rng);
                if rendered != body {
                    score += score_text(a.counts).0;
                }
                rendered
            })
        };
        let doc = Document {
            doc_id: format!("ev{i:07}"),
            page_id: format!("page{:03}", rng.random_range(0..60)),
            kind: if rng.random_bool(0.4) { DocKind::Post } else { DocKind::Comment },
            timestamp: timestamp_in(&mut rng, bucket),
            text: body,
            attachment_text,
        };
        scores.insert(doc.doc_id.clone(), score);
        labels.insert(doc.doc_id.clone(), label);
        buckets.insert(doc.doc_id.clone(), bucket);
        *segment_counts.entry(segment).or_default() += 1;
        corpus.push(doc);
    }

    let baseline_year = NaiveDate::from_ymd_opt(2010, 1, 1).expect("valid date");
    let mut baseline = Vec::with_capacity(spec.n_baseline_docs);
    for i in 0..spec.n_baseline_docs {
        let mut text = TextBuilder::new();
        for _ in 0..rng.random_range(2..=4) {
            text.polar_clause(&mut rng, 0.6);
        }
        for _ in 0..rng.random_range(0..=2) {
            let token = pick(&mut rng, FILLERS);
            text.sprinkle(&mut rng, token);
        }
        if rng.random_bool(0.3) {
            text.sprinkle(&mut rng, BASELINE_HEAVY);
        }
        if rng.random_bool(0.05) {
            let place = pick(&mut rng, PLACE_NAMES);
            text.sprinkle(&mut rng, place);
        }
        let ts = baseline_year + Duration::days(rng.random_range(0..365));
        baseline.push(Document {
            doc_id: format!("bl{i:07}"),
            page_id: format!("page{:03}", rng.random_range(0..60)),
            kind: if rng.random_bool(0.4) { DocKind::Post } else { DocKind::Comment },
            timestamp: ts
                .and_hms_opt(rng.random_range(0..24), rng.random_range(0..60), 0)
                .expect("valid time"),
            text: text.render(&mut rng),
            attachment_text: None,
        });
    }

    let series: BTreeMap<Dataset, SentimentSeries> = Dataset::ALL
        .into_iter()
        .map(|d| (d, bucket_mean_series(&scores, &labels, &buckets, d).clipped(&spec.fb_range)))
        .collect();

    let deflators = deflators();
    let planted = &series[&spec.planted_dataset];
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let body_total: f64 = BODY_PROFILES.iter().map(|p| p.1).sum();
    let mut listings = Vec::with_capacity(spec.n_listings);
    for i in 0..spec.n_listings {
        let mut u = rng.random::<f64>() * body_total;
        let mut profile = BODY_PROFILES[0];
        for p in BODY_PROFILES {
            if u < p.1 {
                profile = p;
                break;
            }
            u -= p.1;
        }
        let (body_type, _, p_auto, p_km, offset) = profile;
        let issue_bucket = market_buckets[rng.random_range(0..market_buckets.len())];
        let fuel = match rng.random_range(0..1000) {
            0..=19 => Fuel::Diesel,
            20..=34 => Fuel::GasHybrid,
            35..=44 => Fuel::Ev,
            45..=59 => Fuel::Other,
            _ => Fuel::Gasoline,
        };
        let age_years = ((7.4 + 3.8 * standard_normal(&mut rng)).clamp(0.0, 21.0) * 10.0).round() / 10.0;
        let listing = CarListing {
            listing_id: format!("L{i:06}"),
            body_type,
            nominal_price: 0.0,
            issue_bucket,
            transmission_automatic: rng.random_bool(p_auto),
            fuel,
            age_years,
            over_100k_km: rng.random_bool((p_km * (0.4 + age_years / 12.0)).min(0.95)),
        };
        let x = crate::study::regression::controls(&listing);
        let d = crate::study::regression::period_dummies(issue_bucket);
        let s = lag_source(issue_bucket)
            .ok()
            .and_then(|f| planted.get(f))
            .map_or(0.0, |p| p.mean);
        let xs = [
            Regressor::X1,
            Regressor::X2,
            Regressor::X3,
            Regressor::X4,
            Regressor::X5,
            Regressor::X6,
            Regressor::X7,
        ];
        let mut ln_real = spec.beta(Regressor::Intercept) + offset;
        for (r, v) in xs.iter().zip(x) {
            ln_real += spec.beta(*r) * v;
        }
        for (r, v) in [Regressor::D72, Regressor::D82, Regressor::D91].iter().zip(d) {
            ln_real += spec.beta(*r) * v;
        }
        ln_real += spec.beta(Regressor::S) * s;
        ln_real += spec.shock_beta * shocks[&issue_bucket];
        let eps = noise.sample(&mut rng);
        if spec.noise_sigma > 0.0 {
            ln_real += eps;
        }
        let index = deflators
            .get(issue_bucket.year(), issue_bucket.month())
            .expect("deflators cover the market range");
        listings.push(CarListing {
            nominal_price: ln_real.exp() * index / 100.0,
            ..listing
        });
    }

    let summary = crate::partition::summarize(labels.values());
    let truth = Truth {
        summary,
        segment_counts,
        series: series
            .iter()
            .map(|(d, s)| (*d, s.points.iter().map(|(b, p)| (*b, p.mean)).collect()))
            .collect(),
        shocks,
    };

    let gazetteer: Vec<String> = PLACE_NAMES.iter().chain(UNUSED_PLACES).map(|s| s.to_string()).collect();
    let allowlist: Vec<String> = INTEREST_TERMS
        .iter()
        .chain(std::iter::once(&BASELINE_HEAVY))
        .map(|s| s.to_string())
        .collect();
    let candidates: BTreeSet<String> = INTEREST_TERMS
        .iter()
        .chain(DISTRACTORS)
        .chain(FILLERS)
        .chain(REMOVED_WORDS)
        .chain(std::iter::once(&BASELINE_HEAVY))
        .map(|s| s.to_string())
        .collect();

    Ok(SyntheticData {
        spec: spec.clone(),
        lexicon: lexicon(),
        gazetteer,
        allowlist,
        candidates: candidates.into_iter().collect(),
        corpus,
        baseline,
        listings,
        deflators,
        scores,
        labels,
        series,
        truth,
    })
}

impl SyntheticData {
    /// Writes every input file plus `truth.json` and `spec.toml` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
        std::fs::create_dir_all(dir)?;
        write_jsonl(&self.corpus, &dir.join(files::CORPUS))?;
        write_jsonl(&self.baseline, &dir.join(files::BASELINE))?;
        self.lexicon
            .save(&dir.join(files::LEXICON), &dir.join(files::DENIAL), &dir.join(files::REMOVAL))?;
        write_word_list(&dir.join(files::GAZETTEER), &self.gazetteer)?;
        write_word_list(&dir.join(files::ALLOWLIST), &self.allowlist)?;
        write_word_list(&dir.join(files::CANDIDATES), &self.candidates)?;
        write_listings(&self.listings, &dir.join(files::LISTINGS))?;
        self.deflators.save(&dir.join(files::DEFLATORS))?;
        std::fs::write(dir.join(files::TRUTH), serde_json::to_string_pretty(&self.truth)?)?;
        std::fs::write(dir.join(files::SPEC), toml::to_string(&self.spec)?)?;
        Ok(())
    }
}
