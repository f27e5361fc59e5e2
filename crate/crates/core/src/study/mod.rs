//! Sentiment series, lag alignment and the hedonic regression grid.

pub mod describe;
pub mod listing;
pub mod regression;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{BucketRange, CalendarError, HalfMonthBucket};
use crate::numerics::NumericsError;
use crate::partition::{Dataset, PartitionLabel};

pub use describe::{describe_listings, DescriptiveReport, SCORE_BOUND, SUMMARY_BAND};
pub use listing::{deflate_price, load_listings, write_listings, BodyType, CarListing, DeflatorTable, Fuel};
pub use regression::{
    build_design, fit_design, run_study, stars, Coefficient, Design, DesignRow, DropReport, FitResult, GridCell,
    Regressor, ResidualSummary, StudyGrid,
};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("{path}:{line}: {message}")]
    Input { path: String, line: usize, message: String },
    #[error("no deflator index for {year}-{month:02}")]
    MissingDeflator { year: i32, month: u32 },
    #[error("no listings survive design construction")]
    EmptyDesign,
    #[error("design mixes body types {0} and {1}")]
    MixedBodyTypes(BodyType, BodyType),
    #[error("dependent variable has zero variance")]
    ZeroVariance,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Calendar(#[from] CalendarError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub mean: f64,
    pub n_docs: usize,
}

/// Half-month mean sentiment of one dataset. Empty buckets are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentSeries {
    pub dataset: Dataset,
    pub points: BTreeMap<HalfMonthBucket, SeriesPoint>,
}

impl SentimentSeries {
    pub fn get(&self, bucket: HalfMonthBucket) -> Option<SeriesPoint> {
        self.points.get(&bucket).copied()
    }

    /// Keeps only buckets inside `range`.
    pub fn clipped(&self, range: &BucketRange) -> Self {
        Self {
            dataset: self.dataset,
            points: self
                .points
                .iter()
                .filter(|(b, _)| range.contains(**b))
                .map(|(b, p)| (*b, *p))
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dataset: self.dataset,
            points: self
                .points
                .iter()
                .map(|(b, p)| (*b, SeriesPoint { mean: p.mean * factor, n_docs: p.n_docs }))
                .collect(),
        }
    }
}

/// Per-bucket mean of the scores of documents belonging to `dataset`.
///
/// Documents are visited in `doc_id` order so the sums are reproducible.
/// A document missing from `labels` or `buckets` is skipped.
pub fn bucket_mean_series(
    scores: &BTreeMap<String, f64>,
    labels: &BTreeMap<String, PartitionLabel>,
    buckets: &BTreeMap<String, HalfMonthBucket>,
    dataset: Dataset,
) -> SentimentSeries {
    let mut acc: BTreeMap<HalfMonthBucket, (f64, usize)> = BTreeMap::new();
    for (id, &score) in scores {
        let (Some(label), Some(&bucket)) = (labels.get(id), buckets.get(id)) else {
            continue;
        };
        if label.contains(dataset) {
            let e = acc.entry(bucket).or_default();
            e.0 += score;
            e.1 += 1;
        }
    }
    SentimentSeries {
        dataset,
        points: acc
            .into_iter()
            .map(|(b, (sum, n))| (b, SeriesPoint { mean: sum / n as f64, n_docs: n }))
            .collect(),
    }
}

/// Market bucket that a Facebook bucket explains: one month later, same half.
pub fn lag_align(fb_bucket: HalfMonthBucket) -> Result<HalfMonthBucket, CalendarError> {
    fb_bucket.shift_months(1)
}

/// Facebook bucket feeding a market bucket.
pub fn lag_source(issue_bucket: HalfMonthBucket) -> Result<HalfMonthBucket, CalendarError> {
    issue_bucket.shift_months(-1)
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesRecord {
    dataset: Dataset,
    bucket: HalfMonthBucket,
    mean: f64,
    n_docs: usize,
}

/// Writes series as `dataset,bucket,mean,n_docs`.
pub fn write_series_csv<'a>(
    series: impl IntoIterator<Item = &'a SentimentSeries>,
    path: &Path,
) -> Result<(), StudyError> {
    let err = |e: csv::Error| StudyError::Input {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for s in series {
        for (&bucket, p) in &s.points {
            w.serialize(SeriesRecord {
                dataset: s.dataset,
                bucket,
                mean: p.mean,
                n_docs: p.n_docs,
            })
            .map_err(err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_series_csv(path: &Path) -> Result<BTreeMap<Dataset, SentimentSeries>, StudyError> {
    let err = |line: usize, message: String| StudyError::Input {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| err(0, e.to_string()))?;
    let mut out: BTreeMap<Dataset, SentimentSeries> = BTreeMap::new();
    for (i, rec) in reader.deserialize::<SeriesRecord>().enumerate() {
        let r = rec.map_err(|e| err(i + 2, e.to_string()))?;
        if r.n_docs == 0 || !r.mean.is_finite() {
            return Err(err(i + 2, format!("invalid point {} {}", r.mean, r.n_docs)));
        }
        out.entry(r.dataset)
            .or_insert_with(|| SentimentSeries {
                dataset: r.dataset,
                points: BTreeMap::new(),
            })
            .points
            .insert(r.bucket, SeriesPoint { mean: r.mean, n_docs: r.n_docs });
    }
    Ok(out)
}
