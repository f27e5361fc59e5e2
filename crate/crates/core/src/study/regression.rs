//! Hedonic design matrix and the dataset × body-type regression grid.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use super::listing::{deflate_price, BodyType, CarListing, DeflatorTable, Fuel};
use super::{lag_source, SentimentSeries, StudyError};
use crate::corpus::{Half, HalfMonthBucket};
use crate::numerics::{least_squares_fit, t_two_sided_p, LeastSquaresProblem, Matrix};
use crate::partition::Dataset;

/// Columns of the hedonic model, in design-matrix order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Regressor {
    Intercept,
    X1,
    X2,
    X3,
    X4,
    X5,
    X6,
    X7,
    D72,
    D82,
    D91,
    S,
}

impl Regressor {
    pub const ALL: [Regressor; 12] = [
        Regressor::Intercept,
        Regressor::X1,
        Regressor::X2,
        Regressor::X3,
        Regressor::X4,
        Regressor::X5,
        Regressor::X6,
        Regressor::X7,
        Regressor::D72,
        Regressor::D82,
        Regressor::D91,
        Regressor::S,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regressor::Intercept => "Intercept",
            Regressor::X1 => "X1",
            Regressor::X2 => "X2",
            Regressor::X3 => "X3",
            Regressor::X4 => "X4",
            Regressor::X5 => "X5",
            Regressor::X6 => "X6",
            Regressor::X7 => "X7",
            Regressor::D72 => "D_72",
            Regressor::D82 => "D_82",
            Regressor::D91 => "D_91",
            Regressor::S => "S",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regressor::Intercept => "constant",
            Regressor::X1 => "transmission (automatic)",
            Regressor::X2 => "diesel",
            Regressor::X3 => "gas hybrid",
            Regressor::X4 => "electric",
            Regressor::X5 => "LPG/CNG/FC",
            Regressor::X6 => "age (years)",
            Regressor::X7 => "over 100,000 km",
            Regressor::D72 => "July, first half",
            Regressor::D82 => "August, second half",
            Regressor::D91 => "September, first half",
            Regressor::S => "lagged sentiment",
        }
    }

    /// Indicator columns that may be omitted from a fit when identically zero.
    pub fn is_droppable_dummy(self) -> bool {
        !matches!(self, Regressor::Intercept | Regressor::X6 | Regressor::S)
    }
}

impl fmt::Display for Regressor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regressor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "");
        Regressor::ALL
            .into_iter()
            .find(|r| r.name().to_ascii_uppercase().replace('_', "") == norm)
            .or(match norm.as_str() {
                "CONST" | "CONSTANT" | "BETA0" => Some(Regressor::Intercept),
                _ => None,
            })
            .ok_or_else(|| format!("unknown regressor {s:?}"))
    }
}

/// The three control periods, keyed on market issue buckets.
pub fn period_dummies(bucket: HalfMonthBucket) -> [f64; 3] {
    let is = |m, h| bucket.year() == 2011 && bucket.month() == m && bucket.half() == h;
    [
        is(7, Half::H1) as u8 as f64,
        is(8, Half::H2) as u8 as f64,
        is(9, Half::H1) as u8 as f64,
    ]
}

/// Control regressors X1..X7 of a listing.
pub fn controls(listing: &CarListing) -> [f64; 7] {
    let fuel = |f: Fuel| (listing.fuel == f) as u8 as f64;
    [
        listing.transmission_automatic as u8 as f64,
        fuel(Fuel::Diesel),
        fuel(Fuel::GasHybrid),
        fuel(Fuel::Ev),
        fuel(Fuel::Other),
        listing.age_years,
        listing.over_100k_km as u8 as f64,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignRow {
    pub listing_id: String,
    pub issue_bucket: HalfMonthBucket,
    pub fb_bucket: HalfMonthBucket,
    pub ln_real_price: f64,
    pub x: [f64; 7],
    pub period: [f64; 3],
    pub s: f64,
}

impl DesignRow {
    pub fn value(&self, r: Regressor) -> f64 {
        match r {
            Regressor::Intercept => 1.0,
            Regressor::X1 => self.x[0],
            Regressor::X2 => self.x[1],
            Regressor::X3 => self.x[2],
            Regressor::X4 => self.x[3],
            Regressor::X5 => self.x[4],
            Regressor::X6 => self.x[5],
            Regressor::X7 => self.x[6],
            Regressor::D72 => self.period[0],
            Regressor::D82 => self.period[1],
            Regressor::D91 => self.period[2],
            Regressor::S => self.s,
        }
    }
}

/// Listings left out of a design.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DropReport {
    /// Lagged bucket has no sentiment point.
    pub no_sentiment: usize,
    /// Issue bucket has no regular source bucket (its previous month is March 2011).
    pub unaligned: usize,
    pub missing_buckets: BTreeSet<HalfMonthBucket>,
}

impl DropReport {
    pub fn total(&self) -> usize {
        self.no_sentiment + self.unaligned
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub dataset: Dataset,
    pub body_type: BodyType,
    pub rows: Vec<DesignRow>,
    pub dropped: DropReport,
}

impl Design {
    pub fn response(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.ln_real_price).collect()
    }

    pub fn matrix(&self, columns: &[Regressor]) -> Matrix {
        let mut m = Matrix::zeros(self.rows.len(), columns.len());
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &c) in columns.iter().enumerate() {
                m.set(i, j, row.value(c));
            }
        }
        m
    }

    pub fn problem(&self, columns: &[Regressor]) -> Result<LeastSquaresProblem, StudyError> {
        Ok(LeastSquaresProblem::new(self.matrix(columns), self.response())?)
    }
}

/// Builds the design for one body type against one dataset's series.
///
/// S comes from the bucket one month before the issue bucket. Listings
/// without a sentiment point there are dropped and counted.
pub fn build_design(
    listings: &[CarListing],
    series: &SentimentSeries,
    deflators: &DeflatorTable,
) -> Result<Design, StudyError> {
    let first = listings.first().ok_or(StudyError::EmptyDesign)?;
    let body_type = first.body_type;
    let mut rows = Vec::with_capacity(listings.len());
    let mut dropped = DropReport::default();
    for l in listings {
        if l.body_type != body_type {
            return Err(StudyError::MixedBodyTypes(body_type, l.body_type));
        }
        let real = deflate_price(l.nominal_price, l.issue_bucket, deflators)?;
        let Ok(fb_bucket) = lag_source(l.issue_bucket) else {
            dropped.unaligned += 1;
            continue;
        };
        let Some(point) = series.get(fb_bucket) else {
            dropped.no_sentiment += 1;
            dropped.missing_buckets.insert(fb_bucket);
            continue;
        };
        rows.push(DesignRow {
            listing_id: l.listing_id.clone(),
            issue_bucket: l.issue_bucket,
            fb_bucket,
            ln_real_price: real.ln(),
            x: controls(l),
            period: period_dummies(l.issue_bucket),
            s: point.mean,
        });
    }
    if rows.is_empty() {
        return Err(StudyError::EmptyDesign);
    }
    Ok(Design {
        dataset: series.dataset,
        body_type,
        rows,
        dropped,
    })
}

/// `**` for p < .01, `*` for p < .05.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub regressor: Regressor,
    pub coef: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
}

impl Coefficient {
    pub fn stars(&self) -> &'static str {
        stars(self.p)
    }

    pub fn significant(&self) -> bool {
        self.p < 0.05
    }
}

impl Serialize for Coefficient {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Coefficient", 6)?;
        st.serialize_field("name", self.regressor.name())?;
        st.serialize_field("coef", &self.coef)?;
        st.serialize_field("se", &self.se)?;
        st.serialize_field("t", &self.t)?;
        st.serialize_field("p", &self.p)?;
        st.serialize_field("stars", self.stars())?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub min: f64,
    pub max: f64,
    pub mean_abs: f64,
    /// Standard error of the regression, `sqrt(RSS / (n − k))`.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub dataset: Dataset,
    pub body_type: BodyType,
    pub n: usize,
    pub k: usize,
    pub r2: f64,
    pub adj_r2: f64,
    pub coefficients: Vec<Coefficient>,
    /// Indicator columns that were identically zero and left out.
    pub omitted: Vec<Regressor>,
    pub residuals: ResidualSummary,
    pub dropped: DropReport,
    pub gram_condition: f64,
}

impl FitResult {
    pub fn coefficient(&self, r: Regressor) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.regressor == r)
    }
}

/// Ordinary least squares on a design, with all-zero indicator columns
/// omitted.
pub fn fit_design(design: &Design) -> Result<FitResult, StudyError> {
    let y = design.response();
    let n = y.len();
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo == hi {
        return Err(StudyError::ZeroVariance);
    }
    let (columns, omitted): (Vec<Regressor>, Vec<Regressor>) = Regressor::ALL
        .into_iter()
        .partition(|&r| !r.is_droppable_dummy() || design.rows.iter().any(|row| row.value(r) != 0.0));
    let problem = design.problem(&columns)?;
    let fit = least_squares_fit(&problem)?;
    let k = columns.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r2 = 1.0 - fit.rss / tss;
    let adj_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n - k) as f64;
    let df = (n - k) as u64;
    let coefficients = columns
        .iter()
        .enumerate()
        .map(|(j, &regressor)| {
            let (coef, se) = (fit.beta[j], fit.std_errors[j]);
            let t = coef / se;
            Coefficient {
                regressor,
                coef,
                se,
                t,
                p: t_two_sided_p(t, df),
            }
        })
        .collect();
    let residuals = ResidualSummary {
        min: fit.residuals.iter().copied().fold(f64::INFINITY, f64::min),
        max: fit.residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_abs: fit.residuals.iter().map(|r| r.abs()).sum::<f64>() / n as f64,
        sigma: fit.sigma2.sqrt(),
    };
    Ok(FitResult {
        dataset: design.dataset,
        body_type: design.body_type,
        n,
        k,
        r2,
        adj_r2,
        coefficients,
        omitted,
        residuals,
        dropped: design.dropped.clone(),
        gram_condition: fit.gram_condition,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub dataset: Dataset,
    pub body_type: BodyType,
    pub outcome: Result<FitResult, String>,
}

impl Serialize for GridCell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("GridCell", 5)?;
        st.serialize_field("dataset", &self.dataset)?;
        st.serialize_field("body_type", &self.body_type)?;
        match &self.outcome {
            Ok(fit) => {
                st.serialize_field("status", "ok")?;
                st.serialize_field("error", &None::<String>)?;
                st.serialize_field("fit", fit)?;
            }
            Err(e) => {
                st.serialize_field("status", "error")?;
                st.serialize_field("error", e)?;
                st.serialize_field("fit", &None::<FitResult>)?;
            }
        }
        st.end()
    }
}

/// Fits for every dataset × body type present, in dataset-major order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyGrid {
    pub cells: Vec<GridCell>,
}

/// Runs the grid. Cells fail independently; a missing deflator for any
/// listing aborts before fitting.
pub fn run_study(
    listings: &[CarListing],
    series: &BTreeMap<Dataset, SentimentSeries>,
    deflators: &DeflatorTable,
) -> Result<StudyGrid, StudyError> {
    for l in listings {
        deflate_price(l.nominal_price, l.issue_bucket, deflators)?;
    }
    let mut by_body: BTreeMap<BodyType, Vec<CarListing>> = BTreeMap::new();
    for l in listings {
        by_body.entry(l.body_type).or_default().push(l.clone());
    }
    let pairs: Vec<(Dataset, BodyType)> = Dataset::ALL
        .into_iter()
        .flat_map(|d| by_body.keys().map(move |&b| (d, b)))
        .collect();
    let cells = pairs
        .into_par_iter()
        .map(|(dataset, body_type)| {
            let empty = SentimentSeries {
                dataset,
                points: BTreeMap::new(),
            };
            let s = series.get(&dataset).unwrap_or(&empty);
            let outcome = build_design(&by_body[&body_type], s, deflators)
                .and_then(|d| fit_design(&d))
                .map_err(|e| e.to_string());
            GridCell {
                dataset,
                body_type,
                outcome,
            }
        })
        .collect();
    Ok(StudyGrid { cells })
}

fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3}")
    } else {
        "NA".into()
    }
}

impl StudyGrid {
    pub fn cell(&self, dataset: Dataset, body_type: BodyType) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.dataset == dataset && c.body_type == body_type)
    }

    pub fn fits(&self) -> impl Iterator<Item = &FitResult> {
        self.cells.iter().filter_map(|c| c.outcome.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (&GridCell, &str)> {
        self.cells
            .iter()
            .filter_map(|c| c.outcome.as_ref().err().map(|e| (c, e.as_str())))
    }

    pub fn all_failed(&self) -> bool {
        !self.cells.is_empty() && self.fits().next().is_none()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid serializes")
    }

    /// One row per cell, S coefficient highlighted.
    pub fn write_csv(&self, path: &Path) -> Result<(), StudyError> {
        let err = |e: csv::Error| StudyError::Input {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record([
            "dataset", "body_type", "status", "n", "k", "r2", "adj_r2", "s_coef", "s_se", "s_t", "s_p", "s_stars",
            "dropped", "error",
        ])
        .map_err(err)?;
        for c in &self.cells {
            let mut rec = vec![c.dataset.to_string(), c.body_type.to_string()];
            match &c.outcome {
                Ok(f) => {
                    let s = f.coefficient(Regressor::S).expect("S is never omitted");
                    rec.extend([
                        "ok".to_string(),
                        f.n.to_string(),
                        f.k.to_string(),
                        f.r2.to_string(),
                        f.adj_r2.to_string(),
                        s.coef.to_string(),
                        s.se.to_string(),
                        s.t.to_string(),
                        s.p.to_string(),
                        s.stars().to_string(),
                        f.dropped.total().to_string(),
                        String::new(),
                    ]);
                }
                Err(e) => {
                    rec.push("error".into());
                    rec.extend(std::iter::repeat_n(String::new(), 10));
                    rec.push(e.clone());
                }
            }
            w.write_record(&rec).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Long-format coefficient table: one row per cell and regressor.
    pub fn write_coefficients_csv(&self, path: &Path) -> Result<(), StudyError> {
        let err = |e: csv::Error| StudyError::Input {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(["dataset", "body_type", "regressor", "coef", "se", "t", "p", "stars"])
            .map_err(err)?;
        for f in self.fits() {
            for c in &f.coefficients {
                w.write_record([
                    f.dataset.to_string(),
                    f.body_type.to_string(),
                    c.regressor.name().to_string(),
                    c.coef.to_string(),
                    c.se.to_string(),
                    c.t.to_string(),
                    c.p.to_string(),
                    c.stars().to_string(),
                ])
                .map_err(err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Plain-text tables: the S summary first, then one block per dataset.
    pub fn render_text(&self) -> String {
        let bodies: Vec<BodyType> = self.cells.iter().map(|c| c.body_type).collect::<BTreeSet<_>>().into_iter().collect();
        let datasets: Vec<Dataset> = self.cells.iter().map(|c| c.dataset).collect::<BTreeSet<_>>().into_iter().collect();
        let mut out = String::new();
        let _ = writeln!(out, "Coefficient of lagged sentiment S (** p < .01, * p < .05)");
        let _ = write!(out, "{:<8}", "");
        for b in &bodies {
            let _ = write!(out, "{:>16}", b.to_string());
        }
        out.push('\n');
        for &d in &datasets {
            let _ = write!(out, "{:<8}", d.to_string());
            for &b in &bodies {
                let cell = match self.cell(d, b).map(|c| &c.outcome) {
                    Some(Ok(f)) => {
                        let s = f.coefficient(Regressor::S).expect("S is never omitted");
                        format!("{}{}", fmt_num(s.coef), s.stars())
                    }
                    Some(Err(_)) => "failed".into(),
                    None => "-".into(),
                };
                let _ = write!(out, "{cell:>16}");
            }
            out.push('\n');
        }

        for &d in &datasets {
            let _ = writeln!(out, "\n{} ({})", d, d.description());
            let _ = write!(out, "{:<12}", "");
            for b in &bodies {
                let _ = write!(out, "{:>16}", b.to_string());
            }
            out.push('\n');
            for r in Regressor::ALL {
                let _ = write!(out, "{:<12}", r.name());
                for &b in &bodies {
                    let cell = match self.cell(d, b).map(|c| &c.outcome) {
                        Some(Ok(f)) => match f.coefficient(r) {
                            Some(c) => format!("{}{}", fmt_num(c.coef), c.stars()),
                            None => "omitted".into(),
                        },
                        _ => "".into(),
                    };
                    let _ = write!(out, "{cell:>16}");
                }
                out.push('\n');
            }
            for (label, get) in [
                ("n", (|f: &FitResult| f.n.to_string()) as fn(&FitResult) -> String),
                ("adj. R2", |f: &FitResult| fmt_num(f.adj_r2)),
            ] {
                let _ = write!(out, "{label:<12}");
                for &b in &bodies {
                    let cell = match self.cell(d, b).map(|c| &c.outcome) {
                        Some(Ok(f)) => get(f),
                        Some(Err(_)) => "failed".into(),
                        None => "".into(),
                    };
                    let _ = write!(out, "{cell:>16}");
                }
                out.push('\n');
            }
        }
        let failures: Vec<_> = self.failures().collect();
        if !failures.is_empty() {
            out.push_str("\nFailed cells\n");
            for (c, e) in failures {
                let _ = writeln!(out, "  {}/{}: {}", c.dataset, c.body_type, e);
            }
        }
        out
    }
}
