//! Descriptive statistics of the regression inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::listing::{deflate_price, BodyType, CarListing, DeflatorTable};
use super::regression::{controls, period_dummies, Regressor};
use super::{lag_source, SentimentSeries, StudyError};
use crate::partition::Dataset;

/// Reference band for half-month mean sentiment observed on real pages.
/// Advisory only.
pub const SUMMARY_BAND: (f64, f64) = (0.17, 0.23);

/// Hard bound on any document score and hence any bucket mean.
pub const SCORE_BOUND: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableStats {
    pub variable: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl VariableStats {
    fn of(variable: impl Into<String>, values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            f64::NAN
        };
        Self {
            variable: variable.into(),
            n,
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BodyTypeStats {
    pub body_type: BodyType,
    pub n_listings: usize,
    pub variables: Vec<VariableStats>,
}

/// Pearson correlations among the regression variables for one dataset,
/// pooled over body types.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationTable {
    pub dataset: Dataset,
    pub n: usize,
    pub variables: Vec<String>,
    /// Row-major; `None` where a variable is constant.
    pub r: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesCheck {
    pub dataset: Dataset,
    pub points: usize,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// Buckets whose mean lies outside [−2, 2].
    pub out_of_range: Vec<String>,
    pub within_reference_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescriptiveReport {
    pub body_types: Vec<BodyTypeStats>,
    pub series: Vec<SeriesCheck>,
    pub correlations: Vec<CorrelationTable>,
}

fn variable_names() -> Vec<String> {
    let mut v = vec!["real_price".to_string(), "ln_real_price".to_string()];
    v.extend(Regressor::ALL[1..11].iter().map(|r| r.name().to_string()));
    v
}

/// Summaries per body type (price, controls, period dummies and the lagged
/// S of each dataset), series range checks and per-dataset correlations.
pub fn describe_listings(
    listings: &[CarListing],
    series: &BTreeMap<Dataset, SentimentSeries>,
    deflators: &DeflatorTable,
) -> Result<DescriptiveReport, StudyError> {
    let mut rows: Vec<(BodyType, Vec<f64>)> = Vec::with_capacity(listings.len());
    for l in listings {
        let real = deflate_price(l.nominal_price, l.issue_bucket, deflators)?;
        let mut v = vec![real, real.ln()];
        v.extend(controls(l));
        v.extend(period_dummies(l.issue_bucket));
        rows.push((l.body_type, v));
    }
    let lagged_s = |l: &CarListing, d: Dataset| {
        let fb = lag_source(l.issue_bucket).ok()?;
        series.get(&d)?.get(fb).map(|p| p.mean)
    };

    let names = variable_names();
    let bodies: BTreeSet<BodyType> = listings.iter().map(|l| l.body_type).collect();
    let mut body_types = Vec::new();
    for b in bodies {
        let members: Vec<usize> = (0..listings.len()).filter(|&i| rows[i].0 == b).collect();
        let mut variables: Vec<VariableStats> = names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let vals: Vec<f64> = members.iter().map(|&i| rows[i].1[j]).collect();
                VariableStats::of(name.clone(), &vals)
            })
            .collect();
        for d in Dataset::ALL {
            let vals: Vec<f64> = members.iter().filter_map(|&i| lagged_s(&listings[i], d)).collect();
            if !vals.is_empty() {
                variables.push(VariableStats::of(format!("S_{d}"), &vals));
            }
        }
        body_types.push(BodyTypeStats {
            body_type: b,
            n_listings: members.len(),
            variables,
        });
    }

    let checks = Dataset::ALL
        .iter()
        .filter_map(|d| series.get(d))
        .map(|s| {
            let vals: Vec<f64> = s.points.values().map(|p| p.mean).collect();
            let stats = (!vals.is_empty()).then(|| VariableStats::of("S", &vals));
            SeriesCheck {
                dataset: s.dataset,
                points: vals.len(),
                mean: stats.as_ref().map(|v| v.mean),
                min: stats.as_ref().map(|v| v.min),
                max: stats.as_ref().map(|v| v.max),
                out_of_range: s
                    .points
                    .iter()
                    .filter(|(_, p)| !(-SCORE_BOUND..=SCORE_BOUND).contains(&p.mean))
                    .map(|(b, p)| format!("{b}={}", p.mean))
                    .collect(),
                within_reference_band: stats
                    .as_ref()
                    .is_some_and(|v| v.min >= SUMMARY_BAND.0 && v.max <= SUMMARY_BAND.1),
            }
        })
        .collect();

    let mut corr_names: Vec<String> = names[1..].to_vec();
    corr_names.push("S".into());
    let correlations = Dataset::ALL
        .into_iter()
        .filter(|d| series.contains_key(d))
        .map(|d| {
            let data: Vec<Vec<f64>> = listings
                .iter()
                .zip(&rows)
                .filter_map(|(l, (_, v))| {
                    let s = lagged_s(l, d)?;
                    let mut row = v[1..].to_vec();
                    row.push(s);
                    Some(row)
                })
                .collect();
            correlation_table(d, corr_names.clone(), &data)
        })
        .collect();

    Ok(DescriptiveReport {
        body_types,
        series: checks,
        correlations,
    })
}

fn correlation_table(dataset: Dataset, variables: Vec<String>, data: &[Vec<f64>]) -> CorrelationTable {
    let k = variables.len();
    let n = data.len();
    let means: Vec<f64> = (0..k)
        .map(|j| data.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![vec![0.0; k]; k];
    for row in data {
        for a in 0..k {
            for b in a..k {
                cov[a][b] += (row[a] - means[a]) * (row[b] - means[b]);
            }
        }
    }
    let r = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| {
                    let (lo, hi) = (a.min(b), a.max(b));
                    let denom = (cov[lo][lo] * cov[hi][hi]).sqrt();
                    (denom > 0.0).then(|| (cov[lo][hi] / denom).clamp(-1.0, 1.0))
                })
                .collect()
        })
        .collect();
    CorrelationTable {
        dataset,
        n,
        variables,
        r,
    }
}

fn cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3}")
    } else {
        "NA".into()
    }
}

impl DescriptiveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), StudyError> {
        let err = |e: csv::Error| StudyError::Input {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(["body_type", "variable", "n", "mean", "std", "min", "max"])
            .map_err(err)?;
        for b in &self.body_types {
            for v in &b.variables {
                w.write_record([
                    b.body_type.to_string(),
                    v.variable.clone(),
                    v.n.to_string(),
                    v.mean.to_string(),
                    v.std.to_string(),
                    v.min.to_string(),
                    v.max.to_string(),
                ])
                .map_err(err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn range_violations(&self) -> impl Iterator<Item = (Dataset, &str)> {
        self.series
            .iter()
            .flat_map(|c| c.out_of_range.iter().map(move |s| (c.dataset, s.as_str())))
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for b in &self.body_types {
            let _ = writeln!(out, "{} ({}), n = {}", b.body_type, b.body_type.description(), b.n_listings);
            let _ = writeln!(out, "{:<14}{:>8}{:>14}{:>14}{:>14}{:>14}", "", "n", "mean", "std", "min", "max");
            for v in &b.variables {
                let _ = writeln!(
                    out,
                    "{:<14}{:>8}{:>14}{:>14}{:>14}{:>14}",
                    v.variable,
                    v.n,
                    cell(v.mean),
                    cell(v.std),
                    cell(v.min),
                    cell(v.max)
                );
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "Sentiment series (reference band {:.2}-{:.2}, advisory only)",
            SUMMARY_BAND.0, SUMMARY_BAND.1
        );
        for c in &self.series {
            let f = |v: Option<f64>| v.map(cell).unwrap_or_else(|| "NA".into());
            let _ = writeln!(
                out,
                "  {}: {} points, mean {}, min {}, max {}{}",
                c.dataset,
                c.points,
                f(c.mean),
                f(c.min),
                f(c.max),
                if c.within_reference_band { "" } else { "  [outside reference band]" }
            );
            for v in &c.out_of_range {
                let _ = writeln!(out, "    OUT OF RANGE [-2, 2]: {v}");
            }
        }
        for t in &self.correlations {
            let _ = writeln!(out, "\nCorrelations, {} (n = {})", t.dataset, t.n);
            let _ = write!(out, "{:<14}", "");
            for v in &t.variables {
                let _ = write!(out, "{v:>9}");
            }
            out.push('\n');
            for (name, row) in t.variables.iter().zip(&t.r) {
                let _ = write!(out, "{name:<14}");
                for r in row {
                    let _ = write!(out, "{:>9}", r.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into()));
                }
                out.push('\n');
            }
        }
        out
    }
}
