//! Used-car listings and the automobile price deflator.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::StudyError;
use crate::corpus::{BucketRange, Half, HalfMonthBucket};

/// Upper sanity bound on vehicle age.
pub const MAX_AGE_YEARS: f64 = 30.0;

/// Light-motor-vehicle body types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BodyType {
    LR,
    LC,
    LT,
    LO,
}

impl BodyType {
    pub const ALL: [BodyType; 4] = [BodyType::LR, BodyType::LC, BodyType::LT, BodyType::LO];

    pub fn description(self) -> &'static str {
        match self {
            BodyType::LR => "Light Motor Vehicle RV",
            BodyType::LC => "Light Motor Vehicle Cab Van",
            BodyType::LT => "Light Motor Vehicle Truck",
            BodyType::LO => "Light Motor Vehicle Others",
        }
    }
}

impl fmt::Display for BodyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for BodyType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LR" => Ok(BodyType::LR),
            "LC" => Ok(BodyType::LC),
            "LT" => Ok(BodyType::LT),
            "LO" | "LA" => Ok(BodyType::LO),
            other => Err(format!("unknown body type {other:?}")),
        }
    }
}

/// Fuel type; gasoline is the base category of the fuel dummies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fuel {
    Gasoline,
    Diesel,
    GasHybrid,
    Ev,
    /// LPG, CNG or fuel cell.
    Other,
}

impl fmt::Display for Fuel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fuel::Gasoline => "gasoline",
            Fuel::Diesel => "diesel",
            Fuel::GasHybrid => "gas_hybrid",
            Fuel::Ev => "ev",
            Fuel::Other => "other",
        })
    }
}

impl FromStr for Fuel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace([' ', '-'], "_").as_str() {
            "gasoline" | "petrol" | "gas" => Ok(Fuel::Gasoline),
            "diesel" => Ok(Fuel::Diesel),
            "gas_hybrid" | "hybrid" => Ok(Fuel::GasHybrid),
            "ev" | "electric" => Ok(Fuel::Ev),
            "other" | "lpg" | "cng" | "fc" | "other_lpg_cng_fc" => Ok(Fuel::Other),
            other => Err(format!("unknown fuel {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarListing {
    pub listing_id: String,
    pub body_type: BodyType,
    /// Nominal price in yen.
    pub nominal_price: f64,
    pub issue_bucket: HalfMonthBucket,
    pub transmission_automatic: bool,
    pub fuel: Fuel,
    pub age_years: f64,
    pub over_100k_km: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct ListingRecord {
    listing_id: String,
    body_type: String,
    nominal_price: f64,
    issue_year: i32,
    issue_month: u32,
    issue_half: String,
    transmission: String,
    fuel: String,
    age_years: f64,
    over_100k_km: String,
}

fn parse_flag(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Ok(true),
        "0" | "false" | "no" | "n" => Ok(false),
        other => Err(format!("bad boolean {other:?}")),
    }
}

fn parse_transmission(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "automatic" | "at" | "auto" | "cvt" => Ok(true),
        "manual" | "mt" | "other" => Ok(false),
        _ => parse_flag(s),
    }
}

impl ListingRecord {
    fn into_listing(self, market: &BucketRange) -> Result<CarListing, String> {
        let half: Half = self.issue_half.parse().map_err(|e| format!("{e}"))?;
        let issue_bucket = HalfMonthBucket::new(self.issue_year, self.issue_month, half)
            .map_err(|e| e.to_string())?;
        if !market.contains(issue_bucket) {
            return Err(format!("issue bucket {issue_bucket} outside market range {market}"));
        }
        if !(self.nominal_price > 0.0 && self.nominal_price.is_finite()) {
            return Err(format!("nominal price {} is not positive", self.nominal_price));
        }
        if !(0.0..=MAX_AGE_YEARS).contains(&self.age_years) {
            return Err(format!("age {} outside [0, {MAX_AGE_YEARS}]", self.age_years));
        }
        if self.listing_id.trim().is_empty() {
            return Err("empty listing_id".into());
        }
        Ok(CarListing {
            listing_id: self.listing_id.trim().to_string(),
            body_type: self.body_type.parse()?,
            nominal_price: self.nominal_price,
            issue_bucket,
            transmission_automatic: parse_transmission(&self.transmission)?,
            fuel: self.fuel.parse()?,
            age_years: self.age_years,
            over_100k_km: parse_flag(&self.over_100k_km)?,
        })
    }

    fn from_listing(l: &CarListing) -> Self {
        Self {
            listing_id: l.listing_id.clone(),
            body_type: l.body_type.to_string(),
            nominal_price: l.nominal_price,
            issue_year: l.issue_bucket.year(),
            issue_month: l.issue_bucket.month(),
            issue_half: l.issue_bucket.half().to_string(),
            transmission: if l.transmission_automatic { "automatic" } else { "manual" }.into(),
            fuel: l.fuel.to_string(),
            age_years: l.age_years,
            over_100k_km: (l.over_100k_km as u8).to_string(),
        }
    }
}

fn csv_error(path: &Path, line: usize, message: impl Into<String>) -> StudyError {
    StudyError::Input {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads the listings CSV. Issue buckets must fall inside `market`.
pub fn load_listings(path: &Path, market: &BucketRange) -> Result<Vec<CarListing>, StudyError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, 0, e.to_string()))?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, rec) in reader.deserialize::<ListingRecord>().enumerate() {
        let line = i + 2;
        let listing = rec
            .map_err(|e| csv_error(path, line, e.to_string()))?
            .into_listing(market)
            .map_err(|m| csv_error(path, line, m))?;
        if !seen.insert(listing.listing_id.clone()) {
            return Err(csv_error(path, line, format!("duplicate listing_id {}", listing.listing_id)));
        }
        out.push(listing);
    }
    Ok(out)
}

pub fn write_listings(listings: &[CarListing], path: &Path) -> Result<(), StudyError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, 0, e.to_string()))?;
    for l in listings {
        w.serialize(ListingRecord::from_listing(l))
            .map_err(|e| csv_error(path, 0, e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Monthly automobile CPI (base 100).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeflatorTable {
    index: BTreeMap<(i32, u32), f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DeflatorRecord {
    year: i32,
    month: u32,
    index: f64,
}

impl DeflatorTable {
    pub fn new(rows: impl IntoIterator<Item = ((i32, u32), f64)>) -> Result<Self, StudyError> {
        let mut index = BTreeMap::new();
        for ((y, m), v) in rows {
            if !(v > 0.0 && v.is_finite()) || !(1..=12).contains(&m) {
                return Err(StudyError::Input {
                    path: "<deflators>".into(),
                    line: 0,
                    message: format!("bad deflator row {y}-{m}: {v}"),
                });
            }
            index.insert((y, m), v);
        }
        Ok(Self { index })
    }

    pub fn load(path: &Path) -> Result<Self, StudyError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, 0, e.to_string()))?;
        let mut index = BTreeMap::new();
        for (i, rec) in reader.deserialize::<DeflatorRecord>().enumerate() {
            let line = i + 2;
            let r = rec.map_err(|e| csv_error(path, line, e.to_string()))?;
            if !(r.index > 0.0 && r.index.is_finite()) {
                return Err(csv_error(path, line, format!("index {} must be positive", r.index)));
            }
            if !(1..=12).contains(&r.month) {
                return Err(csv_error(path, line, format!("month {} out of range", r.month)));
            }
            if index.insert((r.year, r.month), r.index).is_some() {
                return Err(csv_error(path, line, format!("duplicate row {}-{:02}", r.year, r.month)));
            }
        }
        Ok(Self { index })
    }

    pub fn save(&self, path: &Path) -> Result<(), StudyError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, 0, e.to_string()))?;
        for (&(year, month), &index) in &self.index {
            w.serialize(DeflatorRecord { year, month, index })
                .map_err(|e| csv_error(path, 0, e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn get(&self, year: i32, month: u32) -> Option<f64> {
        self.index.get(&(year, month)).copied()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

/// Real price: `nominal × 100 / index(year, month)`.
pub fn deflate_price(
    nominal: f64,
    issue_bucket: HalfMonthBucket,
    deflators: &DeflatorTable,
) -> Result<f64, StudyError> {
    let (y, m) = (issue_bucket.year(), issue_bucket.month());
    let index = deflators
        .get(y, m)
        .ok_or(StudyError::MissingDeflator { year: y, month: m })?;
    Ok(nominal * 100.0 / index)
}
