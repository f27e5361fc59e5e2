//! Half-month calendar.
//!
//! Each month is split into days 1–15 (`H1`) and 16–end (`H2`), except March
//! 2011, which is split at the disaster date into 1–10 (`PRE`) and 11–31
//! (`POST`).

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const SPLIT_YEAR: i32 = 2011;
pub const SPLIT_MONTH: u32 = 3;
/// First day of the post-disaster part of March 2011.
pub const SPLIT_DAY: u32 = 11;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CalendarError {
    #[error("month {0} out of range 1-12")]
    BadMonth(u32),
    #[error("{half} is not a valid half for {year}-{month:02}")]
    BadHalf { year: i32, month: u32, half: Half },
    #[error("cannot parse bucket {0:?}")]
    Parse(String),
    #[error("bucket {0} has no one-month counterpart")]
    SplitBucket(HalfMonthBucket),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Half {
    H1,
    H2,
    Mar11Pre,
    Mar11Post,
}

impl Half {
    fn position(self) -> u8 {
        match self {
            Half::H1 | Half::Mar11Pre => 0,
            Half::H2 | Half::Mar11Post => 1,
        }
    }

    pub fn is_split(self) -> bool {
        matches!(self, Half::Mar11Pre | Half::Mar11Post)
    }
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Half::H1 => "H1",
            Half::H2 => "H2",
            Half::Mar11Pre => "PRE",
            Half::Mar11Post => "POST",
        })
    }
}

impl FromStr for Half {
    type Err = CalendarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "H1" | "1" => Ok(Half::H1),
            "H2" | "2" => Ok(Half::H2),
            "PRE" | "MAR11_PRE" => Ok(Half::Mar11Pre),
            "POST" | "MAR11_POST" => Ok(Half::Mar11Post),
            _ => Err(CalendarError::Parse(s.to_string())),
        }
    }
}

fn is_split_month(year: i32, month: u32) -> bool {
    year == SPLIT_YEAR && month == SPLIT_MONTH
}

fn days_in_month(year: i32, month: u32) -> u32 {
    let (ny, nm) = if month == 12 { (year + 1, 1) } else { (year, month + 1) };
    NaiveDate::from_ymd_opt(ny, nm, 1)
        .and_then(|d| d.pred_opt())
        .map(|d| d.day())
        .expect("valid calendar month")
}

/// A half-month period. Totally ordered; consecutive buckets tile the
/// timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HalfMonthBucket {
    year: i32,
    month: u32,
    half: Half,
}

impl HalfMonthBucket {
    pub fn new(year: i32, month: u32, half: Half) -> Result<Self, CalendarError> {
        if !(1..=12).contains(&month) {
            return Err(CalendarError::BadMonth(month));
        }
        if half.is_split() != is_split_month(year, month) {
            return Err(CalendarError::BadHalf { year, month, half });
        }
        Ok(Self { year, month, half })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    pub fn half(&self) -> Half {
        self.half
    }

    /// The bucket covering a calendar date.
    pub fn of_date(date: NaiveDate) -> Self {
        let (year, month, day) = (date.year(), date.month(), date.day());
        let half = if is_split_month(year, month) {
            if day < SPLIT_DAY {
                Half::Mar11Pre
            } else {
                Half::Mar11Post
            }
        } else if day <= 15 {
            Half::H1
        } else {
            Half::H2
        };
        Self { year, month, half }
    }

    /// First and last calendar day covered.
    pub fn day_span(&self) -> (NaiveDate, NaiveDate) {
        let (first, last) = match self.half {
            Half::H1 => (1, 15),
            Half::H2 => (16, days_in_month(self.year, self.month)),
            Half::Mar11Pre => (1, SPLIT_DAY - 1),
            Half::Mar11Post => (SPLIT_DAY, days_in_month(self.year, self.month)),
        };
        let d = |day| NaiveDate::from_ymd_opt(self.year, self.month, day).expect("in range");
        (d(first), d(last))
    }

    pub fn next(&self) -> Self {
        let (_, last) = self.day_span();
        Self::of_date(last.succ_opt().expect("date overflow"))
    }

    pub fn prev(&self) -> Self {
        let (first, _) = self.day_span();
        Self::of_date(first.pred_opt().expect("date underflow"))
    }

    /// Same half, `delta` calendar months later (negative for earlier).
    ///
    /// Fails for the two March-2011 buckets and for any target landing in
    /// March 2011, where no plain H1/H2 bucket exists.
    pub fn shift_months(&self, delta: i32) -> Result<Self, CalendarError> {
        if self.half.is_split() {
            return Err(CalendarError::SplitBucket(*self));
        }
        let idx = self.year * 12 + (self.month as i32 - 1) + delta;
        let (year, month) = (idx.div_euclid(12), idx.rem_euclid(12) as u32 + 1);
        if is_split_month(year, month) {
            return Err(CalendarError::SplitBucket(*self));
        }
        Ok(Self {
            year,
            month,
            half: self.half,
        })
    }

    fn sort_key(&self) -> (i32, u32, u8) {
        (self.year, self.month, self.half.position())
    }
}

impl PartialOrd for HalfMonthBucket {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HalfMonthBucket {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for HalfMonthBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{:02}-{}", self.year, self.month, self.half)
    }
}

impl FromStr for HalfMonthBucket {
    type Err = CalendarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CalendarError::Parse(s.to_string());
        let mut parts = s.trim().splitn(3, '-');
        let year = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let month = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let half = parts.next().ok_or_else(bad)?.parse()?;
        Self::new(year, month, half)
    }
}

impl Serialize for HalfMonthBucket {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HalfMonthBucket {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Bucket of a timestamp. Time of day is irrelevant.
pub fn bucket_of(timestamp: NaiveDateTime) -> HalfMonthBucket {
    HalfMonthBucket::of_date(timestamp.date())
}

/// Inclusive range of buckets, written `2011-04-H2..2011-09-H2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BucketRange {
    pub start: HalfMonthBucket,
    pub end: HalfMonthBucket,
}

impl BucketRange {
    pub fn new(start: HalfMonthBucket, end: HalfMonthBucket) -> Result<Self, CalendarError> {
        if start > end {
            return Err(CalendarError::Parse(format!("range {start}..{end} is reversed")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, bucket: HalfMonthBucket) -> bool {
        self.start <= bucket && bucket <= self.end
    }

    /// All buckets in order, endpoints included.
    pub fn buckets(&self) -> Vec<HalfMonthBucket> {
        let mut out = vec![self.start];
        let mut b = self.start;
        while b < self.end {
            b = b.next();
            out.push(b);
        }
        out
    }
}

impl fmt::Display for BucketRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl FromStr for BucketRange {
    type Err = CalendarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| CalendarError::Parse(s.to_string()))?;
        Self::new(a.parse()?, b.parse()?)
    }
}

impl Serialize for BucketRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BucketRange {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `true` iff `range.start <= bucket <= range.end`.
pub fn in_study_range(bucket: HalfMonthBucket, range: &BucketRange) -> bool {
    range.contains(bucket)
}
