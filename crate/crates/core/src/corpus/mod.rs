//! Document model, ingestion validation and corpus statistics.

pub mod bucket;

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub use bucket::{bucket_of, in_study_range, BucketRange, CalendarError, Half, HalfMonthBucket};

/// Offset applied to timestamps that carry an explicit zone (JST, UTC+9).
const LOCAL_OFFSET_SECS: i32 = 9 * 3600;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("field `{field}` must be a string")]
    NotAString { field: &'static str },
    #[error("bad timestamp {0:?}")]
    BadTimestamp(String),
    #[error("unknown document kind {0:?} (expected post or comment)")]
    BadKind(String),
    #[error("document {0:?} has no text and no attachment")]
    EmptyText(String),
    #[error("duplicate doc_id {0:?}")]
    DuplicateId(String),
    #[error("line {line}: invalid JSON: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        source: Box<CorpusError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Post,
    Comment,
}

impl std::str::FromStr for DocKind {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "post" => Ok(DocKind::Post),
            "comment" => Ok(DocKind::Comment),
            _ => Err(CorpusError::BadKind(s.to_string())),
        }
    }
}

/// One post or comment, optionally with an attachment description.
///
/// Timestamps are local Japan time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub page_id: String,
    pub kind: DocKind,
    #[serde(with = "timestamp_format")]
    pub timestamp: NaiveDateTime,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attachment_text: Option<String>,
}

impl Document {
    pub fn bucket(&self) -> HalfMonthBucket {
        bucket_of(self.timestamp)
    }

    /// The body text followed by the attachment description, if any.
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.text.as_str()).chain(self.attachment_text.as_deref())
    }
}

mod timestamp_format {
    use chrono::NaiveDateTime;
    use serde::{Deserialize, Deserializer, Serializer};

    const FMT: &str = "%Y-%m-%dT%H:%M:%S";

    pub fn serialize<S: Serializer>(ts: &NaiveDateTime, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&ts.format(FMT))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDateTime, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_timestamp(&s).map_err(serde::de::Error::custom)
    }
}

/// Parses a timestamp into local Japan time.
///
/// Zone-less values are taken as already local; values with an offset are
/// converted to UTC+9. A bare date means midnight.
pub fn parse_timestamp(raw: &str) -> Result<NaiveDateTime, CorpusError> {
    let s = raw.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        let jst = FixedOffset::east_opt(LOCAL_OFFSET_SECS).expect("valid offset");
        return Ok(dt.with_timezone(&jst).naive_local());
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(dt);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .ok_or_else(|| CorpusError::BadTimestamp(raw.to_string()))
}

fn field<'a>(
    raw: &'a Map<String, Value>,
    name: &'static str,
    aliases: &[&str],
) -> Result<Option<&'a str>, CorpusError> {
    let value = std::iter::once(name)
        .chain(aliases.iter().copied())
        .find_map(|k| raw.get(k));
    match value {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.as_str())),
        Some(_) => Err(CorpusError::NotAString { field: name }),
    }
}

fn required<'a>(
    raw: &'a Map<String, Value>,
    name: &'static str,
    aliases: &[&str],
) -> Result<&'a str, CorpusError> {
    field(raw, name, aliases)?.ok_or(CorpusError::MissingField(name))
}

/// Validates one raw corpus record.
///
/// Accepted keys: `id`/`doc_id`, `page`/`page_id`, `kind`, `ts`/`timestamp`,
/// `text`, and optionally `attachment`/`attachment_text`. Text fields are
/// trimmed; an attachment that is empty after trimming is dropped.
pub fn validate_document(raw: &Map<String, Value>) -> Result<Document, CorpusError> {
    let doc_id = required(raw, "id", &["doc_id"])?.trim().to_string();
    if doc_id.is_empty() {
        return Err(CorpusError::MissingField("id"));
    }
    let page_id = required(raw, "page", &["page_id"])?.trim().to_string();
    let kind = required(raw, "kind", &[])?.parse()?;
    let timestamp = parse_timestamp(required(raw, "ts", &["timestamp"])?)?;
    let text = required(raw, "text", &[])?.trim().to_string();
    let attachment_text = field(raw, "attachment", &["attachment_text"])?
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string);
    if text.is_empty() && attachment_text.is_none() {
        return Err(CorpusError::EmptyText(doc_id));
    }
    Ok(Document {
        doc_id,
        page_id,
        kind,
        timestamp,
        text,
        attachment_text,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub posts: usize,
    pub comments: usize,
    pub by_bucket: BTreeMap<HalfMonthBucket, usize>,
}

impl CorpusStats {
    pub fn total(&self) -> usize {
        self.posts + self.comments
    }
}

/// An immutable, validated collection of documents with unique ids.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    documents: Vec<Document>,
    stats: CorpusStats,
}

impl Corpus {
    pub fn from_documents(documents: Vec<Document>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(documents.len());
        let mut stats = CorpusStats::default();
        for doc in &documents {
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(CorpusError::DuplicateId(doc.doc_id.clone()));
            }
            match doc.kind {
                DocKind::Post => stats.posts += 1,
                DocKind::Comment => stats.comments += 1,
            }
            *stats.by_bucket.entry(doc.bucket()).or_default() += 1;
        }
        Ok(Self { documents, stats })
    }

    /// Reads a JSON Lines corpus. Blank lines are skipped; errors carry the
    /// 1-based line number.
    pub fn load_jsonl(path: &Path) -> Result<Self, CorpusError> {
        let reader = BufReader::new(File::open(path)?);
        let mut docs = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: Map<String, Value> = serde_json::from_str(&line)
                .map_err(|source| CorpusError::Json { line: line_no, source })?;
            let at = |source| CorpusError::AtLine {
                line: line_no,
                source: Box::new(source),
            };
            let doc = validate_document(&raw).map_err(at)?;
            if !seen.insert(doc.doc_id.clone()) {
                return Err(at(CorpusError::DuplicateId(doc.doc_id)));
            }
            docs.push(doc);
        }
        Self::from_documents(docs)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), CorpusError> {
        write_jsonl(&self.documents, path)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    /// Row count and per-bucket histogram, one line per bucket.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "documents: {} (posts {}, comments {})\n",
            self.stats.total(),
            self.stats.posts,
            self.stats.comments
        );
        for (bucket, n) in &self.stats.by_bucket {
            let _ = writeln!(out, "  {:<13} {n:>8}", bucket.to_string());
        }
        out
    }
}

pub fn write_jsonl(docs: &[Document], path: &Path) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(File::create(path)?);
    for doc in docs {
        serde_json::to_writer(&mut w, doc).map_err(|e| CorpusError::Io(e.into()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn raw(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn well_formed_record() {
        let doc = validate_document(&raw(json!({
            "id": "a1", "page": "p", "kind": "post", "ts": "2011-04-20T10:00", "text": " hello "
        })))
        .unwrap();
        assert_eq!(doc.text, "hello");
        assert_eq!(doc.bucket(), "2011-04-H2".parse().unwrap());
        assert_eq!(doc.attachment_text, None);
    }

    #[test]
    fn invalid_date() {
        let err = validate_document(&raw(json!({
            "id": "a1", "page": "p", "kind": "post", "ts": "2011-13-40", "text": "hello"
        })))
        .unwrap_err();
        assert!(matches!(err, CorpusError::BadTimestamp(_)));
    }

    #[test]
    fn attachment_carries_content() {
        let doc = validate_document(&raw(json!({
            "id": "a1", "page": "p", "kind": "comment", "ts": "2011-04-20",
            "text": "", "attachment": "photo caption"
        })))
        .unwrap();
        assert_eq!(doc.attachment_text.as_deref(), Some("photo caption"));
    }

    #[test]
    fn empty_text_without_attachment() {
        let err = validate_document(&raw(json!({
            "id": "a1", "page": "p", "kind": "post", "ts": "2011-04-20", "text": "  ", "attachment": " "
        })))
        .unwrap_err();
        assert!(matches!(err, CorpusError::EmptyText(_)));
    }

    #[test]
    fn missing_and_mistyped_fields() {
        let err = validate_document(&raw(json!({"id": "a", "kind": "post", "ts": "2011-04-20", "text": "x"})))
            .unwrap_err();
        assert!(matches!(err, CorpusError::MissingField("page")));
        let err = validate_document(&raw(
            json!({"id": "a", "page": 3, "kind": "post", "ts": "2011-04-20", "text": "x"}),
        ))
        .unwrap_err();
        assert!(matches!(err, CorpusError::NotAString { field: "page" }));
        let err = validate_document(&raw(
            json!({"id": "a", "page": "p", "kind": "share", "ts": "2011-04-20", "text": "x"}),
        ))
        .unwrap_err();
        assert!(matches!(err, CorpusError::BadKind(_)));
    }

    #[test]
    fn offsets_convert_to_japan_time() {
        // 23:30 UTC on 15 April is 08:30 on 16 April in Japan.
        let ts = parse_timestamp("2011-04-15T23:30:00Z").unwrap();
        assert_eq!(bucket_of(ts), "2011-04-H2".parse().unwrap());
        let ts = parse_timestamp("2011-04-15T23:30:00").unwrap();
        assert_eq!(bucket_of(ts), "2011-04-H1".parse().unwrap());
    }

    #[test]
    fn duplicates_rejected() {
        let d = validate_document(&raw(json!({
            "id": "a1", "page": "p", "kind": "post", "ts": "2011-04-20", "text": "x"
        })))
        .unwrap();
        let err = Corpus::from_documents(vec![d.clone(), d]).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId(_)));
    }

    #[test]
    fn jsonl_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(
            &path,
            "{\"id\":\"a\",\"page\":\"p\",\"kind\":\"post\",\"ts\":\"2011-04-20\",\"text\":\"x\"}\n\
             \n\
             {\"id\":\"b\",\"page\":\"p\",\"kind\":\"post\",\"ts\":\"2011-02-30\",\"text\":\"x\"}\n",
        )
        .unwrap();
        let err = Corpus::load_jsonl(&path).unwrap_err();
        assert!(matches!(err, CorpusError::AtLine { line: 3, .. }), "{err}");
    }

    #[test]
    fn stats_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let docs: Vec<Document> = (0..5)
            .map(|i| Document {
                doc_id: format!("d{i}"),
                page_id: "p".into(),
                kind: if i % 2 == 0 { DocKind::Post } else { DocKind::Comment },
                timestamp: parse_timestamp(&format!("2011-04-{:02}T12:00", 10 + i * 3)).unwrap(),
                text: format!("text {i}"),
                attachment_text: (i == 2).then(|| "caption".to_string()),
            })
            .collect();
        let corpus = Corpus::from_documents(docs).unwrap();
        assert_eq!(corpus.stats().total(), corpus.len());
        assert_eq!(corpus.stats().by_bucket.values().sum::<usize>(), 5);
        corpus.write_jsonl(&path).unwrap();
        let back = Corpus::load_jsonl(&path).unwrap();
        assert_eq!(back.documents(), corpus.documents());
        assert!(corpus.summary().starts_with("documents: 5"));
    }
}
