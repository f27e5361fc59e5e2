//! Corpus partitioning into the four disaster-related datasets.
//!
//! * D1: documents naming a stricken area (gazetteer match)
//! * D2: documents containing a curated salient term
//! * D3: D1 ∩ D2
//! * D4: D2 ∖ D3

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use aho_corasick::AhoCorasick;
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::{is_nfc, UnicodeNormalization};

use crate::corpus::{Corpus, Document};
use crate::lexicon::{read_word_list, LexiconError};
use crate::numerics::{chi_square_2x2, ContingencyTable2x2, NumericsError};
use crate::sentiment::Tokenizer;

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error(transparent)]
    WordList(#[from] LexiconError),
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("matcher construction failed: {0}")]
    Matcher(#[from] aho_corasick::BuildError),
    #[error("partition invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dataset {
    D1,
    D2,
    D3,
    D4,
}

impl Dataset {
    pub const ALL: [Dataset; 4] = [Dataset::D1, Dataset::D2, Dataset::D3, Dataset::D4];

    pub fn description(self) -> &'static str {
        match self {
            Dataset::D1 => "geo-info",
            Dataset::D2 => "disaster-interest",
            Dataset::D3 => "geo-info and interest",
            Dataset::D4 => "interest only",
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}", *self as u8 + 1)
    }
}

impl FromStr for Dataset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "D1" | "DATASET1" => Ok(Dataset::D1),
            "D2" | "DATASET2" => Ok(Dataset::D2),
            "D3" | "DATASET3" => Ok(Dataset::D3),
            "D4" | "DATASET4" => Ok(Dataset::D4),
            other => Err(format!("unknown dataset {other:?}")),
        }
    }
}

fn nfc(s: &str) -> std::borrow::Cow<'_, str> {
    if is_nfc(s) {
        std::borrow::Cow::Borrowed(s)
    } else {
        std::borrow::Cow::Owned(s.nfc().collect())
    }
}

/// Substring matcher over an NFC-normalized phrase set.
#[derive(Debug, Clone)]
pub struct PhraseMatcher {
    phrases: BTreeSet<String>,
    automaton: Option<AhoCorasick>,
}

impl PhraseMatcher {
    pub fn new<I, S>(phrases: I) -> Result<Self, PartitionError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let phrases: BTreeSet<String> = phrases
            .into_iter()
            .map(|p| nfc(p.as_ref().trim()).into_owned())
            .filter(|p| !p.is_empty())
            .collect();
        let automaton = if phrases.is_empty() {
            None
        } else {
            Some(AhoCorasick::new(&phrases)?)
        };
        Ok(Self { phrases, automaton })
    }

    pub fn from_file(path: &Path) -> Result<Self, PartitionError> {
        Self::new(read_word_list(path)?)
    }

    pub fn phrases(&self) -> &BTreeSet<String> {
        &self.phrases
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn is_match(&self, text: &str) -> bool {
        match &self.automaton {
            Some(ac) => ac.is_match(nfc(text).as_ref()),
            None => false,
        }
    }

    /// True iff any phrase occurs in the document's text or attachment.
    pub fn matches_document(&self, doc: &Document) -> bool {
        doc.texts().any(|t| self.is_match(t))
    }
}

/// Area names of the stricken region.
pub type Gazetteer = PhraseMatcher;

pub fn geo_match(doc: &Document, gazetteer: &Gazetteer) -> bool {
    gazetteer.matches_document(doc)
}

pub fn interest_match(doc: &Document, termset: &PhraseMatcher) -> bool {
    termset.matches_document(doc)
}

/// How term frequencies are counted for the salience test.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Token occurrences; totals are all tokens.
    #[default]
    Tokens,
    /// Documents containing the term; totals are document counts.
    Documents,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermCounts {
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl TermCounts {
    fn merge(mut self, other: TermCounts) -> TermCounts {
        self.total += other.total;
        for (k, v) in other.counts {
            *self.counts.entry(k).or_default() += v;
        }
        self
    }
}

/// Counts candidate terms (tokens longer than one character) across a
/// corpus, including attachment descriptions.
pub fn count_terms<T: Tokenizer + ?Sized>(corpus: &Corpus, tokenizer: &T, mode: CountMode) -> TermCounts {
    corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let mut local: HashMap<String, u64> = HashMap::new();
            let mut total = 0u64;
            for text in doc.texts() {
                for clause in tokenizer.tokenize(text) {
                    total += clause.tokens.len() as u64;
                    for tok in clause.tokens {
                        if tok.chars().count() > 1 {
                            *local.entry(tok).or_default() += 1;
                        }
                    }
                }
            }
            match mode {
                CountMode::Tokens => TermCounts {
                    counts: local.into_iter().collect(),
                    total,
                },
                CountMode::Documents => TermCounts {
                    counts: local.into_keys().map(|k| (k, 1)).collect(),
                    total: 1,
                },
            }
        })
        .reduce(TermCounts::default, TermCounts::merge)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSelection {
    pub term: String,
    pub count_event: u64,
    pub total_event: u64,
    pub count_base: u64,
    pub total_base: u64,
    pub chi2: f64,
    pub p_value: f64,
    pub selected: bool,
}

impl TermSelection {
    pub fn event_ratio(&self) -> f64 {
        self.count_event as f64 / self.total_event as f64
    }

    pub fn base_ratio(&self) -> f64 {
        self.count_base as f64 / self.total_base as f64
    }
}

/// Terms whose event-corpus ratio is significantly larger than baseline.
///
/// Each candidate gets a 2×2 table (term vs other tokens, event vs base).
/// Degenerate tables are skipped with a warning. Output is sorted by chi2
/// descending, then by term.
pub fn select_salient_terms(event: &TermCounts, base: &TermCounts, alpha: f64) -> Vec<TermSelection> {
    let candidates: BTreeSet<&String> = event.counts.keys().chain(base.counts.keys()).collect();
    let mut out: Vec<TermSelection> = candidates
        .into_par_iter()
        .filter_map(|term| {
            let a = event.counts.get(term).copied().unwrap_or(0);
            let c = base.counts.get(term).copied().unwrap_or(0);
            let table = ContingencyTable2x2::new(
                a,
                event.total.saturating_sub(a),
                c,
                base.total.saturating_sub(c),
            );
            match chi_square_2x2(table) {
                Ok(chi) => {
                    let larger =
                        (a as u128) * (base.total as u128) > (c as u128) * (event.total as u128);
                    Some(TermSelection {
                        term: term.clone(),
                        count_event: a,
                        total_event: event.total,
                        count_base: c,
                        total_base: base.total,
                        chi2: chi.statistic,
                        p_value: chi.p_value,
                        selected: chi.p_value < alpha && larger,
                    })
                }
                Err(NumericsError::DegenerateTable(t)) => {
                    warn!("skipping term {term:?}: degenerate table {t:?}");
                    None
                }
                Err(e) => {
                    warn!("skipping term {term:?}: {e}");
                    None
                }
            }
        })
        .collect();
    out.sort_by(|x, y| y.chi2.total_cmp(&x.chi2).then_with(|| x.term.cmp(&y.term)));
    out
}

/// Selected terms that also appear on the curated allowlist.
pub fn curate_terms(selection: &[TermSelection], allowlist: &BTreeSet<String>) -> BTreeSet<String> {
    selection
        .iter()
        .filter(|s| s.selected && allowlist.contains(&s.term))
        .map(|s| s.term.clone())
        .collect()
}

pub fn write_selection_csv(selection: &[TermSelection], path: &Path) -> Result<(), PartitionError> {
    let p = path.display().to_string();
    let err = |source| PartitionError::Csv {
        path: p.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record([
        "term",
        "count_event",
        "total_event",
        "count_base",
        "total_base",
        "chi2",
        "p",
        "selected",
    ])
    .map_err(err)?;
    for s in selection {
        w.write_record([
            s.term.clone(),
            s.count_event.to_string(),
            s.total_event.to_string(),
            s.count_base.to_string(),
            s.total_base.to_string(),
            s.chi2.to_string(),
            s.p_value.to_string(),
            s.selected.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| err(e.into()))
}

/// Dataset membership of one document.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionLabel {
    pub in_d1: bool,
    pub in_d2: bool,
}

impl PartitionLabel {
    pub fn new(geo: bool, interest: bool) -> Self {
        Self {
            in_d1: geo,
            in_d2: interest,
        }
    }

    pub fn in_d3(&self) -> bool {
        self.in_d1 && self.in_d2
    }

    pub fn in_d4(&self) -> bool {
        self.in_d2 && !self.in_d3()
    }

    pub fn contains(&self, dataset: Dataset) -> bool {
        match dataset {
            Dataset::D1 => self.in_d1,
            Dataset::D2 => self.in_d2,
            Dataset::D3 => self.in_d3(),
            Dataset::D4 => self.in_d4(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub d1: usize,
    pub d2: usize,
    pub d3: usize,
    pub d4: usize,
}

impl PartitionSummary {
    /// Completes a summary from |D1|, |D2| and |D3|.
    pub fn from_overlap(d1: usize, d2: usize, d3: usize) -> Result<Self, PartitionError> {
        if d3 > d1.min(d2) {
            return Err(PartitionError::Invariant(format!(
                "|D3| = {d3} exceeds min(|D1|, |D2|) = {}",
                d1.min(d2)
            )));
        }
        Ok(Self {
            d1,
            d2,
            d3,
            d4: d2 - d3,
        })
    }

    pub fn count(&self, dataset: Dataset) -> usize {
        match dataset {
            Dataset::D1 => self.d1,
            Dataset::D2 => self.d2,
            Dataset::D3 => self.d3,
            Dataset::D4 => self.d4,
        }
    }

    pub fn check(&self) -> Result<(), PartitionError> {
        if self.d2 != self.d3 + self.d4 || self.d3 > self.d1.min(self.d2) {
            return Err(PartitionError::Invariant(format!("inconsistent summary {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Labeling {
    pub by_doc: BTreeMap<String, PartitionLabel>,
    pub summary: PartitionSummary,
}

pub fn summarize<'a>(labels: impl IntoIterator<Item = &'a PartitionLabel>) -> PartitionSummary {
    let mut s = PartitionSummary::default();
    for l in labels {
        s.d1 += l.in_d1 as usize;
        s.d2 += l.in_d2 as usize;
        s.d3 += l.in_d3() as usize;
        s.d4 += l.in_d4() as usize;
    }
    s
}

/// Labels every document. An empty termset puts nothing in D2.
pub fn label_corpus(
    corpus: &Corpus,
    gazetteer: &Gazetteer,
    termset: &PhraseMatcher,
) -> Result<Labeling, PartitionError> {
    if termset.is_empty() {
        warn!("interest termset is empty; D2, D3 and D4 will be empty");
    }
    let labels: Vec<PartitionLabel> = corpus
        .documents()
        .par_iter()
        .map(|doc| PartitionLabel::new(geo_match(doc, gazetteer), interest_match(doc, termset)))
        .collect();
    let summary = summarize(&labels);
    summary.check()?;
    let by_doc = corpus
        .documents()
        .iter()
        .zip(labels)
        .map(|(d, l)| (d.doc_id.clone(), l))
        .collect();
    Ok(Labeling { by_doc, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_timestamp, DocKind};
    use crate::sentiment::LongestMatchTokenizer;
    use proptest::prelude::*;

    fn doc(id: &str, text: &str, attachment: Option<&str>) -> Document {
        Document {
            doc_id: id.into(),
            page_id: "p".into(),
            kind: DocKind::Post,
            timestamp: parse_timestamp("2011-05-01").unwrap(),
            text: text.into(),
            attachment_text: attachment.map(str::to_string),
        }
    }

    fn counts(pairs: &[(&str, u64)], total: u64) -> TermCounts {
        TermCounts {
            counts: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            total,
        }
    }

    #[test]
    fn gazetteer_matching() {
        let g = Gazetteer::new(["Ishinomaki", "Kesennuma"]).unwrap();
        assert!(geo_match(&doc("a", "volunteering in Ishinomaki today", None), &g));
        assert!(!geo_match(&doc("b", "a quiet day in Osaka", None), &g));
        assert!(geo_match(&doc("c", "photo", Some("harbour at Kesennuma")), &g));
    }

    #[test]
    fn nfc_normalized_comparison() {
        // "ガ" composed vs decomposed (カ + combining dakuten)
        let g = Gazetteer::new(["ガス"]).unwrap();
        assert!(g.is_match("ｘカ\u{3099}ス"));
        let g = Gazetteer::new(["カ\u{3099}ス"]).unwrap();
        assert!(g.is_match("ガス"));
    }

    #[test]
    fn interest_terms_respect_allowlist() {
        let selection = select_salient_terms(
            &counts(&[("rebuild", 30), ("festival", 30)], 1000),
            &counts(&[("rebuild", 1), ("festival", 1)], 1000),
            0.05,
        );
        assert!(selection.iter().all(|s| s.selected));
        let allow: BTreeSet<String> = ["rebuild".to_string()].into();
        let termset = PhraseMatcher::new(curate_terms(&selection, &allow)).unwrap();
        assert!(interest_match(&doc("a", "we will rebuild", None), &termset));
        assert!(!interest_match(&doc("b", "festival tonight", None), &termset));
        assert!(interest_match(&doc("c", "", Some("rebuild")), &termset));
    }

    #[test]
    fn salient_term_examples() {
        let sel = select_salient_terms(&counts(&[("t", 30)], 1000), &counts(&[("t", 10)], 1000), 0.05);
        assert!((sel[0].chi2 - 10.204).abs() < 1e-3);
        assert!((sel[0].p_value - 0.0014).abs() < 1e-4);
        assert!(sel[0].selected);

        let sel = select_salient_terms(&counts(&[("t", 10)], 1000), &counts(&[("t", 10)], 1000), 0.05);
        assert_eq!(sel[0].chi2, 0.0);
        assert!(!sel[0].selected);

        let sel = select_salient_terms(&counts(&[("t", 10)], 1000), &counts(&[("t", 30)], 1000), 0.05);
        assert!(sel[0].chi2 > 10.0);
        assert!(!sel[0].selected);
    }

    #[test]
    fn degenerate_terms_skipped() {
        // a term whose count equals the total leaves no "other" tokens
        let sel = select_salient_terms(&counts(&[("x", 5)], 5), &counts(&[("x", 7)], 7), 0.05);
        assert!(sel.is_empty());
    }

    #[test]
    fn selection_sorted_by_chi2() {
        let sel = select_salient_terms(
            &counts(&[("a", 12), ("b", 50), ("c", 20)], 1000),
            &counts(&[("a", 10), ("b", 10), ("c", 10)], 1000),
            0.05,
        );
        let terms: Vec<&str> = sel.iter().map(|s| s.term.as_str()).collect();
        assert_eq!(terms, ["b", "c", "a"]);
    }

    #[test]
    fn term_counting_modes() {
        let corpus = Corpus::from_documents(vec![
            doc("a", "quake quake x", None),
            doc("b", "quake", Some("rebuild")),
        ])
        .unwrap();
        let tok = LongestMatchTokenizer::new(["quake", "rebuild"], Vec::<String>::new());
        let tc = count_terms(&corpus, &tok, CountMode::Tokens);
        assert_eq!(tc.total, 5);
        assert_eq!(tc.counts["quake"], 3);
        assert_eq!(tc.counts["rebuild"], 1);
        assert!(!tc.counts.contains_key("x"));
        let dc = count_terms(&corpus, &tok, CountMode::Documents);
        assert_eq!(dc.total, 2);
        assert_eq!(dc.counts["quake"], 2);
    }

    #[test]
    fn label_definitions() {
        let l = PartitionLabel::new(true, true);
        assert!(l.in_d1 && l.in_d2 && l.in_d3() && !l.in_d4());
        let l = PartitionLabel::new(false, true);
        assert!(!l.in_d1 && l.in_d2 && !l.in_d3() && l.in_d4());
        let l = PartitionLabel::new(true, false);
        assert!(l.in_d1 && !l.in_d2 && !l.in_d3() && !l.in_d4());
    }

    #[test]
    fn overlap_arithmetic_example() {
        let s = PartitionSummary::from_overlap(67_330, 264_441, 56_017).unwrap();
        assert_eq!(s.d4, 208_424);
        s.check().unwrap();
        assert!(PartitionSummary::from_overlap(10, 20, 11).is_err());
    }

    #[test]
    fn label_corpus_counts() {
        let corpus = Corpus::from_documents(vec![
            doc("a", "Ishinomaki rebuild", None),
            doc("b", "rebuild", None),
            doc("c", "Ishinomaki", None),
            doc("d", "nothing", None),
        ])
        .unwrap();
        let g = Gazetteer::new(["Ishinomaki"]).unwrap();
        let t = PhraseMatcher::new(["rebuild"]).unwrap();
        let lab = label_corpus(&corpus, &g, &t).unwrap();
        assert_eq!(lab.summary, PartitionSummary { d1: 2, d2: 2, d3: 1, d4: 1 });
        assert!(lab.by_doc["b"].in_d4());
        // no termset: D2..D4 empty
        let lab = label_corpus(&corpus, &g, &PhraseMatcher::new(Vec::<String>::new()).unwrap()).unwrap();
        assert_eq!(lab.summary, PartitionSummary { d1: 2, d2: 0, d3: 0, d4: 0 });
    }

    proptest! {
        #[test]
        fn chi2_symmetric_under_corpus_swap(a in 0u64..200, b in 1u64..2000, c in 0u64..200, d in 1u64..2000) {
            prop_assume!(a + c > 0);
            let ev = counts(&[("t", a)], a + b);
            let base = counts(&[("t", c)], c + d);
            let x = select_salient_terms(&ev, &base, 0.05);
            let y = select_salient_terms(&base, &ev, 0.05);
            prop_assert_eq!(x.len(), 1);
            prop_assert!((x[0].chi2 - y[0].chi2).abs() <= 1e-9 * x[0].chi2.max(1.0));
            prop_assert!(!(x[0].selected && y[0].selected));
        }

        #[test]
        fn alpha_one_selects_by_direction(a in 0u64..100, c in 0u64..100) {
            prop_assume!(a + c > 0);
            let sel = select_salient_terms(&counts(&[("t", a)], 1000), &counts(&[("t", c)], 1500), 1.0);
            let larger = a as f64 / 1000.0 > c as f64 / 1500.0;
            prop_assert_eq!(sel[0].selected, larger);
        }

        #[test]
        fn matching_is_monotone(
            names in proptest::collection::vec("[a-d]{1,3}", 0..5),
            extra in proptest::collection::vec("[a-d]{1,3}", 0..5),
            text in "[a-d ]{0,20}",
        ) {
            let small = PhraseMatcher::new(&names).unwrap();
            let big = PhraseMatcher::new(names.iter().chain(&extra)).unwrap();
            prop_assert!(!small.is_match(&text) || big.is_match(&text));
        }
    }
}
