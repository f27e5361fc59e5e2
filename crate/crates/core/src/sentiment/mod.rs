//! Per-document sentiment scoring.
//!
//! A text's score is `(n⁺ − n⁻) / (n⁺ + n⁻ + n⁰)` over lexicon hits, where a
//! polar word inside a clause holding an odd number of denial words counts
//! with the opposite polarity. Texts with no hits score 0. A document's
//! attachment description, when present and different from the body text,
//! contributes its own score additively.

pub mod tokenize;

use std::ops::Add;

use serde::Serialize;

use crate::corpus::Document;
use crate::lexicon::{Polarity, PolarityLexicon};

pub use tokenize::{LongestMatchTokenizer, TokenizedClause, Tokenizer, CLAUSE_DELIMITERS};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PolarityCounts {
    pub n_positive: u32,
    pub n_negative: u32,
    pub n_neutral: u32,
}

impl PolarityCounts {
    pub fn new(n_positive: u32, n_negative: u32, n_neutral: u32) -> Self {
        Self {
            n_positive,
            n_negative,
            n_neutral,
        }
    }

    pub fn total(&self) -> u32 {
        self.n_positive + self.n_negative + self.n_neutral
    }

    fn bump(&mut self, p: Polarity) {
        match p {
            Polarity::Positive => self.n_positive += 1,
            Polarity::Negative => self.n_negative += 1,
            Polarity::Neutral => self.n_neutral += 1,
        }
    }
}

impl Add for PolarityCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self::new(
            self.n_positive + o.n_positive,
            self.n_negative + o.n_negative,
            self.n_neutral + o.n_neutral,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct SentimentScore(pub f64);

impl SentimentScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Counts effective polarities over tokenized clauses.
///
/// Denial words only scope negation; a denial word that is also a lexicon
/// entry counts with its own polarity when it is the only token of its
/// clause.
pub fn count_polarities(clauses: &[TokenizedClause], lexicon: &PolarityLexicon) -> PolarityCounts {
    let mut counts = PolarityCounts::default();
    for clause in clauses {
        let flip = clause.denial_count % 2 == 1;
        let sole = clause.tokens.len() == 1;
        for token in &clause.tokens {
            let Some(p) = lexicon.lookup_polarity(token) else {
                continue;
            };
            if lexicon.is_denial(token) {
                if sole {
                    counts.bump(p);
                }
                continue;
            }
            counts.bump(if flip { p.flipped() } else { p });
        }
    }
    counts
}

/// `(n⁺ − n⁻) / (n⁺ + n⁻ + n⁰)`, or 0 when there are no hits.
pub fn score_text(counts: PolarityCounts) -> SentimentScore {
    let total = counts.total();
    if total == 0 {
        return SentimentScore(0.0);
    }
    let diff = counts.n_positive as f64 - counts.n_negative as f64;
    SentimentScore(diff / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DocumentScore {
    pub score: SentimentScore,
    /// Text counts plus attachment counts when the attachment was scored.
    pub counts: PolarityCounts,
    pub attachment_added: bool,
}

/// Lexicon plus tokenizer; scoring is pure and thread-safe.
pub struct SentimentScorer<'a, T: Tokenizer + ?Sized> {
    lexicon: &'a PolarityLexicon,
    tokenizer: &'a T,
}

impl<'a, T: Tokenizer + ?Sized> SentimentScorer<'a, T> {
    pub fn new(lexicon: &'a PolarityLexicon, tokenizer: &'a T) -> Self {
        Self { lexicon, tokenizer }
    }

    pub fn counts(&self, text: &str) -> PolarityCounts {
        count_polarities(&self.tokenizer.tokenize(text), self.lexicon)
    }

    pub fn score_text(&self, text: &str) -> SentimentScore {
        score_text(self.counts(text))
    }

    pub fn score_document(&self, doc: &Document) -> DocumentScore {
        let counts = self.counts(&doc.text);
        let mut score = score_text(counts).0;
        match doc.attachment_text.as_deref() {
            Some(att) if att != doc.text => {
                let att_counts = self.counts(att);
                score += score_text(att_counts).0;
                DocumentScore {
                    score: SentimentScore(score),
                    counts: counts + att_counts,
                    attachment_added: true,
                }
            }
            _ => DocumentScore {
                score: SentimentScore(score),
                counts,
                attachment_added: false,
            },
        }
    }
}

/// Tokenizer whose vocabulary is the lexicon's polar surfaces and denial
/// words plus any extra terms (gazetteer names, candidate terms).
pub fn tokenizer_for<'a>(
    lexicon: &'a PolarityLexicon,
    extra: impl IntoIterator<Item = &'a str>,
) -> LongestMatchTokenizer {
    let vocab: Vec<&str> = lexicon.polar_surfaces().chain(extra).collect();
    LongestMatchTokenizer::new(vocab, lexicon.denial_words())
}
