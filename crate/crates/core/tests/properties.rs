use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use sentiprice_core::corpus::{parse_timestamp, Corpus, DocKind, Document};
use sentiprice_core::numerics::{chi_square_2x2, ContingencyTable2x2};
use sentiprice_core::partition::{count_terms, select_salient_terms, CountMode, TermCounts};
use sentiprice_core::sentiment::{LongestMatchTokenizer, Tokenizer, CLAUSE_DELIMITERS};

/// Quadratic reference: try every vocabulary word at every position.
fn brute_tokenize(text: &str, vocab: &BTreeSet<String>, denial: &BTreeSet<String>) -> Vec<(Vec<String>, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    for clause in chars.split(|c| CLAUSE_DELIMITERS.contains(c)) {
        let mut tokens = Vec::new();
        let mut i = 0;
        while i < clause.len() {
            if clause[i].is_whitespace() {
                i += 1;
                continue;
            }
            let len = (1..=clause.len() - i)
                .rev()
                .find(|&l| vocab.contains(&clause[i..i + l].iter().collect::<String>()))
                .unwrap_or(1);
            tokens.push(clause[i..i + len].iter().collect::<String>());
            i += len;
        }
        if !tokens.is_empty() {
            let d = tokens.iter().filter(|t| denial.contains(*t)).count();
            out.push((tokens, d));
        }
    }
    out
}

fn corpus(texts: &[String]) -> Corpus {
    let docs = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Document {
            doc_id: format!("d{i:04}"),
            page_id: "p".into(),
            kind: DocKind::Comment,
            timestamp: parse_timestamp("2011-06-02T08:00:00").unwrap(),
            text: t.clone(),
            attachment_text: None,
        })
        .collect();
    Corpus::from_documents(docs).unwrap()
}

fn words() -> impl Strategy<Value = BTreeSet<String>> {
    prop::collection::btree_set("[abc]{1,4}", 1..12)
}

proptest! {
    #[test]
    fn tokenizer_matches_brute_force(vocab in words(), text in "[abcd .、]{0,40}") {
        let denial: BTreeSet<String> = vocab.iter().take(2).cloned().collect();
        let tok = LongestMatchTokenizer::new(&vocab, &denial);
        let got: Vec<(Vec<String>, usize)> =
            tok.tokenize(&text).into_iter().map(|c| (c.tokens, c.denial_count)).collect();
        prop_assert_eq!(got, brute_tokenize(&text, &vocab, &denial));
    }

    #[test]
    fn term_counts_match_brute_force(vocab in words(), texts in prop::collection::vec("[abc ]{0,30}", 1..20)) {
        let tok = LongestMatchTokenizer::new(&vocab, Vec::<String>::new());
        let none = BTreeSet::new();
        let c = corpus(&texts);
        let mut want = TermCounts::default();
        let mut docs: BTreeMap<String, u64> = BTreeMap::new();
        for t in &texts {
            let mut seen = BTreeSet::new();
            for (tokens, _) in brute_tokenize(t, &vocab, &none) {
                want.total += tokens.len() as u64;
                for tk in tokens.into_iter().filter(|t| t.chars().count() > 1) {
                    *want.counts.entry(tk.clone()).or_default() += 1;
                    seen.insert(tk);
                }
            }
            for s in seen {
                *docs.entry(s).or_default() += 1;
            }
        }
        prop_assert_eq!(count_terms(&c, &tok, CountMode::Tokens), want);
        let by_doc = count_terms(&c, &tok, CountMode::Documents);
        prop_assert_eq!(by_doc.total, texts.len() as u64);
        prop_assert_eq!(by_doc.counts, docs);
    }

    #[test]
    fn chi_square_symmetries(a in 0u64..5000, b in 1u64..5000, c in 0u64..5000, d in 1u64..5000, k in 1u64..20) {
        let t = ContingencyTable2x2::new(a, b, c, d);
        if let Ok(x) = chi_square_2x2(t) {
            let rel = |u: f64, v: f64| (u - v).abs() <= 1e-9 * v.abs().max(1.0);
            for p in [
                ContingencyTable2x2::new(c, d, a, b),
                ContingencyTable2x2::new(b, a, d, c),
                ContingencyTable2x2::new(a, c, b, d),
                ContingencyTable2x2::new(d, c, b, a),
            ] {
                let y = chi_square_2x2(p).unwrap();
                prop_assert!(rel(y.statistic, x.statistic), "{:?} {} vs {}", p, y.statistic, x.statistic);
            }
            let scaled = chi_square_2x2(ContingencyTable2x2::new(a * k, b * k, c * k, d * k)).unwrap();
            prop_assert!(rel(scaled.statistic, x.statistic * k as f64));
            prop_assert!((0.0..=1.0).contains(&x.p_value));
        }
    }

    #[test]
    fn selection_rule(rows in prop::collection::vec((0u64..400, 0u64..400), 1..30), alpha in 0.001f64..0.2) {
        let mut event = TermCounts::default();
        let mut base = TermCounts::default();
        for (i, (e, b)) in rows.iter().enumerate() {
            let term = format!("t{i:02}");
            event.counts.insert(term.clone(), *e);
            base.counts.insert(term, *b);
        }
        event.total = event.counts.values().sum::<u64>() + 1000;
        base.total = base.counts.values().sum::<u64>() + 1000;
        for s in select_salient_terms(&event, &base, alpha) {
            prop_assert_eq!(s.selected, s.p_value < alpha && s.event_ratio() > s.base_ratio(), "{:?}", s);
        }
    }
}
