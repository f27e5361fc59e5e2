//! Polarity dictionary with denial (negation) and removal word lists.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: ({surface}, {class}) listed as both {first} and {second}")]
    DuplicateEntry {
        path: String,
        line: usize,
        surface: String,
        class: WordClass,
        first: Polarity,
        second: Polarity,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    /// Opposite polarity; neutral is its own opposite.
    pub fn flipped(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
            Polarity::Neutral => Polarity::Neutral,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
        })
    }
}

impl FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" | "p" => Ok(Polarity::Positive),
            "negative" | "neg" | "n" => Ok(Polarity::Negative),
            "neutral" | "neu" | "e" => Ok(Polarity::Neutral),
            other => Err(format!("bad polarity tag {other:?}")),
        }
    }
}

/// Part of speech of a dictionary entry. Declaration order is the lookup
/// precedence when a surface appears under several classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordClass {
    Noun,
    Verb,
    Adjective,
    AdjectivalVerb,
    Other,
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WordClass::Noun => "noun",
            WordClass::Verb => "verb",
            WordClass::Adjective => "adjective",
            WordClass::AdjectivalVerb => "adjectival_verb",
            WordClass::Other => "other",
        })
    }
}

impl FromStr for WordClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace([' ', '-'], "_").as_str() {
            "noun" => Ok(WordClass::Noun),
            "verb" => Ok(WordClass::Verb),
            "adjective" => Ok(WordClass::Adjective),
            "adjectival_verb" => Ok(WordClass::AdjectivalVerb),
            "other" => Ok(WordClass::Other),
            other => Err(format!("bad word class {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub surface: String,
    pub word_class: WordClass,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LexiconCounts {
    pub positive: usize,
    pub negative: usize,
    pub neutral: usize,
    pub denial: usize,
    pub removed: usize,
}

/// Polarity dictionary. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolarityLexicon {
    entries: BTreeMap<(String, WordClass), Polarity>,
    denial_words: BTreeSet<String>,
    removed_words: BTreeSet<String>,
    effective: HashMap<String, Polarity>,
}

impl PolarityLexicon {
    pub fn new(
        entries: impl IntoIterator<Item = LexiconEntry>,
        denial_words: impl IntoIterator<Item = String>,
        removed_words: impl IntoIterator<Item = String>,
    ) -> Result<Self, LexiconError> {
        let mut map = BTreeMap::new();
        for (i, e) in entries.into_iter().enumerate() {
            insert_entry(&mut map, e, "<memory>", i + 1)?;
        }
        Ok(Self::from_parts(
            map,
            denial_words.into_iter().collect(),
            removed_words.into_iter().collect(),
        ))
    }

    fn from_parts(
        entries: BTreeMap<(String, WordClass), Polarity>,
        denial_words: BTreeSet<String>,
        removed_words: BTreeSet<String>,
    ) -> Self {
        let mut effective = HashMap::new();
        // BTreeMap order visits each surface's classes in precedence order.
        for ((surface, _), polarity) in &entries {
            if !removed_words.contains(surface) {
                effective.entry(surface.clone()).or_insert(*polarity);
            }
        }
        Self {
            entries,
            denial_words,
            removed_words,
            effective,
        }
    }

    /// Polarity of `token`, or `None` when unknown or removed.
    pub fn lookup_polarity(&self, token: &str) -> Option<Polarity> {
        self.effective.get(token).copied()
    }

    pub fn is_denial(&self, token: &str) -> bool {
        self.denial_words.contains(token)
    }

    pub fn is_removed(&self, token: &str) -> bool {
        self.removed_words.contains(token)
    }

    /// Number of dictionary rows, before removals.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = LexiconEntry> + '_ {
        self.entries.iter().map(|((surface, class), p)| LexiconEntry {
            surface: surface.clone(),
            word_class: *class,
            polarity: *p,
        })
    }

    /// Surfaces that resolve to a polarity.
    pub fn polar_surfaces(&self) -> impl Iterator<Item = &str> {
        self.effective.keys().map(String::as_str)
    }

    pub fn denial_words(&self) -> impl Iterator<Item = &str> {
        self.denial_words.iter().map(String::as_str)
    }

    pub fn removed_words(&self) -> impl Iterator<Item = &str> {
        self.removed_words.iter().map(String::as_str)
    }

    /// Effective counts by polarity (after removals and class resolution).
    pub fn counts(&self) -> LexiconCounts {
        let mut c = LexiconCounts {
            denial: self.denial_words.len(),
            removed: self.removed_words.len(),
            ..Default::default()
        };
        for p in self.effective.values() {
            match p {
                Polarity::Positive => c.positive += 1,
                Polarity::Negative => c.negative += 1,
                Polarity::Neutral => c.neutral += 1,
            }
        }
        c
    }

    /// A copy with every positive entry made negative and vice versa.
    pub fn with_swapped_polarity(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(k, p)| (k.clone(), p.flipped()))
            .collect();
        Self::from_parts(
            entries,
            self.denial_words.clone(),
            self.removed_words.clone(),
        )
    }

    pub fn save(
        &self,
        dictionary_file: &Path,
        denial_file: &Path,
        removal_file: &Path,
    ) -> Result<(), LexiconError> {
        let path = dictionary_file.display().to_string();
        let csv_err = |source| LexiconError::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(dictionary_file).map_err(csv_err)?;
        w.write_record(["surface", "word_class", "polarity"])
            .map_err(csv_err)?;
        for ((surface, class), p) in &self.entries {
            w.write_record([surface.as_str(), &class.to_string(), &p.to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|source| LexiconError::Io {
            path: path.clone(),
            source,
        })?;
        write_word_list(denial_file, &self.denial_words)?;
        write_word_list(removal_file, &self.removed_words)
    }
}

fn insert_entry(
    map: &mut BTreeMap<(String, WordClass), Polarity>,
    e: LexiconEntry,
    path: &str,
    line: usize,
) -> Result<(), LexiconError> {
    if e.surface.is_empty() {
        return Err(LexiconError::Parse {
            path: path.to_string(),
            line,
            message: "empty surface".into(),
        });
    }
    match map.get(&(e.surface.clone(), e.word_class)) {
        Some(&prev) if prev != e.polarity => Err(LexiconError::DuplicateEntry {
            path: path.to_string(),
            line,
            surface: e.surface,
            class: e.word_class,
            first: prev,
            second: e.polarity,
        }),
        Some(_) => Ok(()),
        None => {
            map.insert((e.surface, e.word_class), e.polarity);
            Ok(())
        }
    }
}

/// Loads the dictionary CSV (`surface,word_class,polarity` with header) and
/// the two word lists, then applies removals.
pub fn load_lexicon(
    dictionary_file: &Path,
    denial_file: &Path,
    removal_file: &Path,
) -> Result<PolarityLexicon, LexiconError> {
    let path = dictionary_file.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(dictionary_file)
        .map_err(|source| LexiconError::Csv {
            path: path.clone(),
            source,
        })?;
    let mut map = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|source| LexiconError::Csv {
            path: path.clone(),
            source,
        })?;
        let parse_err = |message: String| LexiconError::Parse {
            path: path.clone(),
            line,
            message,
        };
        if record.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, found {}", record.len())));
        }
        let entry = LexiconEntry {
            surface: record[0].to_string(),
            word_class: record[1].parse().map_err(parse_err)?,
            polarity: record[2].parse().map_err(parse_err)?,
        };
        insert_entry(&mut map, entry, &path, line)?;
    }
    Ok(PolarityLexicon::from_parts(
        map,
        read_word_list(denial_file)?,
        read_word_list(removal_file)?,
    ))
}

/// One word per line; blank lines and lines starting with `#` are skipped.
pub fn read_word_list(path: &Path) -> Result<BTreeSet<String>, LexiconError> {
    let io_err = |source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut out = BTreeSet::new();
    for line in reader.lines() {
        let line = line.map_err(io_err)?;
        let word = line.trim();
        if word.is_empty() || word.starts_with('#') {
            continue;
        }
        out.insert(word.to_string());
    }
    Ok(out)
}

pub fn write_word_list<'a>(
    path: &Path,
    words: impl IntoIterator<Item = &'a String>,
) -> Result<(), LexiconError> {
    let io_err = |source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for word in words {
        writeln!(w, "{word}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(s: &str, c: WordClass, p: Polarity) -> LexiconEntry {
        LexiconEntry {
            surface: s.into(),
            word_class: c,
            polarity: p,
        }
    }

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_three_entries() {
        let dir = tempfile::tempdir().unwrap();
        let dict = write(
            dir.path(),
            "d.csv",
            "surface,word_class,polarity\nhappy,adjective,positive\nsad,adjective,negative\ntable,noun,neutral\n",
        );
        let den = write(dir.path(), "den.txt", "# denial words\nnot\n");
        let rem = write(dir.path(), "rem.txt", "");
        let lex = load_lexicon(&dict, &den, &rem).unwrap();
        assert_eq!(lex.len(), 3);
        assert_eq!(lex.lookup_polarity("happy"), Some(Polarity::Positive));
        assert_eq!(lex.lookup_polarity("unknown"), None);
        assert!(lex.is_denial("not"));
        let c = lex.counts();
        assert_eq!((c.positive, c.negative, c.neutral, c.denial), (1, 1, 1, 1));
    }

    #[test]
    fn removal_wins() {
        let dir = tempfile::tempdir().unwrap();
        let dict = write(
            dir.path(),
            "d.csv",
            "surface,word_class,polarity\n津波,noun,negative\ntsunami,noun,negative\n",
        );
        let den = write(dir.path(), "den.txt", "");
        let rem = write(dir.path(), "rem.txt", "tsunami\n津波\n");
        let lex = load_lexicon(&dict, &den, &rem).unwrap();
        assert_eq!(lex.lookup_polarity("tsunami"), None);
        assert_eq!(lex.lookup_polarity("津波"), None);
        assert_eq!(lex.counts().negative, 0);
    }

    #[test]
    fn bad_polarity_tag() {
        let dir = tempfile::tempdir().unwrap();
        let dict = write(dir.path(), "d.csv", "surface,word_class,polarity\nmeh,noun,both\n");
        let den = write(dir.path(), "den.txt", "");
        let err = load_lexicon(&dict, &den, &den).unwrap_err();
        assert!(matches!(err, LexiconError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn conflicting_duplicate() {
        let dir = tempfile::tempdir().unwrap();
        let dict = write(
            dir.path(),
            "d.csv",
            "surface,word_class,polarity\ngood,adjective,positive\ngood,adjective,positive\ngood,adjective,negative\n",
        );
        let den = write(dir.path(), "den.txt", "");
        let err = load_lexicon(&dict, &den, &den).unwrap_err();
        assert!(matches!(err, LexiconError::DuplicateEntry { line: 4, .. }), "{err}");
    }

    #[test]
    fn class_precedence() {
        let lex = PolarityLexicon::new(
            [
                entry("light", WordClass::Adjective, Polarity::Positive),
                entry("light", WordClass::Noun, Polarity::Neutral),
                entry("run", WordClass::Adjective, Polarity::Positive),
                entry("run", WordClass::Verb, Polarity::Negative),
            ],
            [],
            [],
        )
        .unwrap();
        assert_eq!(lex.lookup_polarity("light"), Some(Polarity::Neutral));
        assert_eq!(lex.lookup_polarity("run"), Some(Polarity::Negative));
    }

    #[test]
    fn save_load_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let lex = PolarityLexicon::new(
            [
                entry("良い", WordClass::Adjective, Polarity::Positive),
                entry("a,b", WordClass::Noun, Polarity::Negative),
                entry("quote\"d", WordClass::Other, Polarity::Neutral),
            ],
            ["ない".to_string(), "not".to_string()],
            ["disaster".to_string()],
        )
        .unwrap();
        let p = |n: &str| dir.path().join(n);
        lex.save(&p("d1.csv"), &p("n1.txt"), &p("r1.txt")).unwrap();
        let back = load_lexicon(&p("d1.csv"), &p("n1.txt"), &p("r1.txt")).unwrap();
        assert_eq!(back, lex);
        back.save(&p("d2.csv"), &p("n2.txt"), &p("r2.txt")).unwrap();
        for (a, b) in [("d1.csv", "d2.csv"), ("n1.txt", "n2.txt"), ("r1.txt", "r2.txt")] {
            assert_eq!(std::fs::read(p(a)).unwrap(), std::fs::read(p(b)).unwrap());
        }
    }
}
