//! Clause splitting and greedy longest-match tokenization.

use std::collections::{BTreeSet, HashMap};

/// Characters that end a clause.
pub const CLAUSE_DELIMITERS: &[char] = &[
    '。', '、', '．', '，', '.', ',', '!', '?', '！', '？', '；', ';', '\n', '\r',
];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedClause {
    pub tokens: Vec<String>,
    pub denial_count: usize,
}

/// Splits text into clauses of tokens. Implementations must be pure.
pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<TokenizedClause>;
}

#[derive(Debug, Default, Clone)]
struct TrieNode {
    children: HashMap<char, usize>,
    terminal: bool,
}

/// Dictionary tokenizer: within each clause, the longest vocabulary entry
/// starting at the cursor is taken; otherwise a single character is emitted.
/// Whitespace separates tokens and is never emitted.
#[derive(Debug, Clone)]
pub struct LongestMatchTokenizer {
    nodes: Vec<TrieNode>,
    denial_words: BTreeSet<String>,
    vocabulary_size: usize,
}

impl LongestMatchTokenizer {
    /// Denial words are added to the vocabulary automatically.
    pub fn new<I, S, D, T>(vocabulary: I, denial_words: D) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
        D: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let denial_words: BTreeSet<String> = denial_words
            .into_iter()
            .map(|w| w.as_ref().to_string())
            .filter(|w| !w.is_empty())
            .collect();
        let mut tok = Self {
            nodes: vec![TrieNode::default()],
            denial_words: BTreeSet::new(),
            vocabulary_size: 0,
        };
        for w in vocabulary {
            tok.insert(w.as_ref());
        }
        for w in &denial_words {
            tok.insert(w);
        }
        tok.denial_words = denial_words;
        tok
    }

    fn insert(&mut self, word: &str) {
        if word.is_empty() {
            return;
        }
        let mut node = 0;
        for ch in word.chars() {
            node = match self.nodes[node].children.get(&ch) {
                Some(&next) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[node].children.insert(ch, next);
                    next
                }
            };
        }
        if !self.nodes[node].terminal {
            self.nodes[node].terminal = true;
            self.vocabulary_size += 1;
        }
    }

    pub fn vocabulary_size(&self) -> usize {
        self.vocabulary_size
    }

    /// Length in chars of the longest vocabulary word starting at `chars[0]`.
    fn longest_match(&self, chars: &[char]) -> Option<usize> {
        let mut node = 0;
        let mut best = None;
        for (i, ch) in chars.iter().enumerate() {
            match self.nodes[node].children.get(ch) {
                Some(&next) => {
                    node = next;
                    if self.nodes[node].terminal {
                        best = Some(i + 1);
                    }
                }
                None => break,
            }
        }
        best
    }

    fn tokenize_clause(&self, clause: &[char]) -> Vec<String> {
        let mut tokens = Vec::new();
        let mut i = 0;
        while i < clause.len() {
            if clause[i].is_whitespace() {
                i += 1;
                continue;
            }
            let len = self.longest_match(&clause[i..]).unwrap_or(1);
            tokens.push(clause[i..i + len].iter().collect());
            i += len;
        }
        tokens
    }
}

impl Tokenizer for LongestMatchTokenizer {
    fn tokenize(&self, text: &str) -> Vec<TokenizedClause> {
        let chars: Vec<char> = text.chars().collect();
        chars
            .split(|c| CLAUSE_DELIMITERS.contains(c))
            .map(|clause| self.tokenize_clause(clause))
            .filter(|tokens| !tokens.is_empty())
            .map(|tokens| {
                let denial_count = tokens
                    .iter()
                    .filter(|t| self.denial_words.contains(t.as_str()))
                    .count();
                TokenizedClause {
                    tokens,
                    denial_count,
                }
            })
            .collect()
    }
}
