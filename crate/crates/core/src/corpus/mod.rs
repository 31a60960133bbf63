//! Parallel text: sentences, loading, cleaning and train/test/tune splits.

mod tokenize;
mod truecase;

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub use tokenize::{tokenize, tokenize_bytes};
pub use truecase::TruecaseModel;

pub const DEFAULT_MAX_LEN: usize = 80;
pub const DEFAULT_MAX_RATIO: f64 = 9.0;

/// A non-empty sequence of NFC-normalized, whitespace-free tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sentence(Vec<String>);

impl Sentence {
    /// Builds a sentence from tokens, validating the token invariants.
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Result<Self> {
        let tokens: Vec<String> = tokens.into_iter().map(|t| t.into().nfc().collect::<String>()).collect();
        if tokens.is_empty() {
            return Err(Error::EmptyLine);
        }
        if let Some(bad) = tokens.iter().find(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
            return Err(Error::InvalidArgument(format!("invalid token {bad:?}")));
        }
        Ok(Sentence(tokens))
    }

    /// Splits an already tokenized line on whitespace.
    pub fn from_tokenized(line: &str) -> Result<Self> {
        Self::new(line.split_whitespace())
    }

    pub(crate) fn from_valid(tokens: Vec<String>) -> Self {
        debug_assert!(!tokens.is_empty());
        Sentence(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SentencePair {
    pub source: Sentence,
    pub target: Sentence,
}

impl SentencePair {
    pub fn new(source: Sentence, target: Sentence) -> Self {
        SentencePair { source, target }
    }

    /// Same pair with source and target exchanged.
    pub fn swapped(&self) -> Self {
        SentencePair {
            source: self.target.clone(),
            target: self.source.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParallelCorpus {
    pub pairs: Vec<SentencePair>,
    pub source_lang: String,
    pub target_lang: String,
}

/// Path of one side of a corpus: `<stem>.<lang>`.
pub fn side_path(stem: &Path, lang: &str) -> PathBuf {
    let mut name = stem.as_os_str().to_owned();
    name.push(".");
    name.push(lang);
    PathBuf::from(name)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Utf8(e.utf8_error()))?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Reads the two sides of a corpus as raw line pairs, checking line counts.
pub fn read_line_pairs(stem: &Path, source_lang: &str, target_lang: &str) -> Result<Vec<(String, String)>> {
    let src_path = side_path(stem, source_lang);
    let tgt_path = side_path(stem, target_lang);
    let src = read_lines(&src_path)?;
    let tgt = read_lines(&tgt_path)?;
    if src.len() != tgt.len() {
        return Err(Error::LineCountMismatch {
            left: src_path,
            left_lines: src.len(),
            right: tgt_path,
            right_lines: tgt.len(),
        });
    }
    Ok(src.into_iter().zip(tgt).collect())
}

impl ParallelCorpus {
    pub fn new(source_lang: impl Into<String>, target_lang: impl Into<String>) -> Self {
        ParallelCorpus {
            pairs: Vec::new(),
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
        }
    }

    pub fn with_pairs(mut self, pairs: Vec<SentencePair>) -> Self {
        self.pairs = pairs;
        self
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Corpus with every pair's sides exchanged (and the language tags).
    pub fn reversed(&self) -> Self {
        ParallelCorpus {
            pairs: self.pairs.iter().map(SentencePair::swapped).collect(),
            source_lang: self.target_lang.clone(),
            target_lang: self.source_lang.clone(),
        }
    }

    pub fn sources(&self) -> impl Iterator<Item = &Sentence> {
        self.pairs.iter().map(|p| &p.source)
    }

    pub fn targets(&self) -> impl Iterator<Item = &Sentence> {
        self.pairs.iter().map(|p| &p.target)
    }

    /// Loads an already tokenized corpus `<stem>.<src>` / `<stem>.<tgt>`.
    pub fn load(stem: &Path, source_lang: &str, target_lang: &str) -> Result<Self> {
        let lines = read_line_pairs(stem, source_lang, target_lang)?;
        let mut pairs = Vec::with_capacity(lines.len());
        for (n, (s, t)) in lines.iter().enumerate() {
            let context = side_path(stem, source_lang).display().to_string();
            let source = Sentence::from_tokenized(s).map_err(|e| Error::parse(&context, n + 1, e.to_string()))?;
            let target = Sentence::from_tokenized(t).map_err(|e| Error::parse(&context, n + 1, e.to_string()))?;
            pairs.push(SentencePair::new(source, target));
        }
        Ok(ParallelCorpus::new(source_lang, target_lang).with_pairs(pairs))
    }

    /// Writes both sides as space-joined token lines.
    pub fn write(&self, stem: &Path) -> Result<()> {
        let write_side = |lang: &str, side: &dyn Fn(&SentencePair) -> &Sentence| -> Result<()> {
            let path = side_path(stem, lang);
            let mut out = Vec::new();
            for pair in &self.pairs {
                writeln!(out, "{}", side(pair)).unwrap();
            }
            std::fs::write(&path, out).map_err(|e| Error::io(&path, e))
        };
        write_side(&self.source_lang, &|p| &p.source)?;
        write_side(&self.target_lang, &|p| &p.target)
    }
}

/// Keeps pairs whose sides both have `1..=max_len` tokens and whose length
/// ratio is at most `max_ratio`, in their original order.
pub fn clean(corpus: &ParallelCorpus, max_len: usize, max_ratio: f64) -> ParallelCorpus {
    let pairs = corpus
        .pairs
        .iter()
        .filter(|p| {
            let (s, t) = (p.source.len(), p.target.len());
            let (lo, hi) = (s.min(t), s.max(t));
            lo >= 1 && hi <= max_len && hi as f64 <= max_ratio * lo as f64
        })
        .cloned()
        .collect();
    ParallelCorpus {
        pairs,
        source_lang: corpus.source_lang.clone(),
        target_lang: corpus.target_lang.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: ParallelCorpus,
    pub test: ParallelCorpus,
    pub tune: ParallelCorpus,
}

/// Draws disjoint train/test/tune subsets by a seeded shuffle.
///
/// Each subset keeps the corpus order of its members.
pub fn split(corpus: &ParallelCorpus, n_train: usize, n_test: usize, n_tune: usize, seed: u64) -> Result<Split> {
    let requested = n_train + n_test + n_tune;
    if requested > corpus.len() {
        return Err(Error::InsufficientData {
            available: corpus.len(),
            requested,
        });
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let take = |range: std::ops::Range<usize>| {
        let mut idx = order[range].to_vec();
        idx.sort_unstable();
        ParallelCorpus {
            pairs: idx.into_iter().map(|i| corpus.pairs[i].clone()).collect(),
            source_lang: corpus.source_lang.clone(),
            target_lang: corpus.target_lang.clone(),
        }
    };
    Ok(Split {
        train: take(0..n_train),
        test: take(n_train..n_train + n_test),
        tune: take(n_train + n_test..requested),
    })
}
