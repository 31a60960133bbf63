//! Log-linear phrase-based stack decoding.
//!
//! A hypothesis covers a set of source words and carries the target words
//! produced so far. Hypotheses are grouped into stacks by the number of
//! covered words; each stack is pruned to the `beam` best by score plus a
//! future-cost estimate before it is expanded. Hypotheses that agree on
//! coverage, language-model state and last phrase are recombined; the
//! losing steps stay in the search graph for n-best extraction.

mod features;
mod options;
mod score;
mod search;

use std::fmt::Write as _;

pub use features::{FeatureVector, FeatureWeights, FEATURE_NAMES, NUM_FEATURES};
pub use options::FutureCostTable;
pub use score::{score_derivation, ScoredDerivation};
pub use search::{decode, nbest};

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::lm::NGramModel;
use crate::phrases::{PhraseTable, ReorderingTable};

/// Value of each of the four translation features for a copied unknown
/// word, so the penalty scales with the weights like every other score.
pub const UNKNOWN_WORD_LOG_PROB: f64 = -10.0;

/// Lower bound on any single language-model log-probability.
pub const LM_FLOOR: f64 = -100.0;

pub const DEFAULT_BEAM: usize = 100;
pub const DEFAULT_THRESHOLD: f64 = 1e-5;
pub const DEFAULT_DISTORTION_LIMIT: usize = 6;
pub const DEFAULT_NBEST: usize = 100;

/// Read-only models shared by every decode.
#[derive(Debug, Clone)]
pub struct Models {
    pub lm: NGramModel,
    pub phrases: PhraseTable,
    pub reordering: Option<ReorderingTable>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    /// Histogram limit per stack; `usize::MAX` disables it.
    pub beam: usize,
    /// Relative threshold; hypotheses scoring below `best · threshold` are
    /// pruned. Zero disables it.
    pub threshold: f64,
    /// Maximum jump width; `None` is unlimited.
    pub distortion_limit: Option<usize>,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            beam: DEFAULT_BEAM,
            threshold: DEFAULT_THRESHOLD,
            distortion_limit: Some(DEFAULT_DISTORTION_LIMIT),
        }
    }
}

impl SearchParams {
    /// No pruning and no distortion limit.
    pub fn exhaustive() -> Self {
        Self {
            beam: usize::MAX,
            threshold: 0.0,
            distortion_limit: None,
        }
    }
}

/// One phrase application, in target order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub source_span: (usize, usize),
    pub target: Vec<String>,
    /// Copied unknown word.
    pub unknown: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    pub tokens: Vec<String>,
    pub steps: Vec<Step>,
    pub features: FeatureVector,
    /// Number of copied unknown words.
    pub unknown: usize,
    pub score: f64,
}

impl Translation {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Weighted best-case cost of every source span.
pub fn future_cost(sentence: &Sentence, models: &Models, weights: &FeatureWeights) -> FutureCostTable {
    FutureCostTable::build(sentence.len(), &options::collect_options(sentence, models, weights))
}

/// `sent_id ||| tokens ||| name: value ... ||| total`
pub fn nbest_line(sent_id: usize, t: &Translation) -> String {
    let mut line = String::new();
    write!(line, "{sent_id} ||| {} ||| {} ||| {}", t.text(), t.features.to_labeled(), t.score).unwrap();
    line
}

/// One parsed n-best line.
#[derive(Debug, Clone, PartialEq)]
pub struct NBestLine {
    pub sent_id: usize,
    pub tokens: Vec<String>,
    pub features: FeatureVector,
    pub total: f64,
}

pub fn parse_nbest_line(line: &str) -> Result<NBestLine> {
    let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
    let [id, tokens, features, total] = fields[..] else {
        return Err(Error::InvalidArgument(format!("expected 4 `|||` fields in n-best line {line:?}")));
    };
    Ok(NBestLine {
        sent_id: id.parse().map_err(|_| Error::InvalidArgument(format!("bad sentence id {id:?}")))?,
        tokens: tokens.split_whitespace().map(str::to_string).collect(),
        features: FeatureVector::parse_labeled(features)?,
        total: total.parse().map_err(|_| Error::InvalidArgument(format!("bad total {total:?}")))?,
    })
}
