//! Backoff n-gram language models over the target language.
//!
//! Training is split in two steps: [`count_ngrams`] collects padded k-gram
//! counts and [`estimate`] turns them into a normalized backoff model. The
//! model answers `P(w | h)` by looking up the longest stored `h w` and
//! multiplying in backoff weights for every history it has to drop:
//!
//! ```text
//! P(w | h) = p(h w)                    if h w is stored
//!          = bow(h) · P(w | h[1..])    otherwise
//! ```
//!
//! Probabilities are kept as natural logs. ARPA files use log10.

mod arpa;
mod counts;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::corpus::Sentence;
use crate::error::Error;
use crate::vocab::{Vocabulary, BOS_ID, EOS_ID, UNK_ID};

pub use counts::{count_ngrams, NGramCounts};

pub const DEFAULT_ORDER: usize = 3;
pub const MAX_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Smoothing {
    /// Interpolated Witten-Bell, bottoming out in a uniform distribution.
    #[default]
    WittenBell,
    /// Additive smoothing of seen entries; leftover mass goes to backoff.
    AddK(f64),
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::WittenBell => f.write_str("witten-bell"),
            Smoothing::AddK(k) => write!(f, "add-k:{k}"),
        }
    }
}

impl FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "witten-bell" | "wb" => Ok(Smoothing::WittenBell),
            _ => {
                let k = s
                    .strip_prefix("add-k:")
                    .and_then(|k| k.parse::<f64>().ok())
                    .filter(|k| k.is_finite() && *k >= 0.0)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown smoothing {s:?} (expected witten-bell or add-k:<k>)")))?;
                Ok(Smoothing::AddK(k))
            }
        }
    }
}

/// Whether out-of-vocabulary words receive probability mass through `<unk>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VocabMode {
    /// No `<unk>`; unknown words have probability zero.
    Closed,
    /// `<unk>` is a unigram whose count is the number of singleton types.
    #[default]
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    /// ln P(w | h); `-inf` only for the `<s>` unigram.
    prob: f64,
    /// ln of the backoff weight of this n-gram used as a history.
    backoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    vocab: Vocabulary,
    open: bool,
    levels: Vec<HashMap<Vec<u32>, Entry>>,
}

/// Estimates a backoff model from counts.
pub fn estimate(counts: &NGramCounts, smoothing: Smoothing, mode: VocabMode) -> NGramModel {
    let order = counts.order();
    let open = mode == VocabMode::Open;
    let mut model = NGramModel {
        order,
        vocab: counts.vocab().clone(),
        open,
        levels: vec![HashMap::new(); order],
    };

    // Unigrams over the prediction vocabulary.
    let mut unigram: Vec<(u32, f64)> = counts.level(1).iter().map(|(g, &c)| (g[0], c as f64)).collect();
    unigram.sort_unstable_by_key(|&(w, _)| w);
    if open {
        let singletons = unigram.iter().filter(|&&(_, c)| c == 1.0).count();
        unigram.push((UNK_ID, singletons.max(1) as f64));
    }
    let total: f64 = unigram.iter().map(|&(_, c)| c).sum();
    let types = unigram.len() as f64;
    for &(w, c) in &unigram {
        let p = match smoothing {
            // Every vocabulary entry has a count, so the uniform share T/|V| is 1.
            Smoothing::WittenBell => (c + 1.0) / (total + types),
            Smoothing::AddK(k) => (c + k) / (total + k * types),
        };
        model.levels[0].insert(
            vec![w],
            Entry {
                prob: p.ln(),
                backoff: 0.0,
            },
        );
    }
    model.levels[0].insert(
        vec![BOS_ID],
        Entry {
            prob: f64::NEG_INFINITY,
            backoff: 0.0,
        },
    );

    for k in 2..=order {
        let mut by_history: HashMap<&[u32], Vec<(u32, f64)>> = HashMap::new();
        for (gram, &c) in counts.level(k) {
            by_history.entry(&gram[..k - 1]).or_default().push((gram[k - 1], c as f64));
        }
        let mut histories: Vec<_> = by_history.into_iter().collect();
        histories.sort_unstable_by(|a, b| a.0.cmp(b.0));
        let mut level = HashMap::new();
        let mut backoffs = Vec::new();
        for (history, mut words) in histories {
            words.sort_unstable_by_key(|&(w, _)| w);
            let hist_count: f64 = words.iter().map(|&(_, c)| c).sum();
            let distinct = words.len() as f64;
            let mut seen_mass = 0.0;
            let mut lower_mass = 0.0;
            for &(w, c) in &words {
                let lower = model.prob(&history[1..], w);
                let p = match smoothing {
                    Smoothing::WittenBell => (c + distinct * lower) / (hist_count + distinct),
                    Smoothing::AddK(k) => (c + k) / (hist_count + k * types),
                };
                seen_mass += p;
                lower_mass += lower;
                let mut key = history.to_vec();
                key.push(w);
                level.insert(
                    key,
                    Entry {
                        prob: p.ln(),
                        backoff: 0.0,
                    },
                );
            }
            let alpha = match smoothing {
                Smoothing::WittenBell => distinct / (hist_count + distinct),
                Smoothing::AddK(_) => {
                    let denom = 1.0 - lower_mass;
                    if denom <= 1e-12 {
                        1.0
                    } else {
                        ((1.0 - seen_mass) / denom).max(0.0)
                    }
                }
            };
            backoffs.push((history.to_vec(), alpha.ln()));
        }
        for (history, alpha) in backoffs {
            model.levels[k - 2]
                .get_mut(&history)
                .expect("every history is a stored lower-order n-gram")
                .backoff = alpha;
        }
        model.levels[k - 1] = level;
    }
    model
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn is_open(&self) -> bool {
        self.open
    }

    /// Id used to query `token`; unknown tokens map to `<unk>`.
    pub fn word_id(&self, token: &str) -> u32 {
        match self.vocab.id(token) {
            Some(id) if !Vocabulary::is_reserved(id) || id == EOS_ID => id,
            _ => UNK_ID,
        }
    }

    /// Number of stored k-grams.
    pub fn entries(&self, k: usize) -> usize {
        self.levels[k - 1].len()
    }

    /// Ids that can be predicted: every unigram except `<s>`.
    pub fn prediction_vocab(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.levels[0].keys().map(|g| g[0]).filter(|&w| w != BOS_ID).collect();
        ids.sort_unstable();
        ids
    }

    /// Histories with a stored backoff weight (all non-top-order n-grams
    /// that some higher-order entry extends).
    pub fn histories(&self) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = self.levels[1..]
            .iter()
            .flat_map(|level| level.keys().map(|g| g[..g.len() - 1].to_vec()))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// ln P(word | history) using at most the last `order - 1` history ids.
    pub fn log_prob(&self, history: &[u32], word: u32) -> f64 {
        let history = &history[history.len().saturating_sub(self.order - 1)..];
        let mut key = Vec::with_capacity(history.len() + 1);
        let mut backoff = 0.0;
        for start in 0..=history.len() {
            let context = &history[start..];
            key.clear();
            key.extend_from_slice(context);
            key.push(word);
            if let Some(entry) = self.levels[context.len()].get(&key) {
                return backoff + entry.prob;
            }
            if !context.is_empty() {
                if let Some(entry) = self.levels[context.len() - 1].get(context) {
                    backoff += entry.backoff;
                }
            }
        }
        f64::NEG_INFINITY
    }

    pub fn prob(&self, history: &[u32], word: u32) -> f64 {
        self.log_prob(history, word).exp()
    }

    /// ln P(sentence) with `<s>` padding and the closing `</s>` factor.
    pub fn sentence_logprob(&self, sentence: &Sentence) -> f64 {
        let mut ids = Vec::with_capacity(sentence.len() + 2);
        ids.push(BOS_ID);
        ids.extend(sentence.tokens().iter().map(|t| self.word_id(t)));
        ids.push(EOS_ID);
        (1..ids.len()).map(|i| self.log_prob(&ids[..i], ids[i])).sum()
    }

    /// `exp(-Σ logprob / N)` where N counts every predicted token incl. `</s>`.
    pub fn perplexity<'a>(&self, sentences: impl IntoIterator<Item = &'a Sentence>) -> f64 {
        let (mut logprob, mut tokens) = (0.0, 0usize);
        for s in sentences {
            logprob += self.sentence_logprob(s);
            tokens += s.len() + 1;
        }
        (-logprob / tokens as f64).exp()
    }
}
