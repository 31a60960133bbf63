use std::collections::HashSet;

use crate::corpus::Sentence;
use crate::decoder::{FeatureVector, FeatureWeights, Translation};
use crate::error::{Error, Result};
use crate::eval::{BleuStats, RefLength, BLEU_ORDER};

/// One candidate translation of a dev sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub text: String,
    pub features: FeatureVector,
    pub stats: BleuStats,
}

/// Accumulated n-best candidates per dev sentence, deduplicated by
/// translation string.
#[derive(Debug, Clone, Default)]
pub struct NBestPool {
    refs: Vec<Vec<Sentence>>,
    entries: Vec<Vec<PoolEntry>>,
    seen: Vec<HashSet<String>>,
}

impl NBestPool {
    /// An empty pool over the given reference sets.
    pub fn new(refs: Vec<Vec<Sentence>>) -> Result<Self> {
        if refs.is_empty() {
            return Err(Error::InvalidArgument("tuning needs a non-empty dev set".into()));
        }
        if refs.iter().any(Vec::is_empty) {
            return Err(Error::InvalidArgument("every dev sentence needs a reference".into()));
        }
        let n = refs.len();
        Ok(Self {
            refs,
            entries: vec![Vec::new(); n],
            seen: vec![HashSet::new(); n],
        })
    }

    pub fn num_sentences(&self) -> usize {
        self.refs.len()
    }

    /// Total number of entries.
    pub fn len(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self, sentence: usize) -> &[PoolEntry] {
        &self.entries[sentence]
    }

    /// Adds a candidate unless its string is already pooled; returns
    /// whether it was new.
    pub fn add(&mut self, sentence: usize, tokens: &[String], features: FeatureVector) -> Result<bool> {
        let text = tokens.join(" ");
        if self.seen[sentence].contains(&text) {
            return Ok(false);
        }
        let hyp = Sentence::new(tokens.iter().cloned())?;
        let stats = BleuStats::sentence(&hyp, &self.refs[sentence], BLEU_ORDER)?;
        self.seen[sentence].insert(text.clone());
        self.entries[sentence].push(PoolEntry { text, features, stats });
        Ok(true)
    }

    /// Merges an n-best list; returns the number of new entries.
    pub fn merge(&mut self, sentence: usize, list: &[Translation]) -> Result<usize> {
        let mut added = 0;
        for t in list {
            added += usize::from(self.add(sentence, &t.tokens, t.features)?);
        }
        Ok(added)
    }

    /// Index of the best entry per sentence under `w`; equal scores go to
    /// the smaller string.
    pub fn argmax(&self, w: &FeatureWeights) -> Vec<usize> {
        self.entries
            .iter()
            .map(|es| {
                (0..es.len())
                    .max_by(|&a, &b| {
                        es[a]
                            .features
                            .dot(w)
                            .total_cmp(&es[b].features.dot(w))
                            .then_with(|| es[b].text.cmp(&es[a].text))
                    })
                    .unwrap_or(0)
            })
            .collect()
    }

    pub(crate) fn stats_of(&self, choice: &[usize]) -> BleuStats {
        let mut total = BleuStats::zero(BLEU_ORDER);
        for (es, &k) in self.entries.iter().zip(choice) {
            if let Some(e) = es.get(k) {
                total += &e.stats;
            }
        }
        total
    }

    /// Smoothed corpus BLEU of the pool-argmax translations under `w`.
    pub fn bleu(&self, w: &FeatureWeights) -> f64 {
        self.stats_of(&self.argmax(w)).score(true, RefLength::Closest)
    }
}
