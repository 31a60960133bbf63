use std::collections::HashMap;

use crate::corpus::Sentence;
use crate::vocab::{Vocabulary, BOS_ID, EOS_ID};

/// Raw k-gram counts for `k = 1..=order` over `<s>`/`</s>` padded sentences.
///
/// The lone `<s>` is never counted as a unigram since it is never predicted.
/// Counts form a commutative monoid under [`NGramCounts::merge`].
#[derive(Debug, Clone, PartialEq)]
pub struct NGramCounts {
    order: usize,
    vocab: Vocabulary,
    levels: Vec<HashMap<Vec<u32>, u64>>,
}

impl NGramCounts {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "n-gram order must be at least 1");
        NGramCounts {
            order,
            vocab: Vocabulary::new(),
            levels: vec![HashMap::new(); order],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn add_sentence(&mut self, sentence: &Sentence) {
        let mut ids = Vec::with_capacity(sentence.len() + 2);
        ids.push(BOS_ID);
        ids.extend(sentence.tokens().iter().map(|t| self.vocab.insert(t)));
        ids.push(EOS_ID);
        self.add_ids(&ids);
    }

    fn add_ids(&mut self, padded: &[u32]) {
        for end in 1..padded.len() {
            for k in 1..=self.order.min(end + 1) {
                let gram = &padded[end + 1 - k..=end];
                *self.levels[k - 1].entry(gram.to_vec()).or_default() += 1;
            }
        }
    }

    /// Count of a token sequence; zero when unseen or longer than the order.
    pub fn count(&self, gram: &[&str]) -> u64 {
        if gram.is_empty() || gram.len() > self.order {
            return 0;
        }
        let ids: Option<Vec<u32>> = gram.iter().map(|t| self.vocab.id(t)).collect();
        ids.and_then(|ids| self.levels[gram.len() - 1].get(&ids).copied()).unwrap_or(0)
    }

    pub(crate) fn level(&self, k: usize) -> &HashMap<Vec<u32>, u64> {
        &self.levels[k - 1]
    }

    /// Number of distinct k-grams.
    pub fn distinct(&self, k: usize) -> usize {
        self.levels[k - 1].len()
    }

    /// Adds another shard's counts into this one.
    pub fn merge(&mut self, other: &NGramCounts) {
        assert_eq!(self.order, other.order, "cannot merge counts of different orders");
        let remap: Vec<u32> = (0..other.vocab.len() as u32)
            .map(|id| self.vocab.insert(other.vocab.token(id).unwrap()))
            .collect();
        for (level, theirs) in self.levels.iter_mut().zip(&other.levels) {
            for (gram, &c) in theirs {
                let key: Vec<u32> = gram.iter().map(|&id| remap[id as usize]).collect();
                *level.entry(key).or_default() += c;
            }
        }
    }
}

/// Counts all k-grams up to `order` over the given sentences.
pub fn count_ngrams<'a>(sentences: impl IntoIterator<Item = &'a Sentence>, order: usize) -> NGramCounts {
    let mut counts = NGramCounts::new(order);
    for sentence in sentences {
        counts.add_sentence(sentence);
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> Sentence {
        Sentence::from_tokenized(text).unwrap()
    }

    #[test]
    fn single_bigram_sentence() {
        let c = count_ngrams([&s("a b")], 2);
        assert_eq!(c.distinct(1), 3);
        for g in [&["a"][..], &["b"], &["</s>"], &["<s>", "a"], &["a", "b"], &["b", "</s>"]] {
            assert_eq!(c.count(g), 1, "{g:?}");
        }
        assert_eq!(c.count(&["<s>"]), 0);
        assert_eq!(c.distinct(2), 3);
    }

    #[test]
    fn repeated_unigrams() {
        let c = count_ngrams([&s("a"), &s("a")], 1);
        assert_eq!(c.count(&["a"]), 2);
        assert_eq!(c.count(&["</s>"]), 2);
        assert_eq!(c.distinct(1), 2);
    }

    #[test]
    fn trigram_hand_enumeration() {
        // <s> a b </s> | <s> a </s> | <s> b a b </s>
        let c = count_ngrams([&s("a b"), &s("a"), &s("b a b")], 3);
        let expect: &[(&[&str], u64)] = &[
            (&["a"], 3),
            (&["b"], 3),
            (&["</s>"], 3),
            (&["<s>", "a"], 2),
            (&["<s>", "b"], 1),
            (&["a", "b"], 2),
            (&["b", "a"], 1),
            (&["a", "</s>"], 1),
            (&["b", "</s>"], 2),
            (&["<s>", "a", "b"], 1),
            (&["<s>", "a", "</s>"], 1),
            (&["<s>", "b", "a"], 1),
            (&["a", "b", "</s>"], 2),
            (&["b", "a", "b"], 1),
        ];
        for (g, n) in expect {
            assert_eq!(c.count(g), *n, "{g:?}");
        }
        assert_eq!(c.distinct(1), 3);
        assert_eq!(c.distinct(2), 6);
        assert_eq!(c.distinct(3), 5);
    }

    #[test]
    fn merge_equals_joint_count() {
        let left = count_ngrams([&s("a b c"), &s("b")], 3);
        let right = count_ngrams([&s("c a"), &s("a b c")], 3);
        let joint = count_ngrams([&s("a b c"), &s("b"), &s("c a"), &s("a b c")], 3);
        let mut merged = left.clone();
        merged.merge(&right);
        for g in [&["a", "b", "c"][..], &["a", "b"], &["c", "a"], &["c", "</s>"], &["b"]] {
            assert_eq!(merged.count(g), joint.count(g), "{g:?}");
        }
        for k in 1..=3 {
            assert_eq!(merged.distinct(k), joint.distinct(k));
        }
    }
}
