//! IBM Model 1 trained by expectation maximization.
//!
//! Every conditioning sentence gets a NULL word prepended at position 0. The
//! likelihood of a generated sentence `f` (length m) given `e` (length n) sums
//! over all `(n + 1)^m` alignments, which factorizes per target word:
//!
//! ```text
//! P(f | e) = 1 / (n + 1)^m · Π_j Σ_i t(f_j | e_i)
//! ```

use std::collections::HashMap;

use super::{AlignmentMatrix, Direction, TTable};
use crate::corpus::{ParallelCorpus, SentencePair};
use crate::error::{Error, Result};
use crate::vocab::{Vocabulary, NULL_ID};

struct Encoded {
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
    /// Source ids with NULL at position 0.
    pairs: Vec<(Vec<u32>, Vec<u32>)>,
}

fn encode(corpus: &ParallelCorpus) -> Encoded {
    let mut source_vocab = Vocabulary::new();
    let mut target_vocab = Vocabulary::new();
    let pairs = corpus
        .pairs
        .iter()
        .map(|p| {
            let mut src = vec![NULL_ID];
            src.extend(p.source.tokens().iter().map(|t| source_vocab.insert(t)));
            let tgt = p.target.tokens().iter().map(|t| target_vocab.insert(t)).collect();
            (src, tgt)
        })
        .collect();
    Encoded {
        source_vocab,
        target_vocab,
        pairs,
    }
}

/// Trains `t(target | source)` from a uniform start.
pub fn ibm1_train(corpus: &ParallelCorpus, iterations: usize) -> Result<TTable> {
    ibm1_train_logged(corpus, iterations).map(|(table, _)| table)
}

/// Like [`ibm1_train`], also returning the corpus log-likelihood under the
/// uniform start followed by its value after each iteration.
pub fn ibm1_train_logged(corpus: &ParallelCorpus, iterations: usize) -> Result<(TTable, Vec<f64>)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if iterations == 0 {
        return Err(Error::InvalidArgument("EM needs at least one iteration".into()));
    }
    let data = encode(corpus);
    let uniform = 1.0 / data.target_vocab.words().count() as f64;
    let mut probs: Option<HashMap<(u32, u32), f64>> = None;
    let t = |probs: &Option<HashMap<(u32, u32), f64>>, e: u32, f: u32| match probs {
        None => uniform,
        Some(p) => p.get(&(e, f)).copied().unwrap_or(0.0),
    };

    let loglik_of = |probs: &Option<HashMap<(u32, u32), f64>>| -> f64 {
        data.pairs
            .iter()
            .map(|(src, tgt)| {
                let mut ll = -(tgt.len() as f64) * (src.len() as f64).ln();
                for &f in tgt {
                    ll += src.iter().map(|&e| t(probs, e, f)).sum::<f64>().ln();
                }
                ll
            })
            .sum()
    };
    let mut history = vec![loglik_of(&probs)];

    let mut row = Vec::new();
    for _ in 0..iterations {
        // E-step: expected link counts. Sums run in corpus order so the
        // result is bit-for-bit reproducible.
        let mut counts: HashMap<(u32, u32), f64> = HashMap::new();
        let mut totals: HashMap<u32, f64> = HashMap::new();
        for (src, tgt) in &data.pairs {
            for &f in tgt {
                row.clear();
                row.extend(src.iter().map(|&e| t(&probs, e, f)));
                let norm: f64 = row.iter().sum();
                if norm <= 0.0 {
                    continue;
                }
                for (&e, &p) in src.iter().zip(&row) {
                    let delta = p / norm;
                    *counts.entry((e, f)).or_default() += delta;
                    *totals.entry(e).or_default() += delta;
                }
            }
        }
        // M-step: renormalize per conditioning word.
        let next: HashMap<(u32, u32), f64> = counts.into_iter().map(|((e, f), c)| ((e, f), c / totals[&e])).collect();
        probs = Some(next);
        history.push(loglik_of(&probs));
    }

    let table = TTable::from_parts(data.source_vocab, data.target_vocab, probs.unwrap());
    Ok((table, history))
}

/// `Σ_pairs ln[ 1/(n+1)^m · Π_j Σ_i t(f_j | e_i) ]` with NULL among the `e_i`.
///
/// A target word that no source word (nor NULL) can generate makes the
/// result `-inf`; callers should check `is_finite()`.
pub fn corpus_loglik(table: &TTable, corpus: &ParallelCorpus) -> f64 {
    corpus
        .pairs
        .iter()
        .map(|pair| {
            let src: Vec<Option<u32>> = std::iter::once(Some(NULL_ID))
                .chain(pair.source.tokens().iter().map(|t| table.source_id(t)))
                .collect();
            let tgt: Vec<Option<u32>> = pair.target.tokens().iter().map(|t| table.target_id(t)).collect();
            let mut ll = -(tgt.len() as f64) * (src.len() as f64).ln();
            for f in tgt {
                let inner: f64 = match f {
                    None => 0.0,
                    Some(f) => src.iter().flatten().map(|&e| table.prob_ids(e, f)).sum(),
                };
                ll += inner.ln();
            }
            ll
        })
        .sum()
}

/// Posterior link probabilities: `out[j][i]` is the probability that target
/// word `j` was generated by source position `i`, where `i = 0` is NULL and
/// `i = k + 1` is source word `k`.
pub fn alignment_posteriors(table: &TTable, pair: &SentencePair) -> Vec<Vec<f64>> {
    let src: Vec<Option<u32>> = std::iter::once(Some(NULL_ID))
        .chain(pair.source.tokens().iter().map(|t| table.source_id(t)))
        .collect();
    pair.target
        .tokens()
        .iter()
        .map(|f| {
            let f = table.target_id(f);
            let row: Vec<f64> = src
                .iter()
                .map(|e| match (e, f) {
                    (Some(e), Some(f)) => table.prob_ids(*e, f),
                    _ => 0.0,
                })
                .collect();
            let norm: f64 = row.iter().sum();
            if norm > 0.0 {
                row.into_iter().map(|p| p / norm).collect()
            } else {
                row
            }
        })
        .collect()
}

/// Most probable Model 1 alignment of `pair`, links in source-target
/// orientation.
///
/// Each generated word links to `argmax_i t(f | e_i)` over NULL and the
/// conditioning words; ties go to the smallest position with NULL first, and
/// a NULL choice emits no link.
pub fn viterbi_align(table: &TTable, pair: &SentencePair, direction: Direction) -> AlignmentMatrix {
    let (cond, generated) = match direction {
        Direction::SourceToTarget => (&pair.source, &pair.target),
        Direction::TargetToSource => (&pair.target, &pair.source),
    };
    let cond_ids: Vec<Option<u32>> = cond.tokens().iter().map(|t| table.source_id(t)).collect();
    let mut links = AlignmentMatrix::new(generated.len(), cond.len());
    for (j, f) in generated.tokens().iter().enumerate() {
        let Some(f) = table.target_id(f) else {
            continue;
        };
        let mut best = table.prob_ids(NULL_ID, f);
        let mut best_pos = None;
        for (i, e) in cond_ids.iter().enumerate() {
            let p = e.map_or(0.0, |e| table.prob_ids(e, f));
            if p > best {
                best = p;
                best_pos = Some(i);
            }
        }
        if let Some(i) = best_pos {
            links.insert(j, i).unwrap();
        }
    }
    match direction {
        Direction::SourceToTarget => links.transposed(),
        Direction::TargetToSource => links,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Sentence;
    use crate::vocab::NULL_TOKEN;
    use proptest::prelude::*;

    fn pair(s: &str, t: &str) -> SentencePair {
        SentencePair::new(Sentence::from_tokenized(s).unwrap(), Sentence::from_tokenized(t).unwrap())
    }

    fn corpus(pairs: &[(&str, &str)]) -> ParallelCorpus {
        ParallelCorpus::new("src", "tgt").with_pairs(pairs.iter().map(|(s, t)| pair(s, t)).collect())
    }

    /// Straightforward Model 1 EM over strings, written independently of
    /// the id-based trainer.
    fn naive_em(pairs: &[(&str, &str)], iterations: usize) -> HashMap<(String, String), f64> {
        let tgt_vocab: std::collections::BTreeSet<&str> = pairs.iter().flat_map(|(_, t)| t.split_whitespace()).collect();
        let mut t: HashMap<(String, String), f64> = HashMap::new();
        let get = |t: &HashMap<(String, String), f64>, e: &str, f: &str, first: bool| {
            if first {
                1.0 / tgt_vocab.len() as f64
            } else {
                t.get(&(e.to_string(), f.to_string())).copied().unwrap_or(0.0)
            }
        };
        for it in 0..iterations {
            let mut count: HashMap<(String, String), f64> = HashMap::new();
            let mut total: HashMap<String, f64> = HashMap::new();
            for (s, tt) in pairs {
                let src: Vec<&str> = std::iter::once(NULL_TOKEN).chain(s.split_whitespace()).collect();
                for f in tt.split_whitespace() {
                    let z: f64 = src.iter().map(|e| get(&t, e, f, it == 0)).sum();
                    for e in &src {
                        let c = get(&t, e, f, it == 0) / z;
                        *count.entry((e.to_string(), f.to_string())).or_default() += c;
                        *total.entry(e.to_string()).or_default() += c;
                    }
                }
            }
            t = count
                .into_iter()
                .map(|((e, f), c)| {
                    let tot = total[&e];
                    ((e, f), c / tot)
                })
                .collect();
        }
        t
    }

    #[test]
    fn single_pair_null_competition() {
        let c = corpus(&[("a", "x")]);
        let table = ibm1_train(&c, 1).unwrap();
        // Only one target word exists, so each row is trivially {x: 1}; the
        // competition between NULL and `a` shows up in the link posterior.
        assert_eq!(table.prob("a", "x"), 1.0);
        assert_eq!(table.null_prob("x"), 1.0);
        let post = alignment_posteriors(&table, &c.pairs[0]);
        assert_eq!(post, vec![vec![0.5, 0.5]]);
        let table10 = ibm1_train(&c, 10).unwrap();
        assert_eq!(alignment_posteriors(&table10, &c.pairs[0]), vec![vec![0.5, 0.5]]);
    }

    #[test]
    fn two_pair_convergence_matches_naive_oracle() {
        let pairs = [("a b", "x y"), ("a", "x")];
        let table = ibm1_train(&corpus(&pairs), 20).unwrap();
        let oracle = naive_em(&pairs, 20);
        for ((e, f), p) in &oracle {
            assert!((table.prob(e, f) - p).abs() < 1e-12, "t({f}|{e})");
        }
        assert!(table.prob("a", "x") > 0.9);
        assert!(table.prob("b", "y") > 0.9);
    }

    #[test]
    fn matches_oracle_on_bengali_fixture() {
        let pairs = [
            ("আসামে একটি সুন্দর জায়গা ।", "অসম এখন সুন্দৰ ঠাই ।"),
            ("ভারত একটি বড় দেশ", "ভাৰত এখন ডাঙৰ দেশ"),
            ("দিল্লী ভারতের রাজধানী", "দিল্লী ভাৰতৰ ৰাজধানী"),
        ];
        let table = ibm1_train(&corpus(&pairs), 5).unwrap();
        for ((e, f), p) in naive_em(&pairs, 5) {
            assert!((table.prob(&e, &f) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_start() {
        let c = corpus(&[("a b", "x y z"), ("c", "w")]);
        let (_, history) = ibm1_train_logged(&c, 1).unwrap();
        // Uniform t = 1/4: pair 1 gives 3·ln(3/4) - 3·ln 3, pair 2 ln(2/4) - ln 2.
        let expected = 3.0 * (0.75f64).ln() - 3.0 * 3f64.ln() + (0.5f64).ln() - 2f64.ln();
        assert!((history[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn loglik_hand_values() {
        let c = corpus(&[("a", "x")]);
        let half = TTable::from_entries([("a", "x", 0.5), (NULL_TOKEN, "x", 0.5)]);
        // ln[ 1/(1+1)^1 · (1/2 + 1/2) ]
        assert!((corpus_loglik(&half, &c) - 0.5f64.ln()).abs() < 1e-15);
        let perfect = TTable::from_entries([("a", "x", 1.0)]);
        assert!((corpus_loglik(&perfect, &c) - (1.0f64 / 2.0).ln()).abs() < 1e-15);
        let unseen = corpus(&[("a", "q")]);
        assert_eq!(corpus_loglik(&perfect, &unseen), f64::NEG_INFINITY);
    }

    #[test]
    fn errors() {
        assert!(matches!(ibm1_train(&corpus(&[]), 3), Err(Error::EmptyCorpus)));
        assert!(ibm1_train(&corpus(&[("a", "b")]), 0).is_err());
    }

    #[test]
    fn worked_example_viterbi_is_monotone() {
        let p = pair("আসামে একটি সুন্দর জায়গা ।", "অসম এখন সুন্দৰ ঠাই ।");
        let mut entries = Vec::new();
        for (i, e) in p.source.tokens().iter().enumerate() {
            for (j, f) in p.target.tokens().iter().enumerate() {
                entries.push((e.as_str(), f.as_str(), if i == j { 0.8 } else { 0.05 }));
            }
        }
        for f in p.target.tokens() {
            entries.push((NULL_TOKEN, f.as_str(), 0.01));
        }
        let table = TTable::from_entries(entries);
        let a = viterbi_align(&table, &p, Direction::SourceToTarget);
        assert_eq!(a.to_pharaoh(), "0-0 1-1 2-2 3-3 4-4");
    }

    #[test]
    fn unseen_words_align_to_null() {
        let table = TTable::from_entries([("a", "x", 1.0)]);
        let a = viterbi_align(&table, &pair("a b", "q r"), Direction::SourceToTarget);
        assert!(a.is_empty());
        assert_eq!(a.dims(), (2, 2));
    }

    #[test]
    fn two_by_two_argmax_by_hand() {
        // x: t(x|a)=0.3, t(x|b)=0.6 → b; y: t(y|a)=0.7, t(y|b)=0.4 → a.
        let table = TTable::from_entries([
            ("a", "x", 0.3),
            ("a", "y", 0.7),
            ("b", "x", 0.6),
            ("b", "y", 0.4),
            (NULL_TOKEN, "x", 0.5),
            (NULL_TOKEN, "y", 0.5),
        ]);
        let a = viterbi_align(&table, &pair("a b", "x y"), Direction::SourceToTarget);
        assert_eq!(a.to_pharaoh(), "0-1 1-0");
        // A source-side tie resolves to the smaller index.
        let tie = TTable::from_entries([("a", "x", 0.6), ("b", "x", 0.6), (NULL_TOKEN, "x", 0.1)]);
        let a = viterbi_align(&tie, &pair("a b", "x"), Direction::SourceToTarget);
        assert_eq!(a.to_pharaoh(), "0-0");
    }

    #[test]
    fn reverse_direction_is_transposed() {
        // Reverse table t(source | target).
        let rev = TTable::from_entries([("x", "a", 0.9), ("y", "b", 0.9), ("x", "b", 0.1), ("y", "a", 0.1)]);
        let a = viterbi_align(&rev, &pair("a b", "y x"), Direction::TargetToSource);
        assert_eq!(a.dims(), (2, 2));
        assert_eq!(a.to_pharaoh(), "0-1 1-0");
    }

    #[test]
    fn training_is_deterministic() {
        let c = corpus(&[("a b c", "x y z"), ("b c", "y z"), ("c a", "z x w")]);
        let t1 = ibm1_train(&c, 7).unwrap();
        let t2 = ibm1_train(&c, 7).unwrap();
        let bits = |t: &TTable| {
            t.entries()
                .iter()
                .map(|e| (e.0.to_owned(), e.1.to_owned(), e.2.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&t1), bits(&t2));
    }

    fn toy_corpus() -> impl Strategy<Value = Vec<(String, String)>> {
        let side = || prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 1..=4).prop_map(|v| v.join(" "));
        prop::collection::vec((side(), side().prop_map(|s| s.to_uppercase())), 1..=5)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn em_is_monotone_and_normalized(pairs in toy_corpus(), iters in 1usize..10) {
            let refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            let c = corpus(&refs);
            let (table, history) = ibm1_train_logged(&c, iters).unwrap();
            for w in history.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9, "{:?}", history);
            }
            prop_assert!((corpus_loglik(&table, &c) - history[iters]).abs() < 1e-9);
            for (_, s) in table.row_sums() {
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn viterbi_is_scale_invariant(pairs in toy_corpus(), factor in 0.01f64..100.0) {
            let refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            let c = corpus(&refs);
            let table = ibm1_train(&c, 3).unwrap();
            let scaled = table.scaled(factor);
            for p in &c.pairs {
                prop_assert_eq!(
                    viterbi_align(&table, p, Direction::SourceToTarget),
                    viterbi_align(&scaled, p, Direction::SourceToTarget)
                );
            }
        }
    }
}
