use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

pub const BLEU_ORDER: usize = 4;

/// Which reference length enters the brevity penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefLength {
    /// Closest to the hypothesis length, shorter on ties.
    #[default]
    Closest,
    /// Shortest reference. Unlike `Closest`, adding references can only
    /// raise the score.
    Shortest,
}

/// Additive sufficient statistics for corpus BLEU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BleuStats {
    /// Clipped n-gram matches, index `n - 1`.
    pub matches: Vec<u64>,
    /// Hypothesis n-grams, index `n - 1`.
    pub totals: Vec<u64>,
    pub hyp_len: u64,
    /// Sum of closest reference lengths.
    pub closest_ref_len: u64,
    /// Sum of shortest reference lengths.
    pub shortest_ref_len: u64,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    for g in tokens.windows(n) {
        *counts.entry(g).or_insert(0) += 1;
    }
    counts
}

impl BleuStats {
    pub fn zero(max_n: usize) -> Self {
        Self {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            hyp_len: 0,
            closest_ref_len: 0,
            shortest_ref_len: 0,
        }
    }

    /// Statistics of one hypothesis against its reference set. Counts are
    /// clipped by the maximum count in any single reference.
    pub fn sentence(hyp: &Sentence, refs: &[Sentence], max_n: usize) -> Result<Self> {
        if refs.is_empty() {
            return Err(Error::InvalidArgument("empty reference set".into()));
        }
        let h = hyp.tokens();
        let mut stats = Self::zero(max_n);
        stats.hyp_len = h.len() as u64;
        let lens = refs.iter().map(|r| r.len() as u64);
        stats.closest_ref_len = lens.clone().min_by_key(|&r| (r.abs_diff(stats.hyp_len), r)).unwrap();
        stats.shortest_ref_len = lens.min().unwrap();
        for n in 1..=max_n {
            let hyp_counts = ngram_counts(h, n);
            let mut max_ref: HashMap<&[String], u64> = HashMap::new();
            for r in refs {
                for (g, c) in ngram_counts(r.tokens(), n) {
                    let m = max_ref.entry(g).or_insert(0);
                    *m = (*m).max(c);
                }
            }
            stats.totals[n - 1] = hyp_counts.values().sum();
            stats.matches[n - 1] = hyp_counts.iter().map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0))).sum();
        }
        Ok(stats)
    }

    pub fn max_n(&self) -> usize {
        self.totals.len()
    }

    /// Modified precision of order `n`. With `smooth`, orders above one
    /// add one to both counts.
    pub fn precision(&self, n: usize, smooth: bool) -> f64 {
        let (m, t) = (self.matches[n - 1] as f64, self.totals[n - 1] as f64);
        if smooth && n > 1 {
            (m + 1.0) / (t + 1.0)
        } else if t == 0.0 {
            0.0
        } else {
            m / t
        }
    }

    pub fn ref_len(&self, rl: RefLength) -> u64 {
        match rl {
            RefLength::Closest => self.closest_ref_len,
            RefLength::Shortest => self.shortest_ref_len,
        }
    }

    pub fn brevity_penalty(&self, rl: RefLength) -> f64 {
        let r = self.ref_len(rl);
        if self.hyp_len == 0 {
            0.0
        } else if self.hyp_len < r {
            (1.0 - r as f64 / self.hyp_len as f64).exp()
        } else {
            1.0
        }
    }

    /// Geometric mean of the precisions times the brevity penalty. Orders
    /// with no hypothesis n-grams at all are left out of the mean; any
    /// other zero precision makes the score zero.
    pub fn score(&self, smooth: bool, rl: RefLength) -> f64 {
        let mut log_sum = 0.0;
        let mut used = 0;
        for n in 1..=self.max_n() {
            if self.totals[n - 1] == 0 && !(smooth && n > 1) {
                if n == 1 {
                    return 0.0;
                }
                continue;
            }
            let p = self.precision(n, smooth);
            if p == 0.0 {
                return 0.0;
            }
            log_sum += p.ln();
            used += 1;
        }
        self.brevity_penalty(rl) * (log_sum / used as f64).exp()
    }

    pub fn report(&self, smooth: bool, rl: RefLength) -> BleuReport {
        BleuReport {
            bleu: self.score(smooth, rl),
            precisions: (1..=self.max_n()).map(|n| self.precision(n, smooth)).collect(),
            brevity_penalty: self.brevity_penalty(rl),
            hyp_len: self.hyp_len,
            ref_len: self.ref_len(rl),
        }
    }
}

impl AddAssign<&BleuStats> for BleuStats {
    fn add_assign(&mut self, rhs: &BleuStats) {
        for (a, b) in self.matches.iter_mut().zip(&rhs.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&rhs.totals) {
            *a += b;
        }
        self.hyp_len += rhs.hyp_len;
        self.closest_ref_len += rhs.closest_ref_len;
        self.shortest_ref_len += rhs.shortest_ref_len;
    }
}

impl Add<&BleuStats> for BleuStats {
    type Output = BleuStats;
    fn add(mut self, rhs: &BleuStats) -> BleuStats {
        self += rhs;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BleuReport {
    /// In `[0, 1]`.
    pub bleu: f64,
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuReport {
    pub fn ratio(&self) -> f64 {
        if self.ref_len == 0 {
            0.0
        } else {
            self.hyp_len as f64 / self.ref_len as f64
        }
    }
}

impl fmt::Display for BleuReport {
    /// `BLEU = 16.30 (45.2/20.1/10.0/5.0, BP=1.000, ratio=1.020)`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.precisions.iter().map(|p| format!("{:.1}", 100.0 * p)).collect();
        write!(
            f,
            "BLEU = {:.2} ({}, BP={:.3}, ratio={:.3})",
            100.0 * self.bleu,
            p.join("/"),
            self.brevity_penalty,
            self.ratio()
        )
    }
}

/// Corpus BLEU of `hyps` against per-sentence reference sets, with the
/// closest reference length.
pub fn bleu(hyps: &[Sentence], refs: &[Vec<Sentence>], max_n: usize, smooth: bool) -> Result<BleuReport> {
    bleu_with(hyps, refs, max_n, smooth, RefLength::Closest)
}

pub fn bleu_with(hyps: &[Sentence], refs: &[Vec<Sentence>], max_n: usize, smooth: bool, rl: RefLength) -> Result<BleuReport> {
    if hyps.len() != refs.len() {
        return Err(Error::DimensionMismatch {
            expected: (hyps.len(), 1),
            found: (refs.len(), 1),
        });
    }
    if max_n == 0 {
        return Err(Error::InvalidArgument("BLEU order must be at least 1".into()));
    }
    let mut total = BleuStats::zero(max_n);
    for (h, r) in hyps.iter().zip(refs) {
        total += &BleuStats::sentence(h, r, max_n)?;
    }
    Ok(total.report(smooth, rl))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(t: &str) -> Sentence {
        Sentence::from_tokenized(t).unwrap()
    }

    fn corpus(lines: &[&str]) -> Vec<Sentence> {
        lines.iter().map(|l| s(l)).collect()
    }

    #[test]
    fn clipping_example() {
        let r = bleu(&[s("the the the")], &[vec![s("the cat")]], 4, false).unwrap();
        assert!((r.precisions[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.precisions[1], 0.0);
        assert_eq!(r.bleu, 0.0);
    }

    #[test]
    fn identity_is_one() {
        let h = corpus(&["a b c d e", "x y", "মই গুৱাহাটী বিশ্ববিদ্যালয়ৰ ছাত্ৰ"]);
        let refs: Vec<Vec<Sentence>> = h.iter().map(|x| vec![x.clone()]).collect();
        let r = bleu(&h, &refs, 4, false).unwrap();
        assert_eq!(r.bleu, 1.0);
        assert_eq!(r.brevity_penalty, 1.0);
        assert_eq!(r.to_string(), "BLEU = 100.00 (100.0/100.0/100.0/100.0, BP=1.000, ratio=1.000)");
        let short = corpus(&["a", "b c"]);
        let refs: Vec<Vec<Sentence>> = short.iter().map(|x| vec![x.clone()]).collect();
        assert_eq!(bleu(&short, &refs, 4, false).unwrap().bleu, 1.0);
    }

    #[test]
    fn no_overlap_is_zero() {
        let r = bleu(&corpus(&["a b c d"]), &[vec![s("w x y z")]], 4, false).unwrap();
        assert_eq!(r.bleu, 0.0);
        assert_eq!(bleu(&corpus(&["a b c d"]), &[vec![s("w x y z")]], 4, true).unwrap().bleu, 0.0);
    }

    #[test]
    fn brevity_penalty_and_closest_length() {
        // hyp length 4, refs 3 and 5: tie goes to the shorter, so BP = 1.
        let st = BleuStats::sentence(&s("a b c d"), &[s("a b c"), s("a b c d e")], 4).unwrap();
        assert_eq!(st.closest_ref_len, 3);
        assert_eq!(st.brevity_penalty(RefLength::Closest), 1.0);
        let st = BleuStats::sentence(&s("a b"), &[s("a b c d")], 4).unwrap();
        assert!((st.brevity_penalty(RefLength::Closest) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn closest_length_can_drop_when_a_reference_is_added() {
        let h = [s("a b c d")];
        let one = [vec![s("a b")]];
        let two = [vec![s("a b"), s("x y z w v")]];
        let before = bleu(&h, &one, 1, false).unwrap().bleu;
        let after = bleu(&h, &two, 1, false).unwrap().bleu;
        assert!(after < before);
        let before = bleu_with(&h, &one, 1, false, RefLength::Shortest).unwrap().bleu;
        let after = bleu_with(&h, &two, 1, false, RefLength::Shortest).unwrap().bleu;
        assert_eq!(after, before);
    }

    #[test]
    fn hand_computed_score() {
        // hyp "a b c d", ref "a b c e": p = 3/4, 2/3, 1/2, 0/1.
        let st = BleuStats::sentence(&s("a b c d"), &[s("a b c e")], 4).unwrap();
        assert_eq!(st.matches, vec![3, 2, 1, 0]);
        assert_eq!(st.totals, vec![4, 3, 2, 1]);
        assert_eq!(st.score(false, RefLength::Closest), 0.0);
        let smoothed = (0.75f64 * (3.0 / 4.0) * (2.0 / 3.0) * (1.0 / 2.0)).powf(0.25);
        assert!((st.score(true, RefLength::Closest) - smoothed).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(bleu(&corpus(&["a"]), &[], 4, false).is_err());
        assert!(bleu(&corpus(&["a"]), &[vec![]], 4, false).is_err());
    }

    fn words() -> impl Strategy<Value = Sentence> {
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 1..7).prop_map(|w| Sentence::new(w).unwrap())
    }

    proptest! {
        #[test]
        fn adding_a_reference_never_lowers_precision_or_shortest_bleu(
            rows in prop::collection::vec((words(), words(), words()), 1..6),
            smooth in any::<bool>(),
        ) {
            let hyps: Vec<Sentence> = rows.iter().map(|r| r.0.clone()).collect();
            let one: Vec<Vec<Sentence>> = rows.iter().map(|r| vec![r.1.clone()]).collect();
            let two: Vec<Vec<Sentence>> = rows.iter().map(|r| vec![r.1.clone(), r.2.clone()]).collect();
            let a = bleu_with(&hyps, &one, 4, smooth, RefLength::Shortest).unwrap();
            let b = bleu_with(&hyps, &two, 4, smooth, RefLength::Shortest).unwrap();
            prop_assert!(b.bleu >= a.bleu, "{} -> {}", a.bleu, b.bleu);
            for (pa, pb) in a.precisions.iter().zip(&b.precisions) {
                prop_assert!(pb >= pa);
            }
            prop_assert!((0.0..=1.0).contains(&a.bleu));
        }

        #[test]
        fn corpus_order_does_not_matter(rows in prop::collection::vec((words(), words()), 1..6), rot in 0usize..6) {
            let hyps: Vec<Sentence> = rows.iter().map(|r| r.0.clone()).collect();
            let refs: Vec<Vec<Sentence>> = rows.iter().map(|r| vec![r.1.clone()]).collect();
            let k = rot % rows.len();
            let (mut h2, mut r2) = (hyps.clone(), refs.clone());
            h2.rotate_left(k);
            r2.rotate_left(k);
            prop_assert_eq!(bleu(&hyps, &refs, 4, false).unwrap(), bleu(&h2, &r2, 4, false).unwrap());
        }

        #[test]
        fn self_bleu_is_exactly_one(hyps in prop::collection::vec(words(), 1..6)) {
            let refs: Vec<Vec<Sentence>> = hyps.iter().map(|h| vec![h.clone()]).collect();
            prop_assert_eq!(bleu(&hyps, &refs, 4, false).unwrap().bleu, 1.0);
        }
    }
}
