//! Word alignment: IBM Model 1 lexical translation tables, Viterbi links and
//! symmetrization of the two directional alignments.

mod ibm1;

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{ParallelCorpus, SentencePair};
use crate::error::{Error, Result};
use crate::vocab::{Vocabulary, NULL_ID, NULL_TOKEN};

pub use ibm1::{alignment_posteriors, corpus_loglik, ibm1_train, ibm1_train_logged, viterbi_align};

pub const DEFAULT_EM_ITERATIONS: usize = 5;

/// Lexical translation probabilities `t(f | e)` for one direction.
///
/// `e` ranges over the conditioning side plus the NULL word, `f` over the
/// generated side. Rows are normalized: `Σ_f t(f | e) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TTable {
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
    probs: HashMap<(u32, u32), f64>,
}

impl TTable {
    /// Builds a table from `(e, f, t(f|e))` triples; use [`NULL_TOKEN`] for
    /// the NULL word. Rows are taken as given, not renormalized.
    pub fn from_entries<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str, f64)>) -> Self {
        let mut table = TTable {
            source_vocab: Vocabulary::new(),
            target_vocab: Vocabulary::new(),
            probs: HashMap::new(),
        };
        for (e, f, p) in entries {
            let e = table.source_vocab.insert(e);
            let f = table.target_vocab.insert(f);
            table.probs.insert((e, f), p);
        }
        table
    }

    /// `t(f | e)`; zero for unknown words or pairs that never co-occurred.
    pub fn prob(&self, e: &str, f: &str) -> f64 {
        match (self.source_vocab.id(e), self.target_vocab.id(f)) {
            (Some(e), Some(f)) => self.prob_ids(e, f),
            _ => 0.0,
        }
    }

    pub fn null_prob(&self, f: &str) -> f64 {
        self.prob(NULL_TOKEN, f)
    }

    pub(crate) fn prob_ids(&self, e: u32, f: u32) -> f64 {
        self.probs.get(&(e, f)).copied().unwrap_or(0.0)
    }

    pub(crate) fn source_id(&self, e: &str) -> Option<u32> {
        self.source_vocab.id(e)
    }

    pub(crate) fn target_id(&self, f: &str) -> Option<u32> {
        self.target_vocab.id(f)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `Σ_f t(f | e)` for every conditioning word with entries, NULL included.
    pub fn row_sums(&self) -> Vec<(String, f64)> {
        let mut sums: HashMap<u32, f64> = HashMap::new();
        let mut keys: Vec<_> = self.probs.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            *sums.entry(key.0).or_default() += self.probs[&key];
        }
        let mut out: Vec<_> = sums
            .into_iter()
            .map(|(e, s)| (self.source_vocab.token(e).unwrap().to_owned(), s))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Entries as `(e, f, p)` sorted by `(e, f)` strings.
    pub fn entries(&self) -> Vec<(&str, &str, f64)> {
        let mut out: Vec<_> = self
            .probs
            .iter()
            .map(|(&(e, f), &p)| (self.source_vocab.token(e).unwrap(), self.target_vocab.token(f).unwrap(), p))
            .collect();
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out
    }

    /// Every `t(f|e)` multiplied by `factor`; used to check argmax invariance.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for p in out.probs.values_mut() {
            *p *= factor;
        }
        out
    }
}

impl TTable {
    pub(crate) fn from_parts(source_vocab: Vocabulary, target_vocab: Vocabulary, probs: HashMap<(u32, u32), f64>) -> Self {
        debug_assert!(source_vocab.id(NULL_TOKEN) == Some(NULL_ID));
        TTable {
            source_vocab,
            target_vocab,
            probs,
        }
    }
}

/// Which table conditions on which side of a [`SentencePair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Table `t(target | source)`: each target word picks a source word.
    SourceToTarget,
    /// Table `t(source | target)`: each source word picks a target word.
    TargetToSource,
}

/// A set of `(source index, target index)` links over a sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlignmentMatrix {
    source_len: usize,
    target_len: usize,
    links: BTreeSet<(usize, usize)>,
}

impl AlignmentMatrix {
    pub fn new(source_len: usize, target_len: usize) -> Self {
        AlignmentMatrix {
            source_len,
            target_len,
            links: BTreeSet::new(),
        }
    }

    pub fn for_pair(pair: &SentencePair) -> Self {
        Self::new(pair.source.len(), pair.target.len())
    }

    pub fn from_links(source_len: usize, target_len: usize, links: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut a = Self::new(source_len, target_len);
        for (i, j) in links {
            a.insert(i, j)?;
        }
        Ok(a)
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<bool> {
        if i >= self.source_len || j >= self.target_len {
            return Err(Error::InvalidArgument(format!(
                "link {i}-{j} outside a {}x{} alignment",
                self.source_len, self.target_len
            )));
        }
        Ok(self.links.insert((i, j)))
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.links.contains(&(i, j))
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.source_len, self.target_len)
    }

    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Same links with source and target exchanged.
    pub fn transposed(&self) -> Self {
        AlignmentMatrix {
            source_len: self.target_len,
            target_len: self.source_len,
            links: self.links.iter().map(|&(i, j)| (j, i)).collect(),
        }
    }

    /// Pharaoh format: space-separated `i-j` links, sorted.
    pub fn to_pharaoh(&self) -> String {
        let mut out = String::new();
        for (n, (i, j)) in self.links().enumerate() {
            if n > 0 {
                out.push(' ');
            }
            write!(out, "{i}-{j}").unwrap();
        }
        out
    }

    pub fn parse_pharaoh(line: &str, source_len: usize, target_len: usize) -> Result<Self> {
        let mut a = Self::new(source_len, target_len);
        for link in line.split_whitespace() {
            let (i, j) = link
                .split_once('-')
                .and_then(|(i, j)| Some((i.parse().ok()?, j.parse().ok()?)))
                .ok_or_else(|| Error::InvalidArgument(format!("malformed link {link:?}")))?;
            a.insert(i, j)?;
        }
        Ok(a)
    }
}

impl fmt::Display for AlignmentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_pharaoh())
    }
}

/// Writes one Pharaoh line per alignment.
pub fn write_alignments(path: &Path, alignments: &[AlignmentMatrix]) -> Result<()> {
    let mut out = String::new();
    for a in alignments {
        out.push_str(&a.to_pharaoh());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads Pharaoh alignments for the pairs of `corpus`.
pub fn read_alignments(path: &Path, corpus: &ParallelCorpus) -> Result<Vec<AlignmentMatrix>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != corpus.len() {
        return Err(Error::parse(
            path.display().to_string(),
            lines.len(),
            format!("expected {} alignment lines", corpus.len()),
        ));
    }
    lines
        .iter()
        .zip(&corpus.pairs)
        .enumerate()
        .map(|(n, (line, pair))| {
            AlignmentMatrix::parse_pharaoh(line, pair.source.len(), pair.target.len())
                .map_err(|e| Error::parse(path.display().to_string(), n + 1, e.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Symmetrization {
    Intersection,
    Union,
    #[default]
    GrowDiagFinalAnd,
}

impl FromStr for Symmetrization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intersection" | "intersect" => Ok(Symmetrization::Intersection),
            "union" => Ok(Symmetrization::Union),
            "grow-diag-final-and" => Ok(Symmetrization::GrowDiagFinalAnd),
            _ => Err(Error::InvalidArgument(format!("unknown symmetrization heuristic {s:?}"))),
        }
    }
}

impl fmt::Display for Symmetrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetrization::Intersection => "intersection",
            Symmetrization::Union => "union",
            Symmetrization::GrowDiagFinalAnd => "grow-diag-final-and",
        })
    }
}

const NEIGHBORS: [(isize, isize); 8] = [(-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)];

/// Merges two alignments of the same pair, both in source-target orientation.
pub fn symmetrize(fwd: &AlignmentMatrix, rev: &AlignmentMatrix, heuristic: Symmetrization) -> Result<AlignmentMatrix> {
    if fwd.dims() != rev.dims() {
        return Err(Error::DimensionMismatch {
            expected: fwd.dims(),
            found: rev.dims(),
        });
    }
    let (n, m) = fwd.dims();
    let union: BTreeSet<_> = fwd.links.union(&rev.links).copied().collect();
    let intersection: BTreeSet<_> = fwd.links.intersection(&rev.links).copied().collect();
    let links = match heuristic {
        Symmetrization::Intersection => intersection,
        Symmetrization::Union => union,
        Symmetrization::GrowDiagFinalAnd => {
            let mut links = intersection;
            let mut src_covered = vec![false; n];
            let mut tgt_covered = vec![false; m];
            for &(i, j) in &links {
                src_covered[i] = true;
                tgt_covered[j] = true;
            }
            // grow-diag: add union neighbors of existing links that cover a new word.
            loop {
                let mut added = false;
                for i in 0..n {
                    for j in 0..m {
                        if !links.contains(&(i, j)) {
                            continue;
                        }
                        for (di, dj) in NEIGHBORS {
                            let (Some(ni), Some(nj)) = (i.checked_add_signed(di), j.checked_add_signed(dj)) else {
                                continue;
                            };
                            if ni >= n || nj >= m || links.contains(&(ni, nj)) || !union.contains(&(ni, nj)) {
                                continue;
                            }
                            if !src_covered[ni] || !tgt_covered[nj] {
                                links.insert((ni, nj));
                                src_covered[ni] = true;
                                tgt_covered[nj] = true;
                                added = true;
                            }
                        }
                    }
                }
                if !added {
                    break;
                }
            }
            // final-and: union links whose words are both still uncovered.
            for &(i, j) in &union {
                if !src_covered[i] && !tgt_covered[j] {
                    links.insert((i, j));
                    src_covered[i] = true;
                    tgt_covered[j] = true;
                }
            }
            links
        }
    };
    Ok(AlignmentMatrix {
        source_len: n,
        target_len: m,
        links,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn am(n: usize, m: usize, links: &[(usize, usize)]) -> AlignmentMatrix {
        AlignmentMatrix::from_links(n, m, links.iter().copied()).unwrap()
    }

    const ALL: [Symmetrization; 3] = [
        Symmetrization::Intersection,
        Symmetrization::Union,
        Symmetrization::GrowDiagFinalAnd,
    ];

    #[test]
    fn identical_inputs_are_fixed_points() {
        let a = am(3, 4, &[(0, 0), (1, 2), (2, 3)]);
        for h in ALL {
            assert_eq!(symmetrize(&a, &a, h).unwrap(), a);
        }
    }

    #[test]
    fn grow_diag_adds_diagonal_neighbor() {
        let fwd = am(2, 2, &[(0, 0)]);
        let rev = am(2, 2, &[(0, 0), (1, 1)]);
        let gdfa = symmetrize(&fwd, &rev, Symmetrization::GrowDiagFinalAnd).unwrap();
        assert_eq!(gdfa, am(2, 2, &[(0, 0), (1, 1)]));
    }

    #[test]
    fn grow_diag_skips_links_between_covered_words() {
        // (1,0) neighbors (0,0) but both of its words are already covered.
        let fwd = am(2, 2, &[(0, 0), (1, 1)]);
        let rev = am(2, 2, &[(0, 0), (1, 1), (1, 0)]);
        let gdfa = symmetrize(&fwd, &rev, Symmetrization::GrowDiagFinalAnd).unwrap();
        assert_eq!(gdfa, fwd);
    }

    #[test]
    fn final_and_adds_isolated_union_link() {
        let fwd = am(4, 4, &[(0, 0), (3, 3)]);
        let rev = am(4, 4, &[(0, 0)]);
        let gdfa = symmetrize(&fwd, &rev, Symmetrization::GrowDiagFinalAnd).unwrap();
        assert_eq!(gdfa, am(4, 4, &[(0, 0), (3, 3)]));
    }

    #[test]
    fn disjoint_inputs() {
        let fwd = am(2, 2, &[(0, 0)]);
        let rev = am(2, 2, &[(1, 1)]);
        assert!(symmetrize(&fwd, &rev, Symmetrization::Intersection).unwrap().is_empty());
        assert_eq!(symmetrize(&fwd, &rev, Symmetrization::Union).unwrap().len(), 2);
    }

    #[test]
    fn dimension_mismatch() {
        let e = symmetrize(&am(2, 2, &[]), &am(2, 3, &[]), Symmetrization::Union).unwrap_err();
        assert!(matches!(e, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn pharaoh_format() {
        let a = am(3, 3, &[(2, 2), (0, 0), (1, 1)]);
        assert_eq!(a.to_pharaoh(), "0-0 1-1 2-2");
        assert_eq!(AlignmentMatrix::parse_pharaoh("0-0 1-1 2-2", 3, 3).unwrap(), a);
        assert_eq!(AlignmentMatrix::parse_pharaoh("", 3, 3).unwrap(), am(3, 3, &[]));
        assert!(AlignmentMatrix::parse_pharaoh("0-3", 3, 3).is_err());
        assert!(AlignmentMatrix::parse_pharaoh("0:1", 3, 3).is_err());
        assert_eq!(a.transposed().transposed(), a);
    }

    #[test]
    fn heuristic_names() {
        for h in ALL {
            assert_eq!(h.to_string().parse::<Symmetrization>().unwrap(), h);
        }
        assert!("grow".parse::<Symmetrization>().is_err());
    }

    fn random_matrix() -> impl Strategy<Value = AlignmentMatrix> {
        prop::collection::btree_set((0usize..5, 0usize..5), 0..12).prop_map(|links| AlignmentMatrix::from_links(5, 5, links).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn grow_diag_between_intersection_and_union(fwd in random_matrix(), rev in random_matrix()) {
            let i = symmetrize(&fwd, &rev, Symmetrization::Intersection).unwrap();
            let g = symmetrize(&fwd, &rev, Symmetrization::GrowDiagFinalAnd).unwrap();
            let u = symmetrize(&fwd, &rev, Symmetrization::Union).unwrap();
            prop_assert!(i.links.is_subset(&g.links));
            prop_assert!(g.links.is_subset(&u.links));
        }

        #[test]
        fn pharaoh_round_trip(a in random_matrix()) {
            prop_assert_eq!(AlignmentMatrix::parse_pharaoh(&a.to_pharaoh(), 5, 5).unwrap(), a);
        }
    }
}
