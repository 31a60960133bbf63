use crate::align::AlignmentMatrix;
use crate::corpus::{ParallelCorpus, SentencePair};
use crate::error::{Error, Result};

use super::reordering::Orientation;

pub const DEFAULT_MAX_PHRASE_LEN: usize = 7;

/// A contiguous source span paired with a contiguous target span.
/// Spans are inclusive and 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhrasePair {
    pub source_span: (usize, usize),
    pub target_span: (usize, usize),
    pub source: String,
    pub target: String,
}

/// One extracted phrase pair together with what scoring and reordering need.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseOccurrence {
    pub phrase: PhrasePair,
    /// Links inside the box, relative to the box corner.
    pub links: Vec<(usize, usize)>,
    /// Orientation with respect to the preceding target word.
    pub prev: Orientation,
    /// Orientation with respect to the following target word.
    pub next: Orientation,
}

/// Whether the box `[i1, i2] x [j1, j2]` is consistent with `a`: it holds at
/// least one link and no link leaves it on one side only.
pub fn is_consistent(a: &AlignmentMatrix, (i1, i2): (usize, usize), (j1, j2): (usize, usize)) -> bool {
    let mut inside = false;
    for (i, j) in a.links() {
        let in_src = (i1..=i2).contains(&i);
        let in_tgt = (j1..=j2).contains(&j);
        if in_src != in_tgt {
            return false;
        }
        inside |= in_src;
    }
    inside
}

fn check_dims(pair: &SentencePair, a: &AlignmentMatrix) -> Result<()> {
    let expected = (pair.source.len(), pair.target.len());
    if a.dims() != expected {
        return Err(Error::DimensionMismatch { expected, found: a.dims() });
    }
    Ok(())
}

/// All alignment-consistent phrase pairs with both sides at most `max_len`
/// words, including extensions over unaligned boundary words. Sorted by span.
pub fn extract_phrases(pair: &SentencePair, a: &AlignmentMatrix, max_len: usize) -> Result<Vec<PhrasePair>> {
    check_dims(pair, a)?;
    let (n, m) = a.dims();
    let mut tgt_aligned = vec![false; m];
    let mut by_source: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j) in a.links() {
        tgt_aligned[j] = true;
        by_source[i].push(j);
    }
    let src = pair.source.tokens();
    let tgt = pair.target.tokens();
    let mut out = Vec::new();
    for i1 in 0..n {
        let mut span: Option<(usize, usize)> = None;
        for i2 in i1..n.min(i1 + max_len) {
            for &j in &by_source[i2] {
                span = Some(span.map_or((j, j), |(lo, hi)| (lo.min(j), hi.max(j))));
            }
            let Some((jmin, jmax)) = span else {
                continue;
            };
            if jmax - jmin + 1 > max_len {
                continue;
            }
            let escapes = a.links().any(|(i, j)| (jmin..=jmax).contains(&j) && !(i1..=i2).contains(&i));
            if escapes {
                continue;
            }
            let mut j1 = jmin;
            loop {
                let mut j2 = jmax;
                while j2 - j1 < max_len {
                    out.push(PhrasePair {
                        source_span: (i1, i2),
                        target_span: (j1, j2),
                        source: src[i1..=i2].join(" "),
                        target: tgt[j1..=j2].join(" "),
                    });
                    j2 += 1;
                    if j2 >= m || tgt_aligned[j2] {
                        break;
                    }
                }
                if j1 == 0 || tgt_aligned[j1 - 1] || jmax + 1 - (j1 - 1) > max_len {
                    break;
                }
                j1 -= 1;
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Word-level orientation of a phrase box against its target-side
/// neighbours. The corners before the first and after the last word of the
/// pair count as aligned.
pub fn orientations(a: &AlignmentMatrix, (i1, i2): (usize, usize), (j1, j2): (usize, usize)) -> (Orientation, Orientation) {
    let (n, m) = a.dims();
    let aligned = |i: isize, j: isize| -> bool {
        if (i, j) == (-1, -1) || (i, j) == (n as isize, m as isize) {
            return true;
        }
        i >= 0 && j >= 0 && a.contains(i as usize, j as usize)
    };
    let (i1, i2, j1, j2) = (i1 as isize, i2 as isize, j1 as isize, j2 as isize);
    let prev = if aligned(i1 - 1, j1 - 1) {
        Orientation::Monotone
    } else if aligned(i2 + 1, j1 - 1) {
        Orientation::Swap
    } else {
        Orientation::Discontinuous
    };
    let next = if aligned(i2 + 1, j2 + 1) {
        Orientation::Monotone
    } else if aligned(i1 - 1, j2 + 1) {
        Orientation::Swap
    } else {
        Orientation::Discontinuous
    };
    (prev, next)
}

/// Extracts phrase occurrences from every pair of an aligned corpus.
pub fn extract_corpus(corpus: &ParallelCorpus, alignments: &[AlignmentMatrix], max_len: usize) -> Result<Vec<PhraseOccurrence>> {
    if corpus.len() != alignments.len() {
        return Err(Error::InvalidArgument(format!(
            "{} sentence pairs but {} alignments",
            corpus.len(),
            alignments.len()
        )));
    }
    let mut out = Vec::new();
    for (pair, a) in corpus.pairs.iter().zip(alignments) {
        for phrase in extract_phrases(pair, a, max_len)? {
            let (i1, i2) = phrase.source_span;
            let (j1, j2) = phrase.target_span;
            let links = a
                .links()
                .filter(|&(i, j)| (i1..=i2).contains(&i) && (j1..=j2).contains(&j))
                .map(|(i, j)| (i - i1, j - j1))
                .collect();
            let (prev, next) = orientations(a, phrase.source_span, phrase.target_span);
            out.push(PhraseOccurrence { phrase, links, prev, next });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Sentence;

    fn pair(n: usize, m: usize) -> SentencePair {
        let side = |k: usize, p: &str| Sentence::new((0..k).map(|i| format!("{p}{i}"))).unwrap();
        SentencePair::new(side(n, "s"), side(m, "t"))
    }

    fn am(n: usize, m: usize, links: &[(usize, usize)]) -> AlignmentMatrix {
        AlignmentMatrix::from_links(n, m, links.iter().copied()).unwrap()
    }

    fn spans(v: &[PhrasePair]) -> Vec<((usize, usize), (usize, usize))> {
        v.iter().map(|p| (p.source_span, p.target_span)).collect()
    }

    #[test]
    fn diagonal_two_by_two() {
        let got = extract_phrases(&pair(2, 2), &am(2, 2, &[(0, 0), (1, 1)]), 2).unwrap();
        assert_eq!(spans(&got), [((0, 0), (0, 0)), ((0, 1), (0, 1)), ((1, 1), (1, 1))]);
        assert_eq!(got[1].source, "s0 s1");
        assert_eq!(got[1].target, "t0 t1");
    }

    #[test]
    fn monotone_five_words_give_fifteen_blocks() {
        let p = SentencePair::new(
            Sentence::from_tokenized("আসামে একটি সুন্দর জায়গা ।").unwrap(),
            Sentence::from_tokenized("অসম এখন সুন্দৰ ঠাই ।").unwrap(),
        );
        let a = am(5, 5, &[(0, 0), (1, 1), (2, 2), (3, 3), (4, 4)]);
        let got = extract_phrases(&p, &a, 7).unwrap();
        assert_eq!(got.len(), 15);
        assert!(got.iter().all(|p| p.source_span == p.target_span));
        assert!(got
            .iter()
            .any(|p| p.source == "আসামে একটি সুন্দর জায়গা ।" && p.target == "অসম এখন সুন্দৰ ঠাই ।"));
    }

    #[test]
    fn crossing_links_single_words() {
        let got = extract_phrases(&pair(2, 2), &am(2, 2, &[(0, 1), (1, 0)]), 1).unwrap();
        assert_eq!(spans(&got), [((0, 0), (1, 1)), ((1, 1), (0, 0))]);
    }

    #[test]
    fn unaligned_boundary_words_extend() {
        // t1 is unaligned, so s0 pairs with t0, t0 t1 and (with s1) more.
        let got = extract_phrases(&pair(2, 3), &am(2, 3, &[(0, 0), (1, 2)]), 3).unwrap();
        assert_eq!(
            spans(&got),
            [
                ((0, 0), (0, 0)),
                ((0, 0), (0, 1)),
                ((0, 1), (0, 2)),
                ((1, 1), (1, 2)),
                ((1, 1), (2, 2)),
            ]
        );
    }

    #[test]
    fn empty_alignment_and_dimension_check() {
        assert!(extract_phrases(&pair(2, 2), &am(2, 2, &[]), 3).unwrap().is_empty());
        assert!(matches!(
            extract_phrases(&pair(2, 2), &am(2, 3, &[]), 3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn orientation_cases() {
        use Orientation::*;
        let mono = am(3, 3, &[(0, 0), (1, 1), (2, 2)]);
        assert_eq!(orientations(&mono, (0, 0), (0, 0)), (Monotone, Monotone));
        assert_eq!(orientations(&mono, (1, 1), (1, 1)), (Monotone, Monotone));
        assert_eq!(orientations(&mono, (2, 2), (2, 2)), (Monotone, Monotone));
        let swap = am(2, 2, &[(0, 1), (1, 0)]);
        assert_eq!(orientations(&swap, (1, 1), (0, 0)), (Discontinuous, Swap));
        assert_eq!(orientations(&swap, (0, 0), (1, 1)), (Swap, Discontinuous));
        let gap = am(3, 2, &[(0, 0), (2, 1)]);
        assert_eq!(orientations(&gap, (2, 2), (1, 1)), (Discontinuous, Monotone));
    }
}
