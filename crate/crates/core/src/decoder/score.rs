use super::options::reordering_logs;
use super::{FeatureVector, FeatureWeights, Models, Step, LM_FLOOR, UNKNOWN_WORD_LOG_PROB};
use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::phrases::Orientation;
use crate::vocab::{BOS_ID, EOS_ID};

/// Features and total score of a derivation, recomputed from the models
/// without any search state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredDerivation {
    pub features: FeatureVector,
    pub unknown: usize,
    pub score: f64,
}

/// Scores `steps` as a translation of `sentence`. Steps must cover every
/// source position exactly once; a non-copy step must be a phrase-table
/// entry and a copy step must copy a single source word.
pub fn score_derivation(sentence: &Sentence, steps: &[Step], models: &Models, weights: &FeatureWeights) -> Result<ScoredDerivation> {
    let n = sentence.len();
    let tokens = sentence.tokens();
    let mut seen = vec![false; n];
    let mut f = FeatureVector::default();
    let mut unknown = 0;
    let mut prev: (isize, isize) = (-1, -1);
    let mut prev_next: Option<[f64; 3]> = None;
    let mut history = vec![BOS_ID];
    for step in steps {
        let (s, e) = step.source_span;
        if s > e || e >= n || seen[s..=e].iter().any(|&c| c) {
            return Err(Error::InvalidArgument(format!(
                "step span ({s}, {e}) overlaps or leaves the sentence"
            )));
        }
        seen[s..=e].fill(true);
        let source = tokens[s..=e].join(" ");
        let target = step.target.join(" ");
        if step.unknown {
            if s != e || step.target.len() != 1 || step.target[0] != tokens[s] {
                return Err(Error::InvalidArgument(format!(
                    "copy step must copy one word, got {source:?} -> {target:?}"
                )));
            }
            unknown += 1;
            for k in 0..4 {
                f.0[FeatureVector::PHI_ST + k] += UNKNOWN_WORD_LOG_PROB;
            }
        } else {
            let entry = models
                .phrases
                .get(&source, &target)
                .ok_or_else(|| Error::InvalidArgument(format!("no phrase pair {source:?} -> {target:?}")))?;
            for (k, p) in entry.scores.to_array().into_iter().enumerate() {
                f.0[FeatureVector::PHI_ST + k] += p.ln();
            }
        }
        for t in &step.target {
            let w = models.lm.word_id(t);
            f.0[FeatureVector::LM] += models.lm.log_prob(&history, w).max(LM_FLOOR);
            history.push(w);
        }
        let span = (s as isize, e as isize);
        if models.reordering.is_some() {
            let (p, nx) = reordering_logs(models, &source, &target);
            let o = Orientation::between(prev, span).index();
            f.0[FeatureVector::REORDERING] += p[o] + prev_next.map_or(0.0, |pn| pn[o]);
            prev_next = Some(nx);
        }
        f.0[FeatureVector::WORD_PENALTY] -= step.target.len() as f64;
        f.0[FeatureVector::PHRASE_PENALTY] += 1.0;
        f.0[FeatureVector::DISTORTION] -= (s as f64 - prev.1 as f64 - 1.0).abs();
        prev = span;
    }
    if seen.iter().any(|&c| !c) {
        return Err(Error::InvalidArgument("derivation leaves source words uncovered".into()));
    }
    f.0[FeatureVector::LM] += models.lm.log_prob(&history, EOS_ID).max(LM_FLOOR);
    if let Some(pn) = prev_next {
        let end = (n as isize, n as isize);
        f.0[FeatureVector::REORDERING] += pn[Orientation::between(prev, end).index()];
    }
    Ok(ScoredDerivation {
        features: f,
        unknown,
        score: f.dot(weights),
    })
}
