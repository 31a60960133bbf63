use super::{FeatureVector, FeatureWeights, Models, LM_FLOOR, UNKNOWN_WORD_LOG_PROB};
use crate::corpus::Sentence;
use crate::phrases::ReorderingScores;

/// ln(1/3): orientation scores for pairs missing from the reordering table.
pub(crate) const UNIFORM_ORIENTATION: f64 = -1.098_612_288_668_109_8;

/// A phrase-table entry (or a copied unknown word) bound to a source span.
#[derive(Debug, Clone)]
pub(crate) struct TranslationOption {
    pub span: (usize, usize),
    pub target: Vec<String>,
    pub target_ids: Vec<u32>,
    /// ln of φ(s|t), lex(s|t), φ(t|s), lex(t|s).
    pub tm: [f64; 4],
    pub reo_prev: [f64; 3],
    pub reo_next: [f64; 3],
    pub unknown: bool,
    /// Weighted context-free score used for future costs.
    pub estimate: f64,
}

pub(crate) fn reordering_logs(models: &Models, source: &str, target: &str) -> ([f64; 3], [f64; 3]) {
    match &models.reordering {
        None => ([0.0; 3], [0.0; 3]),
        Some(table) => match table.get(source, target) {
            Some(ReorderingScores { prev, next }) => (prev.map(f64::ln), next.map(f64::ln)),
            None => ([UNIFORM_ORIENTATION; 3], [UNIFORM_ORIENTATION; 3]),
        },
    }
}

/// All options for `sentence`: phrase-table matches over every span, plus a
/// copy-through option for each word with no single-word entry.
pub(crate) fn collect_options(sentence: &Sentence, models: &Models, weights: &FeatureWeights) -> Vec<TranslationOption> {
    let tokens = sentence.tokens();
    let n = tokens.len();
    let max_len = models.phrases.max_source_len().max(1);
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n.min(i + max_len) {
            let source = tokens[i..=j].join(" ");
            for entry in models.phrases.lookup(&source) {
                let target: Vec<String> = entry.target_tokens().map(str::to_string).collect();
                let (reo_prev, reo_next) = reordering_logs(models, &source, &entry.target);
                out.push(option(
                    models,
                    weights,
                    (i, j),
                    target,
                    entry.scores.to_array().map(f64::ln),
                    reo_prev,
                    reo_next,
                    false,
                ));
            }
        }
        if models.phrases.lookup(&tokens[i]).is_empty() {
            let (reo_prev, reo_next) = reordering_logs(models, &tokens[i], &tokens[i]);
            out.push(option(
                models,
                weights,
                (i, i),
                vec![tokens[i].clone()],
                [UNKNOWN_WORD_LOG_PROB; 4],
                reo_prev,
                reo_next,
                true,
            ));
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn option(
    models: &Models,
    weights: &FeatureWeights,
    span: (usize, usize),
    target: Vec<String>,
    tm: [f64; 4],
    reo_prev: [f64; 3],
    reo_next: [f64; 3],
    unknown: bool,
) -> TranslationOption {
    let target_ids: Vec<u32> = target.iter().map(|t| models.lm.word_id(t)).collect();
    let unigram: f64 = target_ids.iter().map(|&w| models.lm.log_prob(&[], w).max(LM_FLOOR)).sum();
    let mut f = FeatureVector::default();
    f.0[FeatureVector::LM] = unigram;
    f.0[FeatureVector::PHI_ST..=FeatureVector::LEX_TS].copy_from_slice(&tm);
    f.0[FeatureVector::WORD_PENALTY] = -(target.len() as f64);
    f.0[FeatureVector::PHRASE_PENALTY] = 1.0;
    let estimate = f.dot(weights);
    TranslationOption {
        span,
        target,
        target_ids,
        tm,
        reo_prev,
        reo_next,
        unknown,
        estimate,
    }
}

/// Best context-free weighted score for covering each source span.
#[derive(Debug, Clone, PartialEq)]
pub struct FutureCostTable {
    n: usize,
    cost: Vec<f64>,
}

impl FutureCostTable {
    pub(crate) fn build(n: usize, options: &[TranslationOption]) -> Self {
        let mut cost = vec![f64::NEG_INFINITY; n * n];
        for o in options {
            let c = &mut cost[o.span.0 * n + o.span.1];
            *c = c.max(o.estimate);
        }
        for len in 2..=n {
            for i in 0..=n - len {
                let j = i + len - 1;
                let best = (i..j)
                    .map(|k| cost[i * n + k] + cost[(k + 1) * n + j])
                    .fold(cost[i * n + j], f64::max);
                cost[i * n + j] = best;
            }
        }
        Self { n, cost }
    }

    /// Future cost of span `[i, j]`, inclusive.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i <= j && j < self.n, "span ({i}, {j}) out of range for length {}", self.n);
        self.cost[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Sum over the maximal uncovered runs of `covered`.
    pub(crate) fn uncovered(&self, covered: &fixedbitset::FixedBitSet) -> f64 {
        let mut total = 0.0;
        let mut start = None;
        for i in 0..=self.n {
            let free = i < self.n && !covered.contains(i);
            match (free, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    total += self.get(s, i - 1);
                    start = None;
                }
                _ => {}
            }
        }
        total
    }
}
