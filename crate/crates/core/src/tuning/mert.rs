use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::pool::NBestPool;
use crate::corpus::ParallelCorpus;
use crate::decoder::{nbest, FeatureWeights, Models, SearchParams, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::eval::RefLength;

pub const DEFAULT_TUNE_ITERATIONS: usize = 5;
pub const DEFAULT_RANDOM_DIRECTIONS: usize = 8;
const MAX_ROUNDS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneConfig {
    pub iterations: usize,
    pub nbest: usize,
    /// Random restart points, and random directions per search round on
    /// top of the coordinate axes.
    pub random_directions: usize,
    pub seed: u64,
    pub search: SearchParams,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_TUNE_ITERATIONS,
            nbest: crate::decoder::DEFAULT_NBEST,
            random_directions: DEFAULT_RANDOM_DIRECTIONS,
            seed: 0,
            search: SearchParams::default(),
        }
    }
}

/// Result of one line search: the best step along the direction and the
/// pool BLEU it reaches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineOptimum {
    pub step: f64,
    pub bleu: f64,
}

/// Upper envelope of the lines `a[k] + γ b[k]`: `(start, k)` pairs where
/// line `k` is the maximum from `start` up to the next start.
fn upper_envelope(a: &[f64], b: &[f64], tie: impl Fn(usize, usize) -> std::cmp::Ordering) -> Vec<(f64, usize)> {
    let mut order: Vec<usize> = (0..a.len()).collect();
    // Ascending slope; among equal slopes the best intercept comes first.
    order.sort_by(|&x, &y| b[x].total_cmp(&b[y]).then(a[y].total_cmp(&a[x])).then_with(|| tie(x, y)));
    order.dedup_by(|later, earlier| b[*later] == b[*earlier]);
    let mut hull: Vec<(f64, usize)> = Vec::new();
    for k in order {
        loop {
            let Some(&(start, top)) = hull.last() else {
                hull.push((f64::NEG_INFINITY, k));
                break;
            };
            let x = (a[top] - a[k]) / (b[k] - b[top]);
            if x <= start {
                hull.pop();
                continue;
            }
            hull.push((x, k));
            break;
        }
    }
    hull
}

/// Exact line search of pool BLEU along `w + γ d`. Candidate steps are the
/// midpoints between consecutive argmax changes, plus one unit beyond the
/// outermost changes.
pub fn line_search(pool: &NBestPool, w: &FeatureWeights, d: &[f64; NUM_FEATURES]) -> LineOptimum {
    let dir = FeatureWeights(*d);
    let mut events: Vec<(f64, usize, usize)> = Vec::new();
    let mut choice = Vec::with_capacity(pool.num_sentences());
    for s in 0..pool.num_sentences() {
        let es = pool.entries(s);
        if es.is_empty() {
            choice.push(0);
            continue;
        }
        let a: Vec<f64> = es.iter().map(|e| e.features.dot(w)).collect();
        let b: Vec<f64> = es.iter().map(|e| e.features.dot(&dir)).collect();
        let hull = upper_envelope(&a, &b, |x, y| es[x].text.cmp(&es[y].text));
        choice.push(hull[0].1);
        events.extend(hull[1..].iter().map(|&(x, k)| (x, s, k)));
    }
    events.sort_by(|p, q| p.0.total_cmp(&q.0));

    let bleu_of = |c: &[usize]| pool.stats_of(c).score(true, RefLength::Closest);
    if events.is_empty() {
        return LineOptimum {
            step: 0.0,
            bleu: bleu_of(&choice),
        };
    }
    let mut best = LineOptimum {
        step: events[0].0 - 1.0,
        bleu: bleu_of(&choice),
    };
    let mut i = 0;
    while i < events.len() {
        let x = events[i].0;
        while i < events.len() && events[i].0 == x {
            choice[events[i].1] = events[i].2;
            i += 1;
        }
        let step = if i < events.len() { 0.5 * (x + events[i].0) } else { x + 1.0 };
        let bleu = bleu_of(&choice);
        if bleu > best.bleu {
            best = LineOptimum { step, bleu };
        }
    }
    best
}

fn add_scaled(w: &FeatureWeights, d: &[f64; NUM_FEATURES], step: f64) -> FeatureWeights {
    let mut out = *w;
    for (x, dx) in out.0.iter_mut().zip(d) {
        *x += step * dx;
    }
    out
}

fn ascend(pool: &NBestPool, start: FeatureWeights, random_directions: usize, rng: &mut ChaCha8Rng) -> (FeatureWeights, f64) {
    let mut w = start;
    let mut current = pool.bleu(&w);
    for _ in 0..MAX_ROUNDS {
        let mut directions: Vec<[f64; NUM_FEATURES]> = (0..NUM_FEATURES)
            .map(|k| {
                let mut d = [0.0; NUM_FEATURES];
                d[k] = 1.0;
                d
            })
            .collect();
        directions.extend((0..random_directions).map(|_| random_vector(rng)));
        let mut improved = false;
        for d in &directions {
            let opt = line_search(pool, &w, d);
            if opt.bleu <= current {
                continue;
            }
            let candidate = add_scaled(&w, d, opt.step);
            if candidate.0.iter().all(|v| *v == 0.0) {
                continue;
            }
            let measured = pool.bleu(&candidate);
            if measured > current {
                w = candidate;
                current = measured;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    (w, current)
}

fn random_vector(rng: &mut ChaCha8Rng) -> [f64; NUM_FEATURES] {
    [(); NUM_FEATURES].map(|_| rng.gen_range(-1.0..=1.0))
}

/// Line-search ascent on pool BLEU from `start` and from `restarts` random
/// points, each round trying the coordinate axes and `restarts` random
/// directions. Only strict improvements are taken, so the result never
/// scores below `start`.
pub fn optimize(pool: &NBestPool, start: &FeatureWeights, restarts: usize, rng: &mut ChaCha8Rng) -> FeatureWeights {
    let (mut best, mut best_bleu) = ascend(pool, *start, restarts, rng);
    for _ in 0..restarts {
        let (w, bleu) = ascend(pool, FeatureWeights(random_vector(rng)), restarts, rng);
        if bleu > best_bleu {
            best = w;
            best_bleu = bleu;
        }
    }
    best
}

/// Per-iteration record of a tuning run.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneIteration {
    pub iteration: usize,
    pub new_entries: usize,
    pub pool_size: usize,
    /// Pool BLEU of the initial weights on this iteration's pool.
    pub initial_bleu: f64,
    /// Pool BLEU of the weights chosen in this iteration.
    pub bleu: f64,
    pub weights: FeatureWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub weights: FeatureWeights,
    pub history: Vec<TuneIteration>,
}

/// MERT: decode the dev set, grow the n-best pool, re-optimize on the pool.
/// Stops after `config.iterations` rounds or when decoding adds nothing new.
pub fn tune(dev: &ParallelCorpus, models: &Models, initial: &FeatureWeights, config: &TuneConfig) -> Result<TuneResult> {
    if dev.is_empty() {
        return Err(Error::InvalidArgument("tuning needs a non-empty dev set".into()));
    }
    if config.nbest == 0 {
        return Err(Error::InvalidArgument("n-best size must be at least 1".into()));
    }
    let initial = FeatureWeights::new(initial.0)?;
    let mut pool = NBestPool::new(dev.targets().map(|t| vec![t.clone()]).collect())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights = initial;
    let mut history = Vec::new();
    for iteration in 1..=config.iterations {
        let lists = dev
            .pairs
            .par_iter()
            .map(|p| nbest(&p.source, models, &weights, &config.search, config.nbest))
            .collect::<Result<Vec<_>>>()?;
        let mut new_entries = 0;
        for (s, list) in lists.iter().enumerate() {
            new_entries += pool.merge(s, list)?;
        }
        if new_entries == 0 {
            log::info!("iteration {iteration}: no new n-best entries, stopping");
            break;
        }
        let initial_bleu = pool.bleu(&initial);
        let start = if pool.bleu(&weights) >= initial_bleu { weights } else { initial };
        weights = optimize(&pool, &start, config.random_directions, &mut rng);
        let bleu = pool.bleu(&weights);
        assert!(bleu >= initial_bleu, "pool BLEU fell below the initial weights");
        log::info!(
            "iteration {iteration}: pool {} (+{new_entries}), BLEU {:.4} (initial {:.4})",
            pool.len(),
            bleu,
            initial_bleu
        );
        history.push(TuneIteration {
            iteration,
            new_entries,
            pool_size: pool.len(),
            initial_bleu,
            bleu,
            weights,
        });
    }
    Ok(TuneResult { weights, history })
}
