//! Minimum error rate training over accumulated n-best lists.
//!
//! Each outer iteration decodes the dev set, merges the n-best lists into a
//! pool and re-optimizes the weights on the pool. Along any search line the
//! score of every pooled candidate is linear in the step size, so the
//! pool-argmax only changes at intersections of the upper envelope; the
//! line search evaluates BLEU once per envelope interval.

mod mert;
mod pool;

pub use mert::{
    line_search, optimize, tune, LineOptimum, TuneConfig, TuneIteration, TuneResult, DEFAULT_RANDOM_DIRECTIONS, DEFAULT_TUNE_ITERATIONS,
};
pub use pool::{NBestPool, PoolEntry};

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::corpus::Sentence;
    use crate::decoder::{FeatureVector, FeatureWeights, NUM_FEATURES};

    fn s(t: &str) -> Sentence {
        Sentence::from_tokenized(t).unwrap()
    }

    fn fv(x: f64, y: f64) -> FeatureVector {
        let mut f = [0.0; NUM_FEATURES];
        f[0] = x;
        f[1] = y;
        FeatureVector(f)
    }

    fn w2(x: f64, y: f64) -> FeatureWeights {
        let mut w = [0.0; NUM_FEATURES];
        w[0] = x;
        w[1] = y;
        FeatureWeights(w)
    }

    /// Three sentences, three candidates each, two live features.
    fn synthetic_pool(feats: &[[(f64, f64); 3]; 3]) -> NBestPool {
        let refs = ["a b c d", "e f g h", "i j k l"];
        let cands = [
            ["a b c d", "a b x d", "y z"],
            ["e f g h", "e f q", "r s t u"],
            ["i j k l", "m j k l", "i j"],
        ];
        let mut pool = NBestPool::new(refs.iter().map(|r| vec![s(r)]).collect()).unwrap();
        for (k, row) in cands.iter().enumerate() {
            for (c, &(x, y)) in row.iter().zip(&feats[k]) {
                let toks: Vec<String> = c.split(' ').map(str::to_string).collect();
                pool.add(k, &toks, fv(x, y)).unwrap();
            }
        }
        pool
    }

    /// Best pool BLEU over all directions in the plane, found by testing
    /// one direction inside every angular region between switch points.
    fn planar_optimum(pool: &NBestPool) -> f64 {
        let mut angles = vec![0.0];
        for s in 0..pool.num_sentences() {
            let es = pool.entries(s);
            for i in 0..es.len() {
                for j in 0..i {
                    let dx = es[i].features.0[0] - es[j].features.0[0];
                    let dy = es[i].features.0[1] - es[j].features.0[1];
                    // Directions orthogonal to (dx, dy).
                    let base = dx.atan2(-dy);
                    angles.push(base.rem_euclid(std::f64::consts::TAU));
                    angles.push((base + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU));
                }
            }
        }
        angles.sort_by(f64::total_cmp);
        angles.push(angles[0] + std::f64::consts::TAU);
        angles
            .windows(2)
            .map(|p| {
                let t = 0.5 * (p[0] + p[1]);
                pool.bleu(&w2(t.cos(), t.sin()))
            })
            .fold(0.0, f64::max)
    }

    /// The references win together only for directions with angle in
    /// roughly (0.46, 0.56) radians.
    const FEATS: [[(f64, f64); 3]; 3] = [
        [(-1.0, -3.0), (-2.0, -1.5), (-0.5, -4.5)],
        [(-2.0, -2.0), (-1.5, -3.0), (-3.5, -0.5)],
        [(-1.5, -2.6), (-1.0, -4.0), (-2.5, -1.0)],
    ];

    #[test]
    fn tuner_reaches_the_planar_optimum() {
        let pool = synthetic_pool(&FEATS);
        let start = w2(1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tuned = optimize(&pool, &start, DEFAULT_RANDOM_DIRECTIONS, &mut rng);
        let best = planar_optimum(&pool);
        assert_eq!(best, 1.0);
        assert!(pool.bleu(&start) < best);
        assert_eq!(pool.bleu(&tuned), best);
        assert_eq!(pool.argmax(&tuned), vec![0, 0, 0]);
    }

    #[test]
    fn already_optimal_weights_are_kept() {
        let pool = synthetic_pool(&FEATS);
        let optimal = w2(0.5f64.cos(), 0.5f64.sin());
        assert_eq!(pool.bleu(&optimal), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let again = optimize(&pool, &optimal, DEFAULT_RANDOM_DIRECTIONS, &mut rng);
        assert_eq!(again, optimal);
    }

    #[test]
    fn line_search_matches_scan() {
        let pool = synthetic_pool(&FEATS);
        let w = w2(1.0, 0.0);
        let mut d = [0.0; NUM_FEATURES];
        d[1] = 1.0;
        let opt = line_search(&pool, &w, &d);
        let scanned = (-4000..=4000)
            .map(|k| {
                let mut x = w;
                x.0[1] = k as f64 / 100.0;
                pool.bleu(&x)
            })
            .fold(0.0, f64::max);
        assert!((opt.bleu - scanned).abs() < 1e-12);
        let mut at = w;
        at.0[1] += opt.step;
        assert_eq!(pool.bleu(&at), opt.bleu);
    }

    #[test]
    fn pool_deduplicates_by_string() {
        let mut pool = NBestPool::new(vec![vec![s("a b")]]).unwrap();
        let toks = vec!["a".to_string(), "b".to_string()];
        assert!(pool.add(0, &toks, fv(0.0, 0.0)).unwrap());
        assert!(!pool.add(0, &toks, fv(1.0, 0.0)).unwrap());
        assert_eq!(pool.len(), 1);
        assert!(NBestPool::new(vec![]).is_err());
        assert!(NBestPool::new(vec![vec![]]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn tuning_never_loses_pool_bleu(
            feats in prop::collection::vec(prop::collection::vec(-5.0f64..0.0, 9 * 3), 3),
            seed in any::<u64>(),
            scale_exp in -3i32..4,
        ) {
            let refs = ["a b c d", "e f g h", "i j k l"];
            let cands = ["a b c d|a b x d|y z", "e f g h|e f q|r s t u", "i j k l|m j k l|i j"];
            let mut pool = NBestPool::new(refs.iter().map(|r| vec![s(r)]).collect()).unwrap();
            for (k, row) in cands.iter().enumerate() {
                for (c, cand) in row.split('|').enumerate() {
                    let toks: Vec<String> = cand.split(' ').map(str::to_string).collect();
                    let mut f = [0.0; NUM_FEATURES];
                    f.copy_from_slice(&feats[k][9 * c..9 * c + 9]);
                    pool.add(k, &toks, FeatureVector(f)).unwrap();
                }
            }
            let start = FeatureWeights::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tuned = optimize(&pool, &start, 4, &mut rng);
            prop_assert!(pool.bleu(&tuned) >= pool.bleu(&start));
            let c = 2f64.powi(scale_exp);
            prop_assert_eq!(pool.argmax(&tuned), pool.argmax(&tuned.scaled(c)));
        }
    }
}
