use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use fixedbitset::FixedBitSet;

use super::options::{collect_options, FutureCostTable, TranslationOption};
use super::{FeatureVector, FeatureWeights, Models, SearchParams, Step, Translation, LM_FLOOR};
use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::phrases::Orientation;
use crate::vocab::{BOS_ID, EOS_ID};

/// Incoming derivation step of a node. `features`, `unknown` and `score`
/// are increments over `pred`.
#[derive(Debug, Clone)]
struct Edge {
    pred: usize,
    opt: usize,
    features: FeatureVector,
    unknown: usize,
    score: f64,
}

#[derive(Debug, Clone)]
struct Node {
    coverage: FixedBitSet,
    covered: usize,
    lm_state: Vec<u32>,
    last: (isize, isize),
    last_opt: Option<usize>,
    score: f64,
    features: FeatureVector,
    unknown: usize,
    future: f64,
    /// Index into `edges` of the best incoming step.
    best: usize,
    edges: Vec<Edge>,
}

type Key = (FixedBitSet, Vec<u32>, (isize, isize), Option<usize>);

const ROOT: usize = 0;

/// Search graph: every hypothesis that survived recombination, with all of
/// its incoming steps.
struct Lattice {
    options: Vec<TranslationOption>,
    nodes: Vec<Node>,
    complete: Vec<usize>,
}

impl Lattice {
    fn best_path(&self, mut node: usize) -> Vec<&Edge> {
        let mut path = Vec::new();
        while node != ROOT {
            let e = &self.nodes[node].edges[self.nodes[node].best];
            path.push(e);
            node = e.pred;
        }
        path.reverse();
        path
    }

    fn best_string(&self, node: usize) -> String {
        join_targets(&self.options, self.best_path(node).iter().map(|e| e.opt))
    }

    /// Total order for equal-score tie breaks.
    fn cmp_nodes(&self, a: usize, b: usize, key: impl Fn(&Node) -> f64) -> Ordering {
        key(&self.nodes[b])
            .total_cmp(&key(&self.nodes[a]))
            .then_with(|| self.best_string(a).cmp(&self.best_string(b)))
    }

    fn translation(&self, path: &[&Edge]) -> Translation {
        let mut t = Translation {
            tokens: Vec::new(),
            steps: Vec::with_capacity(path.len()),
            features: FeatureVector::default(),
            unknown: 0,
            score: 0.0,
        };
        for e in path {
            let o = &self.options[e.opt];
            t.tokens.extend(o.target.iter().cloned());
            t.steps.push(Step {
                source_span: o.span,
                target: o.target.clone(),
                unknown: o.unknown,
            });
            t.features += e.features;
            t.unknown += e.unknown;
            t.score += e.score;
        }
        t
    }
}

fn join_targets(options: &[TranslationOption], opts: impl Iterator<Item = usize>) -> String {
    opts.flat_map(|o| options[o].target.iter().map(String::as_str))
        .collect::<Vec<_>>()
        .join(" ")
}

fn first_gap(coverage: &FixedBitSet) -> Option<usize> {
    coverage.zeroes().next()
}

fn build_lattice(sentence: &Sentence, models: &Models, weights: &FeatureWeights, params: &SearchParams) -> Result<Lattice> {
    let n = sentence.len();
    if n == 0 {
        return Err(Error::EmptyLine);
    }
    if params.beam == 0 {
        return Err(Error::InvalidArgument("beam size must be at least 1".into()));
    }
    let options = collect_options(sentence, models, weights);
    let future = FutureCostTable::build(n, &options);
    let mut by_start: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, o) in options.iter().enumerate() {
        by_start[o.span.0].push(k);
    }
    let order = models.lm.order();
    let use_reordering = models.reordering.is_some();
    let log_threshold = if params.threshold > 0.0 {
        params.threshold.ln()
    } else {
        f64::NEG_INFINITY
    };

    let empty = FixedBitSet::with_capacity(n);
    let mut lattice = Lattice {
        nodes: vec![Node {
            future: future.uncovered(&empty),
            coverage: empty,
            covered: 0,
            lm_state: if order > 1 { vec![BOS_ID] } else { Vec::new() },
            last: (-1, -1),
            last_opt: None,
            score: 0.0,
            features: FeatureVector::default(),
            unknown: 0,
            best: 0,
            edges: Vec::new(),
        }],
        options,
        complete: Vec::new(),
    };
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    let mut keys: Vec<HashMap<Key, usize>> = vec![HashMap::new(); n + 1];
    stacks[0].push(ROOT);

    for c in 0..n {
        let mut stack = std::mem::take(&mut stacks[c]);
        stack.sort_by(|&a, &b| lattice.cmp_nodes(a, b, |x| x.score + x.future));
        stack.truncate(params.beam);
        if let Some(&top) = stack.first() {
            let cutoff = lattice.nodes[top].score + lattice.nodes[top].future + log_threshold;
            stack.retain(|&h| lattice.nodes[h].score + lattice.nodes[h].future >= cutoff);
        }

        for &h in &stack {
            let hyp = &lattice.nodes[h];
            let next = hyp.last.1 + 1;
            let starts = match params.distortion_limit {
                Some(d) => (next - d as isize).max(0) as usize..=((next + d as isize).min(n as isize - 1)) as usize,
                None => 0..=n - 1,
            };
            let mut created = Vec::new();
            for s in starts {
                for &k in &by_start[s] {
                    let opt = &lattice.options[k];
                    let (s, e) = opt.span;
                    if (s..=e).any(|i| hyp.coverage.contains(i)) {
                        continue;
                    }
                    let jump = (s as isize - next).unsigned_abs();
                    let mut coverage = hyp.coverage.clone();
                    coverage.insert_range(s..e + 1);
                    let covered = hyp.covered + e - s + 1;
                    if let (Some(d), Some(g)) = (params.distortion_limit, first_gap(&coverage)) {
                        if (g as isize - e as isize - 1).unsigned_abs() > d {
                            continue;
                        }
                    }
                    let complete = covered == n;
                    let span = (s as isize, e as isize);

                    let mut lm_state = hyp.lm_state.clone();
                    let mut lm = 0.0;
                    let mut push = |w: u32, state: &mut Vec<u32>| {
                        lm += models.lm.log_prob(state, w).max(LM_FLOOR);
                        if order > 1 {
                            state.push(w);
                            if state.len() > order - 1 {
                                state.remove(0);
                            }
                        }
                    };
                    for &w in &opt.target_ids {
                        push(w, &mut lm_state);
                    }
                    if complete {
                        push(EOS_ID, &mut lm_state);
                    }

                    let mut reordering = 0.0;
                    if use_reordering {
                        let o = Orientation::between(hyp.last, span).index();
                        reordering += opt.reo_prev[o];
                        if let Some(p) = hyp.last_opt {
                            reordering += lattice.options[p].reo_next[o];
                        }
                        if complete {
                            reordering += opt.reo_next[Orientation::between(span, (n as isize, n as isize)).index()];
                        }
                    }

                    let mut f = FeatureVector::default();
                    f.0[FeatureVector::LM] = lm;
                    f.0[FeatureVector::PHI_ST..=FeatureVector::LEX_TS].copy_from_slice(&opt.tm);
                    f.0[FeatureVector::REORDERING] = reordering;
                    f.0[FeatureVector::WORD_PENALTY] = -(opt.target.len() as f64);
                    f.0[FeatureVector::PHRASE_PENALTY] = 1.0;
                    f.0[FeatureVector::DISTORTION] = -(jump as f64);
                    let unknown = usize::from(opt.unknown);
                    let delta = f.dot(weights);
                    let key: Key = (coverage, lm_state, span, if use_reordering { Some(k) } else { None });
                    created.push((key, covered, k, f, unknown, delta));
                }
            }

            for (key, covered, k, f, unknown, delta) in created {
                let edge = Edge {
                    pred: h,
                    opt: k,
                    features: f,
                    unknown,
                    score: delta,
                };
                let score = lattice.nodes[h].score + delta;
                match keys[covered].get(&key) {
                    Some(&x) => {
                        let wins = match score.total_cmp(&lattice.nodes[x].score) {
                            Ordering::Greater => true,
                            Ordering::Less => false,
                            Ordering::Equal => {
                                let mine = join_targets(&lattice.options, lattice.best_path(h).iter().map(|e| e.opt).chain([k]));
                                mine < lattice.best_string(x)
                            }
                        };
                        let pred = &lattice.nodes[h];
                        let (pf, pu) = (pred.features, pred.unknown);
                        let node = &mut lattice.nodes[x];
                        node.edges.push(edge);
                        if wins {
                            node.best = node.edges.len() - 1;
                            node.score = score;
                            node.features = pf + f;
                            node.unknown = pu + unknown;
                        }
                    }
                    None => {
                        let pred = &lattice.nodes[h];
                        let node = Node {
                            future: future.uncovered(&key.0),
                            coverage: key.0.clone(),
                            covered,
                            lm_state: key.1.clone(),
                            last: key.2,
                            last_opt: Some(k),
                            score,
                            features: pred.features + f,
                            unknown: pred.unknown + unknown,
                            best: 0,
                            edges: vec![edge],
                        };
                        let id = lattice.nodes.len();
                        lattice.nodes.push(node);
                        keys[covered].insert(key, id);
                        stacks[covered].push(id);
                    }
                }
            }
        }
    }
    let mut complete = std::mem::take(&mut stacks[n]);
    complete.sort_by(|&a, &b| lattice.cmp_nodes(a, b, |x| x.score));
    lattice.complete = complete;
    Ok(lattice)
}

fn search(sentence: &Sentence, models: &Models, weights: &FeatureWeights, params: &SearchParams) -> Result<Lattice> {
    let lattice = build_lattice(sentence, models, weights, params)?;
    if lattice.complete.is_empty() && params.distortion_limit != Some(0) {
        log::warn!("no complete hypothesis for {sentence:?}; retrying monotone");
        let monotone = SearchParams {
            distortion_limit: Some(0),
            ..*params
        };
        return build_lattice(sentence, models, weights, &monotone);
    }
    Ok(lattice)
}

/// Best-scoring translation of `sentence` under the log-linear model.
pub fn decode(sentence: &Sentence, models: &Models, weights: &FeatureWeights, params: &SearchParams) -> Result<Translation> {
    let lattice = search(sentence, models, weights, params)?;
    let &best = lattice
        .complete
        .first()
        .ok_or_else(|| Error::InvalidArgument("search produced no complete hypothesis".into()))?;
    Ok(lattice.translation(&lattice.best_path(best)))
}

/// Partial backward path during n-best extraction.
struct Item {
    priority: f64,
    seq: usize,
    node: usize,
    suffix: f64,
    /// Index into the path arena; the edge nearest the root comes first.
    path: Option<usize>,
}

impl PartialEq for Item {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Up to `n` distinct translations, best first. The first entry is the
/// [`decode`] result; each later entry is the best derivation of its string
/// found in the search graph.
pub fn nbest(sentence: &Sentence, models: &Models, weights: &FeatureWeights, params: &SearchParams, n: usize) -> Result<Vec<Translation>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n-best size must be at least 1".into()));
    }
    let lattice = search(sentence, models, weights, params)?;
    let Some(&best) = lattice.complete.first() else {
        return Err(Error::InvalidArgument("search produced no complete hypothesis".into()));
    };
    let first = lattice.translation(&lattice.best_path(best));
    let mut seen: HashSet<String> = HashSet::from([first.text()]);
    let mut out = vec![first];

    // Exact A* from the complete nodes back to the root: a node's forward
    // score is the best prefix score, so pops come out in score order.
    let mut arena: Vec<((usize, usize), Option<usize>)> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    for &c in &lattice.complete {
        heap.push(Item {
            priority: lattice.nodes[c].score,
            seq,
            node: c,
            suffix: 0.0,
            path: None,
        });
        seq += 1;
    }
    let budget = 10_000usize.max(200 * n);
    let mut pops = 0;
    while out.len() < n && pops < budget {
        let Some(item) = heap.pop() else { break };
        pops += 1;
        if item.node == ROOT {
            let mut path = Vec::new();
            let mut cur = item.path;
            while let Some(p) = cur {
                let ((node, edge), parent) = arena[p];
                path.push(&lattice.nodes[node].edges[edge]);
                cur = parent;
            }
            let t = lattice.translation(&path);
            if seen.insert(t.text()) {
                out.push(t);
            }
            continue;
        }
        for (k, e) in lattice.nodes[item.node].edges.iter().enumerate() {
            arena.push(((item.node, k), item.path));
            let suffix = item.suffix + e.score;
            heap.push(Item {
                priority: lattice.nodes[e.pred].score + suffix,
                seq,
                node: e.pred,
                suffix,
                path: Some(arena.len() - 1),
            });
            seq += 1;
        }
    }
    out[1..].sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.text().cmp(&b.text())));
    Ok(out)
}
