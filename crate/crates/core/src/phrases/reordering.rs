use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::path::Path;

use super::extract::PhraseOccurrence;
use crate::error::{Error, Result};

pub const DEFAULT_REORDERING_SMOOTHING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    Monotone,
    Swap,
    Discontinuous,
}

impl Orientation {
    pub const ALL: [Orientation; 3] = [Orientation::Monotone, Orientation::Swap, Orientation::Discontinuous];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Orientation of a phrase covering `[start, end]` placed right after a
    /// phrase covering `[prev_start, prev_end]`. Sentence boundaries are
    /// the virtual spans `(-1, -1)` and `(n, n)`.
    pub fn between(prev: (isize, isize), next: (isize, isize)) -> Orientation {
        if next.0 == prev.1 + 1 {
            Orientation::Monotone
        } else if next.1 + 1 == prev.0 {
            Orientation::Swap
        } else {
            Orientation::Discontinuous
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Monotone => "mono",
            Orientation::Swap => "swap",
            Orientation::Discontinuous => "disc",
        })
    }
}

/// Orientation distributions for one phrase pair, indexed by
/// [`Orientation::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReorderingScores {
    pub prev: [f64; 3],
    pub next: [f64; 3],
}

/// Lexicalized reordering table keyed by (source phrase, target phrase).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReorderingTable {
    entries: HashMap<(String, String), ReorderingScores>,
}

/// Per-pair orientation counts smoothed by adding `sigma` to each class.
pub fn train_reordering(occurrences: &[PhraseOccurrence], sigma: f64) -> Result<ReorderingTable> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "reordering smoothing must be positive, got {sigma}"
        )));
    }
    // (prev, next) orientation counts per pair.
    type Counts = ([u64; 3], [u64; 3]);
    let mut counts: HashMap<(&str, &str), Counts> = HashMap::new();
    for occ in occurrences {
        let c = counts.entry((&occ.phrase.source, &occ.phrase.target)).or_default();
        c.0[occ.prev.index()] += 1;
        c.1[occ.next.index()] += 1;
    }
    let smooth = |c: [u64; 3]| {
        let total = c.iter().sum::<u64>() as f64 + 3.0 * sigma;
        c.map(|x| (x as f64 + sigma) / total)
    };
    let entries = counts
        .into_iter()
        .map(|((s, t), (p, n))| {
            (
                (s.to_string(), t.to_string()),
                ReorderingScores {
                    prev: smooth(p),
                    next: smooth(n),
                },
            )
        })
        .collect();
    Ok(ReorderingTable { entries })
}

impl ReorderingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, source: &str, target: &str, scores: ReorderingScores) {
        self.entries.insert((source.to_string(), target.to_string()), scores);
    }

    pub fn get(&self, source: &str, target: &str) -> Option<&ReorderingScores> {
        self.entries.get(&(source.to_string(), target.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One `source ||| target ||| m s d m' s' d'` line per pair, sorted.
    pub fn to_text(&self) -> String {
        let sorted: BTreeMap<_, _> = self.entries.iter().collect();
        let mut out = String::new();
        for ((s, t), r) in sorted {
            let probs: Vec<String> = r.prev.iter().chain(&r.next).map(|p| format!("{p:.9}")).collect();
            writeln!(out, "{s} ||| {t} ||| {}", probs.join(" ")).unwrap();
        }
        out
    }

    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut table = Self::new();
        for (n, line) in text.lines().enumerate() {
            let n = n + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
            if fields.len() < 3 {
                return Err(Error::parse(context, n, "expected `source ||| target ||| scores`"));
            }
            let probs = fields[2]
                .split_whitespace()
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(context, n, format!("invalid score: {e}")))?;
            if probs.len() != 6 {
                return Err(Error::parse(context, n, format!("expected 6 scores, found {}", probs.len())));
            }
            if probs.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
                return Err(Error::parse(context, n, "scores must lie in (0, 1]"));
            }
            if fields[0].is_empty() || fields[1].is_empty() {
                return Err(Error::parse(context, n, "empty phrase"));
            }
            let scores = ReorderingScores {
                prev: [probs[0], probs[1], probs[2]],
                next: [probs[3], probs[4], probs[5]],
            };
            table.insert(fields[0], fields[1], scores);
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
