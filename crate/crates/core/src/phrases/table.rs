use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use super::extract::PhraseOccurrence;
use crate::align::TTable;
use crate::error::{Error, Result};

pub const DEFAULT_TABLE_LIMIT: usize = 20;

/// Lexical weights never drop below this, so their logs stay finite.
pub const LEX_FLOOR: f64 = 1e-10;

/// Translation scores of one phrase pair, all probabilities in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhraseScores {
    /// φ(source | target)
    pub phi_st: f64,
    /// lex(source | target)
    pub lex_st: f64,
    /// φ(target | source)
    pub phi_ts: f64,
    /// lex(target | source)
    pub lex_ts: f64,
}

impl PhraseScores {
    /// In file order.
    pub fn to_array(self) -> [f64; 4] {
        [self.phi_st, self.lex_st, self.phi_ts, self.lex_ts]
    }

    pub fn from_array([phi_st, lex_st, phi_ts, lex_ts]: [f64; 4]) -> Self {
        Self {
            phi_st,
            lex_st,
            phi_ts,
            lex_ts,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhraseEntry {
    pub source: String,
    pub target: String,
    pub scores: PhraseScores,
}

impl PhraseEntry {
    pub fn target_tokens(&self) -> impl Iterator<Item = &str> {
        self.target.split(' ')
    }
}

/// Phrase table indexed by source phrase. Entries under one source are
/// ordered by descending φ(target | source), then by target string.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhraseTable {
    by_source: HashMap<String, Vec<PhraseEntry>>,
    max_source_len: usize,
}

impl PhraseTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = PhraseEntry>) -> Self {
        let mut table = Self::new();
        for e in entries {
            table.push(e);
        }
        table.sort();
        table
    }

    fn push(&mut self, e: PhraseEntry) {
        self.max_source_len = self.max_source_len.max(e.source.split(' ').count());
        let row = self.by_source.entry(e.source.clone()).or_default();
        match row.iter_mut().find(|r| r.target == e.target) {
            Some(existing) => *existing = e,
            None => row.push(e),
        }
    }

    fn sort(&mut self) {
        for row in self.by_source.values_mut() {
            row.sort_by(|a, b| b.scores.phi_ts.total_cmp(&a.scores.phi_ts).then_with(|| a.target.cmp(&b.target)));
        }
    }

    /// Translation options for a space-joined source phrase.
    pub fn lookup(&self, source: &str) -> &[PhraseEntry] {
        self.by_source.get(source).map_or(&[], Vec::as_slice)
    }

    pub fn get(&self, source: &str, target: &str) -> Option<&PhraseEntry> {
        self.lookup(source).iter().find(|e| e.target == target)
    }

    /// Longest source side in words.
    pub fn max_source_len(&self) -> usize {
        self.max_source_len
    }

    /// Number of phrase pairs.
    pub fn len(&self) -> usize {
        self.by_source.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_source.is_empty()
    }

    /// All entries sorted by (source, target).
    pub fn entries(&self) -> Vec<&PhraseEntry> {
        let mut all: Vec<&PhraseEntry> = self.by_source.values().flatten().collect();
        all.sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
        all
    }

    /// Keeps the `limit` best targets per source phrase.
    pub fn limited(mut self, limit: usize) -> Self {
        for row in self.by_source.values_mut() {
            row.truncate(limit);
        }
        self
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in self.entries() {
            let s = e.scores.to_array().map(|p| format!("{p:.9e}"));
            writeln!(out, "{} ||| {} ||| {}", e.source, e.target, s.join(" ")).unwrap();
        }
        out
    }

    /// Parses `source ||| target ||| p1 p2 p3 p4` lines; fields past the
    /// third are ignored.
    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut table = Self::new();
        let mut seen = std::collections::HashSet::new();
        for (n, line) in text.lines().enumerate() {
            let n = n + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
            if fields.len() < 3 {
                return Err(Error::parse(context, n, "expected `source ||| target ||| scores`"));
            }
            let (source, target) = (normalize_phrase(fields[0]), normalize_phrase(fields[1]));
            if source.is_empty() || target.is_empty() {
                return Err(Error::parse(context, n, "empty phrase"));
            }
            let probs = fields[2]
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(context, n, format!("invalid score: {e}")))?;
            let probs: [f64; 4] = probs
                .try_into()
                .map_err(|v: Vec<f64>| Error::parse(context, n, format!("expected 4 scores, found {}", v.len())))?;
            if probs.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
                return Err(Error::parse(context, n, "scores must lie in (0, 1]"));
            }
            if !seen.insert((source.clone(), target.clone())) {
                return Err(Error::parse(context, n, "duplicate phrase pair"));
            }
            table.push(PhraseEntry {
                source,
                target,
                scores: PhraseScores::from_array(probs),
            });
        }
        table.sort();
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

fn normalize_phrase(s: &str) -> String {
    use unicode_normalization::UnicodeNormalization;
    s.split_whitespace().collect::<Vec<_>>().join(" ").nfc().collect()
}

/// lex(f | e) for one occurrence: each `f` word averages `w(f | e)` over the
/// `e` words it links to, or takes `w(f | NULL)` when unlinked.
/// `links` are `(e, f)` pairs relative to the phrase.
fn lexical_weight(table: &TTable, e: &[&str], f: &[&str], links: impl Iterator<Item = (usize, usize)>) -> f64 {
    let mut linked: Vec<Vec<usize>> = vec![Vec::new(); f.len()];
    for (ei, fj) in links {
        linked[fj].push(ei);
    }
    let w: f64 = f
        .iter()
        .zip(&linked)
        .map(|(fw, es)| {
            if es.is_empty() {
                table.null_prob(fw)
            } else {
                es.iter().map(|&ei| table.prob(e[ei], fw)).sum::<f64>() / es.len() as f64
            }
        })
        .product();
    w.max(LEX_FLOOR)
}

/// Relative-frequency phrase probabilities in both directions plus lexical
/// weights. `source_to_target` holds t(target | source) and
/// `target_to_source` holds t(source | target). A pair seen several times
/// keeps its highest lexical weight.
pub fn score_phrases(occurrences: &[PhraseOccurrence], source_to_target: &TTable, target_to_source: &TTable) -> PhraseTable {
    struct Acc {
        count: u64,
        lex_st: f64,
        lex_ts: f64,
    }
    let mut pairs: BTreeMap<(&str, &str), Acc> = BTreeMap::new();
    let mut source_totals: HashMap<&str, u64> = HashMap::new();
    let mut target_totals: HashMap<&str, u64> = HashMap::new();
    for occ in occurrences {
        let (s, t) = (occ.phrase.source.as_str(), occ.phrase.target.as_str());
        let sw: Vec<&str> = s.split(' ').collect();
        let tw: Vec<&str> = t.split(' ').collect();
        let lex_ts = lexical_weight(source_to_target, &sw, &tw, occ.links.iter().copied());
        let lex_st = lexical_weight(target_to_source, &tw, &sw, occ.links.iter().map(|&(i, j)| (j, i)));
        let acc = pairs.entry((s, t)).or_insert(Acc {
            count: 0,
            lex_st: 0.0,
            lex_ts: 0.0,
        });
        acc.count += 1;
        acc.lex_st = acc.lex_st.max(lex_st);
        acc.lex_ts = acc.lex_ts.max(lex_ts);
        *source_totals.entry(s).or_default() += 1;
        *target_totals.entry(t).or_default() += 1;
    }
    PhraseTable::from_entries(pairs.into_iter().map(|((s, t), acc)| PhraseEntry {
        source: s.to_string(),
        target: t.to_string(),
        scores: PhraseScores {
            phi_st: acc.count as f64 / target_totals[t] as f64,
            lex_st: acc.lex_st,
            phi_ts: acc.count as f64 / source_totals[s] as f64,
            lex_ts: acc.lex_ts,
        },
    }))
}
