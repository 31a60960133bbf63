//! ARPA text format.
//!
//! ```text
//! \data\
//! ngram 1=<count>
//! ngram 2=<count>
//!
//! \1-grams:
//! <log10 p>  <w>  [<log10 backoff>]
//!
//! \2-grams:
//! <log10 p>  <w1> <w2>
//!
//! \end\
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Entry, NGramModel};
use crate::error::{Error, Result};
use crate::vocab::{Vocabulary, BOS_TOKEN, UNK_ID};

/// log10 values at or below this are read as probability zero.
const LOG10_ZERO: f64 = -99.0;

fn to_log10(ln: f64) -> f64 {
    ln / std::f64::consts::LN_10
}

fn from_log10(log10: f64) -> f64 {
    if log10 <= LOG10_ZERO {
        f64::NEG_INFINITY
    } else {
        log10 * std::f64::consts::LN_10
    }
}

fn fmt_log10(out: &mut String, ln: f64) {
    if ln == f64::NEG_INFINITY {
        write!(out, "{LOG10_ZERO}").unwrap();
    } else {
        let v = to_log10(ln);
        // Avoid printing "-0.0000000".
        let v = if v.abs() < 5e-8 { 0.0 } else { v };
        write!(out, "{v:.7}").unwrap();
    }
}

impl NGramModel {
    pub fn to_arpa(&self) -> String {
        let mut out = String::from("\\data\\\n");
        for k in 1..=self.order {
            writeln!(out, "ngram {k}={}", self.levels[k - 1].len()).unwrap();
        }
        for k in 1..=self.order {
            write!(out, "\n\\{k}-grams:\n").unwrap();
            let mut rows: Vec<(Vec<&str>, &Entry)> = self.levels[k - 1]
                .iter()
                .map(|(g, e)| (g.iter().map(|&id| self.vocab.token(id).unwrap()).collect(), e))
                .collect();
            rows.sort_by(|a, b| a.0.cmp(&b.0));
            for (tokens, entry) in rows {
                fmt_log10(&mut out, entry.prob);
                out.push('\t');
                out.push_str(&tokens.join(" "));
                if k < self.order && entry.backoff != 0.0 {
                    out.push('\t');
                    fmt_log10(&mut out, entry.backoff);
                }
                out.push('\n');
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }

    pub fn write_arpa(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_arpa()).map_err(|e| Error::io(path, e))
    }

    pub fn read_arpa(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_arpa(&text, &path.display().to_string())
    }

    /// Parses ARPA text; errors carry `context` and a 1-based line number.
    pub fn parse_arpa(text: &str, context: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::parse(context, line, msg);
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        match lines.next() {
            Some((_, "\\data\\")) => {}
            Some((n, other)) => return Err(err(n, format!("expected \\data\\, found {other:?}"))),
            None => return Err(err(0, "empty ARPA file".into())),
        }

        let mut declared = Vec::new();
        let mut pending = None;
        for (n, line) in lines.by_ref() {
            if let Some(spec) = line.strip_prefix("ngram ") {
                let (k, count) = spec
                    .split_once('=')
                    .and_then(|(k, c)| Some((k.trim().parse::<usize>().ok()?, c.trim().parse::<usize>().ok()?)))
                    .ok_or_else(|| err(n, format!("malformed count line {line:?}")))?;
                if k != declared.len() + 1 {
                    return Err(err(n, format!("expected ngram {} count, found ngram {k}", declared.len() + 1)));
                }
                declared.push(count);
            } else {
                pending = Some((n, line));
                break;
            }
        }
        if declared.is_empty() {
            return Err(err(pending.map_or(0, |p| p.0), "no ngram counts in \\data\\ section".into()));
        }
        let order = declared.len();

        let mut vocab = Vocabulary::new();
        let mut levels: Vec<HashMap<Vec<u32>, Entry>> = vec![HashMap::new(); order];
        let mut k = 0;
        let mut header_line = 0;
        let mut finished = false;
        let mut next = pending;
        while let Some((n, line)) = next.take().or_else(|| lines.next()) {
            if line.starts_with('\\') {
                if k > 0 && levels[k - 1].len() != declared[k - 1] {
                    return Err(err(
                        n,
                        format!(
                            "\\data\\ declares {} {k}-grams but the section starting at line {header_line} has {}",
                            declared[k - 1],
                            levels[k - 1].len()
                        ),
                    ));
                }
                if line == "\\end\\" {
                    if k != order {
                        return Err(err(n, format!("\\end\\ reached after {k} of {order} sections")));
                    }
                    finished = true;
                    break;
                }
                let section = line
                    .strip_prefix('\\')
                    .and_then(|l| l.strip_suffix("-grams:"))
                    .and_then(|l| l.parse::<usize>().ok())
                    .ok_or_else(|| err(n, format!("malformed section header {line:?}")))?;
                if section != k + 1 || section > order {
                    return Err(err(n, format!("unexpected section \\{section}-grams: after section {k}")));
                }
                k = section;
                header_line = n;
                continue;
            }
            if k == 0 {
                return Err(err(n, format!("entry outside of any section: {line:?}")));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != k + 1 && !(fields.len() == k + 2 && k < order) {
                return Err(err(n, format!("expected {} or {} fields in a {k}-gram entry", k + 1, k + 2)));
            }
            let number = |s: &str| s.parse::<f64>().map_err(|_| err(n, format!("invalid number {s:?}")));
            let prob = from_log10(number(fields[0])?);
            let backoff = if fields.len() == k + 2 {
                from_log10(number(fields[k + 1])?)
            } else {
                0.0
            };
            let gram: Vec<u32> = fields[1..=k].iter().map(|t| vocab.insert(t)).collect();
            if k > 1 && levels[0].len() == declared[0] {
                // Unigram section is complete; later sections may not add words.
                if let Some(&id) = gram.iter().find(|&&id| !levels[0].contains_key(&vec![id])) {
                    return Err(err(n, format!("word {:?} has no unigram entry", vocab.token(id).unwrap())));
                }
            }
            if prob == f64::NEG_INFINITY && !(k == 1 && fields[1] == BOS_TOKEN) {
                return Err(err(n, "zero probability is only allowed for <s>".into()));
            }
            if levels[k - 1].insert(gram, Entry { prob, backoff }).is_some() {
                return Err(err(n, "duplicate n-gram".into()));
            }
        }
        if !finished {
            return Err(err(text.lines().count(), "missing \\end\\".into()));
        }
        let open = levels[0].contains_key(&vec![UNK_ID]);
        Ok(NGramModel {
            order,
            vocab,
            open,
            levels,
        })
    }
}
