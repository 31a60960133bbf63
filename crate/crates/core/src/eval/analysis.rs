use std::fmt::{self, Write as _};

use super::bleu::{BleuReport, BleuStats, RefLength, BLEU_ORDER};
use crate::corpus::Sentence;
use crate::error::{Error, Result};

/// Percentage `100 * unsuccessful / total`, rounded half-up to one decimal.
pub fn error_rate(total: u64, unsuccessful: u64) -> Result<f64> {
    if total == 0 {
        return Err(Error::InvalidArgument("error rate of an empty set".into()));
    }
    if unsuccessful > total {
        return Err(Error::InvalidArgument(format!("{unsuccessful} failures out of {total} sentences")));
    }
    // Integer arithmetic keeps x.x5 cases exact.
    let tenths = (2000 * unsuccessful + total) / (2 * total);
    Ok(tenths as f64 / 10.0)
}

/// Success counts over a sentence set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorAnalysis {
    pub total: u64,
    pub successful: u64,
    pub unsuccessful: u64,
    /// One decimal, half-up.
    pub percent_error: f64,
}

impl ErrorAnalysis {
    pub fn from_flags(success: &[bool]) -> Result<Self> {
        let total = success.len() as u64;
        let successful = success.iter().filter(|&&s| s).count() as u64;
        Self::from_counts(total, total - successful)
    }

    pub fn from_counts(total: u64, unsuccessful: u64) -> Result<Self> {
        Ok(Self {
            percent_error: error_rate(total, unsuccessful)?,
            total,
            successful: total.saturating_sub(unsuccessful),
            unsuccessful,
        })
    }
}

impl fmt::Display for ErrorAnalysis {
    /// `total successful unsuccessful percent`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {:.1}",
            self.total, self.successful, self.unsuccessful, self.percent_error
        )
    }
}

/// One test sentence with its output and first reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub source: String,
    pub hypothesis: String,
    pub reference: String,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub bleu: BleuReport,
    pub analysis: ErrorAnalysis,
    pub rows: Vec<ReportRow>,
}

impl EvaluationReport {
    /// Summary lines followed by a tab-separated side-by-side table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.bleu).unwrap();
        writeln!(out, "bleu\t{:.4}", self.bleu.bleu).unwrap();
        writeln!(out, "total\tsuccessful\tunsuccessful\t% error").unwrap();
        let a = &self.analysis;
        writeln!(out, "{}\t{}\t{}\t{:.1}", a.total, a.successful, a.unsuccessful, a.percent_error).unwrap();
        writeln!(out).unwrap();
        writeln!(out, "#\tok\tsource\thypothesis\treference").unwrap();
        for (k, r) in self.rows.iter().enumerate() {
            let ok = if r.success { "yes" } else { "no" };
            writeln!(out, "{}\t{ok}\t{}\t{}\t{}", k + 1, r.source, r.hypothesis, r.reference).unwrap();
        }
        out
    }
}

/// BLEU plus success analysis. Without `judgments`, a sentence succeeds
/// when it equals one of its references token for token.
pub fn report(sources: &[Sentence], hyps: &[Sentence], refs: &[Vec<Sentence>], judgments: Option<&[bool]>) -> Result<EvaluationReport> {
    if sources.len() != hyps.len() || hyps.len() != refs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} sources, {} hypotheses and {} reference sets",
            sources.len(),
            hyps.len(),
            refs.len()
        )));
    }
    if let Some(j) = judgments {
        if j.len() != hyps.len() {
            return Err(Error::InvalidArgument(format!(
                "{} judgments for {} sentences",
                j.len(),
                hyps.len()
            )));
        }
    }
    let mut stats = BleuStats::zero(BLEU_ORDER);
    let mut rows = Vec::with_capacity(hyps.len());
    for (k, ((s, h), r)) in sources.iter().zip(hyps).zip(refs).enumerate() {
        stats += &BleuStats::sentence(h, r, BLEU_ORDER)?;
        let success = match judgments {
            Some(j) => j[k],
            None => r.iter().any(|x| x == h),
        };
        rows.push(ReportRow {
            source: s.to_string(),
            hypothesis: h.to_string(),
            reference: r[0].to_string(),
            success,
        });
    }
    let flags: Vec<bool> = rows.iter().map(|r| r.success).collect();
    Ok(EvaluationReport {
        bleu: stats.report(false, RefLength::Closest),
        analysis: ErrorAnalysis::from_flags(&flags)?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn error_rate_rows() {
        assert_eq!(error_rate(200, 35).unwrap(), 17.5);
        assert_eq!(error_rate(250, 39).unwrap(), 15.6);
        assert_eq!(error_rate(300, 41).unwrap(), 13.7);
        let rows = [(200, 165, 35, "17.5"), (250, 211, 39, "15.6"), (300, 259, 41, "13.7")];
        for (total, ok, bad, pct) in rows {
            let mut flags = vec![true; ok];
            flags.extend(vec![false; bad]);
            let a = ErrorAnalysis::from_flags(&flags).unwrap();
            assert_eq!(a.to_string(), format!("{total} {ok} {bad} {pct}"));
        }
    }

    #[test]
    fn edge_cases() {
        assert_eq!(error_rate(250, 0).unwrap(), 0.0);
        assert_eq!(error_rate(3, 3).unwrap(), 100.0);
        // 1/8 = 12.5 exactly; 1/16 = 6.25 rounds up to 6.3.
        assert_eq!(error_rate(8, 1).unwrap(), 12.5);
        assert_eq!(error_rate(16, 1).unwrap(), 6.3);
        assert!(error_rate(0, 0).is_err());
        assert!(error_rate(2, 3).is_err());
    }

    fn s(t: &str) -> Sentence {
        Sentence::from_tokenized(t).unwrap()
    }

    #[test]
    fn report_counts_exact_matches() {
        let src: Vec<Sentence> = ["a", "b", "c", "d"].iter().map(|x| s(x)).collect();
        let hyp: Vec<Sentence> = ["w x", "y", "z", "q"].iter().map(|x| s(x)).collect();
        let refs: Vec<Vec<Sentence>> = ["w x", "y", "z", "r"].iter().map(|x| vec![s(x)]).collect();
        let r = report(&src, &hyp, &refs, None).unwrap();
        assert_eq!(r.analysis.percent_error, 25.0);
        assert_eq!(r.analysis.successful, 3);
        assert!(!r.rows[3].success);
        let all_ok = report(&src, &hyp, &hyp.iter().map(|h| vec![h.clone()]).collect::<Vec<_>>(), None).unwrap();
        assert_eq!(all_ok.analysis.percent_error, 0.0);
        assert_eq!(all_ok.bleu.bleu, 1.0);
        assert!(all_ok.to_text().starts_with("BLEU = 100.00"));
        let judged = report(&src, &hyp, &refs, Some(&[true, true, true, true])).unwrap();
        assert_eq!(judged.analysis.unsuccessful, 0);
        assert!(report(&src, &hyp, &refs, Some(&[true])).is_err());
    }

    proptest! {
        #[test]
        fn rate_matches_rounded_float(total in 1u64..5000, frac in 0.0f64..=1.0) {
            let bad = (total as f64 * frac) as u64;
            let r = error_rate(total, bad).unwrap();
            let exact = 1000.0 * bad as f64 / total as f64;
            prop_assert!((r * 10.0 - exact).abs() <= 0.5 + 1e-9);
            let a = ErrorAnalysis::from_counts(total, bad).unwrap();
            prop_assert_eq!(a.successful + a.unsuccessful, a.total);
        }
    }
}
