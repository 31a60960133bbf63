//! Corpus BLEU and success/error analysis.

mod analysis;
mod bleu;

pub use analysis::{error_rate, report, ErrorAnalysis, EvaluationReport, ReportRow};
pub use bleu::{bleu, bleu_with, BleuReport, BleuStats, RefLength, BLEU_ORDER};
