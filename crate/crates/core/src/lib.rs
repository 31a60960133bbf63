//! Phrase-based statistical machine translation.
//!
//! The pipeline runs corpus preparation ([`corpus`]), n-gram language
//! modeling ([`lm`]), IBM Model 1 word alignment ([`align`]), phrase
//! extraction and lexicalized reordering ([`phrases`]), log-linear stack
//! decoding ([`decoder`]), minimum error rate training ([`tuning`]) and BLEU
//! evaluation ([`eval`]). The [`cli`] module ties the stages together behind
//! the `phraseforge` binary.

pub mod align;
pub mod cli;
pub mod corpus;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod lm;
pub mod phrases;
pub mod tuning;
pub mod vocab;

pub use error::{Error, Result};

/// Guide chapters, compiled as doc-tests so the book stays in sync.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/lm.md")]
    mod lm {}
    #[doc = include_str!("../../../book/src/align.md")]
    mod align {}
    #[doc = include_str!("../../../book/src/phrases.md")]
    mod phrases {}
    #[doc = include_str!("../../../book/src/decoder.md")]
    mod decoder {}
    #[doc = include_str!("../../../book/src/tuning.md")]
    mod tuning {}
    #[doc = include_str!("../../../book/src/eval.md")]
    mod eval {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
