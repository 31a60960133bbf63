//! Phrase extraction, scoring and lexicalized reordering.

mod extract;
mod reordering;
mod table;

pub use extract::{extract_corpus, extract_phrases, is_consistent, orientations, PhraseOccurrence, PhrasePair, DEFAULT_MAX_PHRASE_LEN};
pub use reordering::{train_reordering, Orientation, ReorderingScores, ReorderingTable, DEFAULT_REORDERING_SMOOTHING};
pub use table::{score_phrases, PhraseEntry, PhraseScores, PhraseTable, DEFAULT_TABLE_LIMIT, LEX_FLOOR};
