use unicode_normalization::UnicodeNormalization;

use super::Sentence;
use crate::error::{Error, Result};

/// Characters split off into tokens of their own.
const PUNCTUATION: &[char] = &['।', '॥', '.', ',', '?', '!', ';', ':', '"', '\'', '(', ')'];

fn is_punct(c: char) -> bool {
    PUNCTUATION.contains(&c)
}

/// Tokenizes one line of raw text.
///
/// The line is NFC-normalized and split on whitespace, then clause and
/// sentence punctuation (including the danda `।` and double danda `॥`) is
/// detached into separate tokens. A `.` or `,` between two digits stays
/// inside its number.
pub fn tokenize(raw: &str) -> Result<Sentence> {
    let normalized: String = raw.nfc().collect();
    let mut tokens = Vec::new();
    for word in normalized.split_whitespace() {
        split_word(word, &mut tokens);
    }
    if tokens.is_empty() {
        return Err(Error::EmptyLine);
    }
    Ok(Sentence::from_valid(tokens))
}

/// Like [`tokenize`] for input that has not been validated as UTF-8 yet.
pub fn tokenize_bytes(raw: &[u8]) -> Result<Sentence> {
    tokenize(std::str::from_utf8(raw)?)
}

fn split_word(word: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = word.chars().collect();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let numeric_separator =
            (c == '.' || c == ',') && i > 0 && i + 1 < chars.len() && chars[i - 1].is_numeric() && chars[i + 1].is_numeric();
        if is_punct(c) && !numeric_separator {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            out.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
}
