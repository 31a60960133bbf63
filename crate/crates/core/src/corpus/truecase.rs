use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::Sentence;
use crate::error::{Error, Result};

/// Most frequent surface casing per lowercased form.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TruecaseModel {
    best: HashMap<String, String>,
}

impl TruecaseModel {
    /// Learns casings from sentence-internal tokens.
    ///
    /// Sentence-initial tokens are skipped since their casing is forced by
    /// position. Ties go to the lexicographically smallest form.
    pub fn train<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> Self {
        let mut counts: HashMap<String, HashMap<&'a str, usize>> = HashMap::new();
        for sentence in sentences {
            for token in &sentence.tokens()[1..] {
                *counts.entry(token.to_lowercase()).or_default().entry(token.as_str()).or_default() += 1;
            }
        }
        let best = counts
            .into_iter()
            .map(|(lower, forms)| {
                let form = forms
                    .into_iter()
                    .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0)))
                    .map(|(f, _)| f.to_owned())
                    .unwrap();
                (lower, form)
            })
            .collect();
        TruecaseModel { best }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        TruecaseModel {
            best: pairs.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.best.len()
    }

    pub fn is_empty(&self) -> bool {
        self.best.is_empty()
    }

    /// Recases the sentence-initial token; unknown tokens pass through.
    pub fn apply(&self, sentence: &Sentence) -> Sentence {
        let mut tokens = sentence.tokens().to_vec();
        if let Some(form) = self.best.get(&tokens[0].to_lowercase()) {
            tokens[0] = form.clone();
        }
        Sentence::from_valid(tokens)
    }

    /// One `lowercase<TAB>form` line per entry, sorted.
    pub fn to_text(&self) -> String {
        let mut entries: Vec<_> = self.best.iter().collect();
        entries.sort();
        let mut out = String::new();
        for (lower, form) in entries {
            writeln!(out, "{lower}\t{form}").unwrap();
        }
        out
    }

    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut best = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (lower, form) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(context, n + 1, "expected `lowercase<TAB>form`"))?;
            best.insert(lower.to_owned(), form.to_owned());
        }
        Ok(TruecaseModel { best })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> Sentence {
        Sentence::from_tokenized(text).unwrap()
    }

    #[test]
    fn caseless_script_is_identity() {
        let model = TruecaseModel::train([&s("অসম এখন সুন্দৰ ঠাই"), &s("এখন অসম")]);
        let input = s("অসম এখন");
        assert_eq!(model.apply(&input), input);
    }

    #[test]
    fn only_first_token_is_recased() {
        let model = TruecaseModel::from_pairs([("the".into(), "the".into())]);
        assert_eq!(model.apply(&s("The Cat")), s("the Cat"));
    }

    #[test]
    fn empty_model_is_identity() {
        let model = TruecaseModel::default();
        let input = s("The Cat sat");
        assert_eq!(model.apply(&input), input);
    }

    #[test]
    fn learns_most_frequent_internal_form() {
        let model = TruecaseModel::train([&s("The cat saw the dog"), &s("Then the Dog left"), &s("A dog")]);
        assert_eq!(model.apply(&s("The Dog")), s("the Dog"));
        assert_eq!(model.apply(&s("Dog")), s("dog"));
        assert_eq!(model.apply(&s("Cat")), s("cat"));
    }

    #[test]
    fn text_round_trip() {
        let model = TruecaseModel::train([&s("x The Cat the")]);
        let back = TruecaseModel::parse(&model.to_text(), "t").unwrap();
        assert_eq!(back, model);
        assert!(TruecaseModel::parse("no-tab-here\n", "t").is_err());
    }
}
