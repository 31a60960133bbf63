use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use crate::error::{Error, Result};

pub const NUM_FEATURES: usize = 9;

/// Feature names in their fixed order. N-best lists, configs and weight
/// vectors all use this order.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "lm",
    "phi_st",
    "lex_st",
    "phi_ts",
    "lex_ts",
    "reordering",
    "word_penalty",
    "phrase_penalty",
    "distortion",
];

/// Raw (unweighted) feature values of a derivation. Probability features
/// are natural logs; `word_penalty` is minus the output length,
/// `phrase_penalty` the number of phrases and `distortion` minus the summed
/// jump widths.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureVector(pub [f64; NUM_FEATURES]);

impl FeatureVector {
    pub const LM: usize = 0;
    pub const PHI_ST: usize = 1;
    pub const LEX_ST: usize = 2;
    pub const PHI_TS: usize = 3;
    pub const LEX_TS: usize = 4;
    pub const REORDERING: usize = 5;
    pub const WORD_PENALTY: usize = 6;
    pub const PHRASE_PENALTY: usize = 7;
    pub const DISTORTION: usize = 8;

    pub fn dot(&self, w: &FeatureWeights) -> f64 {
        self.0.iter().zip(w.0.iter()).map(|(f, l)| f * l).sum()
    }

    /// `name: value` pairs separated by spaces.
    pub fn to_labeled(&self) -> String {
        FEATURE_NAMES
            .iter()
            .zip(self.0)
            .map(|(n, v)| format!("{n}: {v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Inverse of [`FeatureVector::to_labeled`]; names must appear in order.
    pub fn parse_labeled(s: &str) -> Result<Self> {
        let mut out = [0.0; NUM_FEATURES];
        let mut parts = s.split_whitespace();
        for (k, name) in FEATURE_NAMES.iter().enumerate() {
            let label = parts.next().and_then(|l| l.strip_suffix(':'));
            if label != Some(name) {
                return Err(Error::InvalidArgument(format!("expected feature `{name}:` in {s:?}")));
            }
            out[k] = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("missing value for feature `{name}`")))?;
        }
        if parts.next().is_some() {
            return Err(Error::InvalidArgument(format!("trailing fields in feature list {s:?}")));
        }
        Ok(Self(out))
    }
}

impl Add for FeatureVector {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for FeatureVector {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for FeatureVector {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

/// Log-linear weights, one per feature in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureWeights(pub [f64; NUM_FEATURES]);

impl Default for FeatureWeights {
    fn default() -> Self {
        Self([0.5, 0.2, 0.2, 0.2, 0.2, 0.3, -1.0, 0.2, 0.2])
    }
}

impl FeatureWeights {
    /// Rejects non-finite values and the all-zero vector.
    pub fn new(values: [f64; NUM_FEATURES]) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("weight `{}` is not finite", FEATURE_NAMES[k])));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidArgument("all feature weights are zero".into()));
        }
        Ok(Self(values))
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|k| self.0[k])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.map(|w| w * factor))
    }
}

impl fmt::Display for FeatureWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (n, w)) in FEATURE_NAMES.iter().zip(self.0).enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{n}={w}")?;
        }
        Ok(())
    }
}
