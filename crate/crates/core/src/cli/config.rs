use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::{side_path, ParallelCorpus, TruecaseModel};
use crate::decoder::{FeatureWeights, Models, SearchParams, FEATURE_NAMES, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::lm::{NGramModel, Smoothing};
use crate::phrases::{PhraseTable, ReorderingTable};

const HEADER: &str = "# phraseforge run config\n";

/// Model files and prepared corpus stems. Relative paths are relative to
/// the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub lm: PathBuf,
    pub phrase_table: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reordering_table: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truecase: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tune: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
}

/// Training and search hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub source_lang: String,
    pub target_lang: String,
    pub order: usize,
    #[serde(with = "smoothing_text")]
    pub smoothing: Smoothing,
    pub em_iters: usize,
    pub max_phrase_len: usize,
    pub table_limit: usize,
    pub beam: usize,
    pub threshold: f64,
    /// Absent means unlimited.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distortion_limit: Option<usize>,
    pub nbest: usize,
    pub seed: u64,
}

impl Params {
    pub fn new(source_lang: impl Into<String>, target_lang: impl Into<String>) -> Self {
        let search = SearchParams::default();
        Self {
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
            order: crate::lm::DEFAULT_ORDER,
            smoothing: Smoothing::default(),
            em_iters: crate::align::DEFAULT_EM_ITERATIONS,
            max_phrase_len: crate::phrases::DEFAULT_MAX_PHRASE_LEN,
            table_limit: crate::phrases::DEFAULT_TABLE_LIMIT,
            beam: search.beam,
            threshold: search.threshold,
            distortion_limit: search.distortion_limit,
            nbest: crate::decoder::DEFAULT_NBEST,
            seed: 0,
        }
    }

    pub fn search(&self) -> SearchParams {
        SearchParams {
            beam: self.beam,
            threshold: self.threshold,
            distortion_limit: self.distortion_limit,
        }
    }
}

/// The run config: `[paths]`, `[params]` and `[weights]` sections in TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub params: Params,
    #[serde(with = "weights_table")]
    pub weights: FeatureWeights,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn to_text(&self) -> String {
        let body = toml::to_string(self).expect("run config serializes");
        format!("{HEADER}{body}")
    }

    /// Parses config text without touching the file system.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.weights = FeatureWeights::new(config.weights.0)?;
        config.base_dir = base_dir.to_path_buf();
        Ok(config)
    }

    /// Reads a config and checks that every referenced file exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let config = Self::parse(&text, &base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// `p` resolved against the config directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn validate(&self) -> Result<()> {
        let p = &self.paths;
        let files = [Some(&p.lm), Some(&p.phrase_table), p.reordering_table.as_ref(), p.truecase.as_ref()];
        for f in files.into_iter().flatten() {
            let full = self.resolve(f);
            if !full.is_file() {
                return Err(Error::Config(format!("missing file {}", full.display())));
            }
        }
        for stem in [&p.train, &p.tune, &p.test].into_iter().flatten() {
            for lang in [&self.params.source_lang, &self.params.target_lang] {
                let full = side_path(&self.resolve(stem), lang);
                if !full.is_file() {
                    return Err(Error::Config(format!("missing corpus file {}", full.display())));
                }
            }
        }
        Ok(())
    }

    pub fn load_models(&self) -> Result<Models> {
        Ok(Models {
            lm: NGramModel::read_arpa(&self.resolve(&self.paths.lm))?,
            phrases: PhraseTable::load(&self.resolve(&self.paths.phrase_table))?,
            reordering: self
                .paths
                .reordering_table
                .as_ref()
                .map(|p| ReorderingTable::load(&self.resolve(p)))
                .transpose()?,
        })
    }

    pub fn load_truecase(&self) -> Result<Option<TruecaseModel>> {
        self.paths
            .truecase
            .as_ref()
            .map(|p| TruecaseModel::load(&self.resolve(p)))
            .transpose()
    }

    /// Loads the corpus behind one of the `train`, `tune`, `test` stems.
    pub fn load_corpus(&self, stem: Option<&PathBuf>, name: &str) -> Result<ParallelCorpus> {
        let stem = stem.ok_or_else(|| Error::Config(format!("no {name} corpus in [paths]")))?;
        ParallelCorpus::load(&self.resolve(stem), &self.params.source_lang, &self.params.target_lang)
    }
}

mod smoothing_text {
    use super::*;

    pub fn serialize<S: Serializer>(s: &Smoothing, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Smoothing, D::Error> {
        let text = String::deserialize(de)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Weights as `name = value` in feature order; every feature is required.
mod weights_table {
    use serde::ser::SerializeMap;

    use super::*;

    pub fn serialize<S: Serializer>(w: &FeatureWeights, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = ser.serialize_map(Some(NUM_FEATURES))?;
        for (name, v) in FEATURE_NAMES.iter().zip(w.0) {
            map.serialize_entry(name, &v)?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<FeatureWeights, D::Error> {
        let mut named = HashMap::<String, f64>::deserialize(de)?;
        let mut w = [0.0; NUM_FEATURES];
        for (slot, name) in w.iter_mut().zip(FEATURE_NAMES) {
            *slot = named
                .remove(name)
                .ok_or_else(|| serde::de::Error::custom(format!("missing weight `{name}`")))?;
        }
        if let Some(extra) = named.keys().min() {
            return Err(serde::de::Error::custom(format!("unknown weight `{extra}`")));
        }
        Ok(FeatureWeights(w))
    }
}
