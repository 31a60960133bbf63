//! Pipeline commands behind the `phraseforge` binary: prepare, train, tune,
//! translate and evaluate, sharing one TOML run config.

mod config;
mod pipeline;

pub use config::{Params, Paths, RunConfig};
pub use pipeline::{
    cmd_evaluate, cmd_prepare, cmd_train, cmd_translate, cmd_tune, read_judgments, Manifest, PrepareOptions, Translator, TuneOptions,
    ALIGNMENT_FILE, CONFIG_FILE, LM_FILE, MANIFEST_FILE, PHRASE_TABLE_FILE, REORDERING_TABLE_FILE,
};
