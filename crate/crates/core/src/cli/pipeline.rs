use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Params, Paths, RunConfig};
use crate::align::{ibm1_train, symmetrize, viterbi_align, write_alignments, Direction, Symmetrization};
use crate::corpus::{self, read_line_pairs, tokenize, ParallelCorpus, Sentence, SentencePair, TruecaseModel};
use crate::decoder::{decode, nbest, nbest_line, FeatureWeights, Models, SearchParams, Translation};
use crate::error::{Error, Result};
use crate::eval::{report, EvaluationReport};
use crate::lm::{count_ngrams, estimate, VocabMode, MAX_ORDER};
use crate::phrases::{extract_corpus, score_phrases, train_reordering, DEFAULT_REORDERING_SMOOTHING};
use crate::tuning::{tune, TuneConfig, TuneResult, DEFAULT_RANDOM_DIRECTIONS};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const CONFIG_FILE: &str = "run.toml";
pub const LM_FILE: &str = "lm.arpa";
pub const PHRASE_TABLE_FILE: &str = "phrase-table";
pub const REORDERING_TABLE_FILE: &str = "reordering-table";
pub const ALIGNMENT_FILE: &str = "aligned.grow-diag-final-and";

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareOptions {
    /// Raw corpus stem: `<input>.<source_lang>` and `<input>.<target_lang>`.
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub source_lang: String,
    pub target_lang: String,
    /// `None` takes every pair left after test and tune.
    pub n_train: Option<usize>,
    pub n_test: usize,
    pub n_tune: usize,
    pub max_len: usize,
    pub max_ratio: f64,
    pub seed: u64,
}

impl PrepareOptions {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>, source_lang: &str, target_lang: &str) -> Self {
        Self {
            input: input.into(),
            out_dir: out_dir.into(),
            source_lang: source_lang.to_string(),
            target_lang: target_lang.to_string(),
            n_train: None,
            n_test: 0,
            n_tune: 0,
            max_len: corpus::DEFAULT_MAX_LEN,
            max_ratio: corpus::DEFAULT_MAX_RATIO,
            seed: 0,
        }
    }
}

/// Record of a `prepare` run, written next to the split files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub source_lang: String,
    pub target_lang: String,
    pub seed: u64,
    /// Raw line pairs read.
    pub raw: usize,
    /// Pairs left after tokenization and cleaning.
    pub cleaned: usize,
    pub train: usize,
    pub test: usize,
    pub tune: usize,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Tokenizes, truecases, cleans and splits a raw parallel corpus into
/// `train`, `test` and `tune` stems under `out_dir`. Lines that tokenize to
/// nothing are dropped along with their partner.
pub fn cmd_prepare(opts: &PrepareOptions) -> Result<Manifest> {
    let lines = read_line_pairs(&opts.input, &opts.source_lang, &opts.target_lang)?;
    let raw = lines.len();
    let pairs: Vec<SentencePair> = lines
        .par_iter()
        .filter_map(|(s, t)| match (tokenize(s), tokenize(t)) {
            (Ok(s), Ok(t)) => Some(Ok(SentencePair::new(s, t))),
            (Err(Error::EmptyLine), _) | (_, Err(Error::EmptyLine)) => None,
            (Err(e), _) | (_, Err(e)) => Some(Err(e)),
        })
        .collect::<Result<_>>()?;
    if pairs.len() < raw {
        log::info!("dropped {} pairs with an empty side", raw - pairs.len());
    }
    let source_tc = TruecaseModel::train(pairs.iter().map(|p| &p.source));
    let target_tc = TruecaseModel::train(pairs.iter().map(|p| &p.target));
    let pairs = pairs
        .iter()
        .map(|p| SentencePair::new(source_tc.apply(&p.source), target_tc.apply(&p.target)))
        .collect();
    let tokenized = ParallelCorpus::new(&opts.source_lang, &opts.target_lang).with_pairs(pairs);
    let cleaned = corpus::clean(&tokenized, opts.max_len, opts.max_ratio);
    let n_train = match opts.n_train {
        Some(n) => n,
        None => cleaned
            .len()
            .checked_sub(opts.n_test + opts.n_tune)
            .ok_or(Error::InsufficientData {
                available: cleaned.len(),
                requested: opts.n_test + opts.n_tune,
            })?,
    };
    let split = corpus::split(&cleaned, n_train, opts.n_test, opts.n_tune, opts.seed)?;

    create_dir(&opts.out_dir)?;
    split.train.write(&opts.out_dir.join("train"))?;
    split.test.write(&opts.out_dir.join("test"))?;
    split.tune.write(&opts.out_dir.join("tune"))?;
    source_tc.save(&opts.out_dir.join(format!("truecase.{}", opts.source_lang)))?;
    target_tc.save(&opts.out_dir.join(format!("truecase.{}", opts.target_lang)))?;
    let manifest = Manifest {
        source_lang: opts.source_lang.clone(),
        target_lang: opts.target_lang.clone(),
        seed: opts.seed,
        raw,
        cleaned: cleaned.len(),
        train: split.train.len(),
        test: split.test.len(),
        tune: split.tune.len(),
    };
    manifest.save(&opts.out_dir)?;
    log::info!(
        "prepared {} pairs: train {}, test {}, tune {}",
        manifest.cleaned,
        manifest.train,
        manifest.test,
        manifest.tune
    );
    Ok(manifest)
}

/// Trains every model from a prepared corpus directory and writes them,
/// with a config holding the default weights, to `out_dir`. The language
/// tags come from the corpus manifest.
pub fn cmd_train(corpus_dir: &Path, out_dir: &Path, params: &Params) -> Result<RunConfig> {
    if !(1..=MAX_ORDER).contains(&params.order) {
        return Err(Error::InvalidArgument(format!(
            "LM order must be in 1..={MAX_ORDER}, got {}",
            params.order
        )));
    }
    if params.max_phrase_len == 0 || params.table_limit == 0 {
        return Err(Error::InvalidArgument("phrase length and table limit must be positive".into()));
    }
    let manifest = Manifest::load(corpus_dir).map_err(|e| e.in_stage("corpus"))?;
    let params = Params {
        source_lang: manifest.source_lang.clone(),
        target_lang: manifest.target_lang.clone(),
        ..params.clone()
    };
    let corpus_dir = std::path::absolute(corpus_dir).map_err(|e| Error::io(corpus_dir, e))?;
    let train =
        ParallelCorpus::load(&corpus_dir.join("train"), &params.source_lang, &params.target_lang).map_err(|e| e.in_stage("corpus"))?;
    if train.is_empty() {
        return Err(Error::EmptyCorpus.in_stage("corpus"));
    }

    log::info!("training {}-gram LM on {} sentences", params.order, train.len());
    let lm = estimate(&count_ngrams(train.targets(), params.order), params.smoothing, VocabMode::Open);

    log::info!("aligning with {} EM iterations per direction", params.em_iters);
    let (st, ts) = rayon::join(
        || ibm1_train(&train, params.em_iters),
        || ibm1_train(&train.reversed(), params.em_iters),
    );
    let st = st.map_err(|e| e.in_stage("align"))?;
    let ts = ts.map_err(|e| e.in_stage("align"))?;
    let alignments = train
        .pairs
        .par_iter()
        .map(|p| {
            let fwd = viterbi_align(&st, p, Direction::SourceToTarget);
            let rev = viterbi_align(&ts, p, Direction::TargetToSource);
            symmetrize(&fwd, &rev, Symmetrization::GrowDiagFinalAnd)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("symmetrize"))?;

    let occurrences = extract_corpus(&train, &alignments, params.max_phrase_len).map_err(|e| e.in_stage("extract"))?;
    log::info!("extracted {} phrase pair occurrences", occurrences.len());
    let table = score_phrases(&occurrences, &st, &ts).limited(params.table_limit);
    let reordering = train_reordering(&occurrences, DEFAULT_REORDERING_SMOOTHING).map_err(|e| e.in_stage("reordering"))?;

    create_dir(out_dir)?;
    let write = |stage: &'static str, r: Result<()>| r.map_err(|e| e.in_stage(stage));
    write("lm", lm.write_arpa(&out_dir.join(LM_FILE)))?;
    write("align", write_alignments(&out_dir.join(ALIGNMENT_FILE), &alignments))?;
    write("score", table.save(&out_dir.join(PHRASE_TABLE_FILE)))?;
    write("reordering", reordering.save(&out_dir.join(REORDERING_TABLE_FILE)))?;

    let truecase = corpus_dir.join(format!("truecase.{}", params.source_lang));
    let stem_if_present = |name: &str| {
        let stem = corpus_dir.join(name);
        corpus::side_path(&stem, &params.source_lang).is_file().then_some(stem)
    };
    let config = RunConfig {
        paths: Paths {
            lm: LM_FILE.into(),
            phrase_table: PHRASE_TABLE_FILE.into(),
            reordering_table: Some(REORDERING_TABLE_FILE.into()),
            truecase: truecase.is_file().then_some(truecase),
            train: Some(corpus_dir.join("train")),
            tune: stem_if_present("tune").filter(|_| manifest.tune > 0),
            test: stem_if_present("test").filter(|_| manifest.test > 0),
        },
        params,
        weights: FeatureWeights::default(),
        base_dir: out_dir.to_path_buf(),
    };
    write("config", config.save(&out_dir.join(CONFIG_FILE)))?;
    Ok(config)
}

/// Runtime options for [`cmd_tune`]; `None` falls back to the config.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TuneOptions {
    pub iterations: Option<usize>,
    pub nbest: Option<usize>,
    pub seed: Option<u64>,
}

/// Tunes the weights on the config's tune corpus and rewrites only the
/// `[weights]` section of the config file.
pub fn cmd_tune(config_path: &Path, opts: &TuneOptions) -> Result<TuneResult> {
    let mut config = RunConfig::load(config_path)?;
    let dev = config.load_corpus(config.paths.tune.as_ref(), "tune")?;
    let models = config.load_models()?;
    let tc = TuneConfig {
        iterations: opts.iterations.unwrap_or(crate::tuning::DEFAULT_TUNE_ITERATIONS),
        nbest: opts.nbest.unwrap_or(config.params.nbest),
        random_directions: DEFAULT_RANDOM_DIRECTIONS,
        seed: opts.seed.unwrap_or(config.params.seed),
        search: config.params.search(),
    };
    let result = tune(&dev, &models, &config.weights, &tc).map_err(|e| e.in_stage("tune"))?;
    config.weights = result.weights;
    config.save(config_path)?;
    log::info!("tuned weights: {}", config.weights);
    Ok(result)
}

/// Models plus input preprocessing, ready to decode raw lines.
#[derive(Debug, Clone)]
pub struct Translator {
    pub models: Models,
    pub weights: FeatureWeights,
    pub search: SearchParams,
    pub truecase: Option<TruecaseModel>,
}

impl Translator {
    pub fn from_config(config: &RunConfig) -> Result<Self> {
        Ok(Self {
            models: config.load_models()?,
            weights: config.weights,
            search: config.params.search(),
            truecase: config.load_truecase()?,
        })
    }

    /// Tokenized and truecased input; `None` for a blank line.
    pub fn preprocess(&self, line: &str) -> Result<Option<Sentence>> {
        match tokenize(line) {
            Ok(s) => Ok(Some(match &self.truecase {
                Some(tc) => tc.apply(&s),
                None => s,
            })),
            Err(Error::EmptyLine) => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn translate(&self, sentence: &Sentence) -> Result<Translation> {
        decode(sentence, &self.models, &self.weights, &self.search)
    }

    /// Translates `lines` in parallel; blank lines give `None`.
    pub fn translate_lines(&self, lines: &[String], n: Option<usize>) -> Result<Vec<Option<Vec<Translation>>>> {
        lines
            .par_iter()
            .map(|line| {
                let Some(sentence) = self.preprocess(line)? else {
                    return Ok(None);
                };
                match n {
                    Some(n) => nbest(&sentence, &self.models, &self.weights, &self.search, n).map(Some),
                    None => self.translate(&sentence).map(|t| Some(vec![t])),
                }
            })
            .collect()
    }
}

/// Decodes `input` line by line into `output`, in input order. With
/// `nbest`, writes `id ||| tokens ||| features ||| score` lines instead.
/// A blank input line gives an empty output line (no n-best lines).
pub fn cmd_translate(config: &RunConfig, input: impl BufRead, mut output: impl Write, nbest: Option<usize>) -> Result<()> {
    if nbest == Some(0) {
        return Err(Error::InvalidArgument("n-best size must be at least 1".into()));
    }
    let translator = Translator::from_config(config)?;
    let lines = input
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io("<input>", e))?;
    let results = translator.translate_lines(&lines, nbest)?;
    let out_err = |e| Error::io("<output>", e);
    for (k, result) in results.iter().enumerate() {
        match (result, nbest) {
            (None, _) => {
                log::warn!("line {}: empty input", k + 1);
                if nbest.is_none() {
                    writeln!(output).map_err(out_err)?;
                }
            }
            (Some(list), None) => writeln!(output, "{}", list[0].text()).map_err(out_err)?,
            (Some(list), Some(_)) => {
                for t in list {
                    writeln!(output, "{}", nbest_line(k, t)).map_err(out_err)?;
                }
            }
        }
    }
    output.flush().map_err(out_err)
}

/// Parses one judgment per line: `1`/`0`, `yes`/`no` or `true`/`false`.
pub fn read_judgments(path: &Path) -> Result<Vec<bool>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(n, l)| match l.trim() {
            "1" | "yes" | "true" => Ok(true),
            "0" | "no" | "false" => Ok(false),
            other => Err(Error::parse(path.display().to_string(), n + 1, format!("bad judgment {other:?}"))),
        })
        .collect()
}

/// Translates a test corpus (the config's `test` stem unless `test` is
/// given) and scores it against its target side.
pub fn cmd_evaluate(config: &RunConfig, test: Option<&Path>, judgments: Option<&Path>) -> Result<EvaluationReport> {
    let corpus = match test {
        Some(stem) => ParallelCorpus::load(stem, &config.params.source_lang, &config.params.target_lang)?,
        None => config.load_corpus(config.paths.test.as_ref(), "test")?,
    };
    let translator = Translator::from_config(config)?;
    let hyps = corpus
        .pairs
        .par_iter()
        .map(|p| translator.translate(&p.source).and_then(|t| Sentence::new(t.tokens)))
        .collect::<Result<Vec<_>>>()?;
    let sources: Vec<Sentence> = corpus.sources().cloned().collect();
    let refs: Vec<Vec<Sentence>> = corpus.targets().map(|t| vec![t.clone()]).collect();
    let judgments = judgments.map(read_judgments).transpose()?;
    report(&sources, &hyps, &refs, judgments.as_deref())
}
