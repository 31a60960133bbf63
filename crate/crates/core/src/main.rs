use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phraseforge::cli::{self, Params, PrepareOptions, RunConfig, TuneOptions};
use phraseforge::lm::Smoothing;
use phraseforge::{Error, Result};

const THREADS_VAR: &str = "PHRASEFORGE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "phraseforge", version, about = "Phrase-based statistical machine translation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tokenize, truecase, clean and split a raw parallel corpus.
    Prepare(PrepareArgs),
    /// Train the LM, alignments, phrase and reordering tables.
    Train(TrainArgs),
    /// Tune the feature weights on the tune set (MERT).
    Tune(TuneArgs),
    /// Translate stdin to stdout, one sentence per line.
    Translate(TranslateArgs),
    /// Translate a test set and report BLEU and error analysis.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct PrepareArgs {
    /// Raw corpus stem; reads `<input>.<src>` and `<input>.<tgt>`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    src: String,
    #[arg(long)]
    tgt: String,
    /// Training pairs; defaults to all pairs left after test and tune.
    #[arg(long)]
    train: Option<usize>,
    #[arg(long, default_value_t = 0)]
    test: usize,
    #[arg(long, default_value_t = 0)]
    tune: usize,
    #[arg(long, default_value_t = phraseforge::corpus::DEFAULT_MAX_LEN)]
    max_len: usize,
    #[arg(long, default_value_t = phraseforge::corpus::DEFAULT_MAX_RATIO)]
    max_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Directory written by `prepare`.
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory for models and the run config.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = phraseforge::lm::DEFAULT_ORDER)]
    order: usize,
    /// `witten-bell` or `add-k:<k>`.
    #[arg(long, default_value_t = Smoothing::default())]
    smoothing: Smoothing,
    #[arg(long, default_value_t = phraseforge::align::DEFAULT_EM_ITERATIONS)]
    em_iters: usize,
    #[arg(long, default_value_t = phraseforge::phrases::DEFAULT_MAX_PHRASE_LEN)]
    max_phrase_len: usize,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long, default_value_t = phraseforge::decoder::DEFAULT_BEAM)]
    beam: usize,
    /// Maximum reordering jump; negative means unlimited.
    #[arg(long, default_value_t = phraseforge::decoder::DEFAULT_DISTORTION_LIMIT as i64, allow_negative_numbers = true)]
    distortion_limit: i64,
    #[arg(long, default_value_t = phraseforge::decoder::DEFAULT_NBEST)]
    nbest: usize,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    nbest: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct TranslateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Write the N best translations per line in n-best format.
    #[arg(long)]
    nbest: Option<usize>,
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    distortion_limit: Option<i64>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Test corpus stem; defaults to the config's test set.
    #[arg(long)]
    test: Option<PathBuf>,
    /// One success judgment per line, overriding exact-match success.
    #[arg(long)]
    judgments: Option<PathBuf>,
}

fn distortion(limit: i64) -> Option<usize> {
    usize::try_from(limit).ok()
}

fn load_config(path: &Path, beam: Option<usize>, distortion_limit: Option<i64>) -> Result<RunConfig> {
    let mut config = RunConfig::load(path)?;
    if let Some(b) = beam {
        config.params.beam = b;
    }
    if let Some(d) = distortion_limit {
        config.params.distortion_limit = distortion(d);
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(a) => {
            let opts = PrepareOptions {
                n_train: a.train,
                n_test: a.test,
                n_tune: a.tune,
                max_len: a.max_len,
                max_ratio: a.max_ratio,
                seed: a.seed,
                ..PrepareOptions::new(a.input, a.out, &a.src, &a.tgt)
            };
            let m = cli::cmd_prepare(&opts)?;
            println!("train\t{}\ntest\t{}\ntune\t{}", m.train, m.test, m.tune);
        }
        Command::Train(a) => {
            let params = Params {
                order: a.order,
                smoothing: a.smoothing,
                em_iters: a.em_iters,
                max_phrase_len: a.max_phrase_len,
                beam: a.search.beam,
                distortion_limit: distortion(a.search.distortion_limit),
                nbest: a.search.nbest,
                seed: a.seed,
                ..Params::new("", "")
            };
            cli::cmd_train(&a.corpus, &a.out, &params)?;
            println!("{}", a.out.join(cli::CONFIG_FILE).display());
        }
        Command::Tune(a) => {
            let opts = TuneOptions {
                iterations: a.iterations,
                nbest: a.nbest,
                seed: a.seed,
            };
            let result = cli::cmd_tune(&a.config, &opts)?;
            for it in &result.history {
                println!("{}\t{}\t{:.4}\t{:.4}", it.iteration, it.pool_size, it.initial_bleu, it.bleu);
            }
            println!("{}", result.weights);
        }
        Command::Translate(a) => {
            let config = load_config(&a.config, a.beam, a.distortion_limit)?;
            let stdout = io::stdout();
            cli::cmd_translate(&config, io::stdin().lock(), BufWriter::new(stdout.lock()), a.nbest)?;
        }
        Command::Evaluate(a) => {
            let config = RunConfig::load(&a.config)?;
            let report = cli::cmd_evaluate(&config, a.test.as_deref(), a.judgments.as_deref())?;
            print!("{}", report.to_text());
        }
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_VAR} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = std::panic::catch_unwind(|| init_threads().and_then(|()| run(cli)));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(3),
    }
}
