use std::fmt::Write as _;
use std::path::Path;

use phraseforge::align::read_alignments;
use phraseforge::cli::{self, Manifest, Params, PrepareOptions, RunConfig, TuneOptions, ALIGNMENT_FILE, CONFIG_FILE};
use phraseforge::corpus::ParallelCorpus;
use phraseforge::decoder::FeatureWeights;
use phraseforge::Error;

fn write_pair(stem: &Path, src: &str, tgt: &str) {
    std::fs::write(stem.with_extension("bn"), src).unwrap();
    std::fs::write(stem.with_extension("as"), tgt).unwrap();
}

#[test]
fn split_sizes_recorded_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (mut src, mut tgt) = (String::new(), String::new());
    for k in 0..20000 {
        writeln!(src, "শব্দ{k} বাক্য ।").unwrap();
        writeln!(tgt, "শব্দ{k} বাক্য ।").unwrap();
    }
    let stem = dir.path().join("corpus");
    write_pair(&stem, &src, &tgt);
    let out = dir.path().join("prepared");
    let opts = PrepareOptions {
        n_train: Some(17000),
        n_test: 1500,
        n_tune: 1500,
        seed: 9,
        ..PrepareOptions::new(&stem, &out, "bn", "as")
    };
    let m = cli::cmd_prepare(&opts).unwrap();
    assert_eq!((m.raw, m.cleaned, m.train, m.test, m.tune), (20000, 20000, 17000, 1500, 1500));
    assert_eq!(Manifest::load(&out).unwrap(), m);
    for (name, n) in [("train", 17000), ("test", 1500), ("tune", 1500)] {
        assert_eq!(ParallelCorpus::load(&out.join(name), "bn", "as").unwrap().len(), n);
    }
}

#[test]
fn prepare_drops_blank_lines_and_detaches_danda() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("c");
    write_pair(&stem, "দিল্লী ভারতের রাজধানী।\n\nআমি\n", "দিল্লী ভাৰতৰ ৰাজধানী।\nএটা\nমই\n");
    let out = dir.path().join("p");
    let m = cli::cmd_prepare(&PrepareOptions::new(&stem, &out, "bn", "as")).unwrap();
    assert_eq!((m.raw, m.cleaned, m.train), (3, 2, 2));
    let train = std::fs::read_to_string(out.join("train.bn")).unwrap();
    assert!(train.lines().any(|l| l == "দিল্লী ভারতের রাজধানী ।"), "{train}");
}

#[test]
fn too_many_requested_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("c");
    write_pair(&stem, "ক\nখ\n", "ক\nখ\n");
    let opts = PrepareOptions {
        n_test: 2,
        n_tune: 1,
        ..PrepareOptions::new(&stem, dir.path().join("p"), "bn", "as")
    };
    assert!(matches!(cli::cmd_prepare(&opts), Err(Error::InsufficientData { .. })));
}

const TEN: [(&str, &str); 10] = [
    ("আমি ভাত খাই", "মই ভাত খাওঁ"),
    ("তুমি ভাত খাও", "তুমি ভাত খোৱা"),
    ("আমি জল খাই", "মই পানী খাওঁ"),
    ("সে বই পড়ে", "সি কিতাপ পঢ়ে"),
    ("আমি বই পড়ি", "মই কিতাপ পঢ়োঁ"),
    ("তুমি বই পড়", "তুমি কিতাপ পঢ়া"),
    ("সে জল খায়", "সি পানী খায়"),
    ("আমি বাড়ি যাই", "মই ঘৰ যাওঁ"),
    ("সে বাড়ি যায়", "সি ঘৰ যায়"),
    ("তুমি বাড়ি যাও", "তুমি ঘৰ যোৱা"),
];

fn ten_pair_model(dir: &Path) -> RunConfig {
    let stem = dir.join("c");
    let src: String = TEN.iter().map(|p| format!("{}\n", p.0)).collect();
    let tgt: String = TEN.iter().map(|p| format!("{}\n", p.1)).collect();
    write_pair(&stem, &src, &tgt);
    let prepared = dir.join("p");
    let opts = PrepareOptions {
        n_tune: 3,
        ..PrepareOptions::new(&stem, &prepared, "bn", "as")
    };
    cli::cmd_prepare(&opts).unwrap();
    cli::cmd_train(&prepared, &dir.join("m"), &Params::new("", "")).unwrap()
}

#[test]
fn trained_artifacts_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let config = ten_pair_model(dir.path());
    assert_eq!(config.weights, FeatureWeights::default());
    assert_eq!(
        (config.params.source_lang.as_str(), config.params.target_lang.as_str()),
        ("bn", "as")
    );
    let loaded = RunConfig::load(&dir.path().join("m").join(CONFIG_FILE)).unwrap();
    assert_eq!(loaded.to_text(), config.to_text());
    let models = loaded.load_models().unwrap();
    assert!(!models.phrases.is_empty());
    assert!(models.reordering.as_ref().is_some_and(|r| !r.is_empty()));
    let train = loaded.load_corpus(loaded.paths.train.as_ref(), "train").unwrap();
    assert_eq!(train.len(), 7);
    let alignments = read_alignments(&dir.path().join("m").join(ALIGNMENT_FILE), &train).unwrap();
    assert_eq!(alignments.len(), 7);
    assert!(loaded.paths.test.is_none());
    assert!(loaded.paths.tune.is_some());
}

#[test]
fn tune_rewrites_only_the_weights() {
    let dir = tempfile::tempdir().unwrap();
    let config = ten_pair_model(dir.path());
    let path = dir.path().join("m").join(CONFIG_FILE);
    let result = cli::cmd_tune(
        &path,
        &TuneOptions {
            iterations: Some(2),
            nbest: Some(5),
            seed: Some(1),
        },
    )
    .unwrap();
    let tuned = RunConfig::load(&path).unwrap();
    assert_eq!(tuned.paths, config.paths);
    assert_eq!(tuned.params, config.params);
    assert_eq!(tuned.weights, result.weights);
    for it in &result.history {
        assert!(it.bleu >= it.initial_bleu);
    }
}

#[test]
fn stage_errors_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let err = cli::cmd_train(dir.path(), &dir.path().join("m"), &Params::new("", "")).unwrap_err();
    assert!(err.to_string().starts_with("corpus: "), "{err}");
    assert_eq!(err.exit_code(), 2);
    let bad = Params {
        order: 9,
        ..Params::new("", "")
    };
    assert_eq!(cli::cmd_train(dir.path(), &dir.path().join("m"), &bad).unwrap_err().exit_code(), 1);
}

#[test]
fn evaluate_with_judgments() {
    let dir = tempfile::tempdir().unwrap();
    let config = ten_pair_model(dir.path());
    let stem = dir.path().join("c");
    let judgments = dir.path().join("j");
    std::fs::write(&judgments, "1\n0\nyes\nno\ntrue\nfalse\n1\n1\n1\n0\n").unwrap();
    let report = cli::cmd_evaluate(&config, Some(&stem), Some(&judgments)).unwrap();
    assert_eq!(report.analysis.total, 10);
    assert_eq!(report.analysis.unsuccessful, 4);
    assert_eq!(report.analysis.percent_error, 40.0);
    std::fs::write(&judgments, "1\nmaybe\n").unwrap();
    assert!(cli::cmd_evaluate(&config, Some(&stem), Some(&judgments)).is_err());
}
