use std::path::{Path, PathBuf};

use clap::CommandFactory;
use pretext_forge::models::{load_checkpoint, ChartModel, ModelConfig, SUMMARIZER_PREFIX};
use pretext_forge::trainer::TrainConfig;
use pretext_forge_autograd::ParamStore;
use pretext_forge_cli::{Cli, EXIT_DATA, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["pretext-forge"];
    argv.extend_from_slice(args);
    let code = pretext_forge_cli::main_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn params(store: &ParamStore<f32>, keep: impl Fn(&str) -> bool) -> Vec<(String, Vec<f32>)> {
    store
        .ids()
        .filter(|&id| keep(store.name(id)))
        .map(|id| (store.name(id).to_string(), store.get(id).data().to_vec()))
        .collect()
}

fn small_config(dir: &Path) -> PathBuf {
    let p = dir.join("train.cfg");
    std::fs::write(&p, "resolution=64\nbatch_size=8\n").unwrap();
    p
}

#[test]
fn help_lists_every_argument() {
    let cmd = Cli::command();
    for sub in cmd.get_subcommands() {
        let name = sub.get_name();
        let (code, help, _) = run(&[name, "--help"]);
        assert_eq!(code, EXIT_OK, "{name}");
        for arg in sub.get_arguments() {
            if let Some(long) = arg.get_long() {
                assert!(
                    help.contains(&format!("--{long}")),
                    "{name} help lacks --{long}"
                );
            }
        }
    }
    let (code, top, _) = run(&["--help"]);
    assert_eq!(code, EXIT_OK);
    for sub in cmd.get_subcommands() {
        assert!(
            top.contains(sub.get_name()),
            "top-level help lacks {}",
            sub.get_name()
        );
    }
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &[][..],
        &["frobnicate"][..],
        &["stats"][..],
        &["build-codebook", "--count", "x"][..],
    ] {
        let (code, _, err) = run(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}");
        assert!(err.starts_with("usage: "), "{err}");
        assert_eq!(err.lines().count(), 1, "{err}");
    }
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["stats", "--corpus", s(&dir.path().join("missing"))]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.starts_with("data error: "), "{err}");
    assert_eq!(err.lines().count(), 1);

    let bogus = dir.path().join("bogus.ckpt");
    std::fs::write(&bogus, b"not a checkpoint").unwrap();
    let corpus = fixtures().join("corpus");
    let (code, _, err) = run(&[
        "evaluate",
        "--corpus",
        s(&corpus),
        "--checkpoint",
        s(&bogus),
        "--out",
        s(&dir.path().join("r")),
    ]);
    assert_eq!(code, EXIT_DATA, "{err}");

    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "no_such_key=1\n").unwrap();
    let (code, _, err) = run(&[
        "pretrain",
        "--corpus",
        s(&corpus),
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code, EXIT_DATA, "{err}");

    let (code, _, _) = run(&["build-codebook", "--count", "400000"]);
    assert_eq!(code, EXIT_DATA);
}

#[test]
fn diverging_training_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hot.cfg");
    std::fs::write(&cfg, "resolution=64\nbatch_size=2\nlearning_rate=1e30\n").unwrap();
    let corpus = fixtures().join("corpus");
    let (code, _, err) = run(&[
        "pretrain",
        "--corpus",
        s(&corpus),
        "--config",
        s(&cfg),
        "--epochs",
        "1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code, EXIT_RUNTIME, "{err}");
    assert!(err.starts_with("runtime error: "), "{err}");
}

#[test]
fn build_codebook_is_deterministic() {
    let (c1, a, _) = run(&["build-codebook", "--count", "100"]);
    let (c2, b, _) = run(&["build-codebook", "--count", "100"]);
    assert_eq!((c1, c2), (EXIT_OK, EXIT_OK));
    assert_eq!(a, b);
    assert_eq!(
        a,
        std::fs::read_to_string(fixtures().join("codebook-g9-n100.txt")).unwrap()
    );
}

#[test]
fn stats_matches_oracle() {
    let corpus = fixtures().join("corpus");
    let (code, out, _) = run(&["stats", "--corpus", s(&corpus)]);
    assert_eq!(code, EXIT_OK);
    let oracle = std::fs::read_to_string(corpus.join("stats_oracle.txt")).unwrap();
    assert_eq!(out.trim_end(), oracle.trim_end());
}

#[test]
fn prepare_rejects_rule_breakers() {
    let corpus = fixtures().join("corpus");
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["prepare", "--corpus", s(&corpus), "--out", s(dir.path())]);
    assert_eq!(code, EXIT_OK);
    let rejected: Vec<&str> = out
        .lines()
        .filter_map(|l| l.strip_prefix("rejected "))
        .collect();
    let oracle = std::fs::read_to_string(corpus.join("rejections_oracle.txt")).unwrap();
    assert_eq!(rejected, oracle.lines().collect::<Vec<_>>());
    assert!(out.contains("kept 17 of 20"));
    let (code, stats, _) = run(&["stats", "--corpus", s(dir.path())]);
    assert_eq!(code, EXIT_OK);
    assert!(stats.starts_with("record_count=17\n"));
}

#[test]
fn zero_epochs_leave_models_at_their_start() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let corpus = fixtures().join("corpus");
    let pre = dir.path().join("pre");
    let (code, _, err) = run(&[
        "pretrain",
        "--corpus",
        s(&corpus),
        "--config",
        s(&cfg),
        "--seed",
        "9",
        "--epochs",
        "0",
        "--out",
        s(&pre),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let (saved, meta) = load_checkpoint::<f32>(&pre.join("pretext.ckpt")).unwrap();
    assert_eq!(meta.step, 0);
    let config = TrainConfig::load(&cfg).unwrap();
    assert_eq!(
        config.model,
        ModelConfig {
            resolution: 64,
            ..ModelConfig::default()
        }
    );
    let init = ChartModel::<f32>::new(config.model.clone(), 9, None).unwrap();
    assert_eq!(
        params(&saved.store, |_| true),
        params(&init.store, |_| true)
    );

    let fine = dir.path().join("fine");
    let (code, _, err) = run(&[
        "finetune",
        "--corpus",
        s(&corpus),
        "--config",
        s(&cfg),
        "--checkpoint",
        s(&pre.join("pretext.ckpt")),
        "--epochs",
        "0",
        "--out",
        s(&fine),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let (tuned, _) = load_checkpoint::<f32>(&fine.join("finetune.ckpt")).unwrap();
    let not_summarizer = |n: &str| !n.starts_with(SUMMARIZER_PREFIX);
    assert_eq!(
        params(&tuned.store, not_summarizer),
        params(&saved.store, not_summarizer)
    );
    assert!(tuned.summarizer().is_some());
}

#[test]
fn synth_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&[
        "synth",
        "--count",
        "12",
        "--seed",
        "3",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let (code, out, _) = run(&["stats", "--corpus", s(dir.path())]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("record_count=12\n"));
    let (code, split, _) = run(&["split", "--corpus", s(dir.path()), "--seed", "1"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(split.lines().count(), 12);
}

#[test]
fn gen_pretext_writes_labelled_samples() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixtures().join("corpus");
    let (code, _, err) = run(&[
        "gen-pretext",
        "--corpus",
        s(&corpus),
        "--count",
        "2",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let labels = std::fs::read_to_string(dir.path().join("labels.tsv")).unwrap();
    assert_eq!(labels.lines().count(), 8);
    for line in labels.lines() {
        let file = line.split('\t').next().unwrap();
        assert!(dir.path().join(file).is_file(), "{file}");
    }
}
