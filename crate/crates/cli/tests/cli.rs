//! End-to-end runs of the `tdl-gnss` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tdl-gnss"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "simulate", "--seed", "7", "--epochs", "100", "--out", "a.jsonl",
        ],
    );
    ok(
        d,
        &[
            "simulate",
            "--seed",
            "7",
            "--epochs",
            "100",
            "--out",
            "b.jsonl",
            "--threads",
            "3",
        ],
    );
    ok(
        d,
        &[
            "simulate", "--seed", "8", "--epochs", "100", "--out", "c.jsonl",
        ],
    );
    assert_eq!(read(d, "a.jsonl"), read(d, "b.jsonl"));
    assert_ne!(read(d, "a.jsonl"), read(d, "c.jsonl"));
    let text = String::from_utf8(read(d, "a.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert!(text.starts_with("{\"format\":\"tdl-gnss-dataset\",\"version\":1"));
}

#[test]
fn omitted_seed_is_logged() {
    let dir = TempDir::new().unwrap();
    let out = ok(
        dir.path(),
        &["simulate", "--epochs", "3", "--out", "a.jsonl"],
    );
    assert!(stderr(&out).contains("default seed 0"), "{}", stderr(&out));
    ok(
        dir.path(),
        &[
            "simulate", "--epochs", "3", "--seed", "0", "--out", "b.jsonl",
        ],
    );
    assert_eq!(read(dir.path(), "a.jsonl"), read(dir.path(), "b.jsonl"));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(
        run(d, &["simulate", "--out", "x", "--bogus"]).status.code(),
        Some(1)
    );
    assert_eq!(run(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        run(
            d,
            &["train", "--train", "x", "--mode", "tdl-q", "--out", "y"]
        )
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        run(d, &["evaluate", "--test", "x", "--methods", "ew"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(d, &["simulate", "--out", "x", "--threads", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(d, &["simulate", "--out", "x", "--nlos-fraction", "1.5"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn help_and_version() {
    let out = bin().arg("--version").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim(),
        format!("tdl-gnss {}", env!("CARGO_PKG_VERSION"))
    );
    for (cmd, flags) in [
        (
            "simulate",
            &[
                "--seed",
                "--epochs",
                "--preset",
                "--out",
                "--threads",
                "--config",
            ][..],
        ),
        (
            "train",
            &["--train", "--mode", "--out", "--seed", "--epochs", "--log"],
        ),
        ("solve", &["--test", "--method", "--checkpoint", "--out"]),
        (
            "evaluate",
            &[
                "--test",
                "--methods",
                "--checkpoint",
                "--out",
                "--format",
                "--series",
            ],
        ),
        ("inspect", &["--test", "--checkpoint", "--epoch"]),
    ] {
        let out = bin().args([cmd, "--help"]).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8(out.stdout).unwrap();
        for f in flags {
            assert!(text.contains(f), "{cmd} --help lacks {f}");
        }
    }
}

#[test]
fn data_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let out = run(d, &["evaluate", "--test", "missing.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing.jsonl"));

    std::fs::write(d.join("junk.jsonl"), "not json\n").unwrap();
    assert_eq!(
        run(d, &["evaluate", "--test", "junk.jsonl"]).status.code(),
        Some(2)
    );

    ok(
        d,
        &[
            "simulate",
            "--seed",
            "1",
            "--epochs",
            "5",
            "--out",
            "data.jsonl",
        ],
    );
    let out = run(
        d,
        &[
            "evaluate",
            "--test",
            "data.jsonl",
            "--methods",
            "equal-weight,tdl-bw",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--checkpoint"), "{}", stderr(&out));

    std::fs::write(d.join("bad.json"), "{}").unwrap();
    let out = run(
        d,
        &[
            "evaluate",
            "--test",
            "data.jsonl",
            "--checkpoint",
            "bad.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("run.toml"),
        "seed = 4\n[scenario]\nepochs = 12\nnoise_sigma = 0.5\n",
    )
    .unwrap();
    ok(d, &["--config", "run.toml", "simulate", "--out", "a.jsonl"]);
    ok(
        d,
        &[
            "--config", "run.toml", "simulate", "--out", "b.jsonl", "--epochs", "5",
        ],
    );
    let a = String::from_utf8(read(d, "a.jsonl")).unwrap();
    let b = String::from_utf8(read(d, "b.jsonl")).unwrap();
    assert_eq!(a.lines().count(), 13);
    assert_eq!(b.lines().count(), 6);
    assert!(a.lines().next().unwrap().contains("\"seed\":4"));
    assert!(a.lines().next().unwrap().contains("\"noise_sigma\":0.5"));

    std::fs::write(d.join("bad.toml"), "sed = 4\n").unwrap();
    assert_eq!(
        run(d, &["--config", "bad.toml", "simulate", "--out", "c.jsonl"])
            .status
            .code(),
        Some(2)
    );
}

struct Trained {
    dir: TempDir,
}

impl Trained {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn trained(threads: &str) -> Trained {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let t = ["--threads", threads];
    ok(
        d,
        &[
            &[
                "simulate",
                "--seed",
                "11",
                "--epochs",
                "60",
                "--out",
                "train.jsonl",
            ][..],
            &t,
        ]
        .concat(),
    );
    ok(
        d,
        &[
            &[
                "simulate",
                "--seed",
                "12",
                "--epochs",
                "30",
                "--out",
                "test.jsonl",
            ][..],
            &t,
        ]
        .concat(),
    );
    for (mode, file) in [
        ("tdl-b", "b.json"),
        ("tdl-w", "w.json"),
        ("tdl-bw", "bw.json"),
    ] {
        ok(
            d,
            &[
                &[
                    "train",
                    "--train",
                    "train.jsonl",
                    "--mode",
                    mode,
                    "--epochs",
                    "5",
                    "--seed",
                    "3",
                    "--out",
                    file,
                ][..],
                &t,
            ]
            .concat(),
        );
    }
    let ckpts = [
        "--checkpoint",
        "b.json",
        "--checkpoint",
        "w.json",
        "--checkpoint",
        "bw.json",
    ];
    ok(
        d,
        &[
            &[
                "evaluate",
                "--test",
                "test.jsonl",
                "--out",
                "report.csv",
                "--series",
                "series.csv",
            ][..],
            &ckpts,
            &t,
        ]
        .concat(),
    );
    ok(
        d,
        &[
            &[
                "evaluate",
                "--test",
                "test.jsonl",
                "--format",
                "jsonl",
                "--out",
                "report.jsonl",
            ][..],
            &ckpts,
            &t,
        ]
        .concat(),
    );
    Trained { dir }
}

#[test]
fn train_and_evaluate_are_deterministic_across_thread_counts() {
    let one = trained("1");
    let four = trained("4");
    for f in [
        "train.jsonl",
        "b.json",
        "w.json",
        "bw.json",
        "b.log.csv",
        "bw.log.csv",
        "report.csv",
        "report.jsonl",
        "series.csv",
    ] {
        assert_eq!(
            std::fs::read(one.path(f)).unwrap(),
            std::fs::read(four.path(f)).unwrap(),
            "{f} differs"
        );
    }
    let report = std::fs::read_to_string(one.path("report.csv")).unwrap();
    let methods: Vec<&str> = report
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        methods,
        [
            "equal-weight",
            "rtklib",
            "gogps",
            "tdl-b",
            "tdl-w",
            "tdl-bw"
        ]
    );
    let log = std::fs::read_to_string(one.path("bw.log.csv")).unwrap();
    assert_eq!(log.lines().count(), 6);
}

#[test]
fn solve_writes_one_line_per_epoch() {
    let t = trained("2");
    let out = ok(
        t.dir.path(),
        &[
            "solve",
            "--test",
            "test.jsonl",
            "--method",
            "tdl-w",
            "--checkpoint",
            "w.json",
        ],
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 30);
    for (i, line) in text.lines().enumerate() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["index"], i);
        assert_eq!(v["method"], "tdl-w");
        assert_eq!(v["position"].as_array().unwrap().len(), 3);
        assert!(v["weights"]
            .as_array()
            .unwrap()
            .iter()
            .all(|w| w.as_f64().unwrap() > 0.0));
    }
}

fn weight_column(table: &str) -> Vec<f64> {
    table
        .lines()
        .skip(2)
        .take_while(|l| !l.starts_with("error"))
        .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
        .collect()
}

/// Rebuild with `TDL_GNSS_BLESS=1` after an intentional output change.
#[test]
fn inspect_matches_golden_table() {
    let t = trained("2");
    let out = ok(
        t.dir.path(),
        &[
            "inspect",
            "--test",
            "test.jsonl",
            "--checkpoint",
            "bw.json",
            "--epoch",
            "4",
            "-q",
        ],
    );
    let table = String::from_utf8(out.stdout).unwrap();
    let weights = weight_column(&table);
    assert!(weights.len() >= 4);
    assert!(weights.windows(2).all(|w| w[0] >= w[1]), "{table}");

    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/inspect_tdl_bw.txt");
    if std::env::var_os("TDL_GNSS_BLESS").is_some() {
        std::fs::write(&golden, &table).unwrap();
    }
    assert_eq!(table, std::fs::read_to_string(&golden).unwrap());
}

#[test]
fn inspect_rejects_out_of_range_epoch() {
    let t = trained("1");
    let out = run(
        t.dir.path(),
        &[
            "inspect",
            "--test",
            "test.jsonl",
            "--checkpoint",
            "b.json",
            "--epoch",
            "99",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--epoch"));
}
