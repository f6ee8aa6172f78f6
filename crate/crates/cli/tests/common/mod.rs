#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_spanex");

pub fn core_fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(rel)
}

pub fn golden(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(rel)
}

pub fn mock_corpus() -> PathBuf {
    core_fixture("mock/corpus.json")
}

pub fn spanex(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("SPANEX_ORACLE_URL").output().expect("spawn spanex")
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// `extract` then `eval --topk 1,3,5` on the mock corpus, writing into `dir`.
pub fn golden_pipeline(dir: &Path, oracle: &str) -> Output {
    let expl = dir.join("explanations.json");
    let out = spanex(&["extract", "--input", p(&mock_corpus()), "--oracle", oracle, "--seed", "0", "--out", p(&expl)]);
    if !out.status.success() {
        return out;
    }
    let report = dir.join("report.json");
    spanex(&[
        "eval",
        "--input",
        p(&mock_corpus()),
        "--oracle",
        oracle,
        "--explanations",
        p(&expl),
        "--topk",
        "1,3,5",
        "--seed",
        "0",
        "--out",
        p(&report),
    ])
}

pub const GOLDEN_FILES: [&str; 5] =
    ["explanations.json", "report.json", "report.csv", "report.plot.csv", "report.ranking.csv"];

/// Names of golden files whose bytes differ from the copy in `dir`.
pub fn golden_mismatches(dir: &Path) -> Vec<&'static str> {
    GOLDEN_FILES
        .into_iter()
        .filter(|f| std::fs::read(dir.join(f)).ok() != std::fs::read(golden(f)).ok())
        .collect()
}
