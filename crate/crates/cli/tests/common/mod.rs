#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const STAGES: &[&[&str]] = &[
    &["build-mapping"],
    &["preprocess"],
    &["train-embeddings"],
    &["learn-profession"],
    &["predict-profession"],
    &["learn-nationality"],
    &["predict-nationality"],
    &["evaluate", "--relation", "profession"],
    &["evaluate", "--relation", "nationality"],
];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn kbscore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kbscore"))
        .args(args)
        .output()
        .expect("kbscore binary runs")
}

/// Runs one stage against the fixture configuration, writing into `out`.
pub fn stage(out: &Path, args: &[&str]) -> Output {
    let config = fixtures().join("kbscore.conf");
    let mut all = vec!["--config", config.to_str().unwrap(), "--output", out.to_str().unwrap()];
    all.extend_from_slice(args);
    kbscore(&all)
}

/// Runs every stage in order and panics on the first failure.
pub fn run_pipeline(out: &Path) {
    for args in STAGES {
        let o = stage(out, args);
        assert!(
            o.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

/// File name to contents for every file in `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            out.insert(
                entry.file_name().to_string_lossy().into_owned(),
                std::fs::read(entry.path()).unwrap(),
            );
        }
    }
    out
}
