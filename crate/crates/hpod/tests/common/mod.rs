#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn minicorpus() -> PathBuf {
    repo_root().join("data/minicorpus")
}

/// Copies the named mini-corpus datasets into `dir`.
pub fn small_corpus(dir: &Path, names: &[&str]) -> PathBuf {
    let out = dir.join("corpus");
    fs::create_dir_all(&out).unwrap();
    for n in names {
        fs::copy(minicorpus().join(format!("{n}.csv")), out.join(format!("{n}.csv"))).unwrap();
    }
    out
}

pub fn hpod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpod")).args(args).output().expect("run hpod")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
