#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

pub const GOLDEN_SEED: u64 = 7;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_painscale"))
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn golden_corpus() -> PathBuf {
    fixtures().join("synth_seed7.jsonl")
}

pub fn synth(seed: u64) -> Vec<u8> {
    let out = bin()
        .args(["synth", "--seed", &seed.to_string()])
        .output()
        .expect("spawn synth");
    assert!(
        out.status.success(),
        "synth failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

/// `painscale run` with the corpus on standard input.
pub fn run_piped(corpus: &[u8], seed: u64, out_dir: &Path) -> Output {
    let mut child = bin()
        .args(["run", "--seed", &seed.to_string(), "--out"])
        .arg(out_dir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn run");
    child.stdin.take().unwrap().write_all(corpus).unwrap();
    child.wait_with_output().unwrap()
}

pub fn run_file(corpus: &Path, seed: u64, out_dir: &Path) -> Output {
    bin()
        .args(["run", "--seed", &seed.to_string(), "--corpus"])
        .arg(corpus)
        .arg("--out")
        .arg(out_dir)
        .output()
        .expect("spawn run")
}

pub fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

/// Names of artifacts whose bytes differ, or that exist on one side only.
pub fn differing(a: &Path, b: &Path) -> Vec<String> {
    let (a, b) = (read_dir(a), read_dir(b));
    let mut names: Vec<&String> = a.keys().chain(b.keys()).collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .filter(|n| a.get(*n) != b.get(*n))
        .cloned()
        .collect()
}

/// Golden files that are missing from `out` or differ from it.
pub fn golden_mismatches(out: &Path) -> Vec<String> {
    let produced = read_dir(out);
    read_dir(&fixtures().join("golden"))
        .into_iter()
        .filter(|(name, bytes)| produced.get(name) != Some(bytes))
        .map(|(name, _)| name)
        .collect()
}
