#![allow(dead_code)]

pub mod walks;

use std::path::{Path, PathBuf};
use std::process::Command;

pub const BIN: &str = env!("CARGO_BIN_EXE_navrewrite");

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn golden_cases() -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(golden_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .collect();
    out.sort();
    out
}

/// The commands recorded per golden case, with their expected-output file.
pub const COMMANDS: &[(&str, &[&str])] = &[
    ("rewrite.out", &["rewrite", "-t", "tbox.dl", "-q", "query.ncq"]),
    ("cypher.out", &["emit-cypher", "-t", "tbox.dl", "-q", "query.ncq"]),
    (
        "eval.csv",
        &["eval", "-t", "tbox.dl", "-q", "query.ncq", "-g", "graph.jsonl"],
    ),
    (
        "check.out",
        &[
            "check",
            "-t",
            "tbox.dl",
            "-q",
            "query.ncq",
            "-g",
            "graph.jsonl",
            "--depth",
            "3",
        ],
    ),
];

/// Runs the binary in `dir` with a clean `NAVREWRITE_*` environment.
/// Stdout comes first, then stderr lines prefixed `stderr: `, then the exit
/// code when it is not zero.
pub fn run_in(dir: &Path, args: &[&str]) -> String {
    let mut cmd = Command::new(BIN);
    cmd.current_dir(dir).args(args);
    for (k, _) in std::env::vars() {
        if k.starts_with("NAVREWRITE_") {
            cmd.env_remove(k);
        }
    }
    let out = cmd.output().expect("binary runs");
    let mut s = String::from_utf8(out.stdout).unwrap();
    for line in String::from_utf8(out.stderr).unwrap().lines() {
        s.push_str(&format!("stderr: {line}\n"));
    }
    let code = out.status.code().unwrap_or(-1);
    if code != 0 {
        s.push_str(&format!("exit: {code}\n"));
    }
    s
}
