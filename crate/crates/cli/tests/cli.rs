mod support;

use std::path::Path;
use std::process::Command;

use support::BIN;

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn teacher() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "t.dl", "Teacher <= exists teaches . Student\n");
    write(d.path(), "empty.dl", "");
    write(d.path(), "q.ncq", "q(x) :- teaches(x,y), Student(y)\n");
    write(
        d.path(),
        "g.jsonl",
        r#"{"type":"node","id":"ann","labels":["Teacher"]}
{"type":"node","id":"bob","labels":["Student"]}
{"type":"node","id":"cat"}
{"type":"edge","src":"cat","label":"teaches","dst":"bob"}
"#,
    );
    write(d.path(), "none.jsonl", "");
    d
}

fn run(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .env_remove("NAVREWRITE_DEPTH")
        .env_remove("NAVREWRITE_FORMAT")
        .env_remove("NAVREWRITE_MAX_QUERIES")
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn rewrite_prints_both_teacher_branches() {
    let d = teacher();
    let (code, out, err) = run(d.path(), &["rewrite", "-t", "t.dl", "-q", "q.ncq"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out, "q(x) :- Student(y), teaches(x,y)\nq(x) :- Teacher(x)\n");
    assert!(err.is_empty());
}

#[test]
fn empty_tbox_echoes_the_query() {
    let d = teacher();
    let (_, out, _) = run(d.path(), &["rewrite", "-t", "empty.dl", "-q", "q.ncq"]);
    assert_eq!(out, "q(x) :- Student(y), teaches(x,y)\n");
}

#[test]
fn json_output_parses() {
    let d = teacher();
    let (_, out, _) = run(d.path(), &["rewrite", "-t", "t.dl", "-q", "q.ncq", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["branches"].as_array().unwrap().len(), 2);
    assert_eq!(v["answer_vars"], serde_json::json!(["x"]));
    let (_, out, _) = run(
        d.path(),
        &["eval", "-t", "t.dl", "-q", "q.ncq", "-g", "g.jsonl", "--format", "json"],
    );
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["answers"], serde_json::json!([["ann"], ["cat"]]));
}

#[test]
fn malformed_query_exits_with_parse_code_and_location() {
    let d = teacher();
    write(d.path(), "bad.ncq", "q(x) :- teaches(x,y),\n  Student(y,)\n");
    let (code, out, err) = run(d.path(), &["rewrite", "-t", "t.dl", "-q", "bad.ncq"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.starts_with("error: bad.ncq:2:13: expected variable"), "{err}");
}

#[test]
fn exit_codes() {
    let d = teacher();
    write(d.path(), "nav.ncq", "q(x) :- (r.s)(x,y)\n");
    write(d.path(), "rec.dl", "exists r . A <= B\nexists s . B <= A\n");
    write(d.path(), "a.ncq", "q(x) :- A(x)\n");
    let code = |args: &[&str]| run(d.path(), args).0;
    assert_eq!(code(&["rewrite", "-t", "t.dl"]), 1);
    assert_eq!(code(&["rewrite", "-t", "missing.dl", "-q", "q.ncq"]), 1);
    assert_eq!(code(&["rewrite", "-t", "t.dl", "-q", "nav.ncq"]), 3);
    assert_eq!(code(&["rewrite", "-t", "t.dl", "-q", "q.ncq", "--max-queries", "1"]), 4);
    assert_eq!(code(&["emit-cypher", "-t", "rec.dl", "-q", "a.ncq"]), 5);
    assert_eq!(code(&["rewrite", "-t", "t.dl", "-q", "q.ncq", "--max-queries", "0"]), 1);
}

#[test]
fn eval_sorts_rows_and_handles_empty_graphs() {
    let d = teacher();
    let (_, out, _) = run(d.path(), &["eval", "-t", "t.dl", "-q", "q.ncq", "-g", "g.jsonl"]);
    assert_eq!(out, "ann\ncat\n");
    let (_, out, _) = run(d.path(), &["eval", "-q", "q.ncq", "-g", "g.jsonl"]);
    assert_eq!(out, "cat\n");
    let (code, out, _) = run(d.path(), &["eval", "-t", "t.dl", "-q", "q.ncq", "-g", "none.jsonl"]);
    assert_eq!((code, out.as_str()), (0, ""));
}

#[test]
fn eval_accepts_a_saved_rewriting() {
    let d = teacher();
    let (_, rewriting, _) = run(d.path(), &["rewrite", "-t", "t.dl", "-q", "q.ncq"]);
    write(d.path(), "r.ucq", &rewriting);
    let (_, out, _) = run(d.path(), &["eval", "-q", "r.ucq", "-g", "g.jsonl"]);
    assert_eq!(out, "ann\ncat\n");
}

#[test]
fn chase_depth_zero_has_no_anonymous_nodes() {
    let d = teacher();
    let (_, out, _) = run(d.path(), &["chase", "-t", "t.dl", "-g", "g.jsonl", "--depth", "0"]);
    assert!(!out.contains("_:"));
    let (_, out, _) = run(d.path(), &["chase", "-t", "t.dl", "-g", "g.jsonl", "--depth", "1"]);
    assert!(
        out.contains(r#"{"type":"node","id":"_:ann/0","labels":["Student"]}"#),
        "{out}"
    );
}

#[test]
fn check_reports_ok_and_counterexamples() {
    let d = teacher();
    let (code, out, _) = run(d.path(), &["check", "-t", "t.dl", "-q", "q.ncq", "-g", "g.jsonl"]);
    assert_eq!((code, out.as_str()), (0, "OK\n"));
    // A budget too small to finish clipping is an error, not a verdict, so
    // provoke a mismatch through the chase depth instead: at depth 0 the
    // Teacher has no witness, so `ann` is an extra answer.
    let (code, out, _) = run(
        d.path(),
        &["check", "-t", "t.dl", "-q", "q.ncq", "-g", "g.jsonl", "--depth", "0"],
    );
    assert_eq!((code, out.as_str()), (6, "EXTRA ann\n"));
}

#[test]
fn flags_override_config_file_which_overrides_env() {
    let d = teacher();
    write(d.path(), "cfg.toml", "depth = 0\nformat = \"json\"\n");
    let out = Command::new(BIN)
        .current_dir(d.path())
        .args([
            "check", "-t", "t.dl", "-q", "q.ncq", "-g", "g.jsonl", "--config", "cfg.toml",
        ])
        .env("NAVREWRITE_DEPTH", "3")
        .env("NAVREWRITE_FORMAT", "text")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["depth"], 0);
    let out = Command::new(BIN)
        .current_dir(d.path())
        .args([
            "check", "-t", "t.dl", "-q", "q.ncq", "-g", "g.jsonl", "--config", "cfg.toml", "--depth", "2",
        ])
        .args(["--format", "text"])
        .env("NAVREWRITE_DEPTH", "0")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "OK\n");
    let out = Command::new(BIN)
        .current_dir(d.path())
        .args(["check", "-t", "t.dl", "-q", "q.ncq", "-g", "g.jsonl"])
        .env("NAVREWRITE_DEPTH", "0")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "EXTRA ann\n");
}

#[test]
fn csv_graph_directories_load() {
    let d = teacher();
    let g = d.path().join("csv");
    std::fs::create_dir(&g).unwrap();
    write(&g, "nodes.csv", "id,labels,props\nann,Teacher,\nbob,Student,\ncat,,\n");
    write(&g, "edges.csv", "src,label,dst,props\ncat,teaches,bob,\n");
    let (code, out, err) = run(d.path(), &["eval", "-t", "t.dl", "-q", "q.ncq", "-g", "csv"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out, "ann\ncat\n");
}
