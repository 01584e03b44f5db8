//! Command implementations behind the `navrewrite` binary. Each command
//! returns its standard output as a string so tests can call it directly.

pub mod config;
pub mod store;

use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use navrewrite::chase::{certain_answers, chase};
use navrewrite::cypher::{emit_cypher, CypherError};
use navrewrite::dl::{load_tbox, TBox, TBoxError};
use navrewrite::graph::{eval_union, load_graph, Answers, GraphError, PropertyGraph};
use navrewrite::query::{parse_query, parse_union, C2rpq, ParseMode, QueryParseError, Uc2rpq};
use navrewrite::rewrite::{RewriteError, Rewriter, Rewriting};

pub use config::{Config, Format, Layer};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Fragment(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Unsupported(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
        CliError::Io {
            path: path.to_owned(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Parse(_) => 2,
            CliError::Fragment(_) => 3,
            CliError::Budget(_) => 4,
            CliError::Unsupported(_) => 5,
        }
    }
}

/// Exit code of `check` when the rewriting and the chase disagree.
pub const EXIT_MISMATCH: i32 = 6;

/// What a successful command prints.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    /// Diagnostics for stderr.
    pub warnings: Vec<String>,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Outcome {
        Outcome {
            stdout,
            ..Outcome::default()
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_tbox(path: &Path) -> Result<TBox, CliError> {
    load_tbox(&read(path)?).map_err(|e| match e {
        TBoxError::Parse(p) => CliError::Parse(format!("{}:{}:{}: {}", path.display(), p.line, p.column, p.message)),
        f @ TBoxError::Fragment(_) => CliError::Fragment(format!("{}: {f}", path.display())),
    })
}

fn query_error(path: &Path, e: QueryParseError) -> CliError {
    match e {
        QueryParseError::Syntax { line, column, message } => {
            CliError::Parse(format!("{}:{line}:{column}: {message}", path.display()))
        }
        QueryParseError::Invalid(q) => CliError::Fragment(format!("{}: {q}", path.display())),
    }
}

pub fn read_ncq(path: &Path) -> Result<C2rpq, CliError> {
    parse_query(&read(path)?).map_err(|e| query_error(path, e))
}

/// A single query or a rewriting, in the extended grammar.
pub fn read_union(path: &Path) -> Result<Uc2rpq, CliError> {
    parse_union(&read(path)?, ParseMode::Extended).map_err(|e| query_error(path, e))
}

pub fn read_graph(path: &Path) -> Result<PropertyGraph, CliError> {
    load_graph(path).map_err(|e| match e {
        GraphError::Io(io) => CliError::io(path, io),
        other => CliError::Parse(format!("{}: {other}", path.display())),
    })
}

fn rewrite_with(tbox: &TBox, q: &C2rpq, cfg: &Config) -> Result<Rewriting, CliError> {
    Rewriter::new(tbox, cfg.rewrite_config())
        .rewrite_ncq(q)
        .map_err(|e| match e {
            RewriteError::Budget { .. } => CliError::Budget(e.to_string()),
            RewriteError::Query(q) => CliError::Fragment(q.to_string()),
        })
}

fn lines<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|i| format!("{i}\n")).collect()
}

pub fn cmd_rewrite(tbox: &Path, query: &Path, cfg: &Config) -> Result<Outcome, CliError> {
    let (t, q) = (read_tbox(tbox)?, read_ncq(query)?);
    let r = rewrite_with(&t, &q, cfg)?;
    let stdout = match cfg.format {
        Format::Text => lines(&r.union.branches),
        Format::Json => {
            let v = json!({
                "answer_vars": r.union.answer_vars.iter().map(|v| v.as_str()).collect::<Vec<_>>(),
                "branches": r.union.branches.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
                "warnings": r.warnings,
                "stats": {
                    "saturated": r.stats.saturated,
                    "clip_attempts": r.stats.clip_attempts,
                    "emitted": r.stats.emitted,
                },
            });
            format!("{v}\n")
        }
    };
    Ok(Outcome {
        stdout,
        warnings: r.warnings,
        code: 0,
    })
}

pub fn cmd_emit_cypher(tbox: &Path, query: &Path, cfg: &Config) -> Result<Outcome, CliError> {
    let (t, q) = (read_tbox(tbox)?, read_ncq(query)?);
    let r = rewrite_with(&t, &q, cfg)?;
    let c = emit_cypher(&r.union).map_err(|e| match e {
        CypherError::UnsupportedPath(_) | CypherError::TooManyBranches(_) => CliError::Unsupported(e.to_string()),
        CypherError::Empty => CliError::Fragment(e.to_string()),
    })?;
    let stdout = match cfg.format {
        Format::Text => format!("{}\n", c.text),
        Format::Json => format!("{}\n", json!({"cypher": c.text, "diagnostics": c.diagnostics})),
    };
    let mut warnings = r.warnings;
    warnings.extend(c.diagnostics);
    Ok(Outcome {
        stdout,
        warnings,
        code: 0,
    })
}

fn answers_out(answer_vars: &[String], answers: &Answers, format: Format) -> String {
    match format {
        Format::Text => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            for row in answers {
                w.write_record(row).expect("writing to memory");
            }
            String::from_utf8(w.into_inner().expect("writing to memory")).expect("ids are UTF-8")
        }
        Format::Json => format!("{}\n", json!({"columns": answer_vars, "answers": answers})),
    }
}

/// Evaluates a query or rewriting; with a TBox the query is rewritten
/// first.
pub fn cmd_eval(tbox: Option<&Path>, query: &Path, graph: &Path, cfg: &Config) -> Result<Outcome, CliError> {
    let g = read_graph(graph)?;
    let (u, warnings) = match tbox {
        Some(t) => {
            let r = rewrite_with(&read_tbox(t)?, &read_ncq(query)?, cfg)?;
            (r.union, r.warnings)
        }
        None => (read_union(query)?, Vec::new()),
    };
    let vars: Vec<String> = u.answer_vars.iter().map(|v| v.as_str().to_owned()).collect();
    Ok(Outcome {
        stdout: answers_out(&vars, &eval_union(&u, &g), cfg.format),
        warnings,
        code: 0,
    })
}

pub fn cmd_chase(tbox: &Path, graph: &Path, cfg: &Config) -> Result<Outcome, CliError> {
    let c = chase(&read_graph(graph)?, &read_tbox(tbox)?, cfg.depth);
    Ok(Outcome::ok(c.graph.to_jsonl()))
}

/// Compares the rewriting's answers with the chase's certain answers.
pub fn cmd_check(tbox: &Path, query: &Path, graph: &Path, cfg: &Config) -> Result<Outcome, CliError> {
    let (t, q, g) = (read_tbox(tbox)?, read_ncq(query)?, read_graph(graph)?);
    let r = rewrite_with(&t, &q, cfg)?;
    let got = eval_union(&r.union, &g);
    let want = certain_answers(&q, &g, &t, cfg.depth);
    let missing = want.difference(&got).next();
    let extra = got.difference(&want).next();
    let code = if missing.is_none() && extra.is_none() {
        0
    } else {
        EXIT_MISMATCH
    };
    let stdout = match cfg.format {
        Format::Text => {
            let mut out = String::new();
            if let Some(m) = missing {
                out.push_str(&format!("MISSING {}\n", m.join(",")));
            }
            if let Some(e) = extra {
                out.push_str(&format!("EXTRA {}\n", e.join(",")));
            }
            if out.is_empty() {
                out.push_str("OK\n");
            }
            out
        }
        Format::Json => format!(
            "{}\n",
            json!({
                "verdict": if code == 0 { "ok" } else { "mismatch" },
                "missing": missing,
                "extra": extra,
                "depth": cfg.depth,
            })
        ),
    };
    Ok(Outcome {
        stdout,
        warnings: r.warnings,
        code,
    })
}
