//! Minimal client for the Neo4j HTTP transaction endpoint, used to run
//! emitted Cypher against a live store.

use std::time::Duration;

use base64::Engine as _;
use serde_json::{json, Value};
use thiserror::Error;
use ureq::Agent;

use navrewrite::cypher::graph_to_cypher;
use navrewrite::graph::{Answers, PropertyGraph};

use crate::config::StoreConfig;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store unreachable: {0}")]
    Unreachable(String),
    #[error("store rejected the statement: {0}")]
    Rejected(String),
    #[error("unexpected store response: {0}")]
    Response(String),
}

pub struct Store {
    agent: Agent,
    url: String,
    auth: Option<String>,
}

impl Store {
    pub fn new(cfg: &StoreConfig) -> Store {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .http_status_as_error(false)
            .build()
            .into();
        let auth = cfg.user.as_ref().map(|u| {
            let pair = format!("{u}:{}", cfg.password.as_deref().unwrap_or(""));
            format!("Basic {}", base64::engine::general_purpose::STANDARD.encode(pair))
        });
        Store {
            agent,
            url: format!("{}/db/{}/tx/commit", cfg.endpoint, cfg.database),
            auth,
        }
    }

    /// Runs the statements in one transaction and returns the rows of each.
    pub fn run(&self, statements: &[String]) -> Result<Vec<Vec<Vec<Value>>>, StoreError> {
        let body = json!({
            "statements": statements.iter().map(|s| json!({"statement": s})).collect::<Vec<_>>()
        });
        let mut req = self.agent.post(&self.url).header("Accept", "application/json");
        if let Some(a) = &self.auth {
            req = req.header("Authorization", a);
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| StoreError::Unreachable(e.to_string()))?;
        let status = resp.status();
        let v: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| StoreError::Response(format!("HTTP {status}: {e}")))?;
        if let Some(err) = v["errors"].as_array().and_then(|e| e.first()) {
            return Err(StoreError::Rejected(err["message"].as_str().unwrap_or("").to_owned()));
        }
        let results = v["results"]
            .as_array()
            .ok_or_else(|| StoreError::Response(v.to_string()))?;
        Ok(results
            .iter()
            .map(|r| {
                r["data"]
                    .as_array()
                    .map(|rows| {
                        rows.iter()
                            .map(|d| d["row"].as_array().cloned().unwrap_or_default())
                            .collect()
                    })
                    .unwrap_or_default()
            })
            .collect())
    }

    /// Replaces the store's contents with `g`.
    pub fn load(&self, g: &PropertyGraph) -> Result<(), StoreError> {
        let mut stmts = vec!["MATCH (n) DETACH DELETE n".to_owned()];
        stmts.extend(graph_to_cypher(g));
        self.run(&stmts).map(|_| ())
    }

    /// Runs a query whose columns are nodes and maps them back to `__id`.
    pub fn answers(&self, cypher: &str) -> Result<Answers, StoreError> {
        let rows = self.run(&[cypher.to_owned()])?.pop().unwrap_or_default();
        rows.into_iter()
            .map(|row| {
                row.iter()
                    .map(|node| {
                        node["__id"]
                            .as_str()
                            .map(str::to_owned)
                            .ok_or_else(|| StoreError::Response(format!("column without __id: {node}")))
                    })
                    .collect()
            })
            .collect()
    }
}
