//! Settings resolved from flags, an optional TOML file and `NAVREWRITE_*`
//! environment variables, in that order of precedence.

use std::path::Path;

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Connection details for a store speaking the Neo4j HTTP transaction API.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreConfig {
    pub endpoint: String,
    pub database: String,
    pub user: Option<String>,
    pub password: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub max_queries: usize,
    pub max_clip_attempts: usize,
    pub witness_cap: usize,
    pub depth: usize,
    pub format: Format,
    pub store: Option<StoreConfig>,
}

impl Default for Config {
    fn default() -> Self {
        let r = navrewrite::rewrite::RewriteConfig::default();
        Config {
            max_queries: r.max_queries,
            max_clip_attempts: r.max_clip_attempts,
            witness_cap: r.witness_cap,
            depth: 3,
            format: Format::Text,
            store: None,
        }
    }
}

/// One layer of settings; unset fields fall through to the next layer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub max_queries: Option<usize>,
    pub max_clip_attempts: Option<usize>,
    pub witness_cap: Option<usize>,
    pub depth: Option<usize>,
    pub format: Option<Format>,
    pub store_endpoint: Option<String>,
    pub store_database: Option<String>,
    pub store_user: Option<String>,
    pub store_password: Option<String>,
}

impl Layer {
    pub fn from_toml(text: &str) -> Result<Layer, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {}", e.message())))
    }

    pub fn from_file(path: &Path) -> Result<Layer, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Layer::from_toml(&text)
    }

    /// Reads `NAVREWRITE_<FIELD>` through `get`.
    pub fn from_env(get: impl Fn(&str) -> Option<String>) -> Result<Layer, CliError> {
        let num = |key: &str| -> Result<Option<usize>, CliError> {
            let var = format!("NAVREWRITE_{key}");
            get(&var)
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|_| CliError::Usage(format!("{var}: expected a number, got `{v}`")))
                })
                .transpose()
        };
        let format = match get("NAVREWRITE_FORMAT").as_deref() {
            None => None,
            Some("text") => Some(Format::Text),
            Some("json") => Some(Format::Json),
            Some(other) => return Err(CliError::Usage(format!("NAVREWRITE_FORMAT: unknown format `{other}`"))),
        };
        Ok(Layer {
            max_queries: num("MAX_QUERIES")?,
            max_clip_attempts: num("MAX_CLIP_ATTEMPTS")?,
            witness_cap: num("WITNESS_CAP")?,
            depth: num("DEPTH")?,
            format,
            store_endpoint: get("NAVREWRITE_STORE_ENDPOINT"),
            store_database: get("NAVREWRITE_STORE_DATABASE"),
            store_user: get("NAVREWRITE_STORE_USER"),
            store_password: get("NAVREWRITE_STORE_PASSWORD"),
        })
    }

    /// Fields set in `self` win over those in `lower`.
    pub fn over(self, lower: Layer) -> Layer {
        Layer {
            max_queries: self.max_queries.or(lower.max_queries),
            max_clip_attempts: self.max_clip_attempts.or(lower.max_clip_attempts),
            witness_cap: self.witness_cap.or(lower.witness_cap),
            depth: self.depth.or(lower.depth),
            format: self.format.or(lower.format),
            store_endpoint: self.store_endpoint.or(lower.store_endpoint),
            store_database: self.store_database.or(lower.store_database),
            store_user: self.store_user.or(lower.store_user),
            store_password: self.store_password.or(lower.store_password),
        }
    }
}

impl Config {
    pub fn resolve(layer: Layer) -> Result<Config, CliError> {
        let d = Config::default();
        let positive = |name: &str, v: Option<usize>, default: usize| match v {
            Some(0) => Err(CliError::Usage(format!("{name} must be positive"))),
            Some(v) => Ok(v),
            None => Ok(default),
        };
        Ok(Config {
            max_queries: positive("max_queries", layer.max_queries, d.max_queries)?,
            max_clip_attempts: positive("max_clip_attempts", layer.max_clip_attempts, d.max_clip_attempts)?,
            witness_cap: positive("witness_cap", layer.witness_cap, d.witness_cap)?,
            depth: layer.depth.unwrap_or(d.depth),
            format: layer.format.unwrap_or(d.format),
            store: layer.store_endpoint.map(|endpoint| StoreConfig {
                endpoint: endpoint.trim_end_matches('/').to_owned(),
                database: layer.store_database.unwrap_or_else(|| "neo4j".into()),
                user: layer.store_user,
                password: layer.store_password,
            }),
        })
    }

    /// Flags over the config file over the process environment.
    pub fn load(flags: Layer, file: Option<&Path>) -> Result<Config, CliError> {
        let file = file.map(Layer::from_file).transpose()?.unwrap_or_default();
        let env = Layer::from_env(|k| std::env::var(k).ok())?;
        Config::resolve(flags.over(file.over(env)))
    }

    pub fn rewrite_config(&self) -> navrewrite::rewrite::RewriteConfig {
        navrewrite::rewrite::RewriteConfig {
            max_queries: self.max_queries,
            max_clip_attempts: self.max_clip_attempts,
            witness_cap: self.witness_cap,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env<'a>(pairs: &'a [(&'a str, &'a str)]) -> impl Fn(&str) -> Option<String> + 'a {
        move |k| pairs.iter().find(|(n, _)| *n == k).map(|(_, v)| v.to_string())
    }

    #[test]
    fn flags_beat_file_beat_env() {
        let flags = Layer {
            depth: Some(5),
            ..Layer::default()
        };
        let file = Layer::from_toml("depth = 4\nmax_queries = 50\n").unwrap();
        let env = Layer::from_env(env(&[
            ("NAVREWRITE_DEPTH", "2"),
            ("NAVREWRITE_MAX_QUERIES", "7"),
            ("NAVREWRITE_WITNESS_CAP", "9"),
        ]))
        .unwrap();
        let c = Config::resolve(flags.over(file.over(env))).unwrap();
        assert_eq!((c.depth, c.max_queries, c.witness_cap), (5, 50, 9));
        assert_eq!(c.max_clip_attempts, 100_000);
    }

    #[test]
    fn zero_budget_is_rejected() {
        let l = Layer::from_toml("max_queries = 0").unwrap();
        assert!(matches!(Config::resolve(l), Err(CliError::Usage(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Layer::from_toml("max_querys = 3").is_err());
    }

    #[test]
    fn store_settings() {
        let l = Layer::from_env(env(&[("NAVREWRITE_STORE_ENDPOINT", "http://localhost:7474/")])).unwrap();
        let s = Config::resolve(l).unwrap().store.unwrap();
        assert_eq!(s.endpoint, "http://localhost:7474");
        assert_eq!(s.database, "neo4j");
    }
}
