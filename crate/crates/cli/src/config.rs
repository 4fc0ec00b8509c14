//! Project configuration file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use reqrefine::evaluator::GatePolicy;
use reqrefine::gateway::{connect, BackendConfig, GatewayError, HeuristicBackend, Lexicon};
use reqrefine::orchestrator::{Pipeline, RunMode, SessionOptions, DEFAULT_MAX_ITERATIONS};
use reqrefine::ragstore::{RagConfig, RagError, RagStore};
use reqrefine::rewriter::pattern::{default_patterns, load_patterns, PatternError, RequirementPattern};

/// Name of the backend every role uses when nothing else is configured.
pub const DEFAULT_BACKEND: &str = "heuristic";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("role `{role}` is bound to unknown backend `{backend}`")]
    UnboundRole { role: String, backend: String },
    #[error("unknown role `{0}` (expected evaluator, clarifier, answerer or rewriter)")]
    UnknownRole(String),
    #[error("{what} {path} does not exist")]
    MissingPath { what: &'static str, path: PathBuf },
    #[error("max_iterations must be at least 1")]
    MaxIterations,
    #[error(transparent)]
    Backend(#[from] GatewayError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Rag(#[from] RagError),
    #[error("lexicon {path}: {source}")]
    Lexicon {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn default_role() -> String {
    DEFAULT_BACKEND.to_string()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roles {
    #[serde(default = "default_role")]
    pub evaluator: String,
    #[serde(default = "default_role")]
    pub clarifier: String,
    #[serde(default = "default_role")]
    pub answerer: String,
    #[serde(default = "default_role")]
    pub rewriter: String,
}

impl Default for Roles {
    fn default() -> Self {
        Self {
            evaluator: default_role(),
            clarifier: default_role(),
            answerer: default_role(),
            rewriter: default_role(),
        }
    }
}

impl Roles {
    pub fn bind(&mut self, role: &str, backend: &str) -> Result<(), ConfigError> {
        let slot = match role {
            "evaluator" => &mut self.evaluator,
            "clarifier" => &mut self.clarifier,
            "answerer" => &mut self.answerer,
            "rewriter" => &mut self.rewriter,
            other => return Err(ConfigError::UnknownRole(other.to_string())),
        };
        *slot = backend.to_string();
        Ok(())
    }

    fn iter(&self) -> [(&'static str, &str); 4] {
        [
            ("evaluator", &self.evaluator),
            ("clarifier", &self.clarifier),
            ("answerer", &self.answerer),
            ("rewriter", &self.rewriter),
        ]
    }
}

fn default_max_iterations() -> u32 {
    DEFAULT_MAX_ITERATIONS
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    #[serde(default)]
    pub backends: BTreeMap<String, BackendConfig>,
    #[serde(default)]
    pub roles: Roles,
    #[serde(default)]
    pub gate: GatePolicy,
    #[serde(default)]
    pub patterns_path: Option<PathBuf>,
    #[serde(default)]
    pub lexicon_path: Option<PathBuf>,
    #[serde(default)]
    pub rag: Option<RagConfig>,
    #[serde(default)]
    pub conformance_standard_configured: bool,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: u32,
    /// Where session logs are written; none keeps sessions in memory.
    #[serde(default)]
    pub sessions_dir: Option<PathBuf>,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        let mut config: Self = toml::from_str("").expect("empty config is valid");
        config.resolve(Path::new("."));
        config
    }
}

impl ProjectConfig {
    pub fn parse(source: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut config: Self = toml::from_str(source).map_err(|e| ConfigError::File {
            path: base_dir.to_path_buf(),
            message: e.to_string(),
        })?;
        config.resolve(base_dir);
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&source, base).map_err(|e| match e {
            ConfigError::File { message, .. } => ConfigError::File {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    /// Fills backend ids and the implicit heuristic backend, and makes
    /// relative paths relative to the config file.
    fn resolve(&mut self, base: &Path) {
        for (name, backend) in &mut self.backends {
            if backend.id.is_empty() {
                backend.id = name.clone();
            }
        }
        self.backends
            .entry(DEFAULT_BACKEND.to_string())
            .or_insert_with(|| BackendConfig::heuristic(DEFAULT_BACKEND));
        let absolutize = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        absolutize(&mut self.patterns_path);
        absolutize(&mut self.lexicon_path);
        absolutize(&mut self.sessions_dir);
        if let Some(rag) = &mut self.rag {
            absolutize(&mut rag.index_path);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (role, backend) in self.roles.iter() {
            if !self.backends.contains_key(backend) {
                return Err(ConfigError::UnboundRole {
                    role: role.to_string(),
                    backend: backend.to_string(),
                });
            }
        }
        for backend in self.backends.values() {
            backend.validate()?;
        }
        for (what, path) in [("patterns file", &self.patterns_path), ("lexicon file", &self.lexicon_path)] {
            if let Some(path) = path {
                if !path.exists() {
                    return Err(ConfigError::MissingPath {
                        what,
                        path: path.clone(),
                    });
                }
            }
        }
        if let Some(rag) = &self.rag {
            rag.validate()?;
        }
        if self.max_iterations == 0 {
            return Err(ConfigError::MaxIterations);
        }
        Ok(())
    }

    pub fn patterns(&self) -> Result<Vec<RequirementPattern>, ConfigError> {
        Ok(match &self.patterns_path {
            Some(path) => load_patterns(path)?,
            None => default_patterns(),
        })
    }

    pub fn lexicon(&self) -> Result<Lexicon, ConfigError> {
        match &self.lexicon_path {
            Some(path) => Lexicon::load(path).map_err(|source| ConfigError::Lexicon {
                path: path.clone(),
                source,
            }),
            None => Ok(Lexicon::default()),
        }
    }

    /// Opens the configured index if its file exists.
    pub fn rag_store(&self) -> Result<Option<RagStore>, ConfigError> {
        let Some(rag) = &self.rag else { return Ok(None) };
        match &rag.index_path {
            Some(path) if path.exists() => Ok(Some(RagStore::open(rag.clone(), path)?)),
            Some(path) => {
                tracing::warn!(index = %path.display(), "index not built yet; retrieval disabled");
                Ok(None)
            }
            None => Ok(None),
        }
    }

    pub fn pipeline(&self) -> Result<Pipeline, ConfigError> {
        let patterns = self.patterns()?;
        let rules = HeuristicBackend::new(self.lexicon()?, patterns.clone());
        let role = |name: &str| connect(&self.backends[name], &rules);
        let mut pipeline = Pipeline {
            evaluator: role(&self.roles.evaluator)?,
            clarifier: role(&self.roles.clarifier)?,
            answerer: role(&self.roles.answerer)?,
            rewriter: role(&self.roles.rewriter)?,
            patterns,
            rag: None,
            rag_k: self.rag.as_ref().map_or(4, |r| r.k),
            stage_retries: 1,
        };
        if let Some(store) = self.rag_store()? {
            pipeline.rag = Some(Arc::new(store));
        }
        Ok(pipeline)
    }

    pub fn session_options(&self, mode: RunMode) -> SessionOptions {
        SessionOptions {
            mode,
            policy: self.gate.clone(),
            max_iterations: self.max_iterations,
            standard_configured: self.conformance_standard_configured,
        }
    }
}
