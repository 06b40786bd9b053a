//! The TOML settings file shared by every CLI subcommand.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::formalize::FormalizeConfig;
use crate::leanrun::{LeanConfig, LeanRunner, LeanRunnerError};
use crate::modelgw::{Gateway, HttpBackend, ModelSpec, ScriptedBackend};
use crate::prover::ProverConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("no model named {0} in the configuration")]
    UnknownModel(String),
    #[error("no summarizer configured")]
    NoSummarizer,
    #[error(transparent)]
    Lean(#[from] LeanRunnerError),
}

/// Model list plus the summarizer's name; also the shape of a standalone
/// models file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelsConfig {
    #[serde(default)]
    pub summarizer: Option<String>,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub lean: LeanConfig,
    #[serde(default)]
    pub formalize: FormalizeConfig,
    #[serde(default)]
    pub prover: ProverConfig,
    #[serde(default)]
    pub summarizer: Option<String>,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    /// Models that formalize; every model but the summarizer when absent.
    #[serde(default)]
    pub ensemble: Option<Vec<String>>,
    /// JSON file of canned replies for `scripted` models.
    #[serde(default)]
    pub scripted_responses: Option<PathBuf>,
    #[serde(default)]
    pub context_dir: Option<PathBuf>,
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Relative paths inside the file are taken from the file's directory.
fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let mut cfg: Config = read_toml(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        rebase(base, &mut cfg.lean.root);
        rebase(base, &mut cfg.lean.fake_fixtures);
        rebase(base, &mut cfg.scripted_responses);
        rebase(base, &mut cfg.context_dir);
        Ok(cfg)
    }

    /// Replaces the model list with the one in `path`.
    pub fn load_models(&mut self, path: &Path) -> Result<(), ConfigError> {
        let m: ModelsConfig = read_toml(path)?;
        self.models = m.models;
        if m.summarizer.is_some() {
            self.summarizer = m.summarizer;
        }
        Ok(())
    }

    pub fn model(&self, name: &str) -> Result<ModelSpec, ConfigError> {
        self.models
            .iter()
            .find(|m| m.name == name)
            .cloned()
            .ok_or_else(|| ConfigError::UnknownModel(name.to_string()))
    }

    pub fn summarizer(&self) -> Result<ModelSpec, ConfigError> {
        let name = self.summarizer.as_deref().ok_or(ConfigError::NoSummarizer)?;
        self.model(name)
    }

    pub fn ensemble(&self) -> Result<Vec<ModelSpec>, ConfigError> {
        match &self.ensemble {
            Some(names) => names.iter().map(|n| self.model(n)).collect(),
            None => Ok(self
                .models
                .iter()
                .filter(|m| Some(&m.name) != self.summarizer.as_ref())
                .cloned()
                .collect()),
        }
    }

    pub fn gateway(&self) -> Result<Gateway, ConfigError> {
        let scripted = match &self.scripted_responses {
            Some(p) => ScriptedBackend::from_fixture_file(p).map_err(|source| ConfigError::Read { path: p.clone(), source })?,
            None => ScriptedBackend::new(),
        };
        Ok(Gateway::new(Arc::new(scripted)).with_http_backend(Arc::new(HttpBackend::new())))
    }

    pub fn validator(&self) -> Result<LeanRunner, ConfigError> {
        Ok(LeanRunner::from_config(&self.lean)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leanrun::LeanBackendKind;
    use crate::modelgw::Provider;

    #[test]
    fn full_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("proofforge.toml");
        std::fs::write(
            &path,
            r#"
scripted_responses = "replies.json"
summarizer = "judge"

[lean]
backend = "fake"
fake_fixtures = "fake.json"

[formalize]
max_iterations = 6
use_context = false
feedback_limit = 20
system_retries = 2
workers = 2

[prover]
max_turns = 4
system_retries = 1
workers = 1

[[models]]
name = "judge"
provider = "scripted"

[[models]]
name = "remote"
provider = "http_openai_style"
endpoint = "http://localhost:1/v1/chat/completions"
"#,
        )
        .unwrap();
        let cfg = Config::load(&path).unwrap();
        assert_eq!(cfg.lean.backend, LeanBackendKind::Fake);
        assert_eq!(cfg.lean.fake_fixtures.as_deref(), Some(dir.path().join("fake.json").as_path()));
        assert!(!cfg.formalize.use_context);
        assert_eq!(cfg.prover.workers, 1);
        assert_eq!(cfg.summarizer().unwrap().provider, Provider::Scripted);
        assert_eq!(cfg.model("remote").unwrap().timeout_s, 600);
        assert!(matches!(cfg.model("nope"), Err(ConfigError::UnknownModel(_))));
        let names: Vec<String> = cfg.ensemble().unwrap().into_iter().map(|m| m.name).collect();
        assert_eq!(names, ["remote"]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "lean_root = \"/x\"\n").unwrap();
        assert!(matches!(Config::load(&path), Err(ConfigError::Parse { .. })));
        assert_eq!(Config::default().formalize.max_iterations, 6);
    }
}
