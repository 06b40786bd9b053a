use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use parking_lot::{Condvar, Mutex};
use serde::{Deserialize, Serialize};

use super::{ValidationResult, Validator};
use crate::proc::run_capped;

/// Name the scratch file is reported under, whatever its real path.
const SCRATCH_NAME: &str = "Main.lean";
const SCRATCH_DIR: &str = ".proofforge-scratch";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeanBackendKind {
    #[default]
    Real,
    Fake,
}

fn default_timeout() -> u64 {
    300
}

fn default_command() -> Vec<String> {
    ["lake", "env", "lean"].map(String::from).to_vec()
}

/// The `[lean]` configuration table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeanConfig {
    /// Prebuilt Lean project with mathlib.
    #[serde(default)]
    pub root: Option<PathBuf>,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
    /// Concurrent compiles; defaults to half the cores.
    #[serde(default)]
    pub pool_size: Option<usize>,
    #[serde(default)]
    pub backend: LeanBackendKind,
    /// Pattern table for the fake backend.
    #[serde(default)]
    pub fake_fixtures: Option<PathBuf>,
    /// Compiler invocation; the scratch file path is appended.
    #[serde(default = "default_command")]
    pub command: Vec<String>,
}

impl Default for LeanConfig {
    fn default() -> Self {
        LeanConfig {
            root: None,
            timeout_s: default_timeout(),
            pool_size: None,
            backend: LeanBackendKind::Real,
            fake_fixtures: None,
            command: default_command(),
        }
    }
}

impl LeanConfig {
    pub fn effective_pool_size(&self) -> usize {
        self.pool_size.unwrap_or_else(|| {
            std::thread::available_parallelism().map_or(1, |n| n.get() / 2).max(1)
        })
    }
}

/// One row of the fake backend's pattern table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FakeEntry {
    #[serde(rename = "match")]
    pub pattern: String,
    pub log: String,
}

#[derive(Debug, thiserror::Error)]
pub enum LeanRunnerError {
    #[error("lean.backend = fake requires lean.fake_fixtures")]
    MissingFixtures,
    #[error("lean.backend = real requires lean.root")]
    MissingRoot,
    #[error("lean.command is empty")]
    EmptyCommand,
    #[error("lean.pool_size must be at least 1")]
    EmptyPool,
    #[error("reading fake lean fixtures {path}: {source}")]
    Fixtures {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock();
        while *free == 0 {
            self.cv.wait(&mut free);
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock() += 1;
        self.0.cv.notify_one();
    }
}

enum Backend {
    Real { root: PathBuf, command: Vec<String> },
    Fake(Vec<FakeEntry>),
}

/// Validator backed by either a Lean project on disk or a pattern table.
pub struct LeanRunner {
    backend: Backend,
    timeout: Duration,
    pool: Semaphore,
}

impl LeanRunner {
    pub fn from_config(cfg: &LeanConfig) -> Result<Self, LeanRunnerError> {
        let pool = cfg.effective_pool_size();
        if pool == 0 {
            return Err(LeanRunnerError::EmptyPool);
        }
        let backend = match cfg.backend {
            LeanBackendKind::Fake => {
                let path = cfg.fake_fixtures.as_ref().ok_or(LeanRunnerError::MissingFixtures)?;
                Backend::Fake(load_fake_entries(path)?)
            }
            LeanBackendKind::Real => {
                if cfg.command.is_empty() {
                    return Err(LeanRunnerError::EmptyCommand);
                }
                Backend::Real {
                    root: cfg.root.clone().ok_or(LeanRunnerError::MissingRoot)?,
                    command: cfg.command.clone(),
                }
            }
        };
        Ok(LeanRunner {
            backend,
            timeout: Duration::from_secs(cfg.timeout_s),
            pool: Semaphore::new(pool),
        })
    }

    pub fn fake(entries: Vec<FakeEntry>) -> Self {
        LeanRunner {
            backend: Backend::Fake(entries),
            timeout: Duration::from_secs(default_timeout()),
            pool: Semaphore::new(1),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_pool_size(mut self, n: usize) -> Self {
        self.pool = Semaphore::new(n.max(1));
        self
    }

    fn run_fake(entries: &[FakeEntry], code: &str) -> ValidationResult {
        let log = entries
            .iter()
            .find(|e| code.contains(&e.pattern))
            .map(|e| e.log.clone())
            .unwrap_or_default();
        ValidationResult::from_log(code, log, 0.0)
    }

    fn run_real(&self, root: &Path, command: &[String], code: &str) -> ValidationResult {
        if !root.is_dir() {
            return ValidationResult::system_error(
                code,
                format!("error: lean project root {} does not exist", root.display()),
            );
        }
        let rel_dir = Path::new(SCRATCH_DIR).join(uuid::Uuid::new_v4().to_string());
        let dir = root.join(&rel_dir);
        if let Err(e) = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(dir.join(SCRATCH_NAME), code)) {
            let _ = std::fs::remove_dir_all(&dir);
            return ValidationResult::system_error(code, format!("error: preparing scratch file: {e}"));
        }
        let rel_file = rel_dir.join(SCRATCH_NAME);
        let result = self.spawn(root, command, &rel_file, code);
        let _ = std::fs::remove_dir_all(&dir);
        result
    }

    fn spawn(&self, root: &Path, command: &[String], rel_file: &Path, code: &str) -> ValidationResult {
        let started = Instant::now();
        let mut cmd = Command::new(&command[0]);
        cmd.args(&command[1..]).arg(rel_file).current_dir(root);
        let captured = match run_capped(&mut cmd, self.timeout) {
            Ok(c) => c,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return ValidationResult::system_error(code, format!("error: no such file or directory: {}", command[0]));
            }
            Err(e) => return ValidationResult::system_error(code, format!("error: running {}: {e}", command[0])),
        };
        let log = normalize_paths(&captured.output, rel_file);
        let elapsed = started.elapsed().as_secs_f64();
        match captured.status {
            None => ValidationResult::timeout(code, log, elapsed),
            Some(_) => ValidationResult::from_log(code, log, elapsed),
        }
    }
}

/// Reports the per-call scratch path under a stable name so logs from
/// different runs compare equal.
fn normalize_paths(log: &str, rel_file: &Path) -> String {
    let rel = rel_file.to_string_lossy();
    log.replace(&format!("./{rel}"), SCRATCH_NAME).replace(rel.as_ref(), SCRATCH_NAME)
}

pub fn load_fake_entries(path: &Path) -> Result<Vec<FakeEntry>, LeanRunnerError> {
    let wrap = |source| LeanRunnerError::Fixtures {
        path: path.to_path_buf(),
        source,
    };
    let text = std::fs::read_to_string(path).map_err(wrap)?;
    serde_json::from_str(&text).map_err(|e| wrap(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
}

impl Validator for LeanRunner {
    fn validate(&self, code: &str) -> ValidationResult {
        let _permit = self.pool.acquire();
        match &self.backend {
            Backend::Fake(entries) => Self::run_fake(entries, code),
            Backend::Real { root, command } => self.run_real(root, command, code),
        }
    }
}
