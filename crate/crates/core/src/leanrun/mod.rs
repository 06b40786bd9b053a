//! Compiling candidate Lean source and classifying what the toolchain says.

mod classify;
mod runner;

use serde::{Deserialize, Serialize};

pub use classify::{classify_log, classify_message, format_feedback, is_infrastructure_failure, render_full};
pub use runner::{FakeEntry, LeanBackendKind, LeanConfig, LeanRunner, LeanRunnerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    MathError,
    SystemError,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagClass {
    UnknownIdentifier,
    TypeMismatch,
    Syntax,
    ImportMissing,
    SorryUsage,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub message: String,
    pub klass: DiagClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub status: Status,
    pub contains_sorry: bool,
    pub diagnostics: Vec<Diagnostic>,
    pub raw_log: String,
    /// Wall-clock seconds.
    pub duration: f64,
}

impl ValidationResult {
    /// Builds a result from a toolchain log and the source that produced it.
    pub fn from_log(code: &str, raw_log: String, duration: f64) -> Self {
        let (status, diagnostics) = classify_log(&raw_log);
        let contains_sorry = crate::lean_syntax::source_uses_sorry(code)
            || diagnostics.iter().any(|d| d.klass == DiagClass::SorryUsage);
        ValidationResult {
            status,
            contains_sorry,
            diagnostics,
            raw_log,
            duration,
        }
    }

    /// A result standing in for an environment failure that never reached
    /// the compiler.
    pub fn system_error(code: &str, message: impl Into<String>) -> Self {
        let raw_log: String = message.into();
        ValidationResult {
            status: Status::SystemError,
            contains_sorry: crate::lean_syntax::source_uses_sorry(code),
            diagnostics: vec![Diagnostic {
                severity: Severity::Error,
                file: String::new(),
                line: 1,
                col: 0,
                message: raw_log.clone(),
                klass: DiagClass::Other,
            }],
            raw_log,
            duration: 0.0,
        }
    }

    pub fn timeout(code: &str, raw_log: String, duration: f64) -> Self {
        ValidationResult {
            status: Status::Timeout,
            contains_sorry: crate::lean_syntax::source_uses_sorry(code),
            diagnostics: Vec::new(),
            raw_log,
            duration,
        }
    }

    /// Compiled with no errors and no remaining `sorry`.
    pub fn is_complete_proof(&self) -> bool {
        self.status == Status::Success && !self.contains_sorry
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }
}

/// Anything that can check a Lean file.
pub trait Validator: Send + Sync {
    fn validate(&self, code: &str) -> ValidationResult;
}

impl<V: Validator + ?Sized> Validator for std::sync::Arc<V> {
    fn validate(&self, code: &str) -> ValidationResult {
        (**self).validate(code)
    }
}

impl<V: Validator + ?Sized> Validator for &V {
    fn validate(&self, code: &str) -> ValidationResult {
        (**self).validate(code)
    }
}

/// Validates, retrying environment failures up to `retries` extra times.
/// Returns the last result and the number of attempts made.
pub fn validate_with_retry(validator: &dyn Validator, code: &str, retries: u32) -> (ValidationResult, u32) {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let result = validator.validate(code);
        if result.status != Status::SystemError || attempts > retries {
            return (result, attempts);
        }
        tracing::warn!(attempt = attempts, "lean system error, retrying");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    #[test]
    fn sorry_from_source_or_log() {
        let r = ValidationResult::from_log("theorem t : True := by sorry", String::new(), 0.1);
        assert!(r.contains_sorry);
        assert_eq!(r.status, Status::Success);
        assert!(!r.is_complete_proof());
        let r = ValidationResult::from_log("-- sorry\ntheorem t : True := trivial", String::new(), 0.1);
        assert!(!r.contains_sorry);
        assert!(r.is_complete_proof());
        let r = ValidationResult::from_log("x", "Main.lean:1:0: warning: declaration uses 'sorry'".into(), 0.1);
        assert!(r.contains_sorry);
    }

    #[test]
    fn serializes_snake_case() {
        let r = ValidationResult::from_log("", "Main.lean:3:10: error: unknown identifier 'Concyclic'".into(), 1.5);
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["status"], "math_error");
        assert_eq!(v["diagnostics"][0]["klass"], "unknown_identifier");
        assert_eq!(v["diagnostics"][0]["severity"], "error");
        let back: ValidationResult = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
    }

    impl Validator for Flaky {
        fn validate(&self, code: &str) -> ValidationResult {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                ValidationResult::system_error(code, "error: no such file or directory: lake")
            } else {
                ValidationResult::from_log(code, String::new(), 0.0)
            }
        }
    }

    #[test]
    fn retry_recovers_or_gives_up() {
        let v = Flaky { failures: 2, calls: AtomicU32::new(0) };
        let (r, attempts) = validate_with_retry(&v, "x", 2);
        assert_eq!((r.status, attempts), (Status::Success, 3));
        let v = Flaky { failures: 5, calls: AtomicU32::new(0) };
        let (r, attempts) = validate_with_retry(&v, "x", 2);
        assert_eq!((r.status, attempts), (Status::SystemError, 3));
    }
}
