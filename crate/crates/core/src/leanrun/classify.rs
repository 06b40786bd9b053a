use std::sync::LazyLock;

use regex::Regex;

use super::{DiagClass, Diagnostic, Severity, Status};

// `file:line:col: severity: message` (plain `lean`)
static PLAIN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?P<file>[^\s:][^:]*?):(?P<line>\d+):(?P<col>\d+):\s*(?P<sev>error|warning|information|info)\s*:\s?(?P<msg>.*)$")
        .unwrap()
});

// `severity: file:line:col: message` (newer `lake build`)
static LAKE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?P<sev>error|warning|info):\s*(?P<file>[^\s:][^:]*?):(?P<line>\d+):(?P<col>\d+):\s?(?P<msg>.*)$").unwrap()
});

static CHATTER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?x)^(
            [✔✖⚠ℹ•]
          | \[\d+/\d+\]
          | Build\ completed
          | Some\ required\ builds\ logged\ failures
          | error:\ build\ failed
          | error:\ Lean\ exited\ with\ code
          | trace:
        )",
    )
    .unwrap()
});

static INFRA: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    [
        r"(?i)no such file or directory.*\b(lake|lean|elan)\b",
        r"(?i)\b(lake|lean|elan)\b.*no such file or directory",
        r"(?i)\b(lake|lean|elan)\b.*command not found",
        r"(?i)command not found.*\b(lake|lean|elan)\b",
        r"(?i)out of memory|cannot allocate memory|std::bad_alloc",
        r"(?i)no space left on device",
        r"(?i)toolchain .* is not installed",
        r"(?i)(could not find|missing) lakefile",
        r"(?i)object file .* of module (Mathlib|Init|Lean|Std|Batteries) does not exist",
        r"(?m)^Killed$",
    ]
    .iter()
    .map(|p| Regex::new(p).unwrap())
    .collect()
});

/// True when the log shows an environment failure rather than a problem with
/// the submitted code.
pub fn is_infrastructure_failure(raw_log: &str) -> bool {
    INFRA.iter().any(|re| re.is_match(raw_log))
}

fn severity(s: &str) -> Severity {
    match s {
        "error" => Severity::Error,
        "warning" => Severity::Warning,
        _ => Severity::Info,
    }
}

/// Rule table mapping a diagnostic message to its class.
pub fn classify_message(message: &str) -> DiagClass {
    let first = message.lines().next().unwrap_or("").to_lowercase();
    let has = |needles: &[&str]| needles.iter().any(|n| first.contains(n));
    if has(&["declaration uses 'sorry'"]) {
        DiagClass::SorryUsage
    } else if has(&["unknown identifier", "unknown constant", "unknown namespace", "unknown declaration"]) {
        DiagClass::UnknownIdentifier
    } else if has(&["unknown module prefix", "bad import", "unknown package"])
        || (first.contains("object file") && first.contains("does not exist"))
    {
        DiagClass::ImportMissing
    } else if has(&["type mismatch", "failed to synthesize", "type expected"]) {
        DiagClass::TypeMismatch
    } else if first.starts_with("unexpected") || first.starts_with("expected ") || has(&["unterminated", "invalid syntax"]) {
        DiagClass::Syntax
    } else {
        DiagClass::Other
    }
}

/// Splits a toolchain log into diagnostics and infers the overall status.
/// Total and deterministic.
pub fn classify_log(raw_log: &str) -> (Status, Vec<Diagnostic>) {
    let mut diags: Vec<Diagnostic> = Vec::new();
    let mut stray: Vec<&str> = Vec::new();
    for line in raw_log.lines() {
        let trimmed = line.trim_end();
        let caps = PLAIN.captures(trimmed).or_else(|| LAKE.captures(trimmed));
        if let Some(c) = caps {
            let message = c["msg"].to_string();
            diags.push(Diagnostic {
                severity: severity(&c["sev"]),
                file: c["file"].to_string(),
                line: c["line"].parse::<u32>().unwrap_or(1).max(1),
                col: c["col"].parse().unwrap_or(0),
                klass: classify_message(&message),
                message,
            });
            continue;
        }
        if trimmed.trim().is_empty() || CHATTER.is_match(trimmed.trim_start()) {
            continue;
        }
        match diags.last_mut() {
            Some(d) => {
                d.message.push('\n');
                d.message.push_str(trimmed);
            }
            None => stray.push(trimmed),
        }
    }
    if !stray.is_empty() {
        let is_error = stray.iter().any(|l| l.to_lowercase().contains("error"));
        diags.insert(
            0,
            Diagnostic {
                severity: if is_error { Severity::Error } else { Severity::Info },
                file: String::new(),
                line: 1,
                col: 0,
                message: stray.join("\n"),
                klass: DiagClass::Other,
            },
        );
    }
    for d in &mut diags {
        if d.klass == DiagClass::Other {
            d.klass = classify_message(&d.message);
        }
    }
    let status = if is_infrastructure_failure(raw_log) {
        Status::SystemError
    } else if diags.iter().any(|d| d.severity == Severity::Error) {
        Status::MathError
    } else {
        Status::Success
    };
    (status, diags)
}

/// Renders up to `limit` error diagnostics, ordered by position, for
/// insertion into a refinement prompt.
pub fn format_feedback(diags: &[Diagnostic], limit: usize) -> String {
    let mut errors: Vec<&Diagnostic> = diags.iter().filter(|d| d.severity == Severity::Error).collect();
    errors.sort_by_key(|d| (d.line, d.col));
    let mut lines: Vec<String> = errors
        .iter()
        .take(limit)
        .map(|d| format!("line {}, col {}: {}", d.line, d.col, d.message))
        .collect();
    if errors.len() > limit {
        lines.push(format!("+{} more", errors.len() - limit));
    }
    lines.join("\n")
}

/// Renders every diagnostic the way the toolchain prints them.
pub fn render_full(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| {
            let sev = match d.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
                Severity::Info => "info",
            };
            if d.file.is_empty() {
                format!("{sev}: {}", d.message)
            } else {
                format!("{}:{}:{}: {sev}: {}", d.file, d.line, d.col, d.message)
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_identifier_fixture() {
        let (status, diags) = classify_log("Main.lean:3:10: error: unknown identifier 'Concyclic'");
        assert_eq!(status, Status::MathError);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].klass, DiagClass::UnknownIdentifier);
        assert_eq!((diags[0].line, diags[0].col), (3, 10));
        assert_eq!(diags[0].file, "Main.lean");
    }

    #[test]
    fn empty_log_is_success() {
        assert_eq!(classify_log(""), (Status::Success, vec![]));
    }

    #[test]
    fn missing_lake_is_system_error() {
        let (status, diags) = classify_log("error: no such file or directory: lake");
        assert_eq!(status, Status::SystemError);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].klass, DiagClass::Other);
    }

    #[test]
    fn sorry_warning_is_success() {
        let (status, diags) = classify_log("Main.lean:1:8: warning: declaration uses 'sorry'");
        assert_eq!(status, Status::Success);
        assert_eq!(diags[0].severity, Severity::Warning);
        assert_eq!(diags[0].klass, DiagClass::SorryUsage);
    }

    #[test]
    fn lake_prefix_and_continuations() {
        let log = "✖ [2/3] Building Main\nerror: ./Main.lean:4:2: type mismatch\n  h\nhas type\n  P : Prop\nerror: Lean exited with code 1\nSome required builds logged failures:\n- Main\nerror: build failed";
        let (status, diags) = classify_log(log);
        assert_eq!(status, Status::MathError);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].klass, DiagClass::TypeMismatch);
        assert!(diags[0].message.contains("has type"));
    }

    #[test]
    fn class_rules() {
        assert_eq!(classify_message("unexpected token 'by'; expected term"), DiagClass::Syntax);
        assert_eq!(classify_message("unknown module prefix 'Foo'"), DiagClass::ImportMissing);
        assert_eq!(classify_message("failed to synthesize\n  HAdd ℕ ℝ ?m"), DiagClass::TypeMismatch);
        assert_eq!(classify_message("linarith failed"), DiagClass::Other);
    }

    #[test]
    fn hallucinated_import_is_math_not_system() {
        let log = "Main.lean:1:0: error: object file ./.lake/packages/mathlib/.lake/build/lib/Mathlib/Foo/Bar.olean of module Mathlib.Foo.Bar does not exist";
        let (status, diags) = classify_log(log);
        assert_eq!(status, Status::MathError);
        assert_eq!(diags[0].klass, DiagClass::ImportMissing);
        let unbuilt = "Main.lean:1:0: error: object file ./.lake/packages/mathlib/.lake/build/lib/Mathlib.olean of module Mathlib does not exist";
        assert_eq!(classify_log(unbuilt).0, Status::SystemError);
    }

    fn err(line: u32, col: u32, msg: &str) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            file: "Main.lean".into(),
            line,
            col,
            message: msg.into(),
            klass: DiagClass::Other,
        }
    }

    #[test]
    fn feedback_single_and_empty() {
        assert_eq!(format_feedback(&[err(3, 10, "boom")], 20), "line 3, col 10: boom");
        assert_eq!(format_feedback(&[], 20), "");
    }

    #[test]
    fn feedback_truncates_with_marker() {
        let diags: Vec<Diagnostic> = (0..30).rev().map(|i| err(i + 1, 0, &format!("e{}", i + 1))).collect();
        let text = format_feedback(&diags, 20);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 21);
        assert_eq!(lines[0], "line 1, col 0: e1");
        assert_eq!(lines[19], "line 20, col 0: e20");
        assert_eq!(lines[20], "+10 more");
    }

    #[test]
    fn feedback_skips_warnings_and_sorts() {
        let mut w = err(1, 0, "warn");
        w.severity = Severity::Warning;
        let diags = vec![err(5, 2, "b"), w, err(5, 1, "a")];
        assert_eq!(format_feedback(&diags, 20), "line 5, col 1: a\nline 5, col 2: b");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn classification_is_total_and_consistent(log in "(Main\\.lean:[0-9]{1,2}:[0-9]{1,2}: (error|warning|info): [a-z' ]{0,20}\n|[a-z:✔ ]{0,20}\n){0,8}") {
                let (status, diags) = classify_log(&log);
                prop_assert_eq!(classify_log(&log), (status, diags.clone()));
                let has_error = diags.iter().any(|d| d.severity == Severity::Error);
                match status {
                    Status::Success => prop_assert!(!has_error),
                    Status::MathError => prop_assert!(has_error),
                    _ => {}
                }
                prop_assert!(diags.iter().all(|d| d.line >= 1));
            }
        }
    }
}
