//! Shell access for the documentation agent: read anything under the
//! repository, write only inside a scratch directory.

use std::path::{Component, Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use crate::proc::run_capped;

pub const DEFAULT_OBSERVATION_CAP: usize = 16 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("command rejected: {0}")]
pub struct Rejected(pub String);

/// Denied outright: can write, escalate, or run arbitrary code.
const DENIED: &[&str] = &[
    "sudo", "su", "doas", "dd", "chmod", "chown", "chgrp", "ln", "truncate", "shred", "install", "rsync", "patch",
    "eval", "exec", "source", ".", "python", "python3", "perl", "ruby", "node", "bash", "sh", "zsh", "dash", "lake",
    "lean", "make", "curl", "wget", "git-lfs", "unzip", "tar", "vi", "vim", "nano", "ed", "crontab", "kill", "pkill",
];

/// Allowed only when every path argument lies in scratch.
const SCRATCH_ONLY: &[&str] = &["rm", "rmdir", "mv", "touch", "mkdir", "tee"];

const WRAPPERS: &[&str] = &["env", "nohup", "time", "nice", "timeout", "command", "builtin", "stdbuf"];

const GIT_READ: &[&str] = &[
    "log", "show", "grep", "ls-files", "ls-tree", "diff", "status", "blame", "rev-parse", "cat-file", "describe",
    "shortlog",
];

#[derive(Debug, Default)]
struct Segment {
    text: String,
    redirects: Vec<String>,
}

/// Lexically resolves `p` against `cwd`, folding `.` and `..`.
pub fn normalize(cwd: &Path, p: &str) -> PathBuf {
    let joined = if Path::new(p).is_absolute() { PathBuf::from(p) } else { cwd.join(p) };
    let mut out = PathBuf::new();
    for c in joined.components() {
        match c {
            Component::ParentDir => {
                out.pop();
            }
            Component::CurDir => {}
            other => out.push(other),
        }
    }
    out
}

fn basename(word: &str) -> &str {
    word.rsplit('/').next().unwrap_or(word)
}

/// Splits a command line at unquoted `; | & newline`, pulling out redirect
/// targets. Command and process substitution are refused.
fn split_segments(command: &str) -> Result<Vec<Segment>, Rejected> {
    let mut segments = vec![Segment::default()];
    let chars: Vec<char> = command.chars().collect();
    let (mut single, mut double) = (false, false);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let cur = segments.last_mut().unwrap();
        if single {
            single = c != '\'';
            cur.text.push(c);
            i += 1;
            continue;
        }
        match c {
            '\\' => {
                cur.text.push(c);
                if let Some(&n) = chars.get(i + 1) {
                    cur.text.push(n);
                }
                i += 2;
                continue;
            }
            '`' => return Err(Rejected("command substitution is not allowed".into())),
            '$' if chars.get(i + 1) == Some(&'(') => {
                return Err(Rejected("command substitution is not allowed".into()))
            }
            '"' => double = !double,
            '\'' if !double => single = true,
            '<' | '>' if !double && chars.get(i + 1) == Some(&'(') => {
                return Err(Rejected("process substitution is not allowed".into()))
            }
            '>' if !double => {
                // drop a file-descriptor prefix such as the `2` in `2>`
                let digits = cur.text.chars().rev().take_while(char::is_ascii_digit).count();
                let before = cur.text.chars().rev().nth(digits);
                if digits > 0 && before.is_none_or(char::is_whitespace) {
                    cur.text.truncate(cur.text.len() - digits);
                }
                i += 1;
                while matches!(chars.get(i), Some('>') | Some('|')) {
                    i += 1;
                }
                if chars.get(i) == Some(&'&') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit() || *d == '-') {
                    i += 2;
                    continue;
                }
                if chars.get(i) == Some(&'&') {
                    i += 1;
                }
                while chars.get(i).is_some_and(|c| c.is_whitespace() && *c != '\n') {
                    i += 1;
                }
                let mut target = String::new();
                let (mut sq, mut dq) = (false, false);
                while let Some(&t) = chars.get(i) {
                    if !sq && !dq && (t.is_whitespace() || ";|&<>".contains(t)) {
                        break;
                    }
                    match t {
                        '\'' if !dq => sq = !sq,
                        '"' if !sq => dq = !dq,
                        _ => target.push(t),
                    }
                    i += 1;
                }
                if target.is_empty() {
                    return Err(Rejected("redirection without a target".into()));
                }
                cur.redirects.push(target);
                cur.text.push(' ');
                continue;
            }
            '&' if !double && chars.get(i + 1) == Some(&'>') => {
                // `&>file` behaves like `>file 2>&1`
                i += 1;
                continue;
            }
            ';' | '|' | '&' | '\n' if !double => {
                segments.push(Segment::default());
                i += 1;
                continue;
            }
            _ => {}
        }
        cur.text.push(c);
        i += 1;
    }
    if single || double {
        return Err(Rejected("unbalanced quotes".into()));
    }
    Ok(segments)
}

pub struct BashSandbox {
    repo_root: PathBuf,
    scratch: PathBuf,
    timeout: Duration,
    cap: usize,
}

impl BashSandbox {
    pub fn new(repo_root: impl Into<PathBuf>, scratch: impl Into<PathBuf>) -> Self {
        BashSandbox {
            repo_root: repo_root.into(),
            scratch: scratch.into(),
            timeout: Duration::from_secs(60),
            cap: DEFAULT_OBSERVATION_CAP,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn repo_root(&self) -> &Path {
        &self.repo_root
    }

    pub fn scratch(&self) -> &Path {
        &self.scratch
    }

    fn in_scratch(&self, p: &str) -> bool {
        normalize(&self.repo_root, p).starts_with(&self.scratch)
    }

    fn scratch_args(&self, cmd: &str, args: &[String]) -> Result<(), Rejected> {
        for a in args.iter().filter(|a| !a.starts_with('-')) {
            if !self.in_scratch(a) {
                return Err(Rejected(format!("{cmd} may only touch absolute paths under {}", self.scratch.display())));
            }
        }
        Ok(())
    }

    fn check_words(&self, words: &[String]) -> Result<(), Rejected> {
        let words: Vec<String> = words.iter().skip_while(|w| is_assignment(w)).cloned().collect();
        let Some(first) = words.first() else {
            return Ok(());
        };
        let cmd = basename(first);
        let rest = &words[1..];
        if WRAPPERS.contains(&cmd) {
            let inner: Vec<String> = rest
                .iter()
                .skip_while(|w| w.starts_with('-') || is_assignment(w) || w.chars().next().is_some_and(|c| c.is_ascii_digit()))
                .cloned()
                .collect();
            return self.check_words(&inner);
        }
        if DENIED.contains(&cmd) {
            return Err(Rejected(format!("{cmd} is not allowed")));
        }
        if SCRATCH_ONLY.contains(&cmd) {
            return self.scratch_args(cmd, rest);
        }
        match cmd {
            "cp" => {
                let args: Vec<&String> = rest.iter().filter(|a| !a.starts_with('-')).collect();
                if rest.iter().any(|a| a.starts_with("-t") || a.starts_with("--target")) {
                    return Err(Rejected("cp -t is not allowed".into()));
                }
                match args.last() {
                    Some(dest) if args.len() >= 2 && self.in_scratch(dest) => Ok(()),
                    _ => Err(Rejected(format!("cp may only write under {}", self.scratch.display()))),
                }
            }
            "sed" if rest.iter().any(|a| a.starts_with("-i") || a.starts_with("--in-place") || (a.starts_with('-') && !a.starts_with("--") && a.contains('i') && a.len() <= 4)) => {
                Err(Rejected("sed -i is not allowed".into()))
            }
            "awk" | "gawk" | "mawk" if rest.iter().any(|a| a.contains("system") || a.contains('>') || a.contains("-i")) => {
                Err(Rejected("awk scripts may not write files or run commands".into()))
            }
            "find" => {
                if rest.iter().any(|a| a == "-delete" || a.starts_with("-fprint") || a == "-fls") {
                    return Err(Rejected("find may not delete or write files".into()));
                }
                for (i, a) in rest.iter().enumerate() {
                    if matches!(a.as_str(), "-exec" | "-execdir" | "-ok" | "-okdir") {
                        let inner: Vec<String> =
                            rest[i + 1..].iter().take_while(|w| *w != ";" && *w != "+").cloned().collect();
                        self.check_words(&inner)?;
                    }
                }
                Ok(())
            }
            "xargs" => match rest.iter().find(|w| {
                let b = basename(w);
                DENIED.contains(&b) || SCRATCH_ONLY.contains(&b) || b == "cp" || b == "sed" || b == "git"
            }) {
                Some(w) => Err(Rejected(format!("xargs {w} is not allowed"))),
                None => Ok(()),
            },
            "git" => {
                if rest.iter().any(|a| a == "-C" || a.starts_with("--git-dir") || a.starts_with("--work-tree")) {
                    return Err(Rejected("git may only run against the repository".into()));
                }
                match rest.iter().find(|a| !a.starts_with('-')) {
                    Some(sub) if GIT_READ.contains(&sub.as_str()) => {
                        if rest.iter().any(|a| a == "--output" || a.starts_with("--output=")) {
                            Err(Rejected("git --output is not allowed".into()))
                        } else {
                            Ok(())
                        }
                    }
                    Some(sub) => Err(Rejected(format!("git {sub} is not allowed"))),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    /// Checks a command line against the write policy without running it.
    pub fn check(&self, command: &str) -> Result<(), Rejected> {
        for seg in split_segments(command)? {
            for target in &seg.redirects {
                if target != "/dev/null" && !self.in_scratch(target) {
                    return Err(Rejected(format!(
                        "output redirection is only allowed into {}",
                        self.scratch.display()
                    )));
                }
            }
            let words = shlex::split(&seg.text).ok_or_else(|| Rejected("unparseable command".into()))?;
            self.check_words(&words)?;
        }
        Ok(())
    }

    /// Runs a command if the policy allows it and returns the capped
    /// observation. Rejections are reported as the observation.
    pub fn run(&self, command: &str) -> String {
        if let Err(r) = self.check(command) {
            return cap(&r.to_string(), self.cap);
        }
        let mut cmd = Command::new("bash");
        cmd.arg("-c").arg(command).current_dir(&self.repo_root);
        let text = match run_capped(&mut cmd, self.timeout) {
            Ok(c) => match c.status {
                None => format!("{}\n[command timed out after {}s]", c.output, self.timeout.as_secs()),
                Some(s) if !s.success() => format!("{}\n[exit status {}]", c.output, s.code().unwrap_or(-1)),
                Some(_) => c.output,
            },
            Err(e) => format!("failed to run command: {e}"),
        };
        cap(&text, self.cap)
    }

    /// Repository files named in a command or its output, relative to the
    /// repository root.
    pub fn referenced_files(&self, command: &str, observation: &str) -> Vec<String> {
        let mut found = Vec::new();
        let words = shlex::split(command).unwrap_or_default();
        // bare names printed by `ls dir` resolve against the listed directory
        let mut bases = vec![self.repo_root.clone()];
        bases.extend(
            words
                .iter()
                .map(|w| normalize(&self.repo_root, w))
                .filter(|p| p.starts_with(&self.repo_root) && p.is_dir()),
        );
        let tokens = words
            .iter()
            .cloned()
            .chain(observation.lines().flat_map(|l| l.split([' ', '\t', ':']).map(String::from)));
        for tok in tokens {
            let tok = tok.trim_matches(|c: char| c == '\'' || c == '"' || c == ',');
            if tok.is_empty() || !(tok.contains('/') || tok.ends_with(".lean")) {
                continue;
            }
            for base in &bases {
                let path = normalize(base, tok);
                let Ok(rel) = path.strip_prefix(&self.repo_root) else {
                    continue;
                };
                let rel = rel.to_string_lossy().into_owned();
                if !rel.is_empty() && !found.contains(&rel) && path.is_file() {
                    found.push(rel);
                    break;
                }
            }
        }
        found
    }
}

fn is_assignment(w: &str) -> bool {
    match w.split_once('=') {
        Some((name, _)) => !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'),
        None => false,
    }
}

/// Truncates to at most `limit` bytes on a char boundary, marking the cut.
pub fn cap(text: &str, limit: usize) -> String {
    if text.len() <= limit {
        return text.to_string();
    }
    let marker = format!("\n[truncated: {} bytes omitted]", text.len());
    let budget = limit.saturating_sub(marker.len());
    let mut end = budget;
    while end > 0 && !text.is_char_boundary(end) {
        end -= 1;
    }
    let mut out = text[..end].to_string();
    if out.len() + marker.len() <= limit {
        out.push_str(&marker);
    }
    out
}
