//! Lexical check that a submitted proof keeps the theorem statement intact.

use serde::{Deserialize, Serialize};

use crate::lean_syntax::{collapse_whitespace, identifiers, strip_comments, Strings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guard {
    Ok,
    Tampered,
    NoCode,
}

/// Identifiers a proof may not use.
const BANNED: &[&str] = &[
    "sorry", "admit", "sorryAx", "native_decide", "ofReduceBool", "ofReduceNat", "skipKernelTC",
];

/// Declaration keywords a submission may not add.
const NEW_DECLS: &[&str] = &["axiom", "abbrev", "opaque", "constant"];

const HEADER_PREFIXES: &[&str] = &["import ", "open ", "set_option "];

/// Drops leading `import`/`open`/`set_option` lines from comment-stripped
/// source.
fn without_header(src: &str) -> &str {
    let mut rest = src;
    loop {
        let trimmed = rest.trim_start();
        let line_end = trimmed.find('\n').unwrap_or(trimmed.len());
        let line = &trimmed[..line_end];
        if !trimmed.is_empty() && HEADER_PREFIXES.iter().any(|p| line.starts_with(p)) {
            rest = &trimmed[line_end..];
        } else {
            return trimmed;
        }
    }
}

fn offset_in(haystack: &str, part: &str) -> usize {
    part.as_ptr() as usize - haystack.as_ptr() as usize
}

fn last_segment(word: &str) -> &str {
    word.rsplit('.').next().unwrap_or(word)
}

/// The statement part of a task: everything after the header up to the
/// `:=` that introduces its single `sorry`.
pub fn statement_prefix(original: &str) -> Result<String, String> {
    let stripped = strip_comments(original, Strings::Blank);
    let body = without_header(&stripped);
    let sorries: Vec<&str> = identifiers(body).filter(|w| *w == "sorry").collect();
    if sorries.len() != 1 {
        return Err(format!("theorem must contain exactly one sorry, found {}", sorries.len()));
    }
    let at = offset_in(body, sorries[0]);
    let cut = body[..at].rfind(":=").unwrap_or(at);
    // statements are compared with string contents intact; blanking keeps
    // the character count, so map the cut by characters
    let cut_chars = body[..cut].chars().count();
    let kept = strip_comments(original, Strings::Keep);
    let kept_body = without_header(&kept);
    let prefix: String = kept_body.chars().take(cut_chars).collect();
    Ok(collapse_whitespace(&prefix))
}

/// Explains why `submitted` does not preserve `original`'s statement, or
/// returns `Ok(())`.
pub fn explain(original: &str, submitted: &str) -> Result<(), String> {
    let prefix = statement_prefix(original)?;
    let kept = strip_comments(submitted, Strings::Keep);
    let body = collapse_whitespace(without_header(&kept));
    let Some(rest) = body.strip_prefix(prefix.as_str()) else {
        return Err("the theorem statement was changed".into());
    };
    let Some(proof) = rest.trim_start().strip_prefix(":=") else {
        return Err("the theorem statement was changed".into());
    };
    if proof.trim().is_empty() {
        return Err("the proof is empty".into());
    }
    // header lines count too: `set_option debug.skipKernelTC` is a header
    let blank_sub = strip_comments(submitted, Strings::Blank);
    if let Some(w) = identifiers(&blank_sub).find(|w| BANNED.contains(&last_segment(w))) {
        return Err(format!("the submission uses {w}"));
    }
    let blank_orig = strip_comments(original, Strings::Blank);
    for kw in NEW_DECLS {
        let before = identifiers(&blank_orig).filter(|w| w == kw).count();
        let after = identifiers(&blank_sub).filter(|w| w == kw).count();
        if after > before {
            return Err(format!("the submission declares a new {kw}"));
        }
    }
    Ok(())
}

/// `Ok` when the submission only adds header lines and replaces the `sorry`
/// with a proof that uses nothing banned.
pub fn check_statement_preserved(original: &str, submitted: &str) -> Guard {
    match explain(original, submitted) {
        Ok(()) => Guard::Ok,
        Err(_) => Guard::Tampered,
    }
}
