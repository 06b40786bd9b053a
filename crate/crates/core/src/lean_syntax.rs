//! Lexical helpers shared by the diagnostics classifier, the tamper guard and
//! the operator-tree parser. None of this elaborates Lean; it only knows
//! enough surface syntax to find comments, strings and identifier tokens.

/// What to do with string literals while stripping comments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strings {
    Keep,
    Blank,
}

/// Removes `--` line comments and (nested) `/- -/` block comments.
///
/// Newlines inside block comments are preserved so line numbers survive.
/// With [`Strings::Blank`] the contents of string literals are replaced by
/// spaces, leaving the quotes.
pub fn strip_comments(src: &str, strings: Strings) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if c == '-' && next == Some('-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && next == Some('-') {
            let mut depth = 1;
            i += 2;
            while i < chars.len() && depth > 0 {
                if chars[i] == '/' && chars.get(i + 1) == Some(&'-') {
                    depth += 1;
                    i += 2;
                } else if chars[i] == '-' && chars.get(i + 1) == Some(&'/') {
                    depth -= 1;
                    i += 2;
                } else {
                    if chars[i] == '\n' {
                        out.push('\n');
                    }
                    i += 1;
                }
            }
            out.push(' ');
            continue;
        }
        if c == '"' {
            out.push('"');
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                if chars[i] == '\\' && i + 1 < chars.len() {
                    match strings {
                        Strings::Keep => {
                            out.push(chars[i]);
                            out.push(chars[i + 1]);
                        }
                        Strings::Blank => out.push_str("  "),
                    }
                    i += 2;
                    continue;
                }
                match strings {
                    Strings::Keep => out.push(chars[i]),
                    Strings::Blank if chars[i] == '\n' => out.push('\n'),
                    Strings::Blank => out.push(' '),
                }
                i += 1;
            }
            if i < chars.len() {
                out.push('"');
                i += 1;
            }
            continue;
        }
        out.push(c);
        i += 1;
    }
    out
}

/// Characters that may appear inside a Lean identifier after the first one.
pub fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric()
        || matches!(c, '_' | '\'' | '!' | '?' | '.')
        || ('\u{2080}'..='\u{209C}').contains(&c)
        || ('\u{1D62}'..='\u{1D6A}').contains(&c)
}

/// Characters that may start a Lean identifier. Covers Latin/Greek letters and
/// letter-like symbols such as `ℝ`, `ℕ`, `ℤ`.
pub fn is_ident_start(c: char) -> bool {
    if c == '_' {
        return true;
    }
    if matches!(c, 'λ' | 'Π' | 'Σ') {
        return false;
    }
    c.is_alphabetic() || ('\u{2100}'..='\u{214F}').contains(&c)
}

/// Splits already comment-stripped text into identifier-like words.
pub fn identifiers(src: &str) -> impl Iterator<Item = &str> {
    let mut rest = src;
    std::iter::from_fn(move || loop {
        let start = rest.char_indices().find(|&(_, c)| is_ident_start(c))?.0;
        let tail = &rest[start..];
        let end = tail
            .char_indices()
            .skip(1)
            .find(|&(_, c)| !is_ident_continue(c))
            .map(|(i, _)| i)
            .unwrap_or(tail.len());
        // Skip words glued to a preceding identifier char (e.g. digits).
        let prev_ok = rest[..start]
            .chars()
            .next_back()
            .is_none_or(|p| !is_ident_continue(p));
        let word = &tail[..end];
        rest = &tail[end..];
        if prev_ok {
            return Some(word);
        }
    })
}

/// True when `word` occurs as a whole identifier. Dotted names are single
/// identifiers, so `Lean.sorry` does not match `sorry`.
pub fn mentions_identifier(src: &str, word: &str) -> bool {
    identifiers(src).any(|w| w == word)
}

/// Counts whole-identifier occurrences of `word`.
pub fn count_identifier(src: &str, word: &str) -> usize {
    identifiers(src).filter(|w| *w == word).count()
}

/// Collapses every whitespace run to a single space and trims.
pub fn collapse_whitespace(src: &str) -> String {
    src.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// True when the source uses `sorry` outside comments and string literals.
pub fn source_uses_sorry(src: &str) -> bool {
    mentions_identifier(&strip_comments(src, Strings::Blank), "sorry")
}
