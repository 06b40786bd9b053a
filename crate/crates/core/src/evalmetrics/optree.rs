//! Operator trees for Lean statements: a small precedence parser over a fixed
//! operator table. Anything it does not know becomes a leaf, bound variables
//! become positional placeholders `#k`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lean_syntax::{is_ident_continue, is_ident_start, strip_comments, Strings};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpTree {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<OpTree>,
}

impl OpTree {
    pub fn leaf(label: impl Into<String>) -> Self {
        OpTree {
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<OpTree>) -> Self {
        OpTree {
            label: label.into(),
            children,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(OpTree::size).sum::<usize>()
    }
}

/// S-expression form: `(= (+ 1 2) 3)`.
impl fmt::Display for OpTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.children.is_empty() {
            return f.write_str(&self.label);
        }
        write!(f, "({}", self.label)?;
        for c in &self.children {
            write!(f, " {c}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, col {col}: {message}")]
pub struct ParseError {
    pub line: u32,
    /// 0-based, in characters.
    pub col: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Num(String),
    Str(String),
    Sym(&'static str),
    Other(String),
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    /// Byte offset into the comment-stripped source.
    pub start: usize,
    pub line: u32,
    pub col: u32,
}

/// Longest match first. ASCII spellings map onto the unicode ones.
const SYMBOLS: &[(&str, &str)] = &[
    ("<->", "↔"),
    (":=", ":="),
    ("->", "→"),
    ("<=", "≤"),
    (">=", "≥"),
    ("!=", "≠"),
    ("=>", "=>"),
    ("∃!", "∃!"),
    ("/\\", "∧"),
    ("\\/", "∨"),
    ("++", "++"),
    ("⌋₊", "⌋"),
    ("⌉₊", "⌉"),
    ("↔", "↔"),
    ("→", "→"),
    ("∧", "∧"),
    ("∨", "∨"),
    ("¬", "¬"),
    ("=", "="),
    ("≠", "≠"),
    ("<", "<"),
    (">", ">"),
    ("≤", "≤"),
    ("≥", "≥"),
    ("∈", "∈"),
    ("∉", "∉"),
    ("⊆", "⊆"),
    ("⊂", "⊂"),
    ("⊇", "⊇"),
    ("∣", "∣"),
    ("≡", "≡"),
    ("+", "+"),
    ("-", "-"),
    ("*", "*"),
    ("/", "/"),
    ("%", "%"),
    ("^", "^"),
    ("∘", "∘"),
    ("∪", "∪"),
    ("∩", "∩"),
    ("•", "•"),
    ("×", "×"),
    ("\\", "\\"),
    ("∀", "∀"),
    ("∃", "∃"),
    ("λ", "λ"),
    ("∑", "∑"),
    ("∏", "∏"),
    ("⋃", "⋃"),
    ("⋂", "⋂"),
    ("↦", "↦"),
    ("√", "√"),
    ("↑", "↑"),
    ("⌊", "⌊"),
    ("⌋", "⌋"),
    ("⌈", "⌈"),
    ("⌉", "⌉"),
    ("(", "("),
    (")", ")"),
    ("[", "["),
    ("]", "]"),
    ("{", "{"),
    ("}", "}"),
    ("⟨", "⟨"),
    ("⟩", "⟩"),
    ("⦃", "⦃"),
    ("⦄", "⦄"),
    ("|", "|"),
    ("‖", "‖"),
    (",", ","),
    (":", ":"),
    ("!", "!"),
    ("·", "·"),
    ("@", "@"),
];

fn keyword_symbol(word: &str) -> Option<&'static str> {
    match word {
        "forall" => Some("∀"),
        "fun" => Some("λ"),
        _ => None,
    }
}

pub(crate) fn tokenize(src: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 0u32;
    let mut i = 0;
    let bytes_len = src.len();
    while i < bytes_len {
        let rest = &src[i..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            if c == '\n' {
                line += 1;
                col = 0;
            } else {
                col += 1;
            }
            i += c.len_utf8();
            continue;
        }
        let (tok, len) = if is_ident_start(c) {
            let mut end = c.len_utf8();
            for (j, d) in rest.char_indices().skip(1) {
                if !is_ident_continue(d) {
                    break;
                }
                end = j + d.len_utf8();
            }
            // a trailing dot belongs to whatever follows
            let word = rest[..end].trim_end_matches('.');
            let end = word.len();
            let tok = match keyword_symbol(word) {
                Some(s) => Tok::Sym(s),
                None => Tok::Ident(word.to_string()),
            };
            (tok, end)
        } else if c.is_ascii_digit() {
            let mut end = 0;
            let mut seen_dot = false;
            let chars: Vec<(usize, char)> = rest.char_indices().collect();
            let mut k = 0;
            while k < chars.len() {
                let (j, d) = chars[k];
                if d.is_ascii_digit() {
                    end = j + 1;
                } else if d == '.' && !seen_dot && chars.get(k + 1).is_some_and(|(_, n)| n.is_ascii_digit()) {
                    seen_dot = true;
                } else {
                    break;
                }
                k += 1;
            }
            (Tok::Num(rest[..end].to_string()), end)
        } else if c == '"' {
            let mut end = rest.len();
            let mut escaped = false;
            for (j, d) in rest.char_indices().skip(1) {
                if escaped {
                    escaped = false;
                } else if d == '\\' {
                    escaped = true;
                } else if d == '"' {
                    end = j + 1;
                    break;
                }
            }
            (Tok::Str(rest[..end].to_string()), end)
        } else if let Some((raw, sym)) = SYMBOLS.iter().find(|(raw, _)| rest.starts_with(raw)) {
            (Tok::Sym(sym), raw.len())
        } else {
            (Tok::Other(c.to_string()), c.len_utf8())
        };
        out.push(Token {
            tok,
            start: i,
            line,
            col,
        });
        col += rest[..len].chars().count() as u32;
        i += len;
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Assoc {
    Left,
    Right,
}

fn infix(sym: &str) -> Option<(u8, Assoc)> {
    Some(match sym {
        "↔" => (20, Assoc::Left),
        "→" => (25, Assoc::Right),
        "∨" => (30, Assoc::Right),
        "∧" => (35, Assoc::Right),
        "=" | "≠" | "<" | ">" | "≤" | "≥" | "∈" | "∉" | "⊆" | "⊂" | "⊇" | "∣" | "≡" => (50, Assoc::Left),
        "+" | "-" | "∪" | "++" => (65, Assoc::Left),
        "*" | "/" | "%" | "∩" | "•" | "×" | "\\" => (70, Assoc::Left),
        "^" => (75, Assoc::Right),
        "∘" => (90, Assoc::Right),
        _ => return None,
    })
}

const APP_PREC: u8 = 100;
const BINDERS: &[&str] = &["∀", "∃", "∃!", "λ", "∑", "∏", "⋃", "⋂"];
const BOUND_RELATIONS: &[&str] = &["∈", "∉", "<", "≤", ">", "≥", "≠", "⊆"];
const CLOSERS: &[&str] = &[")", "]", "}", "⟩", "⦄", "⌋", "⌉"];
const STOP_WORDS: &[&str] = &["then", "else", "by", "where", "with", "at", "in"];

/// One name bound by a theorem binder or a quantifier; `None` for
/// anonymous instance binders.
type Scope = Vec<Option<String>>;

pub(crate) struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    scope: Scope,
    eof: (u32, u32),
}

struct Binder {
    name: Option<String>,
    /// Type, or the bounding term of `x ∈ S`-style binders.
    bound: Option<OpTree>,
    relation: Option<&'static str>,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(toks: &'a [Token], eof: (u32, u32)) -> Self {
        Parser {
            toks,
            pos: 0,
            scope: Vec::new(),
            eof,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == w)
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.toks.get(self.pos).map_or(self.eof, |t| (t.line, t.col));
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of statement".into(),
            Some(Tok::Ident(s) | Tok::Num(s) | Tok::Str(s) | Tok::Other(s)) => format!("'{s}'"),
            Some(Tok::Sym(s)) => format!("'{s}'"),
        }
    }

    fn expect_sym(&mut self, s: &str, opened: Option<&Token>) -> Result<(), ParseError> {
        if self.at_sym(s) {
            self.pos += 1;
            return Ok(());
        }
        let msg = match opened {
            Some(o) => format!(
                "expected '{s}' to close the delimiter opened at line {}, col {}, found {}",
                o.line,
                o.col,
                self.describe()
            ),
            None => format!("expected '{s}', found {}", self.describe()),
        };
        Err(self.error_here(msg))
    }

    fn resolve(&self, name: &str) -> String {
        match self.scope.iter().rposition(|n| n.as_deref() == Some(name)) {
            Some(k) => format!("#{k}"),
            None => name.to_string(),
        }
    }

    fn starts_argument(&self) -> bool {
        match self.peek() {
            None => false,
            Some(Tok::Ident(w)) => !STOP_WORDS.contains(&w.as_str()),
            Some(Tok::Num(_) | Tok::Str(_)) => true,
            Some(Tok::Other(_)) => true,
            Some(Tok::Sym(s)) => matches!(*s, "(" | "[" | "{" | "⟨" | "⌊" | "⌈" | "↑" | "√" | "·" | "@" | "‖"),
        }
    }

    pub(crate) fn expr(&mut self, min_prec: u8) -> Result<OpTree, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            if let Some(Tok::Sym(s)) = self.peek() {
                if let Some((prec, assoc)) = infix(s) {
                    if prec < min_prec {
                        break;
                    }
                    let label = *s;
                    self.pos += 1;
                    let next = if assoc == Assoc::Left { prec + 1 } else { prec };
                    let rhs = self.expr(next)?;
                    lhs = OpTree::node(label, vec![lhs, rhs]);
                    continue;
                }
            }
            if APP_PREC >= min_prec && self.starts_argument() {
                let mut args = Vec::new();
                while self.starts_argument() {
                    args.push(self.expr(APP_PREC + 1)?);
                }
                lhs = if lhs.is_leaf() && !lhs.label.starts_with(|c: char| c.is_ascii_digit()) {
                    OpTree::node(lhs.label, args)
                } else {
                    let mut children = vec![lhs];
                    children.extend(args);
                    OpTree::node("@", children)
                };
                continue;
            }
            break;
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<OpTree, ParseError> {
        let Some(tok) = self.toks.get(self.pos) else {
            return Err(self.error_here("unexpected end of statement"));
        };
        let opened = tok.clone();
        match &tok.tok {
            Tok::Ident(w) if w == "if" => {
                self.pos += 1;
                if matches!(self.peek(), Some(Tok::Ident(_))) && matches!(self.peek_at(1), Some(Tok::Sym(":"))) {
                    self.pos += 2;
                }
                let c = self.expr(0)?;
                self.expect_word("then")?;
                let a = self.expr(0)?;
                self.expect_word("else")?;
                let b = self.expr(0)?;
                Ok(OpTree::node("ite", vec![c, a, b]))
            }
            Tok::Ident(w) => {
                self.pos += 1;
                Ok(OpTree::leaf(self.resolve(w)))
            }
            Tok::Num(n) | Tok::Str(n) | Tok::Other(n) => {
                self.pos += 1;
                Ok(OpTree::leaf(n.clone()))
            }
            Tok::Sym(s) => {
                let s = *s;
                if BINDERS.contains(&s) {
                    self.pos += 1;
                    return self.binder_expr(s);
                }
                if CLOSERS.contains(&s) {
                    return Err(self.error_here(format!("unmatched '{s}'")));
                }
                self.pos += 1;
                match s {
                    "(" => self.paren(&opened),
                    "⟨" => self.sequence("⟩", "⟨⟩", &opened),
                    "[" => self.sequence("]", "[]", &opened),
                    "{" => self.brace(&opened),
                    "|" | "‖" => {
                        let inner = self.expr(0)?;
                        self.expect_sym(s, Some(&opened))?;
                        Ok(OpTree::node(if s == "|" { "abs" } else { "norm" }, vec![inner]))
                    }
                    "⌊" | "⌈" => {
                        let inner = self.expr(0)?;
                        let close = if s == "⌊" { "⌋" } else { "⌉" };
                        self.expect_sym(close, Some(&opened))?;
                        Ok(OpTree::node(if s == "⌊" { "floor" } else { "ceil" }, vec![inner]))
                    }
                    "¬" | "!" => Ok(OpTree::node("¬", vec![self.expr(40)?])),
                    "-" => Ok(OpTree::node("neg", vec![self.expr(75)?])),
                    "↑" | "√" => Ok(OpTree::node(s, vec![self.expr(APP_PREC + 1)?])),
                    "@" => self.prefix(),
                    other => Ok(OpTree::leaf(other)),
                }
            }
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<(), ParseError> {
        if self.at_word(w) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error_here(format!("expected '{w}', found {}", self.describe())))
        }
    }

    fn paren(&mut self, opened: &Token) -> Result<OpTree, ParseError> {
        if self.at_sym(")") {
            self.pos += 1;
            return Ok(OpTree::leaf("()"));
        }
        let first = self.expr(0)?;
        let out = if self.at_sym(":") {
            self.pos += 1;
            let ty = self.expr(0)?;
            OpTree::node(":", vec![first, ty])
        } else if self.at_sym(",") {
            let mut items = vec![first];
            while self.at_sym(",") {
                self.pos += 1;
                items.push(self.expr(0)?);
            }
            OpTree::node("tuple", items)
        } else {
            first
        };
        self.expect_sym(")", Some(opened))?;
        Ok(out)
    }

    fn sequence(&mut self, close: &str, label: &str, opened: &Token) -> Result<OpTree, ParseError> {
        let mut items = Vec::new();
        while !self.at_sym(close) {
            items.push(self.expr(0)?);
            if self.at_sym(",") {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.expect_sym(close, Some(opened))?;
        Ok(OpTree::node(label, items))
    }

    /// `{x | p}`, `{x : T | p}`, `{x ∈ S | p}` or a literal `{a, b}`.
    fn brace(&mut self, opened: &Token) -> Result<OpTree, ParseError> {
        if let Some(Tok::Ident(name)) = self.peek().cloned() {
            let builder = match self.peek_at(1) {
                Some(Tok::Sym("|")) => true,
                Some(Tok::Sym(":" | "∈")) => self.toks[self.pos..]
                    .iter()
                    .take_while(|t| !matches!(t.tok, Tok::Sym("}")))
                    .any(|t| matches!(t.tok, Tok::Sym("|"))),
                _ => false,
            };
            if builder {
                self.pos += 1;
                let (label, bound) = if self.at_sym(":") || self.at_sym("∈") {
                    let rel = if self.at_sym(":") { "setOf" } else { "setOf∈" };
                    self.pos += 1;
                    (rel, Some(self.expr(21)?))
                } else {
                    ("setOf", None)
                };
                self.expect_sym("|", None)?;
                self.scope.push(Some(name));
                let body = self.expr(0);
                self.scope.pop();
                let body = body?;
                self.expect_sym("}", Some(opened))?;
                let mut children: Vec<OpTree> = bound.into_iter().collect();
                children.push(body);
                return Ok(OpTree::node(label, children));
            }
        }
        self.sequence("}", "{}", opened)
    }

    /// Binder groups up to the `,` / `=>` / `↦` that starts the body.
    fn binders(&mut self) -> Result<Vec<Binder>, ParseError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Sym(open @ ("(" | "{" | "[" | "⦃"))) => {
                    let open = *open;
                    let opened = self.toks[self.pos].clone();
                    self.pos += 1;
                    let close = match open {
                        "(" => ")",
                        "{" => "}",
                        "[" => "]",
                        _ => "⦄",
                    };
                    out.extend(self.binder_group(close, &opened)?);
                }
                Some(Tok::Ident(_)) => {
                    let mut names = Vec::new();
                    while let Some(Tok::Ident(n)) = self.peek() {
                        if STOP_WORDS.contains(&n.as_str()) {
                            break;
                        }
                        names.push(n.clone());
                        self.pos += 1;
                    }
                    if names.is_empty() {
                        break;
                    }
                    let (bound, relation) = if self.at_sym(":") {
                        self.pos += 1;
                        (Some(self.expr(0)?), None)
                    } else if let Some(Tok::Sym(r)) = self.peek() {
                        match BOUND_RELATIONS.iter().find(|b| **b == *r) {
                            Some(rel) => {
                                self.pos += 1;
                                (Some(self.expr(51)?), Some(*rel))
                            }
                            None => (None, None),
                        }
                    } else if self.at_word("in") {
                        self.pos += 1;
                        (Some(self.expr(51)?), Some("∈"))
                    } else {
                        (None, None)
                    };
                    for n in names {
                        out.push(Binder {
                            name: Some(n),
                            bound: bound.clone(),
                            relation,
                        });
                    }
                }
                _ => break,
            }
            if self.at_sym(",") || self.at_sym("=>") || self.at_sym("↦") {
                break;
            }
        }
        Ok(out)
    }

    /// Names and type inside one bracketed binder group; the type is parsed
    /// with earlier binders (but not the group's own names) in scope.
    fn binder_group(&mut self, close: &str, opened: &Token) -> Result<Vec<Binder>, ParseError> {
        let mut names = Vec::new();
        let colon_ahead = {
            let mut k = self.pos;
            while let Some(Tok::Ident(_)) = self.toks.get(k).map(|t| &t.tok) {
                k += 1;
            }
            k > self.pos && matches!(self.toks.get(k).map(|t| &t.tok), Some(Tok::Sym(":")))
        };
        if colon_ahead {
            while let Some(Tok::Ident(n)) = self.peek() {
                names.push(Some(n.clone()));
                self.pos += 1;
            }
            self.pos += 1;
        } else if close != "]" {
            // `(x y)` with no type
            while let Some(Tok::Ident(n)) = self.peek() {
                names.push(Some(n.clone()));
                self.pos += 1;
            }
            self.expect_sym(close, Some(opened))?;
            return Ok(names.into_iter().map(|name| Binder { name, bound: None, relation: None }).collect());
        }
        if names.is_empty() {
            names.push(None);
        }
        let ty = self.expr(0)?;
        self.expect_sym(close, Some(opened))?;
        Ok(names
            .into_iter()
            .map(|name| Binder {
                name,
                bound: Some(ty.clone()),
                relation: None,
            })
            .collect())
    }

    fn binder_expr(&mut self, quantifier: &'static str) -> Result<OpTree, ParseError> {
        let binders = self.binders()?;
        if binders.is_empty() {
            return Err(self.error_here(format!("'{quantifier}' needs at least one bound name")));
        }
        if self.at_sym(",") || self.at_sym("=>") || self.at_sym("↦") {
            self.pos += 1;
        } else {
            return Err(self.error_here(format!("expected ',' after the binders of '{quantifier}', found {}", self.describe())));
        }
        let depth = self.scope.len();
        for b in &binders {
            self.scope.push(b.name.clone());
        }
        // big operators bind their body like `+` does
        let body_prec = if matches!(quantifier, "∑" | "∏") { 67 } else { 0 };
        let body = self.expr(body_prec);
        self.scope.truncate(depth);
        Ok(wrap(quantifier, binders, body?))
    }
}

/// Nests `body` under one node per binder, innermost last.
fn wrap(quantifier: &str, binders: Vec<Binder>, body: OpTree) -> OpTree {
    binders.into_iter().rev().fold(body, |acc, b| {
        let label = match b.relation {
            Some(r) => format!("{quantifier}{r}"),
            None => quantifier.to_string(),
        };
        let mut children: Vec<OpTree> = b.bound.into_iter().collect();
        children.push(acc);
        OpTree::node(label, children)
    })
}

const DECL_WORDS: &[&str] = &["theorem", "lemma", "example"];

/// Byte ranges of a declaration's pieces in the comment-stripped source.
pub(crate) struct DeclSpans {
    pub source: String,
    pub decl_start: usize,
    pub name: Option<String>,
    /// Text of the binders between the name and the statement colon.
    pub binders: (usize, usize),
    pub statement: (usize, usize),
}

fn decl_start(toks: &[Token]) -> Option<usize> {
    toks.iter().position(|t| matches!(&t.tok, Tok::Ident(w) if DECL_WORDS.contains(&w.as_str())))
}

/// Parses the first `theorem`/`lemma`/`example` in `code` into an operator
/// tree. Theorem binders become `∀` nodes around the statement.
pub fn parse_optree(code: &str) -> Result<OpTree, ParseError> {
    parse_decl(code).map(|(tree, _)| tree)
}

pub(crate) fn parse_decl(code: &str) -> Result<(OpTree, DeclSpans), ParseError> {
    let source = strip_comments(code, Strings::Keep);
    let toks = tokenize(&source);
    let eof = toks.last().map_or((1, 0), |t| (t.line, t.col + 1));
    let start = decl_start(&toks).ok_or(ParseError {
        line: 1,
        col: 0,
        message: "no theorem declaration found".into(),
    })?;
    let mut p = Parser::new(&toks, eof);
    p.pos = start + 1;
    let name = if matches!(&toks[start].tok, Tok::Ident(w) if w == "example") {
        None
    } else {
        match p.peek() {
            Some(Tok::Ident(n)) => {
                let n = n.clone();
                p.pos += 1;
                Some(n)
            }
            _ => return Err(p.error_here(format!("expected a theorem name, found {}", p.describe()))),
        }
    };
    let binder_start = p.toks.get(p.pos).map_or(source.len(), |t| t.start);
    let mut binders = Vec::new();
    while let Some(Tok::Sym(open @ ("(" | "{" | "[" | "⦃"))) = p.peek() {
        let close = match *open {
            "(" => ")",
            "{" => "}",
            "[" => "]",
            _ => "⦄",
        };
        let opened = p.toks[p.pos].clone();
        p.pos += 1;
        let group = p.binder_group(close, &opened)?;
        for b in &group {
            p.scope.push(b.name.clone());
        }
        binders.extend(group);
    }
    let binder_end = p.toks.get(p.pos).map_or(source.len(), |t| t.start);
    p.expect_sym(":", None)?;
    let stmt_start = p.toks.get(p.pos).map_or(source.len(), |t| t.start);
    let body = p.expr(0)?;
    let stmt_end = p.toks.get(p.pos).map_or(source.len(), |t| t.start);
    match p.peek() {
        None | Some(Tok::Sym(":=")) => {}
        Some(Tok::Ident(w)) if w == "by" || w == "where" => {}
        Some(_) => return Err(p.error_here(format!("unexpected {} in statement", p.describe()))),
    }
    let tree = wrap("∀", binders, body);
    let spans = DeclSpans {
        decl_start: toks[start].start,
        name,
        binders: (binder_start, binder_end),
        statement: (stmt_start, stmt_end),
        source,
    };
    Ok((tree, spans))
}
