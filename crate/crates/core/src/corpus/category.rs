use std::fmt;

use serde::{Deserialize, Serialize};

/// The four topic domains problems are grouped into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Category {
    Geometry,
    Algebra,
    SetTheoryCombinatorics,
    NumberTheory,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Geometry,
        Category::Algebra,
        Category::SetTheoryCombinatorics,
        Category::NumberTheory,
    ];

    /// Human-facing name, as used in prompts.
    pub fn display_name(self) -> &'static str {
        match self {
            Category::Geometry => "Geometry",
            Category::Algebra => "Algebra",
            Category::SetTheoryCombinatorics => "Set Theory & Combinatorics",
            Category::NumberTheory => "Number Theory",
        }
    }

    /// Stable lowercase identifier used for file names and CLI flags.
    pub fn slug(self) -> &'static str {
        match self {
            Category::Geometry => "geometry",
            Category::Algebra => "algebra",
            Category::SetTheoryCombinatorics => "set_theory_combinatorics",
            Category::NumberTheory => "number_theory",
        }
    }

    fn key(self) -> &'static str {
        match self {
            Category::Geometry => "geometry",
            Category::Algebra => "algebra",
            Category::SetTheoryCombinatorics => "settheorycombinatorics",
            Category::NumberTheory => "numbertheory",
        }
    }

    /// Maps a free-form label (model output, CLI flag, file sidecar) onto a
    /// category. Case, punctuation, whitespace and the word "and" are ignored.
    /// A response that names exactly one category inside surrounding prose
    /// also matches.
    pub fn from_label(raw: &str) -> Option<Category> {
        let norm = normalize(raw);
        if norm.is_empty() {
            return None;
        }
        if let Some(c) = Category::ALL.into_iter().find(|c| c.key() == norm) {
            return Some(c);
        }
        let mut hits = Category::ALL.into_iter().filter(|c| norm.contains(c.key()));
        match (hits.next(), hits.next()) {
            (Some(c), None) => Some(c),
            _ => None,
        }
    }
}

fn normalize(raw: &str) -> String {
    let words: Vec<String> = raw
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .filter(|w| w != "and")
        .collect();
    words.concat()
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl TryFrom<String> for Category {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Category> for String {
    fn from(c: Category) -> String {
        c.display_name().to_string()
    }
}

impl std::str::FromStr for Category {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::from_label(s).ok_or_else(|| format!("unknown category {s:?}"))
    }
}
