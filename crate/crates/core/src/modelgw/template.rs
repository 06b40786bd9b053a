//! Prompt templates. Placeholders are written `{name}`; rendering is a single
//! left-to-right pass, so substituted values (which routinely contain Lean
//! braces) are never re-expanded.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    KbAgentSystem,
    KbAgentUser,
    FormalizeInitial,
    FormalizeRefine,
    AtpSingle,
    AtpMultiInitial,
    AtpMultiFeedback,
    Summary,
    LabelCategory,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("template {template} is missing a value for placeholder {{{placeholder}}}")]
pub struct MissingPlaceholder {
    pub template: TemplateId,
    pub placeholder: String,
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

impl TemplateId {
    pub const ALL: [TemplateId; 9] = [
        TemplateId::KbAgentSystem,
        TemplateId::KbAgentUser,
        TemplateId::FormalizeInitial,
        TemplateId::FormalizeRefine,
        TemplateId::AtpSingle,
        TemplateId::AtpMultiInitial,
        TemplateId::AtpMultiFeedback,
        TemplateId::Summary,
        TemplateId::LabelCategory,
    ];

    pub fn body(self) -> &'static str {
        match self {
            TemplateId::KbAgentSystem => KB_AGENT_SYSTEM,
            TemplateId::KbAgentUser => KB_AGENT_USER,
            TemplateId::FormalizeInitial => FORMALIZE_INITIAL,
            TemplateId::FormalizeRefine => FORMALIZE_REFINE,
            TemplateId::AtpSingle => ATP_SINGLE,
            TemplateId::AtpMultiInitial => ATP_MULTI_INITIAL,
            TemplateId::AtpMultiFeedback => ATP_MULTI_FEEDBACK,
            TemplateId::Summary => SUMMARY,
            TemplateId::LabelCategory => LABEL_CATEGORY,
        }
    }

    /// The documented placeholder names of this template.
    pub fn placeholders(self) -> &'static [&'static str] {
        match self {
            TemplateId::KbAgentSystem => &["working_directory"],
            TemplateId::KbAgentUser => &["category", "examples", "working_directory"],
            TemplateId::FormalizeInitial => &["context_section", "problem_id", "problem", "solution_section"],
            TemplateId::FormalizeRefine => &["lean_error"],
            TemplateId::AtpSingle => &["custom_formalization"],
            TemplateId::AtpMultiInitial => &["max_turns", "custom_formalization"],
            TemplateId::AtpMultiFeedback => &["custom_formalization", "validation_errors", "last_turn_reminder"],
            TemplateId::Summary => &["problem_id", "problem", "candidates"],
            TemplateId::LabelCategory => &["categories", "problem"],
        }
    }
}

/// Builds a variable map from pairs.
pub fn vars<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn placeholder_at(body: &str, start: usize) -> Option<&str> {
    let rest = &body[start + 1..];
    let end = rest.find('}')?;
    let name = &rest[..end];
    let mut chars = name.chars();
    let first = chars.next()?;
    if (first.is_ascii_alphabetic() || first == '_') && chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        Some(name)
    } else {
        None
    }
}

/// Names of every `{identifier}` occurrence in `body`, in order.
pub fn scan_placeholders(body: &str) -> Vec<&str> {
    body.match_indices('{')
        .filter_map(|(i, _)| placeholder_at(body, i))
        .collect()
}

pub fn render_prompt(id: TemplateId, vars: &BTreeMap<String, String>) -> Result<String, MissingPlaceholder> {
    let body = id.body();
    let mut out = String::with_capacity(body.len() + vars.values().map(String::len).sum::<usize>());
    let mut cursor = 0;
    for (i, _) in body.match_indices('{') {
        if i < cursor {
            continue;
        }
        let Some(name) = placeholder_at(body, i) else { continue };
        let value = vars.get(name).ok_or_else(|| MissingPlaceholder {
            template: id,
            placeholder: name.to_string(),
        })?;
        out.push_str(&body[cursor..i]);
        out.push_str(value);
        cursor = i + name.len() + 2;
    }
    out.push_str(&body[cursor..]);
    Ok(out)
}

/// The solution paragraph of the initial formalization prompt, included only
/// for problems that carry an answer.
pub fn solution_section(answer: Option<&str>) -> String {
    match answer {
        Some(a) => format!(
            "\n\nSolution (for context - incorporate the necessary details into the theorem statement, but do **not** include a proof):\n{a}"
        ),
        None => String::new(),
    }
}

/// The documentation block of the initial formalization prompt; empty for
/// zero-shot runs.
pub fn context_section(body: Option<&str>) -> String {
    match body {
        Some(b) => format!("---\nReference documentation:\n{}\n\n", b.trim_end()),
        None => String::new(),
    }
}

/// Text appended to the multi-turn feedback prompt on the final turn.
pub const LAST_TURN_REMINDER: &str =
    "\n\nThis is your last turn. Submit your best complete proof; there will be no further feedback.";

const KB_AGENT_SYSTEM: &str = r#"You are a mathematical documentation agent specializing in the Lean 4 Mathlib library. Your job is to explore the Mathlib repository and create a concise, practical documentation summary focused on mathematical formalization and theorem proving. You have been given access to a yet unreleased version of this library, which you must go through and pick out all relevant imports based on the type of problem the user is trying to solve. The repository contains a comprehensive library of formalized mathematics for Lean 4.
The repository will have file names and folder names representative of its content.

Your every response must be a tool call.

The documentation will be used by new lean users, who will use it as a guide to write all their imports, writing notations and rely solely on it to make the correct imports.

WORKFLOW:
1. Use run_bash to explore the repository (ls, cd, cat, grep, find, etc.)
2. Take notes by writing to files in {working_directory}. You are currently at this directory. Please do not make any changes outside of this directory, or delete any existing file.
    i.      First read all the given examples, and create a list keywords, such that each keyword is a concept that appears in any question.
    ii.     Keywords should also include common patterns like how to express "point lies on line segment", "lines are parallel/perpendicular", ratios and divisions of segments.
    iii.    Add these keywords to your notes file, so you can refer to them for completion later on.
    iv.     Understand the kind of problems the documentation needs to deal with, and select what goes in accordingly.
3. When you have sufficient information, use final_submit with a complete documentation string

EXPLORATION STRATEGY:
- Examine the main mathematical domains asked by the user
- Look for key theorem statements and their dependencies
- Pay attention to naming conventions and mathematical abstractions
- Use the given sample of examples to understand what parts to focus on
- Look for file names, folder names, documentation, examples, source code to know their subject
- Focus on user-facing functionality
- Use {working_directory} for any notes (absolute paths since you'll be changing directories)
- You decide when you have enough information to create the final documentation

FINAL DOCUMENTATION FORMAT:
Organize your final output into exactly these 4 sections:

## 1. Installation & Import
- How different imports are situated in the mathlib file hierarchy
- Essential import statements for different mathematical domains
- Any setup requirements, like opening some namespace for certain symbols, literals, notations or declarations.

## 2. Available Namepaces and Symbols
- Group related functionality together
- Since you will be given a field by the user, focus only on that and related thing you see in the examples
- Important theorem statements in each subdomain
- Common mathematical objects and their properties
- Exhaustive list of all the functions avaliable for use

## 3. Minimal Usage Example
- Simple theorem statement (with sorry, ignore proofs)
- Basic mathematical definitions
- Make some imports, and open some namespaces and scopes
- All sample codes **must** be complete and well explained, or else it can confuse the readers on what a complete theorem code looks like
- Do not leave parts of example code as comments
- Give examples for the kind of stuff the reader will be dealing with when trying to formalize the problem statement
- Lean has difficult type setups, so be sure to explain those with examples
- Should work out of the box

## 4. Common Pitfalls & Gotchas
- Common mistakes when formalizing mathematics
- Type class resolution issues
- Mathematical notation vs. Lean syntax differences

## 5. Key Files Structure
- An ascii directory tree of all the important/related files and packages

If some concept appears even once in the examples, make sure to cover that in your documentation. It should be **complete**, don't skip concepts randomly.
Do not be afraid to make long if it needs to be.

Remember: Your goal is to create a practical cheat sheet that gets developers productive quickly. It is okay if its long as long as we are putting relevant information and are correct.

TOOL CALL FORMAT:
Reply with exactly one JSON object and nothing else, either
{"tool": "run_bash", "argument": "<shell command>"}
or
{"tool": "final_submit", "argument": "<complete documentation>"}"#;

const KB_AGENT_USER: &str = r#"Problem Description: I want to understand what all library modules are available to me for autoformalizing **{category}** olympiad like problem statements into lean 4. I only care about autoformalizing the theorem part, so things like tactics and everything related to solving the problem are unnecessary. Only things relevant to the theorem statement are useful. I am interested in:
- All the necessary and relevant imports, their correct paths
- How to open the correct namespace or scope to use particular symbols or literals in lean
- Examples of using them
- Other things to note
I'll attach some examples of the type of questions I am trying to write as a lean theorem.

Examples: Samples of the kind of questions whose autoformalization I'll be doing:
{examples}

Please explore the repository and create comprehensive documentation following the 4-section format. Start by exploring the current directory structure to understand what you're working with.
Your working directory is {working_directory}. Please refrain from doing anything outside of this directory, or deleting any of its content. You may create your notes file here if you want to. "#;

const FORMALIZE_INITIAL: &str = r#"You are an expert at writing Lean code. Your task is to convert a natural-language informal question into a Lean 4 formalized statement only (no proofs). Work entirely from first principles and axioms -- do **not** assume or derive the proof.

**Output format** (and nothing else):
```lean
...
```

{context_section}---
Problem {problem_id}:
{problem}{solution_section}"#;

const FORMALIZE_REFINE: &str = r#"Your previous Lean formalization failed to compile. Here are the compilation errors:

{lean_error}

Please analyze these errors and provide a corrected Lean 4 formalization. Use the following format:

<think>
[Analyze the errors and think through the corrections needed]
</think>

<answer>
```lean
[Your corrected Lean code here]
```
</answer>

Focus on:
1. Fixing syntax errors
2. Ensuring correct type annotations
3. Using proper Lean 4 syntax
4. Making sure all variables and constants are properly defined

Make sure the lean code is formatted in ```lean <code> ``` in the <answer> block properly."#;

const ATP_SINGLE: &str = r#"You are an expert Lean 4 theorem prover. Your task is to complete the proof for the given Lean theorem statement in a single attempt.

The theorem statement is:
```lean
{custom_formalization}
```

**Your task**: Provide a complete Lean 4 proof for this theorem statement.

**Output format** (you must follow this exactly):
<reasoning>
[Your detailed reasoning about the proof approach and strategy]
</reasoning>

<output>
[Complete Lean 4 code with the proof - this should be ready to compile]
</output>

Provide your best single attempt at solving this theorem. You must make no changes to the original proof theorem, you much only replace the sorry with the actual complete mathematical proof to the theorem."#;

const ATP_MULTI_INITIAL: &str = r#"You are an expert Lean 4 theorem prover using Mathlib 4. Your task is to complete the proof for the given Lean theorem statement.

You have {max_turns} turns to solve this theorem. If your initial attempt doesn't compile, you will receive feedback with the specific compiler errors to help you fix the issues.

CRITICAL REQUIREMENTS:
- Use ONLY current Mathlib 4 syntax and APIs (NOT Lean 3)
- NO sorry statements allowed - provide complete proofs
- Verify all function names exist in current Mathlib
- Handle type coercions explicitly
- Use modern Lean 4 tactic syntax
- You are only allowed to change the sorry statement to the actual proof and the import headers if required. No other changes allowed.
- You must directly solve the theorem given to you. No manipulating the theorem statement or assumptions. Everything must be derived from what you have.
- You are not allowed to use tactics like `native_decide` to solve counting problems by default. You **must** solve it logically step by step only by replacing the sorry.
- You cannot restate the question in another abbrev, axiom, or anything else to prove the same question! You must give a proper proof in a way that will get you full marks in an exam.
- The solution **connot** be a restatement of a question. Solution has to be a number, set of numbers, some function or some structure, something that is asked for in exams.

The theorem statement is:
```lean
{custom_formalization}
```

**Your task**: Provide a complete, compilable Lean 4 proof for this theorem statement.

Before writing the proof, analyze:
1. Required Mathlib imports and namespaces
2. Key lemmas, theorems, and tactics needed
3. Type constraints and coercions required
4. Step-by-step proof strategy

**Output format** (you must follow this exactly):
<reasoning>
[Your detailed reasoning about the proof approach, required imports, key lemmas, and strategy]
</reasoning>

<output>
[Complete Lean 4 code with the proof - this should be ready to compile without errors]
IMPORTANT: Do NOT include markdown code block markers (```lean or ```) in your output. Provide only the raw Lean code.
</output>

Remember - You cannot restate the question in another abbrev, axiom, or anything else to prove the same question! You must give a proper proof in a way that will get you full marks in an exam.
Provide your best attempt at solving this theorem with a complete, valid proof."#;

const ATP_MULTI_FEEDBACK: &str = r#"Your previous Lean 4 proof attempt had compilation errors. Please fix these errors and provide a corrected version.

The original theorem statement is:
```lean
{custom_formalization}
```

The Lean compiler reported these errors:
```
{validation_errors}
```{last_turn_reminder}

**Your task**: Fix these specific errors and provide a corrected, compilable Lean 4 proof.

Analyze the errors carefully:
1. Check if you're using correct Mathlib 4 API functions
2. Verify type constraints and coercions
3. Ensure proper tactic syntax
4. Fix any naming or import issues

Remember, you are not allowed to change the theorem statement. It is imperative you solve what is given exactly.

**Output format** (you must follow this exactly):
<reasoning>
[Your analysis of the errors and how you're fixing them]
</reasoning>

<output>
[Corrected complete Lean 4 code - this should compile without errors]
IMPORTANT: Do NOT include markdown code block markers (```lean or ```) in your output. Provide only the raw Lean code.
</output>"#;

const SUMMARY: &str = r#"You are reviewing several candidate Lean 4 formalizations of the same informal olympiad problem, each produced by a different model. Compare them for the human annotator who will write the final formalization.

Problem {problem_id}:
{problem}

Candidates:
{candidates}

Rank every candidate by correctness, completeness and faithfulness to the problem statement. Point out errors shared by several candidates, hypotheses or conditions that some candidates omit, and which parts of which candidates are worth reusing.

Write your analysis in prose first. Then end your reply with exactly one fenced JSON block of this shape, listing every candidate model exactly once, best first:
```json
{"ranking": [{"model": "<model name>", "notes": "<short notes>"}], "common_errors": "<text>", "missing_conditions": "<text>"}
```"#;

const LABEL_CATEGORY: &str = r#"Classify the following olympiad problem into exactly one of these categories:
{categories}

Reply with the category name only.

Problem:
{problem}"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_template_uses_exactly_its_documented_placeholders() {
        for id in TemplateId::ALL {
            let mut found: Vec<&str> = scan_placeholders(id.body());
            found.sort_unstable();
            found.dedup();
            let mut documented = id.placeholders().to_vec();
            documented.sort_unstable();
            assert_eq!(found, documented, "{id}");
        }
    }

    #[test]
    fn complete_vars_leave_nothing_unexpanded() {
        for id in TemplateId::ALL {
            let map: BTreeMap<String, String> =
                id.placeholders().iter().map(|p| (p.to_string(), format!("<{p}>"))).collect();
            let out = render_prompt(id, &map).unwrap();
            assert!(scan_placeholders(&out).is_empty(), "{id}: {out}");
        }
    }

    #[test]
    fn refine_prompt_embeds_error() {
        let out = render_prompt(TemplateId::FormalizeRefine, &vars([("lean_error", "unknown identifier 'foo'")])).unwrap();
        assert!(out.starts_with("Your previous Lean formalization failed to compile"));
        assert!(out.contains("unknown identifier 'foo'"));
    }

    #[test]
    fn multi_feedback_prompt_mentions_compilation_errors() {
        let out = render_prompt(
            TemplateId::AtpMultiFeedback,
            &vars([
                ("custom_formalization", "theorem t : True := by sorry"),
                ("validation_errors", "Main.lean:1:0: error: boom"),
                ("last_turn_reminder", ""),
            ]),
        )
        .unwrap();
        assert!(out.contains("had compilation errors"));
        assert!(out.contains("error: boom"));
    }

    #[test]
    fn missing_problem_var_is_named() {
        let err = render_prompt(
            TemplateId::FormalizeInitial,
            &vars([("context_section", ""), ("problem_id", "p"), ("solution_section", "")]),
        )
        .unwrap_err();
        assert_eq!(err.placeholder, "problem");
        assert!(render_prompt(TemplateId::FormalizeInitial, &BTreeMap::new()).is_err());
    }

    #[test]
    fn values_with_braces_are_not_reexpanded() {
        let out = render_prompt(TemplateId::FormalizeRefine, &vars([("lean_error", "{lean_error} {x : ℕ}")])).unwrap();
        assert!(out.contains("{lean_error} {x : ℕ}"));
    }

    #[test]
    fn json_braces_in_body_are_literal() {
        // The summary body shows a JSON shape; none of it is a placeholder.
        assert_eq!(TemplateId::Summary.placeholders().len(), 3);
        let out = render_prompt(
            TemplateId::Summary,
            &vars([("problem_id", "p"), ("problem", "x"), ("candidates", "c")]),
        )
        .unwrap();
        assert!(out.contains(r#"{"ranking": [{"model""#));
    }
}
