//! Pulling Lean source out of free-form model responses.

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("response contained no Lean code block")]
pub struct ExtractionError {
    pub raw: String,
}

/// Contents of the last `<tag>...</tag>` region, if any.
fn last_tagged<'a>(response: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = response.rfind(&open)? + open.len();
    let rest = &response[start..];
    Some(match rest.find(&close) {
        Some(end) => &rest[..end],
        None => rest,
    })
}

/// Contents of every ```lean fence, in order. A trailing unterminated fence
/// (truncated response) counts as running to the end of the text.
fn lean_fences(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = text;
    while let Some(pos) = rest.find("```") {
        let after = &rest[pos + 3..];
        let info_end = after.find('\n').unwrap_or(after.len());
        let info = after[..info_end].trim();
        let body_start = (info_end + 1).min(after.len());
        let body = &after[body_start..];
        let (content, next) = match body.find("```") {
            Some(close) => (&body[..close], &body[close + 3..]),
            None => (body, ""),
        };
        if info == "lean" || info == "lean4" {
            blocks.push(content);
        }
        rest = next;
    }
    blocks
}

/// Returns the trimmed contents of the last fenced `lean` block. Regions
/// inside `<answer>` or `<output>` tags are searched first.
pub fn extract_code_block(response: &str) -> Result<String, ExtractionError> {
    for tag in ["answer", "output"] {
        if let Some(region) = last_tagged(response, tag) {
            if let Some(block) = lean_fences(region).last() {
                return Ok(block.trim().to_string());
            }
        }
    }
    lean_fences(response)
        .last()
        .map(|b| b.trim().to_string())
        .ok_or_else(|| ExtractionError { raw: response.to_string() })
}

/// Code extraction for prover responses, which are asked for raw Lean inside
/// `<output>` tags. A lean fence anywhere wins; otherwise the raw contents of
/// the last `<output>` (or `<answer>`) region are used. Returns `None` when
/// nothing but comments remains, which is how a model declines ("-- no code").
pub fn extract_tagged_code(response: &str) -> Option<String> {
    let code = match extract_code_block(response) {
        Ok(code) => code,
        Err(_) => {
            let region = last_tagged(response, "output").or_else(|| last_tagged(response, "answer"))?;
            let region = region.trim();
            let region = region
                .strip_prefix("```")
                .map(|r| r.trim_end().trim_end_matches("```"))
                .unwrap_or(region);
            region.trim().to_string()
        }
    };
    let meaningful = crate::lean_syntax::strip_comments(&code, crate::lean_syntax::Strings::Keep);
    if meaningful.trim().is_empty() {
        None
    } else {
        Some(code)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_block_in_answer() {
        assert_eq!(extract_code_block("<answer>```lean\nX\n```</answer>").unwrap(), "X");
    }

    #[test]
    fn last_block_wins() {
        let r = "first try:\n```lean\nbroken\n```\nsome prose in between\n```lean\nfixed\n```\n";
        assert_eq!(extract_code_block(r).unwrap(), "fixed");
    }

    #[test]
    fn answer_region_preferred_over_later_blocks() {
        let r = "<answer>```lean\ninside\n```</answer>\n```lean\nafter\n```";
        assert_eq!(extract_code_block(r).unwrap(), "inside");
    }

    #[test]
    fn non_lean_fences_are_ignored() {
        let r = "```python\nprint(1)\n```\n```lean4\ntheorem t : True := trivial\n```";
        assert_eq!(extract_code_block(r).unwrap(), "theorem t : True := trivial");
    }

    #[test]
    fn no_fence_is_an_error() {
        let err = extract_code_block("-- no code").unwrap_err();
        assert_eq!(err.raw, "-- no code");
    }

    #[test]
    fn truncated_fence_is_accepted() {
        assert_eq!(extract_code_block("```lean\ntheorem t").unwrap(), "theorem t");
    }

    #[test]
    fn tagged_raw_output() {
        let r = "<reasoning>easy</reasoning>\n<output>\ntheorem t : True := trivial\n</output>";
        assert_eq!(extract_tagged_code(r).as_deref(), Some("theorem t : True := trivial"));
        assert_eq!(extract_tagged_code("<reasoning>no</reasoning><output>\n-- no code\n</output>"), None);
        assert_eq!(extract_tagged_code("I give up."), None);
    }

    proptest! {
        #[test]
        fn wrap_then_extract_is_identity(x in "[^`<\\s][^`<]{0,60}[^`<\\s]|[^`<\\s]") {
            let wrapped = format!("<answer>\n```lean\n{x}\n```\n</answer>");
            prop_assert_eq!(extract_code_block(&wrapped).unwrap(), x);
        }
    }
}
