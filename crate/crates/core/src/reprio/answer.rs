//! Canonical answer strings for vote comparison.
//!
//! Rules, applied in order:
//! 1. If `\boxed{...}` occurs, take the content of the last one (brace-matched,
//!    descending into nested `\boxed`) with all whitespace removed.
//! 2. Otherwise, if the trimmed text is a single whitespace-free token, keep it.
//! 3. Otherwise take the last numeric token.
//! 4. Strip trailing periods; drop thousands separators from pure numbers.
//!
//! Outputs never contain whitespace, which makes the function idempotent.

use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnswerError {
    #[error("no extractable answer in {0:?}")]
    NoAnswer(String),
}

static NUMERIC_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"-?\d+(?:,\d{3})*(?:\.\d+)?").expect("valid regex"));
static GROUPED_NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^-?\d{1,3}(?:,\d{3})+(?:\.\d+)?$").expect("valid regex"));

const BOXED: &str = "\\boxed{";

/// Content of the last `\boxed{...}`, or `None` if there is no balanced one.
fn boxed_content(text: &str) -> Option<&str> {
    let start = text.rfind(BOXED)? + BOXED.len();
    let mut depth = 1usize;
    for (i, c) in text[start..].char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i]);
                }
            }
            _ => {}
        }
    }
    None
}

fn innermost_boxed(text: &str) -> Option<&str> {
    let mut inner = boxed_content(text)?;
    while let Some(next) = boxed_content(inner) {
        inner = next;
    }
    Some(inner)
}

fn cleanup(token: &str) -> String {
    let token = token.trim().trim_end_matches('.');
    if GROUPED_NUMBER.is_match(token) {
        token.replace(',', "")
    } else {
        token.to_string()
    }
}

pub fn normalize_answer(raw: &str) -> Result<String, AnswerError> {
    let no_answer = || AnswerError::NoAnswer(raw.to_string());
    let extracted: String = if let Some(inner) = innermost_boxed(raw) {
        inner.split_whitespace().collect()
    } else {
        let trimmed = raw.trim();
        if !trimmed.is_empty() && !trimmed.contains(char::is_whitespace) {
            trimmed.to_string()
        } else {
            NUMERIC_TOKEN.find_iter(raw).last().ok_or_else(no_answer)?.as_str().to_string()
        }
    };
    let canonical = cleanup(&extracted);
    if canonical.is_empty() {
        return Err(no_answer());
    }
    Ok(canonical)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boxed_answer() {
        assert_eq!(normalize_answer("… the answer is \\boxed{363}.").unwrap(), "363");
    }

    #[test]
    fn whitespace_trim() {
        assert_eq!(normalize_answer("  42 ").unwrap(), "42");
    }

    #[test]
    fn thousands_separators() {
        assert_eq!(normalize_answer("The total is 1,234 dollars").unwrap(), "1234");
    }

    #[test]
    fn nested_boxed_and_latex() {
        assert_eq!(normalize_answer("so \\boxed{\\frac{1}{2}}").unwrap(), "\\frac{1}{2}");
        assert_eq!(normalize_answer("\\boxed{\\boxed{ 7 }}").unwrap(), "7");
        assert_eq!(normalize_answer("first \\boxed{1} then \\boxed{x = 3}").unwrap(), "x=3");
    }

    #[test]
    fn last_number_wins() {
        assert_eq!(normalize_answer("3 apples plus 4 apples is 7 apples.").unwrap(), "7");
        assert_eq!(normalize_answer("the result is -2.50").unwrap(), "-2.50");
    }

    #[test]
    fn no_answer() {
        assert!(normalize_answer("no idea at all").is_err());
        assert!(normalize_answer("   ").is_err());
        assert!(normalize_answer("\\boxed{ }").is_err());
    }

    #[test]
    fn idempotent_on_examples() {
        for raw in ["\\boxed{\\frac{1}{2}}", "1,234.5.", "x = 3 so 12,000", "B", "\\boxed{a b}"] {
            let once = normalize_answer(raw).unwrap();
            assert_eq!(normalize_answer(&once).unwrap(), once, "{raw}");
        }
    }
}
