use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{IoError, Result};

/// Non-blank lines with their 1-based line numbers.
pub(crate) fn numbered(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

pub(crate) fn parse_json_lines<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    numbered(text).map(|(line, s)| serde_json::from_str(s).map_err(|e| IoError::json(line, e))).collect()
}

pub(crate) fn write_json_lines<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).map_err(|e| IoError::Data(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}
