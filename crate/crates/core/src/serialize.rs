//! BRIDGE-style tagged input sequences: question, schema, and
//! dictionary-matched values appended after their columns.
//!
//! The serialized string is a stable wire format:
//! `<question> | <db_id> | <table> : <col> ( <v1> , <v2> ), <col> | <table2> : ...`
//! with single-space separators. Tables and columns appear in catalog
//! order; each linked value appears parenthesized after its column exactly
//! once.

use serde::{Deserialize, Serialize};

use crate::catalog::SchemaCatalog;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DbContent {
    Disabled,
    Enabled,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SerializationConfig {
    pub db_content: DbContent,
    /// Lowercase schema identifiers (the default text-to-SQL
    /// preprocessing); disable for case-sensitive experiments.
    pub lowercase_schema: bool,
}

impl Default for SerializationConfig {
    fn default() -> Self {
        SerializationConfig { db_content: DbContent::Enabled, lowercase_schema: true }
    }
}

/// Serialize question + schema + linked values. `links` are
/// (table, column, value) triples and must be empty when DB content is
/// disabled.
pub fn serialize(
    question: &str,
    catalog: &SchemaCatalog,
    links: &[(String, String, String)],
    cfg: &SerializationConfig,
) -> Result<String> {
    if cfg.db_content == DbContent::Disabled && !links.is_empty() {
        return Err(Error::Contract(
            "links must be empty when db_content is disabled".into(),
        ));
    }
    for (table, column, _) in links {
        let ok = catalog
            .table(table)
            .map(|t| t.column(column).is_some())
            .unwrap_or(false);
        if !ok {
            return Err(Error::Integrity(format!(
                "link references unknown column {table}.{column}"
            )));
        }
    }

    let case = |s: &str| {
        if cfg.lowercase_schema {
            s.to_ascii_lowercase()
        } else {
            s.to_string()
        }
    };
    let mut out = String::new();
    out.push_str(&question.to_lowercase());
    out.push_str(" | ");
    out.push_str(&case(&catalog.db_id));
    for table in &catalog.tables {
        out.push_str(" | ");
        out.push_str(&case(&table.name));
        out.push_str(" : ");
        for (i, col) in table.columns.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(&case(&col.name));
            let mut values: Vec<&str> = Vec::new();
            for (lt, lc, lv) in links {
                if lt.eq_ignore_ascii_case(&table.name)
                    && lc.eq_ignore_ascii_case(&col.name)
                    && !values.contains(&lv.as_str())
                {
                    values.push(lv);
                }
            }
            if !values.is_empty() {
                out.push_str(" ( ");
                out.push_str(&values.join(" , "));
                out.push_str(" )");
            }
        }
    }
    Ok(out)
}

/// Recover the (table, column, value) links from a serialized string.
/// Inverse of the value-tagging in [`serialize`] at the token level.
pub fn extract_links(serialized: &str) -> Vec<(String, String, String)> {
    let mut out = Vec::new();
    let mut sections = serialized.split(" | ");
    let _question = sections.next();
    let _db_id = sections.next();
    for section in sections {
        let Some((table, cols)) = section.split_once(" : ") else { continue };
        for col_part in split_top_level(cols) {
            if let Some(open) = col_part.find(" ( ") {
                let col = col_part[..open].trim();
                let inner = col_part[open + 3..].trim_end_matches(" )").trim_end_matches(')');
                for v in inner.split(" , ") {
                    out.push((table.trim().to_string(), col.to_string(), v.trim().to_string()));
                }
            }
        }
    }
    out
}

/// Split a column section on `, ` separators that are not inside a value
/// parenthesis.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            b',' if depth == 0 && i + 1 < bytes.len() && bytes[i + 1] == b' ' => {
                parts.push(s[start..i].trim());
                start = i + 2;
            }
            _ => {}
        }
        i += 1;
    }
    parts.push(s[start..].trim());
    parts
}
