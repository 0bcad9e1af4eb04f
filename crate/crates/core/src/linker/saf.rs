//! Schema-annotation file (SAF): semicolon-terminated records, each a
//! simple subject–verb–object phrase followed by six `key is value`
//! property clauses naming the two bound entities.

use std::path::Path;

use serde::Serialize;

use crate::catalog::SchemaCatalog;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SafEntry {
    pub phrase: String,
    pub table1: String,
    pub col1: String,
    pub dtype1: String,
    pub table2: String,
    pub col2: String,
    pub dtype2: String,
}

const PROPERTY_KEYS: &[&str] = &[
    "tableName1",
    "colName1",
    "dataType1",
    "tableName2",
    "colName2",
    "dataType2",
];

pub fn parse_saf(path: impl AsRef<Path>, catalog: Option<&SchemaCatalog>) -> Result<Vec<SafEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_saf_str(&text, catalog)
}

pub fn parse_saf_str(text: &str, catalog: Option<&SchemaCatalog>) -> Result<Vec<SafEntry>> {
    // clause -> 1-based line number of its start, for error reporting
    let mut clauses: Vec<(String, usize)> = Vec::new();
    let mut current = String::new();
    let mut clause_line = 1usize;
    let mut line = 1usize;
    for ch in text.chars() {
        if ch == ';' {
            let trimmed = current.trim();
            if !trimmed.is_empty() {
                clauses.push((trimmed.to_string(), clause_line));
            }
            current.clear();
            clause_line = line;
        } else {
            if current.trim().is_empty() {
                clause_line = line;
            }
            if ch == '\n' {
                line += 1;
            }
            current.push(ch);
        }
    }
    if !current.trim().is_empty() {
        return Err(Error::Format(format!(
            "line {clause_line}: trailing clause without terminating ';': {:?}",
            current.trim()
        )));
    }

    // (phrase, line, properties) accumulated until the next phrase clause
    type Pending = Option<(String, usize, Vec<(String, String)>)>;
    let mut entries = Vec::new();
    let mut pending: Pending = None;
    let finish = |pending: Pending,
                  entries: &mut Vec<SafEntry>|
     -> Result<()> {
        let Some((phrase, line, props)) = pending else { return Ok(()) };
        let get = |key: &str| -> Result<String> {
            props
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| Error::Format(format!("line {line}: record {phrase:?} lacks {key}")))
        };
        let entry = SafEntry {
            table1: get("tableName1")?,
            col1: get("colName1")?,
            dtype1: get("dataType1")?,
            table2: get("tableName2")?,
            col2: get("colName2")?,
            dtype2: get("dataType2")?,
            phrase,
        };
        entries.push(entry);
        Ok(())
    };

    for (clause, line) in clauses {
        let whitespace_normalized = clause.split_whitespace().collect::<Vec<_>>().join(" ");
        let property = PROPERTY_KEYS.iter().find_map(|key| {
            whitespace_normalized
                .strip_prefix(&format!("{key} is "))
                .map(|v| (key.to_string(), v.trim().to_string()))
        });
        match property {
            Some((key, value)) => match &mut pending {
                Some((_, _, props)) => props.push((key, value)),
                None => {
                    return Err(Error::Format(format!(
                        "line {line}: property clause {key:?} before any phrase"
                    )))
                }
            },
            None => {
                finish(pending.take(), &mut entries)?;
                pending = Some((whitespace_normalized, line, Vec::new()));
            }
        }
    }
    finish(pending.take(), &mut entries)?;

    if let Some(catalog) = catalog {
        for e in &entries {
            for (t, c) in [(&e.table1, &e.col1), (&e.table2, &e.col2)] {
                let Some(table) = catalog.table(t) else {
                    return Err(Error::Integrity(format!(
                        "SAF entry {:?} references unknown table {t:?}",
                        e.phrase
                    )));
                };
                if table.column(c).is_none() {
                    return Err(Error::Integrity(format!(
                        "SAF entry {:?} references unknown column {t:?}.{c:?}",
                        e.phrase
                    )));
                }
            }
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPER_ENTRY: &str = "product has price; tableName1 is PRODUCTS;\n\
        colName1 is PRODUCT_ID; dataType1 is \n\
        integer; tableName2 is PRODUCTS; colName2 \n\
        is PRICE; dataType2 is decimal;\n";

    #[test]
    fn parses_paper_sample() {
        let entries = parse_saf_str(PAPER_ENTRY, None).unwrap();
        assert_eq!(entries.len(), 1);
        let e = &entries[0];
        assert_eq!(e.phrase, "product has price");
        assert_eq!(e.table1, "PRODUCTS");
        assert_eq!(e.col1, "PRODUCT_ID");
        assert_eq!(e.dtype1, "integer");
        assert_eq!(e.table2, "PRODUCTS");
        assert_eq!(e.col2, "PRICE");
        assert_eq!(e.dtype2, "decimal");
    }

    #[test]
    fn empty_file_is_empty_list() {
        assert!(parse_saf_str("", None).unwrap().is_empty());
        assert!(parse_saf_str("\n  \n", None).unwrap().is_empty());
    }

    #[test]
    fn missing_property_is_format_error_with_line() {
        let text = "product has price; tableName1 is P; colName1 is A; dataType1 is integer;\n\
                    tableName2 is P; colName2 is B;\n";
        let err = parse_saf_str(text, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("dataType2"), "{msg}");
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn unknown_column_is_integrity_error() {
        use crate::catalog::{Column, DataType, Table};
        let catalog = SchemaCatalog::new(
            "x",
            vec![Table {
                name: "products".into(),
                columns: vec![Column { name: "product_id".into(), data_type: DataType::Integer }],
            }],
            vec![],
            vec![],
        )
        .unwrap();
        let err = parse_saf_str(PAPER_ENTRY, Some(&catalog)).unwrap_err();
        assert!(matches!(err, Error::Integrity(_)), "{err:?}");
    }

    #[test]
    fn multiple_records() {
        let text = "a has b; tableName1 is T; colName1 is A; dataType1 is integer; tableName2 is T; colName2 is B; dataType2 is text;\n\
                    c has d; tableName1 is U; colName1 is C; dataType1 is integer; tableName2 is U; colName2 is D; dataType2 is text;\n";
        let entries = parse_saf_str(text, None).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[1].phrase, "c has d");
    }
}
