//! Database schema catalogs: loading from Spider-format schema documents and
//! from SQLite files, plus the offline value dictionary used by the linker.
//!
//! Catalogs are immutable after construction and safe to share across
//! threads. Identifier lookups are case-insensitive; original casing is
//! preserved for display.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed set of column data types. SQLite affinities and Spider type
/// strings are mapped onto this set at load time; anything unrecognized
/// becomes `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    Text,
    Integer,
    Decimal,
    Date,
    Boolean,
    Other,
}

impl DataType {
    pub fn parse(s: &str) -> DataType {
        let u = s.trim().to_ascii_uppercase();
        if u.contains("INT") {
            DataType::Integer
        } else if u.contains("CHAR") || u.contains("TEXT") || u.contains("CLOB") || u == "STRING" {
            DataType::Text
        } else if u.contains("REAL")
            || u.contains("DECIMAL")
            || u.contains("NUMERIC")
            || u.contains("FLOA")
            || u.contains("DOUB")
            || u == "NUMBER"
        {
            DataType::Decimal
        } else if u.contains("DATE") || u.contains("TIME") {
            DataType::Date
        } else if u.contains("BOOL") {
            DataType::Boolean
        } else {
            DataType::Other
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DataType::Text => "text",
            DataType::Integer => "integer",
            DataType::Decimal => "decimal",
            DataType::Date => "date",
            DataType::Boolean => "boolean",
            DataType::Other => "other",
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, DataType::Integer | DataType::Decimal)
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub data_type: DataType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
}

impl Table {
    /// Case-insensitive column lookup.
    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name.eq_ignore_ascii_case(name))
    }
}

/// Reference to one column: indices into `tables` and its `columns`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: usize,
    pub column: usize,
}

/// Schema for one database: tables, columns, and key constraints.
/// The Spider `*` pseudo-column is represented implicitly, never as a
/// `Table` column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaCatalog {
    pub db_id: String,
    pub tables: Vec<Table>,
    pub foreign_keys: Vec<(ColumnRef, ColumnRef)>,
    pub primary_keys: Vec<ColumnRef>,
}

impl SchemaCatalog {
    /// Build a catalog, enforcing the structural invariants: unique table
    /// names (case-insensitive), unique column names per table, at least one
    /// column per table, and resolvable key references.
    pub fn new(
        db_id: impl Into<String>,
        tables: Vec<Table>,
        foreign_keys: Vec<(ColumnRef, ColumnRef)>,
        primary_keys: Vec<ColumnRef>,
    ) -> Result<SchemaCatalog> {
        let catalog = SchemaCatalog {
            db_id: db_id.into(),
            tables,
            foreign_keys,
            primary_keys,
        };
        catalog.validate()?;
        Ok(catalog)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for t in &self.tables {
            if !seen.insert(t.name.to_ascii_lowercase()) {
                return Err(Error::Integrity(format!("duplicate table name '{}'", t.name)));
            }
            if t.columns.is_empty() {
                return Err(Error::Integrity(format!("table '{}' has no columns", t.name)));
            }
            let mut cols = HashSet::new();
            for c in &t.columns {
                if !cols.insert(c.name.to_ascii_lowercase()) {
                    return Err(Error::Integrity(format!(
                        "duplicate column name '{}' in table '{}'",
                        c.name, t.name
                    )));
                }
            }
        }
        let check = |r: &ColumnRef| -> Result<()> {
            let t = self.tables.get(r.table).ok_or_else(|| {
                Error::Integrity(format!("key references unknown table index {}", r.table))
            })?;
            if r.column >= t.columns.len() {
                return Err(Error::Integrity(format!(
                    "key references unknown column index {} of table '{}'",
                    r.column, t.name
                )));
            }
            Ok(())
        };
        for (a, b) in &self.foreign_keys {
            check(a)?;
            check(b)?;
        }
        for p in &self.primary_keys {
            check(p)?;
        }
        Ok(())
    }

    /// Case-insensitive table lookup.
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn table_index(&self, name: &str) -> Option<usize> {
        self.tables.iter().position(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn resolve(&self, r: &ColumnRef) -> (&Table, &Column) {
        let t = &self.tables[r.table];
        (t, &t.columns[r.column])
    }

    /// Load a catalog from a Spider-format schema document.
    pub fn load_spider(path: impl AsRef<Path>) -> Result<SchemaCatalog> {
        let path = path.as_ref();
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_spider_json(&data)
    }

    /// Parse a Spider-format schema document from a JSON string.
    pub fn from_spider_json(data: &str) -> Result<SchemaCatalog> {
        let doc: SpiderDoc = serde_json::from_str(data)
            .map_err(|e| Error::Format(format!("spider schema document: {e}")))?;
        doc.into_catalog()
    }

    /// Emit the catalog as a Spider-format schema document. Loading the
    /// result yields an identical catalog.
    pub fn to_spider_json(&self) -> String {
        let doc = SpiderDoc::from_catalog(self);
        serde_json::to_string_pretty(&doc).expect("spider doc serializes")
    }

    /// Load a catalog from a SQLite database file. Declared column
    /// affinities are mapped onto the closed data-type set.
    pub fn load_db(path: impl AsRef<Path>) -> Result<SchemaCatalog> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            ));
        }
        let conn = rusqlite::Connection::open_with_flags(
            path,
            rusqlite::OpenFlags::SQLITE_OPEN_READ_ONLY,
        )?;
        let db_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "db".to_string());

        let mut names: Vec<String> = Vec::new();
        {
            let mut stmt = conn.prepare(
                "SELECT name FROM sqlite_master WHERE type = 'table' \
                 AND name NOT LIKE 'sqlite_%' ORDER BY rowid",
            )?;
            let rows = stmt.query_map([], |row| row.get::<_, String>(0))?;
            for name in rows {
                names.push(name?);
            }
        }

        let mut tables = Vec::new();
        let mut primary_keys = Vec::new();
        for (ti, name) in names.iter().enumerate() {
            let mut stmt = conn.prepare(&format!("PRAGMA table_info({})", quote_ident(name)))?;
            let mut columns = Vec::new();
            let mut pks: Vec<(i64, usize)> = Vec::new();
            let rows = stmt.query_map([], |row| {
                Ok((
                    row.get::<_, String>(1)?,
                    row.get::<_, String>(2)?,
                    row.get::<_, i64>(5)?,
                ))
            })?;
            for row in rows {
                let (col_name, decl_type, pk) = row?;
                if pk > 0 {
                    pks.push((pk, columns.len()));
                }
                columns.push(Column {
                    name: col_name,
                    data_type: DataType::parse(&decl_type),
                });
            }
            pks.sort();
            for (_, ci) in pks {
                primary_keys.push(ColumnRef { table: ti, column: ci });
            }
            tables.push(Table {
                name: name.clone(),
                columns,
            });
        }

        let mut foreign_keys = Vec::new();
        for (ti, name) in names.iter().enumerate() {
            let mut stmt =
                conn.prepare(&format!("PRAGMA foreign_key_list({})", quote_ident(name)))?;
            let rows = stmt.query_map([], |row| {
                Ok((
                    row.get::<_, String>(2)?,
                    row.get::<_, String>(3)?,
                    row.get::<_, Option<String>>(4)?,
                ))
            })?;
            for row in rows {
                let (target_table, from_col, to_col) = row?;
                let from_ci = tables[ti]
                    .columns
                    .iter()
                    .position(|c| c.name.eq_ignore_ascii_case(&from_col));
                let tti = names
                    .iter()
                    .position(|n| n.eq_ignore_ascii_case(&target_table));
                let (Some(from_ci), Some(tti)) = (from_ci, tti) else {
                    continue;
                };
                // Referencing the implicit rowid is legal SQLite; only record
                // fully resolvable column pairs.
                let to_ci = match to_col {
                    Some(c) => tables[tti]
                        .columns
                        .iter()
                        .position(|x| x.name.eq_ignore_ascii_case(&c)),
                    None => None,
                };
                if let Some(to_ci) = to_ci {
                    foreign_keys.push((
                        ColumnRef { table: ti, column: from_ci },
                        ColumnRef { table: tti, column: to_ci },
                    ));
                }
            }
        }

        SchemaCatalog::new(db_id, tables, foreign_keys, primary_keys)
    }
}

fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

/// Spider schema document wire format.
#[derive(Serialize, Deserialize)]
struct SpiderDoc {
    db_id: String,
    table_names_original: Vec<String>,
    table_names: Vec<String>,
    column_names_original: Vec<(i64, String)>,
    column_names: Vec<(i64, String)>,
    column_types: Vec<String>,
    primary_keys: Vec<usize>,
    foreign_keys: Vec<(usize, usize)>,
}

impl SpiderDoc {
    fn into_catalog(self) -> Result<SchemaCatalog> {
        if self.column_names_original.len() != self.column_types.len() {
            return Err(Error::Format(format!(
                "column_types length {} does not match column_names_original length {}",
                self.column_types.len(),
                self.column_names_original.len()
            )));
        }
        let n_tables = self.table_names_original.len();
        let mut tables: Vec<Table> = self
            .table_names_original
            .iter()
            .map(|n| Table { name: n.clone(), columns: Vec::new() })
            .collect();

        // Flat column index -> (table, column) within the catalog. Entry 0 is
        // the `*` pseudo-column and stays unmapped.
        let mut flat: Vec<Option<ColumnRef>> = vec![None; self.column_names_original.len()];
        for (i, (ti, name)) in self.column_names_original.iter().enumerate() {
            if *ti < 0 {
                if name != "*" {
                    return Err(Error::Format(format!(
                        "column_names_original[{i}] has table index -1 but name {name:?}"
                    )));
                }
                continue;
            }
            let ti = *ti as usize;
            if ti >= n_tables {
                return Err(Error::Format(format!(
                    "column_names_original[{i}] references unknown table index {ti}"
                )));
            }
            flat[i] = Some(ColumnRef { table: ti, column: tables[ti].columns.len() });
            tables[ti].columns.push(Column {
                name: name.clone(),
                data_type: DataType::parse(&self.column_types[i]),
            });
        }

        let resolve = |idx: usize, what: &str| -> Result<ColumnRef> {
            flat.get(idx).copied().flatten().ok_or_else(|| {
                Error::Integrity(format!("{what} references dangling column index {idx}"))
            })
        };
        let mut primary_keys = Vec::new();
        for &p in &self.primary_keys {
            primary_keys.push(resolve(p, "primary_keys")?);
        }
        let mut foreign_keys = Vec::new();
        for &(a, b) in &self.foreign_keys {
            foreign_keys.push((resolve(a, "foreign_keys")?, resolve(b, "foreign_keys")?));
        }

        SchemaCatalog::new(self.db_id, tables, foreign_keys, primary_keys)
    }

    fn from_catalog(catalog: &SchemaCatalog) -> SpiderDoc {
        let mut column_names_original = vec![(-1i64, "*".to_string())];
        let mut column_types = vec!["text".to_string()];
        // (table, column) -> flat index, for key emission.
        let mut flat_of = BTreeMap::new();
        for (ti, t) in catalog.tables.iter().enumerate() {
            for (ci, c) in t.columns.iter().enumerate() {
                flat_of.insert((ti, ci), column_names_original.len());
                column_names_original.push((ti as i64, c.name.clone()));
                column_types.push(c.data_type.as_str().to_string());
            }
        }
        SpiderDoc {
            db_id: catalog.db_id.clone(),
            table_names_original: catalog.tables.iter().map(|t| t.name.clone()).collect(),
            table_names: catalog
                .tables
                .iter()
                .map(|t| t.name.to_ascii_lowercase().replace('_', " "))
                .collect(),
            column_names: column_names_original
                .iter()
                .map(|(ti, n)| (*ti, n.to_ascii_lowercase().replace('_', " ")))
                .collect(),
            column_names_original,
            column_types,
            primary_keys: catalog
                .primary_keys
                .iter()
                .map(|r| flat_of[&(r.table, r.column)])
                .collect(),
            foreign_keys: catalog
                .foreign_keys
                .iter()
                .map(|(a, b)| (flat_of[&(a.table, a.column)], flat_of[&(b.table, b.column)]))
                .collect(),
        }
    }
}

/// Normalize a cell value for dictionary keying: lowercase, trim outer
/// whitespace, collapse internal whitespace runs to one space.
pub fn normalize_value(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut last_space = true;
    for ch in s.trim().chars() {
        if ch.is_whitespace() {
            if !last_space {
                out.push(' ');
                last_space = true;
            }
        } else {
            for lc in ch.to_lowercase() {
                out.push(lc);
            }
            last_space = false;
        }
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Offline dictionary from normalized text-cell values to the columns
/// containing them. Built once from the database; query-time lookups never
/// touch the database.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValueDictionary {
    /// normalized value -> list of (table name, column name)
    pub entries: BTreeMap<String, Vec<(String, String)>>,
    /// Columns whose distinct-value count exceeded the truncation limit.
    /// These contribute no entries at all.
    pub truncated_columns: Vec<(String, String)>,
}

pub const DEFAULT_MAX_VALUES_PER_COLUMN: usize = 10_000;

impl ValueDictionary {
    /// Scan every text column of `db` and build the value dictionary.
    /// Numeric columns are excluded; numbers are matched syntactically at
    /// link time. Columns with more than `max_values_per_column` distinct
    /// values are dropped entirely and flagged in `truncated_columns`.
    pub fn build(
        catalog: &SchemaCatalog,
        db: impl AsRef<Path>,
        max_values_per_column: usize,
    ) -> Result<ValueDictionary> {
        if max_values_per_column == 0 {
            return Err(Error::Contract(
                "max_values_per_column must be at least 1".into(),
            ));
        }
        let db = db.as_ref();
        let conn = rusqlite::Connection::open_with_flags(
            db,
            rusqlite::OpenFlags::SQLITE_OPEN_READ_ONLY,
        )?;
        let mut dict = ValueDictionary::default();
        for table in &catalog.tables {
            // The db must actually contain the catalog's tables.
            let present: i64 = conn.query_row(
                "SELECT count(*) FROM sqlite_master WHERE type='table' AND lower(name) = lower(?1)",
                [&table.name],
                |row| row.get(0),
            )?;
            if present == 0 {
                return Err(Error::Integrity(format!(
                    "catalog table '{}' not present in database {}",
                    table.name,
                    db.display()
                )));
            }
            for col in &table.columns {
                if col.data_type != DataType::Text {
                    continue;
                }
                let sql = format!(
                    "SELECT DISTINCT {} FROM {} WHERE {} IS NOT NULL LIMIT {}",
                    quote_ident(&col.name),
                    quote_ident(&table.name),
                    quote_ident(&col.name),
                    max_values_per_column + 1
                );
                let mut stmt = conn.prepare(&sql)?;
                let mut values = Vec::new();
                let rows = stmt.query_map([], |row| row.get::<_, String>(0))?;
                for v in rows {
                    values.push(v?);
                }
                if values.len() > max_values_per_column {
                    dict.truncated_columns
                        .push((table.name.clone(), col.name.clone()));
                    continue;
                }
                for v in values {
                    let key = normalize_value(&v);
                    if key.is_empty() {
                        continue;
                    }
                    let targets = dict.entries.entry(key).or_default();
                    let pair = (table.name.clone(), col.name.clone());
                    if !targets.contains(&pair) {
                        targets.push(pair);
                    }
                }
            }
        }
        Ok(dict)
    }

    pub fn lookup(&self, normalized: &str) -> Option<&[(String, String)]> {
        self.entries.get(normalized).map(|v| v.as_slice())
    }

    /// Longest key length in characters, used to bound the matcher window.
    pub fn max_key_words(&self) -> usize {
        self.entries
            .keys()
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spider_doc_one_table() -> String {
        serde_json::json!({
            "db_id": "hr",
            "table_names_original": ["employees"],
            "table_names": ["employees"],
            "column_names_original": [
                [-1, "*"],
                [0, "emp_no"], [0, "name"], [0, "birthdate"], [0, "hire_date"],
                [0, "leave_date"], [0, "dept"], [0, "manager"], [0, "salary"], [0, "bonus"]
            ],
            "column_names": [
                [-1, "*"],
                [0, "emp no"], [0, "name"], [0, "birthdate"], [0, "hire date"],
                [0, "leave date"], [0, "dept"], [0, "manager"], [0, "salary"], [0, "bonus"]
            ],
            "column_types": ["text", "number", "text", "time", "time", "time", "text", "text", "number", "number"],
            "primary_keys": [1],
            "foreign_keys": []
        })
        .to_string()
    }

    #[test]
    fn spider_single_table() {
        let cat = SchemaCatalog::from_spider_json(&spider_doc_one_table()).unwrap();
        assert_eq!(cat.tables.len(), 1);
        assert_eq!(cat.tables[0].name, "employees");
        assert_eq!(cat.tables[0].columns.len(), 9);
        assert_eq!(cat.primary_keys.len(), 1);
        assert_eq!(cat.resolve(&cat.primary_keys[0]).1.name, "emp_no");
    }

    #[test]
    fn spider_dangling_key_index() {
        let mut v: serde_json::Value = serde_json::from_str(&spider_doc_one_table()).unwrap();
        v["foreign_keys"] = serde_json::json!([[2, 99]]);
        let err = SchemaCatalog::from_spider_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::Integrity(_)), "got {err:?}");
    }

    #[test]
    fn spider_missing_field_named() {
        let mut v: serde_json::Value = serde_json::from_str(&spider_doc_one_table()).unwrap();
        v.as_object_mut().unwrap().remove("column_types");
        let err = SchemaCatalog::from_spider_json(&v.to_string()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("column_types"), "error should name the field: {msg}");
    }

    #[test]
    fn spider_round_trip() {
        let cat = SchemaCatalog::from_spider_json(&spider_doc_one_table()).unwrap();
        let emitted = cat.to_spider_json();
        let back = SchemaCatalog::from_spider_json(&emitted).unwrap();
        assert_eq!(cat, back);
    }

    #[test]
    fn duplicate_table_rejected() {
        let t = Table {
            name: "T".into(),
            columns: vec![Column { name: "a".into(), data_type: DataType::Text }],
        };
        let t2 = Table {
            name: "t".into(),
            columns: vec![Column { name: "a".into(), data_type: DataType::Text }],
        };
        assert!(SchemaCatalog::new("x", vec![t, t2], vec![], vec![]).is_err());
    }

    #[test]
    fn empty_db_loads_empty_catalog() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.sqlite");
        rusqlite::Connection::open(&path).unwrap();
        let cat = SchemaCatalog::load_db(&path).unwrap();
        assert!(cat.tables.is_empty());
    }

    #[test]
    fn db_schema_and_dictionary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hr.sqlite");
        let conn = rusqlite::Connection::open(&path).unwrap();
        conn.execute_batch(
            "CREATE TABLE employees (
                emp_no INTEGER PRIMARY KEY,
                name TEXT,
                dept TEXT,
                salary DECIMAL
            );
            INSERT INTO employees VALUES (1, 'Ada', 'Sales', 100.0);
            INSERT INTO employees VALUES (2, 'Bob', 'R&D', 120.0);
            INSERT INTO employees VALUES (3, 'Cyd', ' Sales ', 90.0);",
        )
        .unwrap();
        drop(conn);

        let cat = SchemaCatalog::load_db(&path).unwrap();
        assert_eq!(cat.tables.len(), 1);
        let salary = cat.tables[0].column("salary").unwrap();
        assert_eq!(salary.data_type, DataType::Decimal);

        let dict = ValueDictionary::build(&cat, &path, 100).unwrap();
        // ' Sales ' normalizes onto the same key as 'Sales'.
        assert_eq!(
            dict.lookup("sales").unwrap(),
            &[("employees".to_string(), "dept".to_string())]
        );
        assert_eq!(
            dict.lookup("r&d").unwrap(),
            &[("employees".to_string(), "dept".to_string())]
        );
        // numeric column contributes nothing
        assert!(dict.lookup("100").is_none());
        // normalization is idempotent on keys
        for k in dict.entries.keys() {
            assert_eq!(&normalize_value(k), k);
        }
    }

    #[test]
    fn dictionary_truncation_drops_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("big.sqlite");
        let conn = rusqlite::Connection::open(&path).unwrap();
        conn.execute_batch("CREATE TABLE t (v TEXT, w TEXT)").unwrap();
        for i in 0..20 {
            conn.execute(
                "INSERT INTO t VALUES (?1, ?2)",
                rusqlite::params![format!("value {i}"), "constant"],
            )
            .unwrap();
        }
        drop(conn);
        let cat = SchemaCatalog::load_db(&path).unwrap();
        let dict = ValueDictionary::build(&cat, &path, 5).unwrap();
        assert_eq!(dict.truncated_columns, vec![("t".to_string(), "v".to_string())]);
        assert!(dict.lookup("value 3").is_none(), "truncated column must not partially link");
        assert!(dict.lookup("constant").is_some());
    }

    #[test]
    fn value_normalization() {
        assert_eq!(normalize_value("  ACME   Corp "), "acme corp");
        assert_eq!(normalize_value("x"), "x");
        assert_eq!(normalize_value("  "), "");
    }
}
