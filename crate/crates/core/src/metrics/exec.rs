//! Execution-accuracy comparison against a SQLite database.

use std::path::Path;
use std::time::{Duration, Instant};

use rusqlite::types::Value;
use rusqlite::Connection;

use crate::error::{Error, Result};
use crate::sql::parser::parse_query_only;
use crate::sql::token::{lex_all, Kw, Punct, TokenKind};
use crate::sql::Profile;

pub const STATEMENT_TIMEOUT: Duration = Duration::from_secs(5);

/// Float comparison tolerance for numeric cells.
pub const NUMERIC_TOLERANCE: f64 = 1e-6;

#[derive(Debug)]
pub struct ResultSet {
    pub columns: usize,
    pub rows: Vec<Vec<Value>>,
}

/// Execute one statement with the statement timeout; `Err` covers SQL
/// errors, timeouts, and interrupts alike.
pub fn execute(conn: &Connection, sql: &str) -> Result<ResultSet> {
    execute_with_timeout(conn, sql, STATEMENT_TIMEOUT)
}

pub fn execute_with_timeout(
    conn: &Connection,
    sql: &str,
    timeout: Duration,
) -> Result<ResultSet> {
    let start = Instant::now();
    conn.progress_handler(1000, Some(move || start.elapsed() > timeout));
    let result = run_query(conn, sql);
    conn.progress_handler(1000, None::<fn() -> bool>);
    result
}

fn run_query(conn: &Connection, sql: &str) -> Result<ResultSet> {
    let mut stmt = conn.prepare(sql)?;
    let columns = stmt.column_count();
    let mut rows_out = Vec::new();
    let mut rows = stmt.query([])?;
    while let Some(row) = rows.next()? {
        let mut cells = Vec::with_capacity(columns);
        for i in 0..columns {
            cells.push(Value::from(row.get_ref(i)?));
        }
        rows_out.push(cells);
    }
    Ok(ResultSet { columns, rows: rows_out })
}

/// Does the gold query have a top-level ORDER BY? Parsed when possible,
/// with a token-scan fallback so malformed-but-executable SQL still gets a
/// sensible answer.
pub fn has_top_level_order_by(sql: &str) -> bool {
    if let Ok(q) = parse_query_only(sql, Profile::Extended) {
        return !q.order_by.is_empty();
    }
    let Ok(tokens) = lex_all(sql) else { return false };
    let mut depth = 0i32;
    let mut last_order = false;
    let mut found = false;
    for tok in &tokens {
        match &tok.kind {
            TokenKind::Punct(Punct::LParen) => depth += 1,
            TokenKind::Punct(Punct::RParen) => depth -= 1,
            TokenKind::Keyword(Kw::Order) if depth == 0 => last_order = true,
            TokenKind::Keyword(Kw::By) if depth == 0 && last_order => found = true,
            _ => last_order = false,
        }
    }
    found
}

fn value_as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Integer(i) => Some(*i as f64),
        Value::Real(r) => Some(*r),
        _ => None,
    }
}

fn cells_equal(a: &Value, b: &Value) -> bool {
    if let (Some(x), Some(y)) = (value_as_f64(a), value_as_f64(b)) {
        return (x - y).abs() <= NUMERIC_TOLERANCE;
    }
    match (a, b) {
        (Value::Null, Value::Null) => true,
        (Value::Text(x), Value::Text(y)) => x == y,
        (Value::Blob(x), Value::Blob(y)) => x == y,
        _ => false,
    }
}

fn rows_equal(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| cells_equal(x, y))
}

/// Total order on cells for multiset comparison. Near-equal floats sort
/// adjacently, which is what the pairwise tolerance check needs.
fn cmp_cell(a: &Value, b: &Value) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    fn rank(v: &Value) -> u8 {
        match v {
            Value::Null => 0,
            Value::Integer(_) | Value::Real(_) => 1,
            Value::Text(_) => 2,
            Value::Blob(_) => 3,
        }
    }
    match (rank(a), rank(b)) {
        (x, y) if x != y => x.cmp(&y),
        (1, 1) => {
            let x = value_as_f64(a).unwrap();
            let y = value_as_f64(b).unwrap();
            x.partial_cmp(&y).unwrap_or(Ordering::Equal)
        }
        _ => match (a, b) {
            (Value::Text(x), Value::Text(y)) => x.cmp(y),
            (Value::Blob(x), Value::Blob(y)) => x.cmp(y),
            _ => Ordering::Equal,
        },
    }
}

fn cmp_row(a: &[Value], b: &[Value]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = cmp_cell(x, y);
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    a.len().cmp(&b.len())
}

/// Result-set equality: same column count; identical row sequence when the
/// gold query orders its output, identical row multisets otherwise.
pub fn result_sets_equal(gold: &ResultSet, pred: &ResultSet, ordered: bool) -> bool {
    if gold.columns != pred.columns || gold.rows.len() != pred.rows.len() {
        return false;
    }
    if ordered {
        gold.rows.iter().zip(&pred.rows).all(|(a, b)| rows_equal(a, b))
    } else {
        let mut a = gold.rows.clone();
        let mut b = pred.rows.clone();
        a.sort_by(|x, y| cmp_row(x, y));
        b.sort_by(|x, y| cmp_row(x, y));
        a.iter().zip(&b).all(|(x, y)| rows_equal(x, y))
    }
}

pub fn open_readonly(db: &Path) -> Result<Connection> {
    if !db.exists() {
        return Err(Error::io(
            db,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ));
    }
    Ok(Connection::open_with_flags(
        db,
        rusqlite::OpenFlags::SQLITE_OPEN_READ_ONLY,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_db() -> Connection {
        let conn = Connection::open_in_memory().unwrap();
        conn.execute_batch(
            "CREATE TABLE employees (name TEXT, salary REAL);
             INSERT INTO employees VALUES ('a', 10.0), ('b', 30.0), ('c', 20.0);",
        )
        .unwrap();
        conn
    }

    #[test]
    fn multiset_vs_sequence_comparison() {
        let conn = test_db();
        let asc = execute(&conn, "SELECT name FROM employees ORDER BY name").unwrap();
        let desc = execute(&conn, "SELECT name FROM employees ORDER BY name DESC").unwrap();
        assert!(result_sets_equal(&asc, &desc, false));
        assert!(!result_sets_equal(&asc, &desc, true));
    }

    #[test]
    fn numeric_tolerance() {
        let conn = test_db();
        let a = execute(&conn, "SELECT 1.0").unwrap();
        let b = execute(&conn, "SELECT 1").unwrap();
        assert!(result_sets_equal(&a, &b, false));
        let c = execute(&conn, "SELECT 1.1").unwrap();
        assert!(!result_sets_equal(&a, &c, false));
    }

    #[test]
    fn order_by_detection() {
        assert!(has_top_level_order_by("SELECT a FROM t ORDER BY a"));
        assert!(!has_top_level_order_by("SELECT a FROM t"));
        assert!(!has_top_level_order_by(
            "SELECT a FROM t WHERE x IN (SELECT b FROM u ORDER BY b LIMIT 1)"
        ));
    }

    #[test]
    fn sql_errors_are_errors() {
        let conn = test_db();
        assert!(execute(&conn, "SELECT nope FROM employees").is_err());
        assert!(execute(&conn, "SELECT FROM").is_err());
    }

    #[test]
    fn timeout_interrupts_runaway_statements() {
        let conn = test_db();
        // unbounded recursive CTE: only the timeout stops it
        let runaway = "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) \
                       SELECT count(*) FROM c";
        let start = std::time::Instant::now();
        let result = execute_with_timeout(&conn, runaway, Duration::from_millis(50));
        assert!(result.is_err());
        assert!(start.elapsed() < Duration::from_secs(2), "took {:?}", start.elapsed());
        // the connection stays usable afterwards
        assert!(execute(&conn, "SELECT 1").is_ok());
    }
}
