//! Synthetic fixture corpora: seeded databases plus question/SQL pairs
//! sized to fixed train/dev/test splits, with the special-query variants
//! (string functions, CTEs) used by the profile-split experiments.

pub mod fixtures;
pub mod templates;

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::SchemaCatalog;
use crate::error::{Error, Result};
use crate::sql::ast::{Expr, Query};
use crate::sql::parser::parse_query_only;
use crate::sql::Profile;

pub use fixtures::Db;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Base,
    Fnc,
    With,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Variant> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Some(Variant::Base),
            "fnc" => Some(Variant::Fnc),
            "with" => Some(Variant::With),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub db: Db,
    pub variant: Variant,
    /// (train, dev, test) counts.
    pub splits: (usize, usize, usize),
    pub seed: u64,
}

impl CorpusSpec {
    pub fn total(&self) -> usize {
        self.splits.0 + self.splits.1 + self.splits.2
    }

    fn validate(&self) -> Result<()> {
        let (a, b, c) = self.splits;
        if a == 0 || b == 0 || c == 0 {
            return Err(Error::Contract("split counts must be positive".into()));
        }
        if self.variant == Variant::With && self.db == Db::In {
            return Err(Error::Contract(
                "the WITH variant exists only for the HR and WH schemas".into(),
            ));
        }
        Ok(())
    }
}

/// Paper split sizes for the base corpora.
pub fn paper_base_splits(db: Db) -> (usize, usize, usize) {
    match db {
        Db::Hr => (99, 10, 78),
        Db::Wh => (146, 16, 40),
        Db::In => (145, 18, 46),
    }
}

/// split sizes for the CTE corpora.
pub fn paper_with_splits(db: Db) -> Option<(usize, usize, usize)> {
    match db {
        Db::Hr => Some((35, 4, 8)),
        Db::Wh => Some((18, 3, 7)),
        Db::In => None,
    }
}

/// One corpus line: the record format shared with the metrics layer.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CorpusRecord {
    pub question: String,
    pub gold: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pred: Option<String>,
    pub db_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub db: Db,
    pub db_id: String,
    pub variant: Variant,
    pub seed: u64,
    pub splits: (usize, usize, usize),
    pub db_file: String,
    pub files: Vec<String>,
}

#[derive(Debug)]
pub struct Generated {
    pub db_path: PathBuf,
    pub schema_path: PathBuf,
    pub manifest_path: PathBuf,
    pub split_paths: [PathBuf; 3],
    pub records: [Vec<CorpusRecord>; 3],
    pub catalog: SchemaCatalog,
}

fn rng_for(seed: u64, db: Db, salt: u64) -> ChaCha8Rng {
    let db_tag = match db {
        Db::Hr => 1u64,
        Db::Wh => 2,
        Db::In => 3,
    };
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(db_tag << 8).wrapping_add(salt))
}

fn has_rows(conn: &rusqlite::Connection, sql: &str) -> bool {
    let Ok(mut stmt) = conn.prepare(sql) else { return false };
    let Ok(mut rows) = stmt.query([]) else { return false };
    matches!(rows.next(), Ok(Some(_)))
}

/// Generate the fixture database and corpus files for `spec` into
/// `out_dir`. Deterministic: the same spec and seed produce byte-identical
/// outputs. Every gold query returns at least one row on its database.
pub fn generate(spec: &CorpusSpec, out_dir: impl AsRef<Path>) -> Result<Generated> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let db_path = out_dir.join(format!("{}.sqlite", spec.db.db_id()));
    if db_path.exists() {
        std::fs::remove_file(&db_path).map_err(|e| Error::io(&db_path, e))?;
    }
    let conn = rusqlite::Connection::open(&db_path)?;
    // DB content depends only on (db, seed), shared across variants
    let mut content_rng = rng_for(spec.seed, spec.db, 0);
    let data = fixtures::populate(spec.db, &conn, &mut content_rng)?;
    let catalog = SchemaCatalog::load_db(&db_path)?;

    // question/SQL pairs
    let pool = templates::pool(spec.db, spec.variant);
    if pool.is_empty() {
        return Err(Error::Generation(format!(
            "no templates for {:?} {:?}",
            spec.db, spec.variant
        )));
    }
    let variant_tag = match spec.variant {
        Variant::Base => 10,
        Variant::Fnc => 20,
        Variant::With => 30,
    };
    let mut pair_rng = rng_for(spec.seed, spec.db, variant_tag);
    let total = spec.total();
    let mut pairs: Vec<(String, String)> = Vec::with_capacity(total);
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut attempts = 0usize;
    let max_attempts = total * 400;
    while pairs.len() < total {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Generation(format!(
                "template pool exhausted after {attempts} attempts: produced {} of {} distinct \
                 non-empty pairs for {:?} {:?}",
                pairs.len(),
                total,
                spec.db,
                spec.variant
            )));
        }
        let template = &pool[pair_rng.gen_range(0..pool.len())];
        let (question, sql) = (template.gen)(&mut pair_rng, &data);
        let key = (question.clone(), sql.clone());
        if seen.contains(&key) {
            continue;
        }
        if !has_rows(&conn, &sql) {
            continue;
        }
        seen.insert(key);
        pairs.push((question, sql));
    }

    let mut records: Vec<CorpusRecord> = pairs
        .into_iter()
        .map(|(question, gold)| CorpusRecord {
            question,
            gold,
            pred: None,
            db_id: spec.db.db_id().to_string(),
        })
        .collect();

    if spec.variant == Variant::Fnc {
        records = apply_fnc_transform(&records, &catalog)?;
        for r in &records {
            debug_assert!(has_rows(&conn, &r.gold), "fnc transform emptied {}", r.gold);
        }
    }

    // every gold must parse under the extended profile
    for r in &records {
        parse_query_only(&r.gold, Profile::Extended).map_err(|e| {
            Error::Generation(format!("generated gold does not parse: {} ({e})", r.gold))
        })?;
    }

    let (train_n, dev_n, _) = spec.splits;
    let split_names = ["train", "dev", "test"];
    let ranges = [0..train_n, train_n..train_n + dev_n, train_n + dev_n..total];
    let mut split_paths = Vec::new();
    let mut split_records: Vec<Vec<CorpusRecord>> = Vec::new();
    for (name, range) in split_names.iter().zip(ranges) {
        let path = out_dir.join(format!("{name}.jsonl"));
        let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        for r in &records[range.clone()] {
            let line = serde_json::to_string(r)?;
            writeln!(f, "{line}").map_err(|e| Error::io(&path, e))?;
        }
        split_paths.push(path);
        split_records.push(records[range].to_vec());
    }

    let schema_path = out_dir.join("schema.json");
    std::fs::write(&schema_path, catalog.to_spider_json()).map_err(|e| Error::io(&schema_path, e))?;
    let saf_path = out_dir.join(format!("{}.saf", spec.db.db_id()));
    std::fs::write(&saf_path, fixtures::saf_text(spec.db)).map_err(|e| Error::io(&saf_path, e))?;
    let trf_path = out_dir.join("default.trf");
    std::fs::write(&trf_path, fixtures::DEFAULT_TRF).map_err(|e| Error::io(&trf_path, e))?;

    let manifest = Manifest {
        db: spec.db,
        db_id: spec.db.db_id().to_string(),
        variant: spec.variant,
        seed: spec.seed,
        splits: spec.splits,
        db_file: db_path.file_name().unwrap().to_string_lossy().into_owned(),
        files: split_names.iter().map(|n| format!("{n}.jsonl")).collect(),
    };
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)
        .map_err(|e| Error::io(&manifest_path, e))?;

    let mut it = split_records.into_iter();
    Ok(Generated {
        db_path,
        schema_path,
        manifest_path,
        split_paths: split_paths.try_into().expect("three splits"),
        records: [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()],
        catalog,
    })
}

/// Rewrite every string-equality comparison on a text-typed column from
/// `col = 'v'` to `lower(trim(col)) = lower(trim('v'))`. Questions are
/// untouched; non-string comparisons are untouched.
pub fn apply_fnc_transform(
    records: &[CorpusRecord],
    catalog: &SchemaCatalog,
) -> Result<Vec<CorpusRecord>> {
    records
        .iter()
        .map(|r| {
            let mut query = parse_query_only(&r.gold, Profile::Extended)?;
            fnc_rewrite_query(&mut query, catalog);
            Ok(CorpusRecord {
                question: r.question.clone(),
                gold: query.to_string(),
                pred: r.pred.clone(),
                db_id: r.db_id.clone(),
            })
        })
        .collect()
}

fn column_is_text(catalog: &SchemaCatalog, name: &str) -> bool {
    catalog
        .tables
        .iter()
        .filter_map(|t| t.column(name))
        .any(|c| c.data_type == crate::catalog::DataType::Text)
}

fn fnc_rewrite_query(query: &mut Query, catalog: &SchemaCatalog) {
    for cte in &mut query.ctes {
        fnc_rewrite_query(&mut cte.body, catalog);
    }
    for select in std::iter::once(&mut query.first).chain(query.ops.iter_mut().map(|(_, s)| s)) {
        for join in &mut select.from.joins {
            if let Some(on) = &mut join.on {
                fnc_rewrite_expr(on, catalog);
            }
            if let crate::sql::ast::TableFactor::Derived(q) = &mut join.table.factor {
                fnc_rewrite_query(q, catalog);
            }
        }
        if let crate::sql::ast::TableFactor::Derived(q) = &mut select.from.first.factor {
            fnc_rewrite_query(q, catalog);
        }
        if let Some(w) = &mut select.where_clause {
            fnc_rewrite_expr(w, catalog);
        }
        if let Some(h) = &mut select.having {
            fnc_rewrite_expr(h, catalog);
        }
    }
}

fn wrap_lower_trim(e: Expr) -> Expr {
    use crate::sql::ast::StrFunc;
    Expr::Func {
        func: StrFunc::Lower,
        arg: Box::new(Expr::Func { func: StrFunc::Trim, arg: Box::new(e) }),
    }
}

fn fnc_rewrite_expr(expr: &mut Expr, catalog: &SchemaCatalog) {
    match expr {
        Expr::Cmp { left, op, right } => {
            if *op == crate::sql::ast::CmpOp::Eq {
                let column_text = match left.as_ref() {
                    Expr::Column { name, .. } => column_is_text(catalog, &name.name),
                    _ => false,
                };
                if column_text && matches!(right.as_ref(), Expr::StringLit { .. }) {
                    let l = std::mem::replace(
                        left,
                        Box::new(Expr::Number { text: String::new(), offset: 0 }),
                    );
                    let r = std::mem::replace(
                        right,
                        Box::new(Expr::Number { text: String::new(), offset: 0 }),
                    );
                    **left = wrap_lower_trim(*l);
                    **right = wrap_lower_trim(*r);
                    return;
                }
            }
            if let Expr::Subquery(q) = right.as_mut() {
                fnc_rewrite_query(q, catalog);
            }
        }
        Expr::And(parts) | Expr::Or(parts) => {
            for p in parts {
                fnc_rewrite_expr(p, catalog);
            }
        }
        Expr::Not(e) | Expr::Group(e) => fnc_rewrite_expr(e, catalog),
        Expr::InSubquery { query, .. } => fnc_rewrite_query(query, catalog),
        _ => {}
    }
}

/// Load a corpus file, validating that every gold query parses under the
/// extended profile.
pub fn load(path: impl AsRef<Path>) -> Result<Vec<CorpusRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord = serde_json::from_str(line).map_err(|e| Error::Load {
            line: i + 1,
            message: format!("bad record: {e}"),
        })?;
        parse_query_only(&record.gold, Profile::Extended).map_err(|e| Error::Load {
            line: i + 1,
            message: format!("gold query does not parse: {e}"),
        })?;
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hr_base_generation_matches_splits() {
        let dir = tempfile::tempdir().unwrap();
        let spec = CorpusSpec {
            db: Db::Hr,
            variant: Variant::Base,
            splits: (20, 5, 8),
            seed: 7,
        };
        let gen = generate(&spec, dir.path()).unwrap();
        assert_eq!(gen.records[0].len(), 20);
        assert_eq!(gen.records[1].len(), 5);
        assert_eq!(gen.records[2].len(), 8);
        assert_eq!(gen.catalog.tables.len(), 1);
        assert_eq!(gen.catalog.tables[0].columns.len(), 9);

        let loaded = load(&gen.split_paths[0]).unwrap();
        assert_eq!(loaded.len(), 20);
        assert_eq!(loaded[0], gen.records[0][0]);
    }

    #[test]
    fn generation_is_deterministic() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let spec = CorpusSpec {
            db: Db::Wh,
            variant: Variant::Base,
            splits: (12, 3, 3),
            seed: 42,
        };
        let g1 = generate(&spec, dir1.path()).unwrap();
        let g2 = generate(&spec, dir2.path()).unwrap();
        assert_eq!(
            std::fs::read(&g1.db_path).unwrap(),
            std::fs::read(&g2.db_path).unwrap(),
            "database files must be byte-identical"
        );
        for (a, b) in g1.split_paths.iter().zip(&g2.split_paths) {
            assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        }
    }

    #[test]
    fn fnc_transform_rewrites_text_equalities() {
        let dir = tempfile::tempdir().unwrap();
        let spec = CorpusSpec { db: Db::Hr, variant: Variant::Base, splits: (5, 2, 2), seed: 3 };
        let gen = generate(&spec, dir.path()).unwrap();

        let record = CorpusRecord {
            question: "List the names of employees in the Sales department.".into(),
            gold: "SELECT name FROM employees WHERE dept = 'Sales'".into(),
            pred: None,
            db_id: "hr".into(),
        };
        let out = apply_fnc_transform(std::slice::from_ref(&record), &gen.catalog).unwrap();
        assert_eq!(
            out[0].gold,
            "SELECT name FROM employees WHERE lower(trim(dept)) = lower(trim('Sales'))"
        );
        assert_eq!(out[0].question, record.question);

        let numeric = CorpusRecord {
            question: "q".into(),
            gold: "SELECT name FROM employees WHERE salary > 10".into(),
            pred: None,
            db_id: "hr".into(),
        };
        let out = apply_fnc_transform(std::slice::from_ref(&numeric), &gen.catalog).unwrap();
        assert_eq!(out[0].gold, numeric.gold);
    }

    #[test]
    fn fnc_variant_queries_all_use_string_functions() {
        let dir = tempfile::tempdir().unwrap();
        let spec = CorpusSpec { db: Db::Hr, variant: Variant::Fnc, splits: (10, 3, 3), seed: 5 };
        let gen = generate(&spec, dir.path()).unwrap();
        for split in &gen.records {
            for r in split {
                assert!(
                    r.gold.contains("lower(trim("),
                    "fnc gold lacks string functions: {}",
                    r.gold
                );
            }
        }
    }

    #[test]
    fn with_variant_queries_all_use_cte() {
        let dir = tempfile::tempdir().unwrap();
        let spec = CorpusSpec { db: Db::Wh, variant: Variant::With, splits: (8, 2, 3), seed: 5 };
        let gen = generate(&spec, dir.path()).unwrap();
        for split in &gen.records {
            for r in split {
                assert!(r.gold.starts_with("WITH "), "with gold lacks CTE: {}", r.gold);
            }
        }
    }

    #[test]
    fn with_variant_rejected_for_in_db() {
        let spec = CorpusSpec { db: Db::In, variant: Variant::With, splits: (1, 1, 1), seed: 1 };
        assert!(matches!(generate(&spec, "/tmp/never"), Err(Error::Contract(_))));
    }

    #[test]
    fn load_rejects_corrupt_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            "{\"question\":\"q\",\"gold\":\"SELECT a FROM t\",\"db_id\":\"x\"}\nnot json\n",
        )
        .unwrap();
        let err = load(&path).unwrap_err();
        assert!(matches!(err, Error::Load { line: 2, .. }), "{err:?}");

        let path2 = dir.path().join("badsql.jsonl");
        std::fs::write(
            &path2,
            "{\"question\":\"q\",\"gold\":\"SELECT FROM nothing\",\"db_id\":\"x\"}\n",
        )
        .unwrap();
        let err = load(&path2).unwrap_err();
        assert!(matches!(err, Error::Load { line: 1, .. }), "{err:?}");

        let empty = dir.path().join("empty.jsonl");
        std::fs::write(&empty, "").unwrap();
        assert!(load(&empty).unwrap().is_empty());
    }
}
