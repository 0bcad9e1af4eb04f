//! Properties of the generated fixtures that the rest of the toolkit
//! relies on: schema shapes, the special-query families, dictionary
//! completeness, and metric consistency (canonical-equal queries execute
//! identically).

use sqlgate_core::catalog::{normalize_value, DataType, ValueDictionary};
use sqlgate_core::corpus::{self, CorpusSpec, Db, Variant};
use sqlgate_core::metrics::{self, EmVerdict, ExVerdict};
use sqlgate_core::sql::ast::Expr;
use sqlgate_core::sql::parser::parse_query_only;
use sqlgate_core::sql::Profile;

fn generate(db: Db, variant: Variant, splits: (usize, usize, usize)) -> corpus::Generated {
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec { db, variant, splits, seed: 0 };
    let generated = corpus::generate(&spec, dir.path()).unwrap();
    // keep the tempdir alive through the db file's lifetime
    std::mem::forget(dir);
    generated
}

#[test]
fn schema_shapes_match_the_published_descriptions() {
    let hr = generate(Db::Hr, Variant::Base, (6, 2, 2));
    assert_eq!(hr.catalog.tables.len(), 1);
    let employees = &hr.catalog.tables[0];
    assert_eq!(employees.columns.len(), 9);
    assert_eq!(employees.column("salary").unwrap().data_type, DataType::Decimal);

    let wh = generate(Db::Wh, Variant::Base, (6, 2, 2));
    assert_eq!(wh.catalog.tables.len(), 8, "warehouse has eight tables");
    for name in [
        "vendors", "shops", "stock", "customers", "manufacturers", "products", "sales",
        "sales_details",
    ] {
        assert!(wh.catalog.table(name).is_some(), "missing {name}");
    }

    let invoicing = generate(Db::In, Variant::Base, (6, 2, 2));
    assert_eq!(invoicing.catalog.tables.len(), 4, "invoicing comprises four tables");
    for name in ["record", "contract", "project", "assignment"] {
        assert!(invoicing.catalog.table(name).is_some(), "missing {name}");
    }

    // the spider-format schema document round-trips the catalog
    let doc = std::fs::read_to_string(&wh.schema_path).unwrap();
    let reloaded = sqlgate_core::SchemaCatalog::from_spider_json(&doc).unwrap();
    assert_eq!(reloaded, wh.catalog);
}

/// Does the WHERE clause contain a parenthesized group of at least four
/// OR-disjuncts conjoined with another condition?
fn has_big_or_group(expr: &Expr) -> bool {
    fn group_with_big_or(e: &Expr) -> bool {
        match e {
            Expr::Group(inner) => matches!(inner.as_ref(), Expr::Or(parts) if parts.len() >= 4),
            _ => false,
        }
    }
    match expr {
        Expr::And(parts) => parts.iter().any(group_with_big_or),
        _ => false,
    }
}

#[test]
fn invoicing_corpus_includes_multi_or_groups() {
    let invoicing = generate(Db::In, Variant::Base, (145, 18, 46));
    let mut found = 0usize;
    for record in invoicing.records.iter().flatten() {
        let query = parse_query_only(&record.gold, Profile::Extended).unwrap();
        if query.first.where_clause.as_ref().is_some_and(has_big_or_group) {
            found += 1;
        }
    }
    assert!(found > 0, "no parenthesized >=4-way OR group in the IN corpus");
}

#[test]
fn dictionary_covers_every_text_cell() {
    let hr = generate(Db::Hr, Variant::Base, (6, 2, 2));
    let dict = ValueDictionary::build(&hr.catalog, &hr.db_path, 10_000).unwrap();
    assert!(dict.truncated_columns.is_empty());

    let conn = rusqlite::Connection::open_with_flags(
        &hr.db_path,
        rusqlite::OpenFlags::SQLITE_OPEN_READ_ONLY,
    )
    .unwrap();
    let mut scanned = 0usize;
    for table in &hr.catalog.tables {
        for col in &table.columns {
            if col.data_type != DataType::Text {
                continue;
            }
            let mut stmt = conn
                .prepare(&format!(
                    "SELECT DISTINCT \"{}\" FROM \"{}\" WHERE \"{}\" IS NOT NULL",
                    col.name, table.name, col.name
                ))
                .unwrap();
            let values = stmt
                .query_map([], |row| row.get::<_, String>(0))
                .unwrap()
                .collect::<Result<Vec<_>, _>>()
                .unwrap();
            for v in values {
                let key = normalize_value(&v);
                if key.is_empty() {
                    continue;
                }
                let targets = dict.lookup(&key).unwrap_or_else(|| panic!("missing key {key:?}"));
                assert!(
                    targets.iter().any(|(t, c)| t == &table.name && c == &col.name),
                    "{key:?} lacks target {}.{}",
                    table.name,
                    col.name
                );
                scanned += 1;
            }
        }
    }
    assert!(scanned > 50, "scan looked at too little data ({scanned})");
}

/// Rotate the first OR/IN-list sibling group found, producing a
/// canonical-equal variant of the query.
fn rotate_siblings(expr: &mut Expr) -> bool {
    match expr {
        Expr::Or(parts) if parts.len() >= 2 => {
            parts.rotate_left(1);
            true
        }
        Expr::InList { items, .. } if items.len() >= 2 => {
            items.rotate_left(1);
            true
        }
        Expr::And(parts) => parts.iter_mut().any(rotate_siblings),
        Expr::Group(inner) | Expr::Not(inner) => rotate_siblings(inner),
        _ => false,
    }
}

#[test]
fn em_match_implies_ex_match_on_fixtures() {
    let mut sampled = 0usize;
    for (db, variant) in [(Db::In, Variant::Base), (Db::Hr, Variant::Base)] {
        let generated = generate(db, variant, (40, 5, 5));
        for record in generated.records.iter().flatten() {
            let mut query = parse_query_only(&record.gold, Profile::Extended).unwrap();
            let rotated = query
                .first
                .where_clause
                .as_mut()
                .map(rotate_siblings)
                .unwrap_or(false);
            if !rotated {
                continue;
            }
            let variant_sql = query.to_string();
            let em = metrics::exact_match(&record.gold, &variant_sql, Some(&generated.catalog), true);
            assert_eq!(em, EmVerdict::Match, "rotation broke EM: {} vs {}", record.gold, variant_sql);
            let ex = metrics::execution_accuracy(&record.gold, &variant_sql, &generated.db_path)
                .unwrap();
            assert_eq!(
                ex,
                ExVerdict::Match,
                "canonical-equal queries executed differently: {} vs {}",
                record.gold,
                variant_sql
            );
            sampled += 1;
        }
    }
    assert!(sampled >= 5, "too few rotatable samples ({sampled})");
}

#[test]
fn corpus_spec_validation() {
    let bad = CorpusSpec { db: Db::Hr, variant: Variant::Base, splits: (0, 1, 1), seed: 0 };
    assert!(corpus::generate(&bad, "/tmp/never").is_err());
}
