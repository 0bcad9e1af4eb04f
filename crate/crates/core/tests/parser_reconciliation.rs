//! Reconciles the incremental feasibility engine against the batch parser:
//! the two are independent implementations of the same grammar, so whole
//! gold queries must judge identically under every mode's laxness level,
//! prefixes of valid statements must stay alive, and the profile languages
//! must nest.

use std::sync::Arc;

use sqlgate_core::catalog::SchemaCatalog;
use sqlgate_core::corpus::{self, CorpusSpec, Db, Variant};
use sqlgate_core::guards::validate_query;
use sqlgate_core::sql::parser::parse_query_only;
use sqlgate_core::sql::token::{lex_all, Punct, TokenKind};
use sqlgate_core::sql::{parse_complete, Mode, ParserState, Profile, Verdict};

struct Fixture {
    golds: Vec<String>,
    catalog: Arc<SchemaCatalog>,
}

fn small_fixtures() -> Vec<Fixture> {
    let dir = tempfile::tempdir().unwrap();
    let mut out = Vec::new();
    for (db, variant) in [
        (Db::Hr, Variant::Base),
        (Db::Wh, Variant::Base),
        (Db::In, Variant::Base),
        (Db::Hr, Variant::With),
        (Db::Wh, Variant::Fnc),
    ] {
        let spec = CorpusSpec { db, variant, splits: (10, 3, 5), seed: 17 };
        let path = dir.path().join(format!("{:?}_{:?}", db, variant));
        let generated = corpus::generate(&spec, &path).unwrap();
        let golds = generated
            .records
            .iter()
            .flatten()
            .map(|r| r.gold.clone())
            .collect();
        out.push(Fixture { golds, catalog: Arc::new(generated.catalog) });
    }
    out
}

fn lex_complete(text: &str) -> bool {
    let Ok(tokens) = lex_all(text) else { return false };
    let mut depth = 0i32;
    let mut count = 0usize;
    for t in &tokens {
        match t.kind {
            TokenKind::Punct(Punct::LParen) => depth += 1,
            TokenKind::Punct(Punct::RParen) => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => {}
        }
        count += 1;
    }
    depth == 0 && count >= 1
}

#[test]
fn gold_queries_complete_under_every_mode() {
    for fixture in small_fixtures() {
        for gold in &fixture.golds {
            // batch route
            assert!(lex_complete(gold), "lex check fails: {gold}");
            parse_complete(gold, Profile::Extended, None)
                .unwrap_or_else(|e| panic!("batch parse fails: {gold}: {e}"));
            parse_complete(gold, Profile::Extended, Some(&fixture.catalog))
                .unwrap_or_else(|e| panic!("guard validation fails: {gold}: {e}"));
            // incremental route
            for mode in [Mode::Lex, Mode::ParseNoGuards, Mode::ParseWithGuards] {
                let catalog =
                    (mode == Mode::ParseWithGuards).then(|| fixture.catalog.clone());
                let verdict = ParserState::init(mode, Profile::Extended, catalog)
                    .unwrap()
                    .advance(gold)
                    .verdict();
                assert_eq!(verdict, Verdict::Complete, "{mode:?}: {gold}");
            }
        }
    }
}

#[test]
fn prefixes_of_gold_queries_stay_alive() {
    for fixture in small_fixtures().into_iter().take(2) {
        for gold in fixture.golds.iter().take(8) {
            for mode in [Mode::Lex, Mode::ParseNoGuards, Mode::ParseWithGuards] {
                let catalog =
                    (mode == Mode::ParseWithGuards).then(|| fixture.catalog.clone());
                let mut state =
                    ParserState::init(mode, Profile::Extended, catalog).unwrap();
                for (i, ch) in gold.char_indices() {
                    state = state.advance(&gold[i..i + ch.len_utf8()]);
                    assert_ne!(
                        state.verdict(),
                        Verdict::Invalid,
                        "{mode:?} dies at {i} in {gold}"
                    );
                }
                assert_eq!(state.verdict(), Verdict::Complete, "{mode:?}: {gold}");
            }
        }
    }
}

#[test]
fn laxness_levels_agree_with_batch_oracles() {
    // strings that exercise disagreement between the levels
    let samples = [
        "SELECT name FROM employees ",
        "SELECT FROM ",
        "FROM FROM ( )",
        "SELECT (name) FROM t ",
        "SELECT name FROM bogus_table WHERE x = 1",
        "WITH t AS (SELECT dept FROM employees) SELECT dept FROM t",
        "SELECT name name FROM t ",
        "SELECT lower(name) FROM employees",
        ") SELECT",
        "SELECT salary + FROM t",
    ];
    let catalog = {
        let dir = tempfile::tempdir().unwrap();
        let spec = CorpusSpec { db: Db::Hr, variant: Variant::Base, splits: (5, 2, 2), seed: 3 };
        Arc::new(corpus::generate(&spec, dir.path()).unwrap().catalog)
    };
    for text in samples {
        for profile in [Profile::SpiderSubset, Profile::Extended] {
            // Complete under the incremental engine iff the batch route accepts
            let lex_v = ParserState::init(Mode::Lex, profile, None)
                .unwrap()
                .advance(text)
                .verdict();
            assert_eq!(lex_v == Verdict::Complete, lex_complete(text), "lex: {text}");

            let nog_v = ParserState::init(Mode::ParseNoGuards, profile, None)
                .unwrap()
                .advance(text)
                .verdict();
            assert_eq!(
                nog_v == Verdict::Complete,
                parse_complete(text, profile, None).is_ok(),
                "no-guards {profile:?}: {text}"
            );

            let guard_v = ParserState::init(Mode::ParseWithGuards, profile, Some(catalog.clone()))
                .unwrap()
                .advance(text)
                .verdict();
            assert_eq!(
                guard_v == Verdict::Complete,
                parse_complete(text, profile, Some(&catalog)).is_ok(),
                "guards {profile:?}: {text}"
            );

            // alive sets nest: guards ⊆ no-guards ⊆ lex
            if guard_v != Verdict::Invalid {
                assert_ne!(nog_v, Verdict::Invalid, "{text}");
            }
            if nog_v != Verdict::Invalid {
                assert_ne!(lex_v, Verdict::Invalid, "{text}");
            }
        }
    }
}

#[test]
fn profile_containment() {
    let spider_accepted = [
        "SELECT name FROM employees",
        "SELECT count(*) FROM t WHERE a = 1 AND b = 2 OR c = 3",
        "SELECT a FROM t JOIN u ON t.x = u.y GROUP BY a HAVING count(*) > 1 ORDER BY a DESC LIMIT 5",
        "SELECT a FROM t WHERE x IN (SELECT y FROM u)",
        "SELECT a FROM (SELECT b AS a FROM u) AS d",
    ];
    for sql in spider_accepted {
        assert!(parse_complete(sql, Profile::SpiderSubset, None).is_ok(), "{sql}");
        assert!(
            parse_complete(sql, Profile::Extended, None).is_ok(),
            "extended must contain spider: {sql}"
        );
        // and incrementally, prefix-by-prefix: anything alive under spider
        // is alive under extended
        let mut spider = ParserState::init(Mode::ParseNoGuards, Profile::SpiderSubset, None).unwrap();
        let mut ext = ParserState::init(Mode::ParseNoGuards, Profile::Extended, None).unwrap();
        for (i, ch) in sql.char_indices() {
            let piece = &sql[i..i + ch.len_utf8()];
            spider = spider.advance(piece);
            ext = ext.advance(piece);
            if spider.verdict() != Verdict::Invalid {
                assert_ne!(ext.verdict(), Verdict::Invalid, "at {i} in {sql}");
            }
        }
    }
}

#[test]
fn profile_containment_on_random_strings() {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    let pieces = [
        "SELECT", "FROM", "WHERE", "WITH", "AS", "(", ")", ",", "=", "name", "t", "lower",
        "count", "*", "'v'", "1", "AND", "OR", ".", "x",
    ];
    for _ in 0..2000 {
        let n = rng.gen_range(1..10);
        let text: Vec<&str> = (0..n).map(|_| *pieces.choose(&mut rng).unwrap()).collect();
        let text = text.join(" ");
        let spider = ParserState::init(Mode::ParseNoGuards, Profile::SpiderSubset, None)
            .unwrap()
            .advance(&text)
            .verdict();
        let ext = ParserState::init(Mode::ParseNoGuards, Profile::Extended, None)
            .unwrap()
            .advance(&text)
            .verdict();
        if spider != Verdict::Invalid {
            assert_ne!(ext, Verdict::Invalid, "containment violated on {text:?}");
        }
        if spider == Verdict::Complete {
            assert_eq!(ext, Verdict::Complete, "completion containment violated on {text:?}");
        }
    }
}

#[test]
fn golds_are_guard_clean() {
    for fixture in small_fixtures() {
        for gold in &fixture.golds {
            let query = parse_query_only(gold, Profile::Extended).unwrap();
            let violations = validate_query(&query, &fixture.catalog);
            assert!(violations.is_empty(), "{gold}: {violations:?}");
        }
    }
}
