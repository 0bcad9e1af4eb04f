//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured numbers (run with `--nocapture` to see them).
//!
//! Shared fixtures (the seven corpora) are generated once per process.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use sqlgate_core::catalog::{SchemaCatalog, ValueDictionary};
use sqlgate_core::corpus::{self, CorpusRecord, CorpusSpec, Db, Variant};
use sqlgate_core::decode::{self, BeamConfig};
use sqlgate_core::guards::validate_query;
use sqlgate_core::linker;
use sqlgate_core::metrics::{self, canonical, EmVerdict, ExVerdict};
use sqlgate_core::service::{self, FeasibilityItem, Request};
use sqlgate_core::sql::ast::{CmpOp, Expr, FromClause, Ident, Query, Select, SelectItem, TableFactor, TableRef};
use sqlgate_core::sql::parser::parse_query_only;
use sqlgate_core::sql::token::{lex_all, Punct, TokenKind};
use sqlgate_core::sql::{parse_complete, Mode, ParserState, Profile, Verdict};

struct Corpus {
    db: Db,
    variant: Variant,
    records: Vec<CorpusRecord>,
    train: Vec<CorpusRecord>,
    db_path: std::path::PathBuf,
    catalog: Arc<SchemaCatalog>,
}

struct Fixtures {
    _dir: tempfile::TempDir,
    corpora: Vec<Corpus>,
    base_with_elapsed: Duration,
}

fn fixtures() -> &'static Fixtures {
    static FIXTURES: OnceLock<Fixtures> = OnceLock::new();
    FIXTURES.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let mut corpora = Vec::new();
        let mut base_with_elapsed = Duration::ZERO;
        let specs = [
            (Db::Hr, Variant::Base, (99, 10, 78), true),
            (Db::Wh, Variant::Base, (146, 16, 40), true),
            (Db::In, Variant::Base, (145, 18, 46), true),
            (Db::Hr, Variant::With, (35, 4, 8), true),
            (Db::Wh, Variant::With, (18, 3, 7), true),
            (Db::Hr, Variant::Fnc, (99, 10, 78), false),
            (Db::Wh, Variant::Fnc, (146, 16, 40), false),
        ];
        for (db, variant, splits, timed) in specs {
            let spec = CorpusSpec { db, variant, splits, seed: 0 };
            let out = dir.path().join(format!("{db:?}_{variant:?}"));
            let start = Instant::now();
            let generated = corpus::generate(&spec, &out).unwrap();
            if timed {
                base_with_elapsed += start.elapsed();
            }
            corpora.push(Corpus {
                db,
                variant,
                records: generated.records.iter().flatten().cloned().collect(),
                train: generated.records[0].clone(),
                db_path: generated.db_path,
                catalog: Arc::new(generated.catalog),
            });
        }
        Fixtures { _dir: dir, corpora, base_with_elapsed }
    })
}

fn corpus(db: Db, variant: Variant) -> &'static Corpus {
    fixtures()
        .corpora
        .iter()
        .find(|c| c.db == db && c.variant == variant)
        .unwrap()
}

#[test]
fn criterion_01_corpus_fidelity() {
    let fx = fixtures();
    let expected = [
        (Db::Hr, Variant::Base, (99, 10, 78)),
        (Db::Wh, Variant::Base, (146, 16, 40)),
        (Db::In, Variant::Base, (145, 18, 46)),
        (Db::Hr, Variant::With, (35, 4, 8)),
        (Db::Wh, Variant::With, (18, 3, 7)),
    ];
    let mut checked = 0usize;
    for (db, variant, (train, dev, test)) in expected {
        let c = corpus(db, variant);
        assert_eq!(c.records.len(), train + dev + test, "{db:?} {variant:?} total");
        assert_eq!(c.train.len(), train, "{db:?} {variant:?} train split");
        // every gold returns at least one row
        let conn = rusqlite::Connection::open_with_flags(
            &c.db_path,
            rusqlite::OpenFlags::SQLITE_OPEN_READ_ONLY,
        )
        .unwrap();
        for r in &c.records {
            let mut stmt = conn.prepare(&r.gold).unwrap_or_else(|e| panic!("{}: {e}", r.gold));
            let mut rows = stmt.query([]).unwrap();
            assert!(rows.next().unwrap().is_some(), "empty result: {}", r.gold);
            checked += 1;
        }
    }
    assert!(
        fx.base_with_elapsed < Duration::from_secs(60),
        "generation took {:?}",
        fx.base_with_elapsed
    );
    println!(
        "ACCEPTANCE 1 corpus-fidelity: PASS — splits exact (99/10/78, 146/16/40, 145/18/46, 35/4/8, 18/3/7), {checked} golds non-empty, generated in {:?}",
        fx.base_with_elapsed
    );
}

#[test]
fn criterion_02_reflexive_metric_robustness() {
    let start = Instant::now();
    let mut n = 0usize;
    for c in &fixtures().corpora {
        for r in &c.records {
            let em = metrics::exact_match(&r.gold, &r.gold, Some(&c.catalog), true);
            assert_eq!(em, EmVerdict::Match, "EM reflexivity: {}", r.gold);
            let ex = metrics::execution_accuracy(&r.gold, &r.gold, &c.db_path).unwrap();
            assert_eq!(ex, ExVerdict::Match, "EX reflexivity: {}", r.gold);
            n += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    println!(
        "ACCEPTANCE 2 reflexive-metrics: PASS — {n} golds across 7 corpora (incl. Fnc, WITH, IN multi-OR) match themselves under EM and EX with zero errors in {elapsed:?}"
    );
}

#[test]
fn criterion_03_profile_split() {
    let mut rejected = 0usize;
    let mut accepted = 0usize;
    for (db, variant) in [
        (Db::Hr, Variant::With),
        (Db::Wh, Variant::With),
        (Db::Hr, Variant::Fnc),
        (Db::Wh, Variant::Fnc),
    ] {
        let c = corpus(db, variant);
        for r in &c.records {
            assert!(
                parse_complete(&r.gold, Profile::SpiderSubset, None).is_err(),
                "spider profile must reject {db:?} {variant:?} gold: {}",
                r.gold
            );
            rejected += 1;
            assert!(
                parse_complete(&r.gold, Profile::Extended, None).is_ok(),
                "extended profile must accept: {}",
                r.gold
            );
            accepted += 1;
        }
    }
    println!(
        "ACCEPTANCE 3 profile-split: PASS — {rejected}/{rejected} special golds rejected under SpiderSubset, {accepted}/{accepted} accepted under Extended"
    );
}

/// Pool of strings for the randomized prefix-property trials: gold queries,
/// mutated golds, and token soup.
fn trial_strings(rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut pool: Vec<String> = fixtures()
        .corpora
        .iter()
        .flat_map(|c| c.records.iter().map(|r| r.gold.clone()))
        .collect();
    let soup_pieces = [
        "SELECT", "FROM", "WHERE", "(", ")", ",", "name", "t1", ".", "*", "'v'", "1", "AND",
        "OR", "=", ">", "employees", "WITH", "AS", "lower", ";", " ",
    ];
    for _ in 0..400 {
        let n = rng.gen_range(1..12);
        let soup: Vec<&str> = (0..n).map(|_| *soup_pieces.choose(rng).unwrap()).collect();
        pool.push(soup.join(" "));
    }
    // character mutations of golds
    for _ in 0..400 {
        let base = pool[rng.gen_range(0..pool.len())].clone();
        let bytes = base.as_bytes();
        if bytes.is_empty() {
            continue;
        }
        let at = rng.gen_range(0..bytes.len());
        if !base.is_char_boundary(at) {
            continue;
        }
        let insert: char = *['x', '(', ')', '\'', '9', ' '].choose(rng).unwrap();
        let mut s = base.clone();
        s.insert(at, insert);
        pool.push(s);
    }
    pool
}

#[test]
fn criterion_04_prefix_properties() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pool = trial_strings(&mut rng);
    let hr = corpus(Db::Hr, Variant::Base).catalog.clone();
    let modes = [Mode::Lex, Mode::ParseNoGuards, Mode::ParseWithGuards];
    let mut split_trials = 0usize;
    let mut absorb_trials = 0usize;
    while split_trials + absorb_trials < 10_000 {
        let text = &pool[rng.gen_range(0..pool.len())];
        let mode = modes[rng.gen_range(0..modes.len())];
        let profile = if rng.gen_bool(0.5) { Profile::Extended } else { Profile::SpiderSubset };
        let catalog = (mode == Mode::ParseWithGuards).then(|| hr.clone());
        let whole = ParserState::init(mode, profile, catalog.clone()).unwrap().advance(text);

        // split invariance: advance in 2..4 random fragments
        let mut cuts: Vec<usize> = (0..rng.gen_range(1..4))
            .map(|_| rng.gen_range(0..=text.len()))
            .filter(|&i| text.is_char_boundary(i))
            .collect();
        cuts.sort_unstable();
        let mut state = ParserState::init(mode, profile, catalog.clone()).unwrap();
        let mut prev = 0usize;
        let mut went_invalid_early = false;
        for &cut in &cuts {
            state = state.advance(&text[prev..cut]);
            if state.verdict() == Verdict::Invalid {
                went_invalid_early = true;
            }
            prev = cut;
        }
        state = state.advance(&text[prev..]);
        assert_eq!(
            state.verdict(),
            whole.verdict(),
            "split invariance: {mode:?} {profile:?} {text:?} cuts {cuts:?}"
        );
        if went_invalid_early {
            assert_eq!(state.verdict(), Verdict::Invalid, "absorbing violated mid-split");
        }
        split_trials += 1;

        // monotonicity: an Invalid state absorbs any further fragment
        if whole.verdict() == Verdict::Invalid {
            let suffix_pool = ["x", " FROM t", ")", "'s'", " SELECT 1", ""];
            let extended = whole.advance(suffix_pool.choose(&mut rng).unwrap());
            assert_eq!(extended.verdict(), Verdict::Invalid, "absorbing: {text:?}");
            absorb_trials += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    println!(
        "ACCEPTANCE 4 prefix-properties: PASS — {split_trials} split-invariance and {absorb_trials} absorbing trials, zero violations, {elapsed:?}"
    );
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
fn criterion_05_decoding_soundness() {
    let start = Instant::now();
    let fx = fixtures();
    let lms: Vec<(&Corpus, decode::MockLm)> = fx
        .corpora
        .iter()
        .map(|c| (c, decode::train_mock_lm(&c.train).unwrap()))
        .collect();

    let widths = [1usize, 2, 3, 4];
    let top_ks = [4usize, 8, 12];
    let max_pieces = [24usize, 40, 56];
    let mut runs_per_mode = 0usize;
    let mut hypotheses = 0usize;
    let mut orderings = 0usize;

    for (c, lm) in &lms {
        for &width in &widths {
            for &top_k in &top_ks {
                for &mp in &max_pieces {
                    // soundness: each mode drives its own beam; everything
                    // it finishes must re-parse under that mode's batch view
                    for mode in [Mode::Lex, Mode::ParseNoGuards, Mode::ParseWithGuards] {
                        let cfg = BeamConfig {
                            width,
                            max_pieces: mp,
                            mode,
                            profile: Profile::Extended,
                            top_k: Some(top_k),
                        };
                        let catalog =
                            (mode == Mode::ParseWithGuards).then(|| c.catalog.clone());
                        let (finished, _) =
                            decode::constrained_beam_search_with_stats(lm, &cfg, catalog.clone())
                                .unwrap();
                        for (sql, _) in &finished {
                            hypotheses += 1;
                            let ok = match mode {
                                Mode::Lex => lex_complete(sql),
                                Mode::ParseNoGuards => {
                                    parse_complete(sql, Profile::Extended, None).is_ok()
                                }
                                Mode::ParseWithGuards => {
                                    parse_complete(sql, Profile::Extended, Some(&c.catalog))
                                        .is_ok()
                                }
                            };
                            assert!(ok, "{mode:?} emitted a non-reparsing hypothesis: {sql}");
                        }
                    }
                    // rejection ordering: the three filters measured over
                    // one shared proposal stream
                    let cfg = BeamConfig {
                        width,
                        max_pieces: mp,
                        mode: Mode::Lex,
                        profile: Profile::Extended,
                        top_k: Some(top_k),
                    };
                    let [lex, nog, g] =
                        decode::filter_rate_comparison(lm, &cfg, c.catalog.clone(), mp).unwrap();
                    assert!(
                        lex <= nog + 1e-12 && nog <= g + 1e-12,
                        "rejection ordering violated: lex {lex} nog {nog} guards {g} ({:?} {:?} w{width} k{top_k} m{mp})",
                        c.db,
                        c.variant
                    );
                    orderings += 1;
                    runs_per_mode += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(runs_per_mode >= 200, "only {runs_per_mode} runs per mode");
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    println!(
        "ACCEPTANCE 5 decoding-soundness: PASS — {runs_per_mode} runs per mode, {hypotheses} complete hypotheses all re-parse, rejection-rate ordering held in {orderings}/{orderings} configurations, {elapsed:?}"
    );
}

const TABLE6_TRF: &str = "\
root=prop_owner_VAR1_has_VAR2_
-> has [hasPartOfSpeech(\"verb\"), hasLemmaForm(\"have\")]
subj -> VAR1 [!hasParseFeature(\"ving\"), hasLemmaForm(\"VAR1\")]
obj -> VAR2 [hasLemmaForm(\"VAR2\")]
";

const PAPER_SAF: &str = "product has price; tableName1 is PRODUCTS;\n\
colName1 is PRODUCT_ID; dataType1 is \n\
integer; tableName2 is PRODUCTS; colName2 \n\
is PRICE; dataType2 is decimal;\n";

#[test]
fn criterion_06_appendix_a_reproduction() {
    let start = Instant::now();
    let trf = linker::parse_trf_str(TABLE6_TRF).unwrap();
    let saf = linker::parse_saf_str(PAPER_SAF, None).unwrap();
    let lrf = linker::adapt(&trf, &saf).unwrap();
    assert_eq!(lrf.len(), 1);
    let rule = &lrf[0].rule;
    assert_eq!(rule.name, "prop_owner_product_has_price_");
    assert_eq!(rule.head, "has");
    assert_eq!(rule.head_constraints.len(), 2);
    assert_eq!(rule.arcs.len(), 2);
    assert_eq!(rule.arcs[0].target, "product");
    assert_eq!(rule.arcs[0].constraints.len(), 2);
    assert!(rule.arcs[0].constraints[0].negated);
    assert_eq!(rule.arcs[1].target, "price");
    assert_eq!(lrf[0].bindings["product"].table, "PRODUCTS");
    assert_eq!(lrf[0].bindings["product"].column, "PRODUCT_ID");
    assert_eq!(lrf[0].bindings["product"].data_type, "integer");
    assert_eq!(lrf[0].bindings["price"].table, "PRODUCTS");
    assert_eq!(lrf[0].bindings["price"].column, "PRICE");
    assert_eq!(lrf[0].bindings["price"].data_type, "decimal");

    let wh = corpus(Db::Wh, Variant::Base);
    let items = linker::process_query(
        "How many products have price higher than 100?",
        &lrf,
        &ValueDictionary::default(),
        &wh.catalog,
    );
    assert_eq!(items.len(), 2, "{items:?}");
    let by_key: BTreeMap<String, _> = items.iter().map(|i| (i.key(), i)).collect();
    let id = by_key["[PRODUCTS].[PRODUCT_ID]"];
    assert_eq!(id.properties["aggrFlag"], "1");
    assert_eq!(id.properties["aggrFunction"], "countDistinct");
    assert_eq!(id.properties["focus"], "select");
    assert_eq!(id.properties["dataType"], "integer");
    let price = by_key["[PRODUCTS].[PRICE]"];
    assert_eq!(price.properties["filterFlag"], "1");
    assert_eq!(price.properties["value"], "100");
    assert_eq!(price.properties["operator"], "greaterThan");
    assert_eq!(price.properties["dataType"], "decimal");

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!(
        "ACCEPTANCE 6 appendix-a: PASS — adapted LRF matches field-for-field and the question yields exactly the two published data-items in {elapsed:?}"
    );
}

#[test]
fn criterion_07_linker_offline_guarantee() {
    // build everything, then delete the database file; linking must not
    // notice (and the signature admits no handle to notice with)
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec { db: Db::Wh, variant: Variant::Base, splits: (5, 2, 2), seed: 2 };
    let generated = corpus::generate(&spec, dir.path()).unwrap();
    let dict = ValueDictionary::build(&generated.catalog, &generated.db_path, 10_000).unwrap();
    let saf = linker::parse_saf_str(
        corpus::fixtures::saf_text(Db::Wh),
        Some(&generated.catalog),
    )
    .unwrap();
    let trf = linker::parse_trf_str(corpus::fixtures::DEFAULT_TRF).unwrap();
    let lrf = linker::adapt(&trf, &saf).unwrap();
    let catalog = generated.catalog.clone();

    std::fs::remove_file(&generated.db_path).unwrap();
    assert!(!generated.db_path.exists());

    let mut produced = 0usize;
    for question in [
        "How many products have price higher than 100?",
        "Which shops have city Rome?",
        "How many customers have city Lisbon?",
    ] {
        let items = linker::process_query(question, &lrf, &dict, &catalog);
        produced += items.len();
    }
    assert!(produced > 0);
    println!(
        "ACCEPTANCE 7 linker-offline: PASS — process_query takes no DB handle and produced {produced} items after the database file was deleted"
    );
}

/// Collect mutable identifier sites (table names and column references)
/// and rewrite the chosen one.
fn mutate_identifier(query: &Query, site: usize) -> Option<Query> {
    let mut query = query.clone();
    let mut counter = 0usize;
    fn visit_expr(e: &mut Expr, site: usize, counter: &mut usize) -> bool {
        match e {
            Expr::Column { name, .. } => {
                if *counter == site {
                    name.name.push_str("_zz9");
                    return true;
                }
                *counter += 1;
                false
            }
            Expr::Agg { arg: Some(a), .. } => visit_expr(a, site, counter),
            Expr::Agg { .. } => false,
            Expr::Func { arg, .. } | Expr::Neg(arg) | Expr::Not(arg) | Expr::Group(arg) => {
                visit_expr(arg, site, counter)
            }
            Expr::Arith { left, right, .. } | Expr::Cmp { left, right, .. } => {
                visit_expr(left, site, counter) || visit_expr(right, site, counter)
            }
            Expr::Subquery(q) => visit_query(q, site, counter),
            Expr::Between { expr, low, high } => {
                visit_expr(expr, site, counter)
                    || visit_expr(low, site, counter)
                    || visit_expr(high, site, counter)
            }
            Expr::InList { expr, items, .. } => {
                visit_expr(expr, site, counter)
                    || items.iter_mut().any(|i| visit_expr(i, site, counter))
            }
            Expr::InSubquery { expr, query, .. } => {
                visit_expr(expr, site, counter) || visit_query(query, site, counter)
            }
            Expr::Like { expr, pattern, .. } => {
                visit_expr(expr, site, counter) || visit_expr(pattern, site, counter)
            }
            Expr::IsNull { expr, .. } => visit_expr(expr, site, counter),
            Expr::And(parts) | Expr::Or(parts) => {
                parts.iter_mut().any(|p| visit_expr(p, site, counter))
            }
            Expr::Number { .. } | Expr::StringLit { .. } => false,
        }
    }
    fn visit_table_ref(t: &mut TableRef, site: usize, counter: &mut usize) -> bool {
        match &mut t.factor {
            TableFactor::Table(name) => {
                if *counter == site {
                    name.name.push_str("_zz9");
                    return true;
                }
                *counter += 1;
                false
            }
            TableFactor::Derived(q) => visit_query(q, site, counter),
        }
    }
    fn visit_select(s: &mut Select, site: usize, counter: &mut usize) -> bool {
        if visit_table_ref(&mut s.from.first, site, counter) {
            return true;
        }
        for join in &mut s.from.joins {
            if visit_table_ref(&mut join.table, site, counter) {
                return true;
            }
            if let Some(on) = &mut join.on {
                if visit_expr(on, site, counter) {
                    return true;
                }
            }
        }
        for item in &mut s.items {
            if let SelectItem::Expr { expr, .. } = item {
                if visit_expr(expr, site, counter) {
                    return true;
                }
            }
        }
        if let Some(w) = &mut s.where_clause {
            if visit_expr(w, site, counter) {
                return true;
            }
        }
        for g in &mut s.group_by {
            if visit_expr(g, site, counter) {
                return true;
            }
        }
        if let Some(h) = &mut s.having {
            if visit_expr(h, site, counter) {
                return true;
            }
        }
        false
    }
    fn visit_query(q: &mut Query, site: usize, counter: &mut usize) -> bool {
        for cte in &mut q.ctes {
            if visit_query(&mut cte.body, site, counter) {
                return true;
            }
        }
        if visit_select(&mut q.first, site, counter) {
            return true;
        }
        for (_, s) in &mut q.ops {
            if visit_select(s, site, counter) {
                return true;
            }
        }
        for item in &mut q.order_by {
            if visit_expr(&mut item.expr, site, counter) {
                return true;
            }
        }
        false
    }
    visit_query(&mut query, site, &mut counter).then_some(query)
}

fn count_sites(query: &Query) -> usize {
    // probe with an out-of-range site to count
    let mut lo = 0usize;
    while mutate_identifier(query, lo).is_some() {
        lo += 1;
        if lo > 10_000 {
            break;
        }
    }
    lo
}

#[test]
fn criterion_08_guard_fuzzing() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pool: Vec<(&Corpus, &CorpusRecord)> = [
        corpus(Db::Hr, Variant::Base),
        corpus(Db::Wh, Variant::Base),
        corpus(Db::In, Variant::Base),
        corpus(Db::Hr, Variant::With),
    ]
    .into_iter()
    .flat_map(|c| c.records.iter().map(move |r| (c, r)))
    .collect();

    // no false violations on unmutated golds
    let mut clean = 0usize;
    for (c, r) in &pool {
        let q = parse_query_only(&r.gold, Profile::Extended).unwrap();
        let violations = validate_query(&q, &c.catalog);
        assert!(violations.is_empty(), "false violation on {}: {violations:?}", r.gold);
        clean += 1;
    }

    let mut mutated = 0usize;
    while mutated < 500 {
        let (c, r) = pool[rng.gen_range(0..pool.len())];
        let query = parse_query_only(&r.gold, Profile::Extended).unwrap();
        let sites = count_sites(&query);
        if sites == 0 {
            continue;
        }
        let mutant = mutate_identifier(&query, rng.gen_range(0..sites)).unwrap();
        let violations = validate_query(&mutant, &c.catalog);
        assert!(
            !violations.is_empty(),
            "typo mutation produced no violation: {} -> {}",
            r.gold,
            mutant
        );
        // cross-check: the incremental engine must not call it Complete
        if mutated.is_multiple_of(10) {
            let verdict = ParserState::init(
                Mode::ParseWithGuards,
                Profile::Extended,
                Some(c.catalog.clone()),
            )
            .unwrap()
            .advance(&mutant.to_string())
            .verdict();
            assert_ne!(verdict, Verdict::Complete, "incremental accepted mutant: {mutant}");
        }
        mutated += 1;
    }
    println!(
        "ACCEPTANCE 8 guard-fuzzing: PASS — {mutated} identifier-typo mutants each raised ≥1 violation; 0 false violations over {clean} unmutated golds"
    );
}

#[test]
fn criterion_09_service_differential() {
    use std::io::{BufRead, BufReader, Write};

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let hr = corpus(Db::Hr, Variant::Base);
    let wh = corpus(Db::Wh, Variant::Base);

    // recorded request corpus
    let mut requests: Vec<Request> = Vec::new();
    let wh_dir = wh.db_path.parent().unwrap();
    requests.push(Request::RegisterSchema {
        schema: None,
        db_path: Some(hr.db_path.to_string_lossy().into_owned()),
        build_dictionary: false,
        saf_path: None,
        trf_path: None,
    });
    requests.push(Request::RegisterSchema {
        schema: None,
        db_path: Some(wh.db_path.to_string_lossy().into_owned()),
        build_dictionary: true,
        saf_path: Some(wh_dir.join("warehouse.saf").to_string_lossy().into_owned()),
        trf_path: Some(wh_dir.join("default.trf").to_string_lossy().into_owned()),
    });

    let golds: Vec<&str> = hr.records.iter().map(|r| r.gold.as_str()).collect();
    let junk = [")(", " FROM FROM", "''", "zzz_unknown", " WHERE WHERE"];
    while requests.len() < 950 {
        let gold = golds[rng.gen_range(0..golds.len())];
        let cut_pool: Vec<usize> = (0..=gold.len()).filter(|&i| gold.is_char_boundary(i)).collect();
        let cut = cut_pool[rng.gen_range(0..cut_pool.len())];
        let tail = &gold[cut..];
        let tail_cut = (1..=tail.len().min(8)).rev().find(|&i| tail.is_char_boundary(i)).unwrap_or(0);
        let mut candidates = vec![tail[..tail_cut].to_string()];
        candidates.push(junk[rng.gen_range(0..junk.len())].to_string());
        candidates.push(";".to_string());
        let commit = rng.gen_bool(0.2).then(|| tail[..tail_cut].to_string());
        requests.push(Request::BatchFeasibility {
            schema_id: Some("hr-1".to_string()),
            mode: [Mode::Lex, Mode::ParseNoGuards, Mode::ParseWithGuards]
                [rng.gen_range(0..3)],
            profile: Profile::Extended,
            items: vec![FeasibilityItem {
                session: None,
                prefix: Some(gold[..cut].to_string()),
                candidates,
                commit,
            }],
        });
    }
    let questions = [
        "How many products have price higher than 100?",
        "Which shops have city Rome?",
        "What is the price of Mini Bolt?",
        "Show products from Lisbon",
    ];
    while requests.len() < 1000 {
        let q = questions[rng.gen_range(0..questions.len())];
        requests.push(Request::LinkAndSerialize {
            schema_id: "warehouse-1".to_string(),
            question: q.to_string(),
            db_content: if rng.gen_bool(0.7) {
                sqlgate_core::serialize::DbContent::Enabled
            } else {
                sqlgate_core::serialize::DbContent::Disabled
            },
        });
    }

    // in-process reference
    let reference = service::Registry::default();
    let expected: Vec<String> = requests
        .iter()
        .map(|r| serde_json::to_string(&service::handle_request(&reference, r)).unwrap())
        .collect();

    // served instance with its own fresh registry
    let registry = Arc::new(service::Registry::default());
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let stop = Arc::new(std::sync::atomic::AtomicBool::new(false));
    let server = {
        let registry = registry.clone();
        let stop = stop.clone();
        std::thread::spawn(move || service::serve_ndjson(listener, registry, stop))
    };
    let conn = std::net::TcpStream::connect(addr).unwrap();
    let mut writer = conn.try_clone().unwrap();
    let mut reader = BufReader::new(conn);
    let mut matched = 0usize;
    for (request, expect) in requests.iter().zip(&expected) {
        let mut line = serde_json::to_string(request).unwrap();
        line.push('\n');
        writer.write_all(line.as_bytes()).unwrap();
        let mut reply = String::new();
        reader.read_line(&mut reply).unwrap();
        assert_eq!(reply.trim_end(), expect, "request {matched} diverged");
        matched += 1;
    }
    stop.store(true, std::sync::atomic::Ordering::Relaxed);
    drop(writer);
    drop(reader);
    server.join().unwrap();
    println!(
        "ACCEPTANCE 9 service-differential: PASS — {matched}/{} replayed requests matched the in-process responses byte-for-byte",
        requests.len()
    );
}

// ---------------------------------------------------------------------------
// criterion 10: EM canonicalization vs brute-force permutation oracle

fn leaf(i: usize) -> Expr {
    let (col, op, val) = [
        ("x", CmpOp::Eq, "1"),
        ("y", CmpOp::Eq, "2"),
        ("z", CmpOp::Gt, "3"),
        ("w", CmpOp::Lt, "4"),
    ][i];
    Expr::Cmp {
        left: Box::new(Expr::Column { qualifier: None, name: Ident::new(col, 0) }),
        op,
        right: Box::new(Expr::Number { text: val.to_string(), offset: 0 }),
    }
}

/// Enumerate boolean shapes over ≤4 comparison leaves: flat chains, grouped
/// chains under the other operator, and mixed nestings.
fn condition_family() -> Vec<Expr> {
    let mut out = Vec::new();
    let chain = |op_and: bool, leaves: &[usize]| -> Expr {
        let parts: Vec<Expr> = leaves.iter().map(|&i| leaf(i)).collect();
        if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else if op_and {
            Expr::And(parts)
        } else {
            Expr::Or(parts)
        }
    };
    let leaf_sets: Vec<Vec<usize>> = vec![
        vec![0],
        vec![0, 1],
        vec![1, 0],
        vec![0, 1, 2],
        vec![2, 0, 1],
        vec![0, 1, 2, 3],
        vec![3, 2, 1, 0],
        vec![1, 3, 0, 2],
        vec![0, 0, 1],
    ];
    for set in &leaf_sets {
        out.push(chain(true, set));
        out.push(chain(false, set));
    }
    // grouped mixes: (a OR b) AND c, (a AND b) OR c, ((a OR b) AND c) OR d ...
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1), (0, 1, 3)] {
        out.push(Expr::And(vec![
            Expr::Group(Box::new(Expr::Or(vec![leaf(i), leaf(j)]))),
            leaf(k),
        ]));
        out.push(Expr::And(vec![
            leaf(k),
            Expr::Group(Box::new(Expr::Or(vec![leaf(j), leaf(i)]))),
        ]));
        out.push(Expr::Or(vec![
            Expr::Group(Box::new(Expr::And(vec![leaf(i), leaf(j)]))),
            leaf(k),
        ]));
    }
    for (i, j, k, l) in [(0, 1, 2, 3), (2, 3, 0, 1)] {
        out.push(Expr::Or(vec![
            Expr::Group(Box::new(Expr::And(vec![
                Expr::Group(Box::new(Expr::Or(vec![leaf(i), leaf(j)]))),
                leaf(k),
            ]))),
            leaf(l),
        ]));
        out.push(Expr::And(vec![
            Expr::Group(Box::new(Expr::Or(vec![leaf(i), leaf(j)]))),
            Expr::Group(Box::new(Expr::Or(vec![leaf(k), leaf(l)]))),
        ]));
    }
    // 4-way OR group conjoined with another condition (the Table-7 shape)
    out.push(Expr::And(vec![
        Expr::Group(Box::new(Expr::Or(vec![leaf(0), leaf(1), leaf(2), leaf(3)]))),
        leaf(0),
    ]));
    out
}

fn family_query(where_clause: Expr) -> String {
    let q = Query {
        ctes: vec![],
        first: Select {
            distinct: false,
            items: vec![SelectItem::Expr {
                expr: Expr::Column { qualifier: None, name: Ident::new("a", 0) },
                alias: None,
            }],
            from: FromClause {
                first: TableRef {
                    factor: TableFactor::Table(Ident::new("t", 0)),
                    alias: None,
                },
                joins: vec![],
            },
            where_clause: Some(where_clause),
            group_by: vec![],
            having: None,
        },
        ops: vec![],
        order_by: vec![],
        limit: None,
    };
    q.to_string()
}

/// Independent oracle: equality under all sibling permutations of the
/// light-normalized trees, literals treated as placeholders.
fn perm_equal(a: &Expr, b: &Expr) -> bool {
    fn eq(a: &Expr, b: &Expr) -> bool {
        match (a, b) {
            (Expr::And(xs), Expr::And(ys)) | (Expr::Or(xs), Expr::Or(ys)) => {
                if xs.len() != ys.len() {
                    return false;
                }
                // backtracking multiset match
                let mut used = vec![false; ys.len()];
                fn assign(
                    xs: &[Expr],
                    ys: &[Expr],
                    used: &mut Vec<bool>,
                    i: usize,
                ) -> bool {
                    if i == xs.len() {
                        return true;
                    }
                    for j in 0..ys.len() {
                        if !used[j] && eq(&xs[i], &ys[j]) {
                            used[j] = true;
                            if assign(xs, ys, used, i + 1) {
                                return true;
                            }
                            used[j] = false;
                        }
                    }
                    false
                }
                assign(xs, ys, &mut used, 0)
            }
            (Expr::Not(x), Expr::Not(y)) => eq(x, y),
            (
                Expr::Cmp { left: l1, op: o1, right: r1 },
                Expr::Cmp { left: l2, op: o2, right: r2 },
            ) => o1 == o2 && eq(l1, l2) && eq(r1, r2),
            (Expr::Column { qualifier: q1, name: n1 }, Expr::Column { qualifier: q2, name: n2 }) => {
                q1.as_ref().map(|q| q.lower()) == q2.as_ref().map(|q| q.lower())
                    && n1.lower() == n2.lower()
            }
            // structural mode: every literal is the same placeholder
            (Expr::Number { .. } | Expr::StringLit { .. }, Expr::Number { .. } | Expr::StringLit { .. }) => true,
            _ => false,
        }
    }
    eq(
        &canonical::light_normalize(a),
        &canonical::light_normalize(b),
    )
}

#[test]
fn criterion_10_em_canonicalization_oracle() {
    let family = condition_family();
    let mut pairs = 0usize;
    let mut matches = 0usize;
    for a in &family {
        for b in &family {
            let sql_a = family_query(a.clone());
            let sql_b = family_query(b.clone());
            let em = metrics::exact_match(&sql_a, &sql_b, None, false) == EmVerdict::Match;
            let oracle = perm_equal(a, b);
            assert_eq!(
                em, oracle,
                "EM and permutation oracle disagree:\n  {sql_a}\n  {sql_b}"
            );
            pairs += 1;
            if em {
                matches += 1;
            }
        }
    }
    println!(
        "ACCEPTANCE 10 em-oracle: PASS — {pairs} pairs compared, {matches} matches, zero disagreements with the brute-force permutation oracle"
    );
}
