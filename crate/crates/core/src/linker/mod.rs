//! Rule-based value disambiguation: match adapted lexical rules against an
//! annotated question, attach dictionary and numeric filters, and emit
//! data-items — an intermediate representation keyed by [TABLE].[COLUMN].
//!
//! Everything here runs offline relative to the database: the value
//! dictionary is the only content source and `process_query` takes no
//! database handle.

pub mod annotate;
pub mod rules;
pub mod saf;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::catalog::{normalize_value, SchemaCatalog, ValueDictionary};

pub use annotate::{annotate, AnnotatedToken, Pos};
pub use rules::{adapt, parse_lrf, parse_lrf_str, parse_trf, parse_trf_str, write_lrf, LrfRule, TrfRule};
pub use saf::{parse_saf, parse_saf_str, SafEntry};

/// Intermediate semantic record for one bound column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataItem {
    pub table: String,
    pub column: String,
    /// Optional keys: focus, aggrFlag, aggrFunction, filterFlag, value,
    /// dataType, operator, ambiguous.
    pub properties: BTreeMap<String, String>,
}

impl DataItem {
    pub fn key(&self) -> String {
        format!(
            "[{}].[{}]",
            self.table.to_ascii_uppercase(),
            self.column.to_ascii_uppercase()
        )
    }

    pub fn is_filter(&self) -> bool {
        self.properties.get("filterFlag").map(|v| v == "1").unwrap_or(false)
    }
}

impl std::fmt::Display for DataItem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let props: Vec<String> =
            self.properties.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}={{{}}}", self.key(), props.join(", "))
    }
}

fn aggregation_cue(tokens: &[AnnotatedToken], before: usize) -> Option<&'static str> {
    let window_start = before.saturating_sub(3);
    let window = &tokens[window_start..before];
    for (i, tok) in window.iter().enumerate() {
        let lemma = tok.lemma.as_str();
        let surface = tok.surface.to_ascii_lowercase();
        if surface == "how" {
            if let Some(next) = window.get(i + 1) {
                if next.surface.eq_ignore_ascii_case("many") {
                    return Some("countDistinct");
                }
            }
        }
        match lemma {
            "average" => return Some("avg"),
            "total" => return Some("sum"),
            _ => {}
        }
        match surface.as_str() {
            "highest" | "most" | "maximum" => return Some("max"),
            "lowest" | "least" | "minimum" => return Some("min"),
            _ => {}
        }
    }
    None
}

fn operator_cue(tokens: &[AnnotatedToken], before: usize) -> &'static str {
    let window_start = before.saturating_sub(3);
    let window: Vec<String> = tokens[window_start..before]
        .iter()
        .map(|t| t.surface.to_ascii_lowercase())
        .collect();
    let has = |w: &str| window.iter().any(|s| s == w);
    if has("than") && (has("higher") || has("greater") || has("more") || has("bigger") || has("above"))
    {
        return "greaterThan";
    }
    if has("than") && (has("less") || has("lower") || has("smaller") || has("below") || has("fewer"))
    {
        return "lessThan";
    }
    if has("at") && has("least") {
        return "greaterOrEqual";
    }
    if has("at") && has("most") {
        return "lessOrEqual";
    }
    if has("over") || has("above") || has("exceeding") {
        return "greaterThan";
    }
    if has("under") || has("below") {
        return "lessThan";
    }
    "equals"
}

struct EntityHit {
    table: String,
    column: String,
    data_type: String,
    token_index: usize,
    is_subject: bool,
}

/// Match adapted rules against the question, attach dictionary and numeric
/// filters, and return the data-items sorted by key. Unmatched questions
/// yield an empty list.
pub fn process_query(
    question: &str,
    lrf: &[LrfRule],
    dict: &ValueDictionary,
    catalog: &SchemaCatalog,
) -> Vec<DataItem> {
    let tokens = annotate(question);
    let mut items: Vec<DataItem> = Vec::new();
    let mut hits: Vec<EntityHit> = Vec::new();

    // 1. shallow rule matching: head token satisfies every head
    //    constraint; a subj arc binds the nearest preceding token meeting
    //    its constraints, an obj arc the nearest following one, both within
    //    a window of six tokens
    for rule in lrf {
        for (h, head_tok) in tokens.iter().enumerate() {
            if !rule.rule.head_constraints.iter().all(|c| c.matches(head_tok)) {
                continue;
            }
            let mut arc_hits = Vec::new();
            let mut all_matched = true;
            for arc in &rule.rule.arcs {
                let found = match arc.role {
                    rules::Role::Subj => tokens[..h]
                        .iter()
                        .enumerate()
                        .rev()
                        .take(6)
                        .find(|(_, t)| arc.constraints.iter().all(|c| c.matches(t)))
                        .map(|(i, _)| i),
                    rules::Role::Obj => tokens
                        .iter()
                        .enumerate()
                        .skip(h + 1)
                        .take(6)
                        .find(|(_, t)| arc.constraints.iter().all(|c| c.matches(t)))
                        .map(|(i, _)| i),
                };
                match found {
                    Some(i) => arc_hits.push((arc, i)),
                    None => {
                        all_matched = false;
                        break;
                    }
                }
            }
            if !all_matched {
                continue;
            }
            for (arc, i) in arc_hits {
                let Some(binding) = rule.bindings.get(&arc.target) else { continue };
                hits.push(EntityHit {
                    table: binding.table.clone(),
                    column: binding.column.clone(),
                    data_type: binding.data_type.clone(),
                    token_index: i,
                    is_subject: arc.role == rules::Role::Subj,
                });
            }
        }
    }

    // subject entities become select-focus items, aggregated when a cue
    // precedes them; object entities only surface through filters
    for hit in hits.iter().filter(|h| h.is_subject) {
        let mut properties = BTreeMap::new();
        properties.insert("focus".to_string(), "select".to_string());
        properties.insert("dataType".to_string(), hit.data_type.clone());
        if let Some(func) = aggregation_cue(&tokens, hit.token_index) {
            properties.insert("aggrFlag".to_string(), "1".to_string());
            properties.insert("aggrFunction".to_string(), func.to_string());
        }
        push_unique(
            &mut items,
            DataItem { table: hit.table.clone(), column: hit.column.clone(), properties },
        );
    }

    // 2. numeric literals adjacent to comparison phrases filter the
    //    nearest preceding numeric-typed entity
    for (i, tok) in tokens.iter().enumerate() {
        if tok.pos != Pos::Num {
            continue;
        }
        let target = hits
            .iter()
            .filter(|h| {
                h.token_index < i && matches!(h.data_type.as_str(), "integer" | "decimal")
            })
            .filter(|h| !h.is_subject)
            .max_by_key(|h| h.token_index)
            .or_else(|| {
                hits.iter()
                    .filter(|h| {
                        h.token_index < i
                            && matches!(h.data_type.as_str(), "integer" | "decimal")
                    })
                    .max_by_key(|h| h.token_index)
            });
        let Some(target) = target else { continue };
        let mut properties = BTreeMap::new();
        properties.insert("filterFlag".to_string(), "1".to_string());
        properties.insert("value".to_string(), tok.surface.clone());
        properties.insert("operator".to_string(), operator_cue(&tokens, i).to_string());
        properties.insert("dataType".to_string(), target.data_type.clone());
        push_unique(
            &mut items,
            DataItem { table: target.table.clone(), column: target.column.clone(), properties },
        );
    }

    // 3. dictionary longest-match over the question surface adds equality
    //    filters; ambiguous hits emit one item per target, flagged
    let mut i = 0;
    let max_words = dict.max_key_words();
    while i < tokens.len() {
        let mut matched = 0usize;
        let mut targets: Option<(&[(String, String)], String)> = None;
        for len in (1..=max_words.min(tokens.len() - i)).rev() {
            let span_start = tokens[i].span.0;
            let span_end = tokens[i + len - 1].span.1;
            let surface = &question[span_start..span_end];
            let key = normalize_value(surface);
            if let Some(found) = dict.lookup(&key) {
                matched = len;
                targets = Some((found, surface.to_string()));
                break;
            }
        }
        match targets {
            Some((found, surface)) => {
                let ambiguous = found.len() > 1;
                for (table, column) in found {
                    let mut properties = BTreeMap::new();
                    properties.insert("filterFlag".to_string(), "1".to_string());
                    properties.insert("value".to_string(), surface.clone());
                    properties.insert("operator".to_string(), "equals".to_string());
                    if let Some(col) =
                        catalog.table(table).and_then(|t| t.column(column))
                    {
                        properties
                            .insert("dataType".to_string(), col.data_type.as_str().to_string());
                    }
                    if ambiguous {
                        properties.insert("ambiguous".to_string(), "true".to_string());
                    }
                    push_unique(
                        &mut items,
                        DataItem { table: table.clone(), column: column.clone(), properties },
                    );
                }
                i += matched;
            }
            None => i += 1,
        }
    }

    items.sort_by(|a, b| a.key().cmp(&b.key()).then_with(|| {
        a.properties.get("value").cmp(&b.properties.get("value"))
    }));
    items
}

fn push_unique(items: &mut Vec<DataItem>, item: DataItem) {
    if !items.contains(&item) {
        items.push(item);
    }
}

/// Project the filter items into (table, column, value) triples,
/// order-stable.
pub fn extract_column_value_pairs(items: &[DataItem]) -> Vec<(String, String, String)> {
    items
        .iter()
        .filter(|i| i.is_filter())
        .filter_map(|i| {
            i.properties
                .get("value")
                .map(|v| (i.table.clone(), i.column.clone(), v.clone()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Column, DataType, Table};

    fn wh_catalog() -> SchemaCatalog {
        SchemaCatalog::new(
            "warehouse",
            vec![
                Table {
                    name: "products".into(),
                    columns: vec![
                        Column { name: "product_id".into(), data_type: DataType::Integer },
                        Column { name: "price".into(), data_type: DataType::Decimal },
                        Column { name: "name".into(), data_type: DataType::Text },
                    ],
                },
                Table {
                    name: "customers".into(),
                    columns: vec![
                        Column { name: "customer_id".into(), data_type: DataType::Integer },
                        Column { name: "name".into(), data_type: DataType::Text },
                    ],
                },
                Table {
                    name: "vendors".into(),
                    columns: vec![
                        Column { name: "vendor_id".into(), data_type: DataType::Integer },
                        Column { name: "name".into(), data_type: DataType::Text },
                    ],
                },
            ],
            vec![],
            vec![],
        )
        .unwrap()
    }

    fn paper_lrf() -> Vec<LrfRule> {
        let trf = parse_trf_str(
            "root=prop_owner_VAR1_has_VAR2_\n\
             -> has [hasPartOfSpeech(\"verb\"), hasLemmaForm(\"have\")]\n\
             subj -> VAR1 [!hasParseFeature(\"ving\"), hasLemmaForm(\"VAR1\")]\n\
             obj -> VAR2 [hasLemmaForm(\"VAR2\")]\n",
        )
        .unwrap();
        let saf = parse_saf_str(
            "product has price; tableName1 is PRODUCTS; colName1 is PRODUCT_ID; dataType1 is integer; tableName2 is PRODUCTS; colName2 is PRICE; dataType2 is decimal;",
            None,
        )
        .unwrap();
        adapt(&trf, &saf).unwrap()
    }

    #[test]
    fn appendix_a_reproduction() {
        let items = process_query(
            "How many products have price higher than 100?",
            &paper_lrf(),
            &ValueDictionary::default(),
            &wh_catalog(),
        );
        assert_eq!(items.len(), 2, "{items:?}");
        let by_key: BTreeMap<String, &DataItem> =
            items.iter().map(|i| (i.key(), i)).collect();
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

        assert_eq!(
            extract_column_value_pairs(&items),
            vec![("PRODUCTS".to_string(), "PRICE".to_string(), "100".to_string())]
        );
    }

    #[test]
    fn empty_question_yields_nothing() {
        let items = process_query("", &paper_lrf(), &ValueDictionary::default(), &wh_catalog());
        assert!(items.is_empty());
        assert!(extract_column_value_pairs(&[]).is_empty());
    }

    #[test]
    fn dictionary_longest_match() {
        let mut dict = ValueDictionary::default();
        dict.entries
            .insert("acme".into(), vec![("products".into(), "name".into())]);
        dict.entries
            .insert("acme corp".into(), vec![("customers".into(), "name".into())]);
        let items = process_query(
            "Show invoices for ACME Corp",
            &[],
            &dict,
            &wh_catalog(),
        );
        assert_eq!(items.len(), 1, "only the longest match links: {items:?}");
        assert_eq!(items[0].key(), "[CUSTOMERS].[NAME]");
        assert_eq!(items[0].properties["value"], "ACME Corp");
        assert_eq!(items[0].properties["operator"], "equals");
        assert!(!items[0].properties.contains_key("ambiguous"));
    }

    #[test]
    fn ambiguous_dictionary_hits_flagged() {
        let mut dict = ValueDictionary::default();
        dict.entries.insert(
            "acme corp".into(),
            vec![
                ("customers".into(), "name".into()),
                ("vendors".into(), "name".into()),
            ],
        );
        let items = process_query("Orders from Acme   Corp?", &[], &dict, &wh_catalog());
        assert_eq!(items.len(), 2);
        assert!(items.iter().all(|i| i.properties["ambiguous"] == "true"));
        let pairs = extract_column_value_pairs(&items);
        assert_eq!(pairs.len(), 2);
    }

    #[test]
    fn operator_lexicon() {
        let lrf = paper_lrf();
        let dict = ValueDictionary::default();
        let cat = wh_catalog();
        for (q, op) in [
            ("How many products have price higher than 10?", "greaterThan"),
            ("How many products have price greater than 10?", "greaterThan"),
            ("How many products have price at least 10?", "greaterOrEqual"),
            ("How many products have price less than 10?", "lessThan"),
            ("How many products have price lower than 10?", "lessThan"),
            ("How many products have price at most 10?", "lessOrEqual"),
            ("How many products have price of 10?", "equals"),
        ] {
            let items = process_query(q, &lrf, &dict, &cat);
            let filter = items.iter().find(|i| i.is_filter()).unwrap_or_else(|| {
                panic!("no filter item for {q}: {items:?}")
            });
            assert_eq!(filter.properties["operator"], op, "{q}");
        }
    }

    #[test]
    fn every_item_names_a_catalog_column() {
        let cat = wh_catalog();
        let mut dict = ValueDictionary::default();
        dict.entries
            .insert("mini bolt".into(), vec![("products".into(), "name".into())]);
        let items = process_query(
            "How many products have price higher than 100 for Mini Bolt?",
            &paper_lrf(),
            &dict,
            &cat,
        );
        for item in &items {
            let table = cat.table(&item.table).expect("table exists");
            assert!(table.column(&item.column).is_some(), "{item:?}");
        }
    }
}
