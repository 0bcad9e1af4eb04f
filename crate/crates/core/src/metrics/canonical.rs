//! Canonical query forms behind the Exact-Match metric.
//!
//! Canonicalization: identifiers lowercased, table aliases and CTE names
//! α-renamed, parenthesized groups erased (the tree already carries the
//! grouping), double negations eliminated, AND/OR sibling multisets and
//! other order-insensitive components sorted. Select-list order stays
//! significant. With `compare_values` off, every literal collapses to a
//! placeholder.

use std::collections::HashMap;

use serde::Serialize;

use crate::catalog::SchemaCatalog;
use crate::sql::ast::*;

/// Light normal form shared with the brute-force permutation oracle:
/// erase `Group` nodes, flatten nested same-operator AND/OR chains,
/// eliminate double negation, unwrap singleton chains. No reordering.
pub fn light_normalize(expr: &Expr) -> Expr {
    match expr {
        Expr::Group(inner) => light_normalize(inner),
        Expr::Not(inner) => {
            let inner = light_normalize(inner);
            match inner {
                Expr::Not(e) => *e,
                other => Expr::Not(Box::new(other)),
            }
        }
        Expr::And(parts) => {
            let mut flat = Vec::new();
            for p in parts {
                match light_normalize(p) {
                    Expr::And(sub) => flat.extend(sub),
                    other => flat.push(other),
                }
            }
            if flat.len() == 1 {
                flat.pop().unwrap()
            } else {
                Expr::And(flat)
            }
        }
        Expr::Or(parts) => {
            let mut flat = Vec::new();
            for p in parts {
                match light_normalize(p) {
                    Expr::Or(sub) => flat.extend(sub),
                    other => flat.push(other),
                }
            }
            if flat.len() == 1 {
                flat.pop().unwrap()
            } else {
                Expr::Or(flat)
            }
        }
        Expr::Cmp { left, op, right } => Expr::Cmp {
            left: Box::new(light_normalize(left)),
            op: *op,
            right: Box::new(light_normalize(right)),
        },
        Expr::Between { expr, low, high } => Expr::Between {
            expr: Box::new(light_normalize(expr)),
            low: Box::new(light_normalize(low)),
            high: Box::new(light_normalize(high)),
        },
        Expr::InList { expr, negated, items } => Expr::InList {
            expr: Box::new(light_normalize(expr)),
            negated: *negated,
            items: items.iter().map(light_normalize).collect(),
        },
        Expr::Like { expr, negated, pattern } => Expr::Like {
            expr: Box::new(light_normalize(expr)),
            negated: *negated,
            pattern: Box::new(light_normalize(pattern)),
        },
        Expr::IsNull { expr, negated } => Expr::IsNull {
            expr: Box::new(light_normalize(expr)),
            negated: *negated,
        },
        Expr::Arith { left, op, right } => Expr::Arith {
            left: Box::new(light_normalize(left)),
            op: *op,
            right: Box::new(light_normalize(right)),
        },
        Expr::Neg(e) => Expr::Neg(Box::new(light_normalize(e))),
        Expr::Agg { func, distinct, arg } => Expr::Agg {
            func: *func,
            distinct: *distinct,
            arg: arg.as_ref().map(|e| Box::new(light_normalize(e))),
        },
        Expr::Func { func, arg } => Expr::Func {
            func: *func,
            arg: Box::new(light_normalize(arg)),
        },
        other => other.clone(),
    }
}

/// Normalize a numeric literal's spelling: strip leading zeros and
/// trailing fractional zeros, so `100`, `0100`, and `100.0` compare equal.
pub fn normalize_number(text: &str) -> String {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (text, None),
    };
    let int_trimmed = int_part.trim_start_matches('0');
    let int_norm = if int_trimmed.is_empty() { "0" } else { int_trimmed };
    match frac_part {
        Some(f) => {
            let f = f.trim_end_matches('0');
            if f.is_empty() {
                int_norm.to_string()
            } else {
                format!("{int_norm}.{f}")
            }
        }
        None => int_norm.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CValue {
    Number(String),
    Str(String),
    Placeholder,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CExpr {
    Column { qualifier: Option<String>, name: String },
    Value(CValue),
    Agg { func: AggFunc, distinct: bool, arg: Option<Box<CExpr>> },
    Func { func: StrFunc, arg: Box<CExpr> },
    Neg(Box<CExpr>),
    Arith { left: Box<CExpr>, op: ArithOp, right: Box<CExpr> },
    Subquery(Box<CanonicalQuery>),
    Cmp { left: Box<CExpr>, op: CmpOp, right: Box<CExpr> },
    Between { expr: Box<CExpr>, low: Box<CExpr>, high: Box<CExpr> },
    InList { expr: Box<CExpr>, negated: bool, items: Vec<CExpr> },
    InSubquery { expr: Box<CExpr>, negated: bool, query: Box<CanonicalQuery> },
    Like { expr: Box<CExpr>, negated: bool, pattern: Box<CExpr> },
    IsNull { expr: Box<CExpr>, negated: bool },
    And(Vec<CExpr>),
    Or(Vec<CExpr>),
    Not(Box<CExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CItem {
    Star,
    QualifiedStar(String),
    Expr { expr: CExpr, alias: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CRelation {
    Table(String),
    Derived(Box<CanonicalQuery>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CanonicalSelect {
    pub distinct: bool,
    pub items: Vec<CItem>,
    /// Relations as a sorted multiset; join structure is flattened.
    pub from: Vec<CRelation>,
    /// ON conditions pooled and sorted.
    pub join_conds: Vec<CExpr>,
    pub where_clause: Option<CExpr>,
    pub group_by: Vec<CExpr>,
    pub having: Option<CExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CanonicalQuery {
    /// CTE bodies in definition order; names are α-renamed away.
    pub ctes: Vec<CanonicalQuery>,
    pub set_chain: Vec<(Option<SetOp>, CanonicalSelect)>,
    pub order_by: Vec<(CExpr, OrderDir)>,
    pub limit: Option<u64>,
}

struct Canonicalizer<'a> {
    catalog: Option<&'a SchemaCatalog>,
    compare_values: bool,
    /// CTE name (lower) -> canonical name, accumulated statement-wide.
    cte_names: HashMap<String, String>,
}

/// Canonicalize a parsed query for Exact-Match comparison.
pub fn canonicalize(
    query: &Query,
    catalog: Option<&SchemaCatalog>,
    compare_values: bool,
) -> CanonicalQuery {
    let mut c = Canonicalizer { catalog, compare_values, cte_names: HashMap::new() };
    c.query(query)
}

impl<'a> Canonicalizer<'a> {
    fn query(&mut self, q: &Query) -> CanonicalQuery {
        // CTE names scope to this query; restore the map on exit
        let saved = self.cte_names.clone();
        let result = self.query_scoped(q);
        self.cte_names = saved;
        result
    }

    fn query_scoped(&mut self, q: &Query) -> CanonicalQuery {
        let mut ctes = Vec::new();
        for cte in &q.ctes {
            // the body sees earlier CTEs but not itself
            let canon_name = format!("cte{}", self.cte_names.len() + 1);
            let body = self.query(&cte.body);
            self.cte_names.insert(cte.name.lower(), canon_name);
            ctes.push(body);
        }
        let mut set_chain = vec![(None, self.select(&q.first))];
        for (op, sel) in &q.ops {
            set_chain.push((Some(*op), self.select(sel)));
        }
        CanonicalQuery {
            ctes,
            set_chain,
            order_by: q
                .order_by
                .iter()
                .map(|item| {
                    // ORDER BY items resolve against the first select
                    let alias_map = self.alias_map(&q.first);
                    (
                        self.expr(&light_normalize(&item.expr), &alias_map, &q.first),
                        item.dir.unwrap_or(OrderDir::Asc),
                    )
                })
                .collect(),
            limit: q.limit,
        }
    }

    /// Original binding name (lower) -> canonical alias. Relations sort by
    /// their relation key; ties keep FROM order.
    fn alias_map(&self, select: &Select) -> HashMap<String, String> {
        let mut entries: Vec<(String, Option<String>)> = Vec::new();
        for tref in select.from.tables() {
            let key = self.relation_key(tref);
            let bind = tref.bind_name().map(|i| i.lower());
            entries.push((key, bind));
        }
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by(|&i, &j| entries[i].0.cmp(&entries[j].0).then(i.cmp(&j)));
        let mut map = HashMap::new();
        for (rank, &i) in order.iter().enumerate() {
            if let Some(bind) = &entries[i].1 {
                map.insert(bind.clone(), format!("a{}", rank + 1));
            }
        }
        map
    }

    fn relation_key(&self, tref: &TableRef) -> String {
        match &tref.factor {
            TableFactor::Table(name) => {
                let lower = name.lower();
                match self.cte_names.get(&lower) {
                    Some(canon) => canon.clone(),
                    None => lower,
                }
            }
            TableFactor::Derived(q) => {
                // deterministic key from the canonical body
                let mut c = Canonicalizer {
                    catalog: self.catalog,
                    compare_values: self.compare_values,
                    cte_names: self.cte_names.clone(),
                };
                format!("~derived:{:?}", c.query(q))
            }
        }
    }

    fn select(&mut self, select: &Select) -> CanonicalSelect {
        let alias_map = self.alias_map(select);
        let mut from: Vec<CRelation> = select
            .from
            .tables()
            .map(|tref| match &tref.factor {
                TableFactor::Table(name) => {
                    let lower = name.lower();
                    CRelation::Table(
                        self.cte_names.get(&lower).cloned().unwrap_or(lower),
                    )
                }
                TableFactor::Derived(q) => CRelation::Derived(Box::new(self.query(q))),
            })
            .collect();
        from.sort();
        let mut join_conds: Vec<CExpr> = select
            .from
            .joins
            .iter()
            .filter_map(|j| j.on.as_ref())
            .map(|on| self.expr(&light_normalize(on), &alias_map, select))
            .collect();
        join_conds.sort();
        CanonicalSelect {
            distinct: select.distinct,
            items: select
                .items
                .iter()
                .map(|item| match item {
                    SelectItem::Star => CItem::Star,
                    SelectItem::QualifiedStar(q) => CItem::QualifiedStar(
                        alias_map.get(&q.lower()).cloned().unwrap_or_else(|| q.lower()),
                    ),
                    SelectItem::Expr { expr, alias } => CItem::Expr {
                        expr: self.expr(&light_normalize(expr), &alias_map, select),
                        alias: alias.as_ref().map(|a| a.lower()),
                    },
                })
                .collect(),
            from,
            join_conds,
            where_clause: select
                .where_clause
                .as_ref()
                .map(|w| self.expr(&light_normalize(w), &alias_map, select)),
            group_by: {
                let mut g: Vec<CExpr> = select
                    .group_by
                    .iter()
                    .map(|e| self.expr(&light_normalize(e), &alias_map, select))
                    .collect();
                g.sort();
                g
            },
            having: select
                .having
                .as_ref()
                .map(|h| self.expr(&light_normalize(h), &alias_map, select)),
        }
    }

    /// Resolve an unqualified column to its owning relation's canonical
    /// alias when the catalog makes that unambiguous.
    fn resolve_unqualified(
        &self,
        name: &str,
        alias_map: &HashMap<String, String>,
        select: &Select,
    ) -> Option<String> {
        let catalog = self.catalog?;
        let lower = name.to_ascii_lowercase();
        let mut owner: Option<String> = None;
        for tref in select.from.tables() {
            let TableFactor::Table(tname) = &tref.factor else {
                return None; // derived tables: stay conservative
            };
            if self.cte_names.contains_key(&tname.lower()) {
                return None; // CTE output columns are not in the catalog
            }
            let table = catalog.table(&tname.name)?;
            if table.column(&lower).is_some() {
                let bind = tref.bind_name()?.lower();
                if owner.is_some() {
                    return None; // ambiguous
                }
                owner = Some(bind);
            }
        }
        owner.and_then(|bind| alias_map.get(&bind).cloned())
    }

    fn expr(
        &mut self,
        expr: &Expr,
        alias_map: &HashMap<String, String>,
        select: &Select,
    ) -> CExpr {
        match expr {
            Expr::Column { qualifier, name } => {
                let name_lower = name.lower();
                match qualifier {
                    Some(q) => CExpr::Column {
                        qualifier: Some(
                            alias_map.get(&q.lower()).cloned().unwrap_or_else(|| q.lower()),
                        ),
                        name: name_lower,
                    },
                    None => CExpr::Column {
                        qualifier: self.resolve_unqualified(&name.name, alias_map, select),
                        name: name_lower,
                    },
                }
            }
            Expr::Number { text, .. } => CExpr::Value(if self.compare_values {
                CValue::Number(normalize_number(text))
            } else {
                CValue::Placeholder
            }),
            Expr::StringLit { value, .. } => CExpr::Value(if self.compare_values {
                CValue::Str(value.clone())
            } else {
                CValue::Placeholder
            }),
            Expr::Agg { func, distinct, arg } => CExpr::Agg {
                func: *func,
                distinct: *distinct,
                arg: arg.as_ref().map(|e| Box::new(self.expr(e, alias_map, select))),
            },
            Expr::Func { func, arg } => CExpr::Func {
                func: *func,
                arg: Box::new(self.expr(arg, alias_map, select)),
            },
            Expr::Neg(e) => CExpr::Neg(Box::new(self.expr(e, alias_map, select))),
            Expr::Arith { left, op, right } => CExpr::Arith {
                left: Box::new(self.expr(left, alias_map, select)),
                op: *op,
                right: Box::new(self.expr(right, alias_map, select)),
            },
            Expr::Subquery(q) => CExpr::Subquery(Box::new(self.query(q))),
            Expr::Cmp { left, op, right } => {
                let mut left = Box::new(self.expr(left, alias_map, select));
                let mut right = Box::new(self.expr(right, alias_map, select));
                // = and <> are symmetric: fix operand order
                if matches!(op, CmpOp::Eq | CmpOp::NotEq) && right < left {
                    std::mem::swap(&mut left, &mut right);
                }
                CExpr::Cmp { left, op: *op, right }
            }
            Expr::Between { expr, low, high } => CExpr::Between {
                expr: Box::new(self.expr(expr, alias_map, select)),
                low: Box::new(self.expr(low, alias_map, select)),
                high: Box::new(self.expr(high, alias_map, select)),
            },
            Expr::InList { expr, negated, items } => {
                let mut citems: Vec<CExpr> =
                    items.iter().map(|e| self.expr(e, alias_map, select)).collect();
                citems.sort();
                CExpr::InList {
                    expr: Box::new(self.expr(expr, alias_map, select)),
                    negated: *negated,
                    items: citems,
                }
            }
            Expr::InSubquery { expr, negated, query } => CExpr::InSubquery {
                expr: Box::new(self.expr(expr, alias_map, select)),
                negated: *negated,
                query: Box::new(self.query(query)),
            },
            Expr::Like { expr, negated, pattern } => CExpr::Like {
                expr: Box::new(self.expr(expr, alias_map, select)),
                negated: *negated,
                pattern: Box::new(self.expr(pattern, alias_map, select)),
            },
            Expr::IsNull { expr, negated } => CExpr::IsNull {
                expr: Box::new(self.expr(expr, alias_map, select)),
                negated: *negated,
            },
            Expr::And(parts) => {
                let mut cs: Vec<CExpr> =
                    parts.iter().map(|p| self.expr(p, alias_map, select)).collect();
                cs.sort();
                CExpr::And(cs)
            }
            Expr::Or(parts) => {
                let mut cs: Vec<CExpr> =
                    parts.iter().map(|p| self.expr(p, alias_map, select)).collect();
                cs.sort();
                CExpr::Or(cs)
            }
            Expr::Not(e) => CExpr::Not(Box::new(self.expr(e, alias_map, select))),
            Expr::Group(e) => self.expr(&light_normalize(e), alias_map, select),
        }
    }
}
