//! Schema-consistency guards: names exist, aliases bind, columns resolve in
//! scope. Violations are values, never faults.
//!
//! Two consumers share these checks: the batch validator ([`validate_query`])
//! walks a parsed tree and collects every violation; the incremental engine
//! calls the same resolution primitives and lets configurations die on the
//! first violation.

use std::fmt;
use std::sync::Arc;

use crate::catalog::SchemaCatalog;
use crate::sql::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    UnknownTable,
    UnknownColumn,
    UnboundAlias,
    AmbiguousColumn,
    DuplicateAlias,
    UnknownCteColumn,
}

impl ViolationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationKind::UnknownTable => "unknown table",
            ViolationKind::UnknownColumn => "unknown column",
            ViolationKind::UnboundAlias => "unbound alias",
            ViolationKind::AmbiguousColumn => "ambiguous column",
            ViolationKind::DuplicateAlias => "duplicate alias",
            ViolationKind::UnknownCteColumn => "unresolvable cte column",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardViolation {
    pub kind: ViolationKind,
    /// Byte offset of the offending identifier in the statement text.
    pub location: usize,
    pub subject: String,
}

impl GuardViolation {
    fn new(kind: ViolationKind, location: usize, subject: impl Into<String>) -> GuardViolation {
        GuardViolation { kind, location, subject: subject.into() }
    }
}

impl fmt::Display for GuardViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} '{}' at offset {}", self.kind.as_str(), self.subject, self.location)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationKind {
    BaseTable,
    Cte,
    Derived,
}

/// One relation visible in a scope: a base table, CTE, or derived subquery,
/// under its binding name.
#[derive(Debug, Clone)]
pub struct RelationBinding {
    /// Lowercased name the relation answers to as a qualifier; `None` for
    /// an unaliased derived table (columns visible, qualifier impossible).
    pub bind_name: Option<String>,
    pub kind: RelationKind,
    /// Lowercased output column names; `None` when unknown (guards off).
    pub columns: Option<Arc<Vec<String>>>,
}

/// Relations visible at one point of a statement. Keys are unique
/// case-insensitively.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    pub relations: Vec<RelationBinding>,
}

impl Scope {
    pub fn bound(&self, name: &str) -> Option<&RelationBinding> {
        let lower = name.to_ascii_lowercase();
        self.relations
            .iter()
            .find(|r| r.bind_name.as_deref() == Some(lower.as_str()))
    }
}

/// CTE names visible at one point, innermost last, with their output
/// columns when known.
pub type CteEnv = Vec<(String, Option<Arc<Vec<String>>>)>;

/// Resolve a FROM-clause relation name: visible CTEs shadow base tables of
/// the same name.
pub fn resolve_relation(
    name: &Ident,
    catalog: Option<&SchemaCatalog>,
    ctes: &CteEnv,
) -> Result<RelationBinding, GuardViolation> {
    let lower = name.lower();
    if let Some((_, cols)) = ctes.iter().rev().find(|(n, _)| *n == lower) {
        return Ok(RelationBinding {
            bind_name: Some(lower),
            kind: RelationKind::Cte,
            columns: cols.clone(),
        });
    }
    let Some(catalog) = catalog else {
        return Ok(RelationBinding { bind_name: Some(lower), kind: RelationKind::BaseTable, columns: None });
    };
    match catalog.table(&name.name) {
        Some(table) => Ok(RelationBinding {
            bind_name: Some(lower),
            kind: RelationKind::BaseTable,
            columns: Some(Arc::new(
                table.columns.iter().map(|c| c.name.to_ascii_lowercase()).collect(),
            )),
        }),
        None => Err(GuardViolation::new(ViolationKind::UnknownTable, name.offset, &name.name)),
    }
}

/// Spec-shaped relation check: ok iff `name` is a base table in the catalog
/// or a CTE/alias visible in `scope`.
pub fn check_relation(
    scope: &Scope,
    name: &Ident,
    catalog: &SchemaCatalog,
) -> Result<(), GuardViolation> {
    if scope.bound(&name.name).is_some() || catalog.table(&name.name).is_some() {
        Ok(())
    } else {
        Err(GuardViolation::new(ViolationKind::UnknownTable, name.offset, &name.name))
    }
}

/// Column resolution against a scope. Qualified: the qualifier must bind in
/// scope and own the column. Unqualified: the column must belong to exactly
/// one visible relation; `fallback_names` (select-list aliases, for ORDER
/// BY / GROUP BY / HAVING positions) rescue a zero-relation miss.
pub fn check_column_with_aliases(
    scope: &Scope,
    qualifier: Option<&Ident>,
    column: &Ident,
    fallback_names: &[String],
) -> Result<(), GuardViolation> {
    let col_lower = column.lower();
    if let Some(q) = qualifier {
        let Some(rel) = scope.bound(&q.name) else {
            return Err(GuardViolation::new(ViolationKind::UnboundAlias, q.offset, &q.name));
        };
        return match &rel.columns {
            None => Ok(()),
            Some(cols) if cols.contains(&col_lower) => Ok(()),
            Some(_) => Err(GuardViolation::new(
                ViolationKind::UnknownColumn,
                column.offset,
                &column.name,
            )),
        };
    }
    let mut holders = 0usize;
    let mut any_unknown = false;
    for rel in &scope.relations {
        match &rel.columns {
            None => any_unknown = true,
            Some(cols) => {
                if cols.contains(&col_lower) {
                    holders += 1;
                }
            }
        }
    }
    match holders {
        0 if any_unknown => Ok(()),
        0 => {
            if fallback_names.iter().any(|a| a.eq_ignore_ascii_case(&column.name)) {
                Ok(())
            } else {
                Err(GuardViolation::new(
                    ViolationKind::UnknownColumn,
                    column.offset,
                    &column.name,
                ))
            }
        }
        1 => Ok(()),
        _ => Err(GuardViolation::new(
            ViolationKind::AmbiguousColumn,
            column.offset,
            &column.name,
        )),
    }
}

/// Spec-shaped column check (no alias fallback).
pub fn check_column(
    scope: &Scope,
    qualifier: Option<&Ident>,
    column: &Ident,
    _catalog: &SchemaCatalog,
) -> Result<(), GuardViolation> {
    check_column_with_aliases(scope, qualifier, column, &[])
}

/// Output column names of a parsed select: alias if present, else terminal
/// column name, else positional `_cN` (1-based item index). Star items
/// expand to the scope's columns and require a resolvable scope.
pub fn output_columns(
    query: &Query,
    catalog: Option<&SchemaCatalog>,
    outer_ctes: &CteEnv,
) -> Result<Vec<String>, GuardViolation> {
    let mut ctes = outer_ctes.clone();
    for cte in &query.ctes {
        let cols = output_columns(&cte.body, catalog, &ctes).ok().map(Arc::new);
        ctes.push((cte.name.lower(), cols));
    }
    let select = &query.first;
    let scope = build_scope(select, catalog, &ctes).map_err(|mut v| {
        v.kind = ViolationKind::UnknownCteColumn;
        v
    })?;
    let mut out = Vec::new();
    for (i, item) in select.items.iter().enumerate() {
        match item {
            SelectItem::Star => {
                let mut any = false;
                for rel in &scope.relations {
                    match &rel.columns {
                        Some(cols) => {
                            out.extend(cols.iter().cloned());
                            any = true;
                        }
                        None => {
                            return Err(GuardViolation::new(
                                ViolationKind::UnknownCteColumn,
                                0,
                                "*",
                            ))
                        }
                    }
                }
                if !any {
                    return Err(GuardViolation::new(ViolationKind::UnknownCteColumn, 0, "*"));
                }
            }
            SelectItem::QualifiedStar(q) => match scope.bound(&q.name).and_then(|r| r.columns.clone()) {
                Some(cols) => out.extend(cols.iter().cloned()),
                None => {
                    return Err(GuardViolation::new(
                        ViolationKind::UnknownCteColumn,
                        q.offset,
                        &q.name,
                    ))
                }
            },
            SelectItem::Expr { expr, alias } => {
                if let Some(a) = alias {
                    out.push(a.lower());
                } else if let Expr::Column { name, .. } = expr {
                    out.push(name.lower());
                } else {
                    out.push(format!("_c{}", i + 1));
                }
            }
        }
    }
    Ok(out)
}

/// Spec-shaped wrapper: output columns of a CTE body with no outer context.
pub fn cte_output_columns(
    cte_body: &Query,
    catalog: Option<&SchemaCatalog>,
) -> Result<Vec<String>, GuardViolation> {
    output_columns(cte_body, catalog, &Vec::new())
}

fn build_scope(
    select: &Select,
    catalog: Option<&SchemaCatalog>,
    ctes: &CteEnv,
) -> Result<Scope, GuardViolation> {
    let mut scope = Scope::default();
    for table_ref in select.from.tables() {
        let mut binding = match &table_ref.factor {
            TableFactor::Table(name) => resolve_relation(name, catalog, ctes)?,
            TableFactor::Derived(q) => RelationBinding {
                bind_name: None,
                kind: RelationKind::Derived,
                columns: output_columns(q, catalog, ctes).ok().map(Arc::new),
            },
        };
        if let Some(alias) = &table_ref.alias {
            binding.bind_name = Some(alias.lower());
        }
        if let Some(name) = &binding.bind_name {
            if scope.bound(name).is_some() {
                let ident = table_ref.alias.as_ref().unwrap_or_else(|| match &table_ref.factor {
                    TableFactor::Table(n) => n,
                    TableFactor::Derived(_) => unreachable!("derived without alias has no bind name"),
                });
                return Err(GuardViolation::new(
                    ViolationKind::DuplicateAlias,
                    ident.offset,
                    &ident.name,
                ));
            }
        }
        scope.relations.push(binding);
    }
    Ok(scope)
}

/// Walk a parsed query and collect every guard violation.
pub fn validate_query(query: &Query, catalog: &SchemaCatalog) -> Vec<GuardViolation> {
    let mut out = Vec::new();
    validate_query_inner(query, Some(catalog), &Vec::new(), &mut out);
    out
}

fn validate_query_inner(
    query: &Query,
    catalog: Option<&SchemaCatalog>,
    outer_ctes: &CteEnv,
    out: &mut Vec<GuardViolation>,
) {
    let mut ctes = outer_ctes.clone();
    for cte in &query.ctes {
        if ctes.iter().any(|(n, _)| *n == cte.name.lower()) {
            out.push(GuardViolation::new(
                ViolationKind::DuplicateAlias,
                cte.name.offset,
                &cte.name.name,
            ));
        }
        validate_query_inner(&cte.body, catalog, &ctes, out);
        let cols = output_columns(&cte.body, catalog, &ctes).ok().map(Arc::new);
        ctes.push((cte.name.lower(), cols));
    }

    let mut first_env: Option<(Scope, Vec<String>)> = None;
    for (i, select) in std::iter::once(&query.first)
        .chain(query.ops.iter().map(|(_, s)| s))
        .enumerate()
    {
        let env = validate_select(select, catalog, &ctes, out);
        if i == 0 {
            first_env = Some(env);
        }
    }

    if let Some((scope, aliases)) = &first_env {
        for item in &query.order_by {
            validate_value_expr(&item.expr, scope, aliases, catalog, &ctes, out);
        }
    }
}

/// Validate one select core; returns its scope and select-list aliases for
/// ORDER BY resolution at the query level.
fn validate_select(
    select: &Select,
    catalog: Option<&SchemaCatalog>,
    ctes: &CteEnv,
    out: &mut Vec<GuardViolation>,
) -> (Scope, Vec<String>) {
    // Derived tables and ON conditions validate against the growing scope.
    let mut scope = Scope::default();
    let mut aliases: Vec<String> = Vec::new();

    let push_ref = |table_ref: &TableRef, scope: &mut Scope, out: &mut Vec<GuardViolation>| {
        let mut binding = match &table_ref.factor {
            TableFactor::Table(name) => match resolve_relation(name, catalog, ctes) {
                Ok(b) => b,
                Err(v) => {
                    out.push(v);
                    RelationBinding {
                        bind_name: Some(name.lower()),
                        kind: RelationKind::BaseTable,
                        columns: None,
                    }
                }
            },
            TableFactor::Derived(q) => {
                validate_query_inner(q, catalog, ctes, out);
                RelationBinding {
                    bind_name: None,
                    kind: RelationKind::Derived,
                    columns: output_columns(q, catalog, ctes).ok().map(Arc::new),
                }
            }
        };
        if let Some(alias) = &table_ref.alias {
            binding.bind_name = Some(alias.lower());
        }
        if let Some(name) = &binding.bind_name {
            if scope.bound(name).is_some() {
                let ident = table_ref
                    .alias
                    .as_ref()
                    .or(match &table_ref.factor {
                        TableFactor::Table(n) => Some(n),
                        TableFactor::Derived(_) => None,
                    })
                    .expect("bound name implies an identifier");
                out.push(GuardViolation::new(
                    ViolationKind::DuplicateAlias,
                    ident.offset,
                    &ident.name,
                ));
            }
        }
        scope.relations.push(binding);
    };

    push_ref(&select.from.first, &mut scope, out);
    for join in &select.from.joins {
        push_ref(&join.table, &mut scope, out);
        if let Some(on) = &join.on {
            validate_value_expr(on, &scope, &[], catalog, ctes, out);
        }
    }

    for item in &select.items {
        match item {
            SelectItem::Star => {}
            SelectItem::QualifiedStar(q) => {
                if scope.bound(&q.name).is_none() && catalog.is_some() {
                    out.push(GuardViolation::new(
                        ViolationKind::UnboundAlias,
                        q.offset,
                        &q.name,
                    ));
                }
            }
            SelectItem::Expr { expr, alias } => {
                validate_value_expr(expr, &scope, &[], catalog, ctes, out);
                if let Some(a) = alias {
                    aliases.push(a.lower());
                }
            }
        }
    }

    if let Some(w) = &select.where_clause {
        validate_value_expr(w, &scope, &[], catalog, ctes, out);
    }
    for e in &select.group_by {
        validate_value_expr(e, &scope, &aliases, catalog, ctes, out);
    }
    if let Some(h) = &select.having {
        validate_value_expr(h, &scope, &aliases, catalog, ctes, out);
    }

    (scope, aliases)
}

fn validate_value_expr(
    expr: &Expr,
    scope: &Scope,
    aliases: &[String],
    catalog: Option<&SchemaCatalog>,
    ctes: &CteEnv,
    out: &mut Vec<GuardViolation>,
) {
    if catalog.is_none() {
        return;
    }
    match expr {
        Expr::Column { qualifier, name } => {
            if let Err(v) = check_column_with_aliases(scope, qualifier.as_ref(), name, aliases) {
                out.push(v);
            }
        }
        Expr::Number { .. } | Expr::StringLit { .. } => {}
        Expr::Agg { arg, .. } => {
            if let Some(a) = arg {
                validate_value_expr(a, scope, aliases, catalog, ctes, out);
            }
        }
        Expr::Func { arg, .. } => validate_value_expr(arg, scope, aliases, catalog, ctes, out),
        Expr::Neg(e) | Expr::Not(e) | Expr::Group(e) => {
            validate_value_expr(e, scope, aliases, catalog, ctes, out)
        }
        Expr::Arith { left, right, .. } | Expr::Cmp { left, right, .. } => {
            validate_value_expr(left, scope, aliases, catalog, ctes, out);
            validate_value_expr(right, scope, aliases, catalog, ctes, out);
        }
        Expr::Subquery(q) => validate_query_inner(q, catalog, ctes, out),
        Expr::Between { expr, low, high } => {
            validate_value_expr(expr, scope, aliases, catalog, ctes, out);
            validate_value_expr(low, scope, aliases, catalog, ctes, out);
            validate_value_expr(high, scope, aliases, catalog, ctes, out);
        }
        Expr::InList { expr, items, .. } => {
            validate_value_expr(expr, scope, aliases, catalog, ctes, out);
            for e in items {
                validate_value_expr(e, scope, aliases, catalog, ctes, out);
            }
        }
        Expr::InSubquery { expr, query, .. } => {
            validate_value_expr(expr, scope, aliases, catalog, ctes, out);
            validate_query_inner(query, catalog, ctes, out);
        }
        Expr::Like { expr, pattern, .. } => {
            validate_value_expr(expr, scope, aliases, catalog, ctes, out);
            validate_value_expr(pattern, scope, aliases, catalog, ctes, out);
        }
        Expr::IsNull { expr, .. } => validate_value_expr(expr, scope, aliases, catalog, ctes, out),
        Expr::And(parts) | Expr::Or(parts) => {
            for p in parts {
                validate_value_expr(p, scope, aliases, catalog, ctes, out);
            }
        }
    }
}
