//! Abstract syntax tree for the supported SQL subset.
//!
//! The tree keeps explicit `Group` nodes for parenthesized boolean
//! conditions — they are never normalized away at parse time, so the
//! metrics layer can reason about grouping. `Display` renders the tree
//! back to SQL with canonical spacing.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Identifier with the byte offset of its occurrence (for guard
/// diagnostics). Equality includes the offset; canonical forms drop it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub offset: usize,
}

impl Ident {
    pub fn new(name: impl Into<String>, offset: usize) -> Ident {
        Ident { name: name.into(), offset }
    }

    pub fn lower(&self) -> String {
        self.name.to_ascii_lowercase()
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if needs_quoting(&self.name) {
            write!(f, "\"{}\"", self.name.replace('"', "\"\""))
        } else {
            f.write_str(&self.name)
        }
    }
}

fn needs_quoting(name: &str) -> bool {
    name.is_empty()
        || !name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
        || name.chars().next().is_some_and(|c| c.is_ascii_digit())
        || super::token::keyword_of(name).is_some()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub ctes: Vec<Cte>,
    pub first: Select,
    pub ops: Vec<(SetOp, Select)>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cte {
    pub name: Ident,
    pub body: Box<Query>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SetOp {
    Union { all: bool },
    Intersect,
    Except,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Select {
    pub distinct: bool,
    pub items: Vec<SelectItem>,
    pub from: FromClause,
    pub where_clause: Option<Expr>,
    pub group_by: Vec<Expr>,
    pub having: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Star,
    QualifiedStar(Ident),
    Expr { expr: Expr, alias: Option<Ident> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FromClause {
    pub first: TableRef,
    pub joins: Vec<Join>,
}

impl FromClause {
    /// All table references, the leading one first.
    pub fn tables(&self) -> impl Iterator<Item = &TableRef> {
        std::iter::once(&self.first).chain(self.joins.iter().map(|j| &j.table))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Join {
    pub table: TableRef,
    pub on: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRef {
    pub factor: TableFactor,
    pub alias: Option<Ident>,
}

impl TableRef {
    /// Name this reference binds in scope: the alias, or the base
    /// table/CTE name for plain references.
    pub fn bind_name(&self) -> Option<&Ident> {
        self.alias.as_ref().or(match &self.factor {
            TableFactor::Table(name) => Some(name),
            TableFactor::Derived(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableFactor {
    Table(Ident),
    Derived(Box<Query>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderItem {
    pub expr: Expr,
    pub dir: Option<OrderDir>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OrderDir {
    Asc,
    Desc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AggFunc {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl AggFunc {
    pub fn as_str(&self) -> &'static str {
        match self {
            AggFunc::Count => "count",
            AggFunc::Sum => "sum",
            AggFunc::Avg => "avg",
            AggFunc::Min => "min",
            AggFunc::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrFunc {
    Lower,
    Upper,
    Trim,
}

impl StrFunc {
    pub fn as_str(&self) -> &'static str {
        match self {
            StrFunc::Lower => "lower",
            StrFunc::Upper => "upper",
            StrFunc::Trim => "trim",
        }
    }

    pub fn parse(name: &str) -> Option<StrFunc> {
        match name.to_ascii_lowercase().as_str() {
            "lower" => Some(StrFunc::Lower),
            "upper" => Some(StrFunc::Upper),
            "trim" => Some(StrFunc::Trim),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
}

impl CmpOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::NotEq => "<>",
            CmpOp::Lt => "<",
            CmpOp::LtEq => "<=",
            CmpOp::Gt => ">",
            CmpOp::GtEq => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Column { qualifier: Option<Ident>, name: Ident },
    Number { text: String, offset: usize },
    StringLit { value: String, offset: usize },
    /// Aggregate call; `arg: None` is `count(*)`.
    Agg { func: AggFunc, distinct: bool, arg: Option<Box<Expr>> },
    /// Scalar string function (extended profile).
    Func { func: StrFunc, arg: Box<Expr> },
    Neg(Box<Expr>),
    Arith { left: Box<Expr>, op: ArithOp, right: Box<Expr> },
    /// Scalar subquery (comparison right-hand side).
    Subquery(Box<Query>),
    Cmp { left: Box<Expr>, op: CmpOp, right: Box<Expr> },
    Between { expr: Box<Expr>, low: Box<Expr>, high: Box<Expr> },
    InList { expr: Box<Expr>, negated: bool, items: Vec<Expr> },
    InSubquery { expr: Box<Expr>, negated: bool, query: Box<Query> },
    Like { expr: Box<Expr>, negated: bool, pattern: Box<Expr> },
    IsNull { expr: Box<Expr>, negated: bool },
    /// N-ary conjunction / disjunction; chains are flattened per
    /// precedence level at parse time.
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Not(Box<Expr>),
    /// Explicit parenthesized boolean group (extended profile).
    Group(Box<Expr>),
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.ctes.is_empty() {
            f.write_str("WITH ")?;
            for (i, cte) in self.ctes.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{} AS ({})", cte.name, cte.body)?;
            }
            f.write_str(" ")?;
        }
        write!(f, "{}", self.first)?;
        for (op, sel) in &self.ops {
            let op_str = match op {
                SetOp::Union { all: false } => "UNION",
                SetOp::Union { all: true } => "UNION ALL",
                SetOp::Intersect => "INTERSECT",
                SetOp::Except => "EXCEPT",
            };
            write!(f, " {op_str} {sel}")?;
        }
        if !self.order_by.is_empty() {
            f.write_str(" ORDER BY ")?;
            for (i, item) in self.order_by.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", item.expr)?;
                match item.dir {
                    Some(OrderDir::Asc) => f.write_str(" ASC")?,
                    Some(OrderDir::Desc) => f.write_str(" DESC")?,
                    None => {}
                }
            }
        }
        if let Some(limit) = self.limit {
            write!(f, " LIMIT {limit}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Select {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match item {
                SelectItem::Star => f.write_str("*")?,
                SelectItem::QualifiedStar(q) => write!(f, "{q}.*")?,
                SelectItem::Expr { expr, alias } => {
                    write!(f, "{expr}")?;
                    if let Some(a) = alias {
                        write!(f, " AS {a}")?;
                    }
                }
            }
        }
        write!(f, " FROM {}", self.from.first)?;
        for join in &self.from.joins {
            write!(f, " JOIN {}", join.table)?;
            if let Some(on) = &join.on {
                write!(f, " ON {on}")?;
            }
        }
        if let Some(w) = &self.where_clause {
            write!(f, " WHERE {w}")?;
        }
        if !self.group_by.is_empty() {
            f.write_str(" GROUP BY ")?;
            for (i, e) in self.group_by.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{e}")?;
            }
        }
        if let Some(h) = &self.having {
            write!(f, " HAVING {h}")?;
        }
        Ok(())
    }
}

impl fmt::Display for TableRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.factor {
            TableFactor::Table(name) => write!(f, "{name}")?,
            TableFactor::Derived(q) => write!(f, "({q})")?,
        }
        if let Some(a) = &self.alias {
            write!(f, " AS {a}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column { qualifier, name } => {
                if let Some(q) = qualifier {
                    write!(f, "{q}.{name}")
                } else {
                    write!(f, "{name}")
                }
            }
            Expr::Number { text, .. } => f.write_str(text),
            Expr::StringLit { value, .. } => write!(f, "'{}'", value.replace('\'', "''")),
            Expr::Agg { func, distinct, arg } => match arg {
                None => write!(f, "{}(*)", func.as_str()),
                Some(e) => {
                    if *distinct {
                        write!(f, "{}(DISTINCT {e})", func.as_str())
                    } else {
                        write!(f, "{}({e})", func.as_str())
                    }
                }
            },
            Expr::Func { func, arg } => write!(f, "{}({arg})", func.as_str()),
            Expr::Neg(e) => write!(f, "-{e}"),
            Expr::Arith { left, op, right } => write!(f, "{left} {} {right}", op.as_str()),
            Expr::Subquery(q) => write!(f, "({q})"),
            Expr::Cmp { left, op, right } => write!(f, "{left} {} {right}", op.as_str()),
            Expr::Between { expr, low, high } => write!(f, "{expr} BETWEEN {low} AND {high}"),
            Expr::InList { expr, negated, items } => {
                write!(f, "{expr} {}IN (", if *negated { "NOT " } else { "" })?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str(")")
            }
            Expr::InSubquery { expr, negated, query } => {
                write!(f, "{expr} {}IN ({query})", if *negated { "NOT " } else { "" })
            }
            Expr::Like { expr, negated, pattern } => {
                write!(f, "{expr} {}LIKE {pattern}", if *negated { "NOT " } else { "" })
            }
            Expr::IsNull { expr, negated } => {
                write!(f, "{expr} IS {}NULL", if *negated { "NOT " } else { "" })
            }
            Expr::And(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" AND ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            Expr::Or(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" OR ")?;
                    }
                    // AND binds tighter than OR; an AND child needs no parens,
                    // but we never synthesize parens here — Group nodes carry them.
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            Expr::Not(e) => write!(f, "NOT {e}"),
            Expr::Group(e) => write!(f, "({e})"),
        }
    }
}
