//! Batch recursive-descent parser producing the full AST.
//!
//! Failures report the byte offset of the offending token and the set of
//! token shapes that would have been accepted there. At choice points the
//! failure that made it furthest wins; expected sets merge on ties.

use super::ast::*;
use super::token::{lex_all, Kw, Punct, Token, TokenKind};
use super::Profile;
use crate::error::Error;

/// Parse a complete SQL statement under `profile`. When a catalog is
/// supplied, schema guards run over the parsed tree and the first
/// violation is reported as an error.
pub fn parse_complete(
    sql: &str,
    profile: Profile,
    catalog: Option<&crate::catalog::SchemaCatalog>,
) -> crate::error::Result<Query> {
    let query = parse_query_only(sql, profile)?;
    if let Some(catalog) = catalog {
        let violations = crate::guards::validate_query(&query, catalog);
        if let Some(v) = violations.first() {
            return Err(Error::Parse {
                offset: v.location,
                expected: format!("schema-consistent identifier ({v})"),
            });
        }
    }
    Ok(query)
}

/// Parse without guard validation.
pub fn parse_query_only(sql: &str, profile: Profile) -> crate::error::Result<Query> {
    let tokens = lex_all(sql).map_err(|offset| Error::Parse {
        offset,
        expected: "a legal SQL token".to_string(),
    })?;
    let mut p = Parser { tokens: &tokens, pos: 0, profile, end: sql.len() };
    let query = p.query().map_err(|f| f.into_error())?;
    // optional trailing semicolon
    if p.peek_punct(Punct::Semi) {
        p.pos += 1;
    }
    if p.pos < p.tokens.len() {
        return Err(Fail::new(p.offset(), "end of statement").into_error());
    }
    Ok(query)
}

#[derive(Debug)]
struct Fail {
    offset: usize,
    expected: Vec<String>,
}

impl Fail {
    fn new(offset: usize, expected: impl Into<String>) -> Fail {
        Fail { offset, expected: vec![expected.into()] }
    }

    fn merge(self, other: Fail) -> Fail {
        use std::cmp::Ordering;
        match self.offset.cmp(&other.offset) {
            Ordering::Greater => self,
            Ordering::Less => other,
            Ordering::Equal => {
                let mut expected = self.expected;
                for e in other.expected {
                    if !expected.contains(&e) {
                        expected.push(e);
                    }
                }
                Fail { offset: self.offset, expected }
            }
        }
    }

    fn into_error(self) -> Error {
        Error::Parse { offset: self.offset, expected: self.expected.join(" | ") }
    }
}

type PResult<T> = Result<T, Fail>;

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    profile: Profile,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map(|t| t.offset).unwrap_or(self.end)
    }

    fn at_kw(&self, kw: Kw) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::Keyword(k), .. }) if *k == kw)
    }

    fn peek_punct(&self, p: Punct) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::Punct(q), .. }) if *q == p)
    }

    fn eat_kw(&mut self, kw: Kw) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_punct(&mut self, p: Punct) -> bool {
        if self.peek_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: Kw) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(Fail::new(self.offset(), format!("keyword {}", kw.as_str().to_ascii_uppercase())))
        }
    }

    fn expect_punct(&mut self, p: Punct) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(Fail::new(self.offset(), format!("'{}'", p.as_str())))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(Token { kind: TokenKind::Ident { text, .. }, offset }) => {
                let id = Ident::new(text.clone(), *offset);
                self.pos += 1;
                Ok(id)
            }
            _ => Err(Fail::new(self.offset(), "identifier")),
        }
    }

    fn query(&mut self) -> PResult<Query> {
        let mut ctes = Vec::new();
        if self.at_kw(Kw::With) {
            if self.profile != Profile::Extended {
                return Err(Fail::new(self.offset(), "keyword SELECT"));
            }
            self.pos += 1;
            loop {
                let name = self.ident()?;
                self.expect_kw(Kw::As)?;
                self.expect_punct(Punct::LParen)?;
                let body = self.query()?;
                self.expect_punct(Punct::RParen)?;
                ctes.push(Cte { name, body: Box::new(body) });
                if !self.eat_punct(Punct::Comma) {
                    break;
                }
            }
        }
        let first = self.select_core()?;
        let mut ops = Vec::new();
        loop {
            let op = if self.eat_kw(Kw::Union) {
                SetOp::Union { all: self.eat_kw(Kw::All) }
            } else if self.eat_kw(Kw::Intersect) {
                SetOp::Intersect
            } else if self.eat_kw(Kw::Except) {
                SetOp::Except
            } else {
                break;
            };
            ops.push((op, self.select_core()?));
        }
        let mut order_by = Vec::new();
        if self.eat_kw(Kw::Order) {
            self.expect_kw(Kw::By)?;
            loop {
                let expr = self.expr()?;
                let dir = if self.eat_kw(Kw::Asc) {
                    Some(OrderDir::Asc)
                } else if self.eat_kw(Kw::Desc) {
                    Some(OrderDir::Desc)
                } else {
                    None
                };
                order_by.push(OrderItem { expr, dir });
                if !self.eat_punct(Punct::Comma) {
                    break;
                }
            }
        }
        let limit = if self.eat_kw(Kw::Limit) {
            match self.peek() {
                Some(Token { kind: TokenKind::Number(n), .. }) if !n.contains('.') => {
                    let v = n.parse::<u64>().map_err(|_| Fail::new(self.offset(), "integer"))?;
                    self.pos += 1;
                    Some(v)
                }
                _ => return Err(Fail::new(self.offset(), "integer")),
            }
        } else {
            None
        };
        Ok(Query { ctes, first, ops, order_by, limit })
    }

    fn select_core(&mut self) -> PResult<Select> {
        self.expect_kw(Kw::Select)?;
        let distinct = self.eat_kw(Kw::Distinct);
        let mut items = vec![self.select_item()?];
        while self.eat_punct(Punct::Comma) {
            items.push(self.select_item()?);
        }
        self.expect_kw(Kw::From)?;
        let first = self.table_ref()?;
        let mut joins = Vec::new();
        while self.eat_kw(Kw::Join) {
            let table = self.table_ref()?;
            let on = if self.eat_kw(Kw::On) { Some(self.cond()?) } else { None };
            joins.push(Join { table, on });
        }
        let where_clause = if self.eat_kw(Kw::Where) { Some(self.cond()?) } else { None };
        let mut group_by = Vec::new();
        let mut having = None;
        if self.eat_kw(Kw::Group) {
            self.expect_kw(Kw::By)?;
            group_by.push(self.expr()?);
            while self.eat_punct(Punct::Comma) {
                group_by.push(self.expr()?);
            }
            if self.eat_kw(Kw::Having) {
                having = Some(self.cond()?);
            }
        }
        Ok(Select {
            distinct,
            items,
            from: FromClause { first, joins },
            where_clause,
            group_by,
            having,
        })
    }

    fn select_item(&mut self) -> PResult<SelectItem> {
        if self.eat_punct(Punct::Star) {
            return Ok(SelectItem::Star);
        }
        // qualified star: IDENT . *
        if let Some(Token { kind: TokenKind::Ident { text, .. }, offset }) = self.peek() {
            let (text, offset) = (text.clone(), *offset);
            if matches!(self.tokens.get(self.pos + 1), Some(Token { kind: TokenKind::Punct(Punct::Dot), .. }))
                && matches!(
                    self.tokens.get(self.pos + 2),
                    Some(Token { kind: TokenKind::Punct(Punct::Star), .. })
                )
            {
                self.pos += 3;
                return Ok(SelectItem::QualifiedStar(Ident::new(text, offset)));
            }
        }
        let expr = self.expr()?;
        let alias = if self.eat_kw(Kw::As) { Some(self.ident()?) } else { None };
        Ok(SelectItem::Expr { expr, alias })
    }

    fn table_ref(&mut self) -> PResult<TableRef> {
        let factor = if self.eat_punct(Punct::LParen) {
            let q = self.query()?;
            self.expect_punct(Punct::RParen)?;
            TableFactor::Derived(Box::new(q))
        } else {
            TableFactor::Table(self.ident().map_err(|f| {
                f.merge(Fail::new(self.offset(), "'(' opening a derived table"))
            })?)
        };
        let has_alias = self.eat_kw(Kw::As)
            || matches!(self.peek(), Some(Token { kind: TokenKind::Ident { .. }, .. }));
        let alias = if has_alias { Some(self.ident()?) } else { None };
        Ok(TableRef { factor, alias })
    }

    fn cond(&mut self) -> PResult<Expr> {
        let mut parts = vec![self.and_cond()?];
        while self.eat_kw(Kw::Or) {
            parts.push(self.and_cond()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Or(parts) })
    }

    fn and_cond(&mut self) -> PResult<Expr> {
        let mut parts = vec![self.not_cond()?];
        while self.eat_kw(Kw::And) {
            parts.push(self.not_cond()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::And(parts) })
    }

    fn not_cond(&mut self) -> PResult<Expr> {
        if self.eat_kw(Kw::Not) {
            // NOT binds tighter than AND/OR but allows stacking
            return Ok(Expr::Not(Box::new(self.not_cond()?)));
        }
        self.predicate()
    }

    fn predicate(&mut self) -> PResult<Expr> {
        if self.profile == Profile::Extended && self.peek_punct(Punct::LParen) {
            self.pos += 1;
            let inner = self.cond()?;
            self.expect_punct(Punct::RParen)?;
            return Ok(Expr::Group(Box::new(inner)));
        }
        let left = self.expr()?;
        self.predicate_tail(left)
    }

    fn predicate_tail(&mut self, left: Expr) -> PResult<Expr> {
        let cmp = match self.peek() {
            Some(Token { kind: TokenKind::Punct(p), .. }) => match p {
                Punct::Eq => Some(CmpOp::Eq),
                Punct::Neq => Some(CmpOp::NotEq),
                Punct::Lt => Some(CmpOp::Lt),
                Punct::LtEq => Some(CmpOp::LtEq),
                Punct::Gt => Some(CmpOp::Gt),
                Punct::GtEq => Some(CmpOp::GtEq),
                _ => None,
            },
            _ => None,
        };
        if let Some(op) = cmp {
            self.pos += 1;
            // scalar subquery allowed on the comparison right-hand side
            let right = if self.peek_punct(Punct::LParen) {
                self.pos += 1;
                let q = self.query()?;
                self.expect_punct(Punct::RParen)?;
                Expr::Subquery(Box::new(q))
            } else {
                self.expr()?
            };
            return Ok(Expr::Cmp { left: Box::new(left), op, right: Box::new(right) });
        }
        if self.eat_kw(Kw::Between) {
            let low = self.expr()?;
            self.expect_kw(Kw::And)?;
            let high = self.expr()?;
            return Ok(Expr::Between {
                expr: Box::new(left),
                low: Box::new(low),
                high: Box::new(high),
            });
        }
        let negated = self.eat_kw(Kw::Not);
        if self.eat_kw(Kw::In) {
            self.expect_punct(Punct::LParen)?;
            if self.at_kw(Kw::Select) || self.at_kw(Kw::With) {
                let q = self.query()?;
                self.expect_punct(Punct::RParen)?;
                return Ok(Expr::InSubquery {
                    expr: Box::new(left),
                    negated,
                    query: Box::new(q),
                });
            }
            let mut items = vec![self.expr()?];
            while self.eat_punct(Punct::Comma) {
                items.push(self.expr()?);
            }
            self.expect_punct(Punct::RParen)?;
            return Ok(Expr::InList { expr: Box::new(left), negated, items });
        }
        if self.eat_kw(Kw::Like) {
            let pattern = self.expr()?;
            return Ok(Expr::Like { expr: Box::new(left), negated, pattern: Box::new(pattern) });
        }
        if negated {
            return Err(Fail::new(self.offset(), "IN or LIKE after NOT"));
        }
        if self.eat_kw(Kw::Is) {
            let negated = self.eat_kw(Kw::Not);
            self.expect_kw(Kw::Null)?;
            return Ok(Expr::IsNull { expr: Box::new(left), negated });
        }
        Err(Fail::new(self.offset(), "comparison operator, BETWEEN, IN, LIKE, or IS"))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut left = self.mul_expr()?;
        loop {
            let op = if self.eat_punct(Punct::Plus) {
                ArithOp::Add
            } else if self.eat_punct(Punct::Minus) {
                ArithOp::Sub
            } else {
                break;
            };
            let right = self.mul_expr()?;
            left = Expr::Arith { left: Box::new(left), op, right: Box::new(right) };
        }
        Ok(left)
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut left = self.unary()?;
        loop {
            let op = if self.eat_punct(Punct::Star) {
                ArithOp::Mul
            } else if self.eat_punct(Punct::Slash) {
                ArithOp::Div
            } else {
                break;
            };
            let right = self.unary()?;
            left = Expr::Arith { left: Box::new(left), op, right: Box::new(right) };
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_punct(Punct::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn agg_kw(&self) -> Option<AggFunc> {
        match self.peek() {
            Some(Token { kind: TokenKind::Keyword(k), .. }) => match k {
                Kw::Count => Some(AggFunc::Count),
                Kw::Sum => Some(AggFunc::Sum),
                Kw::Avg => Some(AggFunc::Avg),
                Kw::Min => Some(AggFunc::Min),
                Kw::Max => Some(AggFunc::Max),
                _ => None,
            },
            _ => None,
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek() {
            Some(Token { kind: TokenKind::Number(n), offset }) => {
                let e = Expr::Number { text: n.clone(), offset: *offset };
                self.pos += 1;
                Ok(e)
            }
            Some(Token { kind: TokenKind::Str { value }, offset }) => {
                let e = Expr::StringLit { value: value.clone(), offset: *offset };
                self.pos += 1;
                Ok(e)
            }
            Some(Token { kind: TokenKind::Keyword(_), .. }) if self.agg_kw().is_some() => {
                let func = self.agg_kw().unwrap();
                self.pos += 1;
                self.expect_punct(Punct::LParen)?;
                if func == AggFunc::Count && self.eat_punct(Punct::Star) {
                    self.expect_punct(Punct::RParen)?;
                    return Ok(Expr::Agg { func, distinct: false, arg: None });
                }
                let distinct = self.eat_kw(Kw::Distinct);
                let arg = self.expr()?;
                self.expect_punct(Punct::RParen)?;
                Ok(Expr::Agg { func, distinct, arg: Some(Box::new(arg)) })
            }
            Some(Token { kind: TokenKind::Ident { text, .. }, offset }) => {
                let (text, offset) = (text.clone(), *offset);
                // string function call: lower/upper/trim followed by '('
                if self.profile == Profile::Extended {
                    if let Some(func) = StrFunc::parse(&text) {
                        if matches!(
                            self.tokens.get(self.pos + 1),
                            Some(Token { kind: TokenKind::Punct(Punct::LParen), .. })
                        ) {
                            self.pos += 2;
                            let arg = self.expr()?;
                            self.expect_punct(Punct::RParen)?;
                            return Ok(Expr::Func { func, arg: Box::new(arg) });
                        }
                    }
                }
                self.pos += 1;
                if self.eat_punct(Punct::Dot) {
                    let name = self.ident()?;
                    Ok(Expr::Column {
                        qualifier: Some(Ident::new(text, offset)),
                        name,
                    })
                } else {
                    Ok(Expr::Column { qualifier: None, name: Ident::new(text, offset) })
                }
            }
            _ => Err(Fail::new(
                self.offset(),
                "number, string literal, column reference, or function call",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(sql: &str, profile: Profile) -> crate::error::Result<Query> {
        parse_query_only(sql, profile)
    }

    #[test]
    fn minimal_select() {
        let q = parse("SELECT * FROM t", Profile::SpiderSubset).unwrap();
        assert_eq!(q.first.items, vec![SelectItem::Star]);
        assert!(q.ctes.is_empty());
        assert!(q.ops.is_empty());
    }

    #[test]
    fn fig2_style_where_tree() {
        let q = parse(
            "SELECT id, bill_amnt FROM inv WHERE (status='RT' OR status='RJ' OR status='P' OR status='A') AND created='Y'",
            Profile::Extended,
        )
        .unwrap();
        let Some(Expr::And(parts)) = &q.first.where_clause else {
            panic!("WHERE root must be AND, got {:?}", q.first.where_clause);
        };
        assert_eq!(parts.len(), 2);
        let Expr::Group(inner) = &parts[0] else {
            panic!("first AND operand must be a parenthesized group");
        };
        let Expr::Or(disjuncts) = inner.as_ref() else {
            panic!("group must contain an OR chain");
        };
        assert_eq!(disjuncts.len(), 4);
        assert!(matches!(&parts[1], Expr::Cmp { .. }));
    }

    #[test]
    fn with_rejected_under_spider_profile() {
        let err = parse(
            "WITH x AS (SELECT a FROM t) SELECT a FROM x",
            Profile::SpiderSubset,
        )
        .unwrap_err();
        match err {
            Error::Parse { offset, .. } => assert_eq!(offset, 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn with_accepted_under_extended() {
        let q = parse(
            "WITH x AS (SELECT a FROM t) SELECT a FROM x",
            Profile::Extended,
        )
        .unwrap();
        assert_eq!(q.ctes.len(), 1);
        assert_eq!(q.ctes[0].name.name, "x");
    }

    #[test]
    fn paren_condition_rejected_under_spider_profile() {
        assert!(parse(
            "SELECT a FROM t WHERE (a = 1 OR a = 2) AND b = 3",
            Profile::SpiderSubset
        )
        .is_err());
        assert!(parse(
            "SELECT a FROM t WHERE (a = 1 OR a = 2) AND b = 3",
            Profile::Extended
        )
        .is_ok());
    }

    #[test]
    fn string_functions_gated_by_profile() {
        let sql = "SELECT name FROM shops WHERE lower(trim(city)) = 'rome'";
        assert!(parse(sql, Profile::SpiderSubset).is_err());
        let q = parse(sql, Profile::Extended).unwrap();
        let Some(Expr::Cmp { left, .. }) = &q.first.where_clause else {
            panic!()
        };
        assert!(matches!(left.as_ref(), Expr::Func { func: StrFunc::Lower, .. }));
    }

    #[test]
    fn lower_still_usable_as_identifier() {
        // `lower` is not reserved; without a call it is a plain column
        let q = parse("SELECT lower FROM t", Profile::Extended).unwrap();
        assert!(matches!(
            &q.first.items[0],
            SelectItem::Expr { expr: Expr::Column { name, .. }, .. } if name.name == "lower"
        ));
    }

    #[test]
    fn select_from_alone_fails() {
        let err = parse("SELECT FROM", Profile::SpiderSubset).unwrap_err();
        assert!(matches!(err, Error::Parse { offset: 7, .. }), "{err:?}");
    }

    #[test]
    fn joins_aggregates_subqueries() {
        let q = parse(
            "SELECT t1.name, count(*) FROM shops AS t1 JOIN sales AS t2 ON t1.shop_id = t2.shop_id \
             WHERE t2.amount > (SELECT avg(amount) FROM sales) GROUP BY t1.name HAVING count(*) >= 2 \
             ORDER BY count(*) DESC LIMIT 5",
            Profile::SpiderSubset,
        )
        .unwrap();
        assert_eq!(q.first.from.joins.len(), 1);
        assert_eq!(q.first.group_by.len(), 1);
        assert!(q.first.having.is_some());
        assert_eq!(q.limit, Some(5));
        assert_eq!(q.order_by.len(), 1);
    }

    #[test]
    fn union_chain() {
        let q = parse(
            "SELECT a FROM t UNION SELECT b FROM u EXCEPT SELECT c FROM v",
            Profile::SpiderSubset,
        )
        .unwrap();
        assert_eq!(q.ops.len(), 2);
        assert_eq!(q.ops[0].0, SetOp::Union { all: false });
        assert_eq!(q.ops[1].0, SetOp::Except);
    }

    #[test]
    fn display_round_trips_through_parser() {
        let cases = [
            "SELECT DISTINCT name FROM employees WHERE salary BETWEEN 10 AND 20",
            "SELECT id FROM inv WHERE (status = 'RT' OR status = 'RJ') AND created = 'Y'",
            "WITH t AS (SELECT dept, avg(salary) AS a FROM employees GROUP BY dept) SELECT dept FROM t WHERE a > 100 ORDER BY dept ASC LIMIT 3",
            "SELECT name FROM employees WHERE dept NOT IN ('Sales', 'R&D') OR name LIKE 'A%'",
            "SELECT emp_no FROM employees WHERE leave_date IS NOT NULL",
            "SELECT salary * 2 FROM employees",
        ];
        for sql in cases {
            let q = parse(sql, Profile::Extended).unwrap();
            let rendered = q.to_string();
            let q2 = parse(&rendered, Profile::Extended)
                .unwrap_or_else(|e| panic!("re-parse of {rendered:?} failed: {e}"));
            assert_eq!(q2.to_string(), rendered, "display must be a fixed point");
        }
    }

    #[test]
    fn trailing_semicolon_and_garbage() {
        assert!(parse("SELECT a FROM t;", Profile::SpiderSubset).is_ok());
        assert!(parse("SELECT a FROM t; x", Profile::SpiderSubset).is_err());
    }

    #[test]
    fn error_carries_expected_set() {
        let err = parse("SELECT name employees", Profile::SpiderSubset).unwrap_err();
        let Error::Parse { expected, .. } = &err else { panic!() };
        assert!(expected.contains("FROM"), "expected mentions FROM: {expected}");
    }
}
