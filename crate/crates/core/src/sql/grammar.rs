//! Production tables driving the incremental recognizer.
//!
//! The grammar is LL-shaped (no left recursion); list constructs are
//! right-recursive tails so a configuration's stack depth tracks nesting,
//! not input length. Alternatives carry interleaved action symbols that the
//! engine runs to maintain scopes and guard context.

use std::sync::OnceLock;

use super::token::{Kw, Punct};
use super::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    Kw(Kw),
    /// Any identifier token, bare or quoted.
    AnyIdent,
    /// A bare identifier with this exact lowercase spelling (string
    /// function names, which are not reserved).
    Word(&'static str),
    Number,
    /// Number with no decimal point (LIMIT argument).
    IntNumber,
    StringLit,
    P(Punct),
    /// Any comparison operator.
    AnyCmp,
}

/// Guard/scope bookkeeping hooks, interleaved with grammar symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Act {
    QueryBegin,
    QueryEnd,
    BeginSelect,
    PhaseFrom,
    CloseFrom,
    PhaseGroup,
    EndSelect,
    StashIdent,
    ItemStar,
    ItemQualStar,
    BeginItem,
    EndItemPlain,
    EndItemAlias,
    RelTable,
    RelSubquery,
    RelBindPlain,
    RelBindAlias,
    CteName,
    CteClose,
    ColQual,
    ColBare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sym {
    T(Term),
    N(Nt),
    A(Act),
}

macro_rules! nonterminals {
    ($($name:ident),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Nt { $($name),* }
        pub const NT_COUNT: usize = [$(Nt::$name),*].len();
    };
}

nonterminals![
    Statement, SemiOpt, Query, WithOpt, CteList, CteTail, Cte, SetExpr, SetTail, AllOpt,
    SelectCore, DistinctOpt, SelectList, SelectTail, SelectItem, ItemAliasOpt, FromClause,
    JoinTail, OnOpt, TableRef, RelAliasOpt, WhereOpt, GroupOpt, HavingOpt, ExprList,
    ExprListTail, OrderLimit, OrderOpt, OrderList, OrderTail, OrderItem, AscDescOpt, LimitOpt,
    Cond, OrTail, AndCond, AndTail, NotCond, Predicate, PredTail, NotInLike, IsTail, CmpRhs,
    InBody, InListTail, Expr, AddTail, MulExpr, MulTail, Unary, Primary, AggCall, CountBody,
    AggBody, StrCall,
];

pub struct Grammar {
    alts: Vec<Vec<Vec<Sym>>>,
}

impl Grammar {
    pub fn alternatives(&self, nt: Nt) -> &[Vec<Sym>] {
        &self.alts[nt as usize]
    }

    /// Shared grammar instance for a profile.
    pub fn get(profile: Profile) -> &'static Grammar {
        static SPIDER: OnceLock<Grammar> = OnceLock::new();
        static EXTENDED: OnceLock<Grammar> = OnceLock::new();
        match profile {
            Profile::SpiderSubset => SPIDER.get_or_init(|| build(Profile::SpiderSubset)),
            Profile::Extended => EXTENDED.get_or_init(|| build(Profile::Extended)),
        }
    }
}

fn build(profile: Profile) -> Grammar {
    use Nt::*;

    fn kw(k: Kw) -> Sym {
        Sym::T(Term::Kw(k))
    }
    fn p(x: Punct) -> Sym {
        Sym::T(Term::P(x))
    }
    fn n(nt: Nt) -> Sym {
        Sym::N(nt)
    }
    fn a(act: Act) -> Sym {
        Sym::A(act)
    }
    const IDENT: Sym = Sym::T(Term::AnyIdent);

    let ext = profile == Profile::Extended;
    let mut alts: Vec<Vec<Vec<Sym>>> = vec![Vec::new(); NT_COUNT];
    let mut def = |nt: Nt, rules: Vec<Vec<Sym>>| {
        alts[nt as usize] = rules;
    };

    def(Statement, vec![vec![n(Query), n(SemiOpt)]]);
    def(SemiOpt, vec![vec![], vec![p(Punct::Semi)]]);
    def(
        Query,
        vec![vec![a(Act::QueryBegin), n(WithOpt), n(SetExpr), n(OrderLimit), a(Act::QueryEnd)]],
    );
    let mut with_alts = vec![vec![]];
    if ext {
        with_alts.push(vec![kw(Kw::With), n(CteList)]);
    }
    def(WithOpt, with_alts);
    def(CteList, vec![vec![n(Cte), n(CteTail)]]);
    def(CteTail, vec![vec![], vec![p(Punct::Comma), n(Cte), n(CteTail)]]);
    def(
        Cte,
        vec![vec![
            IDENT,
            a(Act::CteName),
            kw(Kw::As),
            p(Punct::LParen),
            n(Query),
            p(Punct::RParen),
            a(Act::CteClose),
        ]],
    );
    def(SetExpr, vec![vec![n(SelectCore), n(SetTail)]]);
    def(
        SetTail,
        vec![
            vec![],
            vec![kw(Kw::Union), n(AllOpt), n(SelectCore), n(SetTail)],
            vec![kw(Kw::Intersect), n(SelectCore), n(SetTail)],
            vec![kw(Kw::Except), n(SelectCore), n(SetTail)],
        ],
    );
    def(AllOpt, vec![vec![], vec![kw(Kw::All)]]);
    def(
        SelectCore,
        vec![vec![
            kw(Kw::Select),
            a(Act::BeginSelect),
            n(DistinctOpt),
            n(SelectList),
            kw(Kw::From),
            a(Act::PhaseFrom),
            n(FromClause),
            a(Act::CloseFrom),
            n(WhereOpt),
            n(GroupOpt),
            a(Act::EndSelect),
        ]],
    );
    def(DistinctOpt, vec![vec![], vec![kw(Kw::Distinct)]]);
    def(SelectList, vec![vec![n(SelectItem), n(SelectTail)]]);
    def(SelectTail, vec![vec![], vec![p(Punct::Comma), n(SelectItem), n(SelectTail)]]);
    def(
        SelectItem,
        vec![
            vec![p(Punct::Star), a(Act::ItemStar)],
            vec![IDENT, a(Act::StashIdent), p(Punct::Dot), p(Punct::Star), a(Act::ItemQualStar)],
            vec![a(Act::BeginItem), n(Expr), n(ItemAliasOpt)],
        ],
    );
    def(
        ItemAliasOpt,
        vec![
            vec![a(Act::EndItemPlain)],
            vec![kw(Kw::As), IDENT, a(Act::EndItemAlias)],
        ],
    );
    def(FromClause, vec![vec![n(TableRef), n(JoinTail)]]);
    def(
        JoinTail,
        vec![vec![], vec![kw(Kw::Join), n(TableRef), n(OnOpt), n(JoinTail)]],
    );
    def(OnOpt, vec![vec![], vec![kw(Kw::On), n(Cond)]]);
    def(
        TableRef,
        vec![
            vec![IDENT, a(Act::RelTable), n(RelAliasOpt)],
            vec![
                p(Punct::LParen),
                n(Query),
                p(Punct::RParen),
                a(Act::RelSubquery),
                n(RelAliasOpt),
            ],
        ],
    );
    def(
        RelAliasOpt,
        vec![
            vec![a(Act::RelBindPlain)],
            vec![kw(Kw::As), IDENT, a(Act::RelBindAlias)],
            vec![IDENT, a(Act::RelBindAlias)],
        ],
    );
    def(WhereOpt, vec![vec![], vec![kw(Kw::Where), n(Cond)]]);
    def(
        GroupOpt,
        vec![
            vec![],
            vec![
                kw(Kw::Group),
                kw(Kw::By),
                a(Act::PhaseGroup),
                n(ExprList),
                n(HavingOpt),
            ],
        ],
    );
    def(HavingOpt, vec![vec![], vec![kw(Kw::Having), n(Cond)]]);
    def(ExprList, vec![vec![n(Expr), n(ExprListTail)]]);
    def(ExprListTail, vec![vec![], vec![p(Punct::Comma), n(Expr), n(ExprListTail)]]);
    def(OrderLimit, vec![vec![n(OrderOpt), n(LimitOpt)]]);
    def(
        OrderOpt,
        vec![vec![], vec![kw(Kw::Order), kw(Kw::By), n(OrderList)]],
    );
    def(OrderList, vec![vec![n(OrderItem), n(OrderTail)]]);
    def(OrderTail, vec![vec![], vec![p(Punct::Comma), n(OrderItem), n(OrderTail)]]);
    def(OrderItem, vec![vec![n(Expr), n(AscDescOpt)]]);
    def(AscDescOpt, vec![vec![], vec![kw(Kw::Asc)], vec![kw(Kw::Desc)]]);
    def(LimitOpt, vec![vec![], vec![kw(Kw::Limit), Sym::T(Term::IntNumber)]]);
    def(Cond, vec![vec![n(AndCond), n(OrTail)]]);
    def(OrTail, vec![vec![], vec![kw(Kw::Or), n(AndCond), n(OrTail)]]);
    def(AndCond, vec![vec![n(NotCond), n(AndTail)]]);
    def(AndTail, vec![vec![], vec![kw(Kw::And), n(NotCond), n(AndTail)]]);
    def(NotCond, vec![vec![kw(Kw::Not), n(NotCond)], vec![n(Predicate)]]);
    let mut pred_alts = vec![vec![n(Expr), n(PredTail)]];
    if ext {
        pred_alts.push(vec![p(Punct::LParen), n(Cond), p(Punct::RParen)]);
    }
    def(Predicate, pred_alts);
    def(
        PredTail,
        vec![
            vec![Sym::T(Term::AnyCmp), n(CmpRhs)],
            vec![kw(Kw::Between), n(Expr), kw(Kw::And), n(Expr)],
            vec![kw(Kw::In), p(Punct::LParen), n(InBody), p(Punct::RParen)],
            vec![kw(Kw::Not), n(NotInLike)],
            vec![kw(Kw::Like), n(Expr)],
            vec![kw(Kw::Is), n(IsTail)],
        ],
    );
    def(
        NotInLike,
        vec![
            vec![kw(Kw::In), p(Punct::LParen), n(InBody), p(Punct::RParen)],
            vec![kw(Kw::Like), n(Expr)],
        ],
    );
    def(IsTail, vec![vec![kw(Kw::Null)], vec![kw(Kw::Not), kw(Kw::Null)]]);
    def(
        CmpRhs,
        vec![
            vec![n(Expr)],
            vec![p(Punct::LParen), n(Query), p(Punct::RParen)],
        ],
    );
    def(InBody, vec![vec![n(Query)], vec![n(Expr), n(InListTail)]]);
    def(InListTail, vec![vec![], vec![p(Punct::Comma), n(Expr), n(InListTail)]]);
    def(Expr, vec![vec![n(MulExpr), n(AddTail)]]);
    def(
        AddTail,
        vec![
            vec![],
            vec![p(Punct::Plus), n(MulExpr), n(AddTail)],
            vec![p(Punct::Minus), n(MulExpr), n(AddTail)],
        ],
    );
    def(MulExpr, vec![vec![n(Unary), n(MulTail)]]);
    def(
        MulTail,
        vec![
            vec![],
            vec![p(Punct::Star), n(Unary), n(MulTail)],
            vec![p(Punct::Slash), n(Unary), n(MulTail)],
        ],
    );
    def(Unary, vec![vec![p(Punct::Minus), n(Unary)], vec![n(Primary)]]);
    let mut primary_alts = vec![
        vec![Sym::T(Term::Number)],
        vec![Sym::T(Term::StringLit)],
        vec![IDENT, a(Act::StashIdent), p(Punct::Dot), IDENT, a(Act::ColQual)],
        vec![IDENT, a(Act::ColBare)],
        vec![n(AggCall)],
    ];
    if ext {
        primary_alts.push(vec![n(StrCall)]);
    }
    def(Primary, primary_alts);
    let agg = |k: Kw, body: Nt| vec![kw(k), p(Punct::LParen), n(body), p(Punct::RParen)];
    def(
        AggCall,
        vec![
            agg(Kw::Count, CountBody),
            agg(Kw::Sum, AggBody),
            agg(Kw::Avg, AggBody),
            agg(Kw::Min, AggBody),
            agg(Kw::Max, AggBody),
        ],
    );
    def(CountBody, vec![vec![p(Punct::Star)], vec![n(AggBody)]]);
    def(AggBody, vec![vec![n(DistinctOpt), n(Expr)]]);
    let strf = |name: &'static str| {
        vec![Sym::T(Term::Word(name)), p(Punct::LParen), n(Expr), p(Punct::RParen)]
    };
    def(StrCall, vec![strf("lower"), strf("upper"), strf("trim")]);

    Grammar { alts }
}
