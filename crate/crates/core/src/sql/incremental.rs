//! Incremental prefix-feasibility engine.
//!
//! A [`ParserState`] is an immutable snapshot of an in-progress parse:
//! the unresolved text fragment, the set of live grammar configurations
//! (possible parser stacks with their guard contexts), and the verdict.
//! `advance` returns a new state and never mutates the receiver, so a beam
//! of hypotheses can fan out from a shared ancestor; stacks are persistent
//! linked lists, so a beam of width B over length-L output costs O(B·L)
//! state memory.
//!
//! Configurations are explored breadth-first: nonterminals on top of a
//! stack expand to their alternatives, action symbols update the guard
//! context (and kill the configuration on a schema violation), terminals
//! consume the next token. The prefix is judged `Invalid` exactly when no
//! configuration survives.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::grammar::{Act, Grammar, Sym, Term};
use super::token::{self, LexStep, Punct, Token, TokenKind};
use super::{Mode, Profile, Verdict};
use crate::catalog::SchemaCatalog;
use crate::error::{Error, Result};
use crate::guards::{self, RelationBinding, RelationKind, Scope};
use crate::sql::ast::Ident;

// ---------------------------------------------------------------------------
// persistent stacks

#[derive(Debug)]
struct Node {
    sym: Sym,
    rest: Stack,
    hash: u64,
}

type Stack = Option<Arc<Node>>;

fn stack_push(rest: &Stack, sym: Sym) -> Stack {
    let mut h = DefaultHasher::new();
    sym.hash(&mut h);
    rest.as_ref().map(|n| n.hash).unwrap_or(0).hash(&mut h);
    Some(Arc::new(Node { sym, rest: rest.clone(), hash: h.finish() }))
}

fn stack_hash(stack: &Stack) -> u64 {
    stack.as_ref().map(|n| n.hash).unwrap_or(0)
}

/// Push a production body onto `rest` so the body's first symbol ends up on
/// top.
fn push_body(rest: &Stack, body: &[Sym]) -> Stack {
    let mut stack = rest.clone();
    for sym in body.iter().rev() {
        stack = stack_push(&stack, *sym);
    }
    stack
}

// ---------------------------------------------------------------------------
// guard context carried per configuration

#[derive(Debug, Clone)]
struct IdentCap {
    text: String,
    offset: usize,
}

impl IdentCap {
    fn ident(&self) -> Ident {
        Ident::new(self.text.clone(), self.offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
enum Phase {
    #[default]
    SelectList,
    From,
    PostFrom,
    GroupHaving,
}

#[derive(Debug, Clone)]
enum ItemName {
    Star,
    QualStar(String),
    Named(String),
    Positional,
}

#[derive(Debug, Clone)]
enum Deferred {
    Col { qualifier: Option<IdentCap>, name: IdentCap },
    Qualifier(IdentCap),
}

#[derive(Debug, Clone, Default)]
struct SelectFrame {
    relations: Vec<RelationBinding>,
    pending_rel: Option<RelationBinding>,
    deferred: Vec<Deferred>,
    phase: Phase,
    items: Vec<ItemName>,
    aliases: Vec<String>,
    item_start: u32,
    last_col: Option<(String, u32)>,
}

#[derive(Debug, Clone)]
struct FirstEnv {
    relations: Vec<RelationBinding>,
    aliases: Vec<String>,
    output: Option<Arc<Vec<String>>>,
}

#[derive(Debug, Clone, Default)]
struct QueryFrame {
    ctes: Vec<(String, Option<Arc<Vec<String>>>)>,
    pending_cte: Option<String>,
    first_env: Option<FirstEnv>,
}

#[derive(Debug, Clone)]
enum Frame {
    Query(QueryFrame),
    Select(SelectFrame),
}

#[derive(Debug, Clone)]
struct Ctx {
    guards: bool,
    catalog: Option<Arc<SchemaCatalog>>,
    frames: Vec<Frame>,
    stash: Option<IdentCap>,
    last_output: Option<Option<Arc<Vec<String>>>>,
}

impl Ctx {
    fn top_select(&mut self) -> Option<&mut SelectFrame> {
        match self.frames.last_mut() {
            Some(Frame::Select(sf)) => Some(sf),
            _ => None,
        }
    }

    fn top_query(&mut self) -> Option<&mut QueryFrame> {
        match self.frames.last_mut() {
            Some(Frame::Query(qf)) => Some(qf),
            _ => None,
        }
    }

    /// CTE names visible here, outermost first (resolution scans from the
    /// back, so inner names shadow outer ones).
    fn cte_env(&self) -> guards::CteEnv {
        let mut env = Vec::new();
        for frame in &self.frames {
            if let Frame::Query(qf) = frame {
                env.extend(qf.ctes.iter().cloned());
            }
        }
        env
    }
}

#[derive(Clone)]
struct Config {
    stack: Stack,
    ctx: Arc<Ctx>,
}

impl Config {
    fn key(&self) -> (u64, usize) {
        (stack_hash(&self.stack), Arc::as_ptr(&self.ctx) as usize)
    }
}

// ---------------------------------------------------------------------------
// actions

fn apply(act: Act, ctx: &Arc<Ctx>, prev: Option<&Token>, tok_count: u32) -> Option<Arc<Ctx>> {
    let prev_ident = || -> Option<IdentCap> {
        match prev {
            Some(Token { kind: TokenKind::Ident { text, .. }, offset }) => {
                Some(IdentCap { text: text.clone(), offset: *offset })
            }
            _ => None,
        }
    };

    let mut c: Ctx = (**ctx).clone();
    match act {
        Act::QueryBegin => c.frames.push(Frame::Query(QueryFrame::default())),
        Act::QueryEnd => match c.frames.pop() {
            Some(Frame::Query(qf)) => {
                c.last_output = Some(qf.first_env.and_then(|e| e.output));
            }
            _ => return None,
        },
        Act::BeginSelect => c.frames.push(Frame::Select(SelectFrame::default())),
        Act::PhaseFrom => c.top_select()?.phase = Phase::From,
        Act::CloseFrom => {
            let guards_on = c.guards;
            let sf = c.top_select()?;
            if guards_on {
                let scope = Scope { relations: sf.relations.clone() };
                for d in &sf.deferred {
                    match d {
                        Deferred::Col { qualifier, name } => {
                            let q = qualifier.as_ref().map(|q| q.ident());
                            guards::check_column_with_aliases(
                                &scope,
                                q.as_ref(),
                                &name.ident(),
                                &[],
                            )
                            .ok()?;
                        }
                        Deferred::Qualifier(q) => {
                            scope.bound(&q.text)?;
                        }
                    }
                }
            }
            sf.deferred.clear();
            sf.phase = Phase::PostFrom;
        }
        Act::PhaseGroup => c.top_select()?.phase = Phase::GroupHaving,
        Act::EndSelect => {
            let Some(Frame::Select(sf)) = c.frames.pop() else {
                return None;
            };
            let mut out = Vec::new();
            let mut known = true;
            'items: for (i, item) in sf.items.iter().enumerate() {
                match item {
                    ItemName::Star => {
                        if sf.relations.is_empty() {
                            known = false;
                            break 'items;
                        }
                        for rel in &sf.relations {
                            match &rel.columns {
                                Some(cols) => out.extend(cols.iter().cloned()),
                                None => {
                                    known = false;
                                    break 'items;
                                }
                            }
                        }
                    }
                    ItemName::QualStar(q) => {
                        let cols = sf
                            .relations
                            .iter()
                            .find(|r| r.bind_name.as_deref() == Some(q.as_str()))
                            .and_then(|r| r.columns.clone());
                        match cols {
                            Some(cols) => out.extend(cols.iter().cloned()),
                            None => {
                                known = false;
                                break 'items;
                            }
                        }
                    }
                    ItemName::Named(n) => out.push(n.clone()),
                    ItemName::Positional => out.push(format!("_c{}", i + 1)),
                }
            }
            let qf = c.top_query()?;
            if qf.first_env.is_none() {
                qf.first_env = Some(FirstEnv {
                    relations: sf.relations,
                    aliases: sf.aliases,
                    output: if known { Some(Arc::new(out)) } else { None },
                });
            }
        }
        Act::StashIdent => c.stash = Some(prev_ident()?),
        Act::ItemStar => c.top_select()?.items.push(ItemName::Star),
        Act::ItemQualStar => {
            let q = c.stash.take()?;
            let guards_on = c.guards;
            let sf = c.top_select()?;
            if guards_on && sf.phase == Phase::SelectList {
                sf.deferred.push(Deferred::Qualifier(q.clone()));
            }
            sf.items.push(ItemName::QualStar(q.text.to_ascii_lowercase()));
        }
        Act::BeginItem => {
            let sf = c.top_select()?;
            sf.item_start = tok_count;
            sf.last_col = None;
        }
        Act::EndItemPlain => {
            let sf = c.top_select()?;
            let span = tok_count.saturating_sub(sf.item_start);
            let name = match &sf.last_col {
                Some((n, end)) if *end == tok_count && (span == 1 || span == 3) => {
                    ItemName::Named(n.clone())
                }
                _ => ItemName::Positional,
            };
            sf.items.push(name);
        }
        Act::EndItemAlias => {
            let alias = prev_ident()?.text.to_ascii_lowercase();
            let sf = c.top_select()?;
            sf.items.push(ItemName::Named(alias.clone()));
            sf.aliases.push(alias);
        }
        Act::RelTable => {
            let name = prev_ident()?;
            let env = c.cte_env();
            let catalog = if c.guards { c.catalog.clone() } else { None };
            let binding = guards::resolve_relation(&name.ident(), catalog.as_deref(), &env).ok()?;
            c.top_select()?.pending_rel = Some(binding);
        }
        Act::RelSubquery => {
            let cols = c.last_output.take().flatten();
            c.top_select()?.pending_rel = Some(RelationBinding {
                bind_name: None,
                kind: RelationKind::Derived,
                columns: cols,
            });
        }
        Act::RelBindPlain => {
            let guards_on = c.guards;
            let sf = c.top_select()?;
            let rel = sf.pending_rel.take()?;
            if guards_on {
                if let Some(n) = &rel.bind_name {
                    if sf.relations.iter().any(|r| r.bind_name.as_deref() == Some(n.as_str())) {
                        return None;
                    }
                }
            }
            sf.relations.push(rel);
        }
        Act::RelBindAlias => {
            let alias = prev_ident()?.text.to_ascii_lowercase();
            let guards_on = c.guards;
            let sf = c.top_select()?;
            let mut rel = sf.pending_rel.take()?;
            rel.bind_name = Some(alias.clone());
            if guards_on
                && sf.relations.iter().any(|r| r.bind_name.as_deref() == Some(alias.as_str()))
            {
                return None;
            }
            sf.relations.push(rel);
        }
        Act::CteName => {
            let name = prev_ident()?.text.to_ascii_lowercase();
            let guards_on = c.guards;
            let qf = c.top_query()?;
            if guards_on && qf.ctes.iter().any(|(n, _)| *n == name) {
                return None;
            }
            qf.pending_cte = Some(name);
        }
        Act::CteClose => {
            let cols = c.last_output.take().flatten();
            let qf = c.top_query()?;
            let name = qf.pending_cte.take()?;
            qf.ctes.push((name, cols));
        }
        Act::ColQual => {
            let qualifier = c.stash.take()?;
            let col = prev_ident()?;
            check_or_defer(&mut c, Some(qualifier), col, tok_count)?;
        }
        Act::ColBare => {
            let col = prev_ident()?;
            check_or_defer(&mut c, None, col, tok_count)?;
        }
    }
    Some(Arc::new(c))
}

fn check_or_defer(
    c: &mut Ctx,
    qualifier: Option<IdentCap>,
    col: IdentCap,
    tok_count: u32,
) -> Option<()> {
    let guards_on = c.guards;
    match c.frames.last_mut() {
        Some(Frame::Select(sf)) => {
            if sf.phase == Phase::SelectList {
                sf.last_col = Some((col.text.to_ascii_lowercase(), tok_count));
                if guards_on {
                    sf.deferred.push(Deferred::Col { qualifier, name: col });
                }
            } else if guards_on {
                let fallback: &[String] =
                    if sf.phase == Phase::GroupHaving { &sf.aliases } else { &[] };
                let scope = Scope { relations: sf.relations.clone() };
                let q = qualifier.as_ref().map(|q| q.ident());
                guards::check_column_with_aliases(&scope, q.as_ref(), &col.ident(), fallback)
                    .ok()?;
            }
            Some(())
        }
        // query level: ORDER BY items resolve against the first select
        Some(Frame::Query(qf)) => {
            if guards_on {
                let env = qf.first_env.as_ref()?;
                let scope = Scope { relations: env.relations.clone() };
                let q = qualifier.as_ref().map(|q| q.ident());
                guards::check_column_with_aliases(&scope, q.as_ref(), &col.ident(), &env.aliases)
                    .ok()?;
            }
            Some(())
        }
        None => None,
    }
}

// ---------------------------------------------------------------------------
// the machine

fn term_matches(term: &Term, kind: &TokenKind) -> bool {
    match (term, kind) {
        (Term::Kw(k), TokenKind::Keyword(k2)) => k == k2,
        (Term::AnyIdent, TokenKind::Ident { .. }) => true,
        (Term::Word(w), TokenKind::Ident { text, quoted: false }) => text.eq_ignore_ascii_case(w),
        (Term::Number, TokenKind::Number(_)) => true,
        (Term::IntNumber, TokenKind::Number(n)) => !n.contains('.'),
        (Term::StringLit, TokenKind::Str { .. }) => true,
        (Term::P(p), TokenKind::Punct(q)) => p == q,
        (
            Term::AnyCmp,
            TokenKind::Punct(
                Punct::Eq | Punct::Neq | Punct::Lt | Punct::LtEq | Punct::Gt | Punct::GtEq,
            ),
        ) => true,
        _ => false,
    }
}

/// Expand configurations until every stack has a terminal (or nothing) on
/// top, running actions along the way.
fn closure(
    configs: &[Config],
    grammar: &Grammar,
    prev: Option<&Token>,
    tok_count: u32,
) -> Vec<Config> {
    let mut out = Vec::new();
    let mut work: Vec<Config> = configs.to_vec();
    let mut seen: HashSet<(u64, usize)> = HashSet::new();
    while let Some(cfg) = work.pop() {
        if !seen.insert(cfg.key()) {
            continue;
        }
        let Some(node) = cfg.stack.clone() else {
            out.push(cfg);
            continue;
        };
        match node.sym {
            Sym::T(_) => out.push(cfg),
            Sym::N(nt) => {
                for alt in grammar.alternatives(nt) {
                    work.push(Config {
                        stack: push_body(&node.rest, alt),
                        ctx: cfg.ctx.clone(),
                    });
                }
            }
            Sym::A(act) => {
                if let Some(ctx) = apply(act, &cfg.ctx, prev, tok_count) {
                    work.push(Config { stack: node.rest.clone(), ctx });
                }
            }
        }
    }
    out
}

fn step(
    configs: &[Config],
    grammar: &Grammar,
    prev: Option<&Token>,
    tok_count: u32,
    tok: &Token,
) -> Vec<Config> {
    let ready = closure(configs, grammar, prev, tok_count);
    let mut next = Vec::new();
    let mut seen: HashSet<(u64, usize)> = HashSet::new();
    for cfg in ready {
        let Some(node) = &cfg.stack else { continue };
        if let Sym::T(term) = node.sym {
            if term_matches(&term, &tok.kind) {
                let advanced = Config { stack: node.rest.clone(), ctx: cfg.ctx };
                if seen.insert(advanced.key()) {
                    next.push(advanced);
                }
            }
        }
    }
    next
}

/// Terminal classes some live configuration would accept next.
fn acceptable_terminals(
    configs: &[Config],
    grammar: &Grammar,
    prev: Option<&Token>,
    tok_count: u32,
) -> Vec<Term> {
    let mut terms = Vec::new();
    for cfg in closure(configs, grammar, prev, tok_count) {
        if let Some(node) = &cfg.stack {
            if let Sym::T(term) = node.sym {
                if !terms.contains(&term) {
                    terms.push(term);
                }
            }
        }
    }
    terms
}

/// Could the pending fragment still grow into a token one of the live
/// configurations accepts? This is what keeps a state alive across
/// mid-token fragment boundaries while still killing words no grammar
/// path can use.
fn pending_could_extend(pending: &str, terms: &[Term]) -> bool {
    let b = pending.as_bytes()[0];
    match b {
        b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
            if terms.contains(&Term::AnyIdent) {
                return true;
            }
            let lower = pending.to_ascii_lowercase();
            terms.iter().any(|t| match t {
                Term::Kw(k) => k.as_str().starts_with(&lower),
                Term::Word(w) => w.starts_with(&lower),
                _ => false,
            })
        }
        b'0'..=b'9' => {
            if pending.contains('.') {
                terms.contains(&Term::Number)
            } else {
                terms.contains(&Term::Number) || terms.contains(&Term::IntNumber)
            }
        }
        b'\'' => terms.contains(&Term::StringLit),
        b'"' => terms.contains(&Term::AnyIdent),
        // the only punct shapes that can stay pending: < > !
        b'<' | b'>' | b'!' => terms.contains(&Term::AnyCmp),
        _ => false,
    }
}

/// Can some configuration pop its entire stack using only nullable
/// productions and successful actions?
fn can_complete(
    configs: &[Config],
    grammar: &Grammar,
    prev: Option<&Token>,
    tok_count: u32,
) -> bool {
    fn rec(
        stack: &Stack,
        ctx: &Arc<Ctx>,
        grammar: &Grammar,
        prev: Option<&Token>,
        tok_count: u32,
    ) -> bool {
        let Some(node) = stack else { return true };
        match node.sym {
            Sym::T(_) => false,
            Sym::A(act) => match apply(act, ctx, prev, tok_count) {
                Some(ctx2) => rec(&node.rest, &ctx2, grammar, prev, tok_count),
                None => false,
            },
            Sym::N(nt) => grammar.alternatives(nt).iter().any(|alt| {
                rec(&push_body(&node.rest, alt), ctx, grammar, prev, tok_count)
            }),
        }
    }
    configs.iter().any(|c| rec(&c.stack, &c.ctx, grammar, prev, tok_count))
}

// ---------------------------------------------------------------------------
// public state

/// Immutable snapshot of an in-progress parse. Advancing returns a new
/// state; `Invalid` is absorbing.
#[derive(Clone)]
pub struct ParserState {
    mode: Mode,
    profile: Profile,
    verdict: Verdict,
    consumed: usize,
    pending: String,
    configs: Vec<Config>,
    last_tok: Option<Token>,
    tok_count: u32,
    paren_depth: i32,
}

impl std::fmt::Debug for ParserState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParserState")
            .field("mode", &self.mode)
            .field("profile", &self.profile)
            .field("verdict", &self.verdict)
            .field("consumed", &self.consumed)
            .field("pending", &self.pending)
            .field("configs", &self.configs.len())
            .finish()
    }
}

impl ParserState {
    /// Empty-prefix state. `ParseWithGuards` requires a catalog.
    pub fn init(
        mode: Mode,
        profile: Profile,
        catalog: Option<Arc<SchemaCatalog>>,
    ) -> Result<ParserState> {
        if mode == Mode::ParseWithGuards && catalog.is_none() {
            return Err(Error::Config(
                "parse_with_guards requires a schema catalog".into(),
            ));
        }
        let configs = if mode == Mode::Lex {
            Vec::new()
        } else {
            let ctx = Ctx {
                guards: mode == Mode::ParseWithGuards,
                catalog,
                frames: Vec::new(),
                stash: None,
                last_output: None,
            };
            vec![Config {
                stack: stack_push(&None, Sym::N(super::grammar::Nt::Statement)),
                ctx: Arc::new(ctx),
            }]
        };
        Ok(ParserState {
            mode,
            profile,
            verdict: Verdict::ValidPrefix,
            consumed: 0,
            pending: String::new(),
            configs,
            last_tok: None,
            tok_count: 0,
            paren_depth: 0,
        })
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    /// Total characters consumed so far, including the pending fragment.
    pub fn consumed(&self) -> usize {
        self.consumed
    }

    /// Raw trailing text not yet resolvable into a token.
    pub fn pending_fragment(&self) -> &str {
        &self.pending
    }

    fn dead(&self, extra: usize) -> ParserState {
        ParserState {
            mode: self.mode,
            profile: self.profile,
            verdict: Verdict::Invalid,
            consumed: self.consumed + extra,
            pending: String::new(),
            configs: Vec::new(),
            last_tok: None,
            tok_count: self.tok_count,
            paren_depth: self.paren_depth,
        }
    }

    /// Consume an arbitrary text fragment (it may split tokens anywhere)
    /// and return the successor state. Malformed input is expressed as
    /// `Invalid`, never as a fault.
    pub fn advance(&self, fragment: &str) -> ParserState {
        if self.verdict == Verdict::Invalid {
            return self.dead(fragment.len());
        }
        let base = self.consumed - self.pending.len();
        let (tokens, pending) = match token::lex_incremental(&self.pending, fragment, base) {
            LexStep::Error { .. } => return self.dead(fragment.len()),
            LexStep::Ok { tokens, pending } => (tokens, pending),
        };
        let mut st = self.clone();
        st.consumed += fragment.len();
        st.pending = pending;
        for tok in tokens {
            if !st.feed(&tok) {
                return self.dead(fragment.len());
            }
        }
        // run pending expansions and actions now so guard deaths surface in
        // this verdict, not the next one
        if st.mode != Mode::Lex {
            let grammar = Grammar::get(st.profile);
            st.configs = closure(&st.configs, grammar, st.last_tok.as_ref(), st.tok_count);
            if st.configs.is_empty() {
                return self.dead(fragment.len());
            }
        }
        st.verdict = st.compute_verdict();
        st
    }

    /// Judge each candidate continuation of this state. The state itself is
    /// unchanged. Calling this on an `Invalid` state is a contract error.
    pub fn feasible_extensions<S: AsRef<str>>(&self, candidates: &[S]) -> Result<Vec<Verdict>> {
        if self.verdict == Verdict::Invalid {
            return Err(Error::Contract(
                "feasible_extensions requires a non-Invalid state".into(),
            ));
        }
        Ok(candidates.iter().map(|c| self.advance(c.as_ref()).verdict).collect())
    }

    fn feed(&mut self, tok: &Token) -> bool {
        match self.mode {
            Mode::Lex => {
                match tok.kind {
                    TokenKind::Punct(Punct::LParen) => self.paren_depth += 1,
                    TokenKind::Punct(Punct::RParen) => {
                        if self.paren_depth == 0 {
                            return false;
                        }
                        self.paren_depth -= 1;
                    }
                    _ => {}
                }
                self.tok_count += 1;
                self.last_tok = Some(tok.clone());
                true
            }
            Mode::ParseNoGuards | Mode::ParseWithGuards => {
                let grammar = Grammar::get(self.profile);
                let next =
                    step(&self.configs, grammar, self.last_tok.as_ref(), self.tok_count, tok);
                self.configs = next;
                self.last_tok = Some(tok.clone());
                self.tok_count += 1;
                !self.configs.is_empty()
            }
        }
    }

    fn compute_verdict(&self) -> Verdict {
        match self.mode {
            Mode::Lex => {
                let (mut depth, mut count) = (self.paren_depth, self.tok_count);
                if !self.pending.is_empty() {
                    match token::pending_resolves(&self.pending) {
                        Some(tok) => {
                            match tok.kind {
                                TokenKind::Punct(Punct::LParen) => depth += 1,
                                TokenKind::Punct(Punct::RParen) => depth -= 1,
                                _ => {}
                            }
                            count += 1;
                        }
                        None => return Verdict::ValidPrefix,
                    }
                }
                if count >= 1 && depth == 0 {
                    Verdict::Complete
                } else {
                    Verdict::ValidPrefix
                }
            }
            Mode::ParseNoGuards | Mode::ParseWithGuards => {
                let grammar = Grammar::get(self.profile);
                if self.pending.is_empty() {
                    if can_complete(&self.configs, grammar, self.last_tok.as_ref(), self.tok_count)
                    {
                        Verdict::Complete
                    } else {
                        Verdict::ValidPrefix
                    }
                } else {
                    if let Some(mut tok) = token::pending_resolves(&self.pending) {
                        tok.offset = self.consumed - self.pending.len();
                        let stepped = step(
                            &self.configs,
                            grammar,
                            self.last_tok.as_ref(),
                            self.tok_count,
                            &tok,
                        );
                        if !stepped.is_empty()
                            && can_complete(&stepped, grammar, Some(&tok), self.tok_count + 1)
                        {
                            return Verdict::Complete;
                        }
                    }
                    let terms = acceptable_terminals(
                        &self.configs,
                        grammar,
                        self.last_tok.as_ref(),
                        self.tok_count,
                    );
                    if pending_could_extend(&self.pending, &terms) {
                        Verdict::ValidPrefix
                    } else {
                        Verdict::Invalid
                    }
                }
            }
        }
    }
}

/// Convenience constructor mirroring the module-level operation shape.
pub fn init(
    mode: Mode,
    profile: Profile,
    catalog: Option<Arc<SchemaCatalog>>,
) -> Result<ParserState> {
    ParserState::init(mode, profile, catalog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Column, DataType, Table};

    fn hr() -> Arc<SchemaCatalog> {
        Arc::new(
            SchemaCatalog::new(
                "hr",
                vec![Table {
                    name: "employees".into(),
                    columns: [
                        "emp_no", "name", "birthdate", "hire_date", "leave_date", "dept",
                        "manager", "salary", "bonus",
                    ]
                    .iter()
                    .map(|c| Column { name: (*c).into(), data_type: DataType::Text })
                    .collect(),
                }],
                vec![],
                vec![],
            )
            .unwrap(),
        )
    }

    fn wh_small() -> Arc<SchemaCatalog> {
        Arc::new(
            SchemaCatalog::new(
                "wh",
                vec![Table {
                    name: "shops".into(),
                    columns: vec![
                        Column { name: "shop_id".into(), data_type: DataType::Integer },
                        Column { name: "name".into(), data_type: DataType::Text },
                        Column { name: "city".into(), data_type: DataType::Text },
                    ],
                }],
                vec![],
                vec![],
            )
            .unwrap(),
        )
    }

    fn state(mode: Mode, profile: Profile, catalog: Option<Arc<SchemaCatalog>>) -> ParserState {
        ParserState::init(mode, profile, catalog).unwrap()
    }

    #[test]
    fn init_states() {
        assert_eq!(state(Mode::Lex, Profile::SpiderSubset, None).verdict(), Verdict::ValidPrefix);
        assert_eq!(
            state(Mode::ParseWithGuards, Profile::Extended, Some(hr())).verdict(),
            Verdict::ValidPrefix
        );
        assert!(matches!(
            ParserState::init(Mode::ParseWithGuards, Profile::Extended, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn whole_statement_verdicts() {
        let s = state(Mode::ParseNoGuards, Profile::SpiderSubset, None);
        assert_eq!(s.advance("SELECT name FROM employees").verdict(), Verdict::Complete);
        // trailing word could still grow into an identifier ("FROMx")
        assert_eq!(s.advance("SELECT FROM").verdict(), Verdict::ValidPrefix);
        // once the separator finalizes the keyword, the prefix is dead
        assert_eq!(s.advance("SELECT FROM ").verdict(), Verdict::Invalid);
        assert_eq!(s.advance("SELECT name FROM employees WHERE").verdict(), Verdict::ValidPrefix);
        // a trailing word no grammar path can use dies immediately
        assert_eq!(s.advance("SELECT name name2").verdict(), Verdict::Invalid);
    }

    #[test]
    fn with_profile_split() {
        let spider = state(Mode::ParseNoGuards, Profile::SpiderSubset, None);
        let ext = state(Mode::ParseNoGuards, Profile::Extended, None);
        assert_eq!(spider.advance("WITH t AS (").verdict(), Verdict::Invalid);
        assert_eq!(ext.advance("WITH t AS (").verdict(), Verdict::ValidPrefix);
        assert_eq!(
            ext.advance("WITH t AS (SELECT name FROM employees) SELECT name FROM t").verdict(),
            Verdict::Complete
        );
    }

    #[test]
    fn keyword_split_mid_token() {
        let s = state(Mode::ParseNoGuards, Profile::Extended, None);
        let s = s.advance("SELECT low");
        assert_eq!(s.verdict(), Verdict::ValidPrefix);
        let s = s.advance("er(name) FROM shops");
        assert_eq!(s.verdict(), Verdict::Complete);
    }

    #[test]
    fn guard_mode_checks_schema() {
        let s = state(Mode::ParseWithGuards, Profile::Extended, Some(hr()));
        assert_eq!(s.advance("SELECT name FROM employees").verdict(), Verdict::Complete);
        assert_eq!(s.advance("SELECT name FROM employeez ").verdict(), Verdict::Invalid);
        // deferred select-list check fires when FROM closes
        assert_eq!(s.advance("SELECT wage").verdict(), Verdict::ValidPrefix);
        assert_eq!(s.advance("SELECT wage FROM employees").verdict(), Verdict::ValidPrefix);
        assert_eq!(s.advance("SELECT wage FROM employees WHERE ").verdict(), Verdict::Invalid);
        // but the same prefix stays alive without guards
        let nog = state(Mode::ParseNoGuards, Profile::Extended, None);
        assert_eq!(
            nog.advance("SELECT wage FROM employees WHERE ").verdict(),
            Verdict::ValidPrefix
        );
    }

    #[test]
    fn feasible_extensions_contract() {
        let s = state(Mode::ParseWithGuards, Profile::Extended, Some(hr())).advance("SELECT ");
        // a bare "FROM" piece is still extendable into an identifier; the
        // finalized keyword is rejected
        let verdicts = s.feasible_extensions(&["*", "FROM ", "name"]).unwrap();
        assert_eq!(verdicts, vec![Verdict::ValidPrefix, Verdict::Invalid, Verdict::ValidPrefix]);
        assert_eq!(s.feasible_extensions(&["FROM"]).unwrap(), vec![Verdict::ValidPrefix]);

        let done = state(Mode::ParseNoGuards, Profile::SpiderSubset, None)
            .advance("SELECT name FROM employees");
        assert_eq!(done.feasible_extensions(&[";"]).unwrap(), vec![Verdict::Complete]);
        let empty: [&str; 0] = [];
        assert_eq!(done.feasible_extensions(&empty).unwrap(), Vec::<Verdict>::new());

        let dead = done.advance(")");
        assert_eq!(dead.verdict(), Verdict::Invalid);
        assert!(dead.feasible_extensions(&[";"]).is_err());
    }

    #[test]
    fn invalid_is_absorbing() {
        let dead = state(Mode::ParseNoGuards, Profile::SpiderSubset, None).advance("SELECT FROM ");
        assert_eq!(dead.verdict(), Verdict::Invalid);
        for frag in ["", " name", "SELECT * FROM t", ";"] {
            assert_eq!(dead.advance(frag).verdict(), Verdict::Invalid);
        }
    }

    #[test]
    fn complete_admits_extension() {
        let s = state(Mode::ParseNoGuards, Profile::SpiderSubset, None)
            .advance("SELECT name FROM employees");
        assert_eq!(s.verdict(), Verdict::Complete);
        let s2 = s.advance(" UNION SELECT dept FROM employees");
        assert_eq!(s2.verdict(), Verdict::Complete);
        let s3 = s2.advance(";");
        assert_eq!(s3.verdict(), Verdict::Complete);
        assert_eq!(s3.advance(" ").verdict(), Verdict::Complete);
        assert_eq!(s3.advance("x").verdict(), Verdict::Invalid);
    }

    #[test]
    fn split_invariance_samples() {
        let text = "SELECT shop_id FROM shops WHERE lower(trim(city)) = 'rome' ORDER BY shop_id DESC LIMIT 3";
        for mode in [Mode::Lex, Mode::ParseNoGuards, Mode::ParseWithGuards] {
            let catalog = (mode == Mode::ParseWithGuards).then(wh_small);
            let whole = state(mode, Profile::Extended, catalog.clone()).advance(text).verdict();
            for cut in 0..=text.len() {
                let split = state(mode, Profile::Extended, catalog.clone())
                    .advance(&text[..cut])
                    .advance(&text[cut..])
                    .verdict();
                assert_eq!(split, whole, "mode {mode:?} cut {cut}");
            }
        }
    }

    #[test]
    fn lex_mode_is_laxest() {
        let s = state(Mode::Lex, Profile::SpiderSubset, None);
        // nonsense, but token-level fine
        assert_eq!(s.advance("FROM FROM (SELECT )").verdict(), Verdict::Complete);
        assert_eq!(s.advance("SELECT (name").verdict(), Verdict::ValidPrefix);
        assert_eq!(s.advance("SELECT )name").verdict(), Verdict::Invalid);
        assert_eq!(s.advance("'unterminated").verdict(), Verdict::ValidPrefix);
        assert_eq!(s.advance("@").verdict(), Verdict::Invalid);
    }

    #[test]
    fn mode_ordering_on_samples() {
        let samples = [
            "SELECT name FROM employees",
            "SELECT FROM",
            "SELECT name FROM employeez",
            "SELECT (",
            "SELECT name name name FROM t",
            "WITH t AS (SELECT name FROM employees) SELECT name FROM t",
        ];
        for text in samples {
            let lex = state(Mode::Lex, Profile::Extended, None).advance(text).verdict();
            let nog = state(Mode::ParseNoGuards, Profile::Extended, None).advance(text).verdict();
            let g = state(Mode::ParseWithGuards, Profile::Extended, Some(hr()))
                .advance(text)
                .verdict();
            // alive sets are ordered: guards ⊆ no-guards ⊆ lex
            if g != Verdict::Invalid {
                assert_ne!(nog, Verdict::Invalid, "{text}");
            }
            if nog != Verdict::Invalid {
                assert_ne!(lex, Verdict::Invalid, "{text}");
            }
        }
    }

    #[test]
    fn cte_columns_visible_to_guards() {
        let s = state(Mode::ParseWithGuards, Profile::Extended, Some(hr()));
        let ok = "WITH t AS (SELECT dept, avg(salary) AS a FROM employees GROUP BY dept) \
                  SELECT dept FROM t WHERE a > 100";
        assert_eq!(s.advance(ok).verdict(), Verdict::Complete);
        // `salary` is not an output column of the CTE; a join could still
        // rescue it, so the prefix dies only when the FROM clause closes
        let bad = "WITH t AS (SELECT dept FROM employees) SELECT salary FROM t";
        assert_eq!(s.advance(bad).verdict(), Verdict::ValidPrefix);
        assert_eq!(s.advance(bad).advance(" WHERE ").verdict(), Verdict::Invalid);
    }

    #[test]
    fn ambiguous_column_dies_under_guards() {
        let cat = Arc::new(
            SchemaCatalog::new(
                "x",
                vec![
                    Table {
                        name: "customers".into(),
                        columns: vec![
                            Column { name: "id".into(), data_type: DataType::Integer },
                            Column { name: "name".into(), data_type: DataType::Text },
                        ],
                    },
                    Table {
                        name: "vendors".into(),
                        columns: vec![
                            Column { name: "id".into(), data_type: DataType::Integer },
                            Column { name: "name".into(), data_type: DataType::Text },
                        ],
                    },
                ],
                vec![],
                vec![],
            )
            .unwrap(),
        );
        let s = state(Mode::ParseWithGuards, Profile::Extended, Some(cat));
        let sql = "SELECT customers.name FROM customers JOIN vendors ON customers.id = vendors.id WHERE name = 'x'";
        assert_eq!(s.advance(sql).verdict(), Verdict::Invalid);
        let qualified = "SELECT customers.name FROM customers JOIN vendors ON customers.id = vendors.id WHERE vendors.name = 'x'";
        assert_eq!(s.advance(qualified).verdict(), Verdict::Complete);
    }

    #[test]
    fn consumed_and_pending_tracking() {
        let s = state(Mode::ParseNoGuards, Profile::SpiderSubset, None).advance("SELECT nam");
        assert_eq!(s.consumed(), 10);
        assert_eq!(s.pending_fragment(), "nam");
        let s = s.advance("e FROM t");
        assert_eq!(s.pending_fragment(), "t");
        assert_eq!(s.verdict(), Verdict::Complete);
    }
}
