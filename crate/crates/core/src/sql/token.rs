//! SQL tokens and an incremental maximal-munch scanner.
//!
//! The scanner is written so that a prefix of the input can be lexed as far
//! as possible while the trailing fragment that might still grow into a
//! longer token stays pending. This is what lets the feasibility engine
//! accept arbitrary fragment boundaries (subword pieces splitting keywords,
//! identifiers, or literals mid-way).

use std::fmt;

/// Reserved words. Reservation is case-insensitive and independent of the
/// grammar profile; `lower`/`upper`/`trim` are deliberately *not* keywords
/// so they can double as ordinary identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kw {
    Select,
    Distinct,
    From,
    As,
    Join,
    On,
    Where,
    And,
    Or,
    Not,
    In,
    Between,
    Like,
    Is,
    Null,
    Group,
    By,
    Having,
    Order,
    Asc,
    Desc,
    Limit,
    Union,
    Intersect,
    Except,
    All,
    With,
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

pub const KEYWORDS: &[(&str, Kw)] = &[
    ("select", Kw::Select),
    ("distinct", Kw::Distinct),
    ("from", Kw::From),
    ("as", Kw::As),
    ("join", Kw::Join),
    ("on", Kw::On),
    ("where", Kw::Where),
    ("and", Kw::And),
    ("or", Kw::Or),
    ("not", Kw::Not),
    ("in", Kw::In),
    ("between", Kw::Between),
    ("like", Kw::Like),
    ("is", Kw::Is),
    ("null", Kw::Null),
    ("group", Kw::Group),
    ("by", Kw::By),
    ("having", Kw::Having),
    ("order", Kw::Order),
    ("asc", Kw::Asc),
    ("desc", Kw::Desc),
    ("limit", Kw::Limit),
    ("union", Kw::Union),
    ("intersect", Kw::Intersect),
    ("except", Kw::Except),
    ("all", Kw::All),
    ("with", Kw::With),
    ("count", Kw::Count),
    ("sum", Kw::Sum),
    ("avg", Kw::Avg),
    ("min", Kw::Min),
    ("max", Kw::Max),
];

pub fn keyword_of(word: &str) -> Option<Kw> {
    let lower = word.to_ascii_lowercase();
    KEYWORDS.iter().find(|(w, _)| *w == lower).map(|(_, k)| *k)
}

impl Kw {
    pub fn as_str(&self) -> &'static str {
        KEYWORDS
            .iter()
            .find(|(_, k)| k == self)
            .map(|(w, _)| *w)
            .expect("keyword table covers all variants")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Punct {
    LParen,
    RParen,
    Comma,
    Dot,
    Semi,
    Star,
    Plus,
    Minus,
    Slash,
    Eq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Neq, // <> or !=
}

impl Punct {
    pub fn as_str(&self) -> &'static str {
        match self {
            Punct::LParen => "(",
            Punct::RParen => ")",
            Punct::Comma => ",",
            Punct::Dot => ".",
            Punct::Semi => ";",
            Punct::Star => "*",
            Punct::Plus => "+",
            Punct::Minus => "-",
            Punct::Slash => "/",
            Punct::Eq => "=",
            Punct::Lt => "<",
            Punct::LtEq => "<=",
            Punct::Gt => ">",
            Punct::GtEq => ">=",
            Punct::Neq => "<>",
        }
    }
}

/// One lexed token. `offset` is the byte offset of the token start in the
/// full consumed text.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Kw),
    /// Bare or double-quoted identifier; `text` is the decoded name.
    Ident { text: String, quoted: bool },
    /// Integer or decimal literal, kept as written.
    Number(String),
    /// String literal; `value` is the decoded content.
    Str { value: String },
    Punct(Punct),
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Keyword(k) => format!("keyword {}", k.as_str().to_ascii_uppercase()),
            TokenKind::Ident { text, .. } => format!("identifier {text:?}"),
            TokenKind::Number(n) => format!("number {n}"),
            TokenKind::Str { .. } => "string literal".to_string(),
            TokenKind::Punct(p) => format!("'{}'", p.as_str()),
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "{}", k.as_str()),
            TokenKind::Ident { text, quoted } => {
                if *quoted {
                    write!(f, "\"{}\"", text.replace('"', "\"\""))
                } else {
                    write!(f, "{text}")
                }
            }
            TokenKind::Number(n) => write!(f, "{n}"),
            TokenKind::Str { value } => write!(f, "'{}'", value.replace('\'', "''")),
            TokenKind::Punct(p) => write!(f, "{}", p.as_str()),
        }
    }
}

/// Result of scanning a single token from the start of `s` (no leading
/// whitespace).
#[derive(Debug)]
pub struct Scan {
    /// Longest accepting prefix, if any: byte length of the token text.
    pub last_accept: Option<usize>,
    /// True when the automaton is still alive at the end of `s`, meaning a
    /// longer token could match given more input.
    pub alive_at_end: bool,
}

/// Scan one token starting at the first byte of `s`. The caller strips
/// leading whitespace.
pub fn scan_token(s: &str) -> Scan {
    let bytes = s.as_bytes();
    debug_assert!(!bytes.is_empty());
    let c = bytes[0];
    match c {
        b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
            let mut i = 1;
            while i < bytes.len() && is_word_byte(bytes[i]) {
                i += 1;
            }
            Scan { last_accept: Some(i), alive_at_end: i == bytes.len() }
        }
        b'0'..=b'9' => scan_number(bytes),
        b'\'' => scan_quoted(bytes, b'\''),
        b'"' => scan_quoted(bytes, b'"'),
        b'(' | b')' | b',' | b'.' | b';' | b'*' | b'+' | b'-' | b'/' | b'=' => {
            Scan { last_accept: Some(1), alive_at_end: false }
        }
        b'<' => scan_two(bytes, b"=>"),
        b'>' => scan_two(bytes, b"="),
        b'!' => {
            if bytes.len() == 1 {
                Scan { last_accept: None, alive_at_end: true }
            } else if bytes[1] == b'=' {
                Scan { last_accept: Some(2), alive_at_end: false }
            } else {
                Scan { last_accept: None, alive_at_end: false }
            }
        }
        _ => Scan { last_accept: None, alive_at_end: false },
    }
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn scan_number(bytes: &[u8]) -> Scan {
    let mut i = 1;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let int_end = i;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i > frac_start {
            // decimal with at least one fraction digit
            Scan { last_accept: Some(i), alive_at_end: i == bytes.len() }
        } else {
            // "12." — not accepting yet, alive only if input ends here
            Scan { last_accept: Some(int_end), alive_at_end: i == bytes.len() }
        }
    } else {
        Scan { last_accept: Some(int_end), alive_at_end: int_end == bytes.len() }
    }
}

fn scan_quoted(bytes: &[u8], quote: u8) -> Scan {
    let mut i = 1;
    let mut last_accept = None;
    loop {
        if i >= bytes.len() {
            return Scan { last_accept, alive_at_end: true };
        }
        if bytes[i] == quote {
            // closing quote: accepting here, but a doubled quote re-opens
            i += 1;
            last_accept = Some(i);
            if i >= bytes.len() {
                return Scan { last_accept, alive_at_end: true };
            }
            if bytes[i] == quote {
                i += 1; // escaped quote, back inside
            } else {
                return Scan { last_accept, alive_at_end: false };
            }
        } else {
            i += 1;
        }
    }
}

fn scan_two(bytes: &[u8], seconds: &[u8]) -> Scan {
    if bytes.len() == 1 {
        Scan { last_accept: Some(1), alive_at_end: true }
    } else if seconds.contains(&bytes[1]) {
        Scan { last_accept: Some(2), alive_at_end: false }
    } else {
        Scan { last_accept: Some(1), alive_at_end: false }
    }
}

/// Materialize the token whose text is `text` (already known to be a full
/// accepting match).
pub fn make_token(text: &str, offset: usize) -> Token {
    let bytes = text.as_bytes();
    let kind = match bytes[0] {
        b'A'..=b'Z' | b'a'..=b'z' | b'_' => match keyword_of(text) {
            Some(kw) => TokenKind::Keyword(kw),
            None => TokenKind::Ident { text: text.to_string(), quoted: false },
        },
        b'0'..=b'9' => TokenKind::Number(text.to_string()),
        b'\'' => TokenKind::Str { value: text[1..text.len() - 1].replace("''", "'") },
        b'"' => TokenKind::Ident {
            text: text[1..text.len() - 1].replace("\"\"", "\""),
            quoted: true,
        },
        _ => TokenKind::Punct(match text {
            "(" => Punct::LParen,
            ")" => Punct::RParen,
            "," => Punct::Comma,
            "." => Punct::Dot,
            ";" => Punct::Semi,
            "*" => Punct::Star,
            "+" => Punct::Plus,
            "-" => Punct::Minus,
            "/" => Punct::Slash,
            "=" => Punct::Eq,
            "<" => Punct::Lt,
            "<=" => Punct::LtEq,
            ">" => Punct::Gt,
            ">=" => Punct::GtEq,
            "<>" | "!=" => Punct::Neq,
            other => panic!("unrecognized punct {other:?}"),
        }),
    };
    Token { kind, offset }
}

/// Outcome of feeding text through the incremental lexer.
#[derive(Debug)]
pub enum LexStep {
    /// Finalized tokens plus the trailing fragment that may still grow.
    Ok { tokens: Vec<Token>, pending: String },
    /// A byte that cannot start or continue any token.
    Error { offset: usize },
}

/// Lex as much of `pending + fragment` as can be finalized. `base_offset`
/// is the byte offset of `pending`'s start in the full consumed text.
pub fn lex_incremental(pending: &str, fragment: &str, base_offset: usize) -> LexStep {
    let mut text = String::with_capacity(pending.len() + fragment.len());
    text.push_str(pending);
    text.push_str(fragment);
    let mut tokens = Vec::new();
    let mut pos = 0usize;
    loop {
        // skip whitespace between tokens
        let rest = &text[pos..];
        let trimmed = rest.trim_start();
        pos += rest.len() - trimmed.len();
        if trimmed.is_empty() {
            return LexStep::Ok { tokens, pending: String::new() };
        }
        let scan = scan_token(trimmed);
        if scan.alive_at_end {
            // whole remainder could still grow into a longer token
            return LexStep::Ok { tokens, pending: trimmed.to_string() };
        }
        match scan.last_accept {
            None => return LexStep::Error { offset: base_offset + pos },
            Some(len) => {
                tokens.push(make_token(&trimmed[..len], base_offset + pos));
                pos += len;
            }
        }
    }
}

/// Batch-lex a complete string. Returns the token list or the offset of the
/// first illegal byte. An unterminated trailing literal is an error here
/// (this is the whole-statement view; prefix feasibility uses
/// [`lex_incremental`]).
pub fn lex_all(text: &str) -> Result<Vec<Token>, usize> {
    match lex_incremental("", text, 0) {
        LexStep::Error { offset } => Err(offset),
        LexStep::Ok { mut tokens, pending } => {
            if pending.is_empty() {
                return Ok(tokens);
            }
            let scan = scan_token(&pending);
            match scan.last_accept {
                Some(len) if len == pending.len() => {
                    tokens.push(make_token(&pending, text.len() - pending.len()));
                    Ok(tokens)
                }
                _ => Err(text.len() - pending.len()),
            }
        }
    }
}

/// True when `pending` read as a whole is exactly one complete token.
pub fn pending_resolves(pending: &str) -> Option<Token> {
    if pending.is_empty() {
        return None;
    }
    let scan = scan_token(pending);
    match scan.last_accept {
        Some(len) if len == pending.len() => Some(make_token(pending, 0)),
        _ => None,
    }
}
