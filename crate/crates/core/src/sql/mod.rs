//! SQL front-end: tokens, AST, a batch recursive-descent parser, and the
//! incremental prefix-feasibility engine.
//!
//! The batch parser ([`parser::parse_complete`]) and the incremental engine
//! ([`incremental`]) are deliberately independent implementations of the
//! same grammar; the test suites reconcile them against each other.

use serde::{Deserialize, Serialize};

pub mod ast;
pub mod grammar;
pub mod incremental;
pub mod parser;
pub mod token;

pub use ast::Query;
pub use incremental::ParserState;
pub use parser::parse_complete;

/// Feasibility checking mode, from weakest to strictest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Token-level well-formedness only: legal token shapes, balanced
    /// quotes and parentheses.
    Lex,
    /// Grammatical derivability under the chosen profile.
    ParseNoGuards,
    /// Grammar plus schema-consistency guards.
    ParseWithGuards,
}

/// Grammar profile. `Extended`'s language strictly contains
/// `SpiderSubset`'s: it adds scalar string functions (`lower`, `upper`,
/// `trim`), `WITH` common table expressions, and arbitrarily nested
/// parenthesized boolean groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    SpiderSubset,
    Extended,
}

/// Judgment of a text prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The text can still extend to a complete statement.
    ValidPrefix,
    /// A full statement ends exactly here. Extension may still be possible
    /// (e.g. before `UNION`).
    Complete,
    /// No extension can make the text valid. Absorbing.
    Invalid,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ValidPrefix => "valid_prefix",
            Verdict::Complete => "complete",
            Verdict::Invalid => "invalid",
        })
    }
}
