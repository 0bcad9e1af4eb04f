//! Constrained-decoding and evaluation toolkit for text-to-SQL.
//!
//! The crate is organized around three capabilities:
//!
//! * an incremental SQL prefix-feasibility engine ([`sql`]) with three
//!   checking modes (lexing, parsing, parsing with schema guards) and two
//!   grammar profiles, designed so parser states can be shared across beam
//!   hypotheses during constrained autoregressive decoding;
//! * a rule-based value-disambiguation engine ([`linker`]) that maps values
//!   in an English question to database columns using an offline value
//!   dictionary and schema-adapted lexical rules, never touching the
//!   database at query time;
//! * Exact-Match and Execution-Accuracy metrics ([`metrics`]) that stay
//!   robust on CTEs, string functions, and nested parenthesized conditions.
//!
//! Supporting modules provide schema catalogs ([`catalog`]), synthetic
//! fixture corpora ([`corpus`]), a mock-LM beam-search harness ([`decode`]),
//! a BRIDGE-style serializer ([`serialize`]), and a line-delimited JSON
//! service ([`service`]).

pub mod catalog;
pub mod corpus;
pub mod decode;
pub mod error;
pub mod guards;
pub mod linker;
pub mod metrics;
pub mod serialize;
pub mod service;
pub mod sql;

pub use catalog::{DataType, SchemaCatalog, Table, ValueDictionary};
pub use error::{Error, Result};
pub use sql::{Mode, ParserState, Profile, Verdict};
