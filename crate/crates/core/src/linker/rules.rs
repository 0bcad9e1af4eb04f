//! Template rules (TRF) and their schema-adapted lexical form (LRF).
//!
//! Rule text format, one blank-line-separated block per rule:
//!
//! ```text
//! root=prop_owner_VAR1_has_VAR2_
//! -> has [hasPartOfSpeech("verb"), hasLemmaForm("have")]
//! subj -> VAR1 [!hasParseFeature("ving"), hasLemmaForm("VAR1")]
//! obj -> VAR2 [hasLemmaForm("VAR2")]
//! ```
//!
//! LRF rules carry one extra `bindings:` line mapping each substituted
//! placeholder (by its substituted lemma) to its table/column/type.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::annotate::{annotate, AnnotatedToken, Pos};
use super::saf::SafEntry;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ConstraintKind {
    HasPartOfSpeech,
    HasLemmaForm,
    HasParseFeature,
}

impl ConstraintKind {
    fn as_str(&self) -> &'static str {
        match self {
            ConstraintKind::HasPartOfSpeech => "hasPartOfSpeech",
            ConstraintKind::HasLemmaForm => "hasLemmaForm",
            ConstraintKind::HasParseFeature => "hasParseFeature",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub value: String,
    pub negated: bool,
}

impl Constraint {
    pub fn matches(&self, token: &AnnotatedToken) -> bool {
        let holds = match self.kind {
            ConstraintKind::HasPartOfSpeech => {
                let pos = match self.value.as_str() {
                    "noun" => Pos::Noun,
                    "verb" => Pos::Verb,
                    "adj" => Pos::Adj,
                    "adv" => Pos::Adv,
                    "num" => Pos::Num,
                    _ => Pos::Other,
                };
                token.pos == pos
            }
            ConstraintKind::HasLemmaForm => token.lemma.eq_ignore_ascii_case(&self.value),
            ConstraintKind::HasParseFeature => token.has_feature(&self.value),
        };
        holds != self.negated
    }

    fn render(&self) -> String {
        format!(
            "{}{}(\"{}\")",
            if self.negated { "!" } else { "" },
            self.kind.as_str(),
            self.value
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Subj,
    Obj,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleArc {
    pub role: Role,
    pub target: String,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrfRule {
    pub name: String,
    pub head: String,
    pub head_constraints: Vec<Constraint>,
    pub arcs: Vec<RuleArc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Binding {
    pub table: String,
    pub column: String,
    pub data_type: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LrfRule {
    pub rule: TrfRule,
    /// substituted placeholder lemma -> bound column
    pub bindings: BTreeMap<String, Binding>,
}

fn is_placeholder(s: &str) -> bool {
    s.starts_with("VAR") && s[3..].chars().all(|c| c.is_ascii_digit()) && s.len() > 3
}

fn parse_constraints(text: &str, line_no: usize) -> Result<Vec<Constraint>> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| Error::Format(format!("line {line_no}: expected [constraints], got {text:?}")))?;
    let mut out = Vec::new();
    for part in inner.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (negated, body) = match part.strip_prefix('!') {
            Some(rest) => (true, rest.trim()),
            None => (false, part),
        };
        let open = body.find("(\"").ok_or_else(|| {
            Error::Format(format!("line {line_no}: malformed constraint {part:?}"))
        })?;
        let kind = match &body[..open] {
            "hasPartOfSpeech" => ConstraintKind::HasPartOfSpeech,
            "hasLemmaForm" => ConstraintKind::HasLemmaForm,
            "hasParseFeature" => ConstraintKind::HasParseFeature,
            other => {
                return Err(Error::Format(format!(
                    "line {line_no}: unknown constraint kind {other:?}"
                )))
            }
        };
        let value = body[open + 2..]
            .strip_suffix("\")")
            .ok_or_else(|| Error::Format(format!("line {line_no}: malformed constraint {part:?}")))?;
        out.push(Constraint { kind, value: value.to_string(), negated });
    }
    Ok(out)
}

fn parse_blocks(text: &str) -> Vec<Vec<(usize, &str)>> {
    let mut blocks = Vec::new();
    let mut current: Vec<(usize, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
        } else {
            current.push((i + 1, line.trim()));
        }
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    blocks
}

fn parse_rule_block(block: &[(usize, &str)]) -> Result<(TrfRule, Option<BTreeMap<String, Binding>>)> {
    let (first_no, first) = block[0];
    let name = first
        .strip_prefix("root=")
        .ok_or_else(|| Error::Format(format!("line {first_no}: rule must start with root=")))?
        .trim()
        .to_string();
    let mut head: Option<(String, Vec<Constraint>)> = None;
    let mut arcs = Vec::new();
    let mut bindings: Option<BTreeMap<String, Binding>> = None;
    for &(no, line) in &block[1..] {
        if let Some(rest) = line.strip_prefix("bindings:") {
            let mut map = BTreeMap::new();
            for part in rest.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                let (key, value) = part.split_once('=').ok_or_else(|| {
                    Error::Format(format!("line {no}: malformed binding {part:?}"))
                })?;
                let (table_col, dtype) = value.rsplit_once(':').ok_or_else(|| {
                    Error::Format(format!("line {no}: binding needs :type, got {value:?}"))
                })?;
                let (table, column) = table_col.split_once('.').ok_or_else(|| {
                    Error::Format(format!("line {no}: binding needs table.column, got {table_col:?}"))
                })?;
                map.insert(
                    key.trim().to_string(),
                    Binding {
                        table: table.trim().to_string(),
                        column: column.trim().to_string(),
                        data_type: dtype.trim().to_string(),
                    },
                );
            }
            bindings = Some(map);
        } else if let Some(rest) = line.strip_prefix("->") {
            let rest = rest.trim();
            let bracket = rest.find('[').ok_or_else(|| {
                Error::Format(format!("line {no}: head line needs [constraints]"))
            })?;
            head = Some((
                rest[..bracket].trim().to_string(),
                parse_constraints(&rest[bracket..], no)?,
            ));
        } else if let Some((role_text, rest)) = line.split_once("->") {
            let role = match role_text.trim() {
                "subj" => Role::Subj,
                "obj" => Role::Obj,
                other => {
                    return Err(Error::Format(format!("line {no}: unknown arc role {other:?}")))
                }
            };
            let rest = rest.trim();
            let bracket = rest.find('[').ok_or_else(|| {
                Error::Format(format!("line {no}: arc line needs [constraints]"))
            })?;
            arcs.push(RuleArc {
                role,
                target: rest[..bracket].trim().to_string(),
                constraints: parse_constraints(&rest[bracket..], no)?,
            });
        } else {
            return Err(Error::Format(format!("line {no}: unrecognized rule line {line:?}")));
        }
    }
    let (head, head_constraints) = head
        .ok_or_else(|| Error::Format(format!("rule {name:?} lacks a head (-> ...) line")))?;
    Ok((TrfRule { name, head, head_constraints, arcs }, bindings))
}

pub fn parse_trf_str(text: &str) -> Result<Vec<TrfRule>> {
    parse_blocks(text)
        .iter()
        .map(|b| {
            let (rule, bindings) = parse_rule_block(b)?;
            if bindings.is_some() {
                return Err(Error::Format(format!(
                    "rule {:?}: bindings line not allowed in a TRF",
                    rule.name
                )));
            }
            Ok(rule)
        })
        .collect()
}

pub fn parse_trf(path: impl AsRef<Path>) -> Result<Vec<TrfRule>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trf_str(&text)
}

pub fn parse_lrf_str(text: &str) -> Result<Vec<LrfRule>> {
    parse_blocks(text)
        .iter()
        .map(|b| {
            let (rule, bindings) = parse_rule_block(b)?;
            Ok(LrfRule { rule, bindings: bindings.unwrap_or_default() })
        })
        .collect()
}

pub fn parse_lrf(path: impl AsRef<Path>) -> Result<Vec<LrfRule>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lrf_str(&text)
}

fn render_rule(rule: &TrfRule, out: &mut String) {
    let _ = writeln!(out, "root={}", rule.name);
    let cs: Vec<String> = rule.head_constraints.iter().map(|c| c.render()).collect();
    let _ = writeln!(out, "-> {} [{}]", rule.head, cs.join(", "));
    for arc in &rule.arcs {
        let role = match arc.role {
            Role::Subj => "subj",
            Role::Obj => "obj",
        };
        let cs: Vec<String> = arc.constraints.iter().map(|c| c.render()).collect();
        let _ = writeln!(out, "{} -> {} [{}]", role, arc.target, cs.join(", "));
    }
}

pub fn write_lrf(rules: &[LrfRule]) -> String {
    let mut out = String::new();
    for (i, lrf) in rules.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        render_rule(&lrf.rule, &mut out);
        if !lrf.bindings.is_empty() {
            let parts: Vec<String> = lrf
                .bindings
                .iter()
                .map(|(k, b)| format!("{k}={}.{}:{}", b.table, b.column, b.data_type))
                .collect();
            let _ = writeln!(out, "bindings: {}", parts.join(", "));
        }
    }
    out
}

/// Subject–verb–object decomposition of a SAF phrase using the built-in
/// lexicon: the single recognized verb splits the phrase; head nouns are
/// the last content tokens of each side.
fn decompose_phrase(phrase: &str) -> Result<(String, AnnotatedToken, String)> {
    let tokens = annotate(phrase);
    let verb_positions: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.pos == Pos::Verb)
        .map(|(i, _)| i)
        .collect();
    if verb_positions.len() != 1 {
        return Err(Error::Adaptation(phrase.to_string()));
    }
    let v = verb_positions[0];
    let subj = tokens[..v]
        .iter()
        .rev()
        .find(|t| t.pos != Pos::Other)
        .map(|t| t.lemma.clone())
        .ok_or_else(|| Error::Adaptation(phrase.to_string()))?;
    let obj = tokens[v + 1..]
        .iter()
        .rev()
        .find(|t| t.pos != Pos::Other)
        .map(|t| t.lemma.clone())
        .ok_or_else(|| Error::Adaptation(phrase.to_string()))?;
    Ok((subj, tokens[v].clone(), obj))
}

fn substitute(text: &str, subj: &str, obj: &str) -> String {
    text.replace("VAR1", subj).replace("VAR2", obj)
}

/// Adapt domain-independent rules to a schema ontology. Every structurally
/// matching (rule, entry) pair instantiates one lexical rule: verb-headed
/// rules require the entry's verb to satisfy the head constraints;
/// function-word-headed rules (e.g. "of" patterns) instantiate for every
/// entry as alternative syntaxes of the same relation.
pub fn adapt(trf: &[TrfRule], saf: &[SafEntry]) -> Result<Vec<LrfRule>> {
    let mut out = Vec::new();
    for entry in saf {
        let (subj, verb_token, obj) = decompose_phrase(&entry.phrase)?;
        for rule in trf {
            let verb_headed = rule
                .head_constraints
                .iter()
                .any(|c| c.kind == ConstraintKind::HasPartOfSpeech && !c.negated && c.value == "verb");
            if verb_headed && !rule.head_constraints.iter().all(|c| c.matches(&verb_token)) {
                continue;
            }
            let mut head = substitute(&rule.head, &subj, &obj);
            let mut head_constraints: Vec<Constraint> = rule
                .head_constraints
                .iter()
                .map(|c| Constraint {
                    kind: c.kind,
                    value: substitute(&c.value, &subj, &obj),
                    negated: c.negated,
                })
                .collect();
            // generic verb patterns become concrete for this entry's verb
            if verb_headed
                && !head_constraints
                    .iter()
                    .any(|c| c.kind == ConstraintKind::HasLemmaForm && !c.negated)
            {
                head = verb_token.lemma.clone();
                head_constraints.push(Constraint {
                    kind: ConstraintKind::HasLemmaForm,
                    value: verb_token.lemma.clone(),
                    negated: false,
                });
            }
            let mut bindings = BTreeMap::new();
            let arcs: Vec<RuleArc> = rule
                .arcs
                .iter()
                .map(|arc| {
                    if is_placeholder(&arc.target) {
                        let (lemma, binding) = if arc.target == "VAR1" {
                            (
                                subj.clone(),
                                Binding {
                                    table: entry.table1.clone(),
                                    column: entry.col1.clone(),
                                    data_type: entry.dtype1.clone(),
                                },
                            )
                        } else {
                            (
                                obj.clone(),
                                Binding {
                                    table: entry.table2.clone(),
                                    column: entry.col2.clone(),
                                    data_type: entry.dtype2.clone(),
                                },
                            )
                        };
                        bindings.insert(lemma.clone(), binding);
                    }
                    RuleArc {
                        role: arc.role,
                        target: substitute(&arc.target, &subj, &obj),
                        constraints: arc
                            .constraints
                            .iter()
                            .map(|c| Constraint {
                                kind: c.kind,
                                value: substitute(&c.value, &subj, &obj),
                                negated: c.negated,
                            })
                            .collect(),
                    }
                })
                .collect();
            out.push(LrfRule {
                rule: TrfRule {
                    name: substitute(&rule.name, &subj, &obj),
                    head,
                    head_constraints,
                    arcs,
                },
                bindings,
            });
        }
    }
    Ok(out)
}
