//! Exact-Match and Execution-Accuracy evaluation.
//!
//! Both metrics are total: evaluation never throws on well-formed input
//! records. Queries the grammar cannot parse yield `GoldUnparseable` /
//! `PredUnparseable` verdicts; queries the database rejects yield
//! `GoldExecError` / `PredExecError`. CTEs, string functions, and nested
//! parenthesized conditions all canonicalize and execute normally.

pub mod canonical;
pub mod exec;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::SchemaCatalog;
use crate::error::Result;
use crate::sql::parser::parse_query_only;
use crate::sql::Profile;

pub use canonical::{canonicalize, light_normalize, CanonicalQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmVerdict {
    Match,
    NoMatch,
    GoldUnparseable,
    PredUnparseable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExVerdict {
    Match,
    NoMatch,
    GoldExecError,
    PredExecError,
}

/// Structural equality of gold and predicted SQL after canonicalization.
/// With `compare_values` off, literals are replaced by placeholders.
pub fn exact_match(
    gold: &str,
    pred: &str,
    catalog: Option<&SchemaCatalog>,
    compare_values: bool,
) -> EmVerdict {
    let Ok(gold_q) = parse_query_only(gold, Profile::Extended) else {
        return EmVerdict::GoldUnparseable;
    };
    let Ok(pred_q) = parse_query_only(pred, Profile::Extended) else {
        return EmVerdict::PredUnparseable;
    };
    let g = canonicalize(&gold_q, catalog, compare_values);
    let p = canonicalize(&pred_q, catalog, compare_values);
    if g == p {
        EmVerdict::Match
    } else {
        EmVerdict::NoMatch
    }
}

/// Execute both queries against `db` and compare result sets: column count
/// must match; rows compare as a sequence when the gold query has a
/// top-level ORDER BY, as a multiset otherwise; numeric cells compare with
/// absolute tolerance 1e-6.
pub fn execution_accuracy(gold: &str, pred: &str, db: impl AsRef<Path>) -> Result<ExVerdict> {
    let conn = exec::open_readonly(db.as_ref())?;
    execution_accuracy_on(&conn, gold, pred)
}

/// Same as [`execution_accuracy`] on an existing connection (one
/// connection per worker under parallel evaluation).
pub fn execution_accuracy_on(
    conn: &rusqlite::Connection,
    gold: &str,
    pred: &str,
) -> Result<ExVerdict> {
    let gold_rs = match exec::execute(conn, gold) {
        Ok(rs) => rs,
        Err(_) => return Ok(ExVerdict::GoldExecError),
    };
    let pred_rs = match exec::execute(conn, pred) {
        Ok(rs) => rs,
        Err(_) => return Ok(ExVerdict::PredExecError),
    };
    let ordered = exec::has_top_level_order_by(gold);
    if exec::result_sets_equal(&gold_rs, &pred_rs, ordered) {
        Ok(ExVerdict::Match)
    } else {
        Ok(ExVerdict::NoMatch)
    }
}

/// One evaluated (question, gold, predicted) triple.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub question: String,
    pub gold_sql: String,
    pub pred_sql: String,
    pub em: EmVerdict,
    pub ex: ExVerdict,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// Replace literals with placeholders before EM comparison.
    pub structural: bool,
    /// Worker threads for execution; each gets its own connection.
    pub jobs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { structural: false, jobs: 1 }
    }
}

/// Corpus-level report. Unparseable-gold rows are excluded from both the
/// EM numerator and denominator (flagged via `em_excluded`); gold
/// execution errors likewise flag corpus defects and are excluded from the
/// EX denominator. Percentages are rounded to one decimal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub records: Vec<EvalRecord>,
    pub total: usize,
    pub empty: bool,
    pub em_matches: usize,
    pub em_excluded: usize,
    pub ex_matches: usize,
    pub ex_excluded: usize,
    pub em_pct: Option<f64>,
    pub ex_pct: Option<f64>,
}

fn pct(matches: usize, denom: usize) -> Option<f64> {
    if denom == 0 {
        None
    } else {
        Some((matches as f64 * 1000.0 / denom as f64).round() / 10.0)
    }
}

/// Evaluate a corpus of (question, gold, predicted) records.
pub fn evaluate_corpus(
    records: &[(String, String, String)],
    catalog: Option<&SchemaCatalog>,
    db: impl AsRef<Path>,
    opts: EvalOptions,
) -> Result<Report> {
    let db = db.as_ref();
    let jobs = opts.jobs.max(1);
    let mut out: Vec<Option<EvalRecord>> = vec![None; records.len()];

    if records.is_empty() {
        return Ok(Report {
            records: Vec::new(),
            total: 0,
            empty: true,
            em_matches: 0,
            em_excluded: 0,
            ex_matches: 0,
            ex_excluded: 0,
            em_pct: None,
            ex_pct: None,
        });
    }

    let chunk = records.len().div_ceil(jobs);
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for (i, (recs, slot)) in
            records.chunks(chunk).zip(out.chunks_mut(chunk)).enumerate()
        {
            let _ = i;
            handles.push(scope.spawn(move || -> Result<()> {
                let conn = exec::open_readonly(db)?;
                for (rec, cell) in recs.iter().zip(slot.iter_mut()) {
                    let (question, gold, pred) = rec;
                    let em = exact_match(gold, pred, catalog, !opts.structural);
                    let ex = execution_accuracy_on(&conn, gold, pred)?;
                    *cell = Some(EvalRecord {
                        question: question.clone(),
                        gold_sql: gold.clone(),
                        pred_sql: pred.clone(),
                        em,
                        ex,
                    });
                }
                Ok(())
            }));
        }
        for h in handles {
            h.join().expect("eval worker panicked")?;
        }
        Ok(())
    })?;

    let records: Vec<EvalRecord> = out.into_iter().map(|r| r.expect("all slots filled")).collect();
    let em_excluded = records.iter().filter(|r| r.em == EmVerdict::GoldUnparseable).count();
    let em_matches = records.iter().filter(|r| r.em == EmVerdict::Match).count();
    let ex_excluded = records.iter().filter(|r| r.ex == ExVerdict::GoldExecError).count();
    let ex_matches = records.iter().filter(|r| r.ex == ExVerdict::Match).count();
    let total = records.len();
    Ok(Report {
        em_pct: pct(em_matches, total - em_excluded),
        ex_pct: pct(ex_matches, total - ex_excluded),
        records,
        total,
        empty: false,
        em_matches,
        em_excluded,
        ex_matches,
        ex_excluded,
    })
}

impl Report {
    /// Aligned-column text table.
    pub fn to_table(&self) -> String {
        if self.empty {
            return "empty corpus: no records, no percentages\n".to_string();
        }
        let fmt_pct = |p: Option<f64>| match p {
            Some(v) => format!("{v:.1}"),
            None => "--".to_string(),
        };
        let mut s = String::new();
        s.push_str(&format!(
            "{:<10} {:>8} {:>8} {:>8} {:>8}\n",
            "records", "EM", "EM (%)", "EX", "EX (%)"
        ));
        s.push_str(&format!(
            "{:<10} {:>8} {:>8} {:>8} {:>8}\n",
            self.total,
            self.em_matches,
            fmt_pct(self.em_pct),
            self.ex_matches,
            fmt_pct(self.ex_pct),
        ));
        if self.em_excluded > 0 {
            s.push_str(&format!(
                "note: {} gold queries unparseable, excluded from EM\n",
                self.em_excluded
            ));
        }
        if self.ex_excluded > 0 {
            s.push_str(&format!(
                "note: {} gold queries failed to execute, excluded from EX\n",
                self.ex_excluded
            ));
        }
        s
    }
}
