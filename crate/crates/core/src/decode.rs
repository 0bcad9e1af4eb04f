//! Constrained-decoding harness: a mock bigram sequence model proposes
//! text pieces, the feasibility engine filters them, and beam search
//! assembles complete SQL.
//!
//! The model deliberately ignores any prompt — the harness validates the
//! filter, not text-to-SQL quality. Pieces are word-level atoms with their
//! leading whitespace attached, and every identifier/keyword is split at a
//! fixed stride of three characters, so beams routinely advance through
//! mid-token fragments.

use std::collections::HashMap;
use std::sync::Arc;

use crate::catalog::SchemaCatalog;
use crate::corpus::CorpusRecord;
use crate::error::{Error, Result};
use crate::sql::token::{lex_all, TokenKind};
use crate::sql::{Mode, ParserState, Profile, Verdict};

/// Stride for sub-token fragmentation of identifiers and keywords.
const FRAGMENT_STRIDE: usize = 3;

/// Split a SQL string into pieces: atoms carry their leading whitespace;
/// word-shaped atoms longer than the stride are chopped into stride-sized
/// fragments. Concatenating the pieces reproduces the input exactly.
pub fn spell(sql: &str) -> Vec<String> {
    let Ok(tokens) = lex_all(sql) else {
        return vec![sql.to_string()];
    };
    let mut pieces = Vec::new();
    let mut prev_end = 0usize;
    for tok in &tokens {
        let text_end = tok.offset
            + match &tok.kind {
                TokenKind::Keyword(k) => k.as_str().len(),
                _ => rendered_len(sql, tok.offset),
            };
        let atom = &sql[prev_end..text_end];
        let wordlike = matches!(
            tok.kind,
            TokenKind::Keyword(_) | TokenKind::Ident { quoted: false, .. }
        );
        if wordlike {
            let lead = tok.offset - prev_end;
            let (space, word) = atom.split_at(lead);
            if word.len() > FRAGMENT_STRIDE {
                let mut chunks = word
                    .as_bytes()
                    .chunks(FRAGMENT_STRIDE)
                    .map(|c| std::str::from_utf8(c).unwrap().to_string())
                    .collect::<Vec<_>>();
                chunks[0] = format!("{space}{}", chunks[0]);
                pieces.extend(chunks);
            } else {
                pieces.push(atom.to_string());
            }
        } else {
            pieces.push(atom.to_string());
        }
        prev_end = text_end;
    }
    if prev_end < sql.len() {
        pieces.push(sql[prev_end..].to_string());
    }
    pieces
}

/// Length in bytes of the token starting at `offset` in `sql`.
fn rendered_len(sql: &str, offset: usize) -> usize {
    let rest = &sql[offset..];
    let scan = crate::sql::token::scan_token(rest);
    scan.last_accept.unwrap_or(rest.len())
}

/// Bigram language model over text pieces, trained on a corpus's gold
/// queries. Transition weights carry add-one smoothing so every pair is
/// positive; proposals are the model's supported continuations (observed
/// bigrams), ranked by count.
pub struct MockLm {
    vocabulary: Vec<String>,
    index: HashMap<String, usize>,
    /// bigram counts; row ids run over pieces plus BOS, column ids over
    /// pieces plus EOS
    counts: HashMap<(usize, usize), u32>,
    row_totals: Vec<u32>,
    /// per-row proposal ranking, built on demand
    rankings: std::sync::Mutex<HashMap<usize, Arc<Vec<usize>>>>,
}

impl MockLm {
    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn piece_id(&self, piece: &str) -> Option<usize> {
        self.index.get(piece).copied()
    }

    fn bos(&self) -> usize {
        self.vocabulary.len()
    }

    fn eos(&self) -> usize {
        self.vocabulary.len() + 1
    }

    /// Smoothed transition weight; positive for every pair.
    pub fn weight(&self, prev: usize, next: usize) -> f64 {
        let c = self.counts.get(&(prev, next)).copied().unwrap_or(0) as f64;
        let total = self.row_totals[prev] as f64;
        (c + 1.0) / (total + self.vocabulary.len() as f64 + 1.0)
    }

    /// True when training ever ended a query right after `prev`.
    fn can_end(&self, prev: usize) -> bool {
        self.counts.contains_key(&(prev, self.eos()))
    }

    /// Piece proposals from `prev`: observed successors, best first (ties
    /// lexicographic), cut to `top_k` when given.
    fn candidates(&self, prev: usize, top_k: Option<usize>) -> Arc<Vec<usize>> {
        let ranking = {
            let mut cache = self.rankings.lock().unwrap();
            cache
                .entry(prev)
                .or_insert_with(|| {
                    let mut ids: Vec<usize> = (0..self.vocabulary.len())
                        .filter(|&id| self.counts.contains_key(&(prev, id)))
                        .collect();
                    ids.sort_by(|&a, &b| {
                        let ca = self.counts.get(&(prev, a)).copied().unwrap_or(0);
                        let cb = self.counts.get(&(prev, b)).copied().unwrap_or(0);
                        cb.cmp(&ca).then_with(|| self.vocabulary[a].cmp(&self.vocabulary[b]))
                    });
                    Arc::new(ids)
                })
                .clone()
        };
        match top_k {
            Some(k) if k < ranking.len() => Arc::new(ranking[..k].to_vec()),
            _ => ranking,
        }
    }
}

/// Train the mock model on a corpus's gold queries. Deterministic; the
/// vocabulary contains every piece needed to spell every gold query plus
/// the whole-word atoms of the corpus.
pub fn train_mock_lm(corpus: &[CorpusRecord]) -> Result<MockLm> {
    if corpus.is_empty() {
        return Err(Error::Contract("cannot train a mock model on an empty corpus".into()));
    }
    let spellings_text: Vec<Vec<String>> = corpus.iter().map(|r| spell(&r.gold)).collect();
    train_on_spellings(corpus, &spellings_text)
}

/// Shared trainer over explicit piece sequences (tests scramble them to
/// model a junk vocabulary).
pub fn train_on_spellings(
    corpus: &[CorpusRecord],
    spellings_text: &[Vec<String>],
) -> Result<MockLm> {
    if spellings_text.is_empty() {
        return Err(Error::Contract("cannot train a mock model on an empty corpus".into()));
    }
    let mut vocabulary: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let intern = |piece: &str, vocabulary: &mut Vec<String>, index: &mut HashMap<String, usize>| -> usize {
        match index.get(piece) {
            Some(&i) => i,
            None => {
                let i = vocabulary.len();
                vocabulary.push(piece.to_string());
                index.insert(piece.to_string(), i);
                i
            }
        }
    };
    let mut spellings = Vec::new();
    for pieces in spellings_text {
        let ids: Vec<usize> = pieces
            .iter()
            .map(|p| intern(p, &mut vocabulary, &mut index))
            .collect();
        spellings.push(ids);
    }
    // whole-word atoms belong to the vocabulary even when training spells
    // queries through their fragments
    for record in corpus {
        if let Ok(tokens) = lex_all(&record.gold) {
            let mut prev_end = 0usize;
            for tok in &tokens {
                let end = tok.offset + rendered_len(&record.gold, tok.offset);
                intern(&record.gold[prev_end..end], &mut vocabulary, &mut index);
                prev_end = end;
            }
        }
    }
    let bos = vocabulary.len();
    let eos = vocabulary.len() + 1;
    let mut counts: HashMap<(usize, usize), u32> = HashMap::new();
    let mut row_totals = vec![0u32; vocabulary.len() + 1];
    for ids in &spellings {
        let mut prev = bos;
        for &id in ids {
            *counts.entry((prev, id)).or_insert(0) += 1;
            row_totals[prev] += 1;
            prev = id;
        }
        *counts.entry((prev, eos)).or_insert(0) += 1;
        row_totals[prev] += 1;
    }
    Ok(MockLm {
        vocabulary,
        index,
        counts,
        row_totals,
        rankings: std::sync::Mutex::new(HashMap::new()),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct BeamConfig {
    pub width: usize,
    pub max_pieces: usize,
    pub mode: Mode,
    pub profile: Profile,
    /// Per-step candidate cut; `None` proposes the whole vocabulary.
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone)]
struct Hypothesis {
    text: String,
    state: ParserState,
    prev: usize,
    log_score: f64,
    pieces: usize,
}

impl Hypothesis {
    fn normalized(&self) -> f64 {
        if self.pieces == 0 {
            0.0
        } else {
            self.log_score / self.pieces as f64
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FilterStats {
    pub proposed: usize,
    pub rejected: usize,
}

impl FilterStats {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.rejected as f64 / self.proposed as f64
        }
    }
}

fn run_beam(
    lm: &MockLm,
    cfg: &BeamConfig,
    catalog: Option<Arc<SchemaCatalog>>,
    steps: Option<usize>,
) -> Result<(Vec<(String, f64)>, FilterStats)> {
    if cfg.width == 0 || cfg.max_pieces == 0 {
        return Err(Error::Contract("beam width and max_pieces must be at least 1".into()));
    }
    let init = ParserState::init(cfg.mode, cfg.profile, catalog)?;
    let mut beam = vec![Hypothesis {
        text: String::new(),
        state: init,
        prev: lm.bos(),
        log_score: 0.0,
        pieces: 0,
    }];
    let mut finished: Vec<(String, f64)> = Vec::new();
    let mut stats = FilterStats::default();
    let limit = steps.unwrap_or(cfg.max_pieces).min(cfg.max_pieces);

    for _ in 0..limit {
        let mut next: Vec<Hypothesis> = Vec::new();
        for hyp in &beam {
            // the model proposing an end-of-sequence at a Complete state
            // finishes the hypothesis
            if hyp.state.verdict() == Verdict::Complete && lm.can_end(hyp.prev) {
                let score =
                    (hyp.log_score + lm.weight(hyp.prev, lm.eos()).ln()) / (hyp.pieces + 1) as f64;
                finished.push((hyp.text.clone(), score));
            }
            let candidates = lm.candidates(hyp.prev, cfg.top_k);
            let pieces: Vec<&str> =
                candidates.iter().map(|&id| lm.vocabulary[id].as_str()).collect();
            let verdicts = hyp.state.feasible_extensions(&pieces)?;
            for (&id, verdict) in candidates.iter().zip(verdicts) {
                stats.proposed += 1;
                if verdict == Verdict::Invalid {
                    stats.rejected += 1;
                    continue;
                }
                let piece = &lm.vocabulary[id];
                let state = hyp.state.advance(piece);
                let mut text = hyp.text.clone();
                text.push_str(piece);
                let log_score = hyp.log_score + lm.weight(hyp.prev, id).ln();
                next.push(Hypothesis { text, state, prev: id, log_score, pieces: hyp.pieces + 1 });
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_by(|a, b| {
            b.normalized()
                .partial_cmp(&a.normalized())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.text.cmp(&b.text))
        });
        next.truncate(cfg.width);
        beam = next;
    }
    for hyp in &beam {
        if hyp.state.verdict() == Verdict::Complete && lm.can_end(hyp.prev) {
            let score =
                (hyp.log_score + lm.weight(hyp.prev, lm.eos()).ln()) / (hyp.pieces + 1) as f64;
            finished.push((hyp.text.clone(), score));
        }
    }

    // best score per distinct text, sorted by score then text
    let mut best: HashMap<String, f64> = HashMap::new();
    for (text, score) in finished {
        let entry = best.entry(text).or_insert(f64::NEG_INFINITY);
        if score > *entry {
            *entry = score;
        }
    }
    let mut out: Vec<(String, f64)> = best.into_iter().collect();
    out.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.cmp(&b.0))
    });
    Ok((out, stats))
}

/// Beam-search complete SQL statements under the configured feasibility
/// mode. The prompt is ignored by design. Returns (sql, score) sorted by
/// length-normalized log-score; empty when no hypothesis completes within
/// `max_pieces`.
pub fn constrained_beam_search(
    lm: &MockLm,
    _prompt_ignored: &str,
    cfg: &BeamConfig,
    catalog: Option<Arc<SchemaCatalog>>,
) -> Result<Vec<(String, f64)>> {
    if cfg.mode == Mode::ParseWithGuards && catalog.is_none() {
        return Err(Error::Config("parse_with_guards requires a catalog".into()));
    }
    run_beam(lm, cfg, catalog, None).map(|(finished, _)| finished)
}

/// Fraction of proposed (beam, piece) extensions the feasibility engine
/// rejected over a run of `steps` steps.
pub fn filter_rate(
    lm: &MockLm,
    cfg: &BeamConfig,
    catalog: Option<Arc<SchemaCatalog>>,
    steps: usize,
) -> Result<f64> {
    if steps == 0 {
        return Err(Error::Contract("steps must be at least 1".into()));
    }
    run_beam(lm, cfg, catalog, Some(steps)).map(|(_, stats)| stats.rate())
}

/// Beam search that also reports filter statistics.
pub fn constrained_beam_search_with_stats(
    lm: &MockLm,
    cfg: &BeamConfig,
    catalog: Option<Arc<SchemaCatalog>>,
) -> Result<(Vec<(String, f64)>, FilterStats)> {
    run_beam(lm, cfg, catalog, None)
}

/// Rejection rates of the three modes measured over one shared proposal
/// stream (the beam is driven by the weakest filter, lexing). Holding the
/// proposals fixed makes the rates comparable: for any prefix and piece, a
/// stricter mode rejects whenever a weaker one does, so
/// lex ≤ no-guards ≤ guards holds run by run. Independently driven beams
/// explore different prefixes and their rates can order either way.
pub fn filter_rate_comparison(
    lm: &MockLm,
    cfg: &BeamConfig,
    catalog: Arc<SchemaCatalog>,
    steps: usize,
) -> Result<[f64; 3]> {
    if steps == 0 {
        return Err(Error::Contract("steps must be at least 1".into()));
    }
    struct Tri {
        states: [ParserState; 3],
        prev: usize,
        log_score: f64,
        pieces: usize,
        text: String,
    }
    let mut beam = vec![Tri {
        states: [
            ParserState::init(Mode::Lex, cfg.profile, None)?,
            ParserState::init(Mode::ParseNoGuards, cfg.profile, None)?,
            ParserState::init(Mode::ParseWithGuards, cfg.profile, Some(catalog))?,
        ],
        prev: lm.bos(),
        log_score: 0.0,
        pieces: 0,
        text: String::new(),
    }];
    let mut stats = [FilterStats::default(); 3];
    for _ in 0..steps.min(cfg.max_pieces) {
        let mut next: Vec<Tri> = Vec::new();
        for hyp in &beam {
            for &id in lm.candidates(hyp.prev, cfg.top_k).iter() {
                let piece = &lm.vocabulary[id];
                let advanced: Vec<ParserState> =
                    hyp.states.iter().map(|s| s.advance(piece)).collect();
                for (stat, state) in stats.iter_mut().zip(&advanced) {
                    stat.proposed += 1;
                    if state.verdict() == Verdict::Invalid {
                        stat.rejected += 1;
                    }
                }
                // the weakest filter drives exploration
                if advanced[0].verdict() == Verdict::Invalid {
                    continue;
                }
                let mut text = hyp.text.clone();
                text.push_str(piece);
                let states: [ParserState; 3] =
                    advanced.try_into().map_err(|_| Error::Contract("three states".into()))?;
                next.push(Tri {
                    states,
                    prev: id,
                    log_score: hyp.log_score + lm.weight(hyp.prev, id).ln(),
                    pieces: hyp.pieces + 1,
                    text,
                });
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_by(|a, b| {
            let an = a.log_score / a.pieces.max(1) as f64;
            let bn = b.log_score / b.pieces.max(1) as f64;
            bn.partial_cmp(&an)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.text.cmp(&b.text))
        });
        next.truncate(cfg.width);
        beam = next;
    }
    Ok([stats[0].rate(), stats[1].rate(), stats[2].rate()])
}
