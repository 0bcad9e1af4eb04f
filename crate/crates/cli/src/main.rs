//! Command-line front door: prefix feasibility, rule adaptation, value
//! linking, serialization, evaluation, corpus generation, constrained
//! decoding, and the service.
//!
//! Exit codes: 0 success, 1 verdict-level negatives (an Invalid parse),
//! 2 usage errors, 3 I/O and format errors. Diagnostics go to stderr,
//! machine output to stdout. `--json` emits the service response records.

use std::io::Read;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sqlgate_core::catalog::{SchemaCatalog, ValueDictionary, DEFAULT_MAX_VALUES_PER_COLUMN};
use sqlgate_core::corpus;
use sqlgate_core::decode;
use sqlgate_core::error::Error;
use sqlgate_core::linker;
use sqlgate_core::metrics;
use sqlgate_core::serialize::{self, DbContent, SerializationConfig};
use sqlgate_core::service::{self, ItemResult, Response};
use sqlgate_core::sql::{Mode, ParserState, Profile, Verdict};

#[derive(Parser)]
#[command(name = "sqlgate", version, about = "Constrained-decoding and evaluation toolkit for text-to-SQL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lex,
    Nogrd,
    Guard,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Lex => Mode::Lex,
            ModeArg::Nogrd => Mode::ParseNoGuards,
            ModeArg::Guard => Mode::ParseWithGuards,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Spider,
    Ext,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Profile {
        match p {
            ProfileArg::Spider => Profile::SpiderSubset,
            ProfileArg::Ext => Profile::Extended,
        }
    }
}

#[derive(Args)]
struct SchemaSource {
    /// Spider-format schema document
    #[arg(long)]
    schema: Option<PathBuf>,
    /// SQLite database file
    #[arg(long)]
    db: Option<PathBuf>,
}

impl SchemaSource {
    fn load(&self) -> Result<Option<SchemaCatalog>, Error> {
        match (&self.schema, &self.db) {
            (Some(_), Some(_)) => Err(Error::Config(
                "pass either --schema or --db, not both".into(),
            )),
            (Some(path), None) => Ok(Some(SchemaCatalog::load_spider(path)?)),
            (None, Some(path)) => Ok(Some(SchemaCatalog::load_db(path)?)),
            (None, None) => Ok(None),
        }
    }

    fn require(&self) -> Result<SchemaCatalog, Error> {
        self.load()?.ok_or_else(|| Error::Config("--schema or --db is required here".into()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Judge a SQL text as extendable / complete / dead
    Parse {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, value_enum)]
        profile: ProfileArg,
        #[command(flatten)]
        source: SchemaSource,
        /// SQL text (or use --stdin)
        #[arg(long, conflicts_with = "stdin")]
        sql: Option<String>,
        /// Read the SQL text from standard input
        #[arg(long)]
        stdin: bool,
        #[arg(long)]
        json: bool,
    },
    /// Judge candidate continuations of a prefix
    Feasible {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, value_enum)]
        profile: ProfileArg,
        #[command(flatten)]
        source: SchemaSource,
        #[arg(long, default_value = "")]
        prefix: String,
        /// Candidate piece; repeat for several
        #[arg(long = "candidate")]
        candidates: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Adapt template rules to a schema ontology, producing lexical rules
    Adapt {
        #[arg(long)]
        saf: PathBuf,
        #[arg(long)]
        trf: PathBuf,
        #[command(flatten)]
        source: SchemaSource,
        /// Output LRF path
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Map question values to database columns
    Link {
        #[arg(long)]
        lrf: PathBuf,
        /// Value dictionary (JSON, from gen-corpus)
        #[arg(long)]
        dict: PathBuf,
        #[command(flatten)]
        source: SchemaSource,
        #[arg(long)]
        question: String,
        #[arg(long)]
        json: bool,
    },
    /// Produce the tagged model-input sequence
    Serialize {
        #[command(flatten)]
        source: SchemaSource,
        #[arg(long)]
        question: String,
        /// on = attach dictionary-linked values, off = schema only
        #[arg(long = "db-content", value_parser = ["on", "off"], default_value = "off")]
        db_content: String,
        #[arg(long)]
        lrf: Option<PathBuf>,
        #[arg(long)]
        dict: Option<PathBuf>,
        /// Keep original identifier casing
        #[arg(long)]
        no_lowercase: bool,
        #[arg(long)]
        json: bool,
    },
    /// Exact-Match / Execution-Accuracy evaluation
    Evaluate {
        /// Corpus file of {question, gold, pred?, db_id} records
        #[arg(long)]
        gold: PathBuf,
        /// Predictions, one SQL statement per line, aligned with --gold
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        db: PathBuf,
        #[arg(long, value_parser = ["em", "ex", "both"], default_value = "both")]
        metric: String,
        /// Replace literals with placeholders before EM comparison
        #[arg(long)]
        structural: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        json: bool,
    },
    /// Generate a fixture database and question/SQL corpus
    GenCorpus {
        #[arg(long, value_parser = ["hr", "wh", "in"])]
        db: String,
        #[arg(long, value_parser = ["base", "fnc", "with"], default_value = "base")]
        variant: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// train,dev,test sizes; defaults to the published splits
        #[arg(long)]
        splits: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Constrained beam search with a corpus-trained mock model
    Decode {
        /// Training corpus (jsonl)
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, value_enum)]
        profile: ProfileArg,
        #[command(flatten)]
        source: SchemaSource,
        #[arg(long, default_value_t = 4)]
        width: usize,
        #[arg(long = "max-pieces", default_value_t = 64)]
        max_pieces: usize,
        /// Per-step candidate cut (default: all supported continuations)
        #[arg(long = "top-k")]
        top_k: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Run the line-delimited JSON service
    Serve {
        /// Address for the NDJSON socket, e.g. 127.0.0.1:7878
        #[arg(long)]
        listen: String,
        /// Optional HTTP binding address
        #[arg(long)]
        http: Option<String>,
        /// Session idle timeout in seconds
        #[arg(long = "session-timeout", default_value_t = 300)]
        session_timeout: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("SQLGATE_LOG")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn print_json(response: &Response) {
    println!("{}", serde_json::to_string(response).expect("response serializes"));
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Parse { mode, profile, source, sql, stdin, json } => {
            let text = match (sql, stdin) {
                (Some(s), _) => s,
                (None, true) => {
                    let mut buf = String::new();
                    std::io::stdin()
                        .read_to_string(&mut buf)
                        .map_err(|e| Error::io("stdin", e))?;
                    buf
                }
                (None, false) => return Err(Error::Config("pass --sql or --stdin".into())),
            };
            let catalog = source.load()?.map(Arc::new);
            let state = ParserState::init(mode.into(), profile.into(), catalog)?;
            let verdict = state.advance(&text).verdict();
            if json {
                print_json(&Response { verdict: Some(verdict), ..Response::ok() });
            } else {
                println!("{verdict}");
            }
            Ok(if verdict == Verdict::Invalid { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Feasible { mode, profile, source, prefix, candidates, json } => {
            let catalog = source.load()?.map(Arc::new);
            let state = ParserState::init(mode.into(), profile.into(), catalog)?.advance(&prefix);
            let verdicts = if state.verdict() == Verdict::Invalid {
                vec![Verdict::Invalid; candidates.len()]
            } else {
                state.feasible_extensions(&candidates)?
            };
            if json {
                print_json(&Response {
                    results: Some(vec![ItemResult {
                        ok: true,
                        error: None,
                        verdicts: Some(verdicts.clone()),
                        session: None,
                    }]),
                    ..Response::ok()
                });
            } else {
                for (c, v) in candidates.iter().zip(&verdicts) {
                    println!("{c}\t{v}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Adapt { saf, trf, source, output, json } => {
            let catalog = source.require()?;
            let entries = linker::parse_saf(&saf, Some(&catalog))?;
            let rules = linker::parse_trf(&trf)?;
            let lrf = linker::adapt(&rules, &entries)?;
            std::fs::write(&output, linker::write_lrf(&lrf))
                .map_err(|e| Error::io(&output, e))?;
            if json {
                print_json(&Response::ok());
            } else {
                eprintln!(
                    "adapted {} rules x {} entries -> {} lexical rules ({})",
                    rules.len(),
                    entries.len(),
                    lrf.len(),
                    output.display()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Link { lrf, dict, source, question, json } => {
            let catalog = source.require()?;
            let rules = linker::parse_lrf(&lrf)?;
            let dictionary = load_dictionary(&dict)?;
            let items = linker::process_query(&question, &rules, &dictionary, &catalog);
            if json {
                print_json(&Response {
                    data_items: Some(
                        items
                            .iter()
                            .map(|i| service::WireDataItem {
                                key: i.key(),
                                properties: i.properties.clone(),
                            })
                            .collect(),
                    ),
                    ..Response::ok()
                });
            } else {
                for item in &items {
                    println!("{item}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Serialize {
            source,
            question,
            db_content,
            lrf,
            dict,
            no_lowercase,
            json,
        } => {
            let catalog = source.require()?;
            let enabled = db_content == "on";
            let (links, items) = if enabled {
                let (Some(lrf), Some(dict)) = (lrf, dict) else {
                    return Err(Error::Config(
                        "--db-content on requires --lrf and --dict".into(),
                    ));
                };
                let rules = linker::parse_lrf(&lrf)?;
                let dictionary = load_dictionary(&dict)?;
                let items = linker::process_query(&question, &rules, &dictionary, &catalog);
                (linker::extract_column_value_pairs(&items), items)
            } else {
                (Vec::new(), Vec::new())
            };
            let cfg = SerializationConfig {
                db_content: if enabled { DbContent::Enabled } else { DbContent::Disabled },
                lowercase_schema: !no_lowercase,
            };
            let serialized = serialize::serialize(&question, &catalog, &links, &cfg)?;
            if json {
                print_json(&Response {
                    serialized: Some(serialized),
                    data_items: Some(
                        items
                            .iter()
                            .map(|i| service::WireDataItem {
                                key: i.key(),
                                properties: i.properties.clone(),
                            })
                            .collect(),
                    ),
                    ..Response::ok()
                });
            } else {
                println!("{serialized}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate { gold, pred, db, metric, structural, jobs, json } => {
            let records = corpus::load(&gold)?;
            let preds: Vec<String> = match &pred {
                Some(path) => {
                    let text =
                        std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                    let lines: Vec<String> =
                        text.lines().map(|l| l.trim().to_string()).collect();
                    if lines.len() != records.len() {
                        return Err(Error::Format(format!(
                            "{} predictions for {} gold records",
                            lines.len(),
                            records.len()
                        )));
                    }
                    lines
                }
                None => records
                    .iter()
                    .map(|r| {
                        r.pred.clone().ok_or_else(|| {
                            Error::Format(
                                "gold file has no pred field; pass --pred".to_string(),
                            )
                        })
                    })
                    .collect::<Result<_, _>>()?,
            };
            let triples: Vec<(String, String, String)> = records
                .iter()
                .zip(&preds)
                .map(|(r, p)| (r.question.clone(), r.gold.clone(), p.clone()))
                .collect();
            log::debug!("evaluating {} records with {jobs} worker(s)", triples.len());
            let report = metrics::evaluate_corpus(
                &triples,
                None,
                &db,
                metrics::EvalOptions { structural, jobs },
            )?;
            if json {
                print_json(&Response { report: Some(report), ..Response::ok() });
            } else if metric == "both" {
                print!("{}", report.to_table());
            } else {
                let fmt_pct = |p: Option<f64>| match p {
                    Some(v) => format!("{v:.1}"),
                    None => "--".to_string(),
                };
                let (label, matches, pct) = if metric == "em" {
                    ("EM", report.em_matches, report.em_pct)
                } else {
                    ("EX", report.ex_matches, report.ex_pct)
                };
                println!("{:<10} {:>8} {:>8}", "records", label, format!("{label} (%)"));
                println!("{:<10} {:>8} {:>8}", report.total, matches, fmt_pct(pct));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::GenCorpus { db, variant, seed, splits, output } => {
            let db = corpus::Db::parse(&db)
                .ok_or_else(|| Error::Config(format!("unknown db {db:?}")))?;
            let variant = corpus::Variant::parse(&variant)
                .ok_or_else(|| Error::Config(format!("unknown variant {variant:?}")))?;
            let splits = match splits {
                Some(text) => {
                    let parts: Vec<usize> = text
                        .split(',')
                        .map(|p| p.trim().parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| Error::Config(format!("bad --splits {text:?}")))?;
                    if parts.len() != 3 {
                        return Err(Error::Config("--splits needs train,dev,test".into()));
                    }
                    (parts[0], parts[1], parts[2])
                }
                None => match variant {
                    corpus::Variant::With => corpus::paper_with_splits(db).ok_or_else(|| {
                        Error::Config("the WITH variant exists only for hr and wh".into())
                    })?,
                    _ => corpus::paper_base_splits(db),
                },
            };
            let spec = corpus::CorpusSpec { db, variant, splits, seed };
            let started = std::time::Instant::now();
            let generated = corpus::generate(&spec, &output)?;
            log::debug!("generation took {:?}", started.elapsed());
            // offline value dictionary for the link/serialize workflows
            let dictionary = ValueDictionary::build(
                &generated.catalog,
                &generated.db_path,
                DEFAULT_MAX_VALUES_PER_COLUMN,
            )?;
            let dict_path = output.join("dict.json");
            std::fs::write(&dict_path, serde_json::to_string(&dictionary)?)
                .map_err(|e| Error::io(&dict_path, e))?;
            eprintln!(
                "generated {} ({} train / {} dev / {} test) in {}",
                generated.db_path.display(),
                spec.splits.0,
                spec.splits.1,
                spec.splits.2,
                output.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Decode { corpus: corpus_path, mode, profile, source, width, max_pieces, top_k, json } => {
            let records = corpus::load(&corpus_path)?;
            let lm = decode::train_mock_lm(&records)?;
            let catalog = source.load()?.map(Arc::new);
            let cfg = decode::BeamConfig {
                width,
                max_pieces,
                mode: mode.into(),
                profile: profile.into(),
                top_k,
            };
            let results = decode::constrained_beam_search(&lm, "", &cfg, catalog)?;
            if json {
                let payload = serde_json::json!({
                    "ok": true,
                    "results": results
                        .iter()
                        .map(|(sql, score)| serde_json::json!({"sql": sql, "score": score}))
                        .collect::<Vec<_>>(),
                });
                println!("{payload}");
            } else {
                for (sql, score) in &results {
                    println!("{score:.4}\t{sql}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { listen, http, session_timeout } => {
            let registry = Arc::new(service::Registry::new(std::time::Duration::from_secs(
                session_timeout,
            )));
            let stop = Arc::new(AtomicBool::new(false));
            let listener = TcpListener::bind(&listen).map_err(|e| Error::io(&listen, e))?;
            eprintln!("ndjson service on {listen}");
            if let Some(http_addr) = http {
                let http_listener =
                    TcpListener::bind(&http_addr).map_err(|e| Error::io(&http_addr, e))?;
                eprintln!("http binding on {http_addr}");
                let registry = registry.clone();
                let stop = stop.clone();
                std::thread::spawn(move || service::serve_http(http_listener, registry, stop));
            }
            service::serve_ndjson(listener, registry, stop);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_dictionary(path: &Path) -> Result<ValueDictionary, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
