//! Long-running service exposing feasibility checks, linking,
//! serialization, and evaluation over line-delimited JSON on a local
//! socket, with an HTTP binding carrying the same records at
//! `POST /v1/<op>`.
//!
//! Every response carries `{ok, error?}` alongside its payload. Handlers
//! are plain functions over the registry, so the CLI and the differential
//! tests can call them in-process and compare bytes with the served
//! output.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::catalog::{SchemaCatalog, ValueDictionary, DEFAULT_MAX_VALUES_PER_COLUMN};
use crate::error::{Error, Result};
use crate::linker::{self, LrfRule};
use crate::serialize::{serialize, DbContent, SerializationConfig};
use crate::sql::{Mode, ParserState, Profile, Verdict};

pub const DEFAULT_SESSION_TIMEOUT: Duration = Duration::from_secs(300);

// ---------------------------------------------------------------------------
// wire records

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Request {
    /// Register a schema from an inline Spider document or a database
    /// file; optionally build the value dictionary and adapt linker rules.
    RegisterSchema {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schema: Option<serde_json::Value>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        db_path: Option<String>,
        #[serde(default)]
        build_dictionary: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        saf_path: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trf_path: Option<String>,
    },
    BatchFeasibility {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schema_id: Option<String>,
        mode: Mode,
        profile: Profile,
        items: Vec<FeasibilityItem>,
    },
    LinkAndSerialize {
        schema_id: String,
        question: String,
        db_content: DbContent,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityItem {
    /// Existing session to probe, or...
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    /// ...a raw prefix establishing a fresh state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
    #[serde(default)]
    pub candidates: Vec<String>,
    /// Advance the state by this text and persist it as a session.
    /// Probing alone never mutates anything.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub code: String,
    pub message: String,
}

impl ErrorRecord {
    fn from_error(e: &Error) -> ErrorRecord {
        let code = match e {
            Error::Format(_) => "format",
            Error::Integrity(_) => "integrity",
            Error::Config(_) => "config",
            Error::Contract(_) => "contract",
            Error::Adaptation(_) => "adaptation",
            Error::Generation(_) => "generation",
            Error::Parse { .. } => "parse",
            Error::Load { .. } => "load",
            Error::Io { .. } => "io",
            Error::Db(_) => "db",
            Error::Json(_) => "json",
        };
        ErrorRecord { code: code.to_string(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemResult {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<Vec<Verdict>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireDataItem {
    pub key: String,
    pub properties: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct Response {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub results: Option<Vec<ItemResult>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub serialized: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_items: Option<Vec<WireDataItem>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<crate::metrics::Report>,
}

impl Response {
    pub fn ok() -> Response {
        Response { ok: true, ..Default::default() }
    }

    pub fn err(e: &Error) -> Response {
        Response { ok: false, error: Some(ErrorRecord::from_error(e)), ..Default::default() }
    }
}

// ---------------------------------------------------------------------------
// registry

struct SchemaEntry {
    catalog: Arc<SchemaCatalog>,
    dictionary: Option<Arc<ValueDictionary>>,
    lrf: Option<Arc<Vec<LrfRule>>>,
}

struct Session {
    state: ParserState,
    last_access: Instant,
}

/// Shared service state: registered schemas and live parser sessions.
/// Sessions expire after the idle timeout.
pub struct Registry {
    schemas: Mutex<HashMap<String, Arc<SchemaEntry>>>,
    schema_counters: Mutex<HashMap<String, usize>>,
    sessions: Mutex<HashMap<String, Session>>,
    session_counter: Mutex<usize>,
    idle_timeout: Duration,
}

impl Registry {
    pub fn new(idle_timeout: Duration) -> Registry {
        Registry {
            schemas: Mutex::new(HashMap::new()),
            schema_counters: Mutex::new(HashMap::new()),
            sessions: Mutex::new(HashMap::new()),
            session_counter: Mutex::new(0),
            idle_timeout,
        }
    }

    fn next_schema_id(&self, db_id: &str) -> String {
        let mut counters = self.schema_counters.lock().unwrap();
        let n = counters.entry(db_id.to_string()).or_insert(0);
        *n += 1;
        format!("{db_id}-{n}")
    }

    fn next_session_id(&self) -> String {
        let mut n = self.session_counter.lock().unwrap();
        *n += 1;
        format!("s-{n}")
    }

    fn sweep_sessions(&self) {
        let mut sessions = self.sessions.lock().unwrap();
        let now = Instant::now();
        sessions.retain(|_, s| now.duration_since(s.last_access) < self.idle_timeout);
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::new(DEFAULT_SESSION_TIMEOUT)
    }
}

// ---------------------------------------------------------------------------
// handlers

pub fn handle_request(registry: &Registry, request: &Request) -> Response {
    match request {
        Request::RegisterSchema { schema, db_path, build_dictionary, saf_path, trf_path } => {
            match register_schema(registry, schema.as_ref(), db_path.as_deref(), *build_dictionary, saf_path.as_deref(), trf_path.as_deref()) {
                Ok(id) => Response { schema_id: Some(id), ..Response::ok() },
                Err(e) => Response::err(&e),
            }
        }
        Request::BatchFeasibility { schema_id, mode, profile, items } => {
            match batch_feasibility(registry, schema_id.as_deref(), *mode, *profile, items) {
                Ok(results) => Response { results: Some(results), ..Response::ok() },
                Err(e) => Response::err(&e),
            }
        }
        Request::LinkAndSerialize { schema_id, question, db_content } => {
            match link_and_serialize(registry, schema_id, question, *db_content) {
                Ok((serialized, items)) => Response {
                    serialized: Some(serialized),
                    data_items: Some(items),
                    ..Response::ok()
                },
                Err(e) => Response::err(&e),
            }
        }
    }
}

fn register_schema(
    registry: &Registry,
    schema: Option<&serde_json::Value>,
    db_path: Option<&str>,
    build_dictionary: bool,
    saf_path: Option<&str>,
    trf_path: Option<&str>,
) -> Result<String> {
    let catalog = match (schema, db_path) {
        (Some(doc), _) => SchemaCatalog::from_spider_json(&doc.to_string())?,
        (None, Some(path)) => SchemaCatalog::load_db(Path::new(path))?,
        (None, None) => {
            return Err(Error::Contract(
                "register_schema needs a schema document or a db_path".into(),
            ))
        }
    };
    let dictionary = if build_dictionary {
        let Some(path) = db_path else {
            return Err(Error::Config(
                "build_dictionary requires db_path".into(),
            ));
        };
        Some(Arc::new(ValueDictionary::build(
            &catalog,
            Path::new(path),
            DEFAULT_MAX_VALUES_PER_COLUMN,
        )?))
    } else {
        None
    };
    let lrf = match (saf_path, trf_path) {
        (Some(saf), Some(trf)) => {
            let entries = linker::parse_saf(Path::new(saf), Some(&catalog))?;
            let rules = linker::parse_trf(Path::new(trf))?;
            Some(Arc::new(linker::adapt(&rules, &entries)?))
        }
        (None, None) => None,
        _ => {
            return Err(Error::Config(
                "linker rules need both saf_path and trf_path".into(),
            ))
        }
    };
    let id = registry.next_schema_id(&catalog.db_id);
    registry.schemas.lock().unwrap().insert(
        id.clone(),
        Arc::new(SchemaEntry { catalog: Arc::new(catalog), dictionary, lrf }),
    );
    Ok(id)
}

fn schema_entry(registry: &Registry, id: &str) -> Result<Arc<SchemaEntry>> {
    registry
        .schemas
        .lock()
        .unwrap()
        .get(id)
        .cloned()
        .ok_or_else(|| Error::Contract(format!("unknown schema id {id:?}")))
}

fn batch_feasibility(
    registry: &Registry,
    schema_id: Option<&str>,
    mode: Mode,
    profile: Profile,
    items: &[FeasibilityItem],
) -> Result<Vec<ItemResult>> {
    registry.sweep_sessions();
    let catalog = match (mode, schema_id) {
        (Mode::ParseWithGuards, None) => {
            return Err(Error::Config(
                "parse_with_guards requires a registered schema".into(),
            ))
        }
        (_, Some(id)) => Some(schema_entry(registry, id)?.catalog.clone()),
        (_, None) => None,
    };
    let mut results = Vec::with_capacity(items.len());
    for item in items {
        results.push(feasibility_item(registry, catalog.clone(), mode, profile, item));
    }
    Ok(results)
}

fn feasibility_item(
    registry: &Registry,
    catalog: Option<Arc<SchemaCatalog>>,
    mode: Mode,
    profile: Profile,
    item: &FeasibilityItem,
) -> ItemResult {
    let failure = |e: Error| ItemResult {
        ok: false,
        error: Some(ErrorRecord::from_error(&e)),
        verdicts: None,
        session: None,
    };
    let state = match (&item.session, &item.prefix) {
        (Some(id), _) => {
            let mut sessions = registry.sessions.lock().unwrap();
            match sessions.get_mut(id) {
                Some(s) => {
                    s.last_access = Instant::now();
                    s.state.clone()
                }
                None => return failure(Error::Contract(format!("unknown session {id:?}"))),
            }
        }
        (None, Some(prefix)) => match ParserState::init(mode, profile, catalog) {
            Ok(s) => s.advance(prefix),
            Err(e) => return failure(e),
        },
        (None, None) => match ParserState::init(mode, profile, catalog) {
            Ok(s) => s,
            Err(e) => return failure(e),
        },
    };
    // a dead state answers Invalid for every candidate rather than erroring
    let verdicts = if state.verdict() == Verdict::Invalid {
        vec![Verdict::Invalid; item.candidates.len()]
    } else {
        match state.feasible_extensions(&item.candidates) {
            Ok(v) => v,
            Err(e) => return failure(e),
        }
    };
    let session = item.commit.as_ref().map(|commit| {
        let committed = state.advance(commit);
        let id = item.session.clone().unwrap_or_else(|| registry.next_session_id());
        registry.sessions.lock().unwrap().insert(
            id.clone(),
            Session { state: committed, last_access: Instant::now() },
        );
        id
    });
    ItemResult { ok: true, error: None, verdicts: Some(verdicts), session }
}

fn link_and_serialize(
    registry: &Registry,
    schema_id: &str,
    question: &str,
    db_content: DbContent,
) -> Result<(String, Vec<WireDataItem>)> {
    let entry = schema_entry(registry, schema_id)?;
    let (links, items) = match db_content {
        DbContent::Disabled => (Vec::new(), Vec::new()),
        DbContent::Enabled => {
            let (Some(dict), Some(lrf)) = (&entry.dictionary, &entry.lrf) else {
                return Err(Error::Config(
                    "enabled db content requires a registered dictionary and linker rules".into(),
                ));
            };
            let items = linker::process_query(question, lrf, dict, &entry.catalog);
            (linker::extract_column_value_pairs(&items), items)
        }
    };
    let cfg = SerializationConfig { db_content, lowercase_schema: true };
    let serialized = serialize(question, &entry.catalog, &links, &cfg)?;
    let wire = items
        .iter()
        .map(|i| WireDataItem { key: i.key(), properties: i.properties.clone() })
        .collect();
    Ok((serialized, wire))
}

// ---------------------------------------------------------------------------
// transports

/// Serve line-delimited JSON requests until `stop` flips. One thread per
/// connection; responses are written in request order per connection.
pub fn serve_ndjson(listener: TcpListener, registry: Arc<Registry>, stop: Arc<AtomicBool>) {
    listener.set_nonblocking(true).ok();
    let mut workers = Vec::new();
    while !stop.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((stream, _)) => {
                let registry = registry.clone();
                workers.push(std::thread::spawn(move || handle_ndjson_conn(stream, &registry)));
            }
            Err(ref e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(_) => break,
        }
    }
    for w in workers {
        let _ = w.join();
    }
}

fn handle_ndjson_conn(stream: TcpStream, registry: &Registry) {
    let reader = BufReader::new(match stream.try_clone() {
        Ok(s) => s,
        Err(_) => return,
    });
    let mut writer = stream;
    for line in reader.lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<Request>(&line) {
            Ok(request) => handle_request(registry, &request),
            Err(e) => Response::err(&Error::Json(e)),
        };
        let mut payload = serde_json::to_string(&response).expect("response serializes");
        payload.push('\n');
        if writer.write_all(payload.as_bytes()).is_err() {
            break;
        }
    }
}

/// Minimal HTTP/1.1 binding: `POST /v1/<op>` with the request record
/// (minus the `op` field) as the JSON body; the response record is the
/// body of a 200 reply. Anything malformed gets a 400 with an error
/// record.
pub fn serve_http(listener: TcpListener, registry: Arc<Registry>, stop: Arc<AtomicBool>) {
    listener.set_nonblocking(true).ok();
    let mut workers = Vec::new();
    while !stop.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((stream, _)) => {
                let registry = registry.clone();
                workers.push(std::thread::spawn(move || handle_http_conn(stream, &registry)));
            }
            Err(ref e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(_) => break,
        }
    }
    for w in workers {
        let _ = w.join();
    }
}

fn handle_http_conn(stream: TcpStream, registry: &Registry) {
    let mut reader = BufReader::new(match stream.try_clone() {
        Ok(s) => s,
        Err(_) => return,
    });
    let mut writer = stream;
    loop {
        let mut request_line = String::new();
        if reader.read_line(&mut request_line).unwrap_or(0) == 0 {
            return;
        }
        let mut parts = request_line.split_whitespace();
        let method = parts.next().unwrap_or("");
        let path = parts.next().unwrap_or("");
        let mut content_length = 0usize;
        loop {
            let mut header = String::new();
            if reader.read_line(&mut header).unwrap_or(0) == 0 {
                return;
            }
            let header = header.trim();
            if header.is_empty() {
                break;
            }
            if let Some(v) = header
                .to_ascii_lowercase()
                .strip_prefix("content-length:")
                .map(|v| v.trim().to_string())
            {
                content_length = v.parse().unwrap_or(0);
            }
        }
        let mut body = vec![0u8; content_length];
        if content_length > 0 && reader.read_exact(&mut body).is_err() {
            return;
        }

        let (status, response) = http_dispatch(registry, method, path, &body);
        let payload = serde_json::to_string(&response).expect("response serializes");
        let reply = format!(
            "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{payload}",
            payload.len()
        );
        if writer.write_all(reply.as_bytes()).is_err() {
            return;
        }
    }
}

fn http_dispatch(registry: &Registry, method: &str, path: &str, body: &[u8]) -> (&'static str, Response) {
    if method != "POST" {
        return (
            "405 Method Not Allowed",
            Response::err(&Error::Contract("only POST is supported".into())),
        );
    }
    let Some(op) = path.strip_prefix("/v1/") else {
        return (
            "404 Not Found",
            Response::err(&Error::Contract(format!("unknown path {path:?}"))),
        );
    };
    let mut value: serde_json::Value = match serde_json::from_slice(body) {
        Ok(v) => v,
        Err(e) => return ("400 Bad Request", Response::err(&Error::Json(e))),
    };
    match value.as_object_mut() {
        Some(map) => {
            map.insert("op".to_string(), serde_json::Value::String(op.to_string()));
        }
        None => {
            return (
                "400 Bad Request",
                Response::err(&Error::Contract("body must be a JSON object".into())),
            )
        }
    }
    match serde_json::from_value::<Request>(value) {
        Ok(request) => ("200 OK", handle_request(registry, &request)),
        Err(e) => ("400 Bad Request", Response::err(&Error::Json(e))),
    }
}
