//! Client for a TagMe-compatible entity-linking service.
//!
//! Requests are `GET <endpoint>?text=...&gcube-token=...&lang=...`; the
//! response carries `annotations[]` with `title`, `rho` and `spot`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EntityAnnotation, EntityCache};
use crate::error::EntityError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TagMeConfig {
    pub endpoint: String,
    /// Service credential, sent as `gcube-token`. Never serialized.
    #[serde(skip_serializing)]
    pub token: String,
    pub lang: String,
    /// Annotations with `rho` below this are dropped.
    pub threshold: f64,
    /// Maximum in-flight requests.
    pub concurrency: usize,
    pub max_retries: u32,
    /// Base delay for exponential backoff between retries.
    pub backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for TagMeConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://tagme.d4science.org/tagme/tag".into(),
            token: String::new(),
            lang: "en".into(),
            threshold: 0.1,
            concurrency: 4,
            max_retries: 3,
            backoff_ms: 500,
            timeout_secs: 30,
        }
    }
}

/// Minimal HTTP GET abstraction so the client can be exercised without a network.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, params: &[(&str, &str)]) -> Result<String, EntityError>;
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self { agent }
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str, params: &[(&str, &str)]) -> Result<String, EntityError> {
        let mut req = self.agent.get(url);
        for (k, v) in params {
            req = req.query(*k, *v);
        }
        let mut resp = req.call().map_err(|e| match e {
            ureq::Error::StatusCode(code @ (401 | 403)) => {
                EntityError::Transport(format!("authentication rejected (HTTP {code})"))
            }
            other => EntityError::Transport(other.to_string()),
        })?;
        resp.body_mut()
            .read_to_string()
            .map_err(|e| EntityError::Transport(e.to_string()))
    }
}

#[derive(Deserialize)]
struct TagMeResponse {
    annotations: Vec<TagMeAnnotation>,
}

#[derive(Deserialize)]
struct TagMeAnnotation {
    #[serde(default)]
    spot: String,
    title: Option<String>,
    rho: f64,
}

/// Parses a service response, keeping annotations with `rho >= threshold`.
/// Page titles are normalized to wiki ids (`Suicide attack` → `Suicide_attack`).
pub(crate) fn parse_response(body: &str, threshold: f64) -> Result<Vec<EntityAnnotation>, EntityError> {
    let resp: TagMeResponse =
        serde_json::from_str(body).map_err(|e| EntityError::Protocol(e.to_string()))?;
    let mut out = Vec::new();
    for a in resp.annotations {
        if !(0.0..=1.0).contains(&a.rho) {
            return Err(EntityError::Protocol(format!("rho {} outside [0, 1]", a.rho)));
        }
        // Spots the service could not resolve come back without a title.
        let Some(title) = a.title.filter(|t| !t.trim().is_empty()) else {
            continue;
        };
        if a.rho >= threshold {
            out.push(EntityAnnotation {
                surface: a.spot,
                entity_id: title.trim().replace(' ', "_"),
                confidence: a.rho,
            });
        }
    }
    Ok(out)
}

/// Entity linker backed by a remote service, writing through an [`EntityCache`].
pub struct RemoteLinker<T: Transport> {
    config: TagMeConfig,
    transport: T,
    cache: EntityCache,
}

impl RemoteLinker<HttpTransport> {
    pub fn http(config: TagMeConfig, cache: EntityCache) -> Self {
        let transport = HttpTransport::new(Duration::from_secs(config.timeout_secs));
        Self::new(config, transport, cache)
    }
}

impl<T: Transport> RemoteLinker<T> {
    pub fn new(config: TagMeConfig, transport: T, cache: EntityCache) -> Self {
        Self {
            config,
            transport,
            cache,
        }
    }

    pub fn cache(&self) -> &EntityCache {
        &self.cache
    }

    pub fn link(&self, text: &str) -> Result<Vec<EntityAnnotation>, EntityError> {
        if text.trim().is_empty() {
            return Ok(Vec::new());
        }
        let key = EntityCache::key(text, self.config.threshold);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        if self.config.token.is_empty() {
            return Err(EntityError::Transport("no service token configured".into()));
        }
        let body = self.fetch(text)?;
        let annotations = parse_response(&body, self.config.threshold)?;
        self.cache.put(key, annotations.clone())?;
        Ok(annotations)
    }

    fn fetch(&self, text: &str) -> Result<String, EntityError> {
        let params = [
            ("text", text),
            ("gcube-token", self.config.token.as_str()),
            ("lang", self.config.lang.as_str()),
        ];
        let mut attempt = 0;
        loop {
            match self.transport.get(&self.config.endpoint, &params) {
                Ok(body) => return Ok(body),
                Err(EntityError::Transport(msg)) if attempt < self.config.max_retries => {
                    let delay = self.config.backoff_ms.saturating_mul(1 << attempt.min(16));
                    log::warn!("entity request failed ({msg}); retrying in {delay} ms");
                    std::thread::sleep(Duration::from_millis(delay));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Links many texts with at most `concurrency` requests in flight.
    /// Results are returned in input order; duplicate texts are fetched once.
    pub fn link_batch(&self, texts: &[&str]) -> Vec<Result<Vec<EntityAnnotation>, EntityError>> {
        let mut unique: Vec<&str> = Vec::new();
        let mut slot_of: HashMap<&str, usize> = HashMap::new();
        let slots: Vec<usize> = texts
            .iter()
            .map(|t| {
                *slot_of.entry(t).or_insert_with(|| {
                    unique.push(t);
                    unique.len() - 1
                })
            })
            .collect();

        let results: Mutex<Vec<Option<Result<Vec<EntityAnnotation>, EntityError>>>> =
            Mutex::new((0..unique.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let workers = self.config.concurrency.clamp(1, unique.len().max(1));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= unique.len() {
                        break;
                    }
                    let r = self.link(unique[i]);
                    results.lock().expect("results lock")[i] = Some(r);
                });
            }
        });

        let results = results.into_inner().expect("results lock");
        slots
            .into_iter()
            .map(|s| match results[s].as_ref().expect("every slot filled") {
                Ok(a) => Ok(a.clone()),
                Err(e) => Err(duplicate(e)),
            })
            .collect()
    }
}

fn duplicate(e: &EntityError) -> EntityError {
    match e {
        EntityError::Transport(m) => EntityError::Transport(m.clone()),
        EntityError::Protocol(m) => EntityError::Protocol(m.clone()),
        EntityError::Cache(io) => EntityError::Cache(std::io::Error::new(io.kind(), io.to_string())),
        EntityError::Gazetteer { line, message } => EntityError::Gazetteer {
            line: *line,
            message: message.clone(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Write};
    use std::net::TcpListener;
    use std::sync::atomic::AtomicUsize;

    const Q0_RESPONSE: &str = r#"{"annotations":[
        {"spot":"suicide bomber","title":"Suicide attack","rho":0.41,"id":1},
        {"spot":"Gao","title":"Gao","rho":0.52,"id":2},
        {"spot":"Mali","title":"Mali","rho":0.63,"id":3},
        {"spot":"scores","title":"Score (game)","rho":0.02,"id":4},
        {"spot":"at least","rho":0.3}
    ],"lang":"en"}"#;

    struct FakeTransport {
        calls: AtomicUsize,
        body: Result<String, String>,
        fail_first: usize,
    }

    impl FakeTransport {
        fn ok(body: &str) -> Self {
            Self {
                calls: AtomicUsize::new(0),
                body: Ok(body.to_string()),
                fail_first: 0,
            }
        }
    }

    impl Transport for FakeTransport {
        fn get(&self, _url: &str, params: &[(&str, &str)]) -> Result<String, EntityError> {
            assert!(params.iter().any(|(k, v)| *k == "gcube-token" && !v.is_empty()));
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_first {
                return Err(EntityError::Transport("connection reset".into()));
            }
            self.body.clone().map_err(EntityError::Transport)
        }
    }

    fn config() -> TagMeConfig {
        TagMeConfig {
            token: "secret".into(),
            backoff_ms: 1,
            ..Default::default()
        }
    }

    #[test]
    fn parses_and_thresholds() {
        let anns = parse_response(Q0_RESPONSE, 0.1).unwrap();
        let ids: Vec<_> = anns.iter().map(|a| a.entity_id.as_str()).collect();
        assert_eq!(ids, ["Suicide_attack", "Gao", "Mali"]);
        assert_eq!(parse_response(Q0_RESPONSE, 0.0).unwrap().len(), 4);
    }

    #[test]
    fn malformed_responses() {
        assert!(matches!(parse_response("<html>", 0.1), Err(EntityError::Protocol(_))));
        assert!(matches!(parse_response("{}", 0.1), Err(EntityError::Protocol(_))));
        let bad_rho = r#"{"annotations":[{"spot":"x","title":"X","rho":3.0}]}"#;
        assert!(matches!(parse_response(bad_rho, 0.1), Err(EntityError::Protocol(_))));
    }

    #[test]
    fn empty_text_makes_no_request() {
        let linker = RemoteLinker::new(config(), FakeTransport::ok(Q0_RESPONSE), EntityCache::in_memory());
        assert!(linker.link("").unwrap().is_empty());
        assert_eq!(linker.transport.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn cached_text_is_served_without_network() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tagme.jsonl");
        let text = "A suicide bomber detonates a vehicle in Gao, Mali";
        let first = {
            let linker = RemoteLinker::new(config(), FakeTransport::ok(Q0_RESPONSE), EntityCache::open(&path).unwrap());
            let first = linker.link(text).unwrap();
            assert_eq!(linker.link(text).unwrap(), first);
            assert_eq!(linker.transport.calls.load(Ordering::SeqCst), 1);
            first
        };
        // A fresh process with a dead network still answers from the log.
        let offline = FakeTransport {
            calls: AtomicUsize::new(0),
            body: Err("unreachable".into()),
            fail_first: 0,
        };
        let linker = RemoteLinker::new(config(), offline, EntityCache::open(&path).unwrap());
        let again = linker.link(text).unwrap();
        assert_eq!(
            serde_json::to_vec(&again).unwrap(),
            serde_json::to_vec(&first).unwrap()
        );
        assert_eq!(linker.transport.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn retries_transport_errors_then_gives_up() {
        let flaky = FakeTransport {
            fail_first: 2,
            ..FakeTransport::ok(Q0_RESPONSE)
        };
        let linker = RemoteLinker::new(config(), flaky, EntityCache::in_memory());
        assert_eq!(linker.link("Gao").unwrap().len(), 3);
        assert_eq!(linker.transport.calls.load(Ordering::SeqCst), 3);

        let dead = FakeTransport {
            calls: AtomicUsize::new(0),
            body: Err("down".into()),
            fail_first: 0,
        };
        let linker = RemoteLinker::new(config(), dead, EntityCache::in_memory());
        assert!(matches!(linker.link("Gao"), Err(EntityError::Transport(_))));
        assert_eq!(linker.transport.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn missing_token_is_transport_error() {
        let cfg = TagMeConfig { token: String::new(), ..config() };
        let linker = RemoteLinker::new(cfg, FakeTransport::ok(Q0_RESPONSE), EntityCache::in_memory());
        assert!(matches!(linker.link("Gao"), Err(EntityError::Transport(_))));
    }

    #[test]
    fn batch_preserves_order_and_dedupes() {
        let linker = RemoteLinker::new(config(), FakeTransport::ok(Q0_RESPONSE), EntityCache::in_memory());
        let texts = ["a", "b", "a", "c", "b", ""];
        let out = linker.link_batch(&texts);
        assert_eq!(out.len(), 6);
        assert!(out[..5].iter().all(|r| r.as_ref().unwrap().len() == 3));
        assert!(out[5].as_ref().unwrap().is_empty());
        assert_eq!(linker.transport.calls.load(Ordering::SeqCst), 3);
    }

    /// One-shot HTTP server on loopback answering every request with `body`.
    fn serve(body: &'static str, status: &'static str, requests: usize) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let mut seen = Vec::new();
            for stream in listener.incoming().take(requests) {
                let mut stream = stream.unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request_line = String::new();
                reader.read_line(&mut request_line).unwrap();
                loop {
                    let mut h = String::new();
                    reader.read_line(&mut h).unwrap();
                    if h == "\r\n" || h.is_empty() {
                        break;
                    }
                }
                seen.push(request_line);
                write!(
                    stream,
                    "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
            seen
        });
        (format!("http://{addr}/tagme/tag"), handle)
    }

    #[test]
    fn http_transport_against_loopback_server() {
        let (url, server) = serve(Q0_RESPONSE, "200 OK", 1);
        let cfg = TagMeConfig {
            endpoint: url,
            ..config()
        };
        let linker = RemoteLinker::http(cfg, EntityCache::in_memory());
        let anns = linker.link("Gao, Mali").unwrap();
        assert_eq!(anns.len(), 3);
        let requests = server.join().unwrap();
        assert!(requests[0].starts_with("GET /tagme/tag?"));
        assert!(requests[0].contains("text=Gao%2C+Mali") || requests[0].contains("text=Gao%2C%20Mali"));
        assert!(requests[0].contains("gcube-token=secret"));
    }

    #[test]
    fn http_auth_failure_is_transport_error() {
        let (url, server) = serve("{}", "401 Unauthorized", 1);
        let cfg = TagMeConfig {
            endpoint: url,
            max_retries: 0,
            ..config()
        };
        let linker = RemoteLinker::http(cfg, EntityCache::in_memory());
        match linker.link("Gao") {
            Err(EntityError::Transport(m)) => assert!(m.contains("401")),
            other => panic!("expected transport error, got {other:?}"),
        }
        server.join().unwrap();
    }
}
