//! Encoder backends: test-hash, precomputed PVEC files and an HTTP service.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use pareto_core::{DenseVector, EncodeItem, Encoder, HashEncoder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pvec::{self, PrecomputedEncoder};

pub const DEFAULT_DIM: usize = 256;
pub const DEFAULT_BATCH_SIZE: usize = 64;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;
pub const DEFAULT_TIMEOUT_SECS: u64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    #[default]
    TestHash,
    Precomputed,
    Http,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "test-hash" => Ok(Self::TestHash),
            "precomputed" => Ok(Self::Precomputed),
            "http" => Ok(Self::Http),
            other => Err(format!("unknown backend {other:?}; expected test-hash, precomputed or http")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub backend: BackendKind,
    pub dim: usize,
    pub batch_size: usize,
    /// HTTP endpoint URL.
    pub endpoint: Option<String>,
    /// PVEC files; each is paired with `<stem>.keys.jsonl`.
    pub vectors: Vec<PathBuf>,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
    /// Overrides the identifier stored in index headers. Needed for
    /// precomputed and HTTP backends when the same model is served from
    /// different places.
    pub backend_id: Option<String>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::TestHash,
            dim: DEFAULT_DIM,
            batch_size: DEFAULT_BATCH_SIZE,
            endpoint: None,
            vectors: Vec::new(),
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            timeout_secs: DEFAULT_TIMEOUT_SECS,
            backend_id: None,
        }
    }
}

impl EncoderConfig {
    /// All violations, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.dim == 0 {
            v.push("encoder.dim must be > 0".to_string());
        }
        if self.batch_size == 0 {
            v.push("encoder.batch_size must be >= 1".to_string());
        }
        if self.max_in_flight == 0 {
            v.push("encoder.max_in_flight must be >= 1".to_string());
        }
        match self.backend {
            BackendKind::Http if self.endpoint.as_deref().unwrap_or("").is_empty() => {
                v.push("encoder.endpoint is required for the http backend".to_string());
            }
            BackendKind::Precomputed if self.vectors.is_empty() => {
                v.push("encoder.vectors must list at least one PVEC file for the precomputed backend".to_string());
            }
            _ => {}
        }
        v
    }

    pub fn backend_id(&self) -> String {
        if let Some(id) = &self.backend_id {
            return id.clone();
        }
        match self.backend {
            BackendKind::TestHash => format!("test-hash:{}", self.dim),
            BackendKind::Precomputed => format!("precomputed:{}", self.dim),
            BackendKind::Http => format!("http:{}:{}", self.endpoint.as_deref().unwrap_or(""), self.dim),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Encoder>> {
        let v = self.violations();
        if !v.is_empty() {
            return Err(Error::Config(v));
        }
        Ok(match self.backend {
            BackendKind::TestHash => {
                let enc = HashEncoder::new(self.dim)?;
                match &self.backend_id {
                    Some(id) => Box::new(Renamed { inner: enc, id: id.clone() }),
                    None => Box::new(enc),
                }
            }
            BackendKind::Precomputed => {
                let files: Vec<_> = self
                    .vectors
                    .iter()
                    .map(|p| (p.clone(), pvec::default_keys_path(p)))
                    .collect();
                Box::new(PrecomputedEncoder::open(&files, self.dim, self.backend_id())?)
            }
            BackendKind::Http => Box::new(HttpEncoder::new(
                self.endpoint.clone().unwrap_or_default(),
                self.dim,
                self.backend_id(),
                self.batch_size,
                self.max_in_flight,
                Duration::from_secs(self.timeout_secs),
            )),
        })
    }
}

struct Renamed<E> {
    inner: E,
    id: String,
}

impl<E: Encoder> Encoder for Renamed<E> {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn encode_batch(&self, items: &[EncodeItem<'_>]) -> pareto_core::Result<Vec<DenseVector>> {
        self.inner.encode_batch(items)
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: Vec<&'a str>,
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
}

/// Client for `POST <endpoint>` with `{"texts": [...]}` returning
/// `{"embeddings": [[...], ...]}` in request order.
///
/// A call to `encode_batch` is split into requests of at most
/// `request_size` texts, with at most `max_in_flight` outstanding at once.
pub struct HttpEncoder {
    endpoint: String,
    dim: usize,
    backend_id: String,
    request_size: usize,
    max_in_flight: usize,
    agent: ureq::Agent,
}

impl HttpEncoder {
    pub fn new(
        endpoint: String,
        dim: usize,
        backend_id: String,
        request_size: usize,
        max_in_flight: usize,
        timeout: Duration,
    ) -> Self {
        Self {
            endpoint,
            dim,
            backend_id,
            request_size: request_size.max(1),
            max_in_flight: max_in_flight.max(1),
            agent: http_agent(timeout),
        }
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<DenseVector>> {
        let body = post_json(&self.agent, &self.endpoint, &EmbedRequest { texts: texts.to_vec() })?;
        let parsed: EmbedResponse =
            serde_json::from_str(&body).map_err(|e| Error::Protocol(format!("embedding response: {e}")))?;
        if parsed.embeddings.len() != texts.len() {
            return Err(Error::Protocol(format!(
                "sent {} texts, got {} embeddings",
                texts.len(),
                parsed.embeddings.len()
            )));
        }
        parsed
            .embeddings
            .into_iter()
            .map(|values| {
                if values.len() != self.dim {
                    return Err(pareto_core::Error::DimMismatch {
                        expected: self.dim,
                        found: values.len(),
                    }
                    .into());
                }
                Ok(DenseVector::new(values)?)
            })
            .collect()
    }
}

impl Encoder for HttpEncoder {
    fn backend_id(&self) -> &str {
        &self.backend_id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_batch(&self, items: &[EncodeItem<'_>]) -> pareto_core::Result<Vec<DenseVector>> {
        let texts: Vec<&str> = items.iter().map(|i| i.text).collect();
        let chunks: Vec<&[&str]> = texts.chunks(self.request_size).collect();
        let results: Vec<Mutex<Option<Result<Vec<DenseVector>>>>> = chunks.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..self.max_in_flight.min(chunks.len()) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= chunks.len() {
                        break;
                    }
                    let r = self.request(chunks[i]);
                    *results[i].lock().unwrap() = Some(r);
                });
            }
        });
        let mut out = Vec::with_capacity(items.len());
        for slot in results {
            match slot.into_inner().unwrap().expect("every chunk is processed") {
                Ok(vs) => out.extend(vs),
                Err(Error::Core(e)) => return Err(e),
                Err(e) => return Err(pareto_core::Error::Backend(e.to_string())),
            }
        }
        Ok(out)
    }
}

pub(crate) fn http_agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

/// POSTs `body` as JSON and returns the response text for a 2xx status.
pub(crate) fn post_json<T: Serialize>(agent: &ureq::Agent, url: &str, body: &T) -> Result<String> {
    let mut resp = agent.post(url).send_json(body).map_err(map_ureq)?;
    let status = resp.status().as_u16();
    let text = resp
        .body_mut()
        .with_config()
        .limit(u64::MAX)
        .read_to_string()
        .map_err(map_ureq)?;
    if !(200..300).contains(&status) {
        let snippet: String = text.chars().take(200).collect();
        return Err(Error::Backend {
            status: Some(status),
            message: snippet,
        });
    }
    Ok(text)
}

fn map_ureq(e: ureq::Error) -> Error {
    match e {
        ureq::Error::Timeout(_) => Error::Timeout,
        ureq::Error::StatusCode(s) => Error::Backend {
            status: Some(s),
            message: String::new(),
        },
        other => Error::Backend {
            status: None,
            message: other.to_string(),
        },
    }
}
