//! Chat-completion client for answer generation.
//!
//! Request: `{"model", "messages": [{"role", "content"}], "temperature",
//! "max_tokens", "seed"}`. Response: `{"choices": [{"message": {"content"}}]}`.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use pareto_core::prompt::{AssembledPrompt, PromptTemplate};
use pareto_core::{RetrievalResult, Tokenizer, WhitespaceTokenizer};
use serde::{Deserialize, Serialize};

use crate::encoders::{http_agent, post_json};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub seed: u64,
    pub timeout_secs: u64,
    /// Extra attempts after a failed request. Zero disables retrying.
    pub retries: u32,
    /// Concurrent requests in [`GenClient::generate_many`].
    pub parallelism: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            temperature: 0.1,
            max_output_tokens: 150,
            seed: 100,
            timeout_secs: 120,
            retries: 0,
            parallelism: 4,
        }
    }
}

impl GenConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.endpoint.is_empty() {
            v.push("gen.endpoint is required".to_string());
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            v.push(format!("gen.temperature must be >= 0, got {}", self.temperature));
        }
        if self.max_output_tokens < 1 {
            v.push("gen.max_output_tokens must be >= 1".to_string());
        }
        if self.parallelism < 1 {
            v.push("gen.parallelism must be >= 1".to_string());
        }
        v
    }
}

#[derive(Debug, Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<Message<'a>>,
    temperature: f64,
    max_tokens: u32,
    seed: u64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

pub struct GenClient {
    cfg: GenConfig,
    agent: ureq::Agent,
}

impl GenClient {
    pub fn new(cfg: GenConfig) -> Result<Self> {
        let v = cfg.violations();
        if !v.is_empty() {
            return Err(Error::Config(v));
        }
        let agent = http_agent(Duration::from_secs(cfg.timeout_secs));
        Ok(Self { cfg, agent })
    }

    pub fn config(&self) -> &GenConfig {
        &self.cfg
    }

    /// Sends one prompt. The system message is omitted when empty.
    pub fn generate(&self, prompt: &AssembledPrompt) -> Result<String> {
        let mut messages = Vec::with_capacity(2);
        if !prompt.system.is_empty() {
            messages.push(Message {
                role: "system",
                content: &prompt.system,
            });
        }
        messages.push(Message {
            role: "user",
            content: &prompt.user,
        });
        let req = ChatRequest {
            model: &self.cfg.model,
            messages,
            temperature: self.cfg.temperature,
            max_tokens: self.cfg.max_output_tokens,
            seed: self.cfg.seed,
        };
        let mut attempt = 0;
        loop {
            match self.send(&req) {
                Err(e) if attempt < self.cfg.retries && retryable(&e) => {
                    attempt += 1;
                    log::warn!("generation attempt {attempt} failed: {e}; retrying");
                }
                other => return other,
            }
        }
    }

    fn send(&self, req: &ChatRequest<'_>) -> Result<String> {
        let body = post_json(&self.agent, &self.cfg.endpoint, req)?;
        let parsed: ChatResponse =
            serde_json::from_str(&body).map_err(|e| Error::Protocol(format!("chat response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Error::Protocol("response has no choices[0].message.content".into()))
    }

    /// Generates for every prompt with at most `parallelism` requests in
    /// flight. Output order follows input order.
    pub fn generate_many(&self, prompts: &[AssembledPrompt]) -> Vec<Result<String>> {
        let slots: Vec<Mutex<Option<Result<String>>>> = prompts.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..self.cfg.parallelism.min(prompts.len()) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= prompts.len() {
                        break;
                    }
                    let r = self.generate(&prompts[i]);
                    *slots[i].lock().unwrap() = Some(r);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().unwrap().expect("every prompt is processed"))
            .collect()
    }
}

fn retryable(e: &Error) -> bool {
    match e {
        Error::Timeout => true,
        Error::Backend { status: None, .. } => true,
        Error::Backend { status: Some(s), .. } => *s == 429 || *s >= 500,
        _ => false,
    }
}

/// Loads a template: a built-in name (`none`, `nq`, `hotpotqa`, `msmarco`)
/// or a path to a UTF-8 file.
pub fn load_template(arg: &str) -> Result<PromptTemplate> {
    if pareto_core::prompt::BUILTIN_TEMPLATES.contains(&arg) {
        return Ok(PromptTemplate::builtin(arg)?);
    }
    let path = Path::new(arg);
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().map_or_else(|| arg.to_string(), |s| s.to_string_lossy().into_owned());
    Ok(PromptTemplate::parse(name, body)?)
}

/// Prompt for one query from its retrieval result (items in rank order).
pub fn prompt_for(template: &PromptTemplate, question: &str, result: Option<&RetrievalResult>) -> Result<AssembledPrompt> {
    let items: Vec<&str> = result.map(|r| r.texts().collect()).unwrap_or_default();
    Ok(template.assemble(question, &items)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub query_id: String,
    /// Whitespace tokens of the full prompt.
    pub prompt_tokens: usize,
    pub output: String,
}

impl GenerationRecord {
    pub fn new(query_id: impl Into<String>, prompt: &AssembledPrompt, output: String) -> Self {
        Self {
            query_id: query_id.into(),
            prompt_tokens: WhitespaceTokenizer.count_tokens(&prompt.text),
            output,
        }
    }
}
