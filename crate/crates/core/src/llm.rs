//! Chat-completion client abstraction with an HTTP implementation and deterministic stubs.

use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::read_jsonl;
use crate::util::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    /// Prompt template or plan step that produced this request.
    pub template_id: String,
    pub system: Option<String>,
    pub user: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl LlmRequest {
    pub fn new(template_id: impl Into<String>, system: Option<String>, user: String) -> Self {
        LlmRequest {
            template_id: template_id.into(),
            system,
            user,
            temperature: 0.0,
            max_tokens: 1024,
        }
    }

    /// System text (if any) and user text separated by a blank line.
    pub fn rendered_prompt(&self) -> String {
        match &self.system {
            Some(s) => format!("{s}\n\n{}", self.user),
            None => self.user.clone(),
        }
    }

    pub fn prompt_sha256(&self) -> String {
        sha256_hex(self.rendered_prompt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    pub finish_reason: FinishReason,
}

impl LlmResponse {
    pub fn stop(text: impl Into<String>) -> Self {
        LlmResponse {
            text: text.into(),
            finish_reason: FinishReason::Stop,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("LLM unavailable: {0}")]
    Unavailable(String),
    #[error("LLM refused the request: {0}")]
    Refusal(String),
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError>;
}

impl<C: LlmClient + ?Sized> LlmClient for &C {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        (**self).complete(request)
    }
}

impl<C: LlmClient + ?Sized> LlmClient for Box<C> {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        (**self).complete(request)
    }
}

/// POSTs `{system, user, temperature, max_tokens}` to `{base_url}/v1/chat`.
pub struct HttpLlmClient {
    base_url: String,
    key: Option<String>,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct ChatBody<'a> {
    system: &'a str,
    user: &'a str,
    temperature: f64,
    max_tokens: u32,
}

impl HttpLlmClient {
    pub fn new(base_url: impl Into<String>, key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpLlmClient {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            key,
            agent,
        }
    }

    /// Reads `CONFFORGE_LLM_URL` and the optional `CONFFORGE_LLM_KEY`.
    pub fn from_env() -> Result<Self, LlmError> {
        let url = std::env::var("CONFFORGE_LLM_URL")
            .map_err(|_| LlmError::Unavailable("CONFFORGE_LLM_URL is not set".into()))?;
        let key = std::env::var("CONFFORGE_LLM_KEY").ok();
        Ok(Self::new(url, key, Duration::from_secs(120)))
    }
}

impl LlmClient for HttpLlmClient {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let body = ChatBody {
            system: request.system.as_deref().unwrap_or(""),
            user: &request.user,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let mut req = self.agent.post(format!("{}/v1/chat", self.base_url));
        if let Some(key) = &self.key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| LlmError::Unavailable(e.to_string()))?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(LlmError::Unavailable(format!("HTTP status {status}")));
        }
        resp.body_mut()
            .read_json::<LlmResponse>()
            .map_err(|e| LlmError::Unavailable(format!("malformed response: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub prompt_sha256: String,
    pub text: String,
}

/// Replays canned responses keyed by the SHA-256 of the rendered prompt.
#[derive(Debug, Clone, Default)]
pub struct ScriptedClient {
    responses: HashMap<String, String>,
}

impl ScriptedClient {
    pub fn new(entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        ScriptedClient {
            responses: entries
                .into_iter()
                .map(|e| (e.prompt_sha256, e.text))
                .collect(),
        }
    }

    pub fn from_jsonl(path: &Path) -> Result<Self, crate::corpus::CorpusError> {
        Ok(Self::new(read_jsonl::<ScriptEntry>(path)?))
    }

    pub fn insert(&mut self, request: &LlmRequest, text: impl Into<String>) {
        self.responses.insert(request.prompt_sha256(), text.into());
    }
}

impl LlmClient for ScriptedClient {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let key = request.prompt_sha256();
        self.responses
            .get(&key)
            .map(|t| LlmResponse::stop(t.clone()))
            .ok_or_else(|| LlmError::Unavailable(format!("no scripted response for prompt {key}")))
    }
}

/// Returns the queued responses in call order, then reports itself unavailable.
#[derive(Debug, Default)]
pub struct SequenceClient {
    queue: Mutex<VecDeque<Result<LlmResponse, LlmError>>>,
}

impl SequenceClient {
    pub fn new(responses: impl IntoIterator<Item = Result<LlmResponse, LlmError>>) -> Self {
        SequenceClient {
            queue: Mutex::new(responses.into_iter().collect()),
        }
    }

    pub fn texts<S: Into<String>>(texts: impl IntoIterator<Item = S>) -> Self {
        Self::new(texts.into_iter().map(|t| Ok(LlmResponse::stop(t))))
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().unwrap().len()
    }
}

impl LlmClient for SequenceClient {
    fn complete(&self, _request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        self.queue
            .lock()
            .unwrap()
            .pop_front()
            .unwrap_or_else(|| Err(LlmError::Unavailable("script exhausted".into())))
    }
}

/// Adapts a closure into a client.
pub struct FnClient<F>(pub F);

impl<F> LlmClient for FnClient<F>
where
    F: Fn(&LlmRequest) -> Result<LlmResponse, LlmError> + Send + Sync,
{
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        (self.0)(request)
    }
}

/// Answers every prompt with the content of its first fenced block.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoClient;

impl LlmClient for EchoClient {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let body = fenced_blocks(&request.user)
            .into_iter()
            .next()
            .unwrap_or_else(|| request.user.clone());
        Ok(LlmResponse::stop(body))
    }
}

/// Contents of every ```-fenced block, without the fence lines.
pub fn fenced_blocks(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(lines) => out.push(lines.join("\n")),
                None => current = Some(Vec::new()),
            }
        } else if let Some(lines) = current.as_mut() {
            lines.push(line);
        }
    }
    out
}

pub fn fence(text: &str) -> String {
    format!("```\n{}\n```", text.trim_end_matches('\n'))
}
