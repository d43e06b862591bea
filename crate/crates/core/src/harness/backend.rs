//! Model backend wire protocol: HTTP, stdio JSON lines, and in-process stubs.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configmodel::translate;
use crate::datasets::Task;
use crate::noising::LanguageTag;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformRequest {
    pub task: Task,
    pub src_lang: LanguageTag,
    pub tgt_lang: LanguageTag,
    pub input: String,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransformResponse {
    #[serde(default)]
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TransformResponse {
    pub fn ok(output: impl Into<String>) -> Self {
        TransformResponse {
            output: output.into(),
            ..Default::default()
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        TransformResponse {
            error: Some(message.into()),
            ..Default::default()
        }
    }

    /// Output xor error, and token probabilities in (0, 1].
    pub fn check(&self) -> Result<(), String> {
        if self.error.is_some() && !self.output.is_empty() {
            return Err("response has both output and error".into());
        }
        if let Some(p) = &self.token_probs {
            if let Some(bad) = p.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
                return Err(format!("token probability {bad} is outside (0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error("backend protocol error: {0}")]
    Protocol(String),
    #[error("backend error: {0}")]
    Remote(String),
}

pub trait Backend: Send + Sync {
    /// Fails fast when the backend cannot be reached at all.
    fn ping(&self) -> Result<(), BackendError> {
        Ok(())
    }

    fn transform(&self, request: &TransformRequest) -> Result<TransformResponse, BackendError>;
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn ping(&self) -> Result<(), BackendError> {
        (**self).ping()
    }

    fn transform(&self, request: &TransformRequest) -> Result<TransformResponse, BackendError> {
        (**self).transform(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendMode {
    Http,
    Stdio,
    BuiltinStub,
}

impl FromStr for BackendMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "http" => Ok(BackendMode::Http),
            "stdio" => Ok(BackendMode::Stdio),
            "builtin-stub" | "builtin" => Ok(BackendMode::BuiltinStub),
            other => Err(format!("unknown backend mode `{other}` (expected http, stdio or builtin-stub)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendEndpoint {
    pub mode: BackendMode,
    /// URL for http, executable (plus arguments) for stdio, stub name for builtin-stub.
    pub address: String,
    pub timeout_secs: f64,
    pub max_in_flight: usize,
}

impl BackendEndpoint {
    pub fn new(mode: BackendMode, address: impl Into<String>) -> Self {
        BackendEndpoint {
            mode,
            address: address.into(),
            timeout_secs: 60.0,
            max_in_flight: 4,
        }
    }

    /// Builds the backend. `lookup_table` feeds the `lookup` stub.
    pub fn connect(
        &self,
        lookup_table: Option<&Path>,
    ) -> Result<Box<dyn Backend>, BackendError> {
        if !(self.timeout_secs > 0.0) {
            return Err(BackendError::Protocol("timeout must be positive".into()));
        }
        let timeout = Duration::from_secs_f64(self.timeout_secs);
        Ok(match self.mode {
            BackendMode::Http => Box::new(HttpBackend::new(&self.address, timeout)),
            BackendMode::Stdio => {
                let mut parts = self.address.split_whitespace();
                let program = parts
                    .next()
                    .ok_or_else(|| BackendError::Unreachable("empty stdio command".into()))?;
                Box::new(StdioBackend::spawn(program, &parts.collect::<Vec<_>>())?)
            }
            BackendMode::BuiltinStub => match self.address.as_str() {
                "echo" => Box::new(EchoBackend),
                "translate" => Box::new(TranslateBackend),
                "lookup" => Box::new(match lookup_table {
                    Some(p) => LookupBackend::from_jsonl(p)?,
                    None => LookupBackend::default(),
                }),
                other => {
                    return Err(BackendError::Unreachable(format!(
                        "unknown builtin stub `{other}` (expected echo, lookup or translate)"
                    )))
                }
            },
        })
    }
}

/// POSTs each request to `{address}/v1/transform`.
pub struct HttpBackend {
    base: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(address: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend {
            base: address.trim_end_matches('/').to_string(),
            agent,
        }
    }

    fn host_port(&self) -> Option<String> {
        let rest = self.base.split_once("://").map_or(self.base.as_str(), |(_, r)| r);
        let authority = rest.split('/').next()?;
        Some(if authority.contains(':') {
            authority.to_string()
        } else {
            format!("{authority}:80")
        })
    }
}

impl Backend for HttpBackend {
    fn ping(&self) -> Result<(), BackendError> {
        let hp = self
            .host_port()
            .ok_or_else(|| BackendError::Unreachable(format!("bad address `{}`", self.base)))?;
        let addr = hp
            .to_socket_addrs()
            .map_err(|e| BackendError::Unreachable(format!("{hp}: {e}")))?
            .next()
            .ok_or_else(|| BackendError::Unreachable(format!("{hp}: no address")))?;
        TcpStream::connect_timeout(&addr, Duration::from_secs(5))
            .map(drop)
            .map_err(|e| BackendError::Unreachable(format!("{hp}: {e}")))
    }

    fn transform(&self, request: &TransformRequest) -> Result<TransformResponse, BackendError> {
        let mut resp = self
            .agent
            .post(format!("{}/v1/transform", self.base))
            .send_json(request)
            .map_err(|e| BackendError::Unreachable(e.to_string()))?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(BackendError::Remote(format!("HTTP status {status}")));
        }
        resp.body_mut()
            .read_json::<TransformResponse>()
            .map_err(|e| BackendError::Protocol(e.to_string()))
    }
}

/// One request line out, one response line back, over a child process's pipes.
pub struct StdioBackend {
    child: Mutex<Child>,
    pipes: Mutex<(BufWriter<ChildStdin>, BufReader<ChildStdout>)>,
}

impl StdioBackend {
    pub fn spawn(program: &str, args: &[&str]) -> Result<Self, BackendError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| BackendError::Unreachable(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Ok(StdioBackend {
            child: Mutex::new(child),
            pipes: Mutex::new((BufWriter::new(stdin), BufReader::new(stdout))),
        })
    }
}

impl Backend for StdioBackend {
    fn ping(&self) -> Result<(), BackendError> {
        match self.child.lock().unwrap().try_wait() {
            Ok(None) => Ok(()),
            Ok(Some(status)) => Err(BackendError::Unreachable(format!("backend exited: {status}"))),
            Err(e) => Err(BackendError::Unreachable(e.to_string())),
        }
    }

    fn transform(&self, request: &TransformRequest) -> Result<TransformResponse, BackendError> {
        let mut pipes = self.pipes.lock().unwrap();
        let (w, r) = &mut *pipes;
        let line = serde_json::to_string(request).expect("serializable");
        writeln!(w, "{line}")
            .and_then(|_| w.flush())
            .map_err(|e| BackendError::Unreachable(e.to_string()))?;
        let mut reply = String::new();
        let n = r
            .read_line(&mut reply)
            .map_err(|e| BackendError::Unreachable(e.to_string()))?;
        if n == 0 {
            return Err(BackendError::Unreachable("backend closed its output".into()));
        }
        serde_json::from_str(reply.trim_end()).map_err(|e| BackendError::Protocol(e.to_string()))
    }
}

impl Drop for StdioBackend {
    fn drop(&mut self) {
        let mut child = self.child.lock().unwrap();
        let _ = child.kill();
        let _ = child.wait();
    }
}

/// Returns the input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoBackend;

impl Backend for EchoBackend {
    fn transform(&self, request: &TransformRequest) -> Result<TransformResponse, BackendError> {
        Ok(TransformResponse::ok(request.input.clone()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LookupEntry {
    pub input: String,
    pub output: String,
}

/// Answers from a fixed input to output table; unknown inputs get an empty answer.
#[derive(Debug, Clone, Default)]
pub struct LookupBackend {
    table: HashMap<String, String>,
}

impl LookupBackend {
    pub fn new<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        LookupBackend {
            table: pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }

    /// Lines of `{"input": ..., "output": ...}`; task example files fit this shape.
    pub fn from_jsonl(path: &Path) -> Result<Self, BackendError> {
        let entries: Vec<LookupEntry> = crate::corpus::read_jsonl(path)
            .map_err(|e| BackendError::Unreachable(e.to_string()))?;
        Ok(Self::new(entries.into_iter().map(|e| (e.input, e.output))))
    }
}

impl Backend for LookupBackend {
    fn transform(&self, request: &TransformRequest) -> Result<TransformResponse, BackendError> {
        Ok(TransformResponse::ok(
            self.table.get(&request.input).cloned().unwrap_or_default(),
        ))
    }
}

/// Translation through the configuration model; other tasks are answered with an error.
#[derive(Debug, Clone, Copy, Default)]
pub struct TranslateBackend;

impl Backend for TranslateBackend {
    fn transform(&self, request: &TransformRequest) -> Result<TransformResponse, BackendError> {
        let (Some(from), Some(to)) = (request.src_lang.vendor(), request.tgt_lang.vendor()) else {
            return Ok(TransformResponse::error(format!(
                "translate stub cannot handle {} requests",
                request.task
            )));
        };
        Ok(match translate(&request.input, from, to) {
            Ok(out) => TransformResponse::ok(out),
            Err(e) => TransformResponse::error(e.to_string()),
        })
    }
}

/// Serves the stdio protocol: one JSON request per input line, one JSON response per output
/// line, in order. Malformed lines get an error response.
pub fn serve_stdio<R: BufRead, W: Write>(
    backend: &dyn Backend,
    input: R,
    mut output: W,
) -> std::io::Result<usize> {
    let mut served = 0;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<TransformRequest>(&line) {
            Ok(req) => backend
                .transform(&req)
                .unwrap_or_else(|e| TransformResponse::error(e.to_string())),
            Err(e) => TransformResponse::error(format!("bad request: {e}")),
        };
        writeln!(output, "{}", serde_json::to_string(&response).expect("serializable"))?;
        output.flush()?;
        served += 1;
    }
    Ok(served)
}
