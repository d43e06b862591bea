//! Scores model backends on generation, analysis and translation with BLEU, ROUGE-L and EM.

mod backend;
pub mod metrics;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{
    serve_stdio, Backend, BackendEndpoint, BackendError, BackendMode, EchoBackend, HttpBackend,
    LookupBackend, LookupEntry, StdioBackend, TransformRequest, TransformResponse,
    TranslateBackend,
};
pub use metrics::{
    bleu, em_hit, exact_match, normalize_for_em, rouge_l, sentence_bleu, sentence_rouge_l,
    MetricError,
};

use crate::datasets::{Split, Task, TaskDataset};
use crate::noising::LanguageTag;
use crate::util::bounded_map;

pub const DEFAULT_MAX_TOKENS: u32 = 512;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    BackendUnreachable(BackendError),
    #[error("split {0:?} is empty")]
    EmptySplit(Split),
    #[error("no probe questions")]
    NoQuestions,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskScores {
    pub bleu: f64,
    pub rouge_l_f1: f64,
    pub em: f64,
    pub n: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleResult {
    pub index: usize,
    pub task: Task,
    pub input: String,
    pub reference: String,
    pub hypothesis: String,
    pub em_hit: bool,
    pub bleu_sentence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tasks: BTreeMap<Task, TaskScores>,
    pub examples: Vec<ExampleResult>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn summary_table(&self) -> String {
        let mut s = format!(
            "{:<12} {:>6} {:>8} {:>8} {:>8} {:>7}\n",
            "task", "n", "BLEU", "ROUGE-L", "EM", "failed"
        );
        for (task, t) in &self.tasks {
            let _ = writeln!(
                s,
                "{:<12} {:>6} {:>8.2} {:>8.2} {:>8.2} {:>7}",
                task.as_str(),
                t.n,
                t.bleu,
                t.rouge_l_f1,
                t.em,
                t.failed
            );
        }
        s
    }
}

fn score(
    index: usize,
    task: Task,
    input: &str,
    reference: &str,
    tag: LanguageTag,
    response: Result<TransformResponse, BackendError>,
) -> ExampleResult {
    let (hypothesis, error) = match response {
        Ok(r) => match r.check().err().or(r.error.clone()) {
            Some(e) => (String::new(), Some(e)),
            None => (r.output, None),
        },
        Err(e) => (String::new(), Some(e.to_string())),
    };
    let (em, b) = if error.is_some() {
        (false, 0.0)
    } else {
        (em_hit(&hypothesis, reference), sentence_bleu(&hypothesis, reference, tag))
    };
    ExampleResult {
        index,
        task,
        input: input.to_string(),
        reference: reference.to_string(),
        hypothesis,
        em_hit: em,
        bleu_sentence: b,
        error,
    }
}

/// Sends every example of `split` to the backend (at most `max_in_flight` at once) and scores
/// the answers per task. Failed requests score zero and are flagged.
pub fn evaluate(
    dataset: &TaskDataset,
    split: Split,
    backend: &dyn Backend,
    max_in_flight: usize,
) -> Result<EvalReport, HarnessError> {
    backend.ping().map_err(HarnessError::BackendUnreachable)?;
    let items: Vec<(usize, &crate::datasets::TaskExample)> = dataset.split(split).collect();
    if items.is_empty() {
        return Err(HarnessError::EmptySplit(split));
    }
    let examples: Vec<ExampleResult> = bounded_map(&items, max_in_flight, |(i, ex)| {
        let req = TransformRequest {
            task: ex.task,
            src_lang: ex.src_lang,
            tgt_lang: ex.tgt_lang,
            input: ex.input.clone(),
            max_tokens: DEFAULT_MAX_TOKENS,
        };
        score(*i, ex.task, &ex.input, &ex.output, ex.tgt_lang, backend.transform(&req))
    });
    let mut tasks = BTreeMap::new();
    for task in Task::ALL {
        let rows: Vec<(&ExampleResult, LanguageTag)> = examples
            .iter()
            .zip(&items)
            .filter(|(e, _)| e.task == task)
            .map(|(e, (_, ex))| (e, ex.tgt_lang))
            .collect();
        if rows.is_empty() {
            continue;
        }
        let hyps: Vec<&str> = rows.iter().map(|(e, _)| e.hypothesis.as_str()).collect();
        let refs: Vec<(&str, LanguageTag)> =
            rows.iter().map(|(e, t)| (e.reference.as_str(), *t)).collect();
        let hits = rows.iter().filter(|(e, _)| e.em_hit).count();
        tasks.insert(
            task,
            TaskScores {
                bleu: metrics::bleu_tagged(&hyps, &refs)?,
                rouge_l_f1: metrics::rouge_l_tagged(&hyps, &refs)?,
                em: 100.0 * hits as f64 / rows.len() as f64,
                n: rows.len(),
                failed: rows.iter().filter(|(e, _)| e.error.is_some()).count(),
            },
        );
    }
    Ok(EvalReport { tasks, examples })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeQuestion {
    pub question: String,
    pub reference: String,
    #[serde(default = "default_probe_vendor")]
    pub vendor: LanguageTag,
}

fn default_probe_vendor() -> LanguageTag {
    LanguageTag::Cisco
}

/// Asks each question as a generation request and reports the exact-match percentage of the
/// returned commands.
pub fn probe_understanding(
    questions: &[ProbeQuestion],
    backend: &dyn Backend,
    max_in_flight: usize,
) -> Result<f64, HarnessError> {
    if questions.is_empty() {
        return Err(HarnessError::NoQuestions);
    }
    backend.ping().map_err(HarnessError::BackendUnreachable)?;
    let hits = bounded_map(questions, max_in_flight, |q| {
        let req = TransformRequest {
            task: Task::Generation,
            src_lang: LanguageTag::Nl,
            tgt_lang: q.vendor,
            input: q.question.clone(),
            max_tokens: DEFAULT_MAX_TOKENS,
        };
        matches!(backend.transform(&req), Ok(r) if r.error.is_none() && em_hit(&r.output, &q.reference))
    });
    Ok(100.0 * hits.iter().filter(|&&h| h).count() as f64 / questions.len() as f64)
}
