//! LLM-driven expansion of configuration snippets with syntax-validated admission.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configmodel::{check_syntax, detect_vendor, recognizable_lines, Vendor};
use crate::corpus::{split_runs, Corpus, DocKind, Document};
use crate::llm::{fence, fenced_blocks, FinishReason, LlmClient, LlmError, LlmRequest};
use crate::util::{bounded_map, collapse_whitespace};

pub const PLACEHOLDER: &str = "{INPUT_CONFIG}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateId {
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "dsp")]
    RawDsp,
    #[serde(rename = "sop")]
    RawDspSop,
}

impl TemplateId {
    pub const ALL: [TemplateId; 3] = [TemplateId::Raw, TemplateId::RawDsp, TemplateId::RawDspSop];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::Raw => "raw",
            TemplateId::RawDsp => "dsp",
            TemplateId::RawDspSop => "sop",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(TemplateId::Raw),
            "dsp" | "raw+dsp" => Ok(TemplateId::RawDsp),
            "sop" | "raw+dsp+sop" => Ok(TemplateId::RawDspSop),
            other => Err(format!("unknown template `{other}` (expected raw, dsp or sop)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub system_text: Option<String>,
    pub user_text_pattern: String,
}

const ENHANCE: &str = "Please help me enhance this configuration text:\n{INPUT_CONFIG}";
const EXPERT_NETWORK: &str = "You are an expert in network configuration domain.";
const EXPERT: &str = "You are an expert in configuration domain.";
const ENHANCE_SOP: &str = "Please help me enhance this configuration text, considering various combinations of protocol parameters and statements:\n{INPUT_CONFIG}";

impl PromptTemplate {
    pub fn get(id: TemplateId) -> Self {
        let (system, user) = match id {
            TemplateId::Raw => (None, ENHANCE),
            TemplateId::RawDsp => (Some(EXPERT_NETWORK), ENHANCE),
            TemplateId::RawDspSop => (Some(EXPERT), ENHANCE_SOP),
        };
        PromptTemplate {
            id,
            system_text: system.map(str::to_string),
            user_text_pattern: user.to_string(),
        }
    }
}

/// Substitutes the placeholder once; braces inside `config` are left alone.
pub fn render_prompt(template: &PromptTemplate, config: &str) -> LlmRequest {
    let (head, tail) = template
        .user_text_pattern
        .split_once(PLACEHOLDER)
        .expect("template contains the placeholder");
    LlmRequest::new(
        template.id.as_str(),
        template.system_text.clone(),
        format!("{head}{config}{tail}"),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub seed_id: String,
    pub template_id: TemplateId,
    pub raw_output: String,
    pub extracted_snippets: Vec<String>,
    pub accepted: Vec<String>,
    pub rejected: Vec<Rejection>,
    /// Client failure or refusal; the record is still produced with nothing accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("seed `{0}` is not a configuration document")]
    NotConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentOptions {
    pub temperature: f64,
    pub max_tokens: u32,
    pub concurrency: usize,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        AugmentOptions {
            temperature: 0.7,
            max_tokens: 1024,
            concurrency: 4,
        }
    }
}

/// Fenced blocks when present, otherwise the configuration runs of the text.
pub fn extract_snippets(output: &str) -> Vec<String> {
    let fenced: Vec<String> = fenced_blocks(output)
        .into_iter()
        .filter(|b| !b.trim().is_empty())
        .collect();
    if !fenced.is_empty() {
        return fenced;
    }
    split_runs(output)
        .into_iter()
        .filter(|(k, _)| *k == DocKind::Config)
        .map(|(_, t)| t)
        .collect()
}

fn judge(snippet: &str, seed: &str, vendor: Vendor) -> Result<(), String> {
    let report = check_syntax(snippet, vendor);
    if let Some(first) = report.issues.first() {
        return Err(format!("syntax: {first}"));
    }
    if recognizable_lines(snippet) == 0 {
        return Err("not_config: no supported configuration statement".into());
    }
    if collapse_whitespace(snippet) == collapse_whitespace(seed) {
        return Err("duplicate_of_seed".into());
    }
    Ok(())
}

pub fn augment(
    seed: &Document,
    template: &PromptTemplate,
    client: &dyn LlmClient,
    vendor: Vendor,
    options: &AugmentOptions,
) -> Result<AugmentationRecord, AugmentError> {
    if seed.kind != DocKind::Config {
        return Err(AugmentError::NotConfig(seed.id.clone()));
    }
    let mut request = render_prompt(template, &fence(&seed.text));
    request.temperature = options.temperature;
    request.max_tokens = options.max_tokens;
    let mut record = AugmentationRecord {
        seed_id: seed.id.clone(),
        template_id: template.id,
        raw_output: String::new(),
        extracted_snippets: Vec::new(),
        accepted: Vec::new(),
        rejected: Vec::new(),
        error: None,
    };
    let response = match client.complete(&request) {
        Ok(r) if r.finish_reason == FinishReason::Error => {
            record.raw_output = r.text.clone();
            record.error = Some(LlmError::Refusal(r.text).to_string());
            return Ok(record);
        }
        Ok(r) => r,
        Err(e) => {
            record.error = Some(e.to_string());
            return Ok(record);
        }
    };
    record.raw_output = response.text;
    record.extracted_snippets = extract_snippets(&record.raw_output);
    for snippet in &record.extracted_snippets {
        match judge(snippet, &seed.text, vendor) {
            Ok(()) => record.accepted.push(snippet.clone()),
            Err(reason) => record.rejected.push(Rejection {
                text: snippet.clone(),
                reason,
            }),
        }
    }
    Ok(record)
}

/// Augments up to `budget` configuration seeds (one client call each) and appends the
/// accepted snippets as new documents. Records come back in seed order.
pub fn augment_corpus(
    corpus: &Corpus,
    template: &PromptTemplate,
    client: &dyn LlmClient,
    budget: usize,
    options: &AugmentOptions,
) -> (Corpus, Vec<AugmentationRecord>) {
    let seeds: Vec<&Document> = corpus
        .documents
        .iter()
        .filter(|d| d.kind == DocKind::Config)
        .take(budget)
        .collect();
    let records: Vec<AugmentationRecord> = bounded_map(&seeds, options.concurrency, |seed| {
        augment(seed, template, client, detect_vendor(&seed.text), options)
            .expect("seeds are configuration documents")
    });
    let mut documents = corpus.documents.clone();
    for (seed, record) in seeds.iter().zip(&records) {
        let vendor = detect_vendor(&seed.text);
        for (k, text) in record.accepted.iter().enumerate() {
            // re-validated at write time
            if judge(text, &seed.text, vendor).is_ok() {
                documents.push(Document::new(
                    format!("{}~{}{}", seed.id, template.id, k + 1),
                    "augmented",
                    DocKind::Config,
                    text.clone(),
                ));
            }
        }
    }
    (Corpus::new(documents), records)
}
