//! Task-data mining agent: static per-task plans executed against an LLM client, candidate
//! validation with the configuration model, and bounded repair with issue feedback.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configmodel::{
    check_equivalence, check_syntax, parse, EquivalenceReport, SemanticConfig, SyntaxReport, Vendor,
};
use crate::corpus::Document;
use crate::datasets::{Task, TaskExample};
use crate::intent::config_to_intent;
use crate::llm::{fence, fenced_blocks, LlmClient, LlmError, LlmRequest};
use crate::noising::LanguageTag;
use crate::util::{bounded_map, collapse_whitespace};

pub const DEFAULT_MAX_ATTEMPTS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningTask {
    pub task: Task,
    pub source_lang: LanguageTag,
    pub target_lang: LanguageTag,
    pub seed_inputs: Vec<Document>,
    #[serde(default)]
    pub constraints: Vec<String>,
}

impl MiningTask {
    pub fn new(task: Task, source_lang: LanguageTag, target_lang: LanguageTag) -> Self {
        MiningTask {
            task,
            source_lang,
            target_lang,
            seed_inputs: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Vendor of the seed configurations.
    pub fn seed_vendor(&self) -> Option<Vendor> {
        match self.task {
            Task::Generation => self.target_lang.vendor(),
            Task::Analysis | Task::Translation => self.source_lang.vendor(),
        }
    }

    fn validate(&self) -> Result<(), MinerError> {
        if !self.task.accepts(self.source_lang, self.target_lang) {
            return Err(MinerError::InvalidTask(format!(
                "{} cannot go from {} to {}",
                self.task, self.source_lang, self.target_lang
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Executor {
    Llm,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepInput {
    Seed,
    Step(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub name: String,
    pub instruction_text: String,
    pub expected_io: String,
    pub input: StepInput,
    pub executor: Executor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<Step>,
}

impl Plan {
    fn llm_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.executor == Executor::Llm).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub task: Task,
    pub src_lang: LanguageTag,
    pub tgt_lang: LanguageTag,
    pub input_text: String,
    pub output_text: String,
    /// (step name, attempt number) for every step that contributed.
    pub provenance: Vec<(String, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum SelfCheck {
    Pass,
    Flagged(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Retry,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub side: Side,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub syntax: Vec<(Side, SyntaxReport)>,
    pub equivalence: Option<EquivalenceReport>,
    pub self_check: SelfCheck,
    pub verdict: Verdict,
    pub issues: Vec<Issue>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinerError {
    #[error("invalid mining task: {0}")]
    InvalidTask(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("step `{0}` produced no output")]
    EmptyOutput(String),
    #[error("step input is empty")]
    EmptyInput,
    #[error("max_attempts must be at least 1")]
    ZeroAttempts,
}

fn constraint_text(constraints: &[String]) -> String {
    if constraints.is_empty() {
        String::new()
    } else {
        format!(" Constraints: {}.", constraints.join("; "))
    }
}

/// The shipped plan for the task kind, with constraints folded into every instruction.
pub fn decompose(task: &MiningTask) -> Result<Plan, MinerError> {
    task.validate()?;
    let c = constraint_text(&task.constraints);
    let step = |name: &str, instruction: String, io: String, input, executor| Step {
        name: name.to_string(),
        instruction_text: format!("{instruction}{c}"),
        expected_io: io,
        input,
        executor,
    };
    let steps = match task.task {
        Task::Generation | Task::Analysis => {
            let vendor = task.seed_vendor().expect("validated");
            let (pair_instr, pair_io) = if task.task == Task::Generation {
                (
                    "Pair the intent text as input with the configuration as output.",
                    format!("input: <nl> intent; output: {vendor} configuration"),
                )
            } else {
                (
                    "Pair the configuration as input with the intent text as output.",
                    format!("input: {vendor} configuration; output: <nl> intent"),
                )
            };
            vec![
                step(
                    "extract_attributes",
                    format!(
                        "Extract the protocol attributes and parameters of the {vendor} configuration below. \
                         Return only the supported {vendor} statements in one fenced block, keeping every name, address and number."
                    ),
                    format!("input: seed {vendor} configuration; output: {vendor} configuration"),
                    StepInput::Seed,
                    Executor::Llm,
                ),
                step(
                    "render_intent",
                    format!(
                        "Describe the {vendor} configuration below as imperative intent sentences, one per line. \
                         Mention every list, route-map and neighbor by name and keep every parameter value."
                    ),
                    format!("input: {vendor} configuration from extract_attributes; output: <nl> intent"),
                    StepInput::Step(0),
                    Executor::Llm,
                ),
                step("pair", pair_instr.to_string(), pair_io, StepInput::Step(1), Executor::Local),
            ]
        }
        Task::Translation => {
            let from = task.source_lang.vendor().expect("validated");
            let to = task.target_lang.vendor().expect("validated");
            vec![
                step(
                    "translate",
                    format!(
                        "Translate the {from} configuration below into {to} configuration with identical behavior. \
                         Return only the {to} configuration in one fenced block."
                    ),
                    format!("input: seed {from} configuration; output: {to} configuration"),
                    StepInput::Seed,
                    Executor::Llm,
                ),
                step(
                    "normalize_formatting",
                    "Normalize formatting: drop fences, trailing spaces and blank lines.".to_string(),
                    format!("input: {to} configuration; output: {to} configuration"),
                    StepInput::Step(0),
                    Executor::Local,
                ),
                step(
                    "pair",
                    "Pair the source configuration as input with the translation as output.".to_string(),
                    format!("input: {from} configuration; output: {to} configuration"),
                    StepInput::Step(1),
                    Executor::Local,
                ),
            ]
        }
    };
    Ok(Plan { steps })
}

/// Fenced content when present, otherwise the whole reply.
fn payload(text: &str) -> String {
    fenced_blocks(text)
        .into_iter()
        .find(|b| !b.trim().is_empty())
        .unwrap_or_else(|| text.to_string())
        .trim()
        .to_string()
}

fn normalize_formatting(text: &str) -> String {
    payload(text)
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

fn run_step(step: &Step, user: String, input_text: &str, client: &dyn LlmClient) -> Result<String, MinerError> {
    if input_text.trim().is_empty() {
        return Err(MinerError::EmptyInput);
    }
    let out = match step.executor {
        Executor::Local if step.name == "normalize_formatting" => normalize_formatting(input_text),
        Executor::Local => input_text.to_string(),
        Executor::Llm => {
            let req = LlmRequest::new(step.name.clone(), None, user);
            payload(&client.complete(&req)?.text)
        }
    };
    if out.is_empty() {
        return Err(MinerError::EmptyOutput(step.name.clone()));
    }
    Ok(out)
}

/// Renders the instruction and fenced input into a prompt and returns the extracted payload.
pub fn execute_step(step: &Step, input_text: &str, client: &dyn LlmClient) -> Result<String, MinerError> {
    let user = format!("{}\n\n{}", step.instruction_text, fence(input_text));
    run_step(step, user, input_text, client)
}

/// The instruction, the issues as a numbered list, the rejected output, then the input.
pub fn repair_prompt(step: &Step, issues: &[Issue], previous: &str, input_text: &str) -> String {
    let mut s = format!("{}\n\nYour previous output had these problems:\n", step.instruction_text);
    for (i, issue) in issues.iter().enumerate() {
        let _ = writeln!(s, "{}. {}", i + 1, issue.message);
    }
    let _ = write!(
        s,
        "\nPrevious output:\n{}\n\nFix the problems and answer again for this input:\n{}",
        fence(previous),
        fence(input_text)
    );
    s
}

fn syntax_issues(side: Side, report: &SyntaxReport, vendor: Vendor) -> Vec<Issue> {
    report
        .issues
        .iter()
        .map(|i| Issue {
            side,
            message: format!("{vendor} syntax: {i}"),
        })
        .collect()
}

fn parse_quiet(text: &str, vendor: Vendor) -> Option<SemanticConfig> {
    parse(text, vendor).ok()
}

/// Config sides must pass the syntax check; translation pairs must be equivalent; intent sides
/// must name every element of the paired configuration.
pub fn validate(pair: &CandidatePair) -> ValidationReport {
    let mut syntax = Vec::new();
    let mut issues = Vec::new();
    let mut irreparable = false;
    for (side, text, tag) in [
        (Side::Input, &pair.input_text, pair.src_lang),
        (Side::Output, &pair.output_text, pair.tgt_lang),
    ] {
        if text.trim().is_empty() {
            issues.push(Issue {
                side,
                message: "empty text".into(),
            });
            continue;
        }
        if let Some(vendor) = tag.vendor() {
            let report = check_syntax(text, vendor);
            issues.extend(syntax_issues(side, &report, vendor));
            syntax.push((side, report));
        }
    }
    // a broken translation source cannot be repaired by re-running the translator
    if pair.task == Task::Translation && issues.iter().any(|i| i.side == Side::Input) {
        irreparable = true;
    }

    let mut equivalence = None;
    if pair.task == Task::Translation && issues.is_empty() {
        let (from, to) = (pair.src_lang.vendor().unwrap(), pair.tgt_lang.vendor().unwrap());
        match check_equivalence(&pair.input_text, from, &pair.output_text, to) {
            Ok(report) => {
                for d in &report.diffs {
                    issues.push(Issue {
                        side: Side::Output,
                        message: format!(
                            "not equivalent: {} `{}` {}: source has {}, translation has {}",
                            d.element_kind,
                            d.element_name,
                            d.field_path,
                            d.left_value.as_deref().unwrap_or("nothing"),
                            d.right_value.as_deref().unwrap_or("nothing"),
                        ),
                    });
                }
                equivalence = Some(report);
            }
            Err(e) => issues.push(Issue {
                side: Side::Output,
                message: format!("equivalence check failed: {e}"),
            }),
        }
    }

    let mut self_check = SelfCheck::Pass;
    if pair.task != Task::Translation && issues.is_empty() {
        let (config_text, vendor, intent_text, intent_side) = match pair.task {
            Task::Generation => (&pair.output_text, pair.tgt_lang, &pair.input_text, Side::Input),
            _ => (&pair.input_text, pair.src_lang, &pair.output_text, Side::Output),
        };
        let vendor = vendor.vendor().expect("task tag rule");
        let config = parse_quiet(config_text, vendor).unwrap_or_default();
        let missing: Vec<String> = match config_to_intent(&config) {
            Ok(intent) => intent
                .source_elements
                .iter()
                .map(|(_, name)| name.clone())
                .filter(|name| !intent_text.contains(name.as_str()))
                .collect(),
            Err(e) => {
                self_check = SelfCheck::Flagged(format!("no intent for configuration: {e}"));
                Vec::new()
            }
        };
        if !missing.is_empty() {
            self_check = SelfCheck::Flagged(format!("intent does not mention {}", missing.join(", ")));
        }
        if let SelfCheck::Flagged(reason) = &self_check {
            issues.push(Issue {
                side: intent_side,
                message: reason.clone(),
            });
        }
    }

    let verdict = if issues.is_empty() {
        Verdict::Accept
    } else if irreparable {
        Verdict::Reject
    } else {
        Verdict::Retry
    };
    ValidationReport {
        syntax,
        equivalence,
        self_check,
        verdict,
        issues,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLog {
    pub seed_id: String,
    pub attempts: u32,
    pub repairs: u32,
    pub client_calls: usize,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub last_issues: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One line of the rejected-items file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedEntry {
    pub seed_id: String,
    pub attempts: u32,
    pub last_issues: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningLog {
    pub seeds: Vec<SeedLog>,
}

impl MiningLog {
    pub fn rejected(&self) -> Vec<RejectedEntry> {
        self.seeds
            .iter()
            .filter(|s| !s.accepted)
            .map(|s| RejectedEntry {
                seed_id: s.seed_id.clone(),
                attempts: s.attempts,
                last_issues: match &s.error {
                    Some(e) => vec![e.clone()],
                    None => s.last_issues.clone(),
                },
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MineOptions {
    pub max_attempts: u32,
    pub concurrency: usize,
}

impl Default for MineOptions {
    fn default() -> Self {
        MineOptions {
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            concurrency: 4,
        }
    }
}

/// The step whose output fills a pair side.
fn producer(task: Task, side: Side) -> Option<usize> {
    match (task, side) {
        (Task::Generation, Side::Input) | (Task::Analysis, Side::Output) => Some(1),
        (Task::Generation, Side::Output) | (Task::Analysis, Side::Input) => Some(0),
        (Task::Translation, Side::Output) => Some(0),
        (Task::Translation, Side::Input) => None,
    }
}

struct SeedRun<'a> {
    task: &'a MiningTask,
    plan: &'a Plan,
    client: &'a dyn LlmClient,
    seed: &'a Document,
    outputs: Vec<String>,
    produced_in: Vec<u32>,
    /// Step outputs of the previous attempt, quoted back in repair prompts.
    previous: Vec<String>,
    calls: usize,
}

impl SeedRun<'_> {
    fn input_of(&self, i: usize) -> String {
        match self.plan.steps[i].input {
            StepInput::Seed => self.seed.text.clone(),
            StepInput::Step(j) => self.outputs[j].clone(),
        }
    }

    /// Runs steps `from..` ; step `from` gets the repair prompt when `issues` is nonempty.
    fn run_from(&mut self, from: usize, attempt: u32, issues: &[Issue]) -> Result<(), MinerError> {
        self.outputs.truncate(from);
        self.produced_in.truncate(from);
        for i in from..self.plan.steps.len() {
            let step = &self.plan.steps[i];
            let input = self.input_of(i);
            if step.executor == Executor::Llm {
                self.calls += 1;
            }
            let out = if i == from && !issues.is_empty() && step.executor == Executor::Llm {
                let previous = self.previous.get(i).cloned().unwrap_or_default();
                run_step(step, repair_prompt(step, issues, &previous, &input), &input, self.client)?
            } else {
                execute_step(step, &input, self.client)?
            };
            self.outputs.push(out);
            self.produced_in.push(attempt);
        }
        Ok(())
    }

    fn pair(&self) -> CandidatePair {
        let (input_text, output_text) = match self.task.task {
            Task::Generation => (self.outputs[1].clone(), self.outputs[0].clone()),
            Task::Analysis => (self.outputs[0].clone(), self.outputs[1].clone()),
            Task::Translation => (self.seed.text.trim().to_string(), self.outputs[1].clone()),
        };
        CandidatePair {
            task: self.task.task,
            src_lang: self.task.source_lang,
            tgt_lang: self.task.target_lang,
            input_text,
            output_text,
            provenance: self
                .plan
                .steps
                .iter()
                .zip(&self.produced_in)
                .map(|(s, &a)| (s.name.clone(), a))
                .collect(),
        }
    }
}

fn mine_seed(
    task: &MiningTask,
    plan: &Plan,
    client: &dyn LlmClient,
    seed: &Document,
    max_attempts: u32,
) -> (Option<CandidatePair>, SeedLog) {
    let mut run = SeedRun {
        task,
        plan,
        client,
        seed,
        outputs: Vec::new(),
        produced_in: Vec::new(),
        calls: 0,
        previous: Vec::new(),
    };
    let mut log = SeedLog {
        seed_id: seed.id.clone(),
        attempts: 0,
        repairs: 0,
        client_calls: 0,
        accepted: false,
        last_issues: Vec::new(),
        error: None,
    };
    let mut restart = 0;
    let mut issues: Vec<Issue> = Vec::new();
    for attempt in 1..=max_attempts {
        log.attempts = attempt;
        if attempt > 1 {
            log.repairs += 1;
        }
        run.previous = run.outputs.clone();
        if let Err(e) = run.run_from(restart, attempt, &issues) {
            log.error = Some(e.to_string());
            log.client_calls = run.calls;
            return (None, log);
        }
        let pair = run.pair();
        let report = validate(&pair);
        log.last_issues = report.issues.iter().map(|i| i.message.clone()).collect();
        match report.verdict {
            Verdict::Accept => {
                log.accepted = true;
                log.client_calls = run.calls;
                return (Some(pair), log);
            }
            Verdict::Reject => break,
            Verdict::Retry => {
                issues = report.issues;
                restart = issues
                    .iter()
                    .filter_map(|i| producer(task.task, i.side))
                    .min()
                    .unwrap_or(0);
                // only issues about the regenerated step go into its repair prompt
                issues.retain(|i| producer(task.task, i.side) == Some(restart));
            }
        }
    }
    log.client_calls = run.calls;
    (None, log)
}

/// Mines every seed (concurrently, bounded) and returns the accepted pairs, deduplicated and in
/// seed order, with a per-seed log. Client failures are logged per seed.
pub fn mine(
    task: &MiningTask,
    client: &dyn LlmClient,
    options: &MineOptions,
) -> Result<(Vec<CandidatePair>, MiningLog), MinerError> {
    if options.max_attempts == 0 {
        return Err(MinerError::ZeroAttempts);
    }
    let plan = decompose(task)?;
    let results = bounded_map(&task.seed_inputs, options.concurrency, |seed| {
        mine_seed(task, &plan, client, seed, options.max_attempts)
    });
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    let mut log = MiningLog::default();
    for (pair, mut seed_log) in results {
        debug_assert!(seed_log.client_calls <= plan.llm_steps() * options.max_attempts as usize);
        if let Some(pair) = pair {
            // re-validated at write time
            if validate(&pair).verdict != Verdict::Accept {
                seed_log.accepted = false;
            } else if seen.insert((collapse_whitespace(&pair.input_text), collapse_whitespace(&pair.output_text))) {
                pairs.push(pair);
            }
        }
        log.seeds.push(seed_log);
    }
    Ok((pairs, log))
}

impl From<&CandidatePair> for TaskExample {
    fn from(p: &CandidatePair) -> Self {
        let mut ex = TaskExample::new(p.task, p.src_lang, p.tgt_lang, &p.input_text, &p.output_text);
        let attempts = p.provenance.iter().map(|(_, a)| *a).max().unwrap_or(1);
        ex.meta.insert("source".into(), "mined".into());
        ex.meta.insert("attempts".into(), attempts.to_string());
        ex
    }
}
