use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use confforge::augment::{augment_corpus, AugmentOptions, PromptTemplate, TemplateId};
use confforge::configmodel::{check_equivalence, check_syntax, parse, print, translate, Vendor};
use confforge::corpus::{build_pretraining_corpus, read_jsonl, write_jsonl, Corpus, Document};
use confforge::datasets::{assemble, sample_batches, Split, Task, TaskDataset, TaskExample, DEFAULT_ALPHA};
use confforge::fixtures::oracle_client;
use confforge::harness::{
    evaluate, probe_understanding, serve_stdio, Backend, BackendEndpoint, BackendMode, EchoBackend,
    LookupBackend, ProbeQuestion, TransformRequest, TransformResponse, TranslateBackend,
};
use confforge::intent::{config_to_intent, generalize_intent};
use confforge::llm::{EchoClient, HttpLlmClient, LlmClient, ScriptedClient};
use confforge::miner::{mine, MineOptions, MiningTask};
use confforge::noising::{
    emit_pretraining_set, write_pretraining_file, LanguageTag, NoiseSpec, Strategy, DEFAULT_RATE,
};
use confforge::pipeline::{dry_run, PipelineConfig};

/// Defaults read from `--config`. Command-line flags win.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CliConfig {
    seed: Option<u64>,
    log_level: String,
    concurrency: usize,
    max_attempts: u32,
    timeout_secs: f64,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            seed: None,
            log_level: "warn".into(),
            concurrency: 4,
            max_attempts: 3,
            timeout_secs: 60.0,
        }
    }
}

#[derive(Parser)]
#[command(name = "confforge", version, about = "Network configuration data factory and evaluation toolkit")]
struct Cli {
    /// TOML file of key = value defaults (seed, log_level, concurrency, max_attempts, timeout_secs).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    log_level: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct VendorFile {
    #[arg(long)]
    vendor: Vendor,
    file: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a configuration and print its semantic model as JSON.
    Parse(VendorFile),
    /// Parse a configuration and print it back in canonical form.
    Print(VendorFile),
    /// Translate a configuration to another vendor.
    Translate {
        #[command(flatten)]
        input: VendorFile,
        #[arg(long)]
        to: Vendor,
        /// Also report whether source and output are semantically equivalent.
        #[arg(long)]
        check: bool,
    },
    /// Syntax check. Exits 1 when issues are found.
    Check(VendorFile),
    #[command(subcommand)]
    /// Build the pretraining corpus by neighbor selection.
    Corpus(CorpusCommand),
    /// Expand a config corpus through the LLM client.
    Augment {
        #[arg(long, default_value = "sop")]
        template: TemplateId,
        #[arg(long)]
        budget: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// JSON-lines file for the per-seed augmentation records.
        #[arg(long)]
        records: Option<PathBuf>,
        #[command(flatten)]
        llm: LlmArgs,
    },
    /// Emit the denoising pretraining file from a corpus.
    Noise {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RATE)]
        rate: f64,
        #[arg(long, value_delimiter = ',', default_value = "mask,delete,infill")]
        strategies: Vec<Strategy>,
    },
    /// Mine task pairs from seed documents.
    Mine {
        #[arg(long)]
        task: Task,
        /// Corpus JSON-lines file of seed documents.
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        from: Option<LanguageTag>,
        #[arg(long)]
        to: Option<LanguageTag>,
        #[arg(long)]
        max_attempts: Option<u32>,
        #[arg(long = "constraint")]
        constraints: Vec<String>,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        rejected: Option<PathBuf>,
        #[command(flatten)]
        llm: LlmArgs,
    },
    /// Render a configuration as intent sentences, one per line.
    Intent {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        vendor: Vendor,
        #[arg(long)]
        generalize: bool,
        #[command(flatten)]
        llm: LlmArgs,
    },
    #[command(subcommand)]
    /// Assemble, inspect and sample task datasets.
    Dataset(DatasetCommand),
    /// Evaluate a backend on one split of a dataset.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        #[command(flatten)]
        backend: BackendArgs,
        /// Write the JSON report here; the summary table goes to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Exact-match score on a JSON-lines file of probe questions.
    Probe {
        #[arg(long)]
        questions: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Serve a builtin stub over the backend protocol.
    Serve {
        #[arg(long, default_value = "stdio")]
        mode: ServeMode,
        #[arg(long, default_value = "echo")]
        stub: String,
        #[arg(long)]
        lookup: Option<PathBuf>,
        /// Listen address for http mode.
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
    },
    /// Run every stage on generated fixtures with stub clients.
    Pipeline {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        documents: Option<usize>,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Select and deduplicate config-like neighbors of the seed corpus.
    Build {
        #[arg(long)]
        d1: PathBuf,
        #[arg(long)]
        d2: PathBuf,
        #[arg(short = 'n', long, default_value_t = 20)]
        neighbors: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Merge example files into a split dataset.
    Assemble {
        #[arg(long)]
        name: String,
        #[arg(required = true)]
        sources: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Print the split manifest of an assembled dataset.
    Stats { dataset: PathBuf },
    /// Print mixed-task training batches as JSON lines of example indices.
    Sample {
        dataset: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = 8)]
        batch_size: usize,
        #[arg(long, default_value_t = 1)]
        batches: usize,
    },
}

#[derive(Args)]
struct LlmArgs {
    /// http (CONFFORGE_LLM_URL), oracle, echo or scripted:<file>.
    #[arg(long, default_value = "http")]
    llm: String,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, default_value = "builtin-stub")]
    backend: BackendMode,
    /// URL, command line or stub name depending on the mode.
    #[arg(long, default_value = "echo")]
    address: String,
    /// Lookup table for the lookup stub.
    #[arg(long)]
    lookup: Option<PathBuf>,
    #[arg(long)]
    max_in_flight: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ServeMode {
    Http,
    Stdio,
}

fn load_config(path: Option<&Path>) -> Result<CliConfig> {
    let Some(path) = path else {
        return Ok(CliConfig::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn make_client(spec: &str) -> Result<Box<dyn LlmClient>> {
    Ok(match spec {
        "http" => Box::new(HttpLlmClient::from_env()?),
        "oracle" => Box::new(oracle_client()),
        "echo" => Box::new(EchoClient),
        other => match other.strip_prefix("scripted:") {
            Some(path) => Box::new(ScriptedClient::from_jsonl(Path::new(path))?),
            None => bail!("unknown LLM client `{other}` (expected http, oracle, echo or scripted:<file>)"),
        },
    })
}

fn connect(args: &BackendArgs, config: &CliConfig) -> Result<(Box<dyn Backend>, usize)> {
    let mut endpoint = BackendEndpoint::new(args.backend, &args.address);
    endpoint.timeout_secs = config.timeout_secs;
    endpoint.max_in_flight = args.max_in_flight.unwrap_or(config.concurrency);
    let backend = endpoint.connect(args.lookup.as_deref())?;
    Ok((backend, endpoint.max_in_flight))
}

/// Reads a dataset file back and re-derives its splits.
fn load_dataset(path: &Path) -> Result<TaskDataset> {
    let examples: Vec<TaskExample> = read_jsonl(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Ok(assemble(&name, &[examples])?)
}

fn default_langs(task: Task, from: Option<LanguageTag>, to: Option<LanguageTag>) -> (LanguageTag, LanguageTag) {
    let (src, tgt) = match task {
        Task::Generation => (LanguageTag::Nl, LanguageTag::Cisco),
        Task::Analysis => (LanguageTag::Cisco, LanguageTag::Nl),
        Task::Translation => (LanguageTag::Juniper, LanguageTag::Cisco),
    };
    (from.unwrap_or(src), to.unwrap_or(tgt))
}

fn serve_http(backend: &dyn Backend, listen: &str) -> Result<()> {
    let server = tiny_http::Server::http(listen).map_err(|e| anyhow::anyhow!("binding {listen}: {e}"))?;
    log::info!("serving on http://{listen}");
    for mut request in server.incoming_requests() {
        if request.url() != "/v1/transform" || *request.method() != tiny_http::Method::Post {
            let _ = request.respond(tiny_http::Response::from_string("not found").with_status_code(404));
            continue;
        }
        let mut body = String::new();
        let response = match request.as_reader().read_to_string(&mut body) {
            Ok(_) => match serde_json::from_str::<TransformRequest>(&body) {
                Ok(req) => backend
                    .transform(&req)
                    .unwrap_or_else(|e| TransformResponse::error(e.to_string())),
                Err(e) => TransformResponse::error(format!("bad request: {e}")),
            },
            Err(e) => TransformResponse::error(format!("reading body: {e}")),
        };
        let json = serde_json::to_string(&response)?;
        let header = tiny_http::Header::from_bytes("Content-Type", "application/json").expect("static header");
        let _ = request.respond(tiny_http::Response::from_string(json).with_header(header));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut config = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if let Some(level) = cli.log_level {
        config.log_level = level;
    }
    env_logger::Builder::new()
        .parse_filters(&config.log_level)
        .target(env_logger::Target::Stderr)
        .init();

    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Parse(f) => {
            let cfg = parse(&read_text(&f.file)?, f.vendor)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&cfg)?)?;
        }
        Command::Print(f) => {
            let cfg = parse(&read_text(&f.file)?, f.vendor)?;
            write!(out, "{}", print(&cfg, f.vendor)?)?;
        }
        Command::Translate { input, to, check } => {
            let text = read_text(&input.file)?;
            let translated = translate(&text, input.vendor, to)?;
            write!(out, "{translated}")?;
            if check {
                let report = check_equivalence(&text, input.vendor, &translated, to)?;
                if !report.equivalent {
                    for d in &report.diffs {
                        eprintln!("not equivalent: {d:?}");
                    }
                    return Ok(ExitCode::from(1));
                }
            }
        }
        Command::Check(f) => {
            let report = check_syntax(&read_text(&f.file)?, f.vendor);
            for issue in &report.issues {
                writeln!(out, "{}: {issue}", f.file.display())?;
            }
            if !report.issues.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Corpus(CorpusCommand::Build { d1, d2, neighbors, out: path }) => {
            let raw: Vec<Document> = read_jsonl(&d1)?;
            let seeds = Corpus::new(read_jsonl(&d2)?);
            let corpus = build_pretraining_corpus(&raw, &seeds, neighbors)?;
            write_jsonl(&path, &corpus.documents)?;
            eprintln!("{} documents selected from {}", corpus.len(), raw.len());
        }
        Command::Augment { template, budget, input, out: path, records, llm } => {
            let client = make_client(&llm.llm)?;
            let corpus = Corpus::new(read_jsonl(&input)?);
            let options = AugmentOptions {
                concurrency: config.concurrency,
                ..Default::default()
            };
            let (augmented, recs) =
                augment_corpus(&corpus, &PromptTemplate::get(template), &client, budget, &options);
            write_jsonl(&path, &augmented.documents)?;
            if let Some(r) = records {
                write_jsonl(&r, &recs)?;
            }
            eprintln!("{} new documents", augmented.len() - corpus.len());
        }
        Command::Noise { input, out: path, rate, strategies } => {
            let corpus = Corpus::new(read_jsonl(&input)?);
            let specs: Vec<NoiseSpec> = strategies.iter().map(|&s| NoiseSpec::new(s, rate, 0)).collect();
            let (examples, skipped) = emit_pretraining_set(&corpus, &specs, config.seed.unwrap_or(0))?;
            write_pretraining_file(&path, &examples).with_context(|| format!("writing {}", path.display()))?;
            eprintln!(
                "{} examples, {} too short, {} untagged",
                examples.len(),
                skipped.too_short.len(),
                skipped.untagged.len()
            );
        }
        Command::Mine { task, seeds, from, to, max_attempts, constraints, out: path, rejected, llm } => {
            let client = make_client(&llm.llm)?;
            let (src, tgt) = default_langs(task, from, to);
            let mut mining = MiningTask::new(task, src, tgt);
            mining.seed_inputs = read_jsonl(&seeds)?;
            mining.constraints = constraints;
            let options = MineOptions {
                max_attempts: max_attempts.unwrap_or(config.max_attempts),
                concurrency: config.concurrency,
            };
            let (pairs, log) = mine(&mining, &client, &options)?;
            let examples: Vec<TaskExample> = pairs.iter().map(TaskExample::from).collect();
            write_jsonl(&path, &examples)?;
            if let Some(r) = rejected {
                write_jsonl(&r, &log.rejected())?;
            }
            eprintln!("{} accepted, {} rejected", examples.len(), log.rejected().len());
        }
        Command::Intent { from, vendor, generalize, llm } => {
            let cfg = parse(&read_text(&from)?, vendor)?;
            let mut intent = config_to_intent(&cfg)?;
            if generalize {
                let client = make_client(&llm.llm)?;
                let g = generalize_intent(&intent, &client, config.concurrency)?;
                if let Some(w) = &g.warning {
                    log::warn!("{w}");
                }
                intent = g.intent;
            }
            writeln!(out, "{}", intent.text())?;
        }
        Command::Dataset(DatasetCommand::Assemble { name, sources, out: path, manifest }) => {
            let sources = sources
                .iter()
                .map(|p| read_jsonl::<TaskExample>(p))
                .collect::<Result<Vec<_>, _>>()?;
            let dataset = assemble(&name, &sources)?;
            write_jsonl(&path, &dataset.examples)?;
            let json = serde_json::to_string_pretty(&dataset.manifest())?;
            match manifest {
                Some(m) => fs::write(&m, json).with_context(|| format!("writing {}", m.display()))?,
                None => writeln!(out, "{json}")?,
            }
        }
        Command::Dataset(DatasetCommand::Stats { dataset }) => {
            let dataset = load_dataset(&dataset)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&dataset.manifest())?)?;
        }
        Command::Dataset(DatasetCommand::Sample { dataset, alpha, batch_size, batches }) => {
            let dataset = load_dataset(&dataset)?;
            for batch in sample_batches(&dataset, alpha, config.seed.unwrap_or(0), batch_size, batches)? {
                writeln!(out, "{}", serde_json::to_string(&batch)?)?;
            }
        }
        Command::Eval { dataset, split, backend, report } => {
            let dataset = load_dataset(&dataset)?;
            let (backend, in_flight) = connect(&backend, &config)?;
            let result = evaluate(&dataset, split, &backend, in_flight)?;
            if let Some(r) = report {
                fs::write(&r, result.to_json()).with_context(|| format!("writing {}", r.display()))?;
            }
            write!(out, "{}", result.summary_table())?;
        }
        Command::Probe { questions, backend } => {
            let questions: Vec<ProbeQuestion> = read_jsonl(&questions)?;
            let (backend, in_flight) = connect(&backend, &config)?;
            let score = probe_understanding(&questions, &backend, in_flight)?;
            writeln!(out, "{score:.2}")?;
        }
        Command::Serve { mode, stub, lookup, listen } => {
            let backend: Box<dyn Backend> = match stub.as_str() {
                "echo" => Box::new(EchoBackend),
                "translate" => Box::new(TranslateBackend),
                "lookup" => match lookup {
                    Some(p) => Box::new(LookupBackend::from_jsonl(&p)?),
                    None => bail!("--stub lookup needs --lookup <file>"),
                },
                other => bail!("unknown stub `{other}` (expected echo, lookup or translate)"),
            };
            drop(out);
            match mode {
                ServeMode::Stdio => {
                    let stdin = io::stdin();
                    serve_stdio(&backend, BufReader::new(stdin.lock()), io::stdout())?;
                }
                ServeMode::Http => serve_http(&backend, &listen)?,
            }
        }
        Command::Pipeline { out: dir, documents } => {
            let mut pc = PipelineConfig {
                seed: config.seed.unwrap_or(PipelineConfig::default().seed),
                max_attempts: config.max_attempts,
                concurrency: config.concurrency,
                ..Default::default()
            };
            if let Some(n) = documents {
                pc.documents = n;
            }
            let report = dry_run(&pc, &dir)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report.counts)?)?;
            write!(out, "{}", report.eval.summary_table())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

