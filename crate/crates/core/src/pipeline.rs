//! End-to-end dry run on fixture data: corpus build, augmentation, noising, mining, dataset
//! assembly and evaluation, with the stub client and stub backend.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{augment_corpus, AugmentOptions, PromptTemplate, TemplateId};
use crate::configmodel::{detect_vendor, print, Vendor};
use crate::corpus::{build_pretraining_corpus, write_jsonl, Corpus, CorpusError, DocKind, Document};
use crate::datasets::{assemble, DatasetError, Split, Task, TaskExample};
use crate::fixtures::{oracle_client, random_config, synthetic_corpus, POLICY_CISCO, STATIC_JUNIPER};
use crate::harness::{evaluate, EvalReport, HarnessError, TranslateBackend};
use crate::intent::{intent_to_pairs, IntentError};
use crate::miner::{mine, MineOptions, MinerError, MiningTask};
use crate::noising::{emit_pretraining_set, write_pretraining_file, LanguageTag, NoiseError, NoiseSpec, Strategy};
use crate::util::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub documents: usize,
    pub neighbors: usize,
    pub augment_budget: usize,
    pub intent_configs: usize,
    pub max_attempts: u32,
    pub concurrency: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            documents: 200,
            neighbors: 20,
            augment_budget: 20,
            intent_configs: 40,
            max_attempts: 3,
            concurrency: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCounts {
    pub raw_documents: usize,
    pub corpus_documents: usize,
    pub augmented_documents: usize,
    pub pretraining_examples: usize,
    pub noising_skipped: usize,
    pub mined_pairs: usize,
    pub mining_rejected: usize,
    pub intent_pairs: usize,
    pub dataset_examples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub counts: StageCounts,
    pub eval: EvalReport,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Miner(#[from] MinerError),
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn write(path: PathBuf, text: &str) -> Result<(), PipelineError> {
    fs::write(&path, text).map_err(|source| PipelineError::Io { path, source })
}

/// Seed documents standing in for the task-related set: the golden fixtures plus a few
/// generated configurations of each vendor.
fn seed_documents(seed: u64) -> Vec<Document> {
    let mut out = vec![
        Document::new("seed-static", "juniper", DocKind::Config, STATIC_JUNIPER),
        Document::new("seed-policy", "cisco", DocKind::Config, POLICY_CISCO),
    ];
    for (i, vendor) in [Vendor::Cisco, Vendor::Juniper].into_iter().cycle().take(6).enumerate() {
        let cfg = random_config(derive_seed(seed, &format!("seed-doc-{i}")), vendor);
        if let Ok(text) = print(&cfg, vendor) {
            if !text.is_empty() {
                out.push(Document::new(format!("seed-{i}"), vendor.as_str(), DocKind::Config, text));
            }
        }
    }
    out
}

fn config_seeds(corpus: &Corpus, vendor: Vendor) -> Vec<Document> {
    corpus
        .documents
        .iter()
        .filter(|d| d.kind == DocKind::Config && detect_vendor(&d.text) == vendor)
        .cloned()
        .collect()
}

/// Runs every stage and writes its artifacts into `out_dir`.
pub fn dry_run(config: &PipelineConfig, out_dir: &Path) -> Result<PipelineReport, PipelineError> {
    fs::create_dir_all(out_dir).map_err(|source| PipelineError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let client = oracle_client();

    let raw = synthetic_corpus(config.documents, config.seed);
    let seeds = Corpus::new(seed_documents(config.seed));
    let corpus = build_pretraining_corpus(&raw.documents, &seeds, config.neighbors)?;
    write_jsonl(&out_dir.join("corpus.jsonl"), &corpus.documents)?;
    log::info!("corpus: {} documents selected from {}", corpus.len(), raw.len());

    let mut with_seeds = seeds.documents.clone();
    with_seeds.extend(corpus.documents.iter().cloned());
    let base = Corpus::new(with_seeds);
    let options = AugmentOptions {
        concurrency: config.concurrency,
        ..Default::default()
    };
    let (augmented, records) = augment_corpus(
        &base,
        &PromptTemplate::get(TemplateId::RawDspSop),
        &client,
        config.augment_budget,
        &options,
    );
    write_jsonl(&out_dir.join("augment_records.jsonl"), &records)?;
    write_jsonl(&out_dir.join("augmented.jsonl"), &augmented.documents)?;

    let specs: Vec<NoiseSpec> = Strategy::ALL
        .iter()
        .map(|&s| NoiseSpec::new(s, 0.15, 0))
        .collect();
    let mut pretrain_docs = augmented.documents.clone();
    pretrain_docs.extend(raw.documents.iter().filter(|d| d.kind == DocKind::Nl).cloned());
    let (noisy, skipped) = emit_pretraining_set(&Corpus::new(pretrain_docs), &specs, config.seed)?;
    write_pretraining_file(&out_dir.join("pretrain.jsonl"), &noisy).map_err(|source| PipelineError::Io {
        path: out_dir.join("pretrain.jsonl"),
        source,
    })?;

    let mine_options = MineOptions {
        max_attempts: config.max_attempts,
        concurrency: config.concurrency,
    };
    let mut translation = MiningTask::new(Task::Translation, LanguageTag::Juniper, LanguageTag::Cisco);
    translation.seed_inputs = config_seeds(&augmented, Vendor::Juniper);
    let mut generation = MiningTask::new(Task::Generation, LanguageTag::Nl, LanguageTag::Cisco);
    generation.seed_inputs = config_seeds(&augmented, Vendor::Cisco);
    let (t_pairs, t_log) = mine(&translation, &client, &mine_options)?;
    let (g_pairs, g_log) = mine(&generation, &client, &mine_options)?;
    let mined: Vec<TaskExample> = t_pairs.iter().chain(&g_pairs).map(TaskExample::from).collect();
    let mut rejected = t_log.rejected();
    rejected.extend(g_log.rejected());
    write_jsonl(&out_dir.join("mined.jsonl"), &mined)?;
    write_jsonl(&out_dir.join("rejected.jsonl"), &rejected)?;

    let configs: Vec<_> = (0..config.intent_configs)
        .map(|i| random_config(derive_seed(config.seed, &format!("intent-{i}")), Vendor::Cisco))
        .filter(|c| !c.is_empty())
        .collect();
    let intent_pairs = intent_to_pairs(&configs, Vendor::Cisco)?;

    let dataset = assemble("dry-run", &[mined.clone(), intent_pairs.clone()])?;
    write_jsonl(&out_dir.join("dataset.jsonl"), &dataset.examples)?;
    write(
        out_dir.join("manifest.json"),
        &serde_json::to_string_pretty(&dataset.manifest()).expect("serializable"),
    )?;

    let eval = evaluate(&dataset, Split::Test, &TranslateBackend, config.concurrency)?;
    write(out_dir.join("report.json"), &eval.to_json())?;
    write(out_dir.join("report.txt"), &eval.summary_table())?;

    Ok(PipelineReport {
        counts: StageCounts {
            raw_documents: raw.len(),
            corpus_documents: corpus.len(),
            augmented_documents: augmented.len() - base.len(),
            pretraining_examples: noisy.len(),
            noising_skipped: skipped.too_short.len() + skipped.untagged.len(),
            mined_pairs: mined.len(),
            mining_rejected: rejected.len(),
            intent_pairs: intent_pairs.len(),
            dataset_examples: dataset.examples.len(),
        },
        eval,
    })
}
