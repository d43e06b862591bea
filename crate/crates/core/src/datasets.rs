//! Task supervision datasets: tagged examples, a stable 8:1:1 split and the balanced
//! multi-task sampler.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configmodel::check_syntax;
use crate::noising::LanguageTag;
use crate::util::{collapse_whitespace, sha256_hex};

pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Generation,
    Analysis,
    Translation,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Generation, Task::Analysis, Task::Translation];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Generation => "generation",
            Task::Analysis => "analysis",
            Task::Translation => "translation",
        }
    }

    /// Whether `src -> tgt` is a legal language pair for this task.
    pub fn accepts(self, src: LanguageTag, tgt: LanguageTag) -> bool {
        let vendor = |t: LanguageTag| t.vendor().is_some();
        match self {
            Task::Generation => src == LanguageTag::Nl && vendor(tgt),
            Task::Analysis => vendor(src) && tgt == LanguageTag::Nl,
            Task::Translation => vendor(src) && vendor(tgt) && src != tgt,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "generation" => Ok(Task::Generation),
            "analysis" => Ok(Task::Analysis),
            "translation" => Ok(Task::Translation),
            other => Err(format!(
                "unknown task `{other}` (expected generation, analysis or translation)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskExample {
    pub task: Task,
    pub src_lang: LanguageTag,
    pub tgt_lang: LanguageTag,
    pub input: String,
    pub output: String,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl TaskExample {
    pub fn new(
        task: Task,
        src_lang: LanguageTag,
        tgt_lang: LanguageTag,
        input: impl Into<String>,
        output: impl Into<String>,
    ) -> Self {
        TaskExample {
            task,
            src_lang,
            tgt_lang,
            input: input.into(),
            output: output.into(),
            meta: BTreeMap::new(),
        }
    }

    /// SHA-256 of task, input and output; the split key.
    pub fn id(&self) -> String {
        sha256_hex(format!("{}\0{}\0{}", self.task, self.input, self.output))
    }

    fn dedup_key(&self) -> String {
        sha256_hex(format!(
            "{}\0{}\0{}",
            self.task,
            collapse_whitespace(&self.input),
            collapse_whitespace(&self.output)
        ))
    }

    /// Tag rule for the task, nonempty sides, and a clean syntax check on every config side.
    pub fn validate(&self) -> Result<(), String> {
        if !self.task.accepts(self.src_lang, self.tgt_lang) {
            return Err(format!(
                "{} example cannot go from {} to {}",
                self.task, self.src_lang, self.tgt_lang
            ));
        }
        for (side, text, tag) in [
            ("input", &self.input, self.src_lang),
            ("output", &self.output, self.tgt_lang),
        ] {
            if text.trim().is_empty() {
                return Err(format!("{side} is empty"));
            }
            if let Some(vendor) = tag.vendor() {
                let report = check_syntax(text, vendor);
                if let Some(issue) = report.issues.first() {
                    return Err(format!("{side} fails {vendor} syntax check: {issue}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskDataset {
    pub name: String,
    pub examples: Vec<TaskExample>,
    /// Ascending example indices per split.
    pub splits: BTreeMap<Split, Vec<usize>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub counts: BTreeMap<Task, SplitCounts>,
}

impl TaskDataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = (usize, &TaskExample)> {
        self.splits
            .get(&split)
            .into_iter()
            .flatten()
            .map(|&i| (i, &self.examples[i]))
    }

    pub fn manifest(&self) -> Manifest {
        let mut counts: BTreeMap<Task, SplitCounts> = BTreeMap::new();
        for split in Split::ALL {
            for (_, ex) in self.split(split) {
                let c = counts.entry(ex.task).or_default();
                match split {
                    Split::Train => c.train += 1,
                    Split::Valid => c.valid += 1,
                    Split::Test => c.test += 1,
                }
            }
        }
        Manifest {
            name: self.name.clone(),
            counts,
        }
    }

    /// Train-split example indices per task, in task order.
    pub fn train_by_task(&self) -> BTreeMap<Task, Vec<usize>> {
        let mut out: BTreeMap<Task, Vec<usize>> = BTreeMap::new();
        for (i, ex) in self.split(Split::Train) {
            out.entry(ex.task).or_default().push(i);
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("source {source_index}, example {index}: {reason}")]
    InvalidExample {
        source_index: usize,
        index: usize,
        reason: String,
    },
    #[error("invalid sampler spec: {0}")]
    InvalidSpec(String),
    #[error("task {0} has no training examples")]
    EmptyTask(Task),
    #[error("dataset has no training examples")]
    Empty,
}

/// Split of the `rank`-th of `n` examples: the first 80% train, the next 10% valid, the rest test.
fn split_for_rank(rank: usize, n: usize) -> Split {
    let train = (n * 8 + 5) / 10;
    let valid = (n + 5) / 10;
    if rank < train {
        Split::Train
    } else if rank < train + valid {
        Split::Valid
    } else {
        Split::Test
    }
}

/// Validates, merges and deduplicates the sources (first occurrence wins), then splits each
/// task 8:1:1 by ranking examples on their id hash.
pub fn assemble(name: &str, sources: &[Vec<TaskExample>]) -> Result<TaskDataset, DatasetError> {
    let mut examples = Vec::new();
    let mut seen = HashSet::new();
    for (s, source) in sources.iter().enumerate() {
        for (i, ex) in source.iter().enumerate() {
            ex.validate().map_err(|reason| DatasetError::InvalidExample {
                source_index: s,
                index: i,
                reason,
            })?;
            if seen.insert(ex.dedup_key()) {
                examples.push(ex.clone());
            }
        }
    }
    let mut splits: BTreeMap<Split, Vec<usize>> = Split::ALL.iter().map(|&s| (s, Vec::new())).collect();
    for task in Task::ALL {
        let mut ranked: Vec<(String, usize)> = examples
            .iter()
            .enumerate()
            .filter(|(_, e)| e.task == task)
            .map(|(i, e)| (e.id(), i))
            .collect();
        ranked.sort();
        let n = ranked.len();
        for (rank, (_, i)) in ranked.into_iter().enumerate() {
            splits.get_mut(&split_for_rank(rank, n)).unwrap().push(i);
        }
    }
    for idx in splits.values_mut() {
        idx.sort_unstable();
    }
    Ok(TaskDataset {
        name: name.to_string(),
        examples,
        splits,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub sizes: Vec<usize>,
    pub alpha: f64,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn new(sizes: Vec<usize>, seed: u64) -> Self {
        SamplerSpec {
            sizes,
            alpha: DEFAULT_ALPHA,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.sizes.is_empty() {
            return Err(DatasetError::InvalidSpec("no task sizes".into()));
        }
        if self.sizes.contains(&0) {
            return Err(DatasetError::InvalidSpec("task sizes must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(DatasetError::InvalidSpec(format!("alpha {} is outside (0, 1]", self.alpha)));
        }
        Ok(())
    }
}

/// `q_i = r_i^α / Σ_j r_j^α` with `r_i = n_i / Σ_k n_k`.
pub fn sample_probabilities(spec: &SamplerSpec) -> Result<Vec<f64>, DatasetError> {
    spec.validate()?;
    let total: f64 = spec.sizes.iter().map(|&n| n as f64).sum();
    let powered: Vec<f64> = spec
        .sizes
        .iter()
        .map(|&n| (n as f64 / total).powf(spec.alpha))
        .collect();
    let z: f64 = powered.iter().sum();
    Ok(powered.into_iter().map(|p| p / z).collect())
}

/// `n` i.i.d. task indices drawn from `q`.
pub fn draw_tasks(q: &[f64], n: usize, seed: u64) -> Vec<usize> {
    let dist = WeightedIndex::new(q).expect("probabilities are positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| dist.sample(&mut rng)).collect()
}

/// Mixed-task batch stream over the train split. Tasks are drawn from the balanced
/// distribution; within a task, examples cycle through a fresh seeded permutation per epoch.
pub struct BatchSampler {
    tasks: Vec<Task>,
    pools: Vec<Vec<usize>>,
    cursors: Vec<usize>,
    probabilities: Vec<f64>,
    dist: WeightedIndex<f64>,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    pub fn new(dataset: &TaskDataset, alpha: f64, seed: u64) -> Result<Self, DatasetError> {
        let by_task = dataset.train_by_task();
        if by_task.is_empty() {
            return Err(DatasetError::Empty);
        }
        let tasks: Vec<Task> = by_task.keys().copied().collect();
        let pools: Vec<Vec<usize>> = by_task.into_values().collect();
        let spec = SamplerSpec {
            sizes: pools.iter().map(Vec::len).collect(),
            alpha,
            seed,
        };
        let probabilities = sample_probabilities(&spec)?;
        let dist = WeightedIndex::new(&probabilities).expect("positive probabilities");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pools = pools;
        for pool in &mut pools {
            pool.shuffle(&mut rng);
        }
        Ok(BatchSampler {
            cursors: vec![0; tasks.len()],
            tasks,
            pools,
            probabilities,
            dist,
            rng,
        })
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    fn next_index(&mut self) -> usize {
        let t = self.dist.sample(&mut self.rng);
        if self.cursors[t] == self.pools[t].len() {
            self.pools[t].shuffle(&mut self.rng);
            self.cursors[t] = 0;
        }
        let i = self.pools[t][self.cursors[t]];
        self.cursors[t] += 1;
        i
    }

    /// Dataset indices of the next batch.
    pub fn next_batch(&mut self, batch_size: usize) -> Vec<usize> {
        (0..batch_size).map(|_| self.next_index()).collect()
    }
}

pub fn sample_batches(
    dataset: &TaskDataset,
    alpha: f64,
    seed: u64,
    batch_size: usize,
    num_batches: usize,
) -> Result<Vec<Vec<usize>>, DatasetError> {
    let mut sampler = BatchSampler::new(dataset, alpha, seed)?;
    Ok((0..num_batches).map(|_| sampler.next_batch(batch_size)).collect())
}
