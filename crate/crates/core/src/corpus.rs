//! Task-related corpus selection: cleaning and splitting raw documents, a TF-IDF bag-of-words
//! model, exact KNN candidate selection and config-likeness judgment.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configmodel::recognizable_lines;
use crate::lexicon::{config_likeness, is_config_line, THETA_ACCEPT};
use crate::util::{collapse_whitespace, sha256_hex};

/// Tokens occurring fewer times than this across the corpus are left out of the vocabulary.
pub const FREQUENCY_FLOOR: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Nl,
    Config,
    Mixed,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub source: String,
    pub kind: DocKind,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, source: impl Into<String>, kind: DocKind, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            source: source.into(),
            kind,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub language_histogram: BTreeMap<DocKind, usize>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Self {
        let mut language_histogram = BTreeMap::new();
        for d in &documents {
            *language_histogram.entry(d.kind).or_insert(0) += 1;
        }
        Corpus {
            documents,
            language_histogram,
        }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no document survived cleaning")]
    EmptyCorpus,
    #[error("unknown document `{0}`")]
    UnknownDocument(String),
    #[error("document id `{0}` is used for two different texts")]
    DuplicateId(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
}

/// Pluggable origin of raw documents. Only file ingestion ships; a crawler would implement this.
pub trait DocumentSource {
    fn fetch(&self) -> Result<Vec<Document>, CorpusError>;
}

pub struct JsonlSource(pub PathBuf);

impl DocumentSource for JsonlSource {
    fn fetch(&self) -> Result<Vec<Document>, CorpusError> {
        read_jsonl(&self.0)
    }
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| CorpusError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CorpusError> {
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for item in items {
        let line = serde_json::to_string(item).expect("documents serialize");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"</?[A-Za-z][^<>]*>").unwrap());
static BOILERPLATE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^\s*(home\s*(>|»|/)|skip to (main )?content|log ?in\b|sign ?(in|up)\b|reply\s*$|quote\s*$|share\s*$|report\s*$|like\s*$|posted (by|on)\b|sent from my\b|copyright\b|©|all rights reserved|previous topic|next topic|back to top|\d+ (replies|views|kudos)\b)",
    )
    .unwrap()
});

fn strip_boilerplate(text: &str) -> String {
    let text = TAG.replace_all(text, "");
    let text = text
        .replace("&nbsp;", " ")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&amp;", "&");
    let mut kept = Vec::new();
    for line in text.lines() {
        // signature delimiter: everything below belongs to the author's signature
        if line == "-- " || line.trim() == "--" {
            break;
        }
        if BOILERPLATE.is_match(line) {
            continue;
        }
        kept.push(line.trim_end());
    }
    kept.join("\n")
}

/// Splits text into maximal runs of configuration lines and prose lines (blank lines dropped).
pub fn split_runs(text: &str) -> Vec<(DocKind, String)> {
    let mut runs: Vec<(bool, Vec<&str>)> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let config = is_config_line(line);
        match runs.last_mut() {
            Some((c, lines)) if *c == config => lines.push(line),
            _ => runs.push((config, vec![line])),
        }
    }
    runs.into_iter()
        .map(|(config, lines)| {
            let kind = if config { DocKind::Config } else { DocKind::Nl };
            (kind, lines.join("\n"))
        })
        .collect()
}

/// Cleans raw documents and splits each into maximal runs of configuration and prose lines.
pub fn data_process(raw: &[Document]) -> Result<Corpus, CorpusError> {
    let mut out = Vec::new();
    for doc in raw {
        let runs = split_runs(&strip_boilerplate(&doc.text));
        let single = runs.len() == 1;
        for (k, (kind, text)) in runs.into_iter().enumerate() {
            let id = if single {
                doc.id.clone()
            } else {
                format!("{}#{}", doc.id, k + 1)
            };
            out.push(Document::new(id, doc.source.clone(), kind, text));
        }
    }
    if out.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(Corpus::new(out))
}

fn is_address_literal(s: &str) -> bool {
    s.parse::<Ipv4Addr>().is_ok()
        || s.parse::<ipnet::Ipv4Net>().is_ok()
        || matches!(s.split_once(':'), Some((a, b)) if a.parse::<u16>().is_ok() && b.parse::<u16>().is_ok())
}

/// Lowercased bag-of-words tokens. Addresses, prefixes and communities stay whole; everything
/// else splits on punctuation.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let lower = chunk.to_lowercase();
        let core = lower.trim_matches(|c: char| !c.is_alphanumeric());
        if is_address_literal(core) {
            out.push(core.to_string());
            continue;
        }
        out.extend(
            lower
                .split(|c: char| !c.is_alphanumeric())
                .filter(|t| !t.is_empty())
                .map(str::to_string),
        );
    }
    out
}

/// Sparse vector as (vocabulary index, weight) pairs sorted by index.
pub type SparseVec = Vec<(u32, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowModel {
    pub vocabulary: BTreeMap<String, u32>,
    pub idf: BTreeMap<String, f64>,
    pub embeddings: BTreeMap<String, SparseVec>,
    /// Ids of the candidate pool (D1), ascending.
    pub pool: Vec<String>,
}

pub fn cosine(a: &SparseVec, b: &SparseVec) -> f64 {
    let (mut i, mut j, mut sum) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                sum += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    sum.clamp(0.0, 1.0)
}

impl BowModel {
    /// TF-IDF weights of an arbitrary text under this model, L2-normalized.
    pub fn embed(&self, text: &str) -> SparseVec {
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for t in tokenize(text) {
            if let Some(&idx) = self.vocabulary.get(&t) {
                *counts.entry(idx).or_insert(0.0) += self.idf[&t];
            }
        }
        let norm = counts.values().map(|w| w * w).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Vec::new();
        }
        counts.into_iter().map(|(i, w)| (i, w / norm)).collect()
    }
}

/// Builds the TF-IDF model over D1 ∪ D2.
///
/// Term frequency is the raw count; `idf(t) = ln((1 + N) / (1 + df(t))) + 1` with `N` the
/// number of documents; vectors are L2-normalized.
pub fn model_pretrain(d1: &Corpus, d2: &Corpus) -> Result<BowModel, CorpusError> {
    if d1.is_empty() || d2.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut texts: BTreeMap<&str, &str> = BTreeMap::new();
    for d in d1.documents.iter().chain(&d2.documents) {
        match texts.insert(&d.id, &d.text) {
            Some(prev) if prev != d.text => return Err(CorpusError::DuplicateId(d.id.clone())),
            _ => {}
        }
    }
    let tokens: BTreeMap<&str, Vec<String>> =
        texts.iter().map(|(id, text)| (*id, tokenize(text))).collect();
    let mut freq: HashMap<&str, usize> = HashMap::new();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for toks in tokens.values() {
        let mut seen = HashSet::new();
        for t in toks {
            *freq.entry(t).or_insert(0) += 1;
            if seen.insert(t.as_str()) {
                *df.entry(t).or_insert(0) += 1;
            }
        }
    }
    let mut kept: Vec<&str> = freq
        .iter()
        .filter(|(_, &n)| n >= FREQUENCY_FLOOR)
        .map(|(t, _)| *t)
        .collect();
    kept.sort_unstable();
    let n = tokens.len() as f64;
    let vocabulary: BTreeMap<String, u32> = kept
        .iter()
        .enumerate()
        .map(|(i, t)| (t.to_string(), i as u32))
        .collect();
    let idf: BTreeMap<String, f64> = kept
        .iter()
        .map(|t| (t.to_string(), ((1.0 + n) / (1.0 + df[t] as f64)).ln() + 1.0))
        .collect();
    let mut model = BowModel {
        vocabulary,
        idf,
        embeddings: BTreeMap::new(),
        pool: d1.documents.iter().map(|d| d.id.clone()).collect(),
    };
    model.pool.sort();
    model.pool.dedup();
    let embeddings = texts
        .iter()
        .map(|(id, text)| (id.to_string(), model.embed(text)))
        .collect();
    model.embeddings = embeddings;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub seed_id: String,
    pub candidates: Vec<(String, f64)>,
    pub accepted: Vec<String>,
}

/// Exact top-`n` cosine neighbours of `seed` among the D1 pool; ties go to the smaller id.
pub fn data_selection(seed: &Document, model: &BowModel, n: usize) -> Result<SelectionResult, CorpusError> {
    let seed_vec = model
        .embeddings
        .get(&seed.id)
        .ok_or_else(|| CorpusError::UnknownDocument(seed.id.clone()))?;
    let mut scored: Vec<(String, f64)> = model
        .pool
        .iter()
        .map(|id| (id.clone(), cosine(seed_vec, &model.embeddings[id])))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(n.max(1));
    Ok(SelectionResult {
        seed_id: seed.id.clone(),
        candidates: scored,
        accepted: Vec::new(),
    })
}

/// Accepts a candidate whose config-likeness reaches [`THETA_ACCEPT`] and which contains at
/// least one line the configuration grammars recognize.
pub fn data_judgment(candidate: &Document) -> Option<Document> {
    if config_likeness(&candidate.text) >= THETA_ACCEPT && recognizable_lines(&candidate.text) >= 1 {
        Some(Document {
            kind: DocKind::Config,
            ..candidate.clone()
        })
    } else {
        None
    }
}

pub fn dedup_key(text: &str) -> String {
    sha256_hex(collapse_whitespace(text))
}

/// Runs cleaning, model building, per-seed selection and judgment, and deduplicates the result.
/// Seeds are processed in parallel and merged in seed order.
pub fn build_pretraining_corpus(l: &[Document], d2: &Corpus, n: usize) -> Result<Corpus, CorpusError> {
    build_with_selections(l, d2, n).map(|(c, _)| c)
}

/// Like [`build_pretraining_corpus`], also returning each seed's selection.
pub fn build_with_selections(
    l: &[Document],
    d2: &Corpus,
    n: usize,
) -> Result<(Corpus, Vec<SelectionResult>), CorpusError> {
    if d2.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let d1 = match data_process(l) {
        Ok(c) => c,
        Err(CorpusError::EmptyCorpus) => return Ok((Corpus::default(), Vec::new())),
        Err(e) => return Err(e),
    };
    let model = model_pretrain(&d1, d2)?;
    let by_id: HashMap<&str, &Document> = d1.documents.iter().map(|d| (d.id.as_str(), d)).collect();
    let selections: Vec<(SelectionResult, Vec<Document>)> = d2
        .documents
        .par_iter()
        .map(|seed| {
            let mut sel = data_selection(seed, &model, n)?;
            let mut accepted = Vec::new();
            for (id, _) in &sel.candidates {
                if let Some(doc) = data_judgment(by_id[id.as_str()]) {
                    sel.accepted.push(id.clone());
                    accepted.push(doc);
                }
            }
            Ok((sel, accepted))
        })
        .collect::<Result<_, CorpusError>>()?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut results = Vec::new();
    for (sel, docs) in selections {
        for d in docs {
            if seen.insert(dedup_key(&d.text)) {
                out.push(d);
            }
        }
        results.push(sel);
    }
    Ok((Corpus::new(out), results))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str) -> Document {
        Document::new(id, "test", DocKind::Unknown, text)
    }

    #[test]
    fn splits_prose_from_config() {
        let raw = doc(
            "p1",
            "How do I advertise my network to the ISP over BGP?\nrouter bgp 100\n neighbor 10.0.0.2 remote-as 200\n",
        );
        let c = data_process(&[raw]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.documents[0].kind, DocKind::Nl);
        assert_eq!(c.documents[1].kind, DocKind::Config);
        assert_eq!(c.documents[1].id, "p1#2");
        assert_eq!(c.language_histogram.values().sum::<usize>(), 2);
    }

    #[test]
    fn boilerplate_is_removed() {
        let raw = doc(
            "p",
            "<p>Home > Forums > Routing</p>\nWhy is my route missing?\nPosted by alice\n-- \nBob, CCIE\n",
        );
        let c = data_process(&[raw]).unwrap();
        assert_eq!(c.documents[0].text, "Why is my route missing?");
        assert!(matches!(data_process(&[doc("x", "Reply\n")]), Err(CorpusError::EmptyCorpus)));
    }

    #[test]
    fn tokenizer_keeps_literals() {
        assert_eq!(
            tokenize("ip route 10.0.0.0/8 via 1.2.3.4; community 65000:1, Route-Map"),
            vec!["ip", "route", "10.0.0.0/8", "via", "1.2.3.4", "community", "65000:1", "route", "map"]
        );
    }

    #[test]
    fn identical_and_disjoint_documents() {
        let d1 = Corpus::new(vec![
            doc("a", "router bgp 100 neighbor"),
            doc("b", "router bgp 100 neighbor"),
            doc("c", "apple banana"),
        ]);
        let d2 = Corpus::new(vec![doc("s", "apple banana")]);
        let m = model_pretrain(&d1, &d2).unwrap();
        assert!((cosine(&m.embeddings["a"], &m.embeddings["b"]) - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&m.embeddings["a"], &m.embeddings["c"]), 0.0);
    }

    #[test]
    fn judgment_boundary_is_inclusive() {
        let half = doc("h", "ip route 0.0.0.0 0.0.0.0 80.0.0.2\nthis line is prose about it");
        assert!(data_judgment(&half).is_some());
        assert!(data_judgment(&doc("e", "Just an English paragraph.")).is_none());
    }
}
