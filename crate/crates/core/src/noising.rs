//! Denoising pretraining pairs: language-tagged word sequences corrupted by masking, deletion
//! or span infilling, with an alignment that replays the original exactly.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configmodel::{detect_vendor, Vendor};
use crate::corpus::{Corpus, DocKind, Document};
use crate::util::{bounded_map, derive_seed};

pub const MASK: &str = "[MASK]";
pub const NEW_LINE: &str = "NEW_LINE";
pub const DEFAULT_RATE: f64 = 0.15;
pub const DEFAULT_SPAN_MEAN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LanguageTag {
    #[serde(rename = "<nl>")]
    Nl,
    #[serde(rename = "<cisco>")]
    Cisco,
    #[serde(rename = "<juniper>")]
    Juniper,
}

impl LanguageTag {
    pub fn as_str(self) -> &'static str {
        match self {
            LanguageTag::Nl => "<nl>",
            LanguageTag::Cisco => "<cisco>",
            LanguageTag::Juniper => "<juniper>",
        }
    }

    pub fn vendor(self) -> Option<Vendor> {
        match self {
            LanguageTag::Nl => None,
            LanguageTag::Cisco => Some(Vendor::Cisco),
            LanguageTag::Juniper => Some(Vendor::Juniper),
        }
    }
}

impl From<Vendor> for LanguageTag {
    fn from(v: Vendor) -> Self {
        match v {
            Vendor::Cisco => LanguageTag::Cisco,
            Vendor::Juniper => LanguageTag::Juniper,
        }
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LanguageTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim_start_matches('<').trim_end_matches('>') {
            "nl" => Ok(LanguageTag::Nl),
            "cisco" => Ok(LanguageTag::Cisco),
            "juniper" => Ok(LanguageTag::Juniper),
            other => Err(format!("unknown language tag `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub tag: LanguageTag,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Source-side layout: tokens, then the tag.
    pub fn noisy_text(&self) -> String {
        let mut parts: Vec<&str> = self.tokens.iter().map(String::as_str).collect();
        parts.push(self.tag.as_str());
        parts.join(" ")
    }

    /// Target-side layout: the tag, then tokens.
    pub fn original_text(&self) -> String {
        let mut parts = vec![self.tag.as_str()];
        parts.extend(self.tokens.iter().map(String::as_str));
        parts.join(" ")
    }
}

const NL_PUNCT: &[char] = &['.', ',', ';', ':', '!', '?', '(', ')', '"', '\''];
const JUNIPER_PUNCT: &[char] = &['{', '}', ';', '"'];

fn peel<'a>(chunk: &'a str, punct: &[char], out: &mut Vec<String>) {
    let core_start = chunk.find(|c: char| !punct.contains(&c)).unwrap_or(chunk.len());
    let core_end = chunk
        .rfind(|c: char| !punct.contains(&c))
        .map(|i| i + chunk[i..].chars().next().unwrap().len_utf8())
        .unwrap_or(core_start);
    out.extend(chunk[..core_start].chars().map(String::from));
    if core_start < core_end {
        out.push(chunk[core_start..core_end].to_string());
    }
    out.extend(chunk[core_end.max(core_start)..].chars().map(String::from));
}

/// Word-level tokenization per language.
///
/// Cisco line breaks become `NEW_LINE`; Juniper braces, `;` and quotes become standalone tokens
/// (punctuation-only chunks such as `}...` stay whole); prose peels leading and trailing
/// punctuation into separate tokens.
pub fn tokenize(text: &str, tag: LanguageTag) -> TokenSeq {
    let mut tokens = Vec::new();
    match tag {
        LanguageTag::Cisco => {
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                if !tokens.is_empty() {
                    tokens.push(NEW_LINE.to_string());
                }
                tokens.extend(line.split_whitespace().map(str::to_string));
            }
        }
        LanguageTag::Juniper => {
            for chunk in text.split_whitespace() {
                let has_word = chunk.chars().any(char::is_alphanumeric);
                let structural = chunk.chars().all(|c| JUNIPER_PUNCT.contains(&c));
                if has_word || structural {
                    peel(chunk, JUNIPER_PUNCT, &mut tokens);
                } else {
                    tokens.push(chunk.to_string());
                }
            }
        }
        LanguageTag::Nl => {
            for chunk in text.split_whitespace() {
                if chunk.chars().any(char::is_alphanumeric) {
                    peel(chunk, NL_PUNCT, &mut tokens);
                } else {
                    tokens.push(chunk.to_string());
                }
            }
        }
    }
    TokenSeq { tokens, tag }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Mask,
    Delete,
    Infill,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Mask, Strategy::Delete, Strategy::Infill];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Mask => "mask",
            Strategy::Delete => "delete",
            Strategy::Infill => "infill",
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "mask" => Ok(Strategy::Mask),
            "delete" => Ok(Strategy::Delete),
            "infill" => Ok(Strategy::Infill),
            other => Err(format!("unknown strategy `{other}` (expected mask, delete or infill)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub strategy: Strategy,
    pub rate: f64,
    pub span_mean: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(strategy: Strategy, rate: f64, seed: u64) -> Self {
        NoiseSpec {
            strategy,
            rate,
            span_mean: DEFAULT_SPAN_MEAN,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(0.0..=0.5).contains(&self.rate) {
            return Err(NoiseError::InvalidSpec(format!("rate {} is outside [0, 0.5]", self.rate)));
        }
        if !(self.span_mean >= 1.0 && self.span_mean.is_finite()) {
            return Err(NoiseError::InvalidSpec(format!("span_mean {} is below 1", self.span_mean)));
        }
        Ok(())
    }

    /// Number of tokens to corrupt: `max(1, round(rate * len))`.
    pub fn budget(&self, len: usize) -> usize {
        ((self.rate * len as f64).round() as usize).max(1)
    }
}

/// How one stretch of the original maps into the noisy sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Segment {
    /// `len` tokens copied unchanged; they start at `noisy_start` in the noisy sequence.
    Kept {
        original_start: usize,
        noisy_start: usize,
        len: usize,
    },
    /// `tokens` replaced by the single [MASK] at `noisy_index`.
    Masked {
        original_start: usize,
        noisy_index: usize,
        tokens: Vec<String>,
    },
    /// `tokens` removed without trace.
    Deleted {
        original_start: usize,
        tokens: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyExample {
    pub noisy: TokenSeq,
    pub original: TokenSeq,
    pub spec: NoiseSpec,
    pub alignment: Vec<Segment>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("sequence has {0} token(s); at least 2 are required")]
    DegenerateInput(usize),
    #[error("invalid noise spec: {0}")]
    InvalidSpec(String),
    #[error("probability {0} is outside (0, 1]")]
    DomainError(f64),
    #[error("{probs} probabilities given for {tokens} tokens")]
    LengthMismatch { probs: usize, tokens: usize },
}

/// Corrupts the `[start, start+len)` spans of `seq` (sorted, disjoint). Mask and delete expect
/// length-1 spans; infill replaces each span with one [MASK].
pub fn apply_noise_at(seq: &TokenSeq, spec: NoiseSpec, spans: &[(usize, usize)]) -> NoisyExample {
    let mut noisy = Vec::new();
    let mut alignment = Vec::new();
    let mut pos = 0;
    let keep = |from: usize, to: usize, noisy: &mut Vec<String>, alignment: &mut Vec<Segment>| {
        if to > from {
            alignment.push(Segment::Kept {
                original_start: from,
                noisy_start: noisy.len(),
                len: to - from,
            });
            noisy.extend_from_slice(&seq.tokens[from..to]);
        }
    };
    for &(start, len) in spans {
        keep(pos, start, &mut noisy, &mut alignment);
        let hidden = seq.tokens[start..start + len].to_vec();
        match spec.strategy {
            Strategy::Delete => alignment.push(Segment::Deleted {
                original_start: start,
                tokens: hidden,
            }),
            Strategy::Mask | Strategy::Infill => {
                alignment.push(Segment::Masked {
                    original_start: start,
                    noisy_index: noisy.len(),
                    tokens: hidden,
                });
                noisy.push(MASK.to_string());
            }
        }
        pos = start + len;
    }
    keep(pos, seq.len(), &mut noisy, &mut alignment);
    NoisyExample {
        noisy: TokenSeq {
            tokens: noisy,
            tag: seq.tag,
        },
        original: seq.clone(),
        spec,
        alignment,
    }
}

/// Span lengths summing to exactly `target`, drawn from Poisson(`mean`) floored at 1.
fn span_lengths(rng: &mut ChaCha8Rng, target: usize, mean: f64) -> Vec<usize> {
    let poisson = Poisson::new(mean).expect("span mean is positive");
    let mut out = Vec::new();
    let mut covered = 0;
    while covered < target {
        let draw = (poisson.sample(rng) as usize).max(1);
        let len = draw.min(target - covered);
        out.push(len);
        covered += len;
    }
    out
}

pub fn apply_noise(seq: &TokenSeq, spec: NoiseSpec) -> Result<NoisyExample, NoiseError> {
    spec.validate()?;
    let n = seq.len();
    if n < 2 {
        return Err(NoiseError::DegenerateInput(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let spans: Vec<(usize, usize)> = match spec.strategy {
        Strategy::Mask | Strategy::Delete => {
            let eligible: Vec<usize> = (0..n).filter(|&i| seq.tokens[i] != MASK).collect();
            let count = spec.budget(n).min(eligible.len());
            let mut picked: Vec<usize> = sample(&mut rng, eligible.len(), count)
                .into_iter()
                .map(|i| eligible[i])
                .collect();
            picked.sort_unstable();
            picked.into_iter().map(|i| (i, 1)).collect()
        }
        Strategy::Infill => {
            let target = spec.budget(n);
            let mut lengths = span_lengths(&mut rng, target, spec.span_mean);
            // spans need a kept token between them; merge until they fit
            while lengths.len() > 1 && n - target < lengths.len() - 1 {
                let last = lengths.pop().unwrap();
                *lengths.last_mut().unwrap() += last;
            }
            let k = lengths.len();
            let extra = n - target - (k - 1);
            let mut cuts: Vec<usize> = sample(&mut rng, extra + k, k).into_vec();
            cuts.sort_unstable();
            let mut spans = Vec::with_capacity(k);
            let mut pos = 0;
            let mut prev_cut: Option<usize> = None;
            for (len, cut) in lengths.into_iter().zip(cuts) {
                // one mandatory kept token between spans plus the drawn extra
                let gap = match prev_cut {
                    None => cut,
                    Some(p) => cut - p,
                };
                pos += gap;
                spans.push((pos, len));
                pos += len;
                prev_cut = Some(cut);
            }
            spans
        }
    };
    Ok(apply_noise_at(seq, spec, &spans))
}

/// Rebuilds the original token list from the noisy tokens and the alignment.
pub fn replay(noisy: &[String], alignment: &[Segment]) -> Vec<String> {
    let mut out = Vec::new();
    for seg in alignment {
        match seg {
            Segment::Kept { noisy_start, len, .. } => {
                out.extend_from_slice(&noisy[*noisy_start..noisy_start + len])
            }
            Segment::Masked { tokens, .. } | Segment::Deleted { tokens, .. } => {
                out.extend(tokens.iter().cloned())
            }
        }
    }
    out
}

/// `-Σ ln p_i`, the per-example negative log-likelihood of the original tokens.
pub fn reconstruction_nll(original: &TokenSeq, per_token_probs: &[f64]) -> Result<f64, NoiseError> {
    if per_token_probs.len() != original.len() {
        return Err(NoiseError::LengthMismatch {
            probs: per_token_probs.len(),
            tokens: original.len(),
        });
    }
    let mut sum = 0.0;
    for &p in per_token_probs {
        if !(p > 0.0 && p <= 1.0) {
            return Err(NoiseError::DomainError(p));
        }
        sum -= p.ln();
    }
    Ok(sum)
}

/// Mean per-token NLL over a set of examples.
pub fn mean_token_nll<'a>(
    examples: impl IntoIterator<Item = (&'a TokenSeq, &'a [f64])>,
) -> Result<f64, NoiseError> {
    let (mut total, mut tokens) = (0.0, 0usize);
    for (seq, probs) in examples {
        total += reconstruction_nll(seq, probs)?;
        tokens += seq.len();
    }
    Ok(if tokens == 0 { 0.0 } else { total / tokens as f64 })
}

/// One line of the pretraining file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PretrainRecord {
    pub tag: LanguageTag,
    pub noisy: String,
    pub original: String,
    pub strategy: Strategy,
    pub seed: u64,
}

impl From<&NoisyExample> for PretrainRecord {
    fn from(e: &NoisyExample) -> Self {
        PretrainRecord {
            tag: e.original.tag,
            noisy: e.noisy.noisy_text(),
            original: e.original.original_text(),
            strategy: e.spec.strategy,
            seed: e.spec.seed,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub too_short: Vec<String>,
    pub untagged: Vec<String>,
}

/// Language tag of a corpus document: prose is `<nl>`; configuration takes the vendor named in
/// its source label, else the detected dialect.
pub fn document_tag(doc: &Document) -> Option<LanguageTag> {
    match doc.kind {
        DocKind::Nl => Some(LanguageTag::Nl),
        DocKind::Config => {
            let source = doc.source.to_ascii_lowercase();
            Some(if source.contains("juniper") || source.contains("junos") {
                LanguageTag::Juniper
            } else if source.contains("cisco") || source.contains("ios") {
                LanguageTag::Cisco
            } else {
                detect_vendor(&doc.text).into()
            })
        }
        DocKind::Mixed | DocKind::Unknown => None,
    }
}

/// One example per (document, spec), in document order then spec order. Each example's seed is
/// derived from `seed`, the document id and the spec index.
pub fn emit_pretraining_set(
    corpus: &Corpus,
    specs: &[NoiseSpec],
    seed: u64,
) -> Result<(Vec<NoisyExample>, SkipReport), NoiseError> {
    for s in specs {
        s.validate()?;
    }
    let per_doc: Vec<Result<Vec<NoisyExample>, &str>> = bounded_map(&corpus.documents, 4, |doc| {
        let tag = document_tag(doc).ok_or("untagged")?;
        let seq = tokenize(&doc.text, tag);
        if seq.len() < 2 {
            return Err("too_short");
        }
        Ok(specs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let spec = NoiseSpec {
                    seed: derive_seed(seed, &format!("{}/{i}", doc.id)),
                    ..*s
                };
                apply_noise(&seq, spec).expect("validated spec on a long enough sequence")
            })
            .collect())
    });
    let mut out = Vec::new();
    let mut skips = SkipReport::default();
    for (doc, r) in corpus.documents.iter().zip(per_doc) {
        match r {
            Ok(examples) => out.extend(examples),
            Err("untagged") => skips.untagged.push(doc.id.clone()),
            Err(_) => skips.too_short.push(doc.id.clone()),
        }
    }
    Ok((out, skips))
}

pub fn write_pretraining_file(path: &Path, examples: &[NoisyExample]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for e in examples {
        writeln!(w, "{}", serde_json::to_string(&PretrainRecord::from(e)).expect("serializable"))?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cisco_lines_become_new_line() {
        let seq = tokenize("router ospf 104\nredistribute bgp 104 subnets", LanguageTag::Cisco);
        assert_eq!(
            seq.tokens,
            vec!["router", "ospf", "104", "NEW_LINE", "redistribute", "bgp", "104", "subnets"]
        );
    }

    #[test]
    fn juniper_structure_tokens() {
        let seq = tokenize("static { route 0.0.0.0/0 next-hop 80.0.0.2; }", LanguageTag::Juniper);
        assert_eq!(
            seq.tokens,
            vec!["static", "{", "route", "0.0.0.0/0", "next-hop", "80.0.0.2", ";", "}"]
        );
        assert!(tokenize("", LanguageTag::Juniper).is_empty());
    }

    #[test]
    fn minimum_one_corruption() {
        let seq = tokenize("a b c d", LanguageTag::Nl);
        for strategy in Strategy::ALL {
            let ex = apply_noise(&seq, NoiseSpec::new(strategy, 0.01, 7)).unwrap();
            let hidden: usize = ex
                .alignment
                .iter()
                .map(|s| match s {
                    Segment::Masked { tokens, .. } | Segment::Deleted { tokens, .. } => tokens.len(),
                    Segment::Kept { .. } => 0,
                })
                .sum();
            assert_eq!(hidden, 1);
            assert_eq!(replay(&ex.noisy.tokens, &ex.alignment), seq.tokens);
        }
    }

    #[test]
    fn nll_values() {
        let seq = tokenize("a b", LanguageTag::Nl);
        assert_eq!(reconstruction_nll(&seq, &[1.0, 1.0]).unwrap(), 0.0);
        assert!((reconstruction_nll(&seq, &[0.5, 0.25]).unwrap() - 8f64.ln()).abs() < 1e-12);
        assert!(matches!(reconstruction_nll(&seq, &[0.0, 1.0]), Err(NoiseError::DomainError(_))));
        assert!(matches!(reconstruction_nll(&seq, &[1.0]), Err(NoiseError::LengthMismatch { .. })));
    }

    #[test]
    fn degenerate_and_invalid() {
        let one = tokenize("x", LanguageTag::Nl);
        assert_eq!(
            apply_noise(&one, NoiseSpec::new(Strategy::Mask, 0.15, 1)),
            Err(NoiseError::DegenerateInput(1))
        );
        let seq = tokenize("a b c", LanguageTag::Nl);
        assert!(apply_noise(&seq, NoiseSpec::new(Strategy::Mask, 0.6, 1)).is_err());
    }
}
