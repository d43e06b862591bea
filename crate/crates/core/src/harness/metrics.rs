//! Corpus BLEU-4, sentence ROUGE-L F1 and exact match, all on a 0 to 100 scale.

use std::collections::HashMap;

use thiserror::Error;

use crate::noising::{tokenize, LanguageTag, NEW_LINE};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("{hypotheses} hypotheses for {references} references")]
    LengthMismatch { hypotheses: usize, references: usize },
    #[error("no pairs to score")]
    Empty,
}

fn check(h: usize, r: usize) -> Result<(), MetricError> {
    if h != r {
        return Err(MetricError::LengthMismatch {
            hypotheses: h,
            references: r,
        });
    }
    if h == 0 {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// `NEW_LINE` sentinels back to real line breaks.
pub fn expand_new_lines(text: &str) -> String {
    text.lines()
        .map(|line| {
            line.split_whitespace()
                .map(|w| if w == NEW_LINE { "\n" } else { w })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn metric_tokens(text: &str, tag: LanguageTag) -> Vec<String> {
    tokenize(&expand_new_lines(text), tag).tokens
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

/// Clipped matches and hypothesis n-gram totals for orders 1 to 4.
fn bleu_stats(hyp: &[String], reference: &[String]) -> [(usize, usize); 4] {
    let mut out = [(0, 0); 4];
    for (i, slot) in out.iter_mut().enumerate() {
        let h = ngram_counts(hyp, i + 1);
        let r = ngram_counts(reference, i + 1);
        let matched = h
            .iter()
            .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
            .sum();
        *slot = (matched, hyp.len().saturating_sub(i));
    }
    out
}

fn bleu_from(stats: [(usize, usize); 4], hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len == 0 {
        return if ref_len == 0 { 100.0 } else { 0.0 };
    }
    let log_p: f64 = stats
        .iter()
        .map(|&(m, c)| {
            // add-one on zero counts
            let p = if m == 0 { 1.0 / (c as f64 + 1.0) } else { m as f64 / c as f64 };
            p.ln()
        })
        .sum::<f64>()
        / 4.0;
    let bp = if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    (100.0 * bp * log_p.exp()).min(100.0)
}

pub fn sentence_bleu(hypothesis: &str, reference: &str, tag: LanguageTag) -> f64 {
    let h = metric_tokens(hypothesis, tag);
    let r = metric_tokens(reference, tag);
    bleu_from(bleu_stats(&h, &r), h.len(), r.len())
}

/// Corpus BLEU-4 with uniform weights and a brevity penalty. Each pair is tokenized with its
/// reference's language tag.
pub fn bleu_tagged(
    hypotheses: &[&str],
    references: &[(&str, LanguageTag)],
) -> Result<f64, MetricError> {
    check(hypotheses.len(), references.len())?;
    let mut total = [(0usize, 0usize); 4];
    let (mut hl, mut rl) = (0, 0);
    for (h, (r, tag)) in hypotheses.iter().zip(references) {
        let h = metric_tokens(h, *tag);
        let r = metric_tokens(r, *tag);
        for (t, s) in total.iter_mut().zip(bleu_stats(&h, &r)) {
            t.0 += s.0;
            t.1 += s.1;
        }
        hl += h.len();
        rl += r.len();
    }
    Ok(bleu_from(total, hl, rl))
}

pub fn bleu(hypotheses: &[&str], references: &[&str], tag: LanguageTag) -> Result<f64, MetricError> {
    let refs: Vec<(&str, LanguageTag)> = references.iter().map(|r| (*r, tag)).collect();
    bleu_tagged(hypotheses, &refs)
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

pub fn sentence_rouge_l(hypothesis: &str, reference: &str, tag: LanguageTag) -> f64 {
    let h = metric_tokens(hypothesis, tag);
    let r = metric_tokens(reference, tag);
    if h.is_empty() && r.is_empty() {
        return 100.0;
    }
    let lcs = lcs_len(&h, &r);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / h.len() as f64;
    let rec = lcs as f64 / r.len() as f64;
    100.0 * 2.0 * p * rec / (p + rec)
}

/// Mean sentence-level ROUGE-L F1.
pub fn rouge_l_tagged(
    hypotheses: &[&str],
    references: &[(&str, LanguageTag)],
) -> Result<f64, MetricError> {
    check(hypotheses.len(), references.len())?;
    let sum: f64 = hypotheses
        .iter()
        .zip(references)
        .map(|(h, (r, tag))| sentence_rouge_l(h, r, *tag))
        .sum();
    Ok(sum / hypotheses.len() as f64)
}

pub fn rouge_l(hypotheses: &[&str], references: &[&str], tag: LanguageTag) -> Result<f64, MetricError> {
    let refs: Vec<(&str, LanguageTag)> = references.iter().map(|r| (*r, tag)).collect();
    rouge_l_tagged(hypotheses, &refs)
}

/// Expands `NEW_LINE`, collapses whitespace within each line, trims lines and drops trailing
/// blank lines.
pub fn normalize_for_em(text: &str) -> String {
    let expanded = expand_new_lines(text);
    let mut lines: Vec<String> = expanded
        .lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

pub fn em_hit(hypothesis: &str, reference: &str) -> bool {
    normalize_for_em(hypothesis) == normalize_for_em(reference)
}

pub fn exact_match(hypotheses: &[&str], references: &[&str]) -> Result<f64, MetricError> {
    check(hypotheses.len(), references.len())?;
    let hits = hypotheses
        .iter()
        .zip(references)
        .filter(|(h, r)| em_hit(h, r))
        .count();
    Ok(100.0 * hits as f64 / hypotheses.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lcs_basic() {
        let t = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
        assert_eq!(lcs_len(&t("a b c d"), &t("a c d")), 3);
        assert_eq!(lcs_len(&t("a"), &t("b")), 0);
    }

    #[test]
    fn em_normalization() {
        assert!(em_hit("ip  route 1\n\n", " ip route 1"));
        assert!(em_hit("a NEW_LINE b", "a\nb"));
        assert!(!em_hit("a b", "a\nb"));
    }

    #[test]
    fn empty_hypothesis_scores_zero() {
        assert_eq!(sentence_bleu("", "a b", LanguageTag::Nl), 0.0);
        assert_eq!(sentence_rouge_l("", "a b", LanguageTag::Nl), 0.0);
        assert!(bleu(&[], &[], LanguageTag::Nl).is_err());
    }
}
