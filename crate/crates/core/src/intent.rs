//! Natural-language intent for configurations: one templated imperative sentence per element,
//! optional LLM rephrasing guarded by parameter preservation, and generation/analysis pairs.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configmodel::{
    print, Action, AccessList, BgpProcess, Clause, Community, CommunityList, ConfigError,
    ElementKind, Match, OspfProcess, PrefixList, RoutePolicy, SemanticConfig, SetAction,
    StaticRoute, Vendor,
};
use crate::datasets::{Task, TaskExample};
use crate::llm::{LlmClient, LlmRequest};
use crate::noising::LanguageTag;
use crate::util::bounded_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntentStyle {
    Templated,
    Generalized,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentText {
    pub sentences: Vec<String>,
    pub style: IntentStyle,
    pub source_elements: Vec<(ElementKind, String)>,
}

impl IntentText {
    /// One sentence per line.
    pub fn text(&self) -> String {
        self.sentences.join("\n")
    }
}

/// Template pattern per element kind; placeholders in braces.
pub const TEMPLATES: &[(ElementKind, &str)] = &[
    (
        ElementKind::CommunityList,
        "Create a community-list named {name}, {action} routes with community values {values}.",
    ),
    (ElementKind::PrefixList, "Create an IP prefix list named {name}, {entries}."),
    (ElementKind::AccessList, "Create a standard access list named {name}, {entries}."),
    (
        ElementKind::RoutePolicy,
        "Create a route-map named {name} with sequence number {seq}{parts}.",
    ),
    (ElementKind::StaticRoute, "Create a static route to {prefix} with next hop {next_hop}."),
    (ElementKind::Bgp, "Configure BGP with AS number {asn}{router_id}."),
    (ElementKind::Ospf, "Configure OSPF process {process_id}."),
];

#[derive(Debug, Error)]
pub enum IntentError {
    #[error("no intent template for {0} elements")]
    MissingTemplate(ElementKind),
    #[error("configuration has no elements to describe")]
    MissingElements,
    #[error("generalization expects templated intent")]
    AlreadyGeneralized,
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// `a`, `a and b`, `a, b and c`.
fn and_list<S: AsRef<str>>(items: &[S]) -> String {
    match items {
        [] => String::new(),
        [one] => one.as_ref().to_string(),
        [init @ .., last] => format!(
            "{} and {}",
            init.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(", "),
            last.as_ref()
        ),
    }
}

fn communities(values: &[Community]) -> String {
    and_list(&values.iter().map(Community::to_string).collect::<Vec<_>>())
}

fn community_sentence(c: &CommunityList) -> String {
    format!(
        "Create a community-list named {}, {} routes with community values {}.",
        c.name,
        c.action,
        communities(&c.values)
    )
}

fn prefix_sentence(p: &PrefixList) -> String {
    let entries: Vec<String> = p
        .entries
        .iter()
        .map(|e| {
            let mut s = format!("{} routes matching {}", e.action, e.prefix);
            if let Some((lo, hi)) = e.length_range {
                s.push_str(&format!(" with prefix length {lo} to {hi}"));
            }
            s
        })
        .collect();
    format!("Create an IP prefix list named {}, {}.", p.name, entries.join(", "))
}

fn acl_sentence(a: &AccessList) -> String {
    let entries: Vec<String> = a
        .entries
        .iter()
        .map(|e| format!("{} traffic from {}", e.action, e.source))
        .collect();
    format!("Create a standard access list named {}, {}.", a.name, entries.join(", "))
}

fn clause_sentence(name: &str, c: &Clause) -> String {
    let mut parts = Vec::new();
    if c.action == Action::Deny {
        parts.push("deny matching routes".to_string());
    }
    if !c.matches.is_empty() {
        let m: Vec<String> = c
            .matches
            .iter()
            .map(|m| match m {
                Match::CommunityList(n) => format!("community-list {n}"),
                Match::PrefixList(n) => format!("prefix-list {n}"),
            })
            .collect();
        parts.push(format!("match {}", and_list(&m)));
    }
    if !c.sets.is_empty() {
        let s: Vec<String> = c
            .sets
            .iter()
            .map(|s| match s {
                SetAction::LocalPreference(n) => format!("localpreference to {n}"),
                SetAction::Metric(n) => format!("metric to {n}"),
                SetAction::Community(v) => format!("community to {}", communities(v)),
            })
            .collect();
        parts.push(format!("set {}", and_list(&s)));
    }
    let mut out = format!("Create a route-map named {name} with sequence number {}", c.seq);
    let n = parts.len();
    for (i, p) in parts.into_iter().enumerate() {
        if i + 1 == n {
            out.push_str(", and ");
        } else {
            out.push_str(", ");
        }
        out.push_str(&p);
    }
    out.push('.');
    out
}

fn policy_sentences(p: &RoutePolicy) -> Vec<String> {
    if p.clauses.is_empty() {
        return vec![format!("Create an empty route-map named {}.", p.name)];
    }
    p.clauses.iter().map(|c| clause_sentence(&p.name, c)).collect()
}

fn static_sentence(s: &StaticRoute) -> String {
    format!("Create a static route to {} with next hop {}.", s.prefix, s.next_hop)
}

fn bgp_sentences(b: &BgpProcess) -> Vec<String> {
    let router_id = b
        .router_id
        .map(|r| format!(" and router ID {r}"))
        .unwrap_or_default();
    let mut out = vec![format!("Configure BGP with AS number {}{router_id}.", b.asn)];
    for n in &b.neighbors {
        let mut s = format!("Add BGP neighbor {} with remote AS {}", n.peer, n.remote_asn);
        if let Some(d) = &n.description {
            s.push_str(&format!(", description \"{d}\""));
        }
        if let Some(p) = &n.import_policy {
            s.push_str(&format!(", import policy {p}"));
        }
        if let Some(p) = &n.export_policy {
            s.push_str(&format!(", export policy {p}"));
        }
        s.push('.');
        out.push(s);
    }
    out
}

fn ospf_sentences(o: &OspfProcess) -> Vec<String> {
    let mut out = vec![format!("Configure OSPF process {}.", o.process_id)];
    for r in &o.redistributes {
        let mut s = format!("Redistribute {}", r.protocol.as_str());
        if let Some(p) = r.process {
            s.push_str(&format!(" {p}"));
        }
        s.push_str(&format!(" into OSPF process {}", o.process_id));
        if !r.options.is_empty() {
            s.push_str(&format!(" with {}", r.options.join(", ")));
        }
        s.push('.');
        out.push(s);
    }
    for n in &o.networks {
        out.push(format!(
            "Advertise network {} with wildcard {} in area {} under OSPF process {}.",
            n.address, n.wildcard, n.area, o.process_id
        ));
    }
    out
}

/// Sentences in the order community lists, prefix lists, access lists, route-maps, static
/// routes, BGP, OSPF.
pub fn config_to_intent(config: &SemanticConfig) -> Result<IntentText, IntentError> {
    if !config.opaque.is_empty() {
        return Err(IntentError::MissingTemplate(ElementKind::Opaque));
    }
    let mut sentences = Vec::new();
    let mut source_elements = Vec::new();
    for c in &config.community_lists {
        sentences.push(community_sentence(c));
        source_elements.push((ElementKind::CommunityList, c.name.clone()));
    }
    for p in &config.prefix_lists {
        sentences.push(prefix_sentence(p));
        source_elements.push((ElementKind::PrefixList, p.name.clone()));
    }
    for a in &config.access_lists {
        sentences.push(acl_sentence(a));
        source_elements.push((ElementKind::AccessList, a.name.clone()));
    }
    for p in &config.route_policies {
        sentences.extend(policy_sentences(p));
        source_elements.push((ElementKind::RoutePolicy, p.name.clone()));
    }
    for s in &config.static_routes {
        sentences.push(static_sentence(s));
        source_elements.push((ElementKind::StaticRoute, s.prefix.to_string()));
    }
    if let Some(b) = &config.bgp {
        sentences.extend(bgp_sentences(b));
        source_elements.push((ElementKind::Bgp, b.asn.to_string()));
    }
    if let Some(o) = &config.ospf {
        sentences.extend(ospf_sentences(o));
        source_elements.push((ElementKind::Ospf, o.process_id.to_string()));
    }
    if sentences.is_empty() {
        return Err(IntentError::MissingElements);
    }
    Ok(IntentText {
        sentences,
        style: IntentStyle::Templated,
        source_elements,
    })
}

/// Literal parameter tokens of a sentence: anything with a digit, plus known element names.
pub fn literal_tokens(sentence: &str, names: &HashSet<&str>) -> Vec<String> {
    let mut out: Vec<String> = sentence
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| ".,;:!?\"'()".contains(c)))
        .filter(|t| !t.is_empty())
        .filter(|t| t.chars().any(|c| c.is_ascii_digit()) || names.contains(t))
        .map(str::to_string)
        .collect();
    out.sort();
    out
}

const GENERALIZE_SYSTEM: &str = "Rewrite the instruction as one imperative sentence. Keep every name, address, prefix and number exactly as written.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generalized {
    pub intent: IntentText,
    /// Indices of sentences that kept their templated form.
    pub reverted: Vec<usize>,
    pub warning: Option<String>,
}

/// Rephrases each sentence independently. A rewrite is kept only when it is a single line with
/// the same multiset of literal tokens; otherwise the templated sentence stays. If the client
/// is unavailable the input comes back unchanged with a warning.
pub fn generalize_intent(
    intent: &IntentText,
    client: &dyn LlmClient,
    concurrency: usize,
) -> Result<Generalized, IntentError> {
    if intent.style != IntentStyle::Templated {
        return Err(IntentError::AlreadyGeneralized);
    }
    let names: HashSet<&str> = intent.source_elements.iter().map(|(_, n)| n.as_str()).collect();
    let responses = bounded_map(&intent.sentences, concurrency, |s| {
        let req = LlmRequest::new("generalize", Some(GENERALIZE_SYSTEM.into()), s.clone());
        client.complete(&req)
    });
    let mut sentences = Vec::with_capacity(intent.sentences.len());
    let mut reverted = Vec::new();
    for (i, (orig, resp)) in intent.sentences.iter().zip(responses).enumerate() {
        let resp = match resp {
            Ok(r) => r,
            Err(e) => {
                return Ok(Generalized {
                    intent: intent.clone(),
                    reverted: (0..intent.sentences.len()).collect(),
                    warning: Some(e.to_string()),
                })
            }
        };
        let candidate = resp.text.trim();
        let ok = !candidate.is_empty()
            && !candidate.contains('\n')
            && literal_tokens(candidate, &names) == literal_tokens(orig, &names);
        if ok {
            sentences.push(candidate.to_string());
        } else {
            sentences.push(orig.clone());
            reverted.push(i);
        }
    }
    Ok(Generalized {
        intent: IntentText {
            sentences,
            style: IntentStyle::Generalized,
            source_elements: intent.source_elements.clone(),
        },
        reverted,
        warning: None,
    })
}

/// One generation (intent to config) and one analysis (config to intent) example per config.
pub fn intent_to_pairs(
    configs: &[SemanticConfig],
    vendor: Vendor,
) -> Result<Vec<TaskExample>, IntentError> {
    let tag = LanguageTag::from(vendor);
    let mut out = Vec::with_capacity(configs.len() * 2);
    for config in configs {
        let intent = config_to_intent(config)?.text();
        let printed = print(config, vendor)?;
        out.push(TaskExample::new(Task::Generation, LanguageTag::Nl, tag, &intent, &printed));
        out.push(TaskExample::new(Task::Analysis, tag, LanguageTag::Nl, printed, intent));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn and_list_forms() {
        assert_eq!(and_list(&["a"]), "a");
        assert_eq!(and_list(&["a", "b"]), "a and b");
        assert_eq!(and_list(&["a", "b", "c"]), "a, b and c");
    }

    #[test]
    fn empty_config_is_rejected() {
        assert!(matches!(
            config_to_intent(&SemanticConfig::default()),
            Err(IntentError::MissingElements)
        ));
    }
}
