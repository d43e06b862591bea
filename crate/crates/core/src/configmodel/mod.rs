//! Vendor-neutral model of routing configuration.
//!
//! Cisco IOS-style and Juniper-style texts are parsed into a [`SemanticConfig`], printed back to
//! either syntax, checked for syntax errors and compared for semantic equivalence. The supported
//! subset covers static routes, prefix lists, standard community lists, standard IPv4 access
//! lists, route maps / policy statements, BGP neighbors and OSPF networks/redistribution.

mod cisco;
mod equivalence;
mod juniper;
mod lex;

use std::collections::HashSet;
use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use ipnet::Ipv4Net;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use equivalence::{check_equivalence, compare, ElementDiff, EquivalenceReport};

/// Configuration dialects understood by the parser and printer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vendor {
    Cisco,
    Juniper,
}

impl Vendor {
    pub const ALL: [Vendor; 2] = [Vendor::Cisco, Vendor::Juniper];

    pub fn as_str(self) -> &'static str {
        match self {
            Vendor::Cisco => "cisco",
            Vendor::Juniper => "juniper",
        }
    }
}

impl fmt::Display for Vendor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Vendor {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cisco" | "ios" => Ok(Vendor::Cisco),
            "juniper" | "junos" => Ok(Vendor::Juniper),
            other => Err(ConfigError::UnsupportedVendor(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Permit,
    Deny,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Permit => "permit",
            Action::Deny => "deny",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A standard BGP community written as `asn:value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Community {
    pub asn: u16,
    pub value: u16,
}

impl fmt::Display for Community {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.asn, self.value)
    }
}

impl FromStr for Community {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, v) = s
            .split_once(':')
            .ok_or_else(|| format!("community `{s}` is not of the form asn:value"))?;
        let asn = a
            .parse::<u16>()
            .map_err(|_| format!("community AS part `{a}` is not in 0-65535"))?;
        let value = v
            .parse::<u16>()
            .map_err(|_| format!("community value part `{v}` is not in 0-65535"))?;
        Ok(Community { asn, value })
    }
}

impl Serialize for Community {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Community {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrefixEntry {
    pub seq: u32,
    pub action: Action,
    pub prefix: Ipv4Net,
    /// Inclusive prefix-length range `[lo, hi]`; `None` means exact match.
    pub length_range: Option<(u8, u8)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixList {
    pub name: String,
    pub entries: Vec<PrefixEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityList {
    pub name: String,
    pub action: Action,
    pub values: Vec<Community>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Match {
    PrefixList(String),
    CommunityList(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetAction {
    LocalPreference(u32),
    Metric(u32),
    Community(Vec<Community>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub seq: u32,
    pub action: Action,
    pub matches: Vec<Match>,
    pub sets: Vec<SetAction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutePolicy {
    pub name: String,
    pub clauses: Vec<Clause>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StaticRoute {
    pub prefix: Ipv4Net,
    pub next_hop: Ipv4Addr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AclEntry {
    pub action: Action,
    /// `0.0.0.0/0` stands for `any`, a `/32` for a single host.
    pub source: Ipv4Net,
}

/// Standard IPv4 access list (source address match only).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessList {
    pub name: String,
    pub entries: Vec<AclEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BgpNeighbor {
    pub peer: Ipv4Addr,
    pub remote_asn: u32,
    pub description: Option<String>,
    pub import_policy: Option<String>,
    pub export_policy: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BgpProcess {
    pub asn: u32,
    pub router_id: Option<Ipv4Addr>,
    pub neighbors: Vec<BgpNeighbor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OspfArea {
    Id(u32),
    Dotted(Ipv4Addr),
}

impl OspfArea {
    /// Both notations name the same 32-bit area identifier.
    pub fn as_u32(self) -> u32 {
        match self {
            OspfArea::Id(id) => id,
            OspfArea::Dotted(addr) => u32::from(addr),
        }
    }
}

impl fmt::Display for OspfArea {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OspfArea::Id(id) => write!(f, "{id}"),
            OspfArea::Dotted(addr) => write!(f, "{addr}"),
        }
    }
}

impl FromStr for OspfArea {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(id) = s.parse::<u32>() {
            Ok(OspfArea::Id(id))
        } else if let Ok(addr) = s.parse::<Ipv4Addr>() {
            Ok(OspfArea::Dotted(addr))
        } else {
            Err(format!("`{s}` is not a valid OSPF area"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OspfNetwork {
    pub address: Ipv4Addr,
    pub wildcard: Ipv4Addr,
    pub area: OspfArea,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RedistProtocol {
    Bgp,
    Ospf,
    Static,
    Connected,
    Rip,
}

impl RedistProtocol {
    pub fn as_str(self) -> &'static str {
        match self {
            RedistProtocol::Bgp => "bgp",
            RedistProtocol::Ospf => "ospf",
            RedistProtocol::Static => "static",
            RedistProtocol::Connected => "connected",
            RedistProtocol::Rip => "rip",
        }
    }

    /// Whether the protocol is followed by an AS number / process id.
    pub fn takes_process(self) -> bool {
        matches!(self, RedistProtocol::Bgp | RedistProtocol::Ospf)
    }
}

impl FromStr for RedistProtocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "bgp" => RedistProtocol::Bgp,
            "ospf" => RedistProtocol::Ospf,
            "static" => RedistProtocol::Static,
            "connected" => RedistProtocol::Connected,
            "rip" => RedistProtocol::Rip,
            other => return Err(format!("unsupported redistribution source `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Redistribution {
    pub protocol: RedistProtocol,
    pub process: Option<u32>,
    /// Option phrases in source order, e.g. `subnets`, `metric 20`, `route-map NAME`.
    pub options: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OspfProcess {
    pub process_id: u32,
    pub networks: Vec<OspfNetwork>,
    pub redistributes: Vec<Redistribution>,
}

/// A well-formed stanza outside the supported subset, kept verbatim.
///
/// `path` names the enclosing container (empty for top level). For Cisco this is the block
/// header (e.g. `router bgp 65001`); for Juniper the chain of statement heads
/// (e.g. `["protocols"]`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OpaqueBlock {
    pub vendor: Vendor,
    pub path: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticConfig {
    #[serde(default)]
    pub prefix_lists: Vec<PrefixList>,
    #[serde(default)]
    pub community_lists: Vec<CommunityList>,
    #[serde(default)]
    pub route_policies: Vec<RoutePolicy>,
    #[serde(default)]
    pub static_routes: Vec<StaticRoute>,
    #[serde(default)]
    pub access_lists: Vec<AccessList>,
    #[serde(default)]
    pub bgp: Option<BgpProcess>,
    #[serde(default)]
    pub ospf: Option<OspfProcess>,
    #[serde(default)]
    pub opaque: Vec<OpaqueBlock>,
}

/// Element kinds addressed by diffs, intents and validation messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    PrefixList,
    CommunityList,
    RoutePolicy,
    StaticRoute,
    AccessList,
    Bgp,
    Ospf,
    Opaque,
}

impl ElementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::PrefixList => "prefix_list",
            ElementKind::CommunityList => "community_list",
            ElementKind::RoutePolicy => "route_policy",
            ElementKind::StaticRoute => "static_route",
            ElementKind::AccessList => "access_list",
            ElementKind::Bgp => "bgp",
            ElementKind::Ospf => "ospf",
            ElementKind::Opaque => "opaque",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An invariant violation, pinned to the element it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ElementKind,
    pub name: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} `{}`: {}", self.kind, self.name, self.message)
    }
}

impl SemanticConfig {
    pub fn is_empty(&self) -> bool {
        *self == SemanticConfig::default()
    }

    pub fn element_count(&self) -> usize {
        self.prefix_lists.len()
            + self.community_lists.len()
            + self.route_policies.len()
            + self.static_routes.len()
            + self.access_lists.len()
            + usize::from(self.bgp.is_some())
            + usize::from(self.ospf.is_some())
            + self.opaque.len()
    }

    /// Names of every declared element, in print order.
    pub fn element_names(&self) -> Vec<(ElementKind, String)> {
        let mut out = Vec::new();
        out.extend(self.prefix_lists.iter().map(|p| (ElementKind::PrefixList, p.name.clone())));
        out.extend(
            self.community_lists
                .iter()
                .map(|c| (ElementKind::CommunityList, c.name.clone())),
        );
        out.extend(self.access_lists.iter().map(|a| (ElementKind::AccessList, a.name.clone())));
        out.extend(
            self.route_policies
                .iter()
                .map(|r| (ElementKind::RoutePolicy, r.name.clone())),
        );
        out.extend(
            self.static_routes
                .iter()
                .map(|s| (ElementKind::StaticRoute, s.prefix.to_string())),
        );
        if let Some(bgp) = &self.bgp {
            out.push((ElementKind::Bgp, bgp.asn.to_string()));
        }
        if let Some(ospf) = &self.ospf {
            out.push((ElementKind::Ospf, ospf.process_id.to_string()));
        }
        out
    }

    /// Checks every structural invariant and returns all violations found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |kind, name: &str, message: String| {
            out.push(Violation {
                kind,
                name: name.to_string(),
                message,
            })
        };

        let mut seen = HashSet::new();
        for pl in &self.prefix_lists {
            if !is_identifier(&pl.name) {
                push(ElementKind::PrefixList, &pl.name, "invalid name".into());
            }
            if !seen.insert(pl.name.as_str()) {
                push(ElementKind::PrefixList, &pl.name, "declared more than once".into());
            }
            if pl.entries.is_empty() {
                push(ElementKind::PrefixList, &pl.name, "has no entries".into());
            }
            let mut last = 0;
            for e in &pl.entries {
                if e.prefix.trunc() != e.prefix {
                    push(ElementKind::PrefixList, &pl.name, format!("{} has host bits set", e.prefix));
                }
                if e.seq == 0 || e.seq <= last {
                    push(
                        ElementKind::PrefixList,
                        &pl.name,
                        format!("sequence {} is not strictly increasing", e.seq),
                    );
                }
                last = e.seq;
                if let Some((lo, hi)) = e.length_range {
                    if lo > hi || hi > 32 || lo < e.prefix.prefix_len() {
                        push(
                            ElementKind::PrefixList,
                            &pl.name,
                            format!(
                                "length range {lo}-{hi} invalid for {}",
                                e.prefix
                            ),
                        );
                    }
                }
            }
        }

        let mut seen = HashSet::new();
        for cl in &self.community_lists {
            if !is_identifier(&cl.name) {
                push(ElementKind::CommunityList, &cl.name, "invalid name".into());
            }
            if !seen.insert(cl.name.as_str()) {
                push(ElementKind::CommunityList, &cl.name, "declared more than once".into());
            }
            if cl.values.is_empty() {
                push(ElementKind::CommunityList, &cl.name, "has no values".into());
            }
        }

        let mut seen = HashSet::new();
        for acl in &self.access_lists {
            if !is_identifier(&acl.name) {
                push(ElementKind::AccessList, &acl.name, "invalid name".into());
            }
            if !seen.insert(acl.name.as_str()) {
                push(ElementKind::AccessList, &acl.name, "declared more than once".into());
            }
            if acl.entries.is_empty() {
                push(ElementKind::AccessList, &acl.name, "has no entries".into());
            }
            for e in &acl.entries {
                if e.source.trunc() != e.source {
                    push(ElementKind::AccessList, &acl.name, format!("{} has host bits set", e.source));
                }
            }
        }

        let prefix_names: HashSet<&str> =
            self.prefix_lists.iter().map(|p| p.name.as_str()).collect();
        let community_names: HashSet<&str> =
            self.community_lists.iter().map(|c| c.name.as_str()).collect();
        let mut seen = HashSet::new();
        for rp in &self.route_policies {
            if !is_identifier(&rp.name) {
                push(ElementKind::RoutePolicy, &rp.name, "invalid name".into());
            }
            if !seen.insert(rp.name.as_str()) {
                push(ElementKind::RoutePolicy, &rp.name, "declared more than once".into());
            }
            if rp.clauses.is_empty() {
                push(ElementKind::RoutePolicy, &rp.name, "has no clauses".into());
            }
            let mut last = 0;
            for c in &rp.clauses {
                if c.seq == 0 || c.seq <= last {
                    push(
                        ElementKind::RoutePolicy,
                        &rp.name,
                        format!("sequence {} is not strictly increasing", c.seq),
                    );
                }
                last = c.seq;
                for m in &c.matches {
                    match m {
                        Match::PrefixList(n) if !prefix_names.contains(n.as_str()) => push(
                            ElementKind::RoutePolicy,
                            &rp.name,
                            format!("references undefined prefix-list `{n}`"),
                        ),
                        Match::CommunityList(n) if !community_names.contains(n.as_str()) => push(
                            ElementKind::RoutePolicy,
                            &rp.name,
                            format!("references undefined community-list `{n}`"),
                        ),
                        _ => {}
                    }
                }
                for s in &c.sets {
                    if let SetAction::Community(v) = s {
                        if v.is_empty() {
                            push(
                                ElementKind::RoutePolicy,
                                &rp.name,
                                "sets an empty community".into(),
                            );
                        }
                    }
                }
            }
        }

        for sr in &self.static_routes {
            if sr.prefix.trunc() != sr.prefix {
                push(
                    ElementKind::StaticRoute,
                    &sr.prefix.to_string(),
                    "destination has host bits set".into(),
                );
            }
            if !is_unicast(sr.next_hop) {
                push(
                    ElementKind::StaticRoute,
                    &sr.prefix.to_string(),
                    format!("next hop {} is not a unicast address", sr.next_hop),
                );
            }
        }

        let policy_names: HashSet<&str> =
            self.route_policies.iter().map(|p| p.name.as_str()).collect();
        if let Some(bgp) = &self.bgp {
            let name = bgp.asn.to_string();
            if bgp.asn == 0 {
                push(ElementKind::Bgp, &name, "AS number 0 is reserved".into());
            }
            let mut peers = HashSet::new();
            for n in &bgp.neighbors {
                if !peers.insert(n.peer) {
                    push(ElementKind::Bgp, &name, format!("neighbor {} declared twice", n.peer));
                }
                if n.remote_asn == 0 {
                    push(ElementKind::Bgp, &name, format!("neighbor {} has AS 0", n.peer));
                }
                for p in n.import_policy.iter().chain(n.export_policy.iter()) {
                    if !policy_names.contains(p.as_str()) {
                        push(
                            ElementKind::Bgp,
                            &name,
                            format!("neighbor {} references undefined policy `{p}`", n.peer),
                        );
                    }
                }
                if let Some(d) = &n.description {
                    if d.trim().is_empty() || d.trim() != d || d.contains('\n') {
                        push(
                            ElementKind::Bgp,
                            &name,
                            format!("neighbor {} has a malformed description", n.peer),
                        );
                    }
                }
            }
        }

        if let Some(ospf) = &self.ospf {
            if ospf.process_id == 0 {
                push(ElementKind::Ospf, "0", "process id must be positive".into());
            }
        }
        out
    }
}

/// Configuration element names: non-empty, no whitespace or structural characters.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | '/'))
}

pub(crate) fn is_unicast(addr: Ipv4Addr) -> bool {
    !(addr.is_unspecified() || addr.is_broadcast() || addr.is_multicast())
}

/// One problem found while reading configuration text. Lines and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxIssue {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub offending_text: String,
}

impl fmt::Display for SyntaxIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}:{}: {}", self.line, self.column, self.message)?;
        if !self.offending_text.is_empty() {
            write!(f, " (`{}`)", self.offending_text)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxReport {
    pub ok: bool,
    pub issues: Vec<SyntaxIssue>,
}

/// Unrecognized but well-formed input that was kept as an opaque block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}", format_issues(.0))]
    Syntax(Vec<SyntaxIssue>),
    #[error("unsupported vendor `{0}`")]
    UnsupportedVendor(String),
    #[error("{element} cannot be expressed in {vendor} syntax: {reason}")]
    Unrepresentable {
        vendor: Vendor,
        element: String,
        reason: String,
    },
    #[error("invalid configuration: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("source and target vendor are both {0}")]
    SameVendor(Vendor),
}

fn format_issues(issues: &[SyntaxIssue]) -> String {
    match issues {
        [] => "syntax error".to_string(),
        [one] => format!("syntax error at {one}"),
        [first, rest @ ..] => format!("syntax error at {first} (and {} more)", rest.len()),
    }
}

impl ConfigError {
    pub fn issues(&self) -> &[SyntaxIssue] {
        match self {
            ConfigError::Syntax(issues) => issues,
            _ => &[],
        }
    }
}

/// Parses configuration text, returning the IR together with warnings for stanzas kept opaque.
pub fn parse_with_warnings(
    text: &str,
    vendor: Vendor,
) -> Result<(SemanticConfig, Vec<ParseWarning>), ConfigError> {
    let (mut config, warnings, issues) = match vendor {
        Vendor::Cisco => cisco::parse(text),
        Vendor::Juniper => juniper::parse(text),
    };
    // Opaque stanzas are unordered; a stable sort by container keeps the IR canonical.
    config.opaque.sort_by(|a, b| a.path.cmp(&b.path));
    if issues.is_empty() {
        Ok((config, warnings))
    } else {
        Err(ConfigError::Syntax(issues))
    }
}

pub fn parse(text: &str, vendor: Vendor) -> Result<SemanticConfig, ConfigError> {
    parse_with_warnings(text, vendor).map(|(c, _)| c)
}

/// Renders the IR in canonical vendor syntax.
pub fn print(config: &SemanticConfig, vendor: Vendor) -> Result<String, ConfigError> {
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(ConfigError::Invalid(violations));
    }
    if let Some(foreign) = config.opaque.iter().find(|o| o.vendor != vendor) {
        return Err(ConfigError::Unrepresentable {
            vendor,
            element: "opaque stanza".into(),
            reason: format!(
                "`{}` was written in {} syntax",
                foreign.text.lines().next().unwrap_or_default(),
                foreign.vendor
            ),
        });
    }
    match vendor {
        Vendor::Cisco => cisco::print(config),
        Vendor::Juniper => juniper::print(config),
    }
}

pub fn translate(text: &str, from: Vendor, to: Vendor) -> Result<String, ConfigError> {
    if from == to {
        return Err(ConfigError::SameVendor(from));
    }
    print(&parse(text, from)?, to)
}

/// Never fails: every problem becomes an issue in the report.
pub fn check_syntax(text: &str, vendor: Vendor) -> SyntaxReport {
    let issues = match parse_with_warnings(text, vendor) {
        Ok(_) => Vec::new(),
        Err(ConfigError::Syntax(issues)) => issues,
        Err(other) => vec![SyntaxIssue {
            line: 0,
            column: 0,
            message: other.to_string(),
            offending_text: String::new(),
        }],
    };
    SyntaxReport {
        ok: issues.is_empty(),
        issues,
    }
}

/// Guesses the dialect of a snippet: brace/semicolon structure means Juniper.
pub fn detect_vendor(text: &str) -> Vendor {
    let juniper_lines = text
        .lines()
        .map(str::trim)
        .filter(|l| l.ends_with('{') || l.ends_with(';') || *l == "}")
        .count();
    if juniper_lines > 0 && juniper_lines * 2 >= text.lines().filter(|l| !l.trim().is_empty()).count() {
        Vendor::Juniper
    } else {
        Vendor::Cisco
    }
}

/// Counts lines that the vendor grammars recognize as supported statements, tolerating
/// everything else (fragments, prose, unresolved references).
pub fn recognizable_lines(text: &str) -> usize {
    text.lines()
        .filter(|l| cisco::recognizes_line(l) || juniper::recognizes_line(l))
        .count()
}

#[cfg(test)]
mod tests;
