//! Cisco IOS-style syntax: one statement per line, child statements indented under a block
//! header (`route-map`, `router bgp`, `router ospf`, `ip access-list standard`).

use std::collections::HashMap;
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;

use super::lex::{
    issue, mask_len, parse_action, parse_addr, parse_len, parse_positive, parse_prefix,
    parse_u32, wildcard_len, wildcard_of, words, Word,
};
use super::{
    AccessList, AclEntry, Action, BgpNeighbor, BgpProcess, Clause, Community, CommunityList,
    ConfigError, ElementKind, Match, OpaqueBlock, OspfArea, OspfNetwork, OspfProcess,
    ParseWarning, PrefixEntry, PrefixList, RedistProtocol, Redistribution, RoutePolicy,
    SemanticConfig, SetAction, StaticRoute, SyntaxIssue, Vendor,
};

struct Line<'a> {
    no: usize,
    child: bool,
    text: &'a str,
    words: Vec<Word<'a>>,
}

impl<'a> Line<'a> {
    fn word(&self, i: usize) -> Option<&'a str> {
        self.words.get(i).map(|w| w.text)
    }

    fn col(&self, i: usize) -> usize {
        self.words
            .get(i)
            .map(|w| w.col)
            .unwrap_or_else(|| self.words.last().map(|w| w.col + w.text.len() + 1).unwrap_or(1))
    }

    /// Raw text from word `i` to the end of the line.
    fn rest(&self, i: usize) -> &'a str {
        match self.words.get(i) {
            Some(w) => {
                let start = w.text.as_ptr() as usize - self.text.as_ptr() as usize;
                self.text[start..].trim_end()
            }
            None => "",
        }
    }
}

fn logical_lines(text: &str) -> Vec<Line<'_>> {
    let raw: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| {
            let t = l.trim();
            !(t.is_empty() || t.starts_with('!') || t == "end")
        })
        .collect();
    let indent = |l: &str| l.chars().take_while(|c| c.is_whitespace()).count();
    let base = raw.iter().map(|(_, l)| indent(l)).min().unwrap_or(0);
    raw.into_iter()
        .map(|(no, l)| {
            let skip: usize = l.chars().take(base).map(char::len_utf8).sum();
            let l = &l[skip..];
            let text = l.trim();
            Line {
                no,
                child: indent(l) > 0,
                text,
                words: words(text),
            }
        })
        .collect()
}

#[derive(Default)]
struct Parser {
    cfg: SemanticConfig,
    issues: Vec<SyntaxIssue>,
    warnings: Vec<ParseWarning>,
    decl: HashMap<(ElementKind, String), usize>,
}

type Res<T> = Result<T, (usize, String)>;

pub(super) fn parse(text: &str) -> (SemanticConfig, Vec<ParseWarning>, Vec<SyntaxIssue>) {
    parse_inner(text, true)
}

fn parse_inner(text: &str, check_refs: bool) -> (SemanticConfig, Vec<ParseWarning>, Vec<SyntaxIssue>) {
    let lines = logical_lines(text);
    let mut p = Parser::default();
    let mut i = 0;
    while i < lines.len() {
        let mut j = i + 1;
        while j < lines.len() && lines[j].child {
            j += 1;
        }
        if lines[i].child {
            let l = &lines[i];
            p.issues
                .push(issue(l.no, 1, "indented line outside of a block", l.text));
        } else {
            p.block(&lines[i], &lines[i + 1..j]);
        }
        i = j;
    }
    p.finish(check_refs)
}

impl Parser {
    fn fail(&mut self, line: &Line, word: usize, message: impl Into<String>) {
        let offending = line.word(word).unwrap_or(line.text);
        self.issues
            .push(issue(line.no, line.col(word), message, offending));
    }

    fn report<T>(&mut self, line: &Line, r: Res<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err((word, msg)) => {
                self.fail(line, word, msg);
                None
            }
        }
    }

    fn declare(&mut self, kind: ElementKind, name: &str, line: usize) {
        self.decl.entry((kind, name.to_string())).or_insert(line);
    }

    fn opaque_block(&mut self, head: &Line, children: &[Line]) {
        let mut text = head.text.to_string();
        for c in children {
            text.push_str("\n ");
            text.push_str(c.text);
        }
        self.warnings.push(ParseWarning {
            line: head.no,
            message: format!("unsupported stanza kept verbatim: `{}`", head.text),
        });
        self.cfg.opaque.push(OpaqueBlock {
            vendor: Vendor::Cisco,
            path: Vec::new(),
            text,
        });
    }

    fn opaque_child(&mut self, header: &str, line: &Line) {
        self.warnings.push(ParseWarning {
            line: line.no,
            message: format!("unsupported statement under `{header}` kept verbatim"),
        });
        self.cfg.opaque.push(OpaqueBlock {
            vendor: Vendor::Cisco,
            path: vec![header.to_string()],
            text: line.text.to_string(),
        });
    }

    fn no_children(&mut self, children: &[Line]) {
        for c in children {
            self.issues.push(issue(
                c.no,
                1,
                "unexpected indented line: the preceding statement takes no sub-commands",
                c.text,
            ));
        }
    }

    fn block(&mut self, head: &Line, children: &[Line]) {
        match (head.word(0), head.word(1)) {
            (Some("ip"), Some("route")) => {
                self.static_route(head);
                self.no_children(children);
            }
            (Some("ip"), Some("prefix-list")) => {
                self.prefix_list(head);
                self.no_children(children);
            }
            (Some("ip"), Some("community-list")) => {
                if !self.community_list(head) {
                    self.opaque_block(head, children);
                } else {
                    self.no_children(children);
                }
            }
            (Some("ip"), Some("access-list")) if head.word(2) == Some("standard") => {
                self.named_acl(head, children)
            }
            (Some("access-list"), _) => {
                if !self.numbered_acl(head) {
                    self.opaque_block(head, children);
                } else {
                    self.no_children(children);
                }
            }
            (Some("route-map"), _) => self.route_map(head, children),
            (Some("router"), Some("bgp")) => self.bgp(head, children),
            (Some("router"), Some("ospf")) => self.ospf(head, children),
            _ => self.opaque_block(head, children),
        }
    }

    fn static_route(&mut self, l: &Line) {
        if l.words.len() < 5 {
            let missing = match l.words.len() {
                2 => "destination, mask and next hop",
                3 => "mask and next hop",
                _ => "next hop",
            };
            self.fail(l, l.words.len(), format!("incomplete `ip route`: missing {missing}"));
            return;
        }
        let next_hop_word = l.word(4).unwrap_or_default();
        let interface_style = next_hop_word
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic());
        if interface_style || l.words.len() > 5 {
            // Interface next hops, distances, tags and names are outside the model.
            self.opaque_block(l, &[]);
            return;
        }
        let r = (|| -> Res<StaticRoute> {
            let addr = parse_addr(l.word(2).unwrap()).map_err(|e| (2, e))?;
            let mask = parse_addr(l.word(3).unwrap()).map_err(|e| (3, e))?;
            let len = mask_len(mask).map_err(|e| (3, e))?;
            let prefix = network(addr, len).map_err(|e| (2, e))?;
            let next_hop = parse_addr(next_hop_word).map_err(|e| (4, e))?;
            Ok(StaticRoute { prefix, next_hop })
        })();
        if let Some(route) = self.report(l, r) {
            self.declare(ElementKind::StaticRoute, &route.prefix.to_string(), l.no);
            self.cfg.static_routes.push(route);
        }
    }

    fn prefix_list(&mut self, l: &Line) {
        let Some(name) = l.word(2) else {
            self.fail(l, 2, "incomplete `ip prefix-list`: missing name");
            return;
        };
        if l.word(3) == Some("description") {
            self.warnings.push(ParseWarning {
                line: l.no,
                message: format!("prefix-list description for `{name}` ignored"),
            });
            return;
        }
        let last_seq = self
            .cfg
            .prefix_lists
            .iter()
            .find(|p| p.name == name)
            .and_then(|p| p.entries.last())
            .map(|e| e.seq)
            .unwrap_or(0);
        let r = (|| -> Res<PrefixEntry> {
            let mut i = 3;
            let seq = if l.word(i) == Some("seq") {
                let s = l.word(i + 1).ok_or((i + 1, "missing sequence number".to_string()))?;
                i += 2;
                parse_positive(s, "sequence number").map_err(|e| (i - 1, e))?
            } else {
                last_seq + 5
            };
            let action = parse_action(l.word(i).ok_or((i, "missing permit/deny".to_string()))?)
                .map_err(|e| (i, e))?;
            let prefix_word = l.word(i + 1).ok_or((i + 1, "missing prefix".to_string()))?;
            let prefix = parse_prefix(prefix_word).map_err(|e| (i + 1, e))?;
            ensure_network(&prefix).map_err(|e| (i + 1, e))?;
            i += 2;
            let (mut ge, mut le) = (None, None);
            while let Some(kw) = l.word(i) {
                let slot = match kw {
                    "ge" => &mut ge,
                    "le" => &mut le,
                    other => return Err((i, format!("unexpected token `{other}`"))),
                };
                if slot.is_some() {
                    return Err((i, format!("`{kw}` given twice")));
                }
                let v = l.word(i + 1).ok_or((i + 1, format!("missing value after `{kw}`")))?;
                *slot = Some(parse_len(v).map_err(|e| (i + 1, e))?);
                i += 2;
            }
            let len = prefix.prefix_len();
            let length_range = match (ge, le) {
                (None, None) => None,
                (Some(g), None) => Some((g, 32)),
                (None, Some(h)) => Some((len, h)),
                (Some(g), Some(h)) => Some((g, h)),
            };
            if let Some((lo, hi)) = length_range {
                if lo < len || lo > hi {
                    return Err((i.saturating_sub(1), format!(
                        "length range {lo}-{hi} is inconsistent with {prefix}"
                    )));
                }
            }
            if seq <= last_seq {
                return Err((4, format!("sequence {seq} must follow {last_seq}")));
            }
            Ok(PrefixEntry {
                seq,
                action,
                prefix,
                length_range,
            })
        })();
        if let Some(entry) = self.report(l, r) {
            self.declare(ElementKind::PrefixList, name, l.no);
            match self.cfg.prefix_lists.iter_mut().find(|p| p.name == name) {
                Some(pl) => pl.entries.push(entry),
                None => self.cfg.prefix_lists.push(PrefixList {
                    name: name.to_string(),
                    entries: vec![entry],
                }),
            }
        }
    }

    /// Returns false for well-formed variants outside the model (expanded lists).
    fn community_list(&mut self, l: &Line) -> bool {
        let (name_idx, name) = match l.word(2) {
            Some("standard") => (3, l.word(3)),
            Some("expanded") => return false,
            Some(n) => match n.parse::<u32>() {
                Ok(1..=99) => (2, Some(n)),
                Ok(_) => return false,
                Err(_) => (2, Some(n)),
            },
            None => (2, None),
        };
        let Some(name) = name else {
            self.fail(l, name_idx, "incomplete `ip community-list`: missing name");
            return true;
        };
        let r = (|| -> Res<CommunityList> {
            let ai = name_idx + 1;
            let action = parse_action(l.word(ai).ok_or((ai, "missing permit/deny".to_string()))?)
                .map_err(|e| (ai, e))?;
            let mut values = Vec::new();
            for i in ai + 1..l.words.len() {
                values.push(l.word(i).unwrap().parse::<Community>().map_err(|e| (i, e))?);
            }
            if values.is_empty() {
                return Err((ai + 1, "missing community values".into()));
            }
            Ok(CommunityList {
                name: name.to_string(),
                action,
                values,
            })
        })();
        if let Some(cl) = self.report(l, r) {
            if self.cfg.community_lists.iter().any(|c| c.name == cl.name) {
                self.fail(
                    l,
                    name_idx,
                    format!("community-list `{name}` declared more than once"),
                );
            } else {
                self.declare(ElementKind::CommunityList, name, l.no);
                self.cfg.community_lists.push(cl);
            }
        }
        true
    }

    fn acl_entry(&mut self, l: &Line, at: usize) -> Option<Option<AclEntry>> {
        let r = (|| -> Res<Option<AclEntry>> {
            let action =
                parse_action(l.word(at).ok_or((at, "missing permit/deny".to_string()))?)
                    .map_err(|e| (at, e))?;
            let (source, used) = match l.word(at + 1) {
                None => return Err((at + 1, "missing source address".into())),
                Some("any") => (Ipv4Net::default(), 1),
                Some("host") => {
                    let a = l.word(at + 2).ok_or((at + 2, "missing host address".to_string()))?;
                    let a = parse_addr(a).map_err(|e| (at + 2, e))?;
                    (Ipv4Net::new(a, 32).unwrap(), 2)
                }
                Some(a) => {
                    let addr = parse_addr(a).map_err(|e| (at + 1, e))?;
                    match l.word(at + 2) {
                        Some(w) if w.parse::<Ipv4Addr>().is_ok() => {
                            let len = wildcard_len(w.parse().unwrap()).map_err(|e| (at + 2, e))?;
                            (network(addr, len).map_err(|e| (at + 1, e))?, 2)
                        }
                        _ => (Ipv4Net::new(addr, 32).unwrap(), 1),
                    }
                }
            };
            if l.words.len() > at + 1 + used {
                // trailing `log` and friends
                return Ok(None);
            }
            Ok(Some(AclEntry { action, source }))
        })();
        self.report(l, r)
    }

    fn numbered_acl(&mut self, l: &Line) -> bool {
        let Some(num) = l.word(1) else {
            self.fail(l, 1, "incomplete `access-list`: missing number");
            return true;
        };
        let standard = matches!(num.parse::<u32>(), Ok(1..=99) | Ok(1300..=1999));
        if !standard || l.word(2) == Some("remark") {
            return false;
        }
        match self.acl_entry(l, 2) {
            Some(Some(entry)) => {
                self.declare(ElementKind::AccessList, num, l.no);
                self.push_acl(num, entry);
                true
            }
            Some(None) => false,
            None => true,
        }
    }

    fn push_acl(&mut self, name: &str, entry: AclEntry) {
        match self.cfg.access_lists.iter_mut().find(|a| a.name == name) {
            Some(acl) => acl.entries.push(entry),
            None => self.cfg.access_lists.push(AccessList {
                name: name.to_string(),
                entries: vec![entry],
            }),
        }
    }

    fn named_acl(&mut self, head: &Line, children: &[Line]) {
        let Some(name) = head.word(3) else {
            self.fail(head, 3, "incomplete `ip access-list standard`: missing name");
            return;
        };
        if head.words.len() > 4 {
            self.fail(head, 4, "unexpected token");
            return;
        }
        if self.cfg.access_lists.iter().any(|a| a.name == name) {
            self.fail(head, 3, format!("access-list `{name}` declared more than once"));
            return;
        }
        self.declare(ElementKind::AccessList, name, head.no);
        self.cfg.access_lists.push(AccessList {
            name: name.to_string(),
            entries: Vec::new(),
        });
        let header = format!("ip access-list standard {name}");
        for c in children {
            let at = usize::from(c.word(0).is_some_and(|w| w.parse::<u32>().is_ok()));
            match c.word(at) {
                Some("permit") | Some("deny") => match self.acl_entry(c, at) {
                    Some(Some(entry)) => self.push_acl(name, entry),
                    Some(None) => self.opaque_child(&header, c),
                    None => {}
                },
                _ => self.opaque_child(&header, c),
            }
        }
    }

    fn route_map(&mut self, head: &Line, children: &[Line]) {
        let Some(name) = head.word(1) else {
            self.fail(head, 1, "incomplete `route-map`: missing name");
            return;
        };
        let r = (|| -> Res<(Action, u32)> {
            let action = match head.word(2) {
                None => Action::Permit,
                Some(a) => parse_action(a).map_err(|e| (2, e))?,
            };
            let seq = match head.word(3) {
                None => 10,
                Some(s) => parse_positive(s, "sequence number").map_err(|e| (3, e))?,
            };
            if head.words.len() > 4 {
                return Err((4, "unexpected token".into()));
            }
            Ok((action, seq))
        })();
        let Some((action, seq)) = self.report(head, r) else {
            return;
        };
        let header = format!("route-map {name} {action} {seq}");
        let mut clause = Clause {
            seq,
            action,
            matches: Vec::new(),
            sets: Vec::new(),
        };
        for c in children {
            match (c.word(0), c.word(1), c.word(2)) {
                (Some("match"), Some("ip"), Some("address")) if c.word(3) == Some("prefix-list") => {
                    if c.words.len() < 5 {
                        self.fail(c, 4, "missing prefix-list name");
                    }
                    for i in 4..c.words.len() {
                        clause
                            .matches
                            .push(Match::PrefixList(c.word(i).unwrap().to_string()));
                    }
                }
                (Some("match"), Some("community"), _) => {
                    if c.words.iter().any(|w| w.text == "exact-match") {
                        self.opaque_child(&header, c);
                        continue;
                    }
                    if c.words.len() < 3 {
                        self.fail(c, 2, "missing community-list name");
                    }
                    for i in 2..c.words.len() {
                        clause
                            .matches
                            .push(Match::CommunityList(c.word(i).unwrap().to_string()));
                    }
                }
                (Some("set"), Some(kw @ ("local-preference" | "metric")), v) => {
                    if c.words.len() > 3 {
                        // metric with bandwidth/delay vectors, +/- offsets
                        self.opaque_child(&header, c);
                        continue;
                    }
                    let r = v
                        .ok_or((2, format!("missing {kw} value")))
                        .and_then(|v| parse_u32(v, kw).map_err(|e| (2, e)));
                    if let Some(n) = self.report(c, r) {
                        clause.sets.push(if kw == "metric" {
                            SetAction::Metric(n)
                        } else {
                            SetAction::LocalPreference(n)
                        });
                    }
                }
                (Some("set"), Some("community"), _) => {
                    if c.words.len() < 3 {
                        self.fail(c, 2, "missing community values");
                        continue;
                    }
                    if c.words.iter().any(|w| w.text == "additive" || w.text == "none") {
                        self.opaque_child(&header, c);
                        continue;
                    }
                    let r: Res<Vec<Community>> = (2..c.words.len())
                        .map(|i| c.word(i).unwrap().parse::<Community>().map_err(|e| (i, e)))
                        .collect();
                    if let Some(values) = self.report(c, r) {
                        clause.sets.push(SetAction::Community(values));
                    }
                }
                (Some("description"), _, _) => self.warnings.push(ParseWarning {
                    line: c.no,
                    message: format!("route-map description under `{header}` ignored"),
                }),
                _ => self.opaque_child(&header, c),
            }
        }

        self.declare(ElementKind::RoutePolicy, name, head.no);
        let idx = match self.cfg.route_policies.iter().position(|p| p.name == name) {
            Some(i) => i,
            None => {
                self.cfg.route_policies.push(RoutePolicy {
                    name: name.to_string(),
                    clauses: Vec::new(),
                });
                self.cfg.route_policies.len() - 1
            }
        };
        let clauses = &mut self.cfg.route_policies[idx].clauses;
        match clauses.binary_search_by_key(&seq, |c| c.seq) {
            Ok(_) => self.fail(head, 3, format!("route-map `{name}` sequence {seq} declared twice")),
            Err(pos) => clauses.insert(pos, clause),
        }
    }

    fn bgp(&mut self, head: &Line, children: &[Line]) {
        let r = head
            .word(2)
            .ok_or((2, "incomplete `router bgp`: missing AS number".to_string()))
            .and_then(|a| parse_positive(a, "AS number").map_err(|e| (2, e)));
        let Some(asn) = self.report(head, r) else {
            return;
        };
        if head.words.len() > 3 {
            self.fail(head, 3, "unexpected token");
            return;
        }
        match &self.cfg.bgp {
            Some(b) if b.asn != asn => {
                self.fail(head, 2, format!("a BGP process with AS {} already exists", b.asn));
                return;
            }
            Some(_) => {}
            None => {
                self.declare(ElementKind::Bgp, &asn.to_string(), head.no);
                self.cfg.bgp = Some(BgpProcess {
                    asn,
                    router_id: None,
                    neighbors: Vec::new(),
                });
            }
        }
        let header = format!("router bgp {asn}");
        for c in children {
            match (c.word(0), c.word(1)) {
                (Some("bgp"), Some("router-id")) => {
                    let r = c
                        .word(2)
                        .ok_or((2, "missing router id".to_string()))
                        .and_then(|a| parse_addr(a).map_err(|e| (2, e)));
                    if let Some(id) = self.report(c, r) {
                        self.cfg.bgp.as_mut().unwrap().router_id = Some(id);
                    }
                }
                (Some("neighbor"), Some(peer)) => self.bgp_neighbor(&header, c, peer),
                _ => self.opaque_child(&header, c),
            }
        }
    }

    fn bgp_neighbor(&mut self, header: &str, c: &Line, peer: &str) {
        let known = matches!(c.word(2), Some("remote-as" | "description" | "route-map"));
        let Ok(peer) = peer.parse::<Ipv4Addr>() else {
            if known {
                // peer-group names are outside the model
                self.opaque_child(header, c);
            } else {
                self.opaque_child(header, c);
            }
            return;
        };
        let bgp = self.cfg.bgp.as_mut().unwrap();
        let existing = bgp.neighbors.iter().position(|n| n.peer == peer);
        match c.word(2) {
            Some("remote-as") => {
                let r = c
                    .word(3)
                    .ok_or((3, "missing remote AS".to_string()))
                    .and_then(|a| parse_positive(a, "remote AS").map_err(|e| (3, e)))
                    .and_then(|a| {
                        if c.words.len() > 4 {
                            Err((4, "unexpected token".to_string()))
                        } else {
                            Ok(a)
                        }
                    });
                if let Some(asn) = self.report(c, r) {
                    let bgp = self.cfg.bgp.as_mut().unwrap();
                    match existing {
                        Some(i) => bgp.neighbors[i].remote_asn = asn,
                        None => bgp.neighbors.push(BgpNeighbor {
                            peer,
                            remote_asn: asn,
                            description: None,
                            import_policy: None,
                            export_policy: None,
                        }),
                    }
                }
            }
            Some(kw @ ("description" | "route-map")) => {
                let Some(i) = existing else {
                    self.fail(c, 1, format!("neighbor {peer} used before `remote-as`"));
                    return;
                };
                if kw == "description" {
                    let text = c.rest(3);
                    if text.is_empty() {
                        self.fail(c, 3, "missing description text");
                        return;
                    }
                    self.cfg.bgp.as_mut().unwrap().neighbors[i].description = Some(text.to_string());
                } else {
                    let (Some(policy), Some(dir)) = (c.word(3), c.word(4)) else {
                        self.fail(c, c.words.len(), "expected `route-map NAME in|out`");
                        return;
                    };
                    let n = &mut self.cfg.bgp.as_mut().unwrap().neighbors[i];
                    match dir {
                        "in" => n.import_policy = Some(policy.to_string()),
                        "out" => n.export_policy = Some(policy.to_string()),
                        _ => self.fail(c, 4, format!("invalid direction `{dir}`: expected `in` or `out`")),
                    }
                }
            }
            _ => self.opaque_child(header, c),
        }
    }

    fn ospf(&mut self, head: &Line, children: &[Line]) {
        let r = head
            .word(2)
            .ok_or((2, "incomplete `router ospf`: missing process id".to_string()))
            .and_then(|a| parse_positive(a, "process id").map_err(|e| (2, e)));
        let Some(pid) = self.report(head, r) else {
            return;
        };
        if head.words.len() > 3 || self.cfg.ospf.as_ref().is_some_and(|o| o.process_id != pid) {
            self.opaque_block(head, children);
            return;
        }
        if self.cfg.ospf.is_none() {
            self.declare(ElementKind::Ospf, &pid.to_string(), head.no);
            self.cfg.ospf = Some(OspfProcess {
                process_id: pid,
                networks: Vec::new(),
                redistributes: Vec::new(),
            });
        }
        let header = format!("router ospf {pid}");
        for c in children {
            match c.word(0) {
                Some("network") => {
                    let r = (|| -> Res<OspfNetwork> {
                        if c.words.len() < 5 {
                            return Err((c.words.len(), "expected `network ADDRESS WILDCARD area AREA`".into()));
                        }
                        let address = parse_addr(c.word(1).unwrap()).map_err(|e| (1, e))?;
                        let wildcard = parse_addr(c.word(2).unwrap()).map_err(|e| (2, e))?;
                        if c.word(3) != Some("area") {
                            return Err((3, format!("invalid keyword `{}`: expected `area`", c.word(3).unwrap())));
                        }
                        let area = c.word(4).unwrap().parse::<OspfArea>().map_err(|e| (4, e))?;
                        if c.words.len() > 5 {
                            return Err((5, "unexpected token".into()));
                        }
                        Ok(OspfNetwork { address, wildcard, area })
                    })();
                    if let Some(n) = self.report(c, r) {
                        self.cfg.ospf.as_mut().unwrap().networks.push(n);
                    }
                }
                Some("redistribute") => match redistribution(c) {
                    Ok(Some(r)) => self.cfg.ospf.as_mut().unwrap().redistributes.push(r),
                    Ok(None) => self.opaque_child(&header, c),
                    Err((i, m)) => self.fail(c, i, m),
                },
                _ => self.opaque_child(&header, c),
            }
        }
    }

    fn finish(mut self, check_refs: bool) -> (SemanticConfig, Vec<ParseWarning>, Vec<SyntaxIssue>) {
        for v in self.cfg.validate() {
            let reference = v.message.starts_with("references undefined")
                || v.message.contains("undefined policy");
            if reference && !check_refs {
                continue;
            }
            let line = self.decl.get(&(v.kind, v.name.clone())).copied().unwrap_or(0);
            self.issues.push(issue(line, 1, v.to_string(), &v.name));
        }
        self.issues.sort_by_key(|i| (i.line, i.column));
        (self.cfg, self.warnings, self.issues)
    }
}

/// `Ok(None)` marks a well-formed redistribution outside the model.
fn redistribution(c: &Line) -> Res<Option<Redistribution>> {
    let Some(proto) = c.word(1) else {
        return Err((1, "missing redistribution source".into()));
    };
    let Ok(protocol) = proto.parse::<RedistProtocol>() else {
        return Ok(None);
    };
    let mut i = 2;
    let process = if protocol.takes_process() {
        let p = c
            .word(2)
            .ok_or((2, format!("missing {proto} process or AS number")))?;
        i = 3;
        Some(parse_positive(p, "process or AS number").map_err(|e| (2, e))?)
    } else {
        None
    };
    let mut options = Vec::new();
    while let Some(w) = c.word(i) {
        match w {
            "subnets" => {
                options.push(w.to_string());
                i += 1;
            }
            "metric" | "metric-type" | "tag" | "route-map" => {
                let v = c.word(i + 1).ok_or((i + 1, format!("missing value after `{w}`")))?;
                if w != "route-map" {
                    parse_u32(v, w).map_err(|e| (i + 1, e))?;
                }
                options.push(format!("{w} {v}"));
                i += 2;
            }
            _ => return Ok(None),
        }
    }
    Ok(Some(Redistribution {
        protocol,
        process,
        options,
    }))
}

fn network(addr: Ipv4Addr, len: u8) -> Result<Ipv4Net, String> {
    let net = Ipv4Net::new(addr, len).map_err(|e| e.to_string())?;
    ensure_network(&net)?;
    Ok(net)
}

pub(super) fn ensure_network(net: &Ipv4Net) -> Result<(), String> {
    if net.trunc() != *net {
        Err(format!("{net} has host bits set"))
    } else {
        Ok(())
    }
}

fn acl_source(net: &Ipv4Net) -> String {
    match net.prefix_len() {
        0 => "any".to_string(),
        32 => format!("host {}", net.addr()),
        _ => format!("{} {}", net.addr(), wildcard_of(net)),
    }
}

fn is_numbered_standard(name: &str) -> bool {
    matches!(name.parse::<u32>(), Ok(1..=99) | Ok(1300..=1999))
}

fn prefix_range(e: &PrefixEntry) -> String {
    let len = e.prefix.prefix_len();
    match e.length_range {
        None => String::new(),
        Some((lo, hi)) => {
            let mut s = String::new();
            if lo > len {
                s.push_str(&format!(" ge {lo}"));
            }
            if hi < 32 || lo == len {
                s.push_str(&format!(" le {hi}"));
            }
            s
        }
    }
}

pub(super) fn print(cfg: &SemanticConfig) -> Result<String, ConfigError> {
    let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut top = Vec::new();
    for o in &cfg.opaque {
        match o.path.as_slice() {
            [] => top.push(o.text.as_str()),
            [header] => children.entry(header.as_str()).or_default().push(o.text.as_str()),
            _ => {
                return Err(ConfigError::Unrepresentable {
                    vendor: Vendor::Cisco,
                    element: "opaque stanza".into(),
                    reason: format!("nested path {:?} has no Cisco equivalent", o.path),
                })
            }
        }
    }
    let mut out: Vec<String> = Vec::new();
    let mut block = |out: &mut Vec<String>, header: String| {
        let extra = children.remove(header.as_str()).unwrap_or_default();
        out.push(header);
        extra
    };
    let flush = |out: &mut Vec<String>, extra: Vec<&str>| {
        out.extend(extra.into_iter().map(|t| format!(" {t}")));
    };

    for pl in &cfg.prefix_lists {
        for e in &pl.entries {
            out.push(format!(
                "ip prefix-list {} seq {} {} {}{}",
                pl.name,
                e.seq,
                e.action,
                e.prefix,
                prefix_range(e)
            ));
        }
    }
    for cl in &cfg.community_lists {
        let values: Vec<String> = cl.values.iter().map(Community::to_string).collect();
        out.push(format!(
            "ip community-list standard {} {} {}",
            cl.name,
            cl.action,
            values.join(" ")
        ));
    }
    for acl in &cfg.access_lists {
        if is_numbered_standard(&acl.name) {
            for e in &acl.entries {
                out.push(format!("access-list {} {} {}", acl.name, e.action, acl_source(&e.source)));
            }
        } else {
            let extra = block(&mut out, format!("ip access-list standard {}", acl.name));
            for e in &acl.entries {
                out.push(format!(" {} {}", e.action, acl_source(&e.source)));
            }
            flush(&mut out, extra);
        }
    }
    for rp in &cfg.route_policies {
        for c in &rp.clauses {
            let extra = block(&mut out, format!("route-map {} {} {}", rp.name, c.action, c.seq));
            for m in &c.matches {
                out.push(match m {
                    Match::PrefixList(n) => format!(" match ip address prefix-list {n}"),
                    Match::CommunityList(n) => format!(" match community {n}"),
                });
            }
            for s in &c.sets {
                out.push(match s {
                    SetAction::LocalPreference(n) => format!(" set local-preference {n}"),
                    SetAction::Metric(n) => format!(" set metric {n}"),
                    SetAction::Community(v) => format!(
                        " set community {}",
                        v.iter().map(Community::to_string).collect::<Vec<_>>().join(" ")
                    ),
                });
            }
            flush(&mut out, extra);
        }
    }
    for sr in &cfg.static_routes {
        out.push(format!(
            "ip route {} {} {}",
            sr.prefix.addr(),
            sr.prefix.netmask(),
            sr.next_hop
        ));
    }
    if let Some(bgp) = &cfg.bgp {
        let extra = block(&mut out, format!("router bgp {}", bgp.asn));
        if let Some(id) = bgp.router_id {
            out.push(format!(" bgp router-id {id}"));
        }
        for n in &bgp.neighbors {
            out.push(format!(" neighbor {} remote-as {}", n.peer, n.remote_asn));
            if let Some(d) = &n.description {
                out.push(format!(" neighbor {} description {d}", n.peer));
            }
            if let Some(p) = &n.import_policy {
                out.push(format!(" neighbor {} route-map {p} in", n.peer));
            }
            if let Some(p) = &n.export_policy {
                out.push(format!(" neighbor {} route-map {p} out", n.peer));
            }
        }
        flush(&mut out, extra);
    }
    if let Some(ospf) = &cfg.ospf {
        let extra = block(&mut out, format!("router ospf {}", ospf.process_id));
        for r in &ospf.redistributes {
            let mut line = format!(" redistribute {}", r.protocol.as_str());
            if let Some(p) = r.process {
                line.push_str(&format!(" {p}"));
            }
            for o in &r.options {
                line.push(' ');
                line.push_str(o);
            }
            out.push(line);
        }
        for n in &ospf.networks {
            out.push(format!(" network {} {} area {}", n.address, n.wildcard, n.area));
        }
        flush(&mut out, extra);
    }
    if let Some((header, _)) = children.iter().next() {
        return Err(ConfigError::Unrepresentable {
            vendor: Vendor::Cisco,
            element: "opaque stanza".into(),
            reason: format!("no `{header}` block to attach it to"),
        });
    }
    out.extend(top.into_iter().map(str::to_string));
    if out.is_empty() {
        Ok(String::new())
    } else {
        Ok(out.join("\n") + "\n")
    }
}

/// Tolerant per-line recognizer used when scoring candidate snippets.
pub(super) fn recognizes_line(line: &str) -> bool {
    let t = line.trim();
    if t.is_empty() || t.contains('{') || t.contains('}') || t.ends_with(';') {
        return false;
    }
    let accepted = |text: &str| {
        let (cfg, _, issues) = parse_inner(text, false);
        issues.is_empty() && cfg.opaque.is_empty() && !cfg.is_empty()
    };
    if accepted(t) {
        return true;
    }
    ["route-map X permit 10", "router bgp 1", "router ospf 1", "ip access-list standard X"]
        .iter()
        .any(|header| {
            let (base, _, _) = parse_inner(header, false);
            let text = format!("{header}\n {t}");
            let (cfg, _, issues) = parse_inner(&text, false);
            issues.is_empty() && cfg.opaque.is_empty() && cfg != base
        })
}
