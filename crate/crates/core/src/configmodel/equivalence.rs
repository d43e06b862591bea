//! Attribute-level equivalence of two configurations after normalizing vendor defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;

use serde::{Deserialize, Serialize};

use super::{
    parse, Action, Clause, ConfigError, ElementKind, Match, PrefixEntry, RoutePolicy,
    SemanticConfig, SetAction, Vendor,
};

/// One attribute that differs between the two sides. `None` marks an absent element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementDiff {
    pub element_kind: ElementKind,
    pub element_name: String,
    pub field_path: String,
    pub left_value: Option<String>,
    pub right_value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub diffs: Vec<ElementDiff>,
}

pub fn check_equivalence(
    left: &str,
    left_vendor: Vendor,
    right: &str,
    right_vendor: Vendor,
) -> Result<EquivalenceReport, ConfigError> {
    Ok(compare(&parse(left, left_vendor)?, &parse(right, right_vendor)?))
}

struct Diffs(Vec<ElementDiff>);

impl Diffs {
    fn push(
        &mut self,
        kind: ElementKind,
        name: &str,
        field: impl Into<String>,
        left: Option<String>,
        right: Option<String>,
    ) {
        if left != right {
            self.0.push(ElementDiff {
                element_kind: kind,
                element_name: name.to_string(),
                field_path: field.into(),
                left_value: left,
                right_value: right,
            });
        }
    }

    fn value<T: Display>(&mut self, kind: ElementKind, name: &str, field: &str, l: T, r: T) {
        self.push(kind, name, field, Some(l.to_string()), Some(r.to_string()));
    }

    fn keyed<T: Clone>(
        &mut self,
        kind: ElementKind,
        left: &[T],
        right: &[T],
        key: impl Fn(&T) -> String,
        describe: impl Fn(&T) -> String,
        mut both: impl FnMut(&mut Self, &str, &T, &T),
    ) {
        let l: BTreeMap<String, &T> = left.iter().map(|x| (key(x), x)).collect();
        let r: BTreeMap<String, &T> = right.iter().map(|x| (key(x), x)).collect();
        let names: BTreeSet<&String> = l.keys().chain(r.keys()).collect();
        for name in names {
            match (l.get(name), r.get(name)) {
                (Some(a), Some(b)) => both(self, name, a, b),
                (a, b) => self.push(kind, name, "", a.map(|x| describe(x)), b.map(|x| describe(x))),
            }
        }
    }

    fn sequence<T>(&mut self, kind: ElementKind, name: &str, field: &str, left: &[T], right: &[T], show: impl Fn(&T) -> String) {
        for i in 0..left.len().max(right.len()) {
            self.push(
                kind,
                name,
                format!("{field}[{i}]"),
                left.get(i).map(&show),
                right.get(i).map(&show),
            );
        }
    }
}

fn entry_text(e: &PrefixEntry) -> String {
    let len = e.prefix.prefix_len();
    let (lo, hi) = e.length_range.unwrap_or((len, len));
    format!("{} {} len {lo}-{hi}", e.action, e.prefix)
}

fn joined<T: Display>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct NormClause {
    action: Action,
    matches: BTreeSet<Match>,
    sets: BTreeSet<SetAction>,
}

/// Clause semantics without sequence numbers: deny clauses carry no sets, an implicit
/// deny-all closes every policy and nothing after the first match-all clause is reachable.
fn normalize_policy(p: &RoutePolicy) -> Vec<NormClause> {
    let mut out: Vec<NormClause> = p
        .clauses
        .iter()
        .map(|c: &Clause| NormClause {
            action: c.action,
            matches: c.matches.iter().cloned().collect(),
            sets: if c.action == Action::Deny {
                BTreeSet::new()
            } else {
                c.sets
                    .iter()
                    .map(|s| match s {
                        SetAction::Community(v) => {
                            let mut v = v.clone();
                            v.sort();
                            v.dedup();
                            SetAction::Community(v)
                        }
                        other => other.clone(),
                    })
                    .collect()
            },
        })
        .collect();
    out.push(NormClause {
        action: Action::Deny,
        matches: BTreeSet::new(),
        sets: BTreeSet::new(),
    });
    if let Some(first_all) = out.iter().position(|c| c.matches.is_empty()) {
        out.truncate(first_all + 1);
    }
    out
}

fn match_text(m: &Match) -> String {
    match m {
        Match::PrefixList(n) => format!("prefix-list {n}"),
        Match::CommunityList(n) => format!("community-list {n}"),
    }
}

fn set_text(s: &SetAction) -> String {
    match s {
        SetAction::LocalPreference(n) => format!("local-preference {n}"),
        SetAction::Metric(n) => format!("metric {n}"),
        SetAction::Community(v) => format!("community {}", joined(v)),
    }
}

/// Compares two IRs attribute by attribute.
pub fn compare(left: &SemanticConfig, right: &SemanticConfig) -> EquivalenceReport {
    let mut d = Diffs(Vec::new());

    let ls: BTreeSet<_> = left.static_routes.iter().collect();
    let rs: BTreeSet<_> = right.static_routes.iter().collect();
    let only_l: Vec<_> = ls.difference(&rs).collect();
    let mut only_r: Vec<_> = rs.difference(&ls).collect();
    for l in only_l {
        let name = l.prefix.to_string();
        match only_r.iter().position(|r| r.prefix == l.prefix) {
            Some(i) => {
                let r = only_r.remove(i);
                d.value(ElementKind::StaticRoute, &name, "next_hop", l.next_hop, r.next_hop);
            }
            None => d.push(ElementKind::StaticRoute, &name, "", Some(format!("next-hop {}", l.next_hop)), None),
        }
    }
    for r in only_r {
        d.push(ElementKind::StaticRoute, &r.prefix.to_string(), "", None, Some(format!("next-hop {}", r.next_hop)));
    }

    d.keyed(
        ElementKind::PrefixList,
        &left.prefix_lists,
        &right.prefix_lists,
        |p| p.name.clone(),
        |p| joined(p.entries.iter().map(entry_text)),
        |d, name, a, b| {
            d.sequence(ElementKind::PrefixList, name, "entries", &a.entries, &b.entries, entry_text)
        },
    );

    d.keyed(
        ElementKind::CommunityList,
        &left.community_lists,
        &right.community_lists,
        |c| c.name.clone(),
        |c| format!("{} {}", c.action, joined(&c.values)),
        |d, name, a, b| {
            d.value(ElementKind::CommunityList, name, "action", a.action, b.action);
            let av: BTreeSet<_> = a.values.iter().collect();
            let bv: BTreeSet<_> = b.values.iter().collect();
            d.value(ElementKind::CommunityList, name, "values", joined(av), joined(bv));
        },
    );

    d.keyed(
        ElementKind::AccessList,
        &left.access_lists,
        &right.access_lists,
        |a| a.name.clone(),
        |a| joined(a.entries.iter().map(|e| format!("{} {}", e.action, e.source))),
        |d, name, a, b| {
            d.sequence(ElementKind::AccessList, name, "entries", &a.entries, &b.entries, |e| {
                format!("{} {}", e.action, e.source)
            })
        },
    );

    d.keyed(
        ElementKind::RoutePolicy,
        &left.route_policies,
        &right.route_policies,
        |p| p.name.clone(),
        |p| format!("{} clauses", p.clauses.len()),
        |d, name, a, b| {
            let (na, nb) = (normalize_policy(a), normalize_policy(b));
            for i in 0..na.len().max(nb.len()) {
                match (na.get(i), nb.get(i)) {
                    (Some(x), Some(y)) => {
                        let k = ElementKind::RoutePolicy;
                        d.value(k, name, &format!("clauses[{i}].action"), x.action, y.action);
                        d.value(
                            k,
                            name,
                            &format!("clauses[{i}].matches"),
                            joined(x.matches.iter().map(match_text)),
                            joined(y.matches.iter().map(match_text)),
                        );
                        d.value(
                            k,
                            name,
                            &format!("clauses[{i}].sets"),
                            joined(x.sets.iter().map(set_text)),
                            joined(y.sets.iter().map(set_text)),
                        );
                    }
                    (x, y) => {
                        let show = |c: &NormClause| format!("{} {}", c.action, joined(c.matches.iter().map(match_text)));
                        d.push(ElementKind::RoutePolicy, name, format!("clauses[{i}]"), x.map(show), y.map(show));
                    }
                }
            }
        },
    );

    match (&left.bgp, &right.bgp) {
        (Some(a), Some(b)) => {
            let name = a.asn.to_string();
            let k = ElementKind::Bgp;
            d.value(k, &name, "asn", a.asn, b.asn);
            d.push(
                k,
                &name,
                "router_id",
                a.router_id.map(|x| x.to_string()),
                b.router_id.map(|x| x.to_string()),
            );
            d.keyed(
                k,
                &a.neighbors,
                &b.neighbors,
                |n| n.peer.to_string(),
                |n| format!("remote-as {}", n.remote_asn),
                |d, peer, x, y| {
                    let f = |s: &str| format!("neighbors[{peer}].{s}");
                    d.value(k, &name, &f("remote_asn"), x.remote_asn, y.remote_asn);
                    d.push(k, &name, f("description"), x.description.clone(), y.description.clone());
                    d.push(k, &name, f("import_policy"), x.import_policy.clone(), y.import_policy.clone());
                    d.push(k, &name, f("export_policy"), x.export_policy.clone(), y.export_policy.clone());
                },
            );
            // keyed() names missing neighbors by peer; re-anchor them on the process
            for diff in d.0.iter_mut().filter(|x| x.element_kind == k && x.field_path.is_empty()) {
                diff.field_path = format!("neighbors[{}]", diff.element_name);
                diff.element_name = name.clone();
            }
        }
        (a, b) => {
            if let Some(p) = a.as_ref().or(b.as_ref()) {
                d.push(
                    ElementKind::Bgp,
                    &p.asn.to_string(),
                    "",
                    a.as_ref().map(|p| format!("router bgp {}", p.asn)),
                    b.as_ref().map(|p| format!("router bgp {}", p.asn)),
                );
            }
        }
    }

    match (&left.ospf, &right.ospf) {
        (Some(a), Some(b)) => {
            let name = a.process_id.to_string();
            let k = ElementKind::Ospf;
            d.value(k, &name, "process_id", a.process_id, b.process_id);
            let nets = |p: &super::OspfProcess| {
                joined(
                    p.networks
                        .iter()
                        .map(|n| format!("{} {} area {}", n.address, n.wildcard, n.area.as_u32()))
                        .collect::<BTreeSet<_>>(),
                )
            };
            d.value(k, &name, "networks", nets(a), nets(b));
            let redist = |p: &super::OspfProcess| {
                joined(
                    p.redistributes
                        .iter()
                        .map(|r| {
                            let mut s = r.protocol.as_str().to_string();
                            if let Some(n) = r.process {
                                s.push_str(&format!(" {n}"));
                            }
                            for o in &r.options {
                                s.push(' ');
                                s.push_str(o);
                            }
                            s
                        })
                        .collect::<BTreeSet<_>>(),
                )
            };
            d.value(k, &name, "redistributes", redist(a), redist(b));
        }
        (a, b) => {
            if let Some(p) = a.as_ref().or(b.as_ref()) {
                d.push(
                    ElementKind::Ospf,
                    &p.process_id.to_string(),
                    "",
                    a.as_ref().map(|p| format!("router ospf {}", p.process_id)),
                    b.as_ref().map(|p| format!("router ospf {}", p.process_id)),
                );
            }
        }
    }

    let bag = |c: &SemanticConfig| {
        let mut m: BTreeMap<(String, String), usize> = BTreeMap::new();
        for o in &c.opaque {
            let text = o.text.split_whitespace().collect::<Vec<_>>().join(" ");
            *m.entry((o.path.join(" > "), text)).or_default() += 1;
        }
        m
    };
    let (lo, ro) = (bag(left), bag(right));
    let keys: BTreeSet<_> = lo.keys().chain(ro.keys()).collect();
    for key in keys {
        let (a, b) = (lo.get(key).copied().unwrap_or(0), ro.get(key).copied().unwrap_or(0));
        if a != b {
            d.push(
                ElementKind::Opaque,
                &key.0,
                "text",
                (a > 0).then(|| format!("{} x{a}", key.1)),
                (b > 0).then(|| format!("{} x{b}", key.1)),
            );
        }
    }

    EquivalenceReport {
        equivalent: d.0.is_empty(),
        diffs: d.0,
    }
}
