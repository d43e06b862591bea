//! Juniper-style syntax: nested `name { ... }` blocks with `;`-terminated leaf statements.

use std::collections::{HashMap, HashSet};
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;

use super::cisco::ensure_network;
use super::lex::{issue, parse_addr, parse_len, parse_positive, parse_prefix, parse_u32};
use super::{
    AccessList, AclEntry, Action, BgpNeighbor, BgpProcess, Clause, Community, CommunityList,
    ConfigError, ElementKind, Match, OpaqueBlock, ParseWarning, PrefixEntry, PrefixList,
    RoutePolicy, SemanticConfig, SetAction, StaticRoute, SyntaxIssue, Vendor,
};

#[derive(Debug, Clone)]
struct Tok {
    text: String,
    quoted: bool,
    line: usize,
    col: usize,
}

impl Tok {
    fn is(&self, sym: &str) -> bool {
        !self.quoted && self.text == sym
    }

    fn width(&self) -> usize {
        self.text.chars().count() + if self.quoted { 2 } else { 0 }
    }
}

fn lex(text: &str, issues: &mut Vec<SyntaxIssue>) -> Vec<Tok> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l, k) = (line, col);
            bump!();
            bump!();
            while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                bump!();
            }
            if i >= chars.len() {
                issues.push(issue(l, k, "unterminated comment", "/*"));
            } else {
                bump!();
                bump!();
            }
        } else if matches!(c, '{' | '}' | ';' | '[' | ']') {
            out.push(Tok {
                text: c.to_string(),
                quoted: false,
                line,
                col,
            });
            bump!();
        } else if c == '"' {
            let (l, k) = (line, col);
            bump!();
            let mut s = String::new();
            let mut closed = false;
            while i < chars.len() {
                match chars[i] {
                    '"' => {
                        closed = true;
                        bump!();
                        break;
                    }
                    '\\' if i + 1 < chars.len() => {
                        bump!();
                        s.push(chars[i]);
                        bump!();
                    }
                    ch => {
                        s.push(ch);
                        bump!();
                    }
                }
            }
            if !closed {
                issues.push(issue(l, k, "unterminated string", "\""));
            }
            out.push(Tok {
                text: s,
                quoted: true,
                line: l,
                col: k,
            });
        } else {
            let (l, k) = (line, col);
            let mut s = String::new();
            while i < chars.len()
                && !chars[i].is_whitespace()
                && !matches!(chars[i], '{' | '}' | ';' | '[' | ']' | '"')
            {
                s.push(chars[i]);
                bump!();
            }
            out.push(Tok {
                text: s,
                quoted: false,
                line: l,
                col: k,
            });
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Stmt {
    words: Vec<Tok>,
    body: Option<Vec<Stmt>>,
}

impl Stmt {
    fn line(&self) -> usize {
        self.words[0].line
    }

    fn head(&self) -> &str {
        &self.words[0].text
    }

    fn word(&self, i: usize) -> Option<&str> {
        self.words.get(i).map(|t| t.text.as_str())
    }

    fn key(&self) -> String {
        render_words(&self.words)
    }

    /// `from x;` and `from { x; }` both yield the inner statements.
    fn contents(&self) -> Vec<Stmt> {
        match &self.body {
            Some(b) => b.clone(),
            None if self.words.len() > 1 => vec![Stmt {
                words: self.words[1..].to_vec(),
                body: None,
            }],
            None => Vec::new(),
        }
    }

    fn col(&self, i: usize) -> usize {
        match self.words.get(i) {
            Some(t) => t.col,
            None => {
                let last = self.words.last().unwrap();
                last.col + last.width() + 1
            }
        }
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn render_words(words: &[Tok]) -> String {
    words
        .iter()
        .map(|t| if t.quoted { quote(&t.text) } else { t.text.clone() })
        .collect::<Vec<_>>()
        .join(" ")
}

fn render_stmt(s: &Stmt, indent: usize, out: &mut Vec<String>) {
    let pad = "  ".repeat(indent);
    match &s.body {
        None => out.push(format!("{pad}{};", s.key())),
        Some(body) => {
            out.push(format!("{pad}{} {{", s.key()));
            for c in body {
                render_stmt(c, indent + 1, out);
            }
            out.push(format!("{pad}}}"));
        }
    }
}

struct TreeParser<'a> {
    toks: &'a [Tok],
    pos: usize,
    issues: &'a mut Vec<SyntaxIssue>,
}

impl TreeParser<'_> {
    fn stmts(&mut self, opener: Option<&Tok>) -> Vec<Stmt> {
        let toks = self.toks;
        let mut out = Vec::new();
        loop {
            let Some(t) = toks.get(self.pos) else {
                if let Some(o) = opener {
                    self.issues
                        .push(issue(o.line, o.col, "unclosed `{`: missing `}`", "{"));
                }
                return out;
            };
            if t.is("}") {
                self.pos += 1;
                if opener.is_some() {
                    return out;
                }
                self.issues.push(issue(t.line, t.col, "unexpected `}`", "}"));
                continue;
            }
            if t.is(";") {
                self.pos += 1;
                self.issues.push(issue(t.line, t.col, "unexpected `;`", ";"));
                continue;
            }
            let mut words: Vec<Tok> = Vec::new();
            let mut body = None;
            loop {
                match toks.get(self.pos) {
                    Some(t) if t.is(";") => {
                        self.pos += 1;
                        break;
                    }
                    Some(t) if t.is("{") => {
                        self.pos += 1;
                        if words.is_empty() {
                            self.issues
                                .push(issue(t.line, t.col, "`{` without a statement name", "{"));
                        }
                        body = Some(self.stmts(Some(t)));
                        break;
                    }
                    Some(t) if !t.is("}") => {
                        words.push(t.clone());
                        self.pos += 1;
                    }
                    _ => {
                        let last = words.last().unwrap();
                        self.issues.push(issue(
                            last.line,
                            last.col + last.width(),
                            format!("missing `;` after `{}`", last.text),
                            &last.text,
                        ));
                        break;
                    }
                }
            }
            if !words.is_empty() {
                out.push(Stmt { words, body });
            }
        }
    }
}

type Res<T> = Result<T, (usize, String)>;

struct PendingSet {
    policy: usize,
    clause: usize,
    set: usize,
    name: String,
    line: usize,
    col: usize,
}

struct PendingNeighbor {
    peer: Ipv4Addr,
    asn: Option<u32>,
    description: Option<String>,
    import: Option<String>,
    export: Option<String>,
    line: usize,
}

#[derive(Default)]
struct Interp {
    cfg: SemanticConfig,
    issues: Vec<SyntaxIssue>,
    warnings: Vec<ParseWarning>,
    decl: HashMap<(ElementKind, String), usize>,
    asn: Option<(u32, usize)>,
    router_id: Option<(Ipv4Addr, usize)>,
    neighbors: Vec<(BgpNeighbor, usize)>,
    pending_sets: Vec<PendingSet>,
    from_communities: HashSet<String>,
}

pub(super) fn parse(text: &str) -> (SemanticConfig, Vec<ParseWarning>, Vec<SyntaxIssue>) {
    parse_inner(text, true)
}

fn parse_inner(text: &str, check_refs: bool) -> (SemanticConfig, Vec<ParseWarning>, Vec<SyntaxIssue>) {
    let mut issues = Vec::new();
    let toks = lex(text, &mut issues);
    let tree = TreeParser {
        toks: &toks,
        pos: 0,
        issues: &mut issues,
    }
    .stmts(None);
    let mut p = Interp {
        issues,
        ..Interp::default()
    };
    for s in &tree {
        match (s.head(), &s.body) {
            ("routing-options", Some(b)) if s.words.len() == 1 => p.routing_options(b),
            ("protocols", Some(b)) if s.words.len() == 1 => p.protocols(b),
            ("policy-options", Some(b)) if s.words.len() == 1 => p.policy_options(b),
            ("firewall", Some(b)) if s.words.len() == 1 => p.firewall(b),
            _ => p.opaque(s, &[]),
        }
    }
    p.finish(check_refs)
}

fn path(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

impl Interp {
    fn fail(&mut self, s: &Stmt, word: usize, message: impl Into<String>) {
        let offending = s.word(word).unwrap_or_else(|| s.head()).to_string();
        self.issues
            .push(issue(s.line(), s.col(word), message, &offending));
    }

    fn report<T>(&mut self, s: &Stmt, r: Res<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err((w, m)) => {
                self.fail(s, w, m);
                None
            }
        }
    }

    fn declare(&mut self, kind: ElementKind, name: &str, line: usize) {
        self.decl.entry((kind, name.to_string())).or_insert(line);
    }

    fn opaque(&mut self, s: &Stmt, path: &[String]) {
        let mut lines = Vec::new();
        render_stmt(s, 0, &mut lines);
        self.warnings.push(ParseWarning {
            line: s.line(),
            message: format!("unsupported statement kept verbatim: `{}`", s.key()),
        });
        self.cfg.opaque.push(OpaqueBlock {
            vendor: Vendor::Juniper,
            path: path.to_vec(),
            text: lines.join("\n"),
        });
    }

    fn routing_options(&mut self, body: &[Stmt]) {
        let here = path(&["routing-options"]);
        for s in body {
            match (s.head(), &s.body) {
                ("static", Some(routes)) if s.words.len() == 1 => {
                    let inner = path(&["routing-options", "static"]);
                    for r in routes {
                        if r.head() == "route" {
                            self.static_route(r);
                        } else {
                            self.opaque(r, &inner);
                        }
                    }
                }
                ("router-id", None) if s.words.len() == 2 => {
                    let r = parse_addr(s.word(1).unwrap()).map_err(|e| (1, e));
                    if let Some(id) = self.report(s, r) {
                        self.router_id = Some((id, s.line()));
                    }
                }
                ("autonomous-system", None) if s.words.len() == 2 => {
                    let r = parse_positive(s.word(1).unwrap(), "AS number").map_err(|e| (1, e));
                    if let Some(asn) = self.report(s, r) {
                        self.asn = Some((asn, s.line()));
                    }
                }
                _ => self.opaque(s, &here),
            }
        }
    }

    fn static_route(&mut self, s: &Stmt) {
        let r = (|| -> Res<Vec<StaticRoute>> {
            let p = s.word(1).ok_or((1, "missing destination prefix".to_string()))?;
            let prefix = parse_prefix(p).map_err(|e| (1, e))?;
            ensure_network(&prefix).map_err(|e| (1, e))?;
            let (hop_stmt, first) = match &s.body {
                None => {
                    if s.word(2) != Some("next-hop") {
                        return Err((2, "expected `next-hop ADDRESS`".into()));
                    }
                    (s, 3)
                }
                Some(b) => match b.as_slice() {
                    [n] if n.head() == "next-hop" && n.body.is_none() => (n, 1),
                    _ => return Err((1, "route body must be a single `next-hop` statement".into())),
                },
            };
            let hops: Vec<&str> = hop_stmt.words[first..].iter().map(|t| t.text.as_str()).collect();
            // `next-hop [ a b ];` lists several gateways for one destination
            let hops = match hops.as_slice() {
                [one] => vec![(first, *one)],
                ["[", list @ .., "]"] if !list.is_empty() => {
                    list.iter().enumerate().map(|(i, h)| (first + 1 + i, *h)).collect()
                }
                _ => return Err((first.min(hop_stmt.words.len()), "expected `next-hop ADDRESS`".into())),
            };
            hops.into_iter()
                .map(|(i, h)| {
                    let next_hop = parse_addr(h).map_err(|e| (i, e))?;
                    Ok(StaticRoute { prefix, next_hop })
                })
                .collect()
        })();
        if let Some(routes) = self.report(s, r) {
            for route in routes {
                self.declare(ElementKind::StaticRoute, &route.prefix.to_string(), s.line());
                self.cfg.static_routes.push(route);
            }
        }
    }

    fn protocols(&mut self, body: &[Stmt]) {
        for s in body {
            match (s.head(), &s.body) {
                ("bgp", Some(b)) if s.words.len() == 1 => {
                    for g in b {
                        match (g.head(), &g.body) {
                            ("group", Some(gb)) if g.words.len() == 2 => self.group(gb),
                            _ => self.opaque(g, &path(&["protocols", "bgp"])),
                        }
                    }
                }
                _ => self.opaque(s, &path(&["protocols"])),
            }
        }
    }

    fn group(&mut self, body: &[Stmt]) {
        let here = path(&["protocols", "bgp", "group peers"]);
        let mut asn = None;
        let mut import = None;
        let mut export = None;
        let mut members = Vec::new();
        for s in body {
            match s.head() {
                "neighbor" => {
                    if let Some(n) = self.neighbor(s) {
                        members.push(n);
                    }
                }
                "peer-as" => asn = self.peer_as(s),
                "import" => import = self.policy_ref(s),
                "export" => export = self.policy_ref(s),
                "type" if s.body.is_none() => {}
                _ => self.opaque(s, &here),
            }
        }
        for n in members {
            let Some(remote_asn) = n.asn.or(asn) else {
                self.issues.push(issue(
                    n.line,
                    1,
                    format!("neighbor {} has no `peer-as`", n.peer),
                    &n.peer.to_string(),
                ));
                continue;
            };
            self.neighbors.push((
                BgpNeighbor {
                    peer: n.peer,
                    remote_asn,
                    description: n.description,
                    import_policy: n.import.or_else(|| import.clone()),
                    export_policy: n.export.or_else(|| export.clone()),
                },
                n.line,
            ));
        }
    }

    fn peer_as(&mut self, s: &Stmt) -> Option<u32> {
        let r = if s.words.len() != 2 || s.body.is_some() {
            Err((2, "expected `peer-as NUMBER;`".to_string()))
        } else {
            parse_positive(s.word(1).unwrap(), "peer AS").map_err(|e| (1, e))
        };
        self.report(s, r)
    }

    fn policy_ref(&mut self, s: &Stmt) -> Option<String> {
        let r = match s.words.len() {
            2 if s.body.is_none() && !s.words[1].is("[") => Ok(s.word(1).unwrap().to_string()),
            _ => Err((1, format!("`{}` must name exactly one policy", s.head()))),
        };
        self.report(s, r)
    }

    fn neighbor(&mut self, s: &Stmt) -> Option<PendingNeighbor> {
        let r = s
            .word(1)
            .ok_or((1, "missing neighbor address".to_string()))
            .and_then(|a| parse_addr(a).map_err(|e| (1, e)));
        let peer = self.report(s, r)?;
        if s.words.len() > 2 {
            self.fail(s, 2, "unexpected token");
            return None;
        }
        let mut n = PendingNeighbor {
            peer,
            asn: None,
            description: None,
            import: None,
            export: None,
            line: s.line(),
        };
        for c in s.body.iter().flatten() {
            match c.head() {
                "description" if c.body.is_none() && c.words.len() > 1 => {
                    let text: Vec<&str> = c.words[1..].iter().map(|t| t.text.as_str()).collect();
                    n.description = Some(text.join(" "));
                }
                "peer-as" => n.asn = self.peer_as(c),
                "import" => n.import = self.policy_ref(c),
                "export" => n.export = self.policy_ref(c),
                other => {
                    let msg = format!("unsupported neighbor statement `{other}`");
                    self.fail(c, 0, msg);
                }
            }
        }
        Some(n)
    }

    fn policy_options(&mut self, body: &[Stmt]) {
        let here = path(&["policy-options"]);
        for s in body {
            match (s.head(), &s.body) {
                ("prefix-list", Some(b)) if s.words.len() == 2 => self.prefix_list(s, b, false),
                ("route-filter-list", Some(b)) if s.words.len() == 2 => {
                    self.prefix_list(s, b, true)
                }
                ("community", None) if s.word(2) == Some("members") => self.community(s),
                ("policy-statement", Some(b)) if s.words.len() == 2 => self.policy(s, b),
                _ => self.opaque(s, &here),
            }
        }
    }

    fn prefix_list(&mut self, s: &Stmt, body: &[Stmt], filter: bool) {
        let name = s.word(1).unwrap().to_string();
        if self.cfg.prefix_lists.iter().any(|p| p.name == name) {
            self.fail(s, 1, format!("prefix list `{name}` declared more than once"));
            return;
        }
        let mut entries = Vec::new();
        for e in body {
            let r = prefix_entry(e, filter, (entries.len() as u32 + 1) * 5);
            if let Some(entry) = self.report(e, r) {
                entries.push(entry);
            }
        }
        self.declare(ElementKind::PrefixList, &name, s.line());
        self.cfg.prefix_lists.push(PrefixList { name, entries });
    }

    fn community(&mut self, s: &Stmt) {
        let name = s.word(1).unwrap().to_string();
        let r = (|| -> Res<Vec<Community>> {
            let items: Vec<(usize, &Tok)> = s.words.iter().enumerate().skip(3).collect();
            let values: Vec<(usize, &Tok)> = match items.as_slice() {
                [(_, open), inner @ .., (_, close)] if open.is("[") && close.is("]") => {
                    inner.to_vec()
                }
                [one] => vec![*one],
                _ => return Err((3, "expected `members VALUE;` or `members [ VALUES ];`".into())),
            };
            if values.is_empty() {
                return Err((3, "missing community values".into()));
            }
            values
                .into_iter()
                .map(|(i, t)| t.text.parse::<Community>().map_err(|e| (i, e)))
                .collect()
        })();
        let Some(values) = self.report(s, r) else {
            return;
        };
        if self.cfg.community_lists.iter().any(|c| c.name == name) {
            self.fail(s, 1, format!("community `{name}` declared more than once"));
            return;
        }
        self.declare(ElementKind::CommunityList, &name, s.line());
        self.cfg.community_lists.push(CommunityList {
            name,
            action: Action::Permit,
            values,
        });
    }

    fn policy(&mut self, s: &Stmt, body: &[Stmt]) {
        let name = s.word(1).unwrap().to_string();
        if self.cfg.route_policies.iter().any(|p| p.name == name) {
            self.fail(s, 1, format!("policy-statement `{name}` declared more than once"));
            return;
        }
        let policy_idx = self.cfg.route_policies.len();
        let here = vec!["policy-options".to_string(), format!("policy-statement {name}")];
        let mut clauses: Vec<Clause> = Vec::new();
        let mut last = 0;
        for t in body {
            match (t.head(), &t.body) {
                ("term", Some(tb)) if t.words.len() == 2 => {
                    let term = t.word(1).unwrap();
                    let seq = match term.parse::<u32>() {
                        Ok(n) if n > last => n,
                        _ => {
                            self.warnings.push(ParseWarning {
                                line: t.line(),
                                message: format!(
                                    "term `{term}` of `{name}` numbered {} by position",
                                    last + 10
                                ),
                            });
                            last + 10
                        }
                    };
                    last = seq;
                    let mut tpath = here.clone();
                    tpath.push(format!("term {seq}"));
                    if let Some(clause) = self.term(t, tb, seq, &tpath, policy_idx, clauses.len()) {
                        clauses.push(clause);
                    }
                }
                ("then", _) => {
                    let inner = t.contents();
                    match inner.as_slice() {
                        [a] if a.words.len() == 1 && matches!(a.head(), "accept" | "reject") => {
                            last += 10;
                            clauses.push(Clause {
                                seq: last,
                                action: if a.head() == "accept" {
                                    Action::Permit
                                } else {
                                    Action::Deny
                                },
                                matches: Vec::new(),
                                sets: Vec::new(),
                            });
                        }
                        _ => self.opaque(t, &here),
                    }
                }
                _ => self.opaque(t, &here),
            }
        }
        self.declare(ElementKind::RoutePolicy, &name, s.line());
        self.cfg.route_policies.push(RoutePolicy { name, clauses });
    }

    fn term(
        &mut self,
        t: &Stmt,
        body: &[Stmt],
        seq: u32,
        tpath: &[String],
        policy: usize,
        clause: usize,
    ) -> Option<Clause> {
        let mut matches = Vec::new();
        let mut sets = Vec::new();
        let mut action = None;
        for part in body {
            match part.head() {
                "from" => {
                    let mut fpath = tpath.to_vec();
                    fpath.push("from".into());
                    for m in part.contents() {
                        match m.head() {
                            "prefix-list" | "route-filter-list" if m.words.len() == 2 => {
                                matches.push(Match::PrefixList(m.word(1).unwrap().to_string()))
                            }
                            "community" if m.body.is_none() && m.words.len() >= 2 => {
                                let names: Vec<&Tok> = m.words[1..]
                                    .iter()
                                    .filter(|w| !w.is("[") && !w.is("]"))
                                    .collect();
                                for n in names {
                                    self.from_communities.insert(n.text.clone());
                                    matches.push(Match::CommunityList(n.text.clone()));
                                }
                            }
                            _ => self.opaque(&m, &fpath),
                        }
                    }
                }
                "then" => {
                    let mut hpath = tpath.to_vec();
                    hpath.push("then".into());
                    for a in part.contents() {
                        match (a.head(), a.words.len()) {
                            ("accept", 1) => action = Some(Action::Permit),
                            ("reject", 1) => action = Some(Action::Deny),
                            (kw @ ("local-preference" | "metric"), 2) => {
                                let r = parse_u32(a.word(1).unwrap(), kw).map_err(|e| (1, e));
                                if let Some(n) = self.report(&a, r) {
                                    sets.push(if kw == "metric" {
                                        SetAction::Metric(n)
                                    } else {
                                        SetAction::LocalPreference(n)
                                    });
                                }
                            }
                            ("community", 3) if a.word(1) == Some("set") => {
                                self.pending_sets.push(PendingSet {
                                    policy,
                                    clause,
                                    set: sets.len(),
                                    name: a.word(2).unwrap().to_string(),
                                    line: a.line(),
                                    col: a.col(2),
                                });
                                sets.push(SetAction::Community(Vec::new()));
                            }
                            _ => self.opaque(&a, &hpath),
                        }
                    }
                }
                _ => self.opaque(part, tpath),
            }
        }
        let Some(action) = action else {
            self.fail(t, 1, format!("term `{}` has no `accept` or `reject` action", t.word(1).unwrap()));
            return None;
        };
        Some(Clause {
            seq,
            action,
            matches,
            sets,
        })
    }

    fn firewall(&mut self, body: &[Stmt]) {
        for f in body {
            match (f.head(), f.word(1), &f.body) {
                ("family", Some("inet"), Some(fb)) if f.words.len() == 2 => {
                    for filter in fb {
                        match (filter.head(), &filter.body) {
                            ("filter", Some(terms)) if filter.words.len() == 2 => {
                                self.filter(filter, terms)
                            }
                            _ => self.opaque(filter, &path(&["firewall", "family inet"])),
                        }
                    }
                }
                _ => self.opaque(f, &path(&["firewall"])),
            }
        }
    }

    fn filter(&mut self, s: &Stmt, terms: &[Stmt]) {
        let name = s.word(1).unwrap().to_string();
        if self.cfg.access_lists.iter().any(|a| a.name == name) {
            self.fail(s, 1, format!("filter `{name}` declared more than once"));
            return;
        }
        let here = vec![
            "firewall".to_string(),
            "family inet".to_string(),
            format!("filter {name}"),
        ];
        let mut entries = Vec::new();
        for t in terms {
            if t.head() != "term" || t.body.is_none() || t.words.len() != 2 {
                self.opaque(t, &here);
                continue;
            }
            let mut sources = Vec::new();
            let mut action = None;
            for part in t.body.iter().flatten() {
                match part.head() {
                    "from" => {
                        for m in part.contents() {
                            if m.head() != "source-address" {
                                let msg = format!("unsupported filter match `{}`", m.head());
                                self.fail(&m, 0, msg);
                                continue;
                            }
                            let items = match &m.body {
                                Some(b) => b.iter().map(|x| (x.clone(), 0)).collect(),
                                None => vec![(m.clone(), 1)],
                            };
                            for (item, at) in items {
                                let r = item
                                    .word(at)
                                    .ok_or((at, "missing address".to_string()))
                                    .and_then(|w| parse_prefix(w).map_err(|e| (at, e)))
                                    .and_then(|p| ensure_network(&p).map(|_| p).map_err(|e| (at, e)));
                                if let Some(p) = self.report(&item, r) {
                                    sources.push(p);
                                }
                            }
                        }
                    }
                    "then" => {
                        for a in part.contents() {
                            match a.head() {
                                "accept" => action = Some(Action::Permit),
                                "discard" | "reject" => action = Some(Action::Deny),
                                other => {
                                    let msg = format!("unsupported filter action `{other}`");
                                    self.fail(&a, 0, msg);
                                }
                            }
                        }
                    }
                    other => {
                        let msg = format!("unsupported filter term statement `{other}`");
                        self.fail(part, 0, msg);
                    }
                }
            }
            let Some(action) = action else {
                self.fail(t, 1, "filter term has no `accept` or `discard` action");
                continue;
            };
            if sources.is_empty() {
                sources.push(Ipv4Net::default());
            }
            entries.extend(sources.into_iter().map(|source| AclEntry { action, source }));
        }
        self.declare(ElementKind::AccessList, &name, s.line());
        self.cfg.access_lists.push(AccessList { name, entries });
    }

    fn finish(mut self, check_refs: bool) -> (SemanticConfig, Vec<ParseWarning>, Vec<SyntaxIssue>) {
        let set_names: HashSet<String> = self.pending_sets.iter().map(|p| p.name.clone()).collect();
        for p in std::mem::take(&mut self.pending_sets) {
            let values = self
                .cfg
                .community_lists
                .iter()
                .find(|c| c.name == p.name)
                .map(|c| c.values.clone());
            match values {
                Some(v) => {
                    self.cfg.route_policies[p.policy].clauses[p.clause].sets[p.set] =
                        SetAction::Community(v)
                }
                None if !check_refs => {
                    self.cfg.route_policies[p.policy].clauses[p.clause].sets[p.set] =
                        SetAction::Community(vec![Community { asn: 0, value: 0 }])
                }
                None => self.issues.push(issue(
                    p.line,
                    p.col,
                    format!("`community set` references undefined community `{}`", p.name),
                    &p.name,
                )),
            }
        }
        let from = std::mem::take(&mut self.from_communities);
        self.cfg
            .community_lists
            .retain(|c| !set_names.contains(&c.name) || from.contains(&c.name));

        match self.asn {
            Some((asn, line)) => {
                self.declare(ElementKind::Bgp, &asn.to_string(), line);
                self.cfg.bgp = Some(BgpProcess {
                    asn,
                    router_id: self.router_id.map(|r| r.0),
                    neighbors: self.neighbors.drain(..).map(|n| n.0).collect(),
                });
            }
            None => {
                if let Some((id, _)) = self.router_id {
                    self.cfg.opaque.push(OpaqueBlock {
                        vendor: Vendor::Juniper,
                        path: path(&["routing-options"]),
                        text: format!("router-id {id};"),
                    });
                }
                if let Some((n, line)) = self.neighbors.first() {
                    let peer = n.peer.to_string();
                    self.issues.push(issue(
                        *line,
                        1,
                        "BGP neighbors require `routing-options autonomous-system`",
                        &peer,
                    ));
                }
            }
        }

        for v in self.cfg.validate() {
            let reference = v.message.contains("undefined");
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

fn prefix_entry(e: &Stmt, filter: bool, seq: u32) -> Res<PrefixEntry> {
    if e.body.is_some() {
        return Err((0, "list entries take no block".into()));
    }
    let prefix = parse_prefix(e.head()).map_err(|m| (0, m))?;
    ensure_network(&prefix).map_err(|m| (0, m))?;
    if !filter {
        if e.words.len() > 1 {
            return Err((1, "unexpected token".into()));
        }
        return Ok(PrefixEntry {
            seq,
            action: Action::Permit,
            prefix,
            length_range: None,
        });
    }
    let len = prefix.prefix_len();
    let slash = |i: usize| -> Res<u8> {
        let w = e.word(i).ok_or((i, "missing /length".to_string()))?;
        let v = w.strip_prefix('/').ok_or((i, format!("`{w}` must be written as /N")))?;
        parse_len(v).map_err(|m| (i, m))
    };
    let (range, mut i) = match e.word(1) {
        None => return Err((1, "missing match type".into())),
        Some("exact") => (None, 2),
        Some("orlonger") => (Some((len, 32)), 2),
        Some("longer") => (Some((len + 1, 32)), 2),
        Some("upto") => (Some((len, slash(2)?)), 3),
        Some("prefix-length-range") => {
            let w = e.word(2).ok_or((2, "missing /lo-/hi".to_string()))?;
            let (lo, hi) = w
                .split_once('-')
                .ok_or((2, format!("`{w}` must be written as /lo-/hi")))?;
            let parse = |s: &str| -> Res<u8> {
                let v = s.strip_prefix('/').ok_or((2, format!("`{w}` must be written as /lo-/hi")))?;
                parse_len(v).map_err(|m| (2, m))
            };
            (Some((parse(lo)?, parse(hi)?)), 3)
        }
        Some(other) => return Err((1, format!("unsupported match type `{other}`"))),
    };
    if let Some((lo, hi)) = range {
        if lo < len || lo > hi {
            return Err((1, format!("length range {lo}-{hi} is inconsistent with {prefix}")));
        }
    }
    let action = match e.word(i) {
        None => Action::Permit,
        Some("accept") => Action::Permit,
        Some("reject") => Action::Deny,
        Some(other) => return Err((i, format!("invalid keyword `{other}`: expected `accept` or `reject`"))),
    };
    i += 1;
    if e.words.len() > i {
        return Err((i, "unexpected token".into()));
    }
    Ok(PrefixEntry {
        seq,
        action,
        prefix,
        length_range: range,
    })
}

#[derive(Debug)]
enum Node {
    Leaf(String),
    Block(String, Vec<Node>),
    Raw(String),
}

fn render(nodes: &[Node], indent: usize, out: &mut Vec<String>) {
    let pad = "  ".repeat(indent);
    for n in nodes {
        match n {
            Node::Leaf(s) => out.push(format!("{pad}{s};")),
            Node::Block(h, children) => {
                out.push(format!("{pad}{h} {{"));
                render(children, indent + 1, out);
                out.push(format!("{pad}}}"));
            }
            Node::Raw(text) => out.extend(text.lines().map(|l| format!("{pad}{l}"))),
        }
    }
}

fn insert_raw(nodes: &mut Vec<Node>, path: &[String], text: &str) {
    let Some((first, rest)) = path.split_first() else {
        nodes.push(Node::Raw(text.to_string()));
        return;
    };
    let idx = nodes
        .iter()
        .position(|n| matches!(n, Node::Block(h, _) if h == first))
        .unwrap_or_else(|| {
            nodes.push(Node::Block(first.clone(), Vec::new()));
            nodes.len() - 1
        });
    if let Node::Block(_, children) = &mut nodes[idx] {
        insert_raw(children, rest, text);
    }
}

fn unrepresentable(element: String, reason: &str) -> ConfigError {
    ConfigError::Unrepresentable {
        vendor: Vendor::Juniper,
        element,
        reason: reason.to_string(),
    }
}

fn is_plain_list(pl: &PrefixList) -> bool {
    pl.entries
        .iter()
        .all(|e| e.action == Action::Permit && e.length_range.is_none())
}

fn members(values: &[Community]) -> String {
    match values {
        [one] => format!("members {one}"),
        many => format!(
            "members [ {} ]",
            many.iter().map(Community::to_string).collect::<Vec<_>>().join(" ")
        ),
    }
}

pub(super) fn print(cfg: &SemanticConfig) -> Result<String, ConfigError> {
    if let Some(ospf) = &cfg.ospf {
        return Err(unrepresentable(
            format!("OSPF process {}", ospf.process_id),
            "OSPF networks and redistribution are only modeled in Cisco syntax",
        ));
    }
    if let Some(cl) = cfg.community_lists.iter().find(|c| c.action == Action::Deny) {
        return Err(unrepresentable(
            format!("community-list {}", cl.name),
            "community definitions cannot deny",
        ));
    }
    let mut root = Vec::new();

    let mut ro = Vec::new();
    if !cfg.static_routes.is_empty() {
        ro.push(Node::Block(
            "static".into(),
            cfg.static_routes
                .iter()
                .map(|r| Node::Leaf(format!("route {} next-hop {}", r.prefix, r.next_hop)))
                .collect(),
        ));
    }
    if let Some(bgp) = &cfg.bgp {
        if let Some(id) = bgp.router_id {
            ro.push(Node::Leaf(format!("router-id {id}")));
        }
        ro.push(Node::Leaf(format!("autonomous-system {}", bgp.asn)));
    }
    if !ro.is_empty() {
        root.push(Node::Block("routing-options".into(), ro));
    }

    if let Some(bgp) = cfg.bgp.as_ref().filter(|b| !b.neighbors.is_empty()) {
        let mut group = Vec::new();
        if bgp.neighbors.iter().all(|n| n.remote_asn != bgp.asn) {
            group.push(Node::Leaf("type external".into()));
        } else if bgp.neighbors.iter().all(|n| n.remote_asn == bgp.asn) {
            group.push(Node::Leaf("type internal".into()));
        }
        for n in &bgp.neighbors {
            let mut body = Vec::new();
            if let Some(d) = &n.description {
                body.push(Node::Leaf(format!("description {}", quote(d))));
            }
            if let Some(p) = &n.import_policy {
                body.push(Node::Leaf(format!("import {p}")));
            }
            if let Some(p) = &n.export_policy {
                body.push(Node::Leaf(format!("export {p}")));
            }
            body.push(Node::Leaf(format!("peer-as {}", n.remote_asn)));
            group.push(Node::Block(format!("neighbor {}", n.peer), body));
        }
        root.push(Node::Block(
            "protocols".into(),
            vec![Node::Block(
                "bgp".into(),
                vec![Node::Block("group peers".into(), group)],
            )],
        ));
    }

    let mut po = Vec::new();
    let plain: HashMap<&str, bool> = cfg
        .prefix_lists
        .iter()
        .map(|p| (p.name.as_str(), is_plain_list(p)))
        .collect();
    for pl in &cfg.prefix_lists {
        if is_plain_list(pl) {
            po.push(Node::Block(
                format!("prefix-list {}", pl.name),
                pl.entries.iter().map(|e| Node::Leaf(e.prefix.to_string())).collect(),
            ));
        } else {
            let entries = pl
                .entries
                .iter()
                .map(|e| {
                    let len = e.prefix.prefix_len();
                    let kind = match e.length_range {
                        None => "exact".to_string(),
                        Some((lo, 32)) if lo == len => "orlonger".to_string(),
                        Some((lo, hi)) if lo == len => format!("upto /{hi}"),
                        Some((lo, hi)) => format!("prefix-length-range /{lo}-/{hi}"),
                    };
                    let action = match e.action {
                        Action::Permit => "accept",
                        Action::Deny => "reject",
                    };
                    Node::Leaf(format!("{} {kind} {action}", e.prefix))
                })
                .collect();
            po.push(Node::Block(format!("route-filter-list {}", pl.name), entries));
        }
    }
    for cl in &cfg.community_lists {
        po.push(Node::Leaf(format!("community {} {}", cl.name, members(&cl.values))));
    }
    let mut policies = Vec::new();
    for rp in &cfg.route_policies {
        let mut terms = Vec::new();
        for c in &rp.clauses {
            let mut body = Vec::new();
            if !c.matches.is_empty() {
                body.push(Node::Block(
                    "from".into(),
                    c.matches
                        .iter()
                        .map(|m| match m {
                            Match::PrefixList(n) if plain.get(n.as_str()) == Some(&false) => {
                                Node::Leaf(format!("route-filter-list {n}"))
                            }
                            Match::PrefixList(n) => Node::Leaf(format!("prefix-list {n}")),
                            Match::CommunityList(n) => Node::Leaf(format!("community {n}")),
                        })
                        .collect(),
                ));
            }
            let mut then = Vec::new();
            for s in &c.sets {
                then.push(Node::Leaf(match s {
                    SetAction::LocalPreference(n) => format!("local-preference {n}"),
                    SetAction::Metric(n) => format!("metric {n}"),
                    SetAction::Community(values) => {
                        let name = format!("{}-{}-set", rp.name, c.seq);
                        if cfg.community_lists.iter().any(|cl| cl.name == name) {
                            return Err(unrepresentable(
                                format!("route-map {} sequence {}", rp.name, c.seq),
                                "generated community name collides with an existing community",
                            ));
                        }
                        po.push(Node::Leaf(format!("community {name} {}", members(values))));
                        format!("community set {name}")
                    }
                }));
            }
            then.push(Node::Leaf(
                match c.action {
                    Action::Permit => "accept",
                    Action::Deny => "reject",
                }
                .into(),
            ));
            body.push(Node::Block("then".into(), then));
            terms.push(Node::Block(format!("term {}", c.seq), body));
        }
        policies.push(Node::Block(format!("policy-statement {}", rp.name), terms));
    }
    po.extend(policies);
    if !po.is_empty() {
        root.push(Node::Block("policy-options".into(), po));
    }

    if !cfg.access_lists.is_empty() {
        let filters = cfg
            .access_lists
            .iter()
            .map(|acl| {
                let terms = acl
                    .entries
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        Node::Block(
                            format!("term {}", i + 1),
                            vec![
                                Node::Block(
                                    "from".into(),
                                    vec![Node::Block(
                                        "source-address".into(),
                                        vec![Node::Leaf(e.source.to_string())],
                                    )],
                                ),
                                Node::Block(
                                    "then".into(),
                                    vec![Node::Leaf(
                                        match e.action {
                                            Action::Permit => "accept",
                                            Action::Deny => "discard",
                                        }
                                        .into(),
                                    )],
                                ),
                            ],
                        )
                    })
                    .collect();
                Node::Block(format!("filter {}", acl.name), terms)
            })
            .collect();
        root.push(Node::Block(
            "firewall".into(),
            vec![Node::Block("family inet".into(), filters)],
        ));
    }

    for o in &cfg.opaque {
        insert_raw(&mut root, &o.path, &o.text);
    }
    let mut out = Vec::new();
    render(&root, 0, &mut out);
    if out.is_empty() {
        Ok(String::new())
    } else {
        Ok(out.join("\n") + "\n")
    }
}

const BLOCK_HEADS: &[(&str, usize)] = &[
    ("routing-options", 1),
    ("static", 1),
    ("protocols", 1),
    ("bgp", 1),
    ("group", 2),
    ("neighbor", 2),
    ("policy-options", 1),
    ("prefix-list", 2),
    ("route-filter-list", 2),
    ("policy-statement", 2),
    ("term", 2),
    ("from", 1),
    ("then", 1),
    ("firewall", 1),
    ("family", 2),
    ("filter", 2),
    ("source-address", 1),
];

const CONTEXTS: &[&str] = &[
    "routing-options { static { @ } }",
    "routing-options { @ }",
    "policy-options { @ }",
    "policy-options { prefix-list x { @ } }",
    "policy-options { route-filter-list x { @ } }",
    "policy-options { policy-statement x { term 1 { from { @ } then { accept; } } } }",
    "policy-options { policy-statement x { term 1 { then { @ } } } }",
    "routing-options { autonomous-system 1; } protocols { bgp { group g { neighbor 192.0.2.1 { peer-as 1; @ } } } }",
    "routing-options { autonomous-system 1; } protocols { bgp { group g { peer-as 1; @ } } }",
    "firewall { family inet { filter x { term 1 { from { source-address { @ } } then { accept; } } } } }",
    "firewall { family inet { filter x { term 1 { from { @ } then { accept; } } } } }",
    "firewall { family inet { filter x { term 1 { then { @ } } } } }",
];

/// Tolerant per-line recognizer used when scoring candidate snippets.
pub(super) fn recognizes_line(line: &str) -> bool {
    let t = line.trim();
    if let Some(head) = t.strip_suffix('{') {
        let ws: Vec<&str> = head.split_whitespace().collect();
        return match ws.first() {
            Some(first) => BLOCK_HEADS
                .iter()
                .any(|(h, n)| h == first && *n == ws.len()),
            None => false,
        };
    }
    if !t.ends_with(';') || t.len() < 2 {
        return false;
    }
    CONTEXTS.iter().any(|ctx| {
        let (cfg, _, issues) = parse_inner(&ctx.replace('@', t), false);
        if !issues.is_empty() || !cfg.opaque.is_empty() {
            return false;
        }
        let (base, _, base_issues) = parse_inner(&ctx.replace('@', ""), false);
        !base_issues.is_empty() || base != cfg
    })
}
